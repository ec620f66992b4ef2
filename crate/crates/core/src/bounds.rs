//! Closed-form overhead bounds for gate and wire cuts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gates;
use crate::qpd::{bell_accounting, psi_weight};
use crate::schmidt::{fully_entangled_fraction, operator_schmidt, Lud, ResourceState};

/// Lower and upper overhead bounds for one gate and resource.
///
/// Fields that do not apply are `None` and carry an entry in `reasons`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub resource: ResourceState,
    pub lower_schmidt: f64,
    pub lower_entropy: Option<f64>,
    pub upper_bell: Option<f64>,
    pub upper_free: Option<f64>,
    pub free_optimal_kak: Option<f64>,
    pub upper_psi_r: Option<f64>,
    pub regularized: Option<f64>,
    pub reasons: BTreeMap<String, String>,
}

impl BoundSet {
    /// Pairs `(lower, upper)` from the ladder that are out of order.
    pub fn ordering_violations(&self, tol: f64) -> Vec<(&'static str, &'static str)> {
        let mut out = Vec::new();
        let lowers = [("lower_schmidt", Some(self.lower_schmidt)), ("lower_entropy", self.lower_entropy)];
        if let Some(ub) = self.upper_bell {
            for (name, v) in lowers {
                if v.is_some_and(|v| v > ub + tol) {
                    out.push((name, "upper_bell"));
                }
            }
            if self.upper_free.is_some_and(|uf| ub > uf + tol) {
                out.push(("upper_bell", "upper_free"));
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Schmidt coefficients of the gate's normalized Choi state.
fn choi_coefficients(lud: &Lud) -> Vec<f64> {
    if lud.kak_like {
        lud.lambdas.clone()
    } else {
        let (da, db) = lud.source_dim;
        let s = ((da * db) as f64).sqrt();
        lud.lambdas.iter().map(|l| l / s).collect()
    }
}

fn entropy_bits(c: &[f64]) -> f64 {
    c.iter()
        .map(|x| x * x)
        .filter(|p| *p > 1e-300)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Robustness-of-Schmidt-rank bound `(Σc)² − 2c₁Σ_{i>1}c_i`.
pub fn lower_schmidt(lud: &Lud) -> f64 {
    let c = choi_coefficients(lud);
    let total: f64 = c.iter().sum();
    let first = c.first().copied().unwrap_or(0.0);
    total * total - 2.0 * first * (total - first)
}

/// All bounds for `lud` given `resource` (separable when `None`).
///
/// `r` adds the ψ(r) upper bound; a ψ resource supplies its own `r` if none
/// is given.
pub fn bound_set(lud: &Lud, resource: Option<&ResourceState>, r: Option<f64>) -> Result<BoundSet> {
    let resource = resource.cloned().unwrap_or(ResourceState::Separable);
    resource.validate()?;
    let mut reasons = BTreeMap::new();
    let c = choi_coefficients(lud);
    let e_gate = entropy_bits(&c);
    let e_res = resource.entropy();
    let lower_entropy = if e_gate + 1e-12 >= e_res {
        Some(2f64.powf((e_gate - e_res).max(0.0)))
    } else {
        reasons.insert(
            "lower_entropy".into(),
            format!("resource entropy {e_res:.8} exceeds the gate's Choi-state entropy {e_gate:.8}"),
        );
        None
    };
    let r = r.or(match resource {
        ResourceState::Psi { r } => Some(r),
        _ => None,
    });
    if let Some(r) = r {
        if !(0.0..=1.0).contains(&r) {
            return Err(crate::KnitError::Validation(format!("r = {r} outside [0, 1]")));
        }
    }
    let (upper_bell, upper_free, free_optimal_kak, upper_psi_r, regularized) = if lud.kak_like {
        let (l1sq, l2sq) = (lud.l1_sq(), lud.l2_sq());
        let psi = r.map(|r| l2sq + psi_weight(r).min(2.0) * (l1sq - l2sq));
        if psi.is_none() {
            reasons.insert("upper_psi_r".into(), "no r supplied".into());
        }
        (Some(l1sq), Some(2.0 * l1sq - l2sq), Some(2.0 * l1sq - 1.0), psi, Some(l1sq))
    } else {
        let why = "gate has no unitary Schmidt factors (kak_like = false)".to_string();
        for k in ["upper_bell", "upper_free", "free_optimal_kak", "upper_psi_r", "regularized"] {
            reasons.insert(k.into(), why.clone());
        }
        (None, None, None, None, None)
    };
    Ok(BoundSet {
        resource,
        lower_schmidt: lower_schmidt(lud),
        lower_entropy,
        upper_bell,
        upper_free,
        free_optimal_kak,
        upper_psi_r,
        regularized,
        reasons,
    })
}

/// Wire-cut overhead `2/F_d − 1`.
pub fn wire_overhead(resource: &ResourceState, d: usize) -> Result<f64> {
    Ok(2.0 / fully_entangled_fraction(resource, d)? - 1.0)
}

/// `2/F_{d_U} − 1` with `d_U` the Schmidt rank of the gate.
///
/// Conditional: the formula is exact only for the gate class whose cut can
/// be built from its Choi state. Membership is not checked here.
pub fn special_unitary_overhead(lud: &Lud, resource: &ResourceState) -> Result<f64> {
    wire_overhead_rank(resource, lud.rank())
}

fn wire_overhead_rank(resource: &ResourceState, d: usize) -> Result<f64> {
    if d <= 1 {
        return Ok(1.0);
    }
    wire_overhead(resource, d)
}

/// Overheads and Bell usage of `diag(1, 1, 1, e^{iθ})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CphaseTradeoff {
    pub theta: f64,
    pub gamma_free: f64,
    pub gamma_bell: f64,
    pub p_bell: f64,
    /// `p_bell · ||λ||₁⁴` from the decomposition of the gate itself.
    pub expected_bells_svd: f64,
    /// `|sin θ| + sin²θ`, which reads θ as the half-angle of the gate above.
    pub expected_bells_closed_form: f64,
}

pub fn cphase_tradeoff(theta: f64) -> Result<CphaseTradeoff> {
    let lud = operator_schmidt(&gates::cphase(theta), (2, 2))?;
    let acc = bell_accounting(&lud)?;
    let l1sq = lud.l1_sq();
    let s = theta.sin().abs();
    Ok(CphaseTradeoff {
        theta,
        gamma_free: 2.0 * l1sq - 1.0,
        gamma_bell: l1sq,
        p_bell: acc.p_bell,
        expected_bells_svd: acc.expected_bells,
        expected_bells_closed_form: s + s * s,
    })
}

/// θ in `[0, π/2]` where `|sin θ| + sin²θ = 1`.
pub fn break_even_closed_form() -> f64 {
    ((5f64.sqrt() - 1.0) / 2.0).asin()
}

/// θ in `[0, π]` where the decomposition-derived Bell usage equals 1, that is
/// `||λ||₁² = (1 + √5)/2` with `||λ||₁² = 1 + |sin(θ/2)|`.
pub fn break_even_svd() -> f64 {
    2.0 * ((5f64.sqrt() - 1.0) / 2.0).asin()
}
