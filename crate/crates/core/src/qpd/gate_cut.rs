//! Gate cuts built from a local unitary decomposition.

use serde::{Deserialize, Serialize};

use super::effective::signed_branch_sum;
use super::{side_map, AncillaPrep, ControlBasis, LocalOp, Locality, Povm, QpdConfig, QpdTerm};
use crate::error::{KnitError, Result};
use crate::gates::pauli_eigenstate;
use crate::liouville::{ComplexMatrix, Superoperator, ONE, ZERO};
use crate::schmidt::{Lud, ResourceState};

fn controls(basis: ControlBasis) -> (ComplexMatrix, ComplexMatrix) {
    match basis {
        ControlBasis::PlusMinus => (
            ComplexMatrix::projector(&pauli_eigenstate('X', 1)),
            ComplexMatrix::projector(&pauli_eigenstate('X', -1)),
        ),
        ControlBasis::Computational => (
            ComplexMatrix::projector(&[ONE, ZERO]),
            ComplexMatrix::projector(&[ZERO, ONE]),
        ),
    }
}

/// `F_i ⊗ P_0 + F_j ⊗ P_1` on `(system, ancilla)`.
fn controlled_pair(fi: &ComplexMatrix, fj: &ComplexMatrix, basis: ControlBasis) -> ComplexMatrix {
    let (p0, p1) = controls(basis);
    &fi.kron(&p0) + &fj.kron(&p1)
}

/// `(−1)^{m_a + m_b}` times `prefactor` for two measured qubits.
fn parity_signs(prefactor: i8) -> Vec<i8> {
    (0..4)
        .map(|m: usize| if (m / 2 + m % 2).is_multiple_of(2) { prefactor } else { -prefactor })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn pair_term(lud: &Lud, i: usize, j: usize, prob: f64, ancilla: AncillaPrep, basis: ControlBasis, prefactor: i8, label: String) -> QpdTerm {
    let (da, db) = lud.source_dim;
    let ua = controlled_pair(&lud.a_factors[i], &lud.a_factors[j], basis);
    let ub = controlled_pair(&lud.b_factors[i], &lud.b_factors[j], basis);
    QpdTerm {
        label,
        prob,
        pre: None,
        ancilla,
        post: LocalOp::Product {
            a: side_map(&ua, [da, 2], [da, 2], true),
            b: side_map(&ub, [db, 2], [db, 2], false),
        },
        povm: Povm::qubit_pair(basis == ControlBasis::Computational),
        signs: parity_signs(prefactor),
    }
}

/// `A_i ⊗ B_i` applied directly, no ancilla.
fn diagonal_term(lud: &Lud, i: usize, prob: f64) -> QpdTerm {
    let (da, db) = lud.source_dim;
    QpdTerm {
        label: format!("({i},{i})"),
        prob,
        pre: None,
        ancilla: AncillaPrep::None,
        post: LocalOp::Product {
            a: side_map(&lud.a_factors[i], [da, 1], [da, 1], true),
            b: side_map(&lud.b_factors[i], [db, 1], [db, 1], false),
        },
        povm: Povm::trivial(),
        signs: vec![1],
    }
}

fn config(lud: &Lud, terms: Vec<QpdTerm>, gamma: f64, resource: ResourceState) -> QpdConfig {
    QpdConfig {
        terms,
        gamma,
        resource,
        locality: Locality::Lo,
        in_dims: lud.source_dim,
        out_dims: lud.source_dim,
    }
}

/// Bell-assisted gate cut with `γ = ||λ||₁²`.
///
/// Term `(i, j)` has probability `λ_i λ_j / ||λ||₁²`, consumes one Bell pair,
/// applies `A_i ⊗ |+⟩⟨+| + A_j ⊗ |−⟩⟨−|` on `(A, a)` and the B analog on
/// `(B, b)`, then reads both ancillas in the computational basis with sign
/// `(−1)^{|m|}`.
pub fn build_bell_gate_cut(lud: &Lud) -> Result<QpdConfig> {
    lud.require_kak()?;
    let n = lud.len();
    let l1sq = lud.l1_sq();
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = lud.lambdas[i] * lud.lambdas[j] / l1sq;
            let anc = AncillaPrep::Resource { state: ResourceState::Bell { d: 2 } };
            terms.push(pair_term(lud, i, j, p, anc, ControlBasis::PlusMinus, 1, format!("({i},{j})")));
        }
    }
    Ok(config(lud, terms, l1sq, ResourceState::Bell { d: 2 }))
}

/// As [`build_bell_gate_cut`], but the `i = j` terms apply `A_i ⊗ B_i`
/// directly and leave the Bell pair unused.
pub fn build_bell_gate_cut_skip_diagonal(lud: &Lud) -> Result<QpdConfig> {
    lud.require_kak()?;
    let n = lud.len();
    let l1sq = lud.l1_sq();
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let p = lud.lambdas[i] * lud.lambdas[j] / l1sq;
            if i == j {
                terms.push(diagonal_term(lud, i, p));
            } else {
                let anc = AncillaPrep::Resource { state: ResourceState::Bell { d: 2 } };
                terms.push(pair_term(lud, i, j, p, anc, ControlBasis::PlusMinus, 1, format!("({i},{j})")));
            }
        }
    }
    Ok(config(lud, terms, l1sq, ResourceState::Bell { d: 2 }))
}

/// The eight product Pauli-eigenstate preparations whose signed sum
/// `Σ σ_k ρ_k / 4` equals `(XX − YY)/4 = (|00⟩⟨11| + |11⟩⟨00|)/2`.
fn separable_preps() -> Vec<(ComplexMatrix, ComplexMatrix, i8, String)> {
    let mut out = Vec::with_capacity(8);
    for (axis, axis_sign) in [('X', 1i8), ('Y', -1i8)] {
        for sa in [1i8, -1] {
            for sb in [1i8, -1] {
                let a = ComplexMatrix::projector(&pauli_eigenstate(axis, sa));
                let b = ComplexMatrix::projector(&pauli_eigenstate(axis, sb));
                let tag = |s: i8| if s > 0 { '+' } else { '-' };
                out.push((a, b, axis_sign * sa * sb, format!("{axis}{}{}", tag(sa), tag(sb))));
            }
        }
    }
    out
}

fn lo_pair_terms(lud: &Lud, i: usize, j: usize, gamma: f64, terms: &mut Vec<QpdTerm>) {
    for (a, b, sigma, tag) in separable_preps() {
        let p = lud.lambdas[i] * lud.lambdas[j] / 4.0 / gamma;
        let anc = AncillaPrep::Local { a, b };
        terms.push(pair_term(lud, i, j, p, anc, ControlBasis::Computational, sigma, format!("({i},{j}) {tag}")));
    }
}

/// Resource-free gate cut with `γ = 2||λ||₁² − ||λ||₂²`.
///
/// Diagonal terms apply `A_i ⊗ B_i`. Each ordered pair `i ≠ j` replaces the
/// entangled ancilla by the signed mixture of eight product Pauli
/// eigenstates (total weight 2 per ordered pair).
pub fn build_lo_gate_cut(lud: &Lud) -> Result<QpdConfig> {
    lud.require_kak()?;
    let n = lud.len();
    let gamma = 2.0 * lud.l1_sq() - lud.l2_sq();
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push(diagonal_term(lud, i, lud.lambdas[i] * lud.lambdas[i] / gamma));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                lo_pair_terms(lud, i, j, gamma, &mut terms);
            }
        }
    }
    Ok(config(lud, terms, gamma, ResourceState::Separable))
}

/// Weight `1/√(1−r²)` of an off-diagonal ψ(r)-assisted branch (∞ at r = 1).
pub fn psi_weight(r: f64) -> f64 {
    1.0 / (1.0 - r * r).sqrt()
}

/// ψ(r)-assisted gate cut with `γ = ||λ||₂² + min{1/√(1−r²), 2}(||λ||₁² − ||λ||₂²)`.
///
/// Off-diagonal pairs use ψ(r) while its weight is below 2 and fall back to
/// the resource-free construction otherwise.
pub fn build_psi_gate_cut(lud: &Lud, r: f64) -> Result<QpdConfig> {
    if !(0.0..=1.0).contains(&r) {
        return Err(KnitError::Validation(format!("r = {r} outside [0, 1]")));
    }
    lud.require_kak()?;
    let n = lud.len();
    let w = psi_weight(r);
    let (l1sq, l2sq) = (lud.l1_sq(), lud.l2_sq());
    let use_resource = w < 2.0;
    let gamma = l2sq + w.min(2.0) * (l1sq - l2sq);
    let mut terms = Vec::new();
    for i in 0..n {
        terms.push(diagonal_term(lud, i, lud.lambdas[i] * lud.lambdas[i] / gamma));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if use_resource {
                let p = lud.lambdas[i] * lud.lambdas[j] * w / gamma;
                let anc = AncillaPrep::Resource { state: ResourceState::Psi { r } };
                terms.push(pair_term(lud, i, j, p, anc, ControlBasis::Computational, 1, format!("({i},{j})")));
            } else {
                lo_pair_terms(lud, i, j, gamma, &mut terms);
            }
        }
    }
    Ok(config(lud, terms, gamma, ResourceState::Psi { r }))
}

/// Bell-pair usage of the Bell-assisted cut when diagonal terms skip the resource.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellAccounting {
    /// Probability that a sampled term consumes a Bell pair, `1 − 1/||λ||₁²`.
    pub p_bell: f64,
    /// Bell pairs per target-accuracy estimate relative to an exact gate,
    /// `p_bell · ||λ||₁⁴`.
    pub expected_bells: f64,
}

pub fn bell_accounting(lud: &Lud) -> Result<BellAccounting> {
    lud.require_kak()?;
    let l1sq = lud.l1_sq();
    let p_bell = 1.0 - 1.0 / l1sq;
    Ok(BellAccounting {
        p_bell,
        expected_bells: p_bell * l1sq * l1sq,
    })
}

/// Signed outcome sum of the `(i, j)` branch when the ancilla pair holds
/// only the classically correlated part `(|00⟩⟨00| + |11⟩⟨11|)/2`.
///
/// With computational-basis controls this is the zero map, which is what
/// lets that part of the entangled ancilla be dropped.
pub fn vanishing_branch_sum(lud: &Lud, i: usize, j: usize, basis: ControlBasis) -> Result<Superoperator> {
    lud.require_kak()?;
    if i >= lud.len() || j >= lud.len() {
        return Err(KnitError::Dimension(format!("pair ({i},{j}) out of range for {} terms", lud.len())));
    }
    let mut total: Option<Superoperator> = None;
    for k in 0..2 {
        let mut e = [ZERO, ZERO];
        e[k] = ONE;
        let p = ComplexMatrix::projector(&e);
        let anc = AncillaPrep::Local { a: p.clone(), b: p };
        let t = pair_term(lud, i, j, 0.5, anc, basis, 1, String::new());
        let s = signed_branch_sum(&t, lud.source_dim, lud.source_dim)?.scaled(0.5);
        total = Some(match total {
            None => s,
            Some(acc) => acc.plus(&s)?,
        });
    }
    Ok(total.expect("two components"))
}
