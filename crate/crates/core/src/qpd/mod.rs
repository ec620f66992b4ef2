//! Quasi-probability decompositions (QPDs) of bipartite gates and wires.
//!
//! A configuration is a list of terms. Each term prepares an ancilla pair
//! `(a, b)` next to the system `(A, B)`, applies party-local operations on
//! `(A, a)` and `(B, b)`, measures the ancillas, and attaches a sign to every
//! outcome. The target map is `γ Σ_x p_x Σ_m s_x(m) T_{x,m}`.

mod effective;
mod gate_cut;
mod wire_cut;

pub use effective::{config_gamma, reconstruct_superop, EffectiveQpd, EffectiveTerm};
pub use gate_cut::{
    bell_accounting, build_bell_gate_cut, build_bell_gate_cut_skip_diagonal, build_lo_gate_cut,
    build_psi_gate_cut, psi_weight, vanishing_branch_sum, BellAccounting,
};
pub use wire_cut::{build_wire_cut, WireCut};

use serde::{Deserialize, Serialize};

use crate::error::{KnitError, Result};
use crate::liouville::{ComplexMatrix, Party, Superoperator, DEFAULT_TOL};
use crate::schmidt::ResourceState;

/// Whether terms need classical communication between the parties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Locality {
    Lo,
    Locc,
}

impl std::fmt::Display for Locality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Locality::Lo => "LO",
            Locality::Locc => "LOCC",
        })
    }
}

/// Control convention of the ancilla-controlled local unitaries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlBasis {
    /// Controls on `|+⟩⟨+|, |−⟩⟨−|`; ancillas read out in the computational basis.
    PlusMinus,
    /// Controls on `|0⟩⟨0|, |1⟩⟨1|`; ancillas read out in the `X` basis.
    Computational,
}

/// A local operation on the two sides of the cut.
///
/// A-side maps act on `(A, a)` and B-side maps on `(B, b)`; a pre-operation
/// has no ancilla factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalOp {
    Product { a: Superoperator, b: Superoperator },
    /// A acts with branch `k` and sends `k` to B, which applies its branch `k`.
    OneWayLocc {
        a_branches: Vec<Superoperator>,
        b_branches: Vec<Superoperator>,
    },
    /// An unstructured joint map. Factors are ordered A side first, then B
    /// side, each side holding half of the factors.
    Global(Superoperator),
}

impl LocalOp {
    fn a_side(&self) -> Option<&Superoperator> {
        match self {
            LocalOp::Product { a, .. } => Some(a),
            LocalOp::OneWayLocc { a_branches, .. } => a_branches.first(),
            LocalOp::Global(_) => None,
        }
    }

    fn b_side(&self) -> Option<&Superoperator> {
        match self {
            LocalOp::Product { b, .. } => Some(b),
            LocalOp::OneWayLocc { b_branches, .. } => b_branches.first(),
            LocalOp::Global(_) => None,
        }
    }

    /// `((A_in, anc_in), (A_out, anc_out))` per side for two-factor sides,
    /// or the single factor with ancilla 1.
    fn side_dims(&self) -> Result<[(usize, usize, usize, usize); 2]> {
        let split = |s: &Superoperator| -> Result<(usize, usize, usize, usize)> {
            match (s.in_dims(), s.out_dims()) {
                ([x], [y]) => Ok((*x, 1, *y, 1)),
                ([x, a], [y, b]) => Ok((*x, *a, *y, *b)),
                (i, o) => Err(KnitError::Configuration(format!("side map with dims {i:?} -> {o:?}"))),
            }
        };
        match self {
            LocalOp::Global(s) => {
                let n = s.in_dims().len();
                if n % 2 != 0 || s.out_dims().len() != n {
                    return Err(KnitError::Configuration("global op must have an even number of factors".into()));
                }
                let h = n / 2;
                let pick = |d: &[usize], lo: usize| -> (usize, usize) {
                    if h == 1 {
                        (d[lo], 1)
                    } else {
                        (d[lo], d[lo + 1..lo + h].iter().product())
                    }
                };
                let (ai, aa) = pick(s.in_dims(), 0);
                let (ao, ab) = pick(s.out_dims(), 0);
                let (bi, ba) = pick(s.in_dims(), h);
                let (bo, bb) = pick(s.out_dims(), h);
                Ok([(ai, aa, ao, ab), (bi, ba, bo, bb)])
            }
            _ => Ok([
                split(self.a_side().ok_or_else(|| KnitError::Configuration("empty branch list".into()))?)?,
                split(self.b_side().ok_or_else(|| KnitError::Configuration("empty branch list".into()))?)?,
            ]),
        }
    }

    fn validate(&self) -> Result<()> {
        let check = |s: &Superoperator| {
            if s.is_consistent() {
                Ok(())
            } else {
                Err(KnitError::Configuration("superoperator matrix inconsistent with its dims".into()))
            }
        };
        match self {
            LocalOp::Product { a, b } => {
                check(a)?;
                check(b)?;
            }
            LocalOp::OneWayLocc { a_branches, b_branches } => {
                if a_branches.is_empty() || a_branches.len() != b_branches.len() {
                    return Err(KnitError::Configuration("LOCC branch lists must be non-empty and equal in length".into()));
                }
                for s in a_branches.iter().chain(b_branches) {
                    check(s)?;
                }
                let (a0, b0) = (&a_branches[0], &b_branches[0]);
                let same = |x: &Superoperator, y: &Superoperator| x.in_dims() == y.in_dims() && x.out_dims() == y.out_dims();
                if !a_branches.iter().all(|s| same(s, a0)) || !b_branches.iter().all(|s| same(s, b0)) {
                    return Err(KnitError::Configuration("LOCC branches differ in shape".into()));
                }
            }
            LocalOp::Global(s) => check(s)?,
        }
        self.side_dims().map(|_| ())
    }
}

/// Ancilla state inserted before the post-operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AncillaPrep {
    None,
    /// The shared entangled resource, split as `(a, b)`.
    Resource { state: ResourceState },
    /// Independent local preparations on `a` and `b`.
    Local { a: ComplexMatrix, b: ComplexMatrix },
}

impl AncillaPrep {
    pub fn dims(&self) -> (usize, usize) {
        match self {
            AncillaPrep::None => (1, 1),
            AncillaPrep::Resource { state } => {
                let (_, d) = state.state_vector();
                (d, d)
            }
            AncillaPrep::Local { a, b } => (a.nrows(), b.nrows()),
        }
    }

    /// Joint ancilla density matrix on `a ⊗ b`.
    pub fn density(&self) -> ComplexMatrix {
        match self {
            AncillaPrep::None => ComplexMatrix::identity(1),
            AncillaPrep::Resource { state } => state.density().to_matrix(),
            AncillaPrep::Local { a, b } => a.kron(b),
        }
    }

    pub fn uses_resource(&self) -> bool {
        matches!(self, AncillaPrep::Resource { .. })
    }
}

/// Party-local ancilla measurement; outcome `m = (m_a, m_b)` is indexed
/// `m_a · |b_effects| + m_b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Povm {
    pub a_effects: Vec<ComplexMatrix>,
    pub b_effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Single trivial outcome on one-dimensional ancillas.
    pub fn trivial() -> Self {
        Self {
            a_effects: vec![ComplexMatrix::identity(1)],
            b_effects: vec![ComplexMatrix::identity(1)],
        }
    }

    /// Projective measurement of both ancilla qubits in the eigenbasis of
    /// `Z` (computational) or `X`.
    pub fn qubit_pair(x_basis: bool) -> Self {
        let axis = if x_basis { 'X' } else { 'Z' };
        let effects: Vec<ComplexMatrix> = [1i8, -1]
            .iter()
            .map(|&s| ComplexMatrix::projector(&crate::gates::pauli_eigenstate(axis, s)))
            .collect();
        Self {
            a_effects: effects.clone(),
            b_effects: effects,
        }
    }

    pub fn outcomes(&self) -> usize {
        self.a_effects.len() * self.b_effects.len()
    }

    pub fn effect(&self, m: usize) -> ComplexMatrix {
        let nb = self.b_effects.len();
        self.a_effects[m / nb].kron(&self.b_effects[m % nb])
    }

    fn validate(&self, da: usize, db: usize) -> Result<()> {
        for (effects, d, side) in [(&self.a_effects, da, "a"), (&self.b_effects, db, "b")] {
            if effects.is_empty() {
                return Err(KnitError::Configuration(format!("no effects on ancilla {side}")));
            }
            let mut sum = ComplexMatrix::zeros(d, d);
            for e in effects {
                if e.nrows() != d || !e.is_square() {
                    return Err(KnitError::Dimension(format!("effect on ancilla {side} is not {d}x{d}")));
                }
                if !e.is_hermitian(DEFAULT_TOL) || e.hermitian_eigen().0.first().is_some_and(|&v| v < -DEFAULT_TOL) {
                    return Err(KnitError::Validation(format!("effect on ancilla {side} is not PSD")));
                }
                sum = &sum + e;
            }
            if sum.distance(&ComplexMatrix::identity(d)) > DEFAULT_TOL {
                return Err(KnitError::Validation(format!("effects on ancilla {side} do not sum to identity")));
            }
        }
        Ok(())
    }
}

/// One branch `x` of a QPD.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpdTerm {
    pub label: String,
    pub prob: f64,
    /// Applied to `(A, B)` before the ancillas are attached; `None` is the identity.
    #[serde(default)]
    pub pre: Option<LocalOp>,
    pub ancilla: AncillaPrep,
    pub post: LocalOp,
    pub povm: Povm,
    /// `s_x(m)` for every ancilla outcome.
    pub signs: Vec<i8>,
}

/// A complete QPD of a bipartite map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpdConfig {
    pub terms: Vec<QpdTerm>,
    pub gamma: f64,
    /// Entangled resource consumed by the terms that use one.
    pub resource: ResourceState,
    pub locality: Locality,
    /// `(d_A, d_B)` of the input.
    pub in_dims: (usize, usize),
    /// `(d_A, d_B)` of the output.
    pub out_dims: (usize, usize),
}

impl QpdConfig {
    /// Structural checks: probabilities, γ, signs, POVMs and dimensions.
    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(KnitError::Configuration("config has no terms".into()));
        }
        if !self.gamma.is_finite() || self.gamma < 1.0 - 1e-12 {
            return Err(KnitError::Validation(format!("gamma {} < 1", self.gamma)));
        }
        let mut total = 0.0;
        for (x, t) in self.terms.iter().enumerate() {
            if !t.prob.is_finite() || t.prob < 0.0 {
                return Err(KnitError::Validation(format!("term {x}: probability {}", t.prob)));
            }
            total += t.prob;
            self.validate_term(t).map_err(|e| match e {
                KnitError::Dimension(m) => KnitError::Dimension(format!("term {x}: {m}")),
                KnitError::Validation(m) => KnitError::Validation(format!("term {x}: {m}")),
                KnitError::Configuration(m) => KnitError::Configuration(format!("term {x}: {m}")),
                other => other,
            })?;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(KnitError::Validation(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    fn validate_term(&self, t: &QpdTerm) -> Result<()> {
        let (da_in, db_in) = self.in_dims;
        if let Some(pre) = &t.pre {
            pre.validate()?;
            let [a, b] = pre.side_dims()?;
            if (a.0, a.1, a.2, a.3) != (da_in, 1, da_in, 1) || (b.0, b.1, b.2, b.3) != (db_in, 1, db_in, 1) {
                return Err(KnitError::Dimension("pre-operation must map (A, B) to itself".into()));
            }
        }
        if let AncillaPrep::Local { a, b } = &t.ancilla {
            for s in [a, b] {
                let v = crate::liouville::vectorize(s)?;
                if !v.is_density(DEFAULT_TOL) {
                    return Err(KnitError::Validation("local ancilla preparation is not a density matrix".into()));
                }
            }
        }
        if let AncillaPrep::Resource { state } = &t.ancilla {
            state.validate()?;
        }
        t.post.validate()?;
        let (anc_a, anc_b) = t.ancilla.dims();
        let [a, b] = t.post.side_dims()?;
        if (a.0, a.1) != (da_in, anc_a) || (b.0, b.1) != (db_in, anc_b) {
            return Err(KnitError::Dimension(format!(
                "post-operation expects ({}, {}) | ({}, {}), pipeline provides ({da_in}, {anc_a}) | ({db_in}, {anc_b})",
                a.0, a.1, b.0, b.1
            )));
        }
        if (a.2, b.2) != self.out_dims {
            return Err(KnitError::Dimension("post-operation output does not match out_dims".into()));
        }
        t.povm.validate(a.3, b.3)?;
        if t.signs.len() != t.povm.outcomes() {
            return Err(KnitError::Configuration(format!(
                "{} signs for {} outcomes",
                t.signs.len(),
                t.povm.outcomes()
            )));
        }
        if t.signs.iter().any(|s| *s != 1 && *s != -1) {
            return Err(KnitError::Validation("signs must be +1 or -1".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a configuration document.
    pub fn from_json(s: &str) -> Result<Self> {
        let c: QpdConfig = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// Probability of drawing a term that consumes the resource.
    pub fn resource_probability(&self) -> f64 {
        self.terms.iter().filter(|t| t.ancilla.uses_resource()).map(|t| t.prob).sum()
    }
}

/// Labels for a two-factor side map.
pub(crate) fn side_labels(a_side: bool) -> Vec<Party> {
    if a_side {
        vec![Party::A, Party::AncillaA]
    } else {
        vec![Party::B, Party::AncillaB]
    }
}

/// Conjugation by `k` as a superoperator on `[d_sys, d_anc]`, labeled for one side.
pub(crate) fn side_map(k: &ComplexMatrix, in_dims: [usize; 2], out_dims: [usize; 2], a_side: bool) -> Superoperator {
    crate::liouville::kraus_superop(std::slice::from_ref(k))
        .and_then(|s| s.reshaped(in_dims.to_vec(), out_dims.to_vec()))
        .and_then(|s| s.with_partition(side_labels(a_side)))
        .expect("shape fixed by caller")
}
