//! Dense evaluation of QPD terms as outcome-resolved superoperators.

use nalgebra::DVector;

use super::{LocalOp, QpdConfig, QpdTerm};
use crate::error::{KnitError, Result};
use crate::liouville::{
    apply_local_pair, permute_vectorized, tensor, ComplexMatrix, Superoperator, VectorizedOperator, C64, ZERO,
};

/// One branch `x` reduced to its trace-decreasing maps `T_{x,m}`, one per
/// ancilla outcome, each paired with its sign.
#[derive(Clone, Debug)]
pub struct EffectiveTerm {
    pub prob: f64,
    pub outcomes: Vec<(Superoperator, i8)>,
}

/// Executable form of a QPD: `γ Σ_x p_x Σ_m s_x(m) T_{x,m}`.
#[derive(Clone, Debug)]
pub struct EffectiveQpd {
    pub gamma: f64,
    pub in_dims: (usize, usize),
    pub out_dims: (usize, usize),
    pub terms: Vec<EffectiveTerm>,
}

fn apply_op(op: &LocalOp, v: &[C64]) -> DVector<C64> {
    match op {
        LocalOp::Product { a, b } => apply_local_pair(a, b, v),
        LocalOp::OneWayLocc { a_branches, b_branches } => {
            let mut acc = apply_local_pair(&a_branches[0], &b_branches[0], v);
            for (a, b) in a_branches.iter().zip(b_branches).skip(1) {
                acc += apply_local_pair(a, b, v);
            }
            acc
        }
        LocalOp::Global(s) => s.matrix().inner() * DVector::from_column_slice(v),
    }
}

fn permuted(v: DVector<C64>, dims: [usize; 4], perm: [usize; 4]) -> DVector<C64> {
    let op = VectorizedOperator::from_amplitudes(dims.to_vec(), v).expect("dims match by construction");
    permute_vectorized(&op, &perm).amplitudes().clone()
}

/// Pushes every input basis operator through the term and contracts each
/// ancilla effect, giving the outcome maps `T_m` on `(A, B) → (A', B')`.
fn outcome_maps(t: &QpdTerm, in_dims: (usize, usize), out_dims: (usize, usize)) -> Result<Vec<Superoperator>> {
    let (da, db) = in_dims;
    let (oa, ob) = out_dims;
    let (na, nb) = t.ancilla.dims();
    let [sa, sb] = t.post.side_dims()?;
    let (ma, mb) = (sa.3, sb.3);
    let d_in = da * db;
    let d_out = oa * ob;
    let sigma = t.ancilla.density();
    let outcomes = t.povm.outcomes();
    let effects: Vec<ComplexMatrix> = (0..outcomes).map(|m| t.povm.effect(m)).collect();
    let mut cols: Vec<Vec<DVector<C64>>> = vec![Vec::with_capacity(d_in * d_in); outcomes];
    let n_anc = ma * mb;
    for idx in 0..d_in * d_in {
        let mut v = DVector::from_element(d_in * d_in, ZERO);
        v[idx] = C64::new(1.0, 0.0);
        if let Some(pre) = &t.pre {
            v = apply_op(pre, v.as_slice());
        }
        let x = ComplexMatrix::from_row_slice(d_in, d_in, v.as_slice());
        let joint = x.kron(&sigma);
        let v = DVector::from_vec(joint.row_major());
        let v = permuted(v, [da, db, na, nb], [0, 2, 1, 3]);
        let v = apply_op(&t.post, v.as_slice());
        let v = permuted(v, [oa, ma, ob, mb], [0, 2, 1, 3]);
        // ρ on (A' B') ⊗ (a' b'); contract with each effect E: Σ ρ[(i,a),(j,b)] E[b,a]
        let d_full = d_out * n_anc;
        for (m, e) in effects.iter().enumerate() {
            let out = DVector::from_fn(d_out * d_out, |k, _| {
                let (i, j) = (k / d_out, k % d_out);
                let mut s = ZERO;
                for a in 0..n_anc {
                    for b in 0..n_anc {
                        let eb = e[(b, a)];
                        if eb != ZERO {
                            s += v[(i * n_anc + a) * d_full + j * n_anc + b] * eb;
                        }
                    }
                }
                s
            });
            cols[m].push(out);
        }
    }
    cols.into_iter()
        .map(|c| {
            let m = nalgebra::DMatrix::from_columns(&c);
            Superoperator::from_matrix(vec![da, db], vec![oa, ob], ComplexMatrix::new(m))
        })
        .collect()
}

/// `Σ_m s(m) T_m` for a single term (without its probability).
pub(crate) fn signed_branch_sum(t: &QpdTerm, in_dims: (usize, usize), out_dims: (usize, usize)) -> Result<Superoperator> {
    let maps = outcome_maps(t, in_dims, out_dims)?;
    let mut acc = maps[0].zeros_like();
    for (m, s) in maps.iter().zip(&t.signs) {
        acc = acc.plus(&m.scaled(*s as f64))?;
    }
    Ok(acc)
}

impl EffectiveQpd {
    pub fn from_config(config: &QpdConfig) -> Result<Self> {
        config.validate()?;
        let mut terms = Vec::with_capacity(config.terms.len());
        for t in &config.terms {
            let maps = outcome_maps(t, config.in_dims, config.out_dims)?;
            terms.push(EffectiveTerm {
                prob: t.prob,
                outcomes: maps.into_iter().zip(t.signs.iter().copied()).collect(),
            });
        }
        Ok(Self {
            gamma: config.gamma,
            in_dims: config.in_dims,
            out_dims: config.out_dims,
            terms,
        })
    }

    /// `γ Σ_x p_x Σ_m s_x(m) T_{x,m}`.
    pub fn reconstruct(&self) -> Superoperator {
        let (da, db) = self.in_dims;
        let (oa, ob) = self.out_dims;
        let (di, d_o) = (da * db, oa * ob);
        let mut acc = ComplexMatrix::zeros(d_o * d_o, di * di).into_inner();
        for t in &self.terms {
            for (m, s) in &t.outcomes {
                acc += m.matrix().inner() * C64::new(self.gamma * t.prob * *s as f64, 0.0);
            }
        }
        Superoperator::from_matrix(vec![da, db], vec![oa, ob], ComplexMatrix::new(acc)).expect("shape fixed")
    }

    /// `1/γ = Σ_x p_x Σ_m s_x(m) Tr T_{x,m}(I/d_in)`, valid for trace-preserving targets.
    pub fn trace_gamma(&self) -> f64 {
        let (da, db) = self.in_dims;
        let (oa, ob) = self.out_dims;
        let (di, d_o) = (da * db, oa * ob);
        let mut inv = 0.0;
        for t in &self.terms {
            for (m, s) in &t.outcomes {
                let mut tr = ZERO;
                for i in 0..d_o {
                    for k in 0..di {
                        tr += m.matrix()[(i * d_o + i, k * di + k)];
                    }
                }
                inv += t.prob * *s as f64 * tr.re / di as f64;
            }
        }
        1.0 / inv
    }

    /// Runs `self` then `next` on its output. Terms, outcomes and signs
    /// combine as products and `γ` multiplies.
    pub fn then(&self, next: &EffectiveQpd) -> Result<EffectiveQpd> {
        if self.out_dims.0 * self.out_dims.1 != next.in_dims.0 * next.in_dims.1 {
            return Err(KnitError::Dimension(format!(
                "cannot feed output {:?} into input {:?}",
                self.out_dims, next.in_dims
            )));
        }
        let mut terms = Vec::with_capacity(self.terms.len() * next.terms.len());
        for t1 in &self.terms {
            for t2 in &next.terms {
                let mut outcomes = Vec::with_capacity(t1.outcomes.len() * t2.outcomes.len());
                for (m1, s1) in &t1.outcomes {
                    for (m2, s2) in &t2.outcomes {
                        let joint = Superoperator::from_matrix(
                            vec![self.in_dims.0, self.in_dims.1],
                            vec![next.out_dims.0, next.out_dims.1],
                            ComplexMatrix::new(m2.matrix().inner() * m1.matrix().inner()),
                        )?;
                        outcomes.push((joint, s1 * s2));
                    }
                }
                terms.push(EffectiveTerm {
                    prob: t1.prob * t2.prob,
                    outcomes,
                });
            }
        }
        Ok(EffectiveQpd {
            gamma: self.gamma * next.gamma,
            in_dims: self.in_dims,
            out_dims: next.out_dims,
            terms,
        })
    }

    /// Appends an idle factor of dimension `d` to the B side.
    pub fn with_idle_b(&self, d: usize) -> EffectiveQpd {
        let id = Superoperator::identity(vec![d]);
        let terms = self
            .terms
            .iter()
            .map(|t| EffectiveTerm {
                prob: t.prob,
                outcomes: t
                    .outcomes
                    .iter()
                    .map(|(m, s)| {
                        let joint = tensor(m, &id)
                            .reshaped(
                                vec![self.in_dims.0, self.in_dims.1 * d],
                                vec![self.out_dims.0, self.out_dims.1 * d],
                            )
                            .expect("same total dims");
                        (joint, *s)
                    })
                    .collect(),
            })
            .collect();
        EffectiveQpd {
            gamma: self.gamma,
            in_dims: (self.in_dims.0, self.in_dims.1 * d),
            out_dims: (self.out_dims.0, self.out_dims.1 * d),
            terms,
        }
    }
}

/// Dense reconstruction `γ Σ_x p_x Σ_m s_x(m) ⟨⟨M_{m|x}| G̃_x ∘ r̃ ∘ F̃_x`.
pub fn reconstruct_superop(config: &QpdConfig) -> Result<Superoperator> {
    Ok(EffectiveQpd::from_config(config)?.reconstruct())
}

/// Recomputes `γ` from the trace formula and checks it against the stored value.
pub fn config_gamma(config: &QpdConfig) -> Result<f64> {
    let g = EffectiveQpd::from_config(config)?.trace_gamma();
    if !g.is_finite() || (g - config.gamma).abs() > 1e-8 * config.gamma.max(1.0) {
        return Err(KnitError::Consistency(format!(
            "trace formula gives gamma = {g}, config stores {}",
            config.gamma
        )));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::liouville::unitary_superop;
    use crate::qpd::{build_bell_gate_cut, build_wire_cut, AncillaPrep, Locality, Povm};
    use crate::schmidt::{operator_schmidt, ResourceState};

    #[test]
    fn single_term_product_gate() {
        let u = gates::hadamard().kron(&gates::pauli_y());
        let l = operator_schmidt(&u, (2, 2)).unwrap();
        let c = build_bell_gate_cut(&l).unwrap();
        let r = reconstruct_superop(&c).unwrap();
        assert!(r.distance(&unitary_superop(&u).unwrap()) < 1e-12);
    }

    #[test]
    fn all_positive_config_has_unit_gamma() {
        let id = crate::qpd::side_map(&ComplexMatrix::identity(2), [2, 1], [2, 1], true);
        let idb = crate::qpd::side_map(&ComplexMatrix::identity(2), [2, 1], [2, 1], false);
        let c = QpdConfig {
            terms: vec![QpdTerm {
                label: "id".into(),
                prob: 1.0,
                pre: None,
                ancilla: AncillaPrep::None,
                post: LocalOp::Product { a: id, b: idb },
                povm: Povm::trivial(),
                signs: vec![1],
            }],
            gamma: 1.0,
            resource: ResourceState::Separable,
            locality: Locality::Lo,
            in_dims: (2, 2),
            out_dims: (2, 2),
        };
        assert!((config_gamma(&c).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_mismatch_is_consistency_error() {
        let l = operator_schmidt(&gates::cnot(), (2, 2)).unwrap();
        let mut c = build_bell_gate_cut(&l).unwrap();
        c.gamma = 2.5;
        assert!(matches!(config_gamma(&c), Err(KnitError::Consistency(_))));
    }

    #[test]
    fn gate_then_wire_multiplies_gamma() {
        let l = operator_schmidt(&gates::cnot(), (2, 2)).unwrap();
        let gate = EffectiveQpd::from_config(&build_bell_gate_cut(&l).unwrap()).unwrap();
        let wire = build_wire_cut(&ResourceState::Separable, 2).unwrap().config.unwrap();
        let wire = EffectiveQpd::from_config(&wire).unwrap().with_idle_b(2);
        let joint = gate.then(&wire).unwrap();
        assert!((joint.gamma - 6.0).abs() < 1e-12);
        assert!((joint.trace_gamma() - 6.0).abs() < 1e-9);
        assert_eq!(joint.out_dims, (1, 4));
        let target = unitary_superop(&gates::cnot()).unwrap();
        assert!((joint.reconstruct().matrix() - target.matrix()).frobenius_norm() < 1e-10);
    }
}
