//! Monte Carlo execution of QPDs, shot planning and the locality audit.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{KnitError, Result};
use crate::exec::{map_indexed, Execution};
use crate::liouville::{apply, ComplexMatrix, Superoperator, VectorizedOperator, C64, DEFAULT_TOL};
use crate::qpd::{EffectiveQpd, LocalOp, Locality, QpdConfig};
use crate::random::stream_rng;

/// Shots drawn from one random stream.
pub const BATCH: usize = 8192;

/// Hermitian observable with a declared bound on its spectral norm.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Observable {
    matrix: ComplexMatrix,
    bound: f64,
}

impl Observable {
    /// Uses the spectral norm as the bound.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let bound = Self::check(&matrix)?;
        Ok(Self { matrix, bound })
    }

    pub fn with_bound(matrix: ComplexMatrix, bound: f64) -> Result<Self> {
        let norm = Self::check(&matrix)?;
        if !bound.is_finite() || bound < norm - DEFAULT_TOL {
            return Err(KnitError::Validation(format!("bound {bound} below spectral norm {norm}")));
        }
        Ok(Self { matrix, bound })
    }

    /// Tensor product of Pauli labels, e.g. `"ZZ"`.
    pub fn pauli(label: &str) -> Result<Self> {
        let m = crate::gates::pauli_string(label)
            .ok_or_else(|| KnitError::Configuration(format!("'{label}' is not a Pauli string")))?;
        Self::new(m)
    }

    fn check(m: &ComplexMatrix) -> Result<f64> {
        if !m.is_square() || !m.is_finite() {
            return Err(KnitError::Dimension("observable must be a finite square matrix".into()));
        }
        if !m.is_hermitian(DEFAULT_TOL) {
            return Err(KnitError::Validation("observable is not Hermitian".into()));
        }
        Ok(m.spectral_norm())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }
}

/// Number of shots for an additive accuracy `epsilon` with failure
/// probability `delta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotPlan {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub shots: u64,
}

impl ShotPlan {
    /// A plan with an explicit shot count and no accuracy target.
    pub fn fixed(shots: u64) -> Self {
        Self {
            epsilon: None,
            delta: None,
            shots,
        }
    }
}

/// Hoeffding count `⌈2 γ² b² ln(2/δ) / ε²⌉` (at least 1) for a
/// unit-bounded observable.
pub fn shots_for(gamma: f64, epsilon: f64, delta: f64) -> Result<ShotPlan> {
    shots_for_bound(gamma, epsilon, delta, 1.0)
}

/// As [`shots_for`] for an observable bounded by `bound`.
pub fn shots_for_bound(gamma: f64, epsilon: f64, delta: f64, bound: f64) -> Result<ShotPlan> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(KnitError::Validation(format!("epsilon = {epsilon} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(KnitError::Validation(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !gamma.is_finite() || gamma < 1.0 || !bound.is_finite() || bound <= 0.0 {
        return Err(KnitError::Validation("gamma must be >= 1 and bound positive".into()));
    }
    let n = 2.0 * gamma * gamma * bound * bound * (2.0 / delta).ln() / (epsilon * epsilon);
    Ok(ShotPlan {
        epsilon: Some(epsilon),
        delta: Some(delta),
        shots: (n.ceil() as u64).max(1),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Sample the ancilla outcome and an eigenvalue of the observable.
    #[default]
    Shot,
    /// Use the exact signed expectation of each sampled term.
    BranchAnalytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub std_error: f64,
    /// Unbiased sample variance of the per-shot values.
    pub variance: f64,
    pub shots: u64,
    pub gamma: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Shots per term index.
    pub branch_counts: BTreeMap<usize, u64>,
}

/// `Tr[O · S(ρ)]`.
pub fn exact_expectation(s: &Superoperator, rho: &VectorizedOperator, o: &Observable) -> Result<f64> {
    let out = apply(s, rho)?;
    expectation_of(&out.to_matrix(), o)
}

/// `Tr[O · R(ρ)]` for the map reconstructed from `config`.
pub fn exact_expectation_config(config: &QpdConfig, rho: &VectorizedOperator, o: &Observable) -> Result<f64> {
    exact_expectation(&crate::qpd::reconstruct_superop(config)?, rho, o)
}

fn expectation_of(x: &ComplexMatrix, o: &Observable) -> Result<f64> {
    if x.nrows() != o.matrix.nrows() {
        return Err(KnitError::Dimension(format!(
            "observable on dimension {} vs state on {}",
            o.matrix.nrows(),
            x.nrows()
        )));
    }
    Ok((o.matrix.inner() * x.inner()).trace().re)
}

/// Per-term sampling tables for a fixed `(ρ, O)`.
struct Prepared {
    gamma: f64,
    term_dist: WeightedIndex<f64>,
    outcome_dists: Vec<Option<WeightedIndex<f64>>>,
    outcome_values: Vec<Vec<f64>>,
    analytic: Vec<f64>,
}

impl Prepared {
    fn new(eff: &EffectiveQpd, rho: &VectorizedOperator, o: &Observable) -> Result<Self> {
        let d_in = eff.in_dims.0 * eff.in_dims.1;
        let d_out = eff.out_dims.0 * eff.out_dims.1;
        if rho.dim() != d_in {
            return Err(KnitError::Dimension(format!("state on {} vs map input {d_in}", rho.dim())));
        }
        if o.matrix.nrows() != d_out {
            return Err(KnitError::Dimension(format!("observable on {} vs map output {d_out}", o.matrix.nrows())));
        }
        let (evals, evecs) = o.matrix.hermitian_eigen();
        let evecs: &DMatrix<C64> = evecs.inner();
        let probs: Vec<f64> = eff.terms.iter().map(|t| t.prob).collect();
        let term_dist = WeightedIndex::new(&probs)
            .map_err(|e| KnitError::Validation(format!("term probabilities: {e}")))?;
        let mut outcome_dists = Vec::with_capacity(eff.terms.len());
        let mut outcome_values = Vec::with_capacity(eff.terms.len());
        let mut analytic = Vec::with_capacity(eff.terms.len());
        for (x, t) in eff.terms.iter().enumerate() {
            let mut weights = Vec::with_capacity(t.outcomes.len() * d_out);
            let mut values = Vec::with_capacity(t.outcomes.len() * d_out);
            let mut signed = 0.0;
            for (map, s) in &t.outcomes {
                let out = apply(map, rho)?.to_matrix();
                let rotated = evecs.adjoint() * out.inner() * evecs;
                for k in 0..d_out {
                    let p = rotated[(k, k)].re;
                    weights.push(p.max(0.0));
                    values.push(eff.gamma * *s as f64 * evals[k]);
                    signed += *s as f64 * evals[k] * p;
                }
            }
            let total: f64 = weights.iter().sum();
            if t.prob > 0.0 && (total - 1.0).abs() > 1e-8 {
                return Err(KnitError::Validation(format!(
                    "term {x} is not trace preserving on this input (outcome mass {total})"
                )));
            }
            outcome_dists.push(if t.prob > 0.0 {
                Some(WeightedIndex::new(&weights).map_err(|e| KnitError::Validation(format!("term {x}: {e}")))?)
            } else {
                None
            });
            outcome_values.push(values);
            analytic.push(eff.gamma * signed);
        }
        Ok(Self {
            gamma: eff.gamma,
            term_dist,
            outcome_dists,
            outcome_values,
            analytic,
        })
    }
}

/// Running count, mean and sum of squared deviations.
#[derive(Clone, Debug)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    counts: Vec<u64>,
}

impl Moments {
    fn new(terms: usize) -> Self {
        Self {
            n: 0,
            mean: 0.0,
            m2: 0.0,
            counts: vec![0; terms],
        }
    }

    fn push(&mut self, term: usize, v: f64) {
        self.n += 1;
        self.counts[term] += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    fn merge(mut self, other: &Moments) -> Self {
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self
    }
}

/// Sign-weighted Monte Carlo estimate of `Tr[O · R(ρ)]` in shot mode with
/// the default execution strategy.
pub fn mc_estimate(
    config: &QpdConfig,
    rho: &VectorizedOperator,
    o: &Observable,
    plan: &ShotPlan,
    seed: u64,
) -> Result<EstimateResult> {
    let eff = EffectiveQpd::from_config(config)?;
    mc_estimate_with(&eff, rho, o, plan, seed, Mode::Shot, Execution::default())
}

/// Monte Carlo estimate on an executable QPD.
///
/// Shots are split into batches of [`BATCH`]; batch `b` draws from stream
/// `b` of the seeded generator and batch statistics are merged in batch
/// order, so the result does not depend on `exec` or the worker count.
pub fn mc_estimate_with(
    eff: &EffectiveQpd,
    rho: &VectorizedOperator,
    o: &Observable,
    plan: &ShotPlan,
    seed: u64,
    mode: Mode,
    exec: Execution,
) -> Result<EstimateResult> {
    if plan.shots == 0 {
        return Err(KnitError::Validation("shot plan has zero shots".into()));
    }
    let prep = Prepared::new(eff, rho, o)?;
    let n_terms = eff.terms.len();
    let batches = plan.shots.div_ceil(BATCH as u64) as usize;
    let parts = map_indexed(batches, exec, |b| {
        let mut rng = stream_rng(seed, b as u64);
        let len = (plan.shots - (b * BATCH) as u64).min(BATCH as u64);
        let mut acc = Moments::new(n_terms);
        for _ in 0..len {
            let x = prep.term_dist.sample(&mut rng);
            let v = match mode {
                Mode::Shot => {
                    let dist = prep.outcome_dists[x].as_ref().expect("sampled terms have positive probability");
                    prep.outcome_values[x][dist.sample(&mut rng)]
                }
                Mode::BranchAnalytic => prep.analytic[x],
            };
            acc.push(x, v);
        }
        acc
    });
    let total = parts.iter().fold(Moments::new(n_terms), |acc, p| acc.merge(p));
    let variance = if total.n > 1 { total.m2 / (total.n - 1) as f64 } else { 0.0 };
    Ok(EstimateResult {
        mean: total.mean,
        std_error: (variance / total.n as f64).sqrt(),
        variance,
        shots: total.n,
        gamma: prep.gamma,
        seed,
        mode,
        branch_counts: total.counts.iter().copied().enumerate().collect(),
    })
}

/// Locality class and mid-circuit classical communication of a configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalityReport {
    pub class: Locality,
    /// Largest message (in bits) any single term sends between the parties.
    pub classical_bits: u32,
}

fn bits_for(branches: usize) -> u32 {
    if branches <= 1 {
        0
    } else {
        usize::BITS - (branches - 1).leading_zeros()
    }
}

fn sides_ok(s: &Superoperator, a_side: bool) -> bool {
    s.partition().is_none_or(|p| p.iter().all(|q| q.is_a_side() == a_side))
}

/// True if the joint map is a tensor product across the middle factor split.
fn factorizes(s: &Superoperator) -> bool {
    let n = s.in_dims().len();
    if !n.is_multiple_of(2) || s.out_dims().len() != n {
        return false;
    }
    let h = n / 2;
    let ia: usize = s.in_dims()[..h].iter().product();
    let ib: usize = s.in_dims()[h..].iter().product();
    let oa: usize = s.out_dims()[..h].iter().product();
    let ob: usize = s.out_dims()[h..].iter().product();
    let (di, d_o) = (ia * ib, oa * ob);
    let m = s.matrix();
    let r = DMatrix::from_fn(oa * oa * ia * ia, ob * ob * ib * ib, |row, col| {
        let (p, kl_a) = (row / (ia * ia), row % (ia * ia));
        let (i_a, j_a) = (p / oa, p % oa);
        let (k_a, l_a) = (kl_a / ia, kl_a % ia);
        let (q, kl_b) = (col / (ib * ib), col % (ib * ib));
        let (i_b, j_b) = (q / ob, q % ob);
        let (k_b, l_b) = (kl_b / ib, kl_b % ib);
        let out_row = (i_a * ob + i_b) * d_o + j_a * ob + j_b;
        let in_col = (k_a * ib + k_b) * di + l_a * ib + l_b;
        m[(out_row, in_col)]
    });
    let mut sv: Vec<f64> = r.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv.len() < 2 || sv[1] <= 1e-10 * sv[0].max(1e-300)
}

fn audit_op(op: &LocalOp, term: usize, what: &str) -> Result<u32> {
    let fail = |reason: String| KnitError::Audit { term, reason };
    match op {
        LocalOp::Product { a, b } => {
            if !sides_ok(a, true) || !sides_ok(b, false) {
                return Err(fail(format!("{what}: product factor labeled with the wrong party")));
            }
            Ok(0)
        }
        LocalOp::OneWayLocc { a_branches, b_branches } => {
            if !a_branches.iter().all(|s| sides_ok(s, true)) || !b_branches.iter().all(|s| sides_ok(s, false)) {
                return Err(fail(format!("{what}: LOCC branch labeled with the wrong party")));
            }
            Ok(bits_for(a_branches.len()))
        }
        LocalOp::Global(s) => {
            if factorizes(s) {
                Ok(0)
            } else {
                Err(fail(format!("{what}: joint operation does not factorize across A|B and has no message schedule")))
            }
        }
    }
}

/// Checks that every operation is local (or a one-way classical schedule)
/// and counts the classical bits; the final sign product is not counted.
pub fn locality_audit(config: &QpdConfig) -> Result<LocalityReport> {
    let mut bits = 0;
    for (x, t) in config.terms.iter().enumerate() {
        if let Some(pre) = &t.pre {
            bits = bits.max(audit_op(pre, x, "pre-operation")?);
        }
        let b = audit_op(&t.post, x, "post-operation")?;
        if b > 0 && config.locality == Locality::Lo {
            return Err(KnitError::Audit {
                term: x,
                reason: format!("declared LO but the post-operation sends {b} bits"),
            });
        }
        bits = bits.max(b);
    }
    Ok(LocalityReport {
        class: if bits > 0 { Locality::Locc } else { Locality::Lo },
        classical_bits: bits,
    })
}

/// Density matrix of a product of single-qubit basis states, e.g. `"+0"`.
pub fn product_state(labels: &str) -> Result<VectorizedOperator> {
    let mut psi = vec![C64::new(1.0, 0.0)];
    let mut dims = Vec::new();
    for ch in labels.chars() {
        let s = crate::gates::qubit_state(ch)
            .ok_or_else(|| KnitError::Configuration(format!("unknown state label '{ch}'")))?;
        psi = psi.iter().flat_map(|a| s.iter().map(move |b| a * b)).collect();
        dims.push(2);
    }
    if dims.is_empty() {
        return Err(KnitError::Configuration("empty state label".into()));
    }
    VectorizedOperator::pure(&psi, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use crate::liouville::{unitary_superop, Party};
    use crate::qpd::{build_bell_gate_cut, build_lo_gate_cut, build_wire_cut, AncillaPrep, Povm, QpdTerm};
    use crate::random::{haar_unitary, stream_rng};
    use crate::schmidt::{operator_schmidt, ResourceState};

    fn cnot_configs() -> (QpdConfig, QpdConfig) {
        let l = operator_schmidt(&gates::cnot(), (2, 2)).unwrap();
        (build_bell_gate_cut(&l).unwrap(), build_lo_gate_cut(&l).unwrap())
    }

    #[test]
    fn exact_expectation_examples() {
        let id = Superoperator::identity(vec![2]);
        let z = Observable::pauli("Z").unwrap();
        assert!((exact_expectation(&id, &product_state("0").unwrap(), &z).unwrap() - 1.0).abs() < 1e-15);
        let cnot = unitary_superop(&gates::cnot()).unwrap();
        let zz = Observable::pauli("ZZ").unwrap();
        assert!((exact_expectation(&cnot, &product_state("+0").unwrap(), &zz).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_expectation_matches_conjugation() {
        let mut rng = stream_rng(11, 0);
        let u = haar_unitary(4, &mut rng);
        let a = haar_unitary(2, &mut rng);
        let b = haar_unitary(2, &mut rng);
        let psi: Vec<C64> = (0..4).map(|k| a[(k / 2, 0)] * b[(k % 2, 0)]).collect();
        let rho = VectorizedOperator::pure(&psi, vec![2, 2]).unwrap();
        let xx = Observable::pauli("XX").unwrap();
        let direct = {
            let out = &(&u * &rho.to_matrix()) * &u.dagger();
            (xx.matrix() * &out).trace().re
        };
        let via = exact_expectation(&unitary_superop(&u).unwrap(), &rho, &xx).unwrap();
        assert!((direct - via).abs() < 1e-12);
    }

    #[test]
    fn hoeffding_counts() {
        assert_eq!(shots_for(1.0, 0.1, 0.05).unwrap().shots, 738);
        assert_eq!(shots_for(2.0, 0.1, 0.05).unwrap().shots, 2952);
        assert_eq!(shots_for(1.0, f64::INFINITY, 0.05).unwrap().shots, 1);
        assert!(shots_for(1.0, 0.0, 0.05).is_err());
        assert!(shots_for(1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn zero_shots_rejected() {
        let (bell, _) = cnot_configs();
        let r = mc_estimate(&bell, &product_state("+0").unwrap(), &Observable::pauli("ZZ").unwrap(), &ShotPlan::fixed(0), 1);
        assert!(matches!(r, Err(KnitError::Validation(_))));
    }

    #[test]
    fn product_gate_estimate_is_unbiased() {
        let mut rng = stream_rng(2, 0);
        let u = haar_unitary(2, &mut rng).kron(&haar_unitary(2, &mut rng));
        let c = build_bell_gate_cut(&operator_schmidt(&u, (2, 2)).unwrap()).unwrap();
        let rho = product_state("0+").unwrap();
        let o = Observable::pauli("XZ").unwrap();
        let exact = exact_expectation(&unitary_superop(&u).unwrap(), &rho, &o).unwrap();
        let r = mc_estimate(&c, &rho, &o, &ShotPlan::fixed(10_000), 3).unwrap();
        assert!((r.mean - exact).abs() < 5.0 * r.std_error.max(1e-3));
        assert_eq!(r.branch_counts.values().sum::<u64>(), 10_000);
    }

    #[test]
    fn deterministic_across_execution() {
        let (bell, _) = cnot_configs();
        let eff = EffectiveQpd::from_config(&bell).unwrap();
        let rho = product_state("+0").unwrap();
        let o = Observable::pauli("ZZ").unwrap();
        let plan = ShotPlan::fixed(3 * BATCH as u64 + 17);
        let a = mc_estimate_with(&eff, &rho, &o, &plan, 9, Mode::Shot, Execution::Sequential).unwrap();
        let b = mc_estimate_with(&eff, &rho, &o, &plan, 9, Mode::Shot, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let c = mc_estimate_with(&eff, &rho, &o, &plan, 10, Mode::Shot, Execution::Parallel).unwrap();
        assert_ne!(a.mean.to_bits(), c.mean.to_bits());
    }

    #[test]
    fn branch_analytic_has_lower_variance() {
        let (_, lo) = cnot_configs();
        let eff = EffectiveQpd::from_config(&lo).unwrap();
        let rho = product_state("+0").unwrap();
        let o = Observable::pauli("ZZ").unwrap();
        let plan = ShotPlan::fixed(20_000);
        let shot = mc_estimate_with(&eff, &rho, &o, &plan, 4, Mode::Shot, Execution::default()).unwrap();
        let ana = mc_estimate_with(&eff, &rho, &o, &plan, 4, Mode::BranchAnalytic, Execution::default()).unwrap();
        assert!(ana.variance < shot.variance);
        assert!((ana.mean - 1.0).abs() < 5.0 * ana.std_error);
    }

    #[test]
    fn audit_classes() {
        let (bell, lo) = cnot_configs();
        let r = locality_audit(&bell).unwrap();
        assert_eq!((r.class, r.classical_bits), (Locality::Lo, 0));
        assert_eq!(locality_audit(&lo).unwrap().class, Locality::Lo);
        let tele = build_wire_cut(&ResourceState::Bell { d: 2 }, 2).unwrap().config.unwrap();
        let r = locality_audit(&tele).unwrap();
        assert_eq!((r.class, r.classical_bits), (Locality::Locc, 2));
        let mp = build_wire_cut(&ResourceState::Separable, 2).unwrap().config.unwrap();
        assert_eq!(locality_audit(&mp).unwrap().classical_bits, 1);
    }

    #[test]
    fn global_cnot_pre_op_fails_audit() {
        let (mut bell, _) = cnot_configs();
        let g = unitary_superop(&gates::cnot()).unwrap().reshaped(vec![2, 2], vec![2, 2]).unwrap();
        bell.terms[2].pre = Some(LocalOp::Global(g));
        match locality_audit(&bell) {
            Err(KnitError::Audit { term, .. }) => assert_eq!(term, 2),
            other => panic!("expected audit failure, got {other:?}"),
        }
    }

    #[test]
    fn global_product_pre_op_passes_audit() {
        let (mut bell, _) = cnot_configs();
        let u = gates::hadamard().kron(&gates::pauli_x());
        let g = unitary_superop(&u).unwrap().reshaped(vec![2, 2], vec![2, 2]).unwrap();
        bell.terms[0].pre = Some(LocalOp::Global(g));
        assert_eq!(locality_audit(&bell).unwrap().classical_bits, 0);
    }

    #[test]
    fn mislabeled_party_fails_audit() {
        let k = gates::cnot();
        let s = crate::liouville::kraus_superop(&[k])
            .unwrap()
            .reshaped(vec![2, 2], vec![2, 2])
            .unwrap()
            .with_partition(vec![Party::A, Party::B])
            .unwrap();
        let idb = crate::qpd::side_map(&ComplexMatrix::identity(1), [1, 1], [1, 1], false);
        let c = QpdConfig {
            terms: vec![QpdTerm {
                label: "bad".into(),
                prob: 1.0,
                pre: None,
                ancilla: AncillaPrep::None,
                post: LocalOp::Product { a: s, b: idb },
                povm: Povm::trivial(),
                signs: vec![1],
            }],
            gamma: 1.0,
            resource: ResourceState::Separable,
            locality: Locality::Lo,
            in_dims: (2, 1),
            out_dims: (2, 1),
        };
        assert!(matches!(locality_audit(&c), Err(KnitError::Audit { term: 0, .. })));
    }

    #[test]
    fn observable_validation() {
        let nh = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(Observable::new(nh), Err(KnitError::Validation(_))));
        assert!(Observable::with_bound(gates::pauli_z(), 0.5).is_err());
        assert!((Observable::with_bound(gates::pauli_z(), 2.0).unwrap().bound() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn result_json_fields() {
        let (bell, _) = cnot_configs();
        let r = mc_estimate(&bell, &product_state("+0").unwrap(), &Observable::pauli("ZZ").unwrap(), &ShotPlan::fixed(100), 1).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        for k in ["mean", "std_error", "shots", "gamma", "seed", "branch_counts"] {
            assert!(v.get(k).is_some(), "{k}");
        }
    }
}
