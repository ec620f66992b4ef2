//! Operator and state Schmidt decompositions and the entanglement measures
//! built on them.

mod unitarize;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{KnitError, Result};
use crate::liouville::{ComplexMatrix, VectorizedOperator, C64, DEFAULT_TOL, ONE, ZERO};

/// Default cutoff for [`schmidt_rank`].
pub const RANK_TOL: f64 = 1e-8;
/// Tolerance used to decide whether scaled factors are unitary.
pub const KAK_TOL: f64 = 1e-8;
/// Singular values closer than this are treated as one degenerate block.
const TIE_TOL: f64 = 1e-10;
/// Singular values below this (relative to the largest) are dropped.
const DROP_TOL: f64 = 1e-12;

/// Local unitary decomposition `U = Σ λ_i A_i ⊗ B_i`.
///
/// With `kak_like` the factors are unitary and `Σ λ_i² = 1`. Otherwise the
/// factors are Hilbert–Schmidt orthonormal and `λ` are the raw singular values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lud {
    pub lambdas: Vec<f64>,
    pub a_factors: Vec<ComplexMatrix>,
    pub b_factors: Vec<ComplexMatrix>,
    pub kak_like: bool,
    pub source_dim: (usize, usize),
}

impl Lud {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn l1(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// `||λ||₁²`.
    pub fn l1_sq(&self) -> f64 {
        let s = self.l1();
        s * s
    }

    /// `||λ||₂²`.
    pub fn l2_sq(&self) -> f64 {
        self.lambdas.iter().map(|l| l * l).sum()
    }

    pub fn rank(&self) -> usize {
        schmidt_rank(&self.lambdas, RANK_TOL)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let (da, db) = self.source_dim;
        let mut out = ComplexMatrix::zeros(da * db, da * db);
        for ((l, a), b) in self.lambdas.iter().zip(&self.a_factors).zip(&self.b_factors) {
            out = &out + &a.kron(b).scale(C64::new(*l, 0.0));
        }
        out
    }

    pub(crate) fn require_kak(&self) -> Result<()> {
        if self.kak_like {
            Ok(())
        } else {
            Err(KnitError::Unsupported(
                "construction needs unitary Schmidt factors (kak_like = false)".into(),
            ))
        }
    }
}

/// `M[(i_A j_A), (i_B j_B)] = U[(i_A i_B), (j_A j_B)]`.
fn reshuffle(u: &ComplexMatrix, da: usize, db: usize) -> DMatrix<C64> {
    DMatrix::from_fn(da * da, db * db, |r, c| {
        let (ia, ja) = (r / da, r % da);
        let (ib, jb) = (c / db, c % db);
        u[(ia * db + ib, ja * db + jb)]
    })
}

fn is_scaled_unitary(m: &DMatrix<C64>, d: usize, tol: f64) -> bool {
    let g = m.adjoint() * m * C64::new(d as f64, 0.0);
    (g - DMatrix::identity(d, d)).norm() <= tol
}

/// Divides `A` by the phase of its largest-magnitude entry (first in
/// row-major order on ties) and multiplies `B` by the same phase.
fn fix_phase(a: &mut DMatrix<C64>, b: &mut DMatrix<C64>) {
    let mut best = ZERO;
    let mut best_abs = -1.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            if z.norm() > best_abs + 1e-12 {
                best = z;
                best_abs = z.norm();
            }
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let phase = best / best_abs;
    *a *= phase.conj();
    *b *= phase;
}

fn lex_cmp(x: &DMatrix<C64>, y: &DMatrix<C64>) -> Ordering {
    const Q: f64 = 1e-9;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            for (p, q) in [(x[(i, j)].re, y[(i, j)].re), (x[(i, j)].im, y[(i, j)].im)] {
                if (p - q).abs() > Q {
                    return if p > q { Ordering::Less } else { Ordering::Greater };
                }
            }
        }
    }
    Ordering::Equal
}

struct Svd {
    u: DMatrix<C64>,
    singular_values: Vec<f64>,
    v_t: DMatrix<C64>,
}

fn recompose_error(m: &DMatrix<C64>, s: &Svd) -> f64 {
    let sigma = DMatrix::from_fn(s.u.ncols(), s.v_t.nrows(), |i, j| {
        if i == j { C64::new(s.singular_values[i], 0.0) } else { ZERO }
    });
    (&s.u * sigma * &s.v_t - m).norm()
}

/// Thin SVD via faer, checked against `m`.
fn checked_svd(m: &DMatrix<C64>) -> Result<Svd> {
    let (r, c) = m.shape();
    let fm = faer::Mat::<C64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = fm
        .thin_svd()
        .map_err(|e| KnitError::Consistency(format!("SVD did not converge: {e:?}")))?;
    let (u, s, v) = (svd.U(), svd.S(), svd.V());
    let k = r.min(c);
    let out = Svd {
        u: DMatrix::from_fn(r, k, |i, j| u[(i, j)]),
        singular_values: (0..k).map(|i| s[i].re).collect(),
        v_t: DMatrix::from_fn(k, c, |i, j| v[(j, i)].conj()),
    };
    let err = recompose_error(m, &out);
    if err > 1e-10 * m.norm().max(1.0) {
        return Err(KnitError::Consistency(format!(
            "SVD factors reproduce the reshuffled matrix only to {err:e}"
        )));
    }
    Ok(out)
}

/// Operator Schmidt decomposition of a bipartite unitary on `d_A · d_B`.
///
/// Degenerate singular-value blocks are rotated onto unitary factors when
/// such a rotation exists; the result is then reported in the unitary
/// convention (`kak_like = true`).
pub fn operator_schmidt(u: &ComplexMatrix, dims: (usize, usize)) -> Result<Lud> {
    let (da, db) = dims;
    if da == 0 || db == 0 || u.nrows() != da * db || !u.is_square() {
        return Err(KnitError::Dimension(format!(
            "{}x{} matrix is not an operator on {da}x{db}",
            u.nrows(),
            u.ncols()
        )));
    }
    if !u.is_unitary(DEFAULT_TOL) {
        return Err(KnitError::Validation("operator_schmidt needs a unitary input".into()));
    }
    let m = reshuffle(u, da, db);
    let svd = checked_svd(&m)?;
    let (uu, vt) = (&svd.u, &svd.v_t);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let smax = svd.singular_values[order[0]];
    let kept: Vec<usize> = order
        .into_iter()
        .filter(|&k| svd.singular_values[k] > DROP_TOL * smax.max(1.0))
        .collect();

    let sigmas: Vec<f64> = kept.iter().map(|&k| svd.singular_values[k]).collect();
    let mut a: Vec<DMatrix<C64>> = kept
        .iter()
        .map(|&k| DMatrix::from_fn(da, da, |i, j| uu[(i * da + j, k)]))
        .collect();
    let mut b: Vec<DMatrix<C64>> = kept
        .iter()
        .map(|&k| DMatrix::from_fn(db, db, |i, j| vt[(k, i * db + j)]))
        .collect();

    let mut kak_like = true;
    let mut start = 0;
    while start < sigmas.len() {
        let mut end = start + 1;
        while end < sigmas.len() && sigmas[end - 1] - sigmas[end] <= TIE_TOL {
            end += 1;
        }
        let ok = (start..end)
            .all(|k| is_scaled_unitary(&a[k], da, KAK_TOL) && is_scaled_unitary(&b[k], db, KAK_TOL));
        if !ok {
            match unitarize::unitarize_block(&a[start..end], &b[start..end], dims) {
                Some((ar, br)) => {
                    a.splice(start..end, ar);
                    b.splice(start..end, br);
                }
                None => kak_like = false,
            }
        }
        for k in start..end {
            let (x, y) = (&mut a[k], &mut b[k]);
            fix_phase(x, y);
        }
        let mut block: Vec<(DMatrix<C64>, DMatrix<C64>)> =
            a[start..end].iter().cloned().zip(b[start..end].iter().cloned()).collect();
        block.sort_by(|x, y| lex_cmp(&x.0, &y.0));
        for (off, (x, y)) in block.into_iter().enumerate() {
            a[start + off] = x;
            b[start + off] = y;
        }
        start = end;
    }
    if kak_like {
        kak_like = a.iter().all(|x| is_scaled_unitary(x, da, KAK_TOL))
            && b.iter().all(|x| is_scaled_unitary(x, db, KAK_TOL));
    }

    let (lambdas, sa, sb) = if kak_like {
        let s = ((da * db) as f64).sqrt();
        (
            sigmas.iter().map(|x| x / s).collect(),
            (da as f64).sqrt(),
            (db as f64).sqrt(),
        )
    } else {
        (sigmas, 1.0, 1.0)
    };
    Ok(Lud {
        lambdas,
        a_factors: a.into_iter().map(|x| ComplexMatrix::new(x * C64::new(sa, 0.0))).collect(),
        b_factors: b.into_iter().map(|x| ComplexMatrix::new(x * C64::new(sb, 0.0))).collect(),
        kak_like,
        source_dim: dims,
    })
}

/// Shared entangled resource placed between the two parties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResourceState {
    Separable,
    Bell { d: usize },
    Psi { r: f64 },
    PureSchmidt { coefficients: Vec<f64> },
}

impl ResourceState {
    /// Checks parameter ranges and normalization.
    pub fn validate(&self) -> Result<()> {
        match self {
            ResourceState::Separable => Ok(()),
            ResourceState::Bell { d } if *d >= 1 => Ok(()),
            ResourceState::Bell { d } => Err(KnitError::Validation(format!("bell dimension {d}"))),
            ResourceState::Psi { r } if (0.0..=1.0).contains(r) => Ok(()),
            ResourceState::Psi { r } => Err(KnitError::Validation(format!("psi parameter r = {r} outside [0, 1]"))),
            ResourceState::PureSchmidt { coefficients } => {
                if coefficients.is_empty() || coefficients.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                    return Err(KnitError::Validation("schmidt coefficients must be positive".into()));
                }
                let n: f64 = coefficients.iter().map(|s| s * s).sum();
                if (n - 1.0).abs() > 1e-12 {
                    return Err(KnitError::Validation(format!("schmidt coefficients square-sum to {n}")));
                }
                Ok(())
            }
        }
    }

    /// Descending Schmidt coefficients of the (pure) resource.
    pub fn schmidt_coefficients(&self) -> Vec<f64> {
        let mut s = match self {
            ResourceState::Separable => vec![1.0],
            ResourceState::Bell { d } => vec![1.0 / (*d as f64).sqrt(); *d],
            ResourceState::Psi { r } => vec![((1.0 + r) / 2.0).sqrt(), ((1.0 - r) / 2.0).sqrt()],
            ResourceState::PureSchmidt { coefficients } => coefficients.clone(),
        };
        s.retain(|x| *x > 0.0);
        s.sort_by(|x, y| y.total_cmp(x));
        s
    }

    /// State vector `Σ s_i |i,i⟩` on `d × d` with `d` the number of
    /// coefficients (at least 2).
    pub fn state_vector(&self) -> (Vec<C64>, usize) {
        let raw = match self {
            ResourceState::Psi { r } => vec![((1.0 + r) / 2.0).sqrt(), ((1.0 - r) / 2.0).sqrt()],
            _ => self.schmidt_coefficients(),
        };
        let d = raw.len().max(2);
        let mut psi = vec![ZERO; d * d];
        for (i, s) in raw.iter().enumerate() {
            psi[i * d + i] = C64::new(*s, 0.0);
        }
        (psi, d)
    }

    /// Density matrix on the two halves of the resource.
    pub fn density(&self) -> VectorizedOperator {
        let (psi, d) = self.state_vector();
        VectorizedOperator::pure(&psi, vec![d, d]).expect("square by construction")
    }

    /// Entanglement entropy across the resource cut, in bits.
    pub fn entropy(&self) -> f64 {
        shannon_bits(&self.schmidt_coefficients())
    }
}

impl fmt::Display for ResourceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ResourceState::Separable => write!(f, "separable"),
            ResourceState::Bell { d } => write!(f, "bell({d})"),
            ResourceState::Psi { r } => write!(f, "psi({r})"),
            ResourceState::PureSchmidt { coefficients } => write!(f, "pure{coefficients:?}"),
        }
    }
}

/// Parses `none`, `separable`, `bell`, `bell:<d>` and `psi:<r>`.
impl FromStr for ResourceState {
    type Err = KnitError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s.as_str(), None),
        };
        let state = match (head, arg) {
            ("none" | "separable", None) => ResourceState::Separable,
            ("bell", None) => ResourceState::Bell { d: 2 },
            ("bell", Some(a)) => ResourceState::Bell {
                d: a.parse().map_err(|_| KnitError::Configuration(format!("bad bell dimension '{a}'")))?,
            },
            ("psi", Some(a)) => ResourceState::Psi {
                r: a.parse().map_err(|_| KnitError::Configuration(format!("bad psi parameter '{a}'")))?,
            },
            _ => return Err(KnitError::Configuration(format!("unknown resource '{s}'"))),
        };
        state.validate()?;
        Ok(state)
    }
}

/// Pure state vector of a density operator, or a validation error if mixed.
fn pure_vector(v: &VectorizedOperator) -> Result<Vec<C64>> {
    let m = v.to_matrix();
    let tr = v.trace();
    if (tr - ONE).norm() > DEFAULT_TOL || !m.is_hermitian(DEFAULT_TOL) {
        return Err(KnitError::Validation("input is not a normalized density operator".into()));
    }
    if (v.purity() - 1.0).abs() > DEFAULT_TOL {
        return Err(KnitError::Validation(format!("state is mixed (purity {})", v.purity())));
    }
    let (vals, vecs) = m.hermitian_eigen();
    let top = vals.len() - 1;
    let scale = vals[top].max(0.0).sqrt();
    Ok((0..m.nrows()).map(|i| vecs[(i, top)] * scale).collect())
}

/// Descending Schmidt coefficients of a pure state across the cut after the
/// first `cut` factors.
pub fn state_schmidt(v: &VectorizedOperator, cut: usize) -> Result<Vec<f64>> {
    if cut > v.dims().len() {
        return Err(KnitError::Dimension(format!("cut {cut} beyond {} factors", v.dims().len())));
    }
    let psi = pure_vector(v)?;
    let dl: usize = v.dims()[..cut].iter().product();
    let dr: usize = v.dims()[cut..].iter().product();
    let m = DMatrix::from_row_slice(dl, dr, &psi);
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    let n: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(s.into_iter().map(|x| x / n).collect())
}

fn shannon_bits(s: &[f64]) -> f64 {
    s.iter()
        .map(|x| x * x)
        .filter(|p| *p > 1e-300)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Entanglement entropy (bits) of a pure state across the cut after `cut` factors.
pub fn entanglement_entropy(v: &VectorizedOperator, cut: usize) -> Result<f64> {
    Ok(shannon_bits(&state_schmidt(v, cut)?))
}

/// Number of coefficients above `tol`.
pub fn schmidt_rank(coefficients: &[f64], tol: f64) -> usize {
    coefficients.iter().filter(|&&c| c > tol).count()
}

/// Fully entangled fraction `F_d` for the supported state classes.
///
/// Pure states of Schmidt rank at most `d` give `(Σ s_i)²/d`. Higher-rank
/// states that LOCC-convert to `Φ_d` (squared coefficients majorized by the
/// uniform distribution on `d` outcomes) give 1. Anything else is refused.
pub fn fully_entangled_fraction(rho: &ResourceState, d: usize) -> Result<f64> {
    rho.validate()?;
    if d == 0 {
        return Err(KnitError::Validation("dimension must be positive".into()));
    }
    let s = rho.schmidt_coefficients();
    if s.len() <= d {
        let t: f64 = s.iter().sum();
        return Ok((t * t / d as f64).min(1.0));
    }
    let mut acc = 0.0;
    for (k, x) in s.iter().enumerate() {
        acc += x * x;
        let cap = ((k + 1) as f64 / d as f64).min(1.0);
        if acc > cap + 1e-12 {
            return Err(KnitError::UnsupportedClass(format!(
                "{rho} has Schmidt rank {} > {d} and does not convert to a maximally entangled state of dimension {d}",
                s.len()
            )));
        }
    }
    Ok(1.0)
}
