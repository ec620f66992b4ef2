//! Dense complex matrices and Liouville-space (vectorized) calculus.
//!
//! Vectorization follows `|O⟩⟩ = (O ⊗ I)|I_d⟩⟩` with `|I_d⟩⟩ = Σ_i |i,i⟩`,
//! which puts `O[i][j]` at flat index `i·d + j` (row-major flattening).
//! A unitary acts on vectorized operators as `U ⊗ U*`, and every
//! multi-factor space is ordered as `(i_1 … i_n, j_1 … j_n)`.

use std::fmt;
use std::ops::{Add, Deref, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KnitError, Result};

pub type C64 = Complex64;

/// Default absolute tolerance on Frobenius norms.
pub const DEFAULT_TOL: f64 = 1e-10;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn new(inner: DMatrix<C64>) -> Self {
        Self(inner)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[C64]) -> Self {
        Self(DMatrix::from_row_slice(rows, cols, data))
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        let v: Vec<C64> = data.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_row_slice(rows, cols, &v)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    /// `|ψ⟩⟨φ|`.
    pub fn outer(psi: &[C64], phi: &[C64]) -> Self {
        Self::from_fn(psi.len(), phi.len(), |i, j| psi[i] * phi[j].conj())
    }

    /// Projector onto a (not necessarily normalized) vector.
    pub fn projector(psi: &[C64]) -> Self {
        Self::outer(psi, psi)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn is_square(&self) -> bool {
        self.0.nrows() == self.0.ncols()
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius distance; `f64::INFINITY` on shape mismatch.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.0.shape() != other.0.shape() {
            return f64::INFINITY;
        }
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.is_square()
            && Self(self.0.adjoint() * &self.0).distance(&Self::identity(self.0.nrows())) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.distance(&self.dagger()) <= tol
    }

    /// Hilbert–Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Eigenvalues and eigenvectors (columns) of a Hermitian matrix, ascending.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, ComplexMatrix) {
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let n = herm.nrows();
        let eig = herm.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vecs = DMatrix::from_fn(n, order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
        (vals, ComplexMatrix(vecs))
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        self.0
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }

    /// Row-major entries.
    pub fn row_major(&self) -> Vec<C64> {
        let (r, c) = self.0.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }
}

impl Deref for ComplexMatrix {
    type Target = DMatrix<C64>;
    fn deref(&self) -> &DMatrix<C64> {
        &self.0
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.0.nrows() {
            let row: Vec<String> = (0..self.0.ncols())
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    /// Row-major `[re, im]` pairs.
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            rows: self.0.nrows(),
            cols: self.0.ncols(),
            data: self.row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        if repr.data.len() != repr.rows * repr.cols {
            return Err(serde::de::Error::custom(format!(
                "matrix data has {} entries, expected {}x{}",
                repr.data.len(),
                repr.rows,
                repr.cols
            )));
        }
        let data: Vec<C64> = repr.data.iter().map(|p| C64::new(p[0], p[1])).collect();
        let m = ComplexMatrix::from_row_slice(repr.rows, repr.cols, &data);
        if !m.is_finite() {
            return Err(serde::de::Error::custom("matrix entries must be finite"));
        }
        Ok(m)
    }
}

/// Owner of a tensor factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
    AncillaA,
    AncillaB,
    RefA,
    RefB,
}

impl Party {
    /// True for factors held on the A side of the A|B cut.
    pub fn is_a_side(self) -> bool {
        matches!(self, Party::A | Party::AncillaA | Party::RefA)
    }

    fn reference(self) -> Party {
        if self.is_a_side() {
            Party::RefA
        } else {
            Party::RefB
        }
    }
}

/// Vectorized operator `|O⟩⟩` on a space with the given subsystem dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorizedOperator {
    dims: Vec<usize>,
    amplitudes: DVector<C64>,
}

impl VectorizedOperator {
    pub fn from_amplitudes(dims: Vec<usize>, amplitudes: DVector<C64>) -> Result<Self> {
        let d: usize = dims.iter().product();
        if amplitudes.len() != d * d {
            return Err(KnitError::Dimension(format!(
                "{} amplitudes for operator dimension {d}",
                amplitudes.len()
            )));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Vectorizes a square matrix whose space factors as `dims`.
    pub fn from_matrix(m: &ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        if !m.is_square() {
            return Err(KnitError::Dimension(format!(
                "cannot vectorize a {}x{} matrix",
                m.nrows(),
                m.ncols()
            )));
        }
        let d = m.nrows();
        if dims.iter().product::<usize>() != d {
            return Err(KnitError::Dimension(format!("dims {dims:?} do not multiply to {d}")));
        }
        Ok(Self {
            dims,
            amplitudes: DVector::from_vec(m.row_major()),
        })
    }

    /// `|ψ⟩⟨ψ|` vectorized.
    pub fn pure(psi: &[C64], dims: Vec<usize>) -> Result<Self> {
        Self::from_matrix(&ComplexMatrix::projector(psi), dims)
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let d = self.dim();
        ComplexMatrix::from_row_slice(d, d, self.amplitudes.as_slice())
    }

    /// `⟨⟨self|other⟩⟩ = Tr(self† other)`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// Inner product with `|I_d⟩⟩`, i.e. the trace.
    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|i| self.amplitudes[i * d + i]).sum()
    }

    pub fn purity(&self) -> f64 {
        let m = self.to_matrix();
        (&m * &m).trace().re
    }

    /// Unit trace, Hermitian and positive semidefinite within `tol`.
    pub fn is_density(&self, tol: f64) -> bool {
        let m = self.to_matrix();
        if (self.trace() - ONE).norm() > tol.max(1e-12) || !m.is_hermitian(tol) {
            return false;
        }
        let (vals, _) = m.hermitian_eigen();
        vals.first().is_none_or(|&v| v >= -tol)
    }
}

/// Reshapes a vectorized matrix into its d×d form.
pub fn devectorize(v: &VectorizedOperator) -> ComplexMatrix {
    v.to_matrix()
}

/// `|M⟩⟩ = (M ⊗ I)|I_d⟩⟩` for a square `M` on a single factor.
pub fn vectorize(m: &ComplexMatrix) -> Result<VectorizedOperator> {
    VectorizedOperator::from_matrix(m, vec![m.nrows()])
}

/// Linear map between vectorized operator spaces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Superoperator {
    in_dims: Vec<usize>,
    out_dims: Vec<usize>,
    matrix: ComplexMatrix,
    /// Party label per factor; input and output factors share labels by position.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Vec<Party>>,
    #[serde(default)]
    cptp: bool,
}

impl Superoperator {
    pub fn from_matrix(in_dims: Vec<usize>, out_dims: Vec<usize>, matrix: ComplexMatrix) -> Result<Self> {
        let di: usize = in_dims.iter().product();
        let d_o: usize = out_dims.iter().product();
        if matrix.nrows() != d_o * d_o || matrix.ncols() != di * di {
            return Err(KnitError::Dimension(format!(
                "superoperator matrix {}x{} inconsistent with dims {in_dims:?} -> {out_dims:?}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            in_dims,
            out_dims,
            matrix,
            partition: None,
            cptp: false,
        })
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let d: usize = dims.iter().product();
        Self {
            in_dims: dims.clone(),
            out_dims: dims,
            matrix: ComplexMatrix::identity(d * d),
            partition: None,
            cptp: true,
        }
    }

    /// Map from the trivial space preparing the given density matrix.
    pub fn preparation(state: &ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let v = VectorizedOperator::from_matrix(state, dims.clone())?;
        let col = ComplexMatrix::from_row_slice(v.amplitudes.len(), 1, v.amplitudes.as_slice());
        Ok(Self {
            in_dims: vec![],
            out_dims: dims,
            matrix: col,
            partition: None,
            cptp: v.is_density(DEFAULT_TOL),
        })
    }

    /// The linear functional `ρ ↦ Tr_anc[(I ⊗ E) ρ]` contracting the last
    /// factor with an effect `E`, leaving the `keep` factor.
    pub fn effect_contraction(keep: usize, effect: &ComplexMatrix) -> Result<Self> {
        if !effect.is_square() {
            return Err(KnitError::Dimension("effect must be square".into()));
        }
        let da = effect.nrows();
        let d_in = keep * da;
        let m = ComplexMatrix::from_fn(keep * keep, d_in * d_in, |row, col| {
            let (i, j) = (row / keep, row % keep);
            let (ri, cj) = (col / d_in, col % d_in);
            let (i2, a) = (ri / da, ri % da);
            let (j2, b) = (cj / da, cj % da);
            if i2 == i && j2 == j {
                effect[(b, a)]
            } else {
                ZERO
            }
        });
        Self::from_matrix(vec![keep, da], vec![keep], m)
    }

    pub fn with_partition(mut self, parties: Vec<Party>) -> Result<Self> {
        if parties.len() != self.in_dims.len() || parties.len() != self.out_dims.len() {
            return Err(KnitError::Configuration(format!(
                "{} party labels for {} input / {} output factors",
                parties.len(),
                self.in_dims.len(),
                self.out_dims.len()
            )));
        }
        self.partition = Some(parties);
        Ok(self)
    }

    pub fn in_dims(&self) -> &[usize] {
        &self.in_dims
    }

    pub fn out_dims(&self) -> &[usize] {
        &self.out_dims
    }

    pub fn in_dim(&self) -> usize {
        self.in_dims.iter().product()
    }

    pub fn out_dim(&self) -> usize {
        self.out_dims.iter().product()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn partition(&self) -> Option<&[Party]> {
        self.partition.as_deref()
    }

    pub fn is_flagged_cptp(&self) -> bool {
        self.cptp
    }

    /// Matrix shape agrees with the declared factor dimensions.
    pub fn is_consistent(&self) -> bool {
        let (di, d_o) = (self.in_dim(), self.out_dim());
        self.matrix.nrows() == d_o * d_o
            && self.matrix.ncols() == di * di
            && self.partition.as_ref().is_none_or(|p| p.len() == self.in_dims.len() && p.len() == self.out_dims.len())
    }

    pub(crate) fn flag_cptp(mut self, cptp: bool) -> Self {
        self.cptp = cptp;
        self
    }

    /// Relabels factor dimensions without touching the matrix.
    pub fn reshaped(mut self, in_dims: Vec<usize>, out_dims: Vec<usize>) -> Result<Self> {
        if in_dims.iter().product::<usize>() != self.in_dim()
            || out_dims.iter().product::<usize>() != self.out_dim()
        {
            return Err(KnitError::Dimension("reshape must preserve total dimension".into()));
        }
        self.in_dims = in_dims;
        self.out_dims = out_dims;
        self.partition = None;
        Ok(self)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Superoperator) -> Result<Self> {
        if self.in_dim() != inner.out_dim() {
            return Err(KnitError::Dimension(format!(
                "cannot compose {:?}->{:?} after {:?}->{:?}",
                self.in_dims, self.out_dims, inner.in_dims, inner.out_dims
            )));
        }
        Ok(Self {
            in_dims: inner.in_dims.clone(),
            out_dims: self.out_dims.clone(),
            matrix: &self.matrix * &inner.matrix,
            partition: None,
            cptp: self.cptp && inner.cptp,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: self.matrix.scale(C64::new(s, 0.0)),
            cptp: false,
            ..self.clone()
        }
    }

    /// Entrywise sum; dimensions must agree.
    pub fn plus(&self, other: &Superoperator) -> Result<Self> {
        if self.in_dim() != other.in_dim() || self.out_dim() != other.out_dim() {
            return Err(KnitError::Dimension("cannot add superoperators of different shape".into()));
        }
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            partition: None,
            cptp: false,
            ..self.clone()
        })
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            matrix: ComplexMatrix::zeros(self.matrix.nrows(), self.matrix.ncols()),
            partition: None,
            cptp: false,
            ..self.clone()
        }
    }

    pub fn distance(&self, other: &Superoperator) -> f64 {
        self.matrix.distance(&other.matrix)
    }

    /// Choi matrix `J[(i,k),(j,l)] = S[(i,j),(k,l)]` (unnormalized).
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let (d_o, di) = (self.out_dim(), self.in_dim());
        ComplexMatrix::from_fn(d_o * di, d_o * di, |r, c| {
            let (i, k) = (r / di, r % di);
            let (j, l) = (c / di, c % di);
            self.matrix[(i * d_o + j, k * di + l)]
        })
    }

    /// `⟨⟨I_out| S = ⟨⟨I_in|` within `tol`.
    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        let (d_o, di) = (self.out_dim(), self.in_dim());
        let mut err = 0.0;
        for k in 0..di {
            for l in 0..di {
                let s: C64 = (0..d_o).map(|i| self.matrix[(i * d_o + i, k * di + l)]).sum();
                let target = if k == l { ONE } else { ZERO };
                err += (s - target).norm_sqr();
            }
        }
        err.sqrt() <= tol
    }

    /// Checks complete positivity (Choi PSD) and trace preservation.
    pub fn verify_cptp(&self, tol: f64) -> bool {
        if !self.is_trace_preserving(tol) {
            return false;
        }
        let choi = self.choi_matrix();
        if !choi.is_hermitian(tol) {
            return false;
        }
        let (vals, _) = choi.hermitian_eigen();
        vals.first().is_none_or(|&v| v >= -tol)
    }
}

/// `Ũ = U ⊗ U*`.
pub fn unitary_superop(u: &ComplexMatrix) -> Result<Superoperator> {
    if !u.is_unitary(DEFAULT_TOL) {
        return Err(KnitError::Validation("matrix is not unitary within 1e-10".into()));
    }
    let d = u.nrows();
    Ok(Superoperator::from_matrix(vec![d], vec![d], u.kron(&u.conj()))?.flag_cptp(true))
}

/// `Σ_i K_i ⊗ K_i*`; flagged CPTP iff `Σ K†K = I` within 1e-10.
pub fn kraus_superop(kraus: &[ComplexMatrix]) -> Result<Superoperator> {
    let first = kraus
        .first()
        .ok_or_else(|| KnitError::Dimension("empty Kraus list".into()))?;
    let (r, c) = first.shape();
    if kraus.iter().any(|k| k.shape() != (r, c)) {
        return Err(KnitError::Dimension("Kraus operators differ in shape".into()));
    }
    let mut m = ComplexMatrix::zeros(r * r, c * c);
    let mut completeness = ComplexMatrix::zeros(c, c);
    for k in kraus {
        m = &m + &k.kron(&k.conj());
        completeness = &completeness + &(&k.dagger() * k);
    }
    let tp = completeness.distance(&ComplexMatrix::identity(c)) <= DEFAULT_TOL;
    Ok(Superoperator::from_matrix(vec![c], vec![r], m)?.flag_cptp(tp))
}

/// Applies `s` to `v`.
pub fn apply(s: &Superoperator, v: &VectorizedOperator) -> Result<VectorizedOperator> {
    if s.in_dim() != v.dim() {
        return Err(KnitError::Dimension(format!(
            "superoperator input dimension {} vs operator dimension {}",
            s.in_dim(),
            v.dim()
        )));
    }
    let out = s.matrix.inner() * &v.amplitudes;
    VectorizedOperator::from_amplitudes(s.out_dims.clone(), out)
}

/// `S₁ ⊗ S₂` with factors concatenated in order; partition labels are kept
/// when both operands carry them.
pub fn tensor(s1: &Superoperator, s2: &Superoperator) -> Superoperator {
    let (i1, i2) = (s1.in_dim(), s2.in_dim());
    let (o1, o2) = (s1.out_dim(), s2.out_dim());
    let (di, d_o) = (i1 * i2, o1 * o2);
    let m = ComplexMatrix::from_fn(d_o * d_o, di * di, |row, col| {
        let (r, c) = (row / d_o, row % d_o);
        let (k, l) = (col / di, col % di);
        let a = s1.matrix[((r / o2) * o1 + c / o2, (k / i2) * i1 + l / i2)];
        if a == ZERO {
            return ZERO;
        }
        a * s2.matrix[((r % o2) * o2 + c % o2, (k % i2) * i2 + l % i2)]
    });
    let partition = match (&s1.partition, &s2.partition) {
        (Some(p1), Some(p2)) => Some(p1.iter().chain(p2.iter()).copied().collect()),
        _ => None,
    };
    Superoperator {
        in_dims: s1.in_dims.iter().chain(&s2.in_dims).copied().collect(),
        out_dims: s1.out_dims.iter().chain(&s2.out_dims).copied().collect(),
        matrix: m,
        partition,
        cptp: s1.cptp && s2.cptp,
    }
}

/// Multi-index of `idx` in a space with the given factor dims.
fn digits(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for (k, &d) in dims.iter().enumerate().rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

fn undigits(ds: &[usize], dims: &[usize]) -> usize {
    ds.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
}

/// Index map for reordering factors: new factor `k` is old factor `perm[k]`.
/// Returns `map[new_index] = old_index` on the Hilbert space.
fn permutation_index_map(dims: &[usize], perm: &[usize]) -> Vec<usize> {
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let d: usize = dims.iter().product();
    (0..d)
        .map(|n| {
            let nd = digits(n, &new_dims);
            let mut od = vec![0; dims.len()];
            for (k, &p) in perm.iter().enumerate() {
                od[p] = nd[k];
            }
            undigits(&od, dims)
        })
        .collect()
}

/// Reorders the factors of a square operator on `dims`.
pub fn permute_operator(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let map = permutation_index_map(dims, perm);
    ComplexMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(map[i], map[j])])
}

/// Reorders the factors of a vectorized operator.
pub fn permute_vectorized(v: &VectorizedOperator, perm: &[usize]) -> VectorizedOperator {
    let m = permute_operator(&v.to_matrix(), &v.dims, perm);
    let dims = perm.iter().map(|&p| v.dims[p]).collect();
    VectorizedOperator::from_matrix(&m, dims).expect("permutation preserves shape")
}

/// Traces out every factor not listed in `keep`; kept factors retain their order.
pub fn partial_trace(v: &VectorizedOperator, keep: &[usize]) -> Result<VectorizedOperator> {
    if keep.iter().any(|&k| k >= v.dims.len()) {
        return Err(KnitError::Dimension(format!(
            "keep {keep:?} out of range for {} factors",
            v.dims.len()
        )));
    }
    let mut keep_sorted = keep.to_vec();
    keep_sorted.sort_unstable();
    keep_sorted.dedup();
    let traced: Vec<usize> = (0..v.dims.len()).filter(|k| !keep_sorted.contains(k)).collect();
    let perm: Vec<usize> = keep_sorted.iter().chain(&traced).copied().collect();
    let p = permute_vectorized(v, &perm);
    let dk: usize = keep_sorted.iter().map(|&k| v.dims[k]).product();
    let dt: usize = traced.iter().map(|&k| v.dims[k]).product();
    let m = p.to_matrix();
    let out = ComplexMatrix::from_fn(dk, dk, |i, j| (0..dt).map(|t| m[(i * dt + t, j * dt + t)]).sum());
    VectorizedOperator::from_matrix(&out, keep_sorted.iter().map(|&k| v.dims[k]).collect())
}

/// Reshapes a vectorized operator on `left ⊗ right` into the realigned
/// matrix `X[(i_l, j_l), (i_r, j_r)]`.
pub(crate) fn realign(v: &[C64], dl: usize, dr: usize) -> DMatrix<C64> {
    let d = dl * dr;
    DMatrix::from_fn(dl * dl, dr * dr, |row, col| {
        let (il, jl) = (row / dl, row % dl);
        let (ir, jr) = (col / dr, col % dr);
        v[(il * dr + ir) * d + jl * dr + jr]
    })
}

pub(crate) fn unrealign(x: &DMatrix<C64>, dl: usize, dr: usize) -> DVector<C64> {
    let d = dl * dr;
    DVector::from_fn(d * d, |idx, _| {
        let (r, c) = (idx / d, idx % d);
        let (il, ir) = (r / dr, r % dr);
        let (jl, jr) = (c / dr, c % dr);
        x[(il * dl + jl, ir * dr + jr)]
    })
}

/// Applies `a ⊗ b` to a vectorized operator on `(a.in) ⊗ (b.in)` without
/// forming the joint matrix.
pub(crate) fn apply_local_pair(a: &Superoperator, b: &Superoperator, v: &[C64]) -> DVector<C64> {
    let x = realign(v, a.in_dim(), b.in_dim());
    let y = a.matrix.inner() * x * b.matrix.inner().transpose();
    unrealign(&y, a.out_dim(), b.out_dim())
}

/// Choi state of a superoperator, with the A-side factors (systems then
/// references) ordered before the B-side ones.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiState {
    pub state: VectorizedOperator,
    pub parties: Vec<Party>,
    /// Number of leading factors on the A side of the cut.
    pub cut: usize,
}

impl ChoiState {
    pub fn dims(&self) -> &[usize] {
        self.state.dims()
    }
}

/// `(S ⊗ id)` applied to maximally entangled system–reference pairs, one per
/// input factor, normalized to unit trace.
pub fn choi_state(s: &Superoperator) -> Result<ChoiState> {
    let parties = s
        .partition
        .clone()
        .ok_or_else(|| KnitError::Configuration("superoperator has no partition metadata".into()))?;
    if s.in_dims != s.out_dims {
        return Err(KnitError::Configuration(format!(
            "choi state needs equal in/out dims per party, got {:?} -> {:?}",
            s.in_dims, s.out_dims
        )));
    }
    let d = s.in_dim();
    let norm = C64::new(1.0 / d as f64, 0.0);
    let rho = ComplexMatrix::from_fn(d * d, d * d, |r, c| {
        let (i, k) = (r / d, r % d);
        let (j, l) = (c / d, c % d);
        s.matrix[(i * d + j, k * d + l)] * norm
    });
    let n = s.in_dims.len();
    let mut dims = s.in_dims.clone();
    dims.extend_from_slice(&s.in_dims);
    let mut all_parties = parties.clone();
    all_parties.extend(parties.iter().map(|p| p.reference()));
    let (a_side, b_side): (Vec<usize>, Vec<usize>) = (0..n).partition(|&k| parties[k].is_a_side());
    let perm: Vec<usize> = a_side
        .iter()
        .copied()
        .chain(a_side.iter().map(|k| k + n))
        .chain(b_side.iter().copied())
        .chain(b_side.iter().map(|k| k + n))
        .collect();
    let v = VectorizedOperator::from_matrix(&rho, dims)?;
    let state = permute_vectorized(&v, &perm);
    Ok(ChoiState {
        state,
        parties: perm.iter().map(|&p| all_parties[p]).collect(),
        cut: 2 * a_side.len(),
    })
}
