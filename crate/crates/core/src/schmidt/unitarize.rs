//! Rotation of a degenerate operator-Schmidt block onto unitary factors.
//!
//! Within a block of equal singular values the SVD factors are only fixed up
//! to a `k×k` unitary `W`: `A' = A·W`, `B' = B·conj(W)` leaves `Σ A'_k ⊗ B'_k`
//! unchanged. We search for a `W` that makes every `√d·A'_k` and `√d·B'_k`
//! unitary by Levenberg–Marquardt on the residuals `d·X†X − I`, with a Cayley
//! parametrization `W ← W·(I − iH/2)⁻¹(I + iH/2)` and an analytic Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::liouville::C64;
use crate::random::{haar_unitary, stream_rng};

const MAX_ITER: usize = 300;
const RESTARTS: u64 = 24;
const RESIDUAL_TOL: f64 = 1e-11;
/// Accepted on stall. Near-degenerate neighbouring blocks leave an SVD
/// subspace error that floors the residual above `RESIDUAL_TOL`.
const ACCEPT_TOL: f64 = 1e-9;
const RESTART_SEED: u64 = 0x6b61_6b5f_626c_6f63;

/// Hermitian generators with zero diagonal (diagonal phases do not change
/// the residual).
fn generators(k: usize) -> Vec<DMatrix<C64>> {
    let mut out = Vec::with_capacity(k * (k - 1));
    for p in 0..k {
        for q in (p + 1)..k {
            let mut s = DMatrix::zeros(k, k);
            s[(p, q)] = C64::new(1.0, 0.0);
            s[(q, p)] = C64::new(1.0, 0.0);
            out.push(s);
            let mut t = DMatrix::zeros(k, k);
            t[(p, q)] = C64::new(0.0, -1.0);
            t[(q, p)] = C64::new(0.0, 1.0);
            out.push(t);
        }
    }
    out
}

fn cayley(h: &DMatrix<C64>) -> DMatrix<C64> {
    let k = h.nrows();
    let id = DMatrix::<C64>::identity(k, k);
    let half_i = C64::new(0.0, 0.5);
    let minus = &id - h * half_i;
    let plus = &id + h * half_i;
    minus.lu().solve(&plus).expect("I - iH/2 is invertible for Hermitian H")
}

struct Block<'a> {
    a: &'a [DMatrix<C64>],
    b: &'a [DMatrix<C64>],
    da: f64,
    db: f64,
}

impl Block<'_> {
    fn rotated(&self, w: &DMatrix<C64>) -> (Vec<DMatrix<C64>>, Vec<DMatrix<C64>>) {
        let k = self.a.len();
        let mut a_rot = Vec::with_capacity(k);
        let mut b_rot = Vec::with_capacity(k);
        for col in 0..k {
            let mut ac = DMatrix::zeros(self.a[0].nrows(), self.a[0].ncols());
            let mut bc = DMatrix::zeros(self.b[0].nrows(), self.b[0].ncols());
            for l in 0..k {
                ac += &self.a[l] * w[(l, col)];
                bc += &self.b[l] * w[(l, col)].conj();
            }
            a_rot.push(ac);
            b_rot.push(bc);
        }
        (a_rot, b_rot)
    }

    fn residual(&self, a_rot: &[DMatrix<C64>], b_rot: &[DMatrix<C64>]) -> DVector<f64> {
        let mut r = Vec::new();
        let mut push = |x: &DMatrix<C64>, d: f64| {
            let g = x.adjoint() * x * C64::new(d, 0.0);
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let v = g[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                    r.push(v.re);
                    r.push(v.im);
                }
            }
        };
        for x in a_rot {
            push(x, self.da);
        }
        for x in b_rot {
            push(x, self.db);
        }
        DVector::from_vec(r)
    }

    fn jacobian(&self, a_rot: &[DMatrix<C64>], b_rot: &[DMatrix<C64>], gens: &[DMatrix<C64>], n_res: usize) -> DMatrix<f64> {
        let k = a_rot.len();
        let i = C64::new(0.0, 1.0);
        let mut jac = DMatrix::zeros(n_res, gens.len());
        for (p, g) in gens.iter().enumerate() {
            let mut row = 0;
            let mut push = |x: &DMatrix<C64>, dx: &DMatrix<C64>, d: f64, row: &mut usize| {
                let dg = (dx.adjoint() * x + x.adjoint() * dx) * C64::new(d, 0.0);
                for r in 0..dg.nrows() {
                    for c in 0..dg.ncols() {
                        jac[(*row, p)] = dg[(r, c)].re;
                        jac[(*row + 1, p)] = dg[(r, c)].im;
                        *row += 2;
                    }
                }
            };
            for col in 0..k {
                let mut dx = DMatrix::zeros(a_rot[0].nrows(), a_rot[0].ncols());
                for j in 0..k {
                    dx += &a_rot[j] * (i * g[(j, col)]);
                }
                push(&a_rot[col], &dx, self.da, &mut row);
            }
            for col in 0..k {
                let mut dx = DMatrix::zeros(b_rot[0].nrows(), b_rot[0].ncols());
                for j in 0..k {
                    dx -= &b_rot[j] * (i * g[(j, col)].conj());
                }
                push(&b_rot[col], &dx, self.db, &mut row);
            }
        }
        jac
    }

    fn solve_from(&self, mut w: DMatrix<C64>, gens: &[DMatrix<C64>]) -> Option<DMatrix<C64>> {
        let (mut a_rot, mut b_rot) = self.rotated(&w);
        let mut r = self.residual(&a_rot, &b_rot);
        let mut cost = r.norm_squared();
        let mut mu = 1e-3;
        for _ in 0..MAX_ITER {
            if cost.sqrt() < RESIDUAL_TOL {
                return Some(w);
            }
            let jac = self.jacobian(&a_rot, &b_rot, gens, r.len());
            let jtj = jac.transpose() * &jac;
            let rhs = -(jac.transpose() * &r);
            let mut improved = false;
            for _ in 0..12 {
                let mut lhs = jtj.clone();
                for d in 0..lhs.nrows() {
                    lhs[(d, d)] += mu * (1.0 + jtj[(d, d)]);
                }
                let Some(step) = lhs.lu().solve(&rhs) else {
                    mu *= 10.0;
                    continue;
                };
                let mut h = DMatrix::zeros(w.nrows(), w.ncols());
                for (g, s) in gens.iter().zip(step.iter()) {
                    h += g * C64::new(*s, 0.0);
                }
                let w_new = &w * cayley(&h);
                let (a_new, b_new) = self.rotated(&w_new);
                let r_new = self.residual(&a_new, &b_new);
                let c_new = r_new.norm_squared();
                if c_new < cost {
                    w = w_new;
                    a_rot = a_new;
                    b_rot = b_new;
                    r = r_new;
                    cost = c_new;
                    mu = (mu / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
                mu *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (cost.sqrt() < ACCEPT_TOL).then_some(w)
    }
}

type FactorPair = (Vec<DMatrix<C64>>, Vec<DMatrix<C64>>);

/// Finds `W` making the rotated block factors unitary after scaling by
/// `√d_A`, `√d_B`. Factors must be Hilbert–Schmidt orthonormal on input.
/// Returns the rotated `(A', B')`, still HS-normalized.
pub(crate) fn unitarize_block(
    a: &[DMatrix<C64>],
    b: &[DMatrix<C64>],
    dims: (usize, usize),
) -> Option<FactorPair> {
    let k = a.len();
    if k < 2 {
        return None;
    }
    let block = Block {
        a,
        b,
        da: dims.0 as f64,
        db: dims.1 as f64,
    };
    let gens = generators(k);
    for attempt in 0..=RESTARTS {
        let w0 = if attempt == 0 {
            DMatrix::identity(k, k)
        } else {
            haar_unitary(k, &mut stream_rng(RESTART_SEED, attempt)).into_inner()
        };
        if let Some(w) = block.solve_from(w0, &gens) {
            return Some(block.rotated(&w));
        }
    }
    None
}
