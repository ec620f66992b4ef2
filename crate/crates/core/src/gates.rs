//! Standard one- and two-qubit gates and helpers for building bipartite unitaries.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::liouville::{permute_operator, ComplexMatrix, C64, ONE, ZERO};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0])
}

pub fn hadamard() -> ComplexMatrix {
    let s = FRAC_1_SQRT_2;
    ComplexMatrix::from_real(2, 2, &[s, s, s, -s])
}

/// Control on the first qubit.
pub fn cnot() -> ComplexMatrix {
    ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, 1.0, 0.0,
        ],
    )
}

pub fn cz() -> ComplexMatrix {
    cphase(std::f64::consts::PI)
}

pub fn swap() -> ComplexMatrix {
    ComplexMatrix::from_real(
        4,
        4,
        &[
            1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    )
}

pub fn iswap() -> ComplexMatrix {
    let i = c(0.0, 1.0);
    ComplexMatrix::from_row_slice(
        4,
        4,
        &[
            ONE, ZERO, ZERO, ZERO, //
            ZERO, ZERO, i, ZERO, //
            ZERO, i, ZERO, ZERO, //
            ZERO, ZERO, ZERO, ONE,
        ],
    )
}

/// `diag(1, 1, 1, e^{iθ})`.
pub fn cphase(theta: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(4).into_inner();
    m[(3, 3)] = C64::from_polar(1.0, theta);
    ComplexMatrix::new(m)
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U`.
pub fn controlled(u: &ComplexMatrix) -> ComplexMatrix {
    let p0 = ComplexMatrix::projector(&[ONE, ZERO]);
    let p1 = ComplexMatrix::projector(&[ZERO, ONE]);
    &p0.kron(&ComplexMatrix::identity(u.nrows())) + &p1.kron(u)
}

/// Two gates acting in parallel, `U` on `(A₁, B₁)` and `V` on `(A₂, B₂)`,
/// returned on the bipartition `(A₁A₂) | (B₁B₂)`.
pub fn parallel(u: &ComplexMatrix, u_dims: (usize, usize), v: &ComplexMatrix, v_dims: (usize, usize)) -> ComplexMatrix {
    let joint = u.kron(v);
    let dims = [u_dims.0, u_dims.1, v_dims.0, v_dims.1];
    permute_operator(&joint, &dims, &[0, 2, 1, 3])
}

/// Single-qubit basis states by label: `0 1 + - r l` (r/l are the ±i eigenstates of Y).
pub fn qubit_state(label: char) -> Option<[C64; 2]> {
    let s = FRAC_1_SQRT_2;
    Some(match label {
        '0' => [ONE, ZERO],
        '1' => [ZERO, ONE],
        '+' => [c(s, 0.0), c(s, 0.0)],
        '-' => [c(s, 0.0), c(-s, 0.0)],
        'r' => [c(s, 0.0), c(0.0, s)],
        'l' => [c(s, 0.0), c(0.0, -s)],
        _ => return None,
    })
}

/// Eigenvector of a Pauli (`'X'`, `'Y'`, `'Z'`) with eigenvalue `sign`.
pub fn pauli_eigenstate(axis: char, sign: i8) -> [C64; 2] {
    let label = match (axis, sign > 0) {
        ('X', true) => '+',
        ('X', false) => '-',
        ('Y', true) => 'r',
        ('Y', false) => 'l',
        ('Z', true) => '0',
        _ => '1',
    };
    qubit_state(label).expect("known label")
}

pub fn pauli(label: char) -> Option<ComplexMatrix> {
    Some(match label {
        'I' => ComplexMatrix::identity(2),
        'X' => pauli_x(),
        'Y' => pauli_y(),
        'Z' => pauli_z(),
        _ => return None,
    })
}

/// Kronecker product of Pauli labels, e.g. `"ZZ"`.
pub fn pauli_string(s: &str) -> Option<ComplexMatrix> {
    let mut m = ComplexMatrix::identity(1);
    for ch in s.chars() {
        m = m.kron(&pauli(ch.to_ascii_uppercase())?);
    }
    Some(m)
}

/// Generalized Pauli shift `X|k⟩ = |k+1 mod d⟩`.
pub fn shift(d: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { ONE } else { ZERO })
}

/// Generalized Pauli clock `Z|k⟩ = ω^k |k⟩`.
pub fn clock(d: usize) -> ComplexMatrix {
    let w = 2.0 * std::f64::consts::PI / d as f64;
    ComplexMatrix::from_fn(d, d, |i, j| if i == j { C64::from_polar(1.0, w * i as f64) } else { ZERO })
}
