//! Wire cuts: moving a `d`-level system from A to B.

use serde::{Deserialize, Serialize};

use super::{AncillaPrep, LocalOp, Locality, Povm, QpdConfig, QpdTerm};
use crate::error::{KnitError, Result};
use crate::gates::{clock, pauli_eigenstate, shift};
use crate::liouville::{kraus_superop, ComplexMatrix, Party, Superoperator, C64, ZERO};
use crate::schmidt::{fully_entangled_fraction, ResourceState};

/// Wire-cut overhead for a resource, with a runnable configuration when one
/// is constructed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WireCut {
    pub gamma: f64,
    pub fef: f64,
    pub config: Option<QpdConfig>,
    /// False when `gamma` comes from the closed form only.
    pub constructive: bool,
}

fn labeled(k: &ComplexMatrix, in_dims: [usize; 2], out_dims: [usize; 2], a_side: bool) -> Superoperator {
    let labels = if a_side {
        vec![Party::A, Party::AncillaA]
    } else {
        vec![Party::B, Party::AncillaB]
    };
    kraus_superop(std::slice::from_ref(k))
        .and_then(|s| s.reshaped(in_dims.to_vec(), out_dims.to_vec()))
        .and_then(|s| s.with_partition(labels))
        .expect("shape fixed by caller")
}

/// Qudit teleportation: A projects `(A, a)` onto `(M ⊗ I)|Φ_d⟩` with
/// `M = X^x Z^z`, sends `(x, z)`, and B applies `M` to `b`.
fn teleportation(d: usize) -> QpdConfig {
    let norm = 1.0 / (d as f64).sqrt();
    let mut phi = vec![ZERO; d * d];
    for i in 0..d {
        phi[i * d + i] = C64::new(norm, 0.0);
    }
    let phi_bra = ComplexMatrix::from_row_slice(1, d * d, &phi.iter().map(|z| z.conj()).collect::<Vec<_>>());
    let (x, z) = (shift(d), clock(d));
    let mut a_branches = Vec::with_capacity(d * d);
    let mut b_branches = Vec::with_capacity(d * d);
    let mut xp = ComplexMatrix::identity(d);
    for _ in 0..d {
        let mut m = xp.clone();
        for _ in 0..d {
            let ka = &phi_bra * &m.dagger().kron(&ComplexMatrix::identity(d));
            a_branches.push(labeled(&ka, [d, d], [1, 1], true));
            b_branches.push(labeled(&m, [1, d], [d, 1], false));
            m = &m * &z;
        }
        xp = &xp * &x;
    }
    QpdConfig {
        terms: vec![QpdTerm {
            label: "teleport".into(),
            prob: 1.0,
            pre: None,
            ancilla: AncillaPrep::Resource {
                state: ResourceState::Bell { d },
            },
            post: LocalOp::OneWayLocc { a_branches, b_branches },
            povm: Povm::trivial(),
            signs: vec![1],
        }],
        gamma: 1.0,
        resource: ResourceState::Bell { d },
        locality: Locality::Locc,
        in_dims: (d, 1),
        out_dims: (1, d),
    }
}

/// Qubit identity as `Σ_P [(2/3) MP_P − (1/3) MP_P^flip]`, where `MP_P`
/// measures `P` on A and B re-prepares the observed eigenstate, and the
/// flipped variant prepares the opposite one.
fn measure_prepare() -> QpdConfig {
    let mut terms = Vec::with_capacity(6);
    for axis in ['X', 'Y', 'Z'] {
        for flip in [false, true] {
            let mut a_branches = Vec::with_capacity(2);
            let mut b_branches = Vec::with_capacity(2);
            for s in [1i8, -1] {
                let e = pauli_eigenstate(axis, s);
                let bra = ComplexMatrix::from_row_slice(1, 2, &[e[0].conj(), e[1].conj()]);
                let prep = pauli_eigenstate(axis, if flip { -s } else { s });
                let ket = ComplexMatrix::from_row_slice(2, 1, &prep);
                a_branches.push(labeled(&bra, [2, 1], [1, 1], true));
                b_branches.push(labeled(&ket, [1, 1], [2, 1], false));
            }
            terms.push(QpdTerm {
                label: format!("{axis}{}", if flip { " flip" } else { "" }),
                prob: if flip { 1.0 / 9.0 } else { 2.0 / 9.0 },
                pre: None,
                ancilla: AncillaPrep::None,
                post: LocalOp::OneWayLocc { a_branches, b_branches },
                povm: Povm::trivial(),
                signs: vec![if flip { -1 } else { 1 }],
            });
        }
    }
    QpdConfig {
        terms,
        gamma: 3.0,
        resource: ResourceState::Separable,
        locality: Locality::Locc,
        in_dims: (2, 1),
        out_dims: (1, 2),
    }
}

/// Wire cut of a `d`-level system using `resource`: `γ = 2/F_d − 1`.
///
/// Constructive for a maximally entangled resource of matching dimension
/// (teleportation) and for a separable resource at `d = 2`.
pub fn build_wire_cut(resource: &ResourceState, d: usize) -> Result<WireCut> {
    if d < 2 {
        return Err(KnitError::Validation(format!("wire dimension {d} < 2")));
    }
    let fef = fully_entangled_fraction(resource, d)?;
    let gamma = 2.0 / fef - 1.0;
    let config = match resource {
        ResourceState::Bell { d: k } if *k == d => Some(teleportation(d)),
        ResourceState::Psi { r } if *r == 0.0 && d == 2 => Some(teleportation(2)),
        ResourceState::Separable if d == 2 => Some(measure_prepare()),
        _ => None,
    };
    Ok(WireCut {
        gamma,
        fef,
        constructive: config.is_some(),
        config,
    })
}
