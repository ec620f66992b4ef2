//! Seeded random matrices.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::liouville::{ComplexMatrix, C64};

/// Haar-distributed `d×d` unitary: QR of a complex Ginibre matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    assert!(d >= 1, "dimension must be at least 1");
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::new(q)
}

/// ChaCha8 stream `stream` of generator `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_unitary() {
        let mut rng = stream_rng(7, 0);
        for d in 1..=6 {
            assert!(haar_unitary(d, &mut rng).is_unitary(1e-12));
        }
    }

    #[test]
    fn same_stream_same_matrix() {
        let a = haar_unitary(4, &mut stream_rng(3, 9));
        let b = haar_unitary(4, &mut stream_rng(3, 9));
        assert_eq!(a, b);
        let c = haar_unitary(4, &mut stream_rng(3, 10));
        assert_ne!(a, c);
    }
}
