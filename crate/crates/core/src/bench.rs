//! Haar-random overhead histograms and the controlled-phase sweep.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{break_even_closed_form, break_even_svd, cphase_tradeoff, CphaseTradeoff};
use crate::error::{KnitError, Result};
use crate::exec::{map_indexed, Execution};
use crate::schmidt::operator_schmidt;

pub use crate::random::{haar_unitary, stream_rng};

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_BINS: usize = 100;
const SHARD: usize = 1024;

/// Record of one benchmark run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchManifest {
    pub seed: u64,
    pub samples: usize,
    pub bins: usize,
    pub outputs: Vec<PathBuf>,
    /// Seconds.
    pub wall_time: f64,
}

impl BenchManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Overheads of one pair of parallel two-qubit gates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub gamma_free: f64,
    pub gamma_bell: f64,
}

/// Draws `U`, `V` from stream `index` and evaluates the product decomposition.
pub fn pair_sample(seed: u64, index: u64) -> Result<PairSample> {
    let mut rng = stream_rng(seed, index);
    let u = haar_unitary(4, &mut rng);
    let v = haar_unitary(4, &mut rng);
    let lu = operator_schmidt(&u, (2, 2))?;
    let lv = operator_schmidt(&v, (2, 2))?;
    let mut pair: Vec<f64> = lu
        .lambdas
        .iter()
        .flat_map(|a| lv.lambdas.iter().map(move |b| a * b))
        .collect();
    pair.sort_by(|a, b| b.total_cmp(a));
    let l1: f64 = pair.iter().sum();
    let gamma_bell = l1 * l1;
    Ok(PairSample {
        gamma_free: 2.0 * gamma_bell - 1.0,
        gamma_bell,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

fn summarize(xs: &[f64]) -> Summary {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let median = if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) };
    Summary {
        mean: s.iter().sum::<f64>() / n as f64,
        median,
        min: s[0],
        max: s[n - 1],
    }
}

/// Binned overhead distributions of parallel Haar-random gate pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fig4Histogram {
    pub seed: u64,
    pub bins: usize,
    pub samples: Vec<PairSample>,
    /// `bins + 1` edges spanning `[1, max gamma_free]`.
    pub edges: Vec<f64>,
    pub density_free: Vec<f64>,
    pub density_bell: Vec<f64>,
    pub free: Summary,
    pub bell: Summary,
}

impl Fig4Histogram {
    /// `median(gamma_bell) / median(gamma_free)`.
    pub fn median_ratio(&self) -> f64 {
        self.bell.median / self.free.median
    }

    /// Samples where `gamma_bell != (gamma_free + 1)/2` bit for bit.
    pub fn identity_violations(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| s.gamma_bell.to_bits() != ((s.gamma_free + 1.0) / 2.0).to_bits())
            .count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# manifest: seed={},samples={},bins={}", self.seed, self.samples.len(), self.bins).unwrap();
        writeln!(
            out,
            "# summary: mean_free={:e},median_free={:e},mean_bell={:e},median_bell={:e}",
            self.free.mean, self.free.median, self.bell.mean, self.bell.median
        )
        .unwrap();
        let edges: Vec<String> = self.edges.iter().map(|e| format!("{e:e}")).collect();
        writeln!(out, "# edges: {}", edges.join(",")).unwrap();
        out.push_str("gamma_free_bin_left,density_free,density_bell\n");
        for k in 0..self.bins {
            writeln!(out, "{:e},{:e},{:e}", self.edges[k], self.density_free[k], self.density_bell[k]).unwrap();
        }
        out
    }

    /// One row per sample.
    pub fn raw_csv(&self) -> String {
        let mut out = format!("# manifest: seed={},samples={}\nindex,gamma_free,gamma_bell\n", self.seed, self.samples.len());
        for (i, s) in self.samples.iter().enumerate() {
            writeln!(out, "{i},{:e},{:e}", s.gamma_free, s.gamma_bell).unwrap();
        }
        out
    }
}

fn densities(xs: &[f64], edges: &[f64]) -> Vec<f64> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let k = if width > 0.0 { ((x - lo) / width).floor() as isize } else { 0 };
        counts[k.clamp(0, bins as isize - 1) as usize] += 1;
    }
    let norm = if width > 0.0 { xs.len() as f64 * width } else { xs.len() as f64 };
    counts.into_iter().map(|c| c as f64 / norm).collect()
}

/// Samples `samples` gate pairs (sample `i` uses stream `i` of `seed`) and
/// bins both overheads on shared fixed-width edges over `[1, max gamma_free]`.
pub fn fig4_histogram(samples: usize, seed: u64, bins: usize, exec: Execution) -> Result<Fig4Histogram> {
    if samples == 0 {
        return Err(KnitError::Validation("samples must be at least 1".into()));
    }
    if bins == 0 {
        return Err(KnitError::Validation("bins must be at least 1".into()));
    }
    let shards = samples.div_ceil(SHARD);
    let parts = map_indexed(shards, exec, |s| {
        (s * SHARD..((s + 1) * SHARD).min(samples))
            .map(|i| pair_sample(seed, i as u64))
            .collect::<Result<Vec<_>>>()
    });
    let mut all = Vec::with_capacity(samples);
    for p in parts {
        all.extend(p?);
    }
    let free: Vec<f64> = all.iter().map(|s| s.gamma_free).collect();
    let bell: Vec<f64> = all.iter().map(|s| s.gamma_bell).collect();
    let fs = summarize(&free);
    let hi = fs.max.max(1.0);
    let edges: Vec<f64> = (0..=bins).map(|k| 1.0 + (hi - 1.0) * k as f64 / bins as f64).collect();
    Ok(Fig4Histogram {
        seed,
        bins,
        density_free: densities(&free, &edges),
        density_bell: densities(&bell, &edges),
        edges,
        bell: summarize(&bell),
        free: fs,
        samples: all,
    })
}

/// `n` evenly spaced angles on `[−π, π]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    use std::f64::consts::PI;
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| -PI + 2.0 * PI * k as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CphaseSweep {
    pub seed: u64,
    pub rows: Vec<CphaseTradeoff>,
    /// Positive angle where the closed-form Bell usage reaches 1.
    pub break_even_closed_form: f64,
    /// Positive angle where the decomposition-derived Bell usage reaches 1.
    pub break_even_svd: f64,
}

impl CphaseSweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# manifest: seed={},points={}", self.seed, self.rows.len()).unwrap();
        writeln!(
            out,
            "# break_even: closed_form_theta={:e},svd_theta={:e}",
            self.break_even_closed_form, self.break_even_svd
        )
        .unwrap();
        out.push_str("theta,gamma_free,gamma_bell,p_bell,expected_bells_svd,expected_bells_closed_form,closed_form_within_one\n");
        for r in &self.rows {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{}",
                r.theta,
                r.gamma_free,
                r.gamma_bell,
                r.p_bell,
                r.expected_bells_svd,
                r.expected_bells_closed_form,
                u8::from(r.expected_bells_closed_form <= 1.0)
            )
            .unwrap();
        }
        out
    }
}

/// Evaluates the controlled-phase trade-off on every angle of `grid`.
///
/// The sweep is deterministic; `seed` is recorded for the manifest only.
pub fn cphase_sweep(grid: &[f64], seed: u64) -> Result<CphaseSweep> {
    if grid.is_empty() {
        return Err(KnitError::Validation("theta grid is empty".into()));
    }
    Ok(CphaseSweep {
        seed,
        rows: grid.iter().map(|&t| cphase_tradeoff(t)).collect::<Result<_>>()?,
        break_even_closed_form: break_even_closed_form(),
        break_even_svd: break_even_svd(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_trace_moment() {
        let mut rng = stream_rng(21, 0);
        let n = 10_000;
        let m: f64 = (0..n).map(|_| haar_unitary(4, &mut rng).trace().norm_sqr()).sum::<f64>() / n as f64;
        assert!((0.9..=1.1).contains(&m), "{m}");
    }

    #[test]
    fn haar_left_invariance() {
        let v = haar_unitary(4, &mut stream_rng(99, 0));
        let stat = |left: bool, stream: u64| -> Vec<f64> {
            let mut rng = stream_rng(22, stream);
            (0..2000)
                .map(|_| {
                    let u = haar_unitary(4, &mut rng);
                    let w = if left { &v * &u } else { u };
                    operator_schmidt(&w, (2, 2)).unwrap().l1_sq()
                })
                .collect()
        };
        let (a, b) = (stat(false, 1), stat(true, 2));
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let var = |x: &[f64], m: f64| x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64;
        let (ma, mb) = (mean(&a), mean(&b));
        let se = (var(&a, ma) / a.len() as f64 + var(&b, mb) / b.len() as f64).sqrt();
        assert!((ma - mb).abs() < 2.0 * se, "{ma} vs {mb} (se {se})");
    }

    #[test]
    fn pair_l1_is_multiplicative() {
        let mut rng = stream_rng(4, 0);
        for _ in 0..20 {
            let u = haar_unitary(4, &mut rng);
            let v = haar_unitary(4, &mut rng);
            let lu = operator_schmidt(&u, (2, 2)).unwrap();
            let lv = operator_schmidt(&v, (2, 2)).unwrap();
            let pair: f64 = lu.lambdas.iter().flat_map(|a| lv.lambdas.iter().map(move |b| a * b)).sum();
            assert!((pair - lu.l1() * lv.l1()).abs() < 1e-10);
        }
    }

    #[test]
    fn single_sample_is_deterministic() {
        let a = fig4_histogram(1, 5, 10, Execution::Sequential).unwrap();
        let b = fig4_histogram(1, 5, 10, Execution::Parallel).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.raw_csv().lines().count(), 3);
        assert_eq!(a.identity_violations(), 0);
    }

    #[test]
    fn histogram_shape_and_reproducibility() {
        let a = fig4_histogram(3000, 8, 40, Execution::Parallel).unwrap();
        let b = fig4_histogram(3000, 8, 40, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.identity_violations(), 0);
        let w = a.edges[1] - a.edges[0];
        let mass: f64 = a.density_free.iter().map(|d| d * w).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        let csv = a.to_csv();
        assert!(csv.starts_with("# manifest: seed=8,samples=3000,bins=40\n"));
        assert!(csv.contains("\ngamma_free_bin_left,density_free,density_bell\n"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 41);
        assert!(a.free.min >= 1.0 && a.bell.max <= 16.0 + 1e-9);
    }

    #[test]
    fn rejects_empty_inputs() {
        assert!(fig4_histogram(0, 1, 10, Execution::Sequential).is_err());
        assert!(fig4_histogram(1, 1, 0, Execution::Sequential).is_err());
        assert!(cphase_sweep(&[], 0).is_err());
    }

    #[test]
    fn cphase_sweep_rows() {
        let s = cphase_sweep(&theta_grid(41), 0).unwrap();
        let zero = &s.rows[20];
        assert!(zero.theta.abs() < 1e-15);
        for v in [zero.p_bell, zero.expected_bells_svd, zero.expected_bells_closed_form] {
            assert!(v.abs() < 1e-12);
        }
        assert!((zero.gamma_free - 1.0).abs() < 1e-12 && (zero.gamma_bell - 1.0).abs() < 1e-12);
        for k in 0..41 {
            let (a, b) = (&s.rows[k], &s.rows[40 - k]);
            assert!((a.gamma_bell - b.gamma_bell).abs() < 1e-10);
            assert!((a.expected_bells_closed_form - b.expected_bells_closed_form).abs() < 1e-12);
        }
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 3 + 41);
    }
}
