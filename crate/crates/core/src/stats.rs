//! Monte-Carlo estimates with 3-sigma bands.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sample mean with standard error and a 3-sigma confidence band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub ci_lower: f64,
    pub ci_upper: f64,
}

impl MCEstimate {
    pub fn from_moments(sum: f64, sum_sq: f64, samples: u64) -> Self {
        if samples == 0 {
            return MCEstimate {
                mean: f64::NAN,
                stderr: f64::NAN,
                samples,
                ci_lower: f64::NAN,
                ci_upper: f64::NAN,
            };
        }
        let k = samples as f64;
        let mean = sum / k;
        let var = if samples > 1 {
            ((sum_sq - k * mean * mean) / (k - 1.0)).max(0.0)
        } else {
            0.0
        };
        let stderr = (var / k).sqrt();
        MCEstimate {
            mean,
            stderr,
            samples,
            ci_lower: mean - 3.0 * stderr,
            ci_upper: mean + 3.0 * stderr,
        }
    }

    /// True when `value` lies inside the band.
    pub fn covers(&self, value: f64) -> bool {
        self.ci_lower <= value && value <= self.ci_upper
    }
}

const CHUNK: u64 = 4096;

/// Estimate `E[f(sample)]` over `samples` indices. Each sample must derive its
/// randomness from its index alone; chunks are merged in index order, so the
/// result does not depend on the thread count.
pub fn mc_mean<F>(samples: u64, f: F) -> MCEstimate
where
    F: Fn(u64) -> f64 + Sync,
{
    let (sum, sum_sq) = mc_moments(samples, &f);
    MCEstimate::from_moments(sum, sum_sq, samples)
}

fn mc_moments<F>(samples: u64, f: &F) -> (f64, f64)
where
    F: Fn(u64) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (mut s, mut q) = (0.0, 0.0);
            for k in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let v = f(k);
                s += v;
                q += v * v;
            }
            (s, q)
        })
        .collect();
    parts
        .iter()
        .fold((0.0, 0.0), |(s, q), (a, b)| (s + a, q + b))
}

/// Like [`mc_mean`] for a vector-valued sample; every call must return
/// `dim` values.
pub fn mc_mean_vec<F>(samples: u64, dim: usize, f: F) -> Vec<MCEstimate>
where
    F: Fn(u64) -> Vec<f64> + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = vec![0.0; dim];
            let mut q = vec![0.0; dim];
            for k in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                for (d, v) in f(k).into_iter().enumerate() {
                    s[d] += v;
                    q[d] += v * v;
                }
            }
            (s, q)
        })
        .collect();
    let mut s = vec![0.0; dim];
    let mut q = vec![0.0; dim];
    for (ps, pq) in &parts {
        for d in 0..dim {
            s[d] += ps[d];
            q[d] += pq[d];
        }
    }
    (0..dim)
        .map(|d| MCEstimate::from_moments(s[d], q[d], samples))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_zero_error() {
        let e = mc_mean(10_000, |_| 2.5);
        assert_eq!(e.mean, 2.5);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.ci_lower, 2.5);
    }

    #[test]
    fn alternating_moments() {
        let e = mc_mean(10_000, |k| (k % 2) as f64);
        assert!((e.mean - 0.5).abs() < 1e-12);
        let sd = (0.25f64 * 10_000.0 / 9_999.0).sqrt();
        assert!((e.stderr - sd / 100.0).abs() < 1e-12);
        assert!(e.ci_lower <= e.mean && e.mean <= e.ci_upper);
    }

    #[test]
    fn vector_form_matches_scalar() {
        let v = mc_mean_vec(9_000, 2, |k| vec![(k % 3) as f64, 1.0]);
        let s = mc_mean(9_000, |k| (k % 3) as f64);
        assert_eq!(v[0], s);
        assert_eq!(v[1].mean, 1.0);
    }
}
