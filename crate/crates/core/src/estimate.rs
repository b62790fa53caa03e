//! Shot-level sample collection and summary statistics.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::ShotRng;

/// Runs `shots` independent evaluations of a per-shot closure.
///
/// Implementations must return the samples in shot order so that reductions are
/// independent of scheduling.
pub trait ShotExecutor: Sync {
    fn run(&self, shots: usize, sample: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64>;
}

/// Runs shots one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl ShotExecutor for Sequential {
    fn run(&self, shots: usize, sample: &(dyn Fn(usize) -> f64 + Sync)) -> Vec<f64> {
        (0..shots).map(sample).collect()
    }
}

/// Draws `shots` samples, shot `i` from stream `i` of `seed`.
pub fn collect<E, F>(executor: &E, shots: usize, seed: u64, draw: F) -> Result<Vec<f64>>
where
    E: ShotExecutor + ?Sized,
    F: Fn(&mut ShotRng) -> f64 + Sync,
{
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    Ok(executor.run(shots, &|i| {
        let mut rng = ShotRng::new(seed, i as u64);
        draw(&mut rng)
    }))
}

/// Mean and unbiased sample variance of a run of shots.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientEstimate {
    pub mean: f64,
    pub sample_variance: f64,
    pub shots: usize,
    pub seed: u64,
    pub estimator: String,
}

impl GradientEstimate {
    pub fn from_samples(samples: &[f64], seed: u64, estimator: impl Into<String>) -> Result<Self> {
        let (mean, sample_variance) = mean_variance(samples)?;
        Ok(GradientEstimate { mean, sample_variance, shots: samples.len(), seed, estimator: estimator.into() })
    }

    /// Deterministic value wrapped as an estimate with zero variance.
    pub fn exact(value: f64, estimator: impl Into<String>) -> Self {
        GradientEstimate { mean: value, sample_variance: 0.0, shots: 1, seed: 0, estimator: estimator.into() }
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.sample_variance)
    }

    /// Standard error of the mean.
    pub fn sem(&self) -> f64 {
        libm::sqrt(self.sample_variance / self.shots as f64)
    }
}

/// Sequential two-pass mean and unbiased variance (zero for a single sample).
pub fn mean_variance(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::ZeroShots);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok((mean, var))
}

/// Upper 99% quantile of `χ²_k / k` by the Wilson–Hilferty approximation.
pub fn chi2_upper_99_ratio(dof: usize) -> f64 {
    const Z99: f64 = 2.326_347_874;
    let k = dof as f64;
    let a = 2.0 / (9.0 * k);
    let base = 1.0 - a + Z99 * libm::sqrt(a);
    base * base * base
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_variance_small() {
        let (m, v) = mean_variance(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(mean_variance(&[7.0]).unwrap(), (7.0, 0.0));
        assert_eq!(mean_variance(&[]).unwrap_err(), Error::ZeroShots);
    }

    #[test]
    fn collect_is_order_independent_of_executor() {
        let a = collect(&Sequential, 10, 42, |r| r.uniform()).unwrap();
        let b: Vec<f64> = (0..10).map(|i| ShotRng::new(42, i).uniform()).collect();
        assert_eq!(a, b);
        assert_eq!(collect(&Sequential, 0, 1, |r| r.uniform()).unwrap_err(), Error::ZeroShots);
    }

    #[test]
    fn chi2_quantile_close_to_tables() {
        // tabulated χ²_{0.99}: k=10 → 23.209, k=100 → 135.807
        assert!((chi2_upper_99_ratio(10) * 10.0 - 23.209).abs() < 0.05);
        assert!((chi2_upper_99_ratio(100) * 100.0 - 135.807).abs() < 0.05);
    }

    #[test]
    fn estimate_summary() {
        let e = GradientEstimate::from_samples(&[1.0, -1.0, 1.0, -1.0], 3, "spsr").unwrap();
        assert_eq!(e.mean, 0.0);
        assert!((e.sem() - libm::sqrt(4.0 / 3.0 / 4.0)).abs() < 1e-15);
        assert_eq!(e.seed, 3);
    }
}
