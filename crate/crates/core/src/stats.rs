//! Empirical CDFs, percentiles and Kolmogorov-Smirnov distances.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of samples exceeded by the "95%-likely" throughput.
pub const P95_LIKELY: f64 = 0.05;
pub const MEDIAN: f64 = 0.5;

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN"));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Right-continuous empirical CDF on the distinct sample values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSummary {
    /// `(value, F(value))` at each distinct sample, ascending.
    pub points: Vec<(f64, f64)>,
    pub sample_count: usize,
    /// 5th percentile.
    pub p95_likely: f64,
    pub median: f64,
}

impl CdfSummary {
    /// `F(x)`, the fraction of samples `≤ x`.
    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&(v, _)| v <= x);
        if idx == 0 {
            0.0
        } else {
            self.points[idx - 1].1
        }
    }
}

pub fn empirical_cdf(samples: &[f64]) -> Result<CdfSummary> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    for (i, &x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match points.last_mut() {
            Some(last) if last.0 == x => last.1 = f,
            _ => points.push((x, f)),
        }
    }
    Ok(CdfSummary {
        points,
        sample_count: v.len(),
        p95_likely: percentile_sorted(&v, P95_LIKELY),
        median: percentile_sorted(&v, MEDIAN),
    })
}

fn percentile_sorted(v: &[f64], p: f64) -> f64 {
    let h = p * (v.len() - 1) as f64;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Order statistic at fraction `p` with linear interpolation between the
/// closest ranks (rank `p·(n−1)`, zero-based).
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument("percentile fraction must lie in [0, 1]"));
    }
    Ok(percentile_sorted(&sorted(samples)?, p))
}

/// `Φ((x − mean)/std)`.
pub fn normal_cdf(x: f64, mean: f64, std: f64) -> f64 {
    0.5 * libm::erfc(-(x - mean) / (std * core::f64::consts::SQRT_2))
}

pub fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    libm::exp(-0.5 * z * z) / (std * libm::sqrt(2.0 * core::f64::consts::PI))
}

/// Kolmogorov-Smirnov distance `sup_x |F_n(x) − F(x)|` between the samples
/// and a continuous reference CDF.
pub fn ks_distance(samples: &[f64], reference_cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in v.iter().enumerate() {
        let f = reference_cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}
