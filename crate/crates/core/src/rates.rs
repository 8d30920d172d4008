//! Per-user downlink spectral efficiency under three levels of user-side CSI
//! and the resulting net throughput.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, ChannelRealization, GainMoments};
use crate::matrix::Matrix;

/// How much the users know about their effective channel gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiMode {
    /// Only `E{a_kk}`; no downlink pilots.
    Statistical,
    /// LMMSE estimate from beamformed downlink pilots.
    BeamformingTraining,
    /// Genie knowledge of every `a_kk'`.
    Perfect,
}

impl CsiMode {
    pub const ALL: [CsiMode; 3] = [CsiMode::Statistical, CsiMode::BeamformingTraining, CsiMode::Perfect];

    pub fn as_str(self) -> &'static str {
        match self {
            CsiMode::Statistical => "statistical",
            CsiMode::BeamformingTraining => "beamforming_training",
            CsiMode::Perfect => "perfect",
        }
    }

    /// Pilot samples spent per coherence interval in this mode.
    pub fn overhead(self, tau_up: usize, tau_dp: usize) -> usize {
        match self {
            CsiMode::BeamformingTraining => tau_up + tau_dp,
            CsiMode::Statistical | CsiMode::Perfect => tau_up,
        }
    }

    /// Whether evaluating this mode needs small-scale Monte Carlo.
    pub fn needs_sampling(self) -> bool {
        !matches!(self, CsiMode::Statistical)
    }
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "statistical" => Ok(CsiMode::Statistical),
            "beamforming_training" => Ok(CsiMode::BeamformingTraining),
            "perfect" => Ok(CsiMode::Perfect),
            _ => Err(Error::InvalidArgument(
                "unknown CSI mode (expected statistical, beamforming_training or perfect)",
            )),
        }
    }
}

/// Gross SE and net throughput of every user in one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub mode: CsiMode,
    /// bit/s/Hz.
    pub gross_se: Vec<f64>,
    /// bit/s.
    pub net_throughput: Vec<f64>,
    /// Pilot overhead in samples.
    pub overhead: usize,
}

impl RateReport {
    pub fn new(mode: CsiMode, gross_se: Vec<f64>, bandwidth: f64, tau: usize, tau_up: usize, tau_dp: usize) -> Result<Self> {
        let overhead = mode.overhead(tau_up, tau_dp);
        let net_throughput = net_throughput(&gross_se, bandwidth, tau, overhead)?;
        Ok(Self {
            mode,
            gross_se,
            net_throughput,
            overhead,
        })
    }
}

/// Statistical-CSI SINR of every user:
/// `ρ_d (Σ_m √η_mk γ_mk)² / (ρ_d Σ_k' ς_kk' + 1)`.
pub fn statistical_sinr(moments: &GainMoments, rho_d: f64) -> Vec<f64> {
    (0..moments.num_users())
        .map(|k| {
            let mean = moments.mean_akk[k];
            let total: f64 = moments.varsigma.row(k).iter().sum();
            rho_d * mean * mean / (rho_d * total + 1.0)
        })
        .collect()
}

/// Closed-form SE when users only know `E{a_kk}`.
pub fn se_statistical(beta: &Matrix<f64>, gamma: &Matrix<f64>, eta: &Matrix<f64>, rho_d: f64) -> Result<Vec<f64>> {
    let moments = estimation::gain_moments(beta, gamma, eta, 0, 0.0)?;
    Ok(se_statistical_from_moments(&moments, rho_d))
}

pub fn se_statistical_from_moments(moments: &GainMoments, rho_d: f64) -> Vec<f64> {
    statistical_sinr(moments, rho_d)
        .into_iter()
        .map(|s| libm::log2(1.0 + s))
        .collect()
}

/// Running mean and standard error of K per-user quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAccumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    count: usize,
}

impl UserAccumulator {
    pub fn new(num_users: usize) -> Self {
        Self {
            sum: vec![0.0; num_users],
            sum_sq: vec![0.0; num_users],
            count: 0,
        }
    }

    /// Adds one sample per user.
    pub fn push(&mut self, values: impl IntoIterator<Item = f64>) {
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(values) {
            *s += v;
            *q += v * v;
        }
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Standard error of each mean; zero with fewer than two samples.
    pub fn std_error(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.sum.len()];
        }
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let mean = s / n;
                let var = ((q - n * mean * mean) / (n - 1.0)).max(0.0);
                libm::sqrt(var / n)
            })
            .collect()
    }
}

/// Per-realization term of the beamforming-training rate. Holds the
/// deterministic denominators `ρ_d E{|ã_kk|²} + ρ_d Σ_{k'≠k} ς_kk' + 1`.
#[derive(Debug, Clone)]
pub struct TrainingRate<'a> {
    moments: &'a GainMoments,
    rho_d: f64,
    denominators: Vec<f64>,
}

impl<'a> TrainingRate<'a> {
    pub fn new(moments: &'a GainMoments, rho_d: f64) -> Self {
        let denominators = (0..moments.num_users())
            .map(|k| rho_d * moments.err_var[k] + rho_d * moments.interference(k) + 1.0)
            .collect();
        Self {
            moments,
            rho_d,
            denominators,
        }
    }

    /// `log2(1 + ρ_d |â_kk|² / denominator_k)` for user `k`, where `â_kk`
    /// comes from the pilot observation built from `a_kk` and `pilot_noise`.
    #[inline]
    pub fn term(&self, k: usize, a_kk: Complex64, pilot_noise: Complex64) -> f64 {
        let y = a_kk * libm::sqrt(self.moments.pilot_snr) + pilot_noise;
        let a_hat = estimation::lmmse_effective_gain(y, self.moments, k);
        libm::log2(1.0 + self.rho_d * a_hat.norm_sqr() / self.denominators[k])
    }
}

/// One joint draw for the beamforming-training expectation: the true `a_kk`
/// of every user and the `CN(0,1)` noise on each user's projected pilot.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSample<'a> {
    pub a_diag: &'a [Complex64],
    pub pilot_noise: &'a [Complex64],
}

/// Monte Carlo beamforming-training SE: the mean over samples of
/// `log2(1 + ρ_d |â_kk|² / (ρ_d E{|ã_kk|²} + ρ_d Σ_{k'≠k} ς_kk' + 1))`.
/// The pilot SNR `τ_dp ρ_dp` is the one stored in `moments`.
pub fn se_beamforming_training<'s>(
    moments: &GainMoments,
    rho_d: f64,
    samples: impl IntoIterator<Item = TrainingSample<'s>>,
) -> Result<Vec<f64>> {
    let rate = TrainingRate::new(moments, rho_d);
    let k_count = moments.num_users();
    let mut acc = UserAccumulator::new(k_count);
    for s in samples {
        if s.a_diag.len() != k_count || s.pilot_noise.len() != k_count {
            return Err(Error::DimensionMismatch {
                expected: (k_count, 1),
                found: (s.a_diag.len().min(s.pilot_noise.len()), 1),
            });
        }
        acc.push((0..k_count).map(|k| rate.term(k, s.a_diag[k], s.pilot_noise[k])));
    }
    if acc.count() == 0 {
        return Err(Error::Empty);
    }
    Ok(acc.mean())
}

/// Genie SE term of every user for one realization of the gains.
pub fn perfect_terms(a: &Matrix<Complex64>, rho_d: f64) -> impl Iterator<Item = f64> + '_ {
    (0..a.rows()).map(move |k| {
        let row = a.row(k);
        let total: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        let own = row[k].norm_sqr();
        libm::log2(1.0 + rho_d * own / (rho_d * (total - own).max(0.0) + 1.0))
    })
}

/// Monte Carlo perfect-CSI SE over the given channel realizations.
pub fn se_perfect<'r>(
    realizations: impl IntoIterator<Item = &'r ChannelRealization>,
    eta: &Matrix<f64>,
    rho_d: f64,
) -> Result<Vec<f64>> {
    let mut acc = UserAccumulator::new(eta.cols());
    for r in realizations {
        let gains = estimation::effective_gains(r, eta)?;
        acc.push(perfect_terms(&gains.a, rho_d));
    }
    if acc.count() == 0 {
        return Err(Error::Empty);
    }
    Ok(acc.mean())
}

/// `S_k = B (1 − τ_oh/τ) / 2 · R_k` in bit/s.
pub fn net_throughput(gross_se: &[f64], bandwidth: f64, tau: usize, overhead: usize) -> Result<Vec<f64>> {
    if overhead >= tau {
        return Err(Error::InvalidArgument("pilot overhead must be shorter than the coherence interval"));
    }
    let factor = bandwidth * (1.0 - overhead as f64 / tau as f64) / 2.0;
    Ok(gross_se.iter().map(|r| factor * r).collect())
}
