//! Per-drop Monte Carlo evaluation and the Gaussianity diagnostic for the
//! effective gains.
//!
//! Realization `s` of drop `d` is drawn from stream
//! `(seed, d, ChannelSample, s)`: first the small-scale fading and uplink
//! pilot noise of every AP/user pair (see [`ChannelRealization::redraw`]),
//! then one downlink pilot noise sample per user. The result of a drop
//! therefore does not depend on which modes are requested or on how drops are
//! scheduled.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{self, ChannelRealization, EstimationStats, GainMoments};
use crate::matrix::Matrix;
use crate::rates::{self, CsiMode, TrainingRate, UserAccumulator};
use crate::rng::{self, Role};
use crate::scenario::{self, Drop, LinkBudget, SystemConfig};
use crate::stats;

/// Geometry, link budget and uplink estimation statistics of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDrop {
    pub index: u64,
    pub drop: Drop,
    pub budget: LinkBudget,
    pub stats: EstimationStats,
}

impl PreparedDrop {
    pub fn new(config: &SystemConfig, index: u64) -> Self {
        let drop = scenario::generate_drop(config, index);
        Self::from_drop(config, index, drop)
    }

    pub fn from_drop(config: &SystemConfig, index: u64, drop: Drop) -> Self {
        let budget = config.link_budget();
        let stats = EstimationStats::new(&drop.beta, budget.tau_up, budget.rho_up);
        Self {
            index,
            drop,
            budget,
            stats,
        }
    }

    pub fn beta(&self) -> &Matrix<f64> {
        &self.drop.beta
    }

    pub fn gamma(&self) -> &Matrix<f64> {
        &self.stats.gamma
    }

    pub fn moments(&self, eta: &Matrix<f64>) -> Result<GainMoments> {
        estimation::gain_moments(&self.drop.beta, &self.stats.gamma, eta, self.budget.tau_dp, self.budget.rho_dp)
    }
}

/// Gross SE of every user in one mode, with the Monte Carlo standard error
/// (zero for the closed-form statistical mode).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRates {
    pub mode: CsiMode,
    pub gross_se: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropRates {
    pub drop: u64,
    /// In the order the modes were requested.
    pub modes: Vec<ModeRates>,
    /// Standard error of the paired per-sample difference perfect − training,
    /// when both modes were evaluated.
    pub perfect_minus_training_std_error: Option<Vec<f64>>,
    pub samples: usize,
}

impl DropRates {
    pub fn get(&self, mode: CsiMode) -> Option<&ModeRates> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Evaluates the requested modes for one drop under power coefficients `eta`.
pub fn evaluate_drop(
    config: &SystemConfig,
    prepared: &PreparedDrop,
    eta: &Matrix<f64>,
    modes: &[CsiMode],
) -> Result<DropRates> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("no CSI mode requested"));
    }
    let beta = prepared.beta();
    if eta.shape() != beta.shape() {
        return Err(Error::DimensionMismatch {
            expected: beta.shape(),
            found: eta.shape(),
        });
    }
    let (m_count, k_count) = beta.shape();
    let budget = &prepared.budget;
    let moments = prepared.moments(eta)?;
    let want_training = modes.contains(&CsiMode::BeamformingTraining);
    let want_perfect = modes.contains(&CsiMode::Perfect);

    let mut training_acc = UserAccumulator::new(k_count);
    let mut perfect_acc = UserAccumulator::new(k_count);
    let mut diff_acc = UserAccumulator::new(k_count);
    let samples = if want_training || want_perfect {
        config.num_channel_samples
    } else {
        0
    };

    if samples > 0 {
        let sqrt_beta = beta.map(|b| libm::sqrt(*b));
        let sqrt_eta = eta.map(|e| libm::sqrt(*e));
        let training = TrainingRate::new(&moments, budget.rho_d);
        let mut realization = ChannelRealization::zeros(m_count, k_count);
        let mut gains = Matrix::zeros(k_count, k_count);
        let mut scratch = vec![Complex64::default(); k_count];
        let mut diag = vec![Complex64::default(); k_count];
        let mut noise = vec![Complex64::default(); k_count];
        let mut bt_terms = vec![0.0; k_count];
        let mut perfect_terms = vec![0.0; k_count];

        for s in 0..samples {
            let mut rng = rng::stream(config.rng_seed, prepared.index, Role::ChannelSample, s as u64);
            realization.redraw(&sqrt_beta, &prepared.stats, &mut rng);
            noise.iter_mut().for_each(|n| *n = rng::complex_normal(&mut rng));

            if want_perfect {
                estimation::effective_gains_into(&realization, &sqrt_eta, &mut gains, &mut scratch);
                for (k, d) in diag.iter_mut().enumerate() {
                    *d = gains[(k, k)];
                }
                for (t, v) in perfect_terms.iter_mut().zip(rates::perfect_terms(&gains, budget.rho_d)) {
                    *t = v;
                }
                perfect_acc.push(perfect_terms.iter().copied());
            } else {
                estimation::diagonal_gains_into(&realization, &sqrt_eta, &mut diag);
            }
            if want_training {
                for k in 0..k_count {
                    bt_terms[k] = training.term(k, diag[k], noise[k]);
                }
                training_acc.push(bt_terms.iter().copied());
            }
            if want_training && want_perfect {
                diff_acc.push(perfect_terms.iter().zip(&bt_terms).map(|(p, b)| p - b));
            }
        }
    }

    let rates = modes
        .iter()
        .map(|&mode| match mode {
            CsiMode::Statistical => ModeRates {
                mode,
                gross_se: rates::se_statistical_from_moments(&moments, budget.rho_d),
                std_error: vec![0.0; k_count],
            },
            CsiMode::BeamformingTraining => ModeRates {
                mode,
                gross_se: training_acc.mean(),
                std_error: training_acc.std_error(),
            },
            CsiMode::Perfect => ModeRates {
                mode,
                gross_se: perfect_acc.mean(),
                std_error: perfect_acc.std_error(),
            },
        })
        .collect();

    Ok(DropRates {
        drop: prepared.index,
        modes: rates,
        perfect_minus_training_std_error: (want_training && want_perfect).then(|| diff_acc.std_error()),
        samples,
    })
}

/// Joint samples of the full K × K effective-gain matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GainSamples {
    num_users: usize,
    data: Vec<Complex64>,
}

impl GainSamples {
    pub fn len(&self) -> usize {
        self.data.len() / (self.num_users * self.num_users)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// All samples of `a[k][k']`.
    pub fn entry(&self, k: usize, kp: usize) -> impl Iterator<Item = Complex64> + '_ {
        let kk = self.num_users * self.num_users;
        self.data.iter().skip(k * self.num_users + kp).step_by(kk).copied()
    }
}

/// Draws `n_samples` independent realizations of the effective gains from the
/// `(seed, drop, Diagnostic, s)` streams.
pub fn sample_effective_gains(
    seed: u64,
    prepared: &PreparedDrop,
    eta: &Matrix<f64>,
    n_samples: usize,
) -> Result<GainSamples> {
    let beta = prepared.beta();
    if eta.shape() != beta.shape() {
        return Err(Error::DimensionMismatch {
            expected: beta.shape(),
            found: eta.shape(),
        });
    }
    let (m_count, k_count) = beta.shape();
    let sqrt_beta = beta.map(|b| libm::sqrt(*b));
    let sqrt_eta = eta.map(|e| libm::sqrt(*e));
    let mut realization = ChannelRealization::zeros(m_count, k_count);
    let mut gains = Matrix::zeros(k_count, k_count);
    let mut scratch = vec![Complex64::default(); k_count];
    let mut data = Vec::with_capacity(n_samples * k_count * k_count);
    for s in 0..n_samples {
        let mut rng = rng::stream(seed, prepared.index, Role::Diagnostic, s as u64);
        realization.redraw(&sqrt_beta, &prepared.stats, &mut rng);
        estimation::effective_gains_into(&realization, &sqrt_eta, &mut gains, &mut scratch);
        data.extend_from_slice(gains.as_slice());
    }
    Ok(GainSamples {
        num_users: k_count,
        data,
    })
}

/// Minimum sample count accepted by [`gaussianity_diagnostic`].
pub const MIN_GAUSSIANITY_SAMPLES: usize = 10_000;

/// Gaussian references for one user's gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGaussianity {
    pub user: usize,
    /// `Σ_m √η_mk γ_mk`, the reference mean of `Re(a_kk)`.
    pub reference_mean: f64,
    /// `√(Σ_m η_mk γ_mk²)`, the reference standard deviation of `Re(a_kk)`.
    pub reference_std: f64,
    /// KS distance of `Re(a_kk)` to `N(reference_mean, reference_std²)`.
    pub ks_direct: f64,
    /// Largest KS distance over `k' ≠ k` and over real and imaginary parts of
    /// `a_kk'` to their `CN(0, ς_kk')` marginals `N(0, ς_kk'/2)`.
    pub ks_cross: f64,
    /// `mean|Im(a_kk)| / mean|Re(a_kk)|`.
    pub imag_to_real: f64,
}

/// Compares sampled effective gains with their Gaussian approximations.
pub fn gaussianity_from_samples(
    prepared: &PreparedDrop,
    eta: &Matrix<f64>,
    samples: &GainSamples,
) -> Result<Vec<UserGaussianity>> {
    let moments = prepared.moments(eta)?;
    let gamma = prepared.gamma();
    let k_count = samples.num_users();
    let mut out = Vec::with_capacity(k_count);
    for k in 0..k_count {
        let reference_mean = moments.mean_akk[k];
        let reference_std = libm::sqrt(
            (0..gamma.rows())
                .map(|m| eta[(m, k)] * gamma[(m, k)] * gamma[(m, k)])
                .sum::<f64>(),
        );
        let direct: Vec<Complex64> = samples.entry(k, k).collect();
        let re: Vec<f64> = direct.iter().map(|z| z.re).collect();
        let ks_direct = stats::ks_distance(&re, |x| stats::normal_cdf(x, reference_mean, reference_std))?;
        let abs_re: f64 = direct.iter().map(|z| libm::fabs(z.re)).sum();
        let abs_im: f64 = direct.iter().map(|z| libm::fabs(z.im)).sum();

        let mut ks_cross: f64 = 0.0;
        for kp in (0..k_count).filter(|&kp| kp != k) {
            let std = libm::sqrt(moments.varsigma[(k, kp)] / 2.0);
            let cross: Vec<Complex64> = samples.entry(k, kp).collect();
            for part in [
                cross.iter().map(|z| z.re).collect::<Vec<_>>(),
                cross.iter().map(|z| z.im).collect::<Vec<_>>(),
            ] {
                ks_cross = ks_cross.max(stats::ks_distance(&part, |x| stats::normal_cdf(x, 0.0, std))?);
            }
        }
        out.push(UserGaussianity {
            user: k,
            reference_mean,
            reference_std,
            ks_direct,
            ks_cross,
            imag_to_real: abs_im / abs_re,
        });
    }
    Ok(out)
}

/// Draws `n_samples` effective-gain realizations and compares them with the
/// Gaussian approximations.
pub fn gaussianity_diagnostic(
    config: &SystemConfig,
    prepared: &PreparedDrop,
    eta: &Matrix<f64>,
    n_samples: usize,
) -> Result<Vec<UserGaussianity>> {
    if n_samples < MIN_GAUSSIANITY_SAMPLES {
        return Err(Error::InvalidArgument("the Gaussianity diagnostic needs at least 10^4 samples"));
    }
    let samples = sample_effective_gains(config.rng_seed, prepared, eta, n_samples)?;
    gaussianity_from_samples(prepared, eta, &samples)
}
