//! Gaussianity check of the effective gains for one drop.

use cfmimo_core::montecarlo::{self, GainSamples, PreparedDrop, MIN_GAUSSIANITY_SAMPLES};
use cfmimo_core::{Error, PowerControlPolicy, SystemConfig};

use crate::error::RunError;
use crate::experiment::power_coefficients;
use crate::output::GaussianityReport;
use crate::socp;

pub const DEFAULT_GAUSSIANITY_SAMPLES: usize = 100_000;

/// Samples drop `drop` under `policy` and compares the gains with their
/// Gaussian references. Returns the report, the raw samples and `ς` of the
/// histogrammed cross pair.
pub fn run_gaussianity(
    config: &SystemConfig,
    drop: u64,
    policy: PowerControlPolicy,
    n_samples: usize,
    verbose: bool,
) -> Result<(GaussianityReport, GainSamples, Option<f64>), RunError> {
    config.validate()?;
    if n_samples < MIN_GAUSSIANITY_SAMPLES {
        return Err(Error::InvalidArgument("the Gaussianity diagnostic needs at least 10^4 samples").into());
    }
    let wrap = |source| RunError::Drop { drop, source };
    let prepared = PreparedDrop::new(config, drop);
    let (eta, _) = power_coefficients(&prepared, policy, &socp::default_settings(), verbose).map_err(wrap)?;
    let samples = montecarlo::sample_effective_gains(config.rng_seed, &prepared, &eta, n_samples).map_err(wrap)?;
    let users = montecarlo::gaussianity_from_samples(&prepared, &eta, &samples).map_err(wrap)?;
    let moments = prepared.moments(&eta).map_err(wrap)?;
    let cross_pair = (config.num_users > 1).then_some((0, 1));
    let report = GaussianityReport {
        drop,
        samples: n_samples,
        policy,
        direct_user: 0,
        cross_pair,
        direct_reference_mean: users[0].reference_mean,
        direct_reference_std: users[0].reference_std,
        cross_reference_std: cross_pair.map(|(a, b)| (moments.varsigma[(a, b)] / 2.0).sqrt()),
        max_ks_direct: users.iter().map(|u| u.ks_direct).fold(0.0, f64::max),
        max_ks_cross: users.iter().map(|u| u.ks_cross).fold(0.0, f64::max),
        max_imag_to_real: users.iter().map(|u| u.imag_to_real).fold(0.0, f64::max),
        users,
    };
    let varsigma = cross_pair.map(|(a, b)| moments.varsigma[(a, b)]);
    Ok((report, samples, varsigma))
}
