//! Large-scale fading (three-slope path loss with log-normal shadowing) and
//! i.i.d. Rayleigh small-scale fading.

use num_complex::Complex64;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;
use crate::scenario::{db_to_linear, wrapped_distance, Point, SystemConfig};

/// Three-slope path loss constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    /// Inner breakpoint (m). Path loss is flat below it.
    pub d0: f64,
    /// Outer breakpoint (m). The exponent steepens to 3.5 beyond it.
    pub d1: f64,
    /// Fixed loss L (dB).
    pub fixed_loss: f64,
}

impl PathLossParams {
    pub fn new(d0: f64, d1: f64, fixed_loss: f64) -> Result<Self> {
        if !(d0 > 0.0 && d1 > d0) {
            return Err(Error::InvalidArgument("path loss breakpoints need 0 < d0 < d1"));
        }
        Ok(Self { d0, d1, fixed_loss })
    }

    /// Breakpoints 10 m / 50 m with the COST-231 Hata constant for the
    /// configured carrier and antenna heights.
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        let fixed_loss = hata_fixed_loss(config.carrier_freq, config.ap_height, config.user_height)?;
        Self::new(10.0, 50.0, fixed_loss)
    }
}

/// Lower and upper carrier frequency (Hz) of the COST-231 Hata model.
pub const HATA_VALID_RANGE: (f64, f64) = (150e6, 2e9);

pub fn hata_in_validity_range(carrier_freq: f64) -> bool {
    (HATA_VALID_RANGE.0..=HATA_VALID_RANGE.1).contains(&carrier_freq)
}

/// COST-231 Hata fixed loss L in dB.
///
/// The AP height must be positive; a zero user height is accepted and removes
/// the mobile-antenna correction term. Frequencies outside
/// [`HATA_VALID_RANGE`] are computed anyway; callers decide whether to warn.
pub fn hata_fixed_loss(carrier_freq: f64, ap_height: f64, user_height: f64) -> Result<f64> {
    if !(ap_height > 0.0) {
        return Err(Error::InvalidArgument("AP height must be positive"));
    }
    if !(user_height >= 0.0) {
        return Err(Error::InvalidArgument("user height must be nonnegative"));
    }
    if !(carrier_freq > 0.0) {
        return Err(Error::InvalidArgument("carrier frequency must be positive"));
    }
    let lf = libm::log10(carrier_freq / 1e6);
    Ok(46.3 + 33.9 * lf - 13.82 * libm::log10(ap_height) - (1.1 * lf - 0.7) * user_height
        + (1.56 * lf - 0.8))
}

/// Path loss in dB (a negative gain) at horizontal distance `d` meters.
pub fn path_loss_db(d: f64, params: &PathLossParams) -> f64 {
    let km = |x: f64| libm::log10(x / 1000.0);
    let l = params.fixed_loss;
    if d > params.d1 {
        -l - 35.0 * km(d)
    } else if d > params.d0 {
        -l - 15.0 * km(params.d1) - 20.0 * km(d)
    } else {
        -l - 15.0 * km(params.d1) - 20.0 * km(params.d0)
    }
}

/// Large-scale gain for one AP/user pair given a standard-normal shadowing
/// draw `z`. Shadowing only applies beyond the outer breakpoint.
#[inline]
pub fn large_scale_gain(distance: f64, z: f64, shadow_sigma: f64, params: &PathLossParams) -> f64 {
    let mut db = path_loss_db(distance, params);
    if distance > params.d1 {
        db += shadow_sigma * z;
    }
    db_to_linear(db)
}

/// β for every AP/user pair over wrapped distances. One shadowing draw is
/// consumed per pair, AP-major, whether or not it is applied.
pub fn large_scale<R: RngCore + ?Sized>(
    config: &SystemConfig,
    aps: &[Point],
    users: &[Point],
    rng: &mut R,
) -> Matrix<f64> {
    // `validate` guarantees positive heights, so this cannot fail for a valid config.
    let params = PathLossParams::from_config(config).expect("valid configuration");
    let mut beta = Matrix::zeros(aps.len(), users.len());
    for (m, ap) in aps.iter().enumerate() {
        for (k, user) in users.iter().enumerate() {
            let d = wrapped_distance(*ap, *user, config.area_side);
            let z = rng::standard_normal(rng);
            beta[(m, k)] = large_scale_gain(d, z, config.shadow_sigma, &params);
        }
    }
    beta
}

/// Small-scale fading `h`, M × K, i.i.d. `CN(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScale {
    pub h: Matrix<Complex64>,
}

pub fn draw_small_scale<R: RngCore + ?Sized>(rng: &mut R, num_aps: usize, num_users: usize) -> SmallScale {
    SmallScale {
        h: Matrix::from_fn(num_aps, num_users, |_, _| rng::complex_normal(rng)),
    }
}
