//! Scenario configuration, noise normalization and random geometry on a
//! wrapped square.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::channel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Role};

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Noise temperature (K).
pub const NOISE_TEMPERATURE: f64 = 290.0;

/// All scenario constants. Powers are radiated powers in W; SNRs are derived
/// from them with [`noise_power`] and [`normalized_snr`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub num_aps: usize,
    pub num_users: usize,
    /// Side of the square simulation area (m).
    pub area_side: f64,
    /// Hz.
    pub carrier_freq: f64,
    /// Hz.
    pub bandwidth: f64,
    /// dB.
    pub noise_figure: f64,
    /// Shadowing standard deviation (dB).
    pub shadow_sigma: f64,
    /// m.
    pub ap_height: f64,
    /// m.
    pub user_height: f64,
    /// Coherence interval length in samples.
    pub coherence_len: usize,
    /// Uplink pilot length; `None` means one sample per user.
    pub ul_pilot_len: Option<usize>,
    /// Downlink pilot length; `None` means one sample per user.
    pub dl_pilot_len: Option<usize>,
    /// AP radiated power for data and downlink pilots (W).
    pub ap_power: f64,
    /// User radiated power for uplink pilots (W).
    pub user_power: f64,
    pub num_drops: usize,
    /// Small-scale realizations per drop for Monte Carlo expectations.
    pub num_channel_samples: usize,
    pub rng_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 50,
            num_users: 10,
            area_side: 1000.0,
            carrier_freq: 1.9e9,
            bandwidth: 20e6,
            noise_figure: 9.0,
            shadow_sigma: 8.0,
            ap_height: 15.0,
            user_height: 1.65,
            coherence_len: 200,
            ul_pilot_len: None,
            dl_pilot_len: None,
            ap_power: 0.2,
            user_power: 0.1,
            num_drops: 200,
            num_channel_samples: 1000,
            rng_seed: 1,
        }
    }
}

/// Linear-scale SNRs and pilot lengths derived from a [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub noise_power: f64,
    /// Downlink data SNR ρ_d.
    pub rho_d: f64,
    /// Downlink pilot SNR ρ_dp.
    pub rho_dp: f64,
    /// Uplink pilot SNR ρ_up.
    pub rho_up: f64,
    pub tau: usize,
    pub tau_up: usize,
    pub tau_dp: usize,
}

impl SystemConfig {
    pub fn tau_up(&self) -> usize {
        self.ul_pilot_len.unwrap_or(self.num_users)
    }

    pub fn tau_dp(&self) -> usize {
        self.dl_pilot_len.unwrap_or(self.num_users)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidConfig(msg));
        let (m, k) = (self.num_aps, self.num_users);
        if k == 0 {
            return bad("num_users must be at least 1".into());
        }
        if m <= k {
            return bad(format!("num_aps ({m}) must exceed num_users ({k})"));
        }
        let (tau_up, tau_dp) = (self.tau_up(), self.tau_dp());
        if tau_up < k {
            return bad(format!("ul_pilot_len ({tau_up}) must be at least num_users ({k})"));
        }
        if tau_dp < k {
            return bad(format!("dl_pilot_len ({tau_dp}) must be at least num_users ({k})"));
        }
        if tau_up + tau_dp >= self.coherence_len {
            return bad(format!(
                "ul_pilot_len + dl_pilot_len ({}) must be below coherence_len ({})",
                tau_up + tau_dp,
                self.coherence_len
            ));
        }
        let positive = [
            ("area_side", self.area_side),
            ("carrier_freq", self.carrier_freq),
            ("bandwidth", self.bandwidth),
            ("ap_height", self.ap_height),
            ("user_height", self.user_height),
            ("ap_power", self.ap_power),
            ("user_power", self.user_power),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if !self.noise_figure.is_finite() {
            return bad("noise_figure must be finite".into());
        }
        if !(self.shadow_sigma.is_finite() && self.shadow_sigma >= 0.0) {
            return bad("shadow_sigma must be finite and nonnegative".into());
        }
        if self.num_channel_samples == 0 {
            return bad("num_channel_samples must be at least 1".into());
        }
        Ok(())
    }

    pub fn link_budget(&self) -> LinkBudget {
        let noise = noise_power(self.bandwidth, self.noise_figure);
        // The config was validated, so noise > 0 and powers are positive.
        let snr = |p| normalized_snr(p, noise).unwrap_or(0.0);
        LinkBudget {
            noise_power: noise,
            rho_d: snr(self.ap_power),
            rho_dp: snr(self.ap_power),
            rho_up: snr(self.user_power),
            tau: self.coherence_len,
            tau_up: self.tau_up(),
            tau_dp: self.tau_dp(),
        }
    }
}

/// Thermal noise power `B · k_B · T₀ · NF` in W.
pub fn noise_power(bandwidth: f64, noise_figure_db: f64) -> f64 {
    bandwidth * BOLTZMANN * NOISE_TEMPERATURE * db_to_linear(noise_figure_db)
}

/// Radiated power divided by noise power.
pub fn normalized_snr(radiated_power: f64, noise: f64) -> Result<f64> {
    if !(noise > 0.0) {
        return Err(Error::InvalidArgument("noise power must be positive"));
    }
    if !(radiated_power >= 0.0) {
        return Err(Error::InvalidArgument("radiated power must be nonnegative"));
    }
    Ok(radiated_power / noise)
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// A point in the horizontal plane (m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Horizontal distance from `p` to the nearest of the nine images of `q` in
/// the 3×3 tiling of the square.
pub fn wrapped_distance(p: Point, q: Point, area_side: f64) -> f64 {
    let axis = |a: f64, b: f64| {
        let d = libm::fabs(a - b);
        d.min(libm::fabs(d - area_side)).min(d + area_side)
    };
    libm::hypot(axis(p.x, q.x), axis(p.y, q.y))
}

/// One random placement of APs and users and the resulting large-scale gains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drop {
    pub ap_positions: Vec<Point>,
    pub user_positions: Vec<Point>,
    /// Large-scale gains β, M × K, linear scale.
    pub beta: Matrix<f64>,
}

impl Drop {
    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_positions.len()
    }
}

fn uniform_points<R: rand_core::RngCore>(rng: &mut R, n: usize, side: f64) -> Vec<Point> {
    (0..n)
        .map(|_| {
            let x = rng::unit_uniform(rng) * side;
            let y = rng::unit_uniform(rng) * side;
            Point::new(x, y)
        })
        .collect()
}

/// Places APs and users uniformly on the square and draws their large-scale
/// gains. Draws come from the `(seed, drop_index)` geometry and shadowing
/// streams.
pub fn generate_drop(config: &SystemConfig, drop_index: u64) -> Drop {
    let mut geo = rng::stream(config.rng_seed, drop_index, Role::Geometry, 0);
    let ap_positions = uniform_points(&mut geo, config.num_aps, config.area_side);
    let user_positions = uniform_points(&mut geo, config.num_users, config.area_side);
    let mut shadow = rng::stream(config.rng_seed, drop_index, Role::Shadowing, 0);
    let beta = channel::large_scale(config, &ap_positions, &user_positions, &mut shadow);
    Drop {
        ap_positions,
        user_positions,
        beta,
    }
}
