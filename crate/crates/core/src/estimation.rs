//! Uplink MMSE channel estimation, conjugate-beamforming effective gains and
//! the users' LMMSE estimate of their effective gain from beamformed
//! downlink pilots.
//!
//! Pilot sequences are never materialized. With mutually orthonormal pilots
//! the projection of the received pilot block onto a user's sequence is the
//! scaled channel plus one `CN(0, 1)` noise sample, so only that projection is
//! simulated, both on the uplink (AP side) and on the downlink (user side).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand_core::RngCore;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng;

/// MMSE scaling `c_mk = √(τ_up ρ_up) β_mk / (τ_up ρ_up β_mk + 1)`.
pub fn mmse_scale(beta: &Matrix<f64>, tau_up: usize, rho_up: f64) -> Matrix<f64> {
    let snr = tau_up as f64 * rho_up;
    let root = libm::sqrt(snr);
    beta.map(|&b| root * b / (snr * b + 1.0))
}

/// Variance of the channel estimate, `γ_mk = √(τ_up ρ_up) β_mk c_mk`.
pub fn estimate_variance(beta: &Matrix<f64>, c: &Matrix<f64>, tau_up: usize, rho_up: f64) -> Matrix<f64> {
    let root = libm::sqrt(tau_up as f64 * rho_up);
    beta.zip_map(c, |&b, &c| root * b * c)
        .expect("c is computed from beta and has its shape")
}

/// Second-order statistics of the uplink estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    pub c: Matrix<f64>,
    pub gamma: Matrix<f64>,
    pub rho_up: f64,
    pub tau_up: usize,
}

impl EstimationStats {
    pub fn new(beta: &Matrix<f64>, tau_up: usize, rho_up: f64) -> Self {
        let c = mmse_scale(beta, tau_up, rho_up);
        let gamma = estimate_variance(beta, &c, tau_up, rho_up);
        Self {
            c,
            gamma,
            rho_up,
            tau_up,
        }
    }

    /// `√(τ_up ρ_up)`, the amplitude of the projected uplink pilot.
    #[inline]
    pub fn pilot_amplitude(&self) -> f64 {
        libm::sqrt(self.tau_up as f64 * self.rho_up)
    }
}

/// True channels, their MMSE estimates and the estimation errors, all M × K.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g: Matrix<Complex64>,
    pub g_hat: Matrix<Complex64>,
    pub g_tilde: Matrix<Complex64>,
}

impl ChannelRealization {
    pub fn zeros(num_aps: usize, num_users: usize) -> Self {
        Self {
            g: Matrix::zeros(num_aps, num_users),
            g_hat: Matrix::zeros(num_aps, num_users),
            g_tilde: Matrix::zeros(num_aps, num_users),
        }
    }

    /// Draws a fresh realization in place: for every `(m, k)`, AP-major, one
    /// `CN(0,1)` small-scale coefficient and then one `CN(0,1)` projected
    /// pilot noise sample. `sqrt_beta` holds `√β_mk`.
    pub fn redraw<R: RngCore + ?Sized>(&mut self, sqrt_beta: &Matrix<f64>, stats: &EstimationStats, rng: &mut R) {
        let amp = stats.pilot_amplitude();
        let n = sqrt_beta.as_slice().len();
        let (sb, c) = (sqrt_beta.as_slice(), stats.c.as_slice());
        let g = self.g.as_mut_slice();
        let g_hat = self.g_hat.as_mut_slice();
        let g_tilde = self.g_tilde.as_mut_slice();
        for i in 0..n {
            let h = rng::complex_normal(rng);
            let nu = rng::complex_normal(rng);
            let gi = h * sb[i];
            let est = (gi * amp + nu) * c[i];
            g[i] = gi;
            g_hat[i] = est;
            g_tilde[i] = gi - est;
        }
    }
}

/// Uplink estimation given the true channels: `ĝ = c (√(τ_up ρ_up) g + ν)`
/// with one `CN(0,1)` noise draw per entry, AP-major.
pub fn simulate_uplink_estimates<R: RngCore + ?Sized>(
    g: &Matrix<Complex64>,
    stats: &EstimationStats,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if g.shape() != stats.c.shape() {
        return Err(Error::DimensionMismatch {
            expected: stats.c.shape(),
            found: g.shape(),
        });
    }
    let amp = stats.pilot_amplitude();
    let g_hat = g
        .zip_map(&stats.c, |&gi, &c| (gi * amp + rng::complex_normal(rng)) * c)
        .expect("shapes checked");
    let g_tilde = g.zip_map(&g_hat, |&a, &b| a - b).expect("same shape");
    Ok(ChannelRealization {
        g: g.clone(),
        g_hat,
        g_tilde,
    })
}

/// Effective gains `a[k][k'] = Σ_m √η_mk' g_mk ĝ*_mk'`, K × K.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveGains {
    pub a: Matrix<Complex64>,
}

fn check_eta(realization: &ChannelRealization, eta: &Matrix<f64>) -> Result<()> {
    if eta.shape() != realization.g.shape() {
        return Err(Error::DimensionMismatch {
            expected: realization.g.shape(),
            found: eta.shape(),
        });
    }
    if eta.as_slice().iter().any(|&e| !(e >= 0.0)) {
        return Err(Error::InvalidArgument("power coefficients must be nonnegative"));
    }
    Ok(())
}

pub fn effective_gains(realization: &ChannelRealization, eta: &Matrix<f64>) -> Result<EffectiveGains> {
    check_eta(realization, eta)?;
    let sqrt_eta = eta.map(|&e| libm::sqrt(e));
    let k = eta.cols();
    let mut a = Matrix::zeros(k, k);
    let mut scratch = vec![Complex64::default(); k];
    effective_gains_into(realization, &sqrt_eta, &mut a, &mut scratch);
    Ok(EffectiveGains { a })
}

/// Hot-loop form of [`effective_gains`]: `sqrt_eta` holds `√η`, `out` is
/// K × K and `scratch` has length K. Shapes are the caller's responsibility.
pub fn effective_gains_into(
    realization: &ChannelRealization,
    sqrt_eta: &Matrix<f64>,
    out: &mut Matrix<Complex64>,
    scratch: &mut [Complex64],
) {
    out.as_mut_slice().fill(Complex64::default());
    let k = sqrt_eta.cols();
    for m in 0..sqrt_eta.rows() {
        let g = realization.g.row(m);
        for ((w, gh), se) in scratch.iter_mut().zip(realization.g_hat.row(m)).zip(sqrt_eta.row(m)) {
            *w = gh.conj() * *se;
        }
        for (user, gm) in g.iter().enumerate() {
            let row = &mut out.as_mut_slice()[user * k..(user + 1) * k];
            for (acc, w) in row.iter_mut().zip(scratch.iter()) {
                *acc += gm * w;
            }
        }
    }
}

/// Only the diagonal `a_kk`, written into `out` (length K).
pub fn diagonal_gains_into(realization: &ChannelRealization, sqrt_eta: &Matrix<f64>, out: &mut [Complex64]) {
    out.fill(Complex64::default());
    for m in 0..sqrt_eta.rows() {
        let g = realization.g.row(m);
        let gh = realization.g_hat.row(m);
        for (((acc, g), gh), se) in out.iter_mut().zip(g).zip(gh).zip(sqrt_eta.row(m)) {
            *acc += g * gh.conj() * *se;
        }
    }
}

/// Closed-form moments of the effective gains.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMoments {
    /// `E{a_kk} = Σ_m √η_mk γ_mk`.
    pub mean_akk: Vec<f64>,
    /// `ς_kk' = Σ_m η_mk' β_mk γ_mk'`, K × K. The diagonal is `Var{a_kk}`, the
    /// off-diagonal entries are `E{|a_kk'|²}`.
    pub varsigma: Matrix<f64>,
    /// `E{|ã_kk|²} = ς_kk / (τ_dp ρ_dp ς_kk + 1)`.
    pub err_var: Vec<f64>,
    /// `τ_dp ρ_dp`.
    pub pilot_snr: f64,
}

impl GainMoments {
    pub fn num_users(&self) -> usize {
        self.mean_akk.len()
    }

    /// `Σ_{k'≠k} ς_kk'`.
    pub fn interference(&self, k: usize) -> f64 {
        self.varsigma
            .row(k)
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, v)| v)
            .sum()
    }
}

pub fn gain_moments(
    beta: &Matrix<f64>,
    gamma: &Matrix<f64>,
    eta: &Matrix<f64>,
    tau_dp: usize,
    rho_dp: f64,
) -> Result<GainMoments> {
    for other in [gamma, eta] {
        if other.shape() != beta.shape() {
            return Err(Error::DimensionMismatch {
                expected: beta.shape(),
                found: other.shape(),
            });
        }
    }
    let (m_count, k_count) = beta.shape();
    let mut mean_akk = vec![0.0; k_count];
    let mut varsigma = Matrix::zeros(k_count, k_count);
    for m in 0..m_count {
        let (b, g, e) = (beta.row(m), gamma.row(m), eta.row(m));
        for k in 0..k_count {
            mean_akk[k] += libm::sqrt(e[k]) * g[k];
            for kp in 0..k_count {
                varsigma[(k, kp)] += e[kp] * b[k] * g[kp];
            }
        }
    }
    let pilot_snr = tau_dp as f64 * rho_dp;
    let err_var = (0..k_count)
        .map(|k| {
            let s = varsigma[(k, k)];
            s / (pilot_snr * s + 1.0)
        })
        .collect();
    Ok(GainMoments {
        mean_akk,
        varsigma,
        err_var,
        pilot_snr,
    })
}

/// The projected downlink pilot `y̌ = √(τ_dp ρ_dp) a_kk + n`, `n ~ CN(0,1)`.
pub fn downlink_pilot_observation<R: RngCore + ?Sized>(a_kk: Complex64, tau_dp: usize, rho_dp: f64, rng: &mut R) -> Complex64 {
    a_kk * libm::sqrt(tau_dp as f64 * rho_dp) + rng::complex_normal(rng)
}

/// LMMSE estimate of `a_kk` from the projected downlink pilot:
/// `â = (√(τ_dp ρ_dp) ς_kk y̌ + E{a_kk}) / (τ_dp ρ_dp ς_kk + 1)`.
#[inline]
pub fn lmmse_effective_gain(y_check: Complex64, moments: &GainMoments, k: usize) -> Complex64 {
    let s = moments.varsigma[(k, k)];
    let snr = moments.pilot_snr;
    (y_check * (libm::sqrt(snr) * s) + moments.mean_akk[k]) / (snr * s + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Role};
    use approx::assert_relative_eq;

    fn scalar(x: f64) -> Matrix<f64> {
        Matrix::filled(1, 1, x)
    }

    #[test]
    fn mmse_scale_examples() {
        // τ_up ρ_up = 100.
        let c = mmse_scale(&scalar(0.5), 10, 10.0);
        assert_relative_eq!(c[(0, 0)], 5.0 / 51.0, max_relative = 1e-14);
        assert_eq!(mmse_scale(&scalar(0.0), 10, 10.0)[(0, 0)], 0.0);
        let big = mmse_scale(&scalar(1e12), 10, 10.0)[(0, 0)];
        assert_relative_eq!(big, 0.1, max_relative = 1e-9);
    }

    #[test]
    fn estimate_variance_examples() {
        let beta = scalar(0.5);
        let c = mmse_scale(&beta, 10, 10.0);
        assert_relative_eq!(estimate_variance(&beta, &c, 10, 10.0)[(0, 0)], 25.0 / 51.0, max_relative = 1e-14);
        let zero = scalar(0.0);
        assert_eq!(estimate_variance(&zero, &mmse_scale(&zero, 10, 10.0), 10, 10.0)[(0, 0)], 0.0);
        for b in [1e-15, 1e-9, 1e-3, 1.0, 1e3] {
            let beta = scalar(b);
            let g = estimate_variance(&beta, &mmse_scale(&beta, 10, 1e11), 10, 1e11)[(0, 0)];
            assert!(g > 0.0 && g < b);
        }
    }

    #[test]
    fn strong_uplink_pilots_give_exact_estimates() {
        let beta = Matrix::filled(3, 2, 1.0);
        let stats = EstimationStats::new(&beta, 2, 1e14);
        let mut rng = stream(5, 0, Role::Diagnostic, 0);
        let g = Matrix::from_fn(3, 2, |_, _| rng::complex_normal(&mut rng));
        let r = simulate_uplink_estimates(&g, &stats, &mut rng).unwrap();
        for (e, t) in r.g_tilde.as_slice().iter().zip(r.g.as_slice()) {
            assert!(e.norm() < 1e-6 * t.norm().max(1.0));
        }
    }

    #[test]
    fn realization_splits_exactly() {
        let beta = Matrix::from_fn(4, 3, |m, k| 0.1 + (m + k) as f64);
        let stats = EstimationStats::new(&beta, 3, 2.0);
        let sqrt_beta = beta.map(|b| b.sqrt());
        let mut r = ChannelRealization::zeros(4, 3);
        r.redraw(&sqrt_beta, &stats, &mut stream(1, 0, Role::Diagnostic, 0));
        for i in 0..12 {
            let (g, gh, gt) = (r.g.as_slice()[i], r.g_hat.as_slice()[i], r.g_tilde.as_slice()[i]);
            assert!((g - (gh + gt)).norm() <= 1e-15 * g.norm().max(1.0));
        }
        assert!(simulate_uplink_estimates(&Matrix::zeros(2, 3), &stats, &mut stream(1, 0, Role::Diagnostic, 1)).is_err());
    }

    #[test]
    fn uplink_estimates_match_their_variances() {
        // Var(ĝ) → γ, Var(g̃) → β − γ, E{g̃ ĝ*} → 0.
        let beta = Matrix::filled(1, 1, 2.0);
        let stats = EstimationStats::new(&beta, 1, 0.7);
        let sqrt_beta = beta.map(|b| b.sqrt());
        let mut r = ChannelRealization::zeros(1, 1);
        let mut rng = stream(9, 0, Role::Diagnostic, 0);
        let n = 1_000_000;
        let (mut v_hat, mut v_err, mut cross) = (0.0, 0.0, Complex64::default());
        for _ in 0..n {
            r.redraw(&sqrt_beta, &stats, &mut rng);
            let (gh, gt) = (r.g_hat[(0, 0)], r.g_tilde[(0, 0)]);
            v_hat += gh.norm_sqr();
            v_err += gt.norm_sqr();
            cross += gt * gh.conj();
        }
        let n = n as f64;
        let gamma = stats.gamma[(0, 0)];
        assert_relative_eq!(v_hat / n, gamma, max_relative = 1e-2);
        assert_relative_eq!(v_err / n, 2.0 - gamma, max_relative = 1e-2);
        // |E{g̃ĝ*}| has std ≈ sqrt(γ(β−γ)/n).
        let band = 5.0 * (gamma * (2.0 - gamma) / n).sqrt();
        assert!((cross / n).norm() < band);
    }

    #[test]
    fn effective_gains_small_cases() {
        let mut r = ChannelRealization::zeros(1, 1);
        r.g[(0, 0)] = Complex64::new(0.3, -1.2);
        r.g_hat[(0, 0)] = Complex64::new(0.5, 0.25);
        let a = effective_gains(&r, &scalar(4.0)).unwrap();
        assert_eq!(a.a[(0, 0)], r.g[(0, 0)] * r.g_hat[(0, 0)].conj() * 2.0);

        let beta = Matrix::filled(5, 3, 1.0);
        let stats = EstimationStats::new(&beta, 3, 1.0);
        let mut r = ChannelRealization::zeros(5, 3);
        r.redraw(&beta, &stats, &mut stream(2, 0, Role::Diagnostic, 0));
        let a = effective_gains(&r, &Matrix::zeros(5, 3)).unwrap();
        assert!(a.a.as_slice().iter().all(|z| *z == Complex64::default()));
        assert!(effective_gains(&r, &Matrix::zeros(5, 2)).is_err());
        assert!(effective_gains(&r, &Matrix::filled(5, 3, -1.0)).is_err());
    }

    #[test]
    fn fast_paths_agree_with_definition() {
        let beta = Matrix::from_fn(6, 4, |m, k| 1.0 / (1.0 + (m * 4 + k) as f64));
        let eta = Matrix::from_fn(6, 4, |m, k| 0.5 + 0.1 * (m as f64) - 0.05 * k as f64);
        let stats = EstimationStats::new(&beta, 4, 3.0);
        let mut r = ChannelRealization::zeros(6, 4);
        r.redraw(&beta.map(|b| b.sqrt()), &stats, &mut stream(4, 0, Role::Diagnostic, 0));
        let a = effective_gains(&r, &eta).unwrap().a;
        for k in 0..4 {
            for kp in 0..4 {
                let direct: Complex64 = (0..6)
                    .map(|m| r.g[(m, k)] * r.g_hat[(m, kp)].conj() * eta[(m, kp)].sqrt())
                    .sum();
                assert_relative_eq!(a[(k, kp)].re, direct.re, epsilon = 1e-12);
                assert_relative_eq!(a[(k, kp)].im, direct.im, epsilon = 1e-12);
            }
        }
        let mut diag = vec![Complex64::default(); 4];
        diagonal_gains_into(&r, &eta.map(|e| e.sqrt()), &mut diag);
        for k in 0..4 {
            assert_relative_eq!(diag[k].re, a[(k, k)].re, epsilon = 1e-12);
            assert_relative_eq!(diag[k].im, a[(k, k)].im, epsilon = 1e-12);
        }
    }

    #[test]
    fn gain_moment_examples() {
        // One AP and one user with η β γ = 1 gives ς_kk = 1.
        let m = gain_moments(&scalar(1.0), &scalar(0.5), &scalar(2.0), 9, 11.0).unwrap();
        assert_eq!(m.varsigma[(0, 0)], 1.0);
        assert_relative_eq!(m.err_var[0], 0.01, max_relative = 1e-14);
        assert_relative_eq!(m.mean_akk[0], 2f64.sqrt() * 0.5, max_relative = 1e-14);
        let m0 = gain_moments(&scalar(1.0), &scalar(0.5), &scalar(2.0), 9, 0.0).unwrap();
        assert_eq!(m0.err_var[0], m0.varsigma[(0, 0)]);
        assert!(gain_moments(&scalar(1.0), &Matrix::zeros(2, 1), &scalar(1.0), 1, 1.0).is_err());
    }

    #[test]
    fn err_var_decreases_with_pilot_snr() {
        let beta = Matrix::from_fn(3, 2, |m, k| 0.2 + 0.3 * (m + 2 * k) as f64);
        let stats = EstimationStats::new(&beta, 2, 5.0);
        let eta = Matrix::filled(3, 2, 0.3);
        let mut last = f64::INFINITY;
        for rho_dp in [0.0, 0.1, 1.0, 10.0, 1e3] {
            let m = gain_moments(&beta, &stats.gamma, &eta, 2, rho_dp).unwrap();
            assert!(m.err_var[0] < last);
            assert!(m.err_var[0] <= m.varsigma[(0, 0)]);
            last = m.err_var[0];
        }
    }

    #[test]
    fn pilot_observation_and_lmmse_limits() {
        let a = Complex64::new(0.8, 0.1);
        let mut rng = stream(6, 0, Role::Diagnostic, 0);
        // ρ_dp = 0: pure noise, identical to a plain CN(0,1) draw from the same stream.
        let y0 = downlink_pilot_observation(a, 5, 0.0, &mut stream(6, 0, Role::Diagnostic, 1));
        assert_eq!(y0, rng::complex_normal(&mut stream(6, 0, Role::Diagnostic, 1)));

        let n = 1_000_000;
        let (tau, rho) = (4, 2.5);
        let mean_expected = a * (tau as f64 * rho).sqrt();
        let mut sum = Complex64::default();
        let mut var = 0.0;
        for _ in 0..n {
            let y = downlink_pilot_observation(a, tau, rho, &mut rng);
            sum += y;
            var += (y - mean_expected).norm_sqr();
        }
        let n = n as f64;
        assert_relative_eq!(var / n, 1.0, max_relative = 1e-2);
        assert!((sum / n - mean_expected).norm() < 5.0 / n.sqrt());

        let beta = Matrix::filled(2, 1, 1.0);
        let gamma = Matrix::filled(2, 1, 0.5);
        let eta = Matrix::filled(2, 1, 1.0);
        let silent = gain_moments(&beta, &gamma, &eta, 1, 0.0).unwrap();
        assert_eq!(lmmse_effective_gain(Complex64::new(3.0, -2.0), &silent, 0), Complex64::new(1.0, 0.0));

        let loud = gain_moments(&beta, &gamma, &eta, 1, 1e14).unwrap();
        let y = a * loud.pilot_snr.sqrt();
        let est = lmmse_effective_gain(y, &loud, 0);
        assert!((est - a).norm() < 1e-9);
    }
}
