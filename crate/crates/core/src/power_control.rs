//! Downlink power-control coefficients: the full-power baseline and max-min
//! fairness of the statistical-CSI SINR.
//!
//! Max-min fairness is solved by bisection on the common SINR target `t`.
//! Each step asks a [`FeasibilityOracle`] whether some `η` satisfying the
//! per-AP constraint reaches `SINR_k ≥ t` for every user. With
//! `ζ_mk = √η_mk` the SINR constraint reads
//! `√ρ_d Σ_m γ_mk ζ_mk ≥ √t ‖(√(ρ_d β_mk γ_mk') ζ_mk', 1)‖`, a second-order
//! cone, so any conic solver can act as the oracle. This crate only holds the
//! search; solver-backed oracles live with their solver.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation;
use crate::matrix::Matrix;
use crate::rates;

/// Slack allowed on the per-AP power constraint.
pub const POWER_CONSTRAINT_SLACK: f64 = 1e-9;

/// Power-control coefficients `η`, M × K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCoefficients {
    pub eta: Matrix<f64>,
}

/// Which coefficients a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerControlPolicy {
    Uniform,
    #[serde(rename = "maxmin")]
    MaxMin,
}

impl PowerControlPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            PowerControlPolicy::Uniform => "uniform",
            PowerControlPolicy::MaxMin => "maxmin",
        }
    }
}

impl core::str::FromStr for PowerControlPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PowerControlPolicy::Uniform),
            "maxmin" => Ok(PowerControlPolicy::MaxMin),
            _ => Err(Error::InvalidArgument("unknown power-control policy (expected uniform or maxmin)")),
        }
    }
}

/// Every AP at full power: `η_mk = 1 / Σ_k' γ_mk'`.
pub fn uniform_eta(gamma: &Matrix<f64>) -> Result<PowerCoefficients> {
    let mut eta = Matrix::zeros(gamma.rows(), gamma.cols());
    for m in 0..gamma.rows() {
        let total: f64 = gamma.row(m).iter().sum();
        if !(total > 0.0) || gamma.row(m).iter().any(|&g| g < 0.0) {
            return Err(Error::InvalidArgument("every AP needs a positive channel-estimate variance"));
        }
        eta.row_mut(m).fill(1.0 / total);
    }
    Ok(PowerCoefficients { eta })
}

/// Outcome of [`check_power_constraint`].
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCheck {
    pub satisfied: bool,
    /// `1 − Σ_k η_mk γ_mk` per AP.
    pub margins: Vec<f64>,
}

pub fn check_power_constraint(eta: &Matrix<f64>, gamma: &Matrix<f64>) -> PowerCheck {
    let margins: Vec<f64> = eta
        .rows_iter()
        .zip(gamma.rows_iter())
        .map(|(e, g)| 1.0 - e.iter().zip(g).map(|(e, g)| e * g).sum::<f64>())
        .collect();
    let satisfied = eta.shape() == gamma.shape()
        && eta.as_slice().iter().all(|&e| e >= 0.0)
        && margins.iter().all(|&m| m >= -POWER_CONSTRAINT_SLACK);
    PowerCheck { satisfied, margins }
}

/// The max-min program for one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinProblem {
    pub beta: Matrix<f64>,
    pub gamma: Matrix<f64>,
    pub rho_d: f64,
}

impl MaxMinProblem {
    pub fn new(beta: Matrix<f64>, gamma: Matrix<f64>, rho_d: f64) -> Result<Self> {
        if beta.shape() != gamma.shape() {
            return Err(Error::DimensionMismatch {
                expected: beta.shape(),
                found: gamma.shape(),
            });
        }
        if !(rho_d > 0.0) {
            return Err(Error::InvalidArgument("downlink SNR must be positive"));
        }
        Ok(Self { beta, gamma, rho_d })
    }

    pub fn num_aps(&self) -> usize {
        self.beta.rows()
    }

    pub fn num_users(&self) -> usize {
        self.beta.cols()
    }

    /// Statistical-CSI SINR of every user under `eta`.
    pub fn sinr(&self, eta: &Matrix<f64>) -> Vec<f64> {
        let moments = estimation::gain_moments(&self.beta, &self.gamma, eta, 0, 0.0)
            .expect("eta shape matches the problem");
        rates::statistical_sinr(&moments, self.rho_d)
    }

    pub fn min_sinr(&self, eta: &Matrix<f64>) -> f64 {
        self.sinr(eta).into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Upper bound on any user's SINR under the power constraint: by
    /// Cauchy-Schwarz, `SINR_k < Σ_m γ_mk/β_mk`, and with the denominator at
    /// least one, `SINR_k ≤ ρ_d (Σ_m √γ_mk)²`.
    pub fn single_user_bound(&self) -> f64 {
        (0..self.num_users())
            .map(|k| {
                let (mut ratio, mut root) = (0.0, 0.0);
                for m in 0..self.num_aps() {
                    let (b, g) = (self.beta[(m, k)], self.gamma[(m, k)]);
                    if b > 0.0 {
                        ratio += g / b;
                    }
                    root += libm::sqrt(g);
                }
                ratio.min(self.rho_d * root * root)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Clamps `eta` to be nonnegative and scales down any AP row that exceeds
    /// its power budget.
    pub fn project(&self, eta: &mut Matrix<f64>) {
        for m in 0..eta.rows() {
            let row = eta.row_mut(m);
            for e in row.iter_mut() {
                if !(*e > 0.0) {
                    *e = 0.0;
                }
            }
            let used: f64 = row.iter().zip(self.gamma.row(m)).map(|(e, g)| e * g).sum();
            if used > 1.0 {
                row.iter_mut().for_each(|e| *e /= used);
            }
        }
    }
}

/// Answer of a feasibility oracle for one SINR target.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    /// Coefficients meeting the target (up to the oracle's tolerance).
    Feasible(Matrix<f64>),
    Infeasible,
    Failed(String),
}

/// Decides whether every user can reach a common SINR target.
pub trait FeasibilityOracle {
    fn check(&mut self, problem: &MaxMinProblem, target: f64) -> Feasibility;
}

impl<F: FnMut(&MaxMinProblem, f64) -> Feasibility> FeasibilityOracle for F {
    fn check(&mut self, problem: &MaxMinProblem, target: f64) -> Feasibility {
        self(problem, target)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxMinSettings {
    /// Relative width at which bisection stops: `t_hi ≤ (1 + tol) t_lo`.
    pub tol: f64,
    /// Maximum number of oracle calls.
    pub max_iter: usize,
    /// Relative shortfall below the target still accepted from the oracle.
    pub feasibility_tol: f64,
}

impl Default for MaxMinSettings {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 60,
            feasibility_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxMinSolution {
    pub coefficients: PowerCoefficients,
    /// Minimum statistical-CSI SINR at the returned coefficients.
    pub min_sinr: f64,
    /// Final bisection bracket `(t_lo, t_hi)`.
    pub bracket: (f64, f64),
    pub oracle_calls: usize,
}

/// Max-min fair coefficients by bisection over the common SINR target.
///
/// The bracket starts at the uniform baseline's minimum SINR (always feasible)
/// and [`MaxMinProblem::single_user_bound`]. Midpoints are geometric.
pub fn maxmin_eta(
    problem: &MaxMinProblem,
    settings: &MaxMinSettings,
    oracle: &mut impl FeasibilityOracle,
) -> Result<MaxMinSolution> {
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidArgument("bisection tolerance must be positive"));
    }
    let baseline = uniform_eta(&problem.gamma)?;
    let mut best_sinr = problem.min_sinr(&baseline.eta);
    let mut best = baseline;
    let mut lo = best_sinr;
    let mut hi = problem.single_user_bound().max(lo);
    let mut calls = 0;

    while hi > lo * (1.0 + settings.tol) {
        if calls >= settings.max_iter {
            return Err(Error::SolverFailed {
                reason: "bisection iteration limit reached".to_string(),
                best,
                best_min_sinr: best_sinr,
            });
        }
        let target = if lo > 0.0 { libm::sqrt(lo * hi) } else { 0.5 * hi };
        calls += 1;
        match oracle.check(problem, target) {
            Feasibility::Feasible(mut eta) => {
                problem.project(&mut eta);
                let achieved = problem.min_sinr(&eta);
                if achieved > best_sinr {
                    best_sinr = achieved;
                    best = PowerCoefficients { eta };
                }
                if achieved < target * (1.0 - settings.feasibility_tol) {
                    return Err(Error::SolverFailed {
                        reason: alloc::format!(
                            "oracle reported target {target:.6e} feasible but the coefficients reach {achieved:.6e}"
                        ),
                        best,
                        best_min_sinr: best_sinr,
                    });
                }
                lo = achieved.max(target).min(hi);
            }
            Feasibility::Infeasible => hi = target,
            Feasibility::Failed(reason) => {
                return Err(Error::SolverFailed {
                    reason,
                    best,
                    best_min_sinr: best_sinr,
                })
            }
        }
    }

    Ok(MaxMinSolution {
        coefficients: best,
        min_sinr: best_sinr,
        bracket: (lo, hi),
        oracle_calls: calls,
    })
}
