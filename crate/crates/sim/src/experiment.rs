//! Drop-parallel experiment runner.

use cfmimo_core::montecarlo::{self, DropRates, PreparedDrop};
use cfmimo_core::power_control::{check_power_constraint, uniform_eta, MaxMinProblem, MaxMinSettings};
use cfmimo_core::rates::net_throughput;
use cfmimo_core::{CsiMode, Matrix, PowerControlPolicy, SystemConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;
use crate::socp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub modes: Vec<CsiMode>,
    pub policy: PowerControlPolicy,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
    pub maxmin: MaxMinSettings,
    pub verbose: bool,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            modes: CsiMode::ALL.to_vec(),
            policy: PowerControlPolicy::MaxMin,
            threads: None,
            maxmin: socp::default_settings(),
            verbose: false,
        }
    }
}

/// One row of `samples.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub drop: u64,
    pub user: usize,
    pub mode: CsiMode,
    #[serde(rename = "gross_se_bit_per_cu")]
    pub gross_se: f64,
    #[serde(rename = "net_throughput_bit_per_s")]
    pub net_throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropOutcome {
    pub rates: DropRates,
    /// Statistical-CSI SINR of the worst user under the chosen coefficients.
    pub min_sinr: f64,
    pub power_constraint_satisfied: bool,
    /// Smallest `1 − Σ_k η_mk γ_mk` over APs.
    pub min_power_margin: f64,
    pub oracle_calls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    /// SHA-256 of the canonical JSON of the system configuration.
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: SystemConfig,
    pub modes: Vec<CsiMode>,
    pub policy: PowerControlPolicy,
    /// Ordered by drop, then mode (in request order), then user.
    pub records: Vec<Record>,
    pub drops: Vec<DropOutcome>,
    pub metadata: Metadata,
}

impl ExperimentResult {
    pub fn net_throughput(&self, mode: CsiMode) -> Vec<f64> {
        self.records.iter().filter(|r| r.mode == mode).map(|r| r.net_throughput).collect()
    }
}

pub fn version_string() -> String {
    format!("cfmimo {}", env!("CARGO_PKG_VERSION"))
}

pub fn config_hash(config: &SystemConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

/// Coefficients for one drop under `policy`, with the bisection's oracle call
/// count.
pub fn power_coefficients(
    prepared: &PreparedDrop,
    policy: PowerControlPolicy,
    settings: &MaxMinSettings,
    verbose: bool,
) -> cfmimo_core::Result<(Matrix<f64>, usize)> {
    match policy {
        PowerControlPolicy::Uniform => Ok((uniform_eta(prepared.gamma())?.eta, 0)),
        PowerControlPolicy::MaxMin => {
            let problem = MaxMinProblem::new(prepared.beta().clone(), prepared.gamma().clone(), prepared.budget.rho_d)?;
            let sol = socp::maxmin_eta(&problem, settings, verbose)?;
            Ok((sol.coefficients.eta, sol.oracle_calls))
        }
    }
}

/// Runs a single drop end to end.
pub fn run_drop(config: &SystemConfig, index: u64, options: &ExperimentOptions) -> cfmimo_core::Result<DropOutcome> {
    let prepared = PreparedDrop::new(config, index);
    let (eta, oracle_calls) = power_coefficients(&prepared, options.policy, &options.maxmin, options.verbose)?;
    let check = check_power_constraint(&eta, prepared.gamma());
    let problem = MaxMinProblem::new(prepared.beta().clone(), prepared.gamma().clone(), prepared.budget.rho_d)?;
    let rates = montecarlo::evaluate_drop(config, &prepared, &eta, &options.modes)?;
    Ok(DropOutcome {
        rates,
        min_sinr: problem.min_sinr(&eta),
        power_constraint_satisfied: check.satisfied,
        min_power_margin: check.margins.iter().copied().fold(f64::INFINITY, f64::min),
        oracle_calls,
    })
}

pub fn run_experiment(config: &SystemConfig, options: &ExperimentOptions) -> Result<ExperimentResult, RunError> {
    config.validate()?;
    if options.modes.is_empty() {
        return Err(RunError::NoModes);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = options.threads {
        if n == 0 {
            return Err(RunError::Threads);
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let outcomes: Vec<_> = pool.install(|| {
        (0..config.num_drops as u64)
            .into_par_iter()
            .map(|d| {
                let out = run_drop(config, d, options);
                if options.verbose {
                    eprintln!("drop {d} done");
                }
                out
            })
            .collect()
    });

    let budget = config.link_budget();
    let mut drops = Vec::with_capacity(outcomes.len());
    let mut records = Vec::new();
    for (d, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome.map_err(|source| RunError::Drop { drop: d as u64, source })?;
        for mode_rates in &outcome.rates.modes {
            let overhead = mode_rates.mode.overhead(budget.tau_up, budget.tau_dp);
            let net = net_throughput(&mode_rates.gross_se, config.bandwidth, budget.tau, overhead)
                .map_err(|source| RunError::Drop { drop: d as u64, source })?;
            for (user, (&gross_se, net_throughput)) in mode_rates.gross_se.iter().zip(net).enumerate() {
                records.push(Record {
                    drop: d as u64,
                    user,
                    mode: mode_rates.mode,
                    gross_se,
                    net_throughput,
                });
            }
        }
        drops.push(outcome);
    }

    Ok(ExperimentResult {
        config: config.clone(),
        modes: options.modes.clone(),
        policy: options.policy,
        records,
        drops,
        metadata: Metadata {
            config_hash: config_hash(config),
            seed: config.rng_seed,
            version: version_string(),
        },
    })
}
