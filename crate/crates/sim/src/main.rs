use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cfmimo::config::{parse_modes, RunFile};
use cfmimo::core::{CsiMode, PowerControlPolicy, SystemConfig};
use cfmimo::diagnostics::{run_gaussianity, DEFAULT_GAUSSIANITY_SAMPLES};
use cfmimo::experiment::{self, version_string, ExperimentOptions};
use cfmimo::output::{self, RunManifest};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfmimo", version, about = "Cell-free massive MIMO downlink simulator with beamformed pilots")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate drops and write samples.csv, summary.json and manifest.json.
    Run(RunArgs),
    /// Tabulate the empirical CDF of net throughput from a samples file.
    Cdf(CdfArgs),
    /// Compare effective-gain samples with their Gaussian approximations.
    Gaussianity(GaussianityArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file with system and run keys.
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// uniform or maxmin.
    #[arg(long = "power-control")]
    power_control: Option<PowerControlPolicy>,
    /// Print per-drop progress and conic solver logs.
    #[arg(long)]
    verbose: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated subset of statistical, beamforming_training, perfect.
    #[arg(long)]
    modes: Option<String>,
    /// Worker threads; does not change results.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    drops: Option<usize>,
    /// Small-scale realizations per drop.
    #[arg(long = "channel-samples")]
    channel_samples: Option<usize>,
}

#[derive(Args)]
struct CdfArgs {
    /// samples.csv written by `run`.
    samples: PathBuf,
    /// Restrict to one mode; default is every mode in the file.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct GaussianityArgs {
    #[command(flatten)]
    common: Common,
    /// Drop index to examine.
    #[arg(long, default_value_t = 0)]
    drop: u64,
    /// Effective-gain realizations (at least 10^4).
    #[arg(long)]
    samples: Option<usize>,
}

struct Resolved {
    file: RunFile,
    out: PathBuf,
    policy: PowerControlPolicy,
    verbose: bool,
}

fn resolve(common: &Common) -> Result<Resolved> {
    let mut file = match &common.config {
        Some(p) => RunFile::load(p)?,
        None => RunFile::default(),
    };
    if let Some(seed) = common.seed {
        file.system.rng_seed = seed;
    }
    let out = common.out.clone().or_else(|| file.run.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let policy = common.power_control.or(file.run.power_control).unwrap_or(PowerControlPolicy::MaxMin);
    let verbose = common.verbose || file.run.verbose.unwrap_or(false);
    Ok(Resolved {
        file,
        out,
        policy,
        verbose,
    })
}

fn write_manifest(
    subcommand: &str,
    config_path: Option<&Path>,
    out: &Path,
    system: &SystemConfig,
    files: &[&str],
) -> Result<()> {
    let manifest = RunManifest {
        subcommand: subcommand.into(),
        config_path: config_path.map(Path::to_path_buf),
        output_dir: out.to_path_buf(),
        flags: std::env::args().skip(2).collect(),
        seed: system.rng_seed,
        version: version_string(),
        resolved_config: system.clone(),
        files: files.iter().map(|s| s.to_string()).collect(),
    };
    output::write_json(&out.join(output::MANIFEST_FILE), &manifest)?;
    Ok(())
}

fn print_file(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading back {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let Resolved {
        mut file,
        out,
        policy,
        verbose,
    } = resolve(&args.common)?;
    if let Some(d) = args.drops {
        file.system.num_drops = d;
    }
    if let Some(s) = args.channel_samples {
        file.system.num_channel_samples = s;
    }
    let modes = match &args.modes {
        Some(list) => parse_modes(list)?,
        None => file.run.modes.clone().unwrap_or_else(|| CsiMode::ALL.to_vec()),
    };
    let options = ExperimentOptions {
        modes,
        policy,
        threads: args.threads.or(file.run.threads),
        verbose,
        ..ExperimentOptions::default()
    };
    file.system.validate().context("invalid configuration")?;
    output::ensure_dir(&out)?;
    let result = experiment::run_experiment(&file.system, &options)?;
    output::write_run(&out, &result)?;
    write_manifest(
        "run",
        args.common.config.as_deref(),
        &out,
        &file.system,
        &[output::SAMPLES_FILE, output::SUMMARY_FILE],
    )?;
    print_file(&out.join(output::SUMMARY_FILE))
}

fn cmd_cdf(args: CdfArgs) -> Result<()> {
    let records = output::read_samples(&args.samples)?;
    let modes = match &args.mode {
        Some(m) => parse_modes(m)?,
        None => {
            let mut present: Vec<CsiMode> = records.iter().map(|r| r.mode).collect();
            present.sort();
            present.dedup();
            present
        }
    };
    if modes.is_empty() {
        anyhow::bail!("{} contains no samples", args.samples.display());
    }
    output::ensure_dir(&args.out)?;
    for mode in modes {
        let cdf = output::mode_cdf(&records, mode)?;
        let path = args.out.join(output::cdf_file_name(mode));
        output::write_cdf(&path, &cdf)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn cmd_gaussianity(args: GaussianityArgs) -> Result<()> {
    let Resolved {
        file,
        out,
        policy,
        verbose,
    } = resolve(&args.common)?;
    let n = args.samples.or(file.run.gaussianity_samples).unwrap_or(DEFAULT_GAUSSIANITY_SAMPLES);
    let (report, samples, varsigma) = run_gaussianity(&file.system, args.drop, policy, n, verbose)?;
    output::write_gaussianity(&out, &report, &samples, varsigma)?;
    write_manifest(
        "gaussianity",
        args.common.config.as_deref(),
        &out,
        &file.system,
        &[output::DIRECT_HISTOGRAM_FILE, output::CROSS_HISTOGRAM_FILE, output::GAUSSIANITY_FILE],
    )?;
    print_file(&out.join(output::GAUSSIANITY_FILE))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Cdf(a) => cmd_cdf(a),
        Command::Gaussianity(a) => cmd_gaussianity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
