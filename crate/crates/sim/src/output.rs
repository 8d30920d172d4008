//! Result files: `samples.csv`, `summary.json`, `manifest.json`, CDF tables
//! and Gaussianity histograms.

use std::fs;
use std::path::{Path, PathBuf};

use cfmimo_core::montecarlo::{GainSamples, UserGaussianity};
use cfmimo_core::stats::{self, CdfSummary};
use cfmimo_core::{Complex64, CsiMode, PowerControlPolicy, SystemConfig};
use serde::{Deserialize, Serialize};

use crate::error::RunError;
use crate::experiment::{ExperimentResult, Metadata, Record};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn ensure_dir(dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RunError::io(path, e))
}

pub fn write_samples(path: &Path, records: &[Record]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub fn read_samples(path: &Path) -> Result<Vec<Record>, RunError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileEntry {
    pub mode: CsiMode,
    /// `"p95_likely"` (5th percentile) or `"median"`.
    pub statistic: String,
    pub net_throughput_bit_per_s: f64,
}

/// `(BT − statistical)/statistical` at the 5th and 50th percentiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingGain {
    pub p95_likely: f64,
    pub median: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub percentiles: Vec<PercentileEntry>,
    pub training_gain_over_statistical: Option<TrainingGain>,
    pub samples_per_mode: usize,
    pub policy: PowerControlPolicy,
    pub config: SystemConfig,
    pub metadata: Metadata,
}

pub fn summarize(result: &ExperimentResult) -> Result<Summary, RunError> {
    let mut percentiles = Vec::new();
    let mut per_mode = Vec::new();
    let mut samples_per_mode = 0;
    for &mode in &result.modes {
        let samples = result.net_throughput(mode);
        samples_per_mode = samples.len();
        let p95 = stats::percentile(&samples, stats::P95_LIKELY)?;
        let median = stats::percentile(&samples, stats::MEDIAN)?;
        percentiles.push(PercentileEntry {
            mode,
            statistic: "p95_likely".into(),
            net_throughput_bit_per_s: p95,
        });
        percentiles.push(PercentileEntry {
            mode,
            statistic: "median".into(),
            net_throughput_bit_per_s: median,
        });
        per_mode.push((mode, p95, median));
    }
    let find = |m: CsiMode| per_mode.iter().find(|e| e.0 == m).copied();
    let training_gain_over_statistical = match (find(CsiMode::Statistical), find(CsiMode::BeamformingTraining)) {
        (Some((_, s5, s50)), Some((_, t5, t50))) => Some(TrainingGain {
            p95_likely: (t5 - s5) / s5,
            median: (t50 - s50) / s50,
        }),
        _ => None,
    };
    Ok(Summary {
        percentiles,
        training_gain_over_statistical,
        samples_per_mode,
        policy: result.policy,
        config: result.config.clone(),
        metadata: result.metadata.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub flags: Vec<String>,
    pub seed: u64,
    pub version: String,
    /// The configuration after flags were applied.
    pub resolved_config: SystemConfig,
    pub files: Vec<String>,
}

/// Writes `samples.csv` and `summary.json` into `dir`.
pub fn write_run(dir: &Path, result: &ExperimentResult) -> Result<Summary, RunError> {
    ensure_dir(dir)?;
    write_samples(&dir.join(SAMPLES_FILE), &result.records)?;
    let summary = summarize(result)?;
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

/// CDF of one mode's net throughput from a samples file.
pub fn mode_cdf(records: &[Record], mode: CsiMode) -> Result<CdfSummary, RunError> {
    let samples: Vec<f64> = records.iter().filter(|r| r.mode == mode).map(|r| r.net_throughput).collect();
    if samples.is_empty() {
        return Err(RunError::NoSamples(mode.to_string()));
    }
    Ok(stats::empirical_cdf(&samples)?)
}

#[derive(Serialize)]
struct CdfRow {
    net_throughput_bit_per_s: f64,
    cdf: f64,
}

pub fn cdf_file_name(mode: CsiMode) -> String {
    format!("cdf_{mode}.csv")
}

pub fn write_cdf(path: &Path, cdf: &CdfSummary) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    for &(x, f) in &cdf.points {
        w.serialize(CdfRow {
            net_throughput_bit_per_s: x,
            cdf: f,
        })?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

/// One histogram bin with the reference Gaussian density at its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub center: f64,
    /// Fraction of samples in the bin.
    pub mass: f64,
    pub empirical_density: f64,
    pub reference_density: f64,
}

/// Equal-width histogram spanning the sample range.
pub fn histogram(samples: &[f64], bins: usize, mean: f64, std: f64) -> Vec<HistogramBin> {
    assert!(bins > 0 && !samples.is_empty());
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let i = (((x - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let n = samples.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let left = lo + i as f64 * width;
            let center = left + 0.5 * width;
            HistogramBin {
                left,
                right: left + width,
                center,
                mass: c as f64 / n,
                empirical_density: c as f64 / n / width,
                reference_density: stats::normal_pdf(center, mean, std),
            }
        })
        .collect()
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    for b in bins {
        w.serialize(b)?;
    }
    w.flush().map_err(|e| RunError::io(path, e))
}

pub const DIRECT_HISTOGRAM_FILE: &str = "hist_direct_gain.csv";
pub const CROSS_HISTOGRAM_FILE: &str = "hist_cross_gain.csv";
pub const GAUSSIANITY_FILE: &str = "gaussianity.json";
pub const HISTOGRAM_BINS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    pub drop: u64,
    pub samples: usize,
    pub policy: PowerControlPolicy,
    /// User whose `Re(a_kk)` is histogrammed.
    pub direct_user: usize,
    /// `(k, k')` whose `Re(a_kk')` is histogrammed.
    pub cross_pair: Option<(usize, usize)>,
    /// Reference mean `Σ_m √η_mk γ_mk` of the histogrammed direct gain.
    pub direct_reference_mean: f64,
    pub direct_reference_std: f64,
    pub cross_reference_std: Option<f64>,
    pub users: Vec<UserGaussianity>,
    pub max_ks_direct: f64,
    pub max_ks_cross: f64,
    pub max_imag_to_real: f64,
}

/// Writes the two histogram files and the statistics file.
pub fn write_gaussianity(
    dir: &Path,
    report: &GaussianityReport,
    samples: &GainSamples,
    cross_varsigma: Option<f64>,
) -> Result<(), RunError> {
    ensure_dir(dir)?;
    let k = report.direct_user;
    let direct: Vec<f64> = samples.entry(k, k).map(|z: Complex64| z.re).collect();
    write_histogram(
        &dir.join(DIRECT_HISTOGRAM_FILE),
        &histogram(&direct, HISTOGRAM_BINS, report.direct_reference_mean, report.direct_reference_std),
    )?;
    // With a single user there is no cross gain; the file then holds the
    // imaginary part of the direct gain against N(0, ·).
    let (cross, std) = match (report.cross_pair, cross_varsigma) {
        (Some((a, b)), Some(v)) => (samples.entry(a, b).map(|z| z.re).collect::<Vec<_>>(), (v / 2.0).sqrt()),
        _ => {
            let im: Vec<f64> = samples.entry(k, k).map(|z| z.im).collect();
            let s = (im.iter().map(|x| x * x).sum::<f64>() / im.len() as f64).sqrt();
            (im, s)
        }
    };
    write_histogram(&dir.join(CROSS_HISTOGRAM_FILE), &histogram(&cross, HISTOGRAM_BINS, 0.0, std))?;
    write_json(&dir.join(GAUSSIANITY_FILE), report)
}
