//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::time::Instant;

use cfmimo::core::estimation::{gain_moments, mmse_scale};
use cfmimo::core::montecarlo::{gaussianity_diagnostic, PreparedDrop};
use cfmimo::core::power_control::{check_power_constraint, MaxMinProblem};
use cfmimo::core::rates::{se_beamforming_training, se_statistical, TrainingSample};
use cfmimo::core::rng;
use cfmimo::core::{Complex64, CsiMode, Matrix, PowerControlPolicy, SystemConfig};
use cfmimo::experiment::{run_experiment, ExperimentOptions, ExperimentResult};
use cfmimo::output::{summarize, write_samples};
use cfmimo::socp::{default_settings, maxmin_eta};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, name: &str, started: Instant, o: &Outcome) {
    println!(
        "{} criterion {id} ({name}): {} [{:.1} s]",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        started.elapsed().as_secs_f64()
    );
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Random valid η: positive weights normalized to exhaust each AP budget.
fn random_eta(gamma: &Matrix<f64>, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    let (m, k) = gamma.shape();
    let w = Matrix::from_fn(m, k, |_, _| 0.1 + rng::unit_uniform(rng));
    Matrix::from_fn(m, k, |i, j| {
        let used: f64 = (0..k).map(|l| w[(i, l)] * gamma[(i, l)]).sum();
        w[(i, j)] / used
    })
}

fn reduction_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let m = 1 + (rng::unit_uniform(&mut rng) * 20.0) as usize;
        let k = 1 + (rng::unit_uniform(&mut rng) * 5.0) as usize;
        let beta = Matrix::from_fn(m, k, |_, _| 10f64.powf(-3.0 * rng::unit_uniform(&mut rng)));
        let gamma = beta.map(|b| b * (0.05 + 0.9 * rng::unit_uniform(&mut rng)));
        let eta = random_eta(&gamma, &mut rng);
        let rho = 10f64.powf(4.0 * rng::unit_uniform(&mut rng) - 1.0);
        let st = se_statistical(&beta, &gamma, &eta, rho).unwrap();
        let moments = gain_moments(&beta, &gamma, &eta, k, 0.0).unwrap();
        let draws: Vec<(Vec<Complex64>, Vec<Complex64>)> = (0..5)
            .map(|_| {
                let a = (0..k).map(|_| rng::complex_normal(&mut rng) * 3.0).collect();
                let n = (0..k).map(|_| rng::complex_normal(&mut rng)).collect();
                (a, n)
            })
            .collect();
        let bt = se_beamforming_training(
            &moments,
            rho,
            draws.iter().map(|(a, n)| TrainingSample {
                a_diag: a,
                pilot_noise: n,
            }),
        )
        .unwrap();
        for (s, b) in st.iter().zip(&bt) {
            let r = rel(*b, *s);
            if !(r <= 1e-12) {
                return Outcome {
                    pass: false,
                    detail: format!("instance {i}: statistical {s} vs training {b}"),
                };
            }
            worst = worst.max(r);
        }
    }
    Outcome {
        pass: true,
        detail: format!("100 instances, max relative difference {worst:.1e}"),
    }
}

/// Worst relative error of the four closed-form moments on one instance,
/// from `n` brute-force draws of the full signal chain.
fn moment_errors(cfg: &SystemConfig, beta: &Matrix<f64>, eta: &Matrix<f64>, n: usize, seed: u64) -> [f64; 4] {
    let (m_count, k_count) = beta.shape();
    let lb = cfg.link_budget();
    let c = mmse_scale(beta, lb.tau_up, lb.rho_up);
    let up = (lb.tau_up as f64 * lb.rho_up).sqrt();
    let dp = lb.tau_dp as f64 * lb.rho_dp;
    let gamma = beta.zip_map(&c, |b, c| up * b * c).unwrap();
    let mom = gain_moments(beta, &gamma, eta, lb.tau_dp, lb.rho_dp).unwrap();
    let sqrt_eta = eta.map(|e| e.sqrt());
    let sqrt_beta = beta.map(|b| b.sqrt());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![Complex64::default(); m_count * k_count];
    let mut gh = vec![Complex64::default(); m_count * k_count];
    let mut sum_a = vec![0.0; k_count];
    let mut sum_a_im = vec![0.0; k_count];
    let mut sum_a2 = vec![0.0; k_count];
    let mut cross = vec![0.0; k_count * k_count];
    let mut err = vec![0.0; k_count];
    for _ in 0..n {
        for i in 0..m_count * k_count {
            g[i] = rng::complex_normal(&mut rng) * sqrt_beta.as_slice()[i];
            gh[i] = (g[i] * up + rng::complex_normal(&mut rng)) * c.as_slice()[i];
        }
        for k in 0..k_count {
            for kp in 0..k_count {
                let mut a = Complex64::default();
                for m in 0..m_count {
                    a += g[m * k_count + k] * gh[m * k_count + kp].conj() * sqrt_eta[(m, kp)];
                }
                if kp != k {
                    cross[k * k_count + kp] += a.norm_sqr();
                    continue;
                }
                sum_a[k] += a.re;
                sum_a_im[k] += a.im;
                sum_a2[k] += a.norm_sqr();
                let y = a * dp.sqrt() + rng::complex_normal(&mut rng);
                let v = mom.varsigma[(k, k)];
                let ah = (y * (dp.sqrt() * v) + mom.mean_akk[k]) / (dp * v + 1.0);
                err[k] += (a - ah).norm_sqr();
            }
        }
    }
    let nf = n as f64;
    let mut worst = [0.0f64; 4];
    for k in 0..k_count {
        let mean = sum_a[k] / nf;
        let var = sum_a2[k] / nf - mean * mean - (sum_a_im[k] / nf).powi(2);
        worst[0] = worst[0].max(rel(mean, mom.mean_akk[k]));
        worst[1] = worst[1].max(rel(var, mom.varsigma[(k, k)]));
        worst[3] = worst[3].max(rel(err[k] / nf, mom.err_var[k]));
        for kp in (0..k_count).filter(|&kp| kp != k) {
            worst[2] = worst[2].max(rel(cross[k * k_count + kp] / nf, mom.varsigma[(k, kp)]));
        }
    }
    worst
}

fn moment_oracles() -> Outcome {
    let cfg = SystemConfig {
        num_aps: 20,
        num_users: 5,
        ..SystemConfig::default()
    };
    let mut worst = [0.0f64; 4];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for inst in 0..20u64 {
        let prepared = PreparedDrop::new(&cfg, 1000 + inst);
        let eta = random_eta(prepared.gamma(), &mut rng);
        let e = moment_errors(&cfg, prepared.beta(), &eta, 1_000_000, 500 + inst);
        for (w, x) in worst.iter_mut().zip(e) {
            *w = w.max(x);
        }
    }
    Outcome {
        pass: worst.iter().all(|&w| w < 0.02),
        detail: format!(
            "20 instances x 10^6 draws; worst relative error E a_kk {:.2}%, Var a_kk {:.2}%, E|a_kk'|^2 {:.2}%, E|err|^2 {:.2}% (limit 2%)",
            100.0 * worst[0],
            100.0 * worst[1],
            100.0 * worst[2],
            100.0 * worst[3]
        ),
    }
}

fn gaussianity() -> Outcome {
    let cfg = SystemConfig {
        num_aps: 20,
        num_users: 5,
        ..SystemConfig::default()
    };
    let prepared = PreparedDrop::new(&cfg, 0);
    let problem = MaxMinProblem::new(prepared.beta().clone(), prepared.gamma().clone(), prepared.budget.rho_d).unwrap();
    let eta = maxmin_eta(&problem, &default_settings(), false).unwrap().coefficients.eta;
    let users = gaussianity_diagnostic(&cfg, &prepared, &eta, 100_000).unwrap();
    let direct = users.iter().map(|u| u.ks_direct).fold(0.0, f64::max);
    let cross = users.iter().map(|u| u.ks_cross).fold(0.0, f64::max);
    let ratio = users.iter().map(|u| u.imag_to_real).fold(0.0, f64::max);
    Outcome {
        pass: direct < 0.03 && cross < 0.03 && ratio < 0.15,
        detail: format!(
            "drop 0, M=20, K=5, 10^5 draws; max KS Re(a_kk) {direct:.4}, max KS a_kk' {cross:.4} (limit 0.03); max mean|Im|/mean|Re| {ratio:.3} (limit 0.15)"
        ),
    }
}

fn grid_match() -> (bool, String) {
    let mut worst: f64 = 0.0;
    let cases: [(Vec<f64>, usize, usize, f64); 5] = [
        (vec![1.0, 0.2], 2, 1, 5.0),
        (vec![2.0, 0.01], 2, 1, 1.0),
        (vec![1.0, 0.1, 0.2, 0.8], 2, 2, 10.0),
        (vec![0.5, 0.4, 0.3, 0.6], 2, 2, 3.0),
        (vec![1.0, 0.05, 0.9, 0.02], 2, 2, 20.0),
    ];
    for (beta, m, k, rho) in cases {
        let beta = Matrix::from_vec(m, k, beta).unwrap();
        let gamma = beta.map(|b| 0.6 * b);
        let p = MaxMinProblem::new(beta.clone(), gamma.clone(), rho).unwrap();
        let sol = maxmin_eta(&p, &default_settings(), false).unwrap();
        if !check_power_constraint(&sol.coefficients.eta, &gamma).satisfied {
            return (false, "solver output violates the power constraint".into());
        }
        let grid = if k == 1 {
            common::grid_single_user(&beta, &gamma, rho)
        } else {
            common::grid_two_users(&beta, &gamma, rho)
        };
        worst = worst.max(rel(p.min_sinr(&sol.coefficients.eta), grid));
    }
    (worst <= 5e-3, format!("grid mismatch {:.3}% (limit 0.5%)", 100.0 * worst))
}

fn experiment(m: usize, k: usize, ap_power: f64, user_power: f64, threads: usize) -> ExperimentResult {
    let cfg = SystemConfig {
        num_aps: m,
        num_users: k,
        ap_power,
        user_power,
        num_drops: 200,
        num_channel_samples: 1000,
        ..SystemConfig::default()
    };
    let options = ExperimentOptions {
        modes: CsiMode::ALL.to_vec(),
        policy: PowerControlPolicy::MaxMin,
        threads: Some(threads),
        ..ExperimentOptions::default()
    };
    run_experiment(&cfg, &options).expect("experiment runs")
}

fn gains(result: &ExperimentResult, p95: f64, median: f64, tol: f64) -> Outcome {
    let g = summarize(result).unwrap().training_gain_over_statistical.unwrap();
    let pass = (g.p95_likely - p95).abs() <= tol && (g.median - median).abs() <= tol;
    Outcome {
        pass,
        detail: format!(
            "gain at 95%-likely {:.1}% (target {:.0}%), at median {:.1}% (target {:.0}%), tolerance ±{:.0} points",
            100.0 * g.p95_likely,
            100.0 * p95,
            100.0 * g.median,
            100.0 * median,
            100.0 * tol
        ),
    }
}

fn ordering(results: &[&ExperimentResult]) -> Outcome {
    let (mut checked, mut violations) = (0, Vec::new());
    for r in results {
        for d in &r.drops {
            let st = d.rates.get(CsiMode::Statistical).unwrap();
            let bt = d.rates.get(CsiMode::BeamformingTraining).unwrap();
            let pf = d.rates.get(CsiMode::Perfect).unwrap();
            let diff = d.rates.perfect_minus_training_std_error.as_ref().unwrap();
            for k in 0..st.gross_se.len() {
                checked += 1;
                if bt.gross_se[k] < st.gross_se[k] - 2.0 * bt.std_error[k]
                    || pf.gross_se[k] < bt.gross_se[k] - 2.0 * diff[k]
                {
                    violations.push(format!("M={} drop {} user {k}", r.config.num_aps, d.rates.drop));
                }
            }
        }
    }
    Outcome {
        pass: violations.is_empty(),
        detail: format!(
            "{checked} (drop, user) pairs, {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first {v}")).unwrap_or_default()
        ),
    }
}

fn main() {
    let mut all = true;
    let mut record = |id, name, started, o: Outcome| {
        report(id, name, started, &o);
        all &= o.pass;
    };

    let t = Instant::now();
    record(1, "reduction identity", t, reduction_identity());
    let t = Instant::now();
    record(2, "moment oracles", t, moment_oracles());
    let t = Instant::now();
    record(3, "Gaussian approximation", t, gaussianity());

    let t = Instant::now();
    let fig2 = experiment(50, 10, 0.2, 0.1, 8);
    record(4, "M=50 K=10 200/100 mW", t, gains(&fig2, 0.18, 0.29, 0.06));
    let t = Instant::now();
    let fig3 = experiment(100, 20, 0.2, 0.1, 8);
    record(5, "M=100 K=20 200/100 mW", t, gains(&fig3, 0.04, 0.13, 0.04));
    let t = Instant::now();
    let fig4 = experiment(50, 10, 0.05, 0.02, 8);
    record(6, "M=50 K=10 50/20 mW", t, gains(&fig4, 0.26, 0.34, 0.07));

    let t = Instant::now();
    record(7, "mode ordering", t, ordering(&[&fig2, &fig3, &fig4]));

    let t = Instant::now();
    let runs = [&fig2, &fig3, &fig4];
    let emitted: usize = runs.iter().map(|r| r.drops.len()).sum();
    let bad = runs.iter().flat_map(|r| &r.drops).filter(|d| !d.power_constraint_satisfied).count();
    let margin = runs.iter().flat_map(|r| &r.drops).map(|d| d.min_power_margin).fold(f64::INFINITY, f64::min);
    let (grid_ok, grid_detail) = grid_match();
    record(
        8,
        "power control validity",
        t,
        Outcome {
            pass: bad == 0 && grid_ok,
            detail: format!("{bad} of {emitted} drops violate the power constraint (min margin {margin:.2e}); {grid_detail}"),
        },
    );

    let t = Instant::now();
    let serial = experiment(50, 10, 0.2, 0.1, 1);
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("w8.csv"), dir.path().join("w1.csv"));
    write_samples(&a, &fig2.records).unwrap();
    write_samples(&b, &serial.records).unwrap();
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    record(
        9,
        "determinism",
        t,
        Outcome {
            pass: a == b,
            detail: format!("samples.csv at 8 and 1 workers: {} vs {} bytes, identical: {}", a.len(), b.len(), a == b),
        },
    );

    if !all {
        std::process::exit(1);
    }
}
