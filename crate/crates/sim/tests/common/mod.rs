//! Exhaustive-search references for max-min power control on two-AP
//! instances.
#![allow(dead_code)]

use cfmimo::core::Matrix;

pub const GRID: usize = 200;

/// Statistical-CSI SINR of user `k` when AP `m` puts `u[m][k] = η_mk γ_mk`
/// of its budget on user `k`.
pub fn sinr(beta: &Matrix<f64>, gamma: &Matrix<f64>, rho: f64, u: &[[f64; 2]; 2], k: usize, users: usize) -> f64 {
    let mut signal = 0.0;
    let mut interference = 0.0;
    for m in 0..2 {
        signal += (u[m][k] * gamma[(m, k)]).sqrt();
        interference += beta[(m, k)] * (0..users).map(|j| u[m][j]).sum::<f64>();
    }
    rho * signal * signal / (rho * interference + 1.0)
}

/// M = 2, K = 1: grid over each AP's used power fraction, then zoom in.
pub fn grid_single_user(beta: &Matrix<f64>, gamma: &Matrix<f64>, rho: f64) -> f64 {
    let (mut c, mut half) = ([0.5, 0.5], 0.5);
    let mut best = 0.0;
    for _ in 0..6 {
        let mut arg = c;
        for i in 0..=GRID {
            for j in 0..=GRID {
                let r = [
                    (c[0] - half + 2.0 * half * i as f64 / GRID as f64).clamp(0.0, 1.0),
                    (c[1] - half + 2.0 * half * j as f64 / GRID as f64).clamp(0.0, 1.0),
                ];
                let s = sinr(beta, gamma, rho, &[[r[0], 0.0], [r[1], 0.0]], 0, 1);
                if s > best {
                    best = s;
                    arg = r;
                }
            }
        }
        c = arg;
        half *= 0.05;
    }
    best
}

/// M = 2, K = 2: AP `m` spends `r_m` of its budget, split by angle `θ_m`
/// (`cos²θ` to user 0). Some AP is at full power at the optimum (scaling all
/// coefficients up raises every SINR), so one radius is pinned to 1 and the
/// other swept.
pub fn grid_two_users(beta: &Matrix<f64>, gamma: &Matrix<f64>, rho: f64) -> f64 {
    let quarter = std::f64::consts::FRAC_PI_2;
    let mut best = 0.0;
    let mut arg = (0, [0.0; 2], 1.0);
    let min_sinr = |full: usize, th: [f64; 2], r: f64| {
        let mut u = [[0.0; 2]; 2];
        for m in 0..2 {
            let radius = if m == full { 1.0 } else { r };
            u[m] = [radius * th[m].cos().powi(2), radius * th[m].sin().powi(2)];
        }
        sinr(beta, gamma, rho, &u, 0, 2).min(sinr(beta, gamma, rho, &u, 1, 2))
    };
    for full in 0..2 {
        for i in 0..=GRID {
            for j in 0..=GRID {
                for l in 0..=20 {
                    let th = [quarter * i as f64 / GRID as f64, quarter * j as f64 / GRID as f64];
                    let r = l as f64 / 20.0;
                    let s = min_sinr(full, th, r);
                    if s > best {
                        best = s;
                        arg = (full, th, r);
                    }
                }
            }
        }
    }
    // Local refinement around the grid optimum.
    let (full, mut th, mut r) = (arg.0, arg.1, arg.2);
    let (mut dth, mut dr) = (quarter / GRID as f64, 0.05);
    for _ in 0..5 {
        let c = (th, r);
        for i in 0..=40 {
            for j in 0..=40 {
                for l in 0..=20 {
                    let t = [
                        (c.0[0] + dth * (i as f64 - 20.0) / 20.0).clamp(0.0, quarter),
                        (c.0[1] + dth * (j as f64 - 20.0) / 20.0).clamp(0.0, quarter),
                    ];
                    let rr = (c.1 + dr * (l as f64 - 10.0) / 10.0).clamp(0.0, 1.0);
                    let s = min_sinr(full, t, rr);
                    if s > best {
                        best = s;
                        th = t;
                        r = rr;
                    }
                }
            }
        }
        dth *= 0.1;
        dr *= 0.1;
    }
    best
}
