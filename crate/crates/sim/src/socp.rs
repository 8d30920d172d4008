//! Second-order-cone feasibility oracle for max-min power control, backed by
//! Clarabel.
//!
//! With `x_mk = √(η_mk γ_mk)` and an auxiliary per-AP amplitude `p_m`, a
//! common statistical-CSI SINR target `t` is reachable iff
//!
//! ```text
//! ‖x_m·‖ ≤ p_m ≤ 1                                          for every AP m
//! ‖(√(ρ β_1k) p_1, …, √(ρ β_Mk) p_M, 1)‖ ≤ √(ρ/t) Σ_m √γ_mk x_mk   for every user k
//! x ≥ 0
//! ```
//!
//! The program minimizes `Σ_m p_m`, which drives every user constraint
//! towards equality.

use cfmimo_core::power_control::{self, Feasibility, FeasibilityOracle, MaxMinProblem, MaxMinSettings, MaxMinSolution};
use cfmimo_core::{Matrix, Result};
use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

/// Feasibility oracle solving one SOCP per target.
#[derive(Debug, Clone)]
pub struct SocpOracle {
    pub verbose: bool,
    pub max_solver_iter: u32,
    pub tol_feas: f64,
}

impl Default for SocpOracle {
    fn default() -> Self {
        Self {
            verbose: false,
            max_solver_iter: 200,
            tol_feas: 1e-8,
        }
    }
}

impl SocpOracle {
    pub fn verbose(verbose: bool) -> Self {
        Self {
            verbose,
            ..Self::default()
        }
    }
}

/// Which program to solve for a given target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Program {
    /// Minimize `Σ_m p_m` subject to the constraints above.
    MinPower,
    /// Replace the constant `1` in the user cones by a variable `s ≤ 1` and
    /// maximize `s`. Always strictly feasible, so it stays well conditioned
    /// next to the boundary of the feasible set; the target is reachable iff
    /// `s* = 1`.
    MaxSlack,
}

/// Outcome of one conic solve: status and primal point.
struct Solve {
    status: SolverStatus,
    x: Vec<f64>,
}

impl SocpOracle {
    fn solve(&self, problem: &MaxMinProblem, target: f64, program: Program) -> std::result::Result<Solve, String> {
        let (m_count, k_count) = problem.beta.shape();
        let n_x = m_count * k_count;
        let p_col = |m: usize| n_x + m;
        let s_col = n_x + m_count;
        let n = match program {
            Program::MinPower => n_x + m_count,
            Program::MaxSlack => n_x + m_count + 1,
        };
        let rho = problem.rho_d;

        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut push = |r: usize, c: usize, v: f64| {
            rows.push(r);
            cols.push(c);
            vals.push(v);
        };

        // p_m ≤ 1, x ≥ 0 and, for the slack program, 0 ≤ s ≤ 1.
        let mut row = 0;
        for m in 0..m_count {
            push(row, p_col(m), 1.0);
            b.push(1.0);
            row += 1;
        }
        for i in 0..n_x {
            push(row, i, -1.0);
            b.push(0.0);
            row += 1;
        }
        let mut nonneg = m_count + n_x;
        if program == Program::MaxSlack {
            push(row, s_col, 1.0);
            push(row + 1, s_col, -1.0);
            b.extend([1.0, 0.0]);
            row += 2;
            nonneg += 2;
        }
        cones.push(SupportedConeT::NonnegativeConeT(nonneg));

        for m in 0..m_count {
            push(row, p_col(m), -1.0);
            b.push(0.0);
            row += 1;
            for k in 0..k_count {
                push(row, m * k_count + k, -1.0);
                b.push(0.0);
                row += 1;
            }
            cones.push(SupportedConeT::SecondOrderConeT(k_count + 1));
        }

        let scale = (rho / target).sqrt();
        for k in 0..k_count {
            for m in 0..m_count {
                let g = problem.gamma[(m, k)];
                if g > 0.0 {
                    push(row, m * k_count + k, -scale * g.sqrt());
                }
            }
            b.push(0.0);
            match program {
                Program::MinPower => b.push(1.0),
                Program::MaxSlack => {
                    push(row + 1, s_col, -1.0);
                    b.push(0.0);
                }
            }
            row += 2;
            for m in 0..m_count {
                let bm = problem.beta[(m, k)];
                if bm > 0.0 {
                    push(row, p_col(m), -(rho * bm).sqrt());
                }
                b.push(0.0);
                row += 1;
            }
            cones.push(SupportedConeT::SecondOrderConeT(m_count + 2));
        }

        let a = CscMatrix::new_from_triplets(row, n, rows, cols, vals);
        let p = CscMatrix::zeros((n, n));
        let mut q = vec![0.0; n];
        match program {
            Program::MinPower => q[n_x..].iter_mut().for_each(|v| *v = 1.0),
            Program::MaxSlack => q[s_col] = -1.0,
        }
        let settings = DefaultSettings {
            verbose: self.verbose,
            max_iter: self.max_solver_iter,
            tol_feas: self.tol_feas,
            ..DefaultSettings::default()
        };
        let mut solver =
            DefaultSolver::new(&p, &q, &a, &b, &cones, settings).map_err(|e| format!("solver setup failed: {e:?}"))?;
        solver.solve();
        Ok(Solve {
            status: solver.solution.status,
            x: solver.solution.x.clone(),
        })
    }
}

fn coefficients(problem: &MaxMinProblem, x: &[f64]) -> Matrix<f64> {
    let k_count = problem.num_users();
    Matrix::from_fn(problem.num_aps(), k_count, |m, k| {
        let g = problem.gamma[(m, k)];
        let xm = x[m * k_count + k].max(0.0);
        if g > 0.0 {
            xm * xm / g
        } else {
            0.0
        }
    })
}

/// Slack value above which the slack program certifies the target.
const SLACK_ACCEPT: f64 = 1.0 - 1e-6;

impl FeasibilityOracle for SocpOracle {
    fn check(&mut self, problem: &MaxMinProblem, target: f64) -> Feasibility {
        let first = match self.solve(problem, target, Program::MinPower) {
            Ok(s) => s,
            Err(e) => return Feasibility::Failed(e),
        };
        match first.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                return Feasibility::Feasible(coefficients(problem, &first.x))
            }
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => return Feasibility::Infeasible,
            _ => {}
        }
        let second = match self.solve(problem, target, Program::MaxSlack) {
            Ok(s) => s,
            Err(e) => return Feasibility::Failed(e),
        };
        match second.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => {
                let slack = second.x[problem.num_aps() * problem.num_users() + problem.num_aps()];
                if slack >= SLACK_ACCEPT {
                    Feasibility::Feasible(coefficients(problem, &second.x))
                } else {
                    Feasibility::Infeasible
                }
            }
            other => Feasibility::Failed(format!(
                "conic solver stopped with status {:?}, then {other:?}, at target {target:e}",
                first.status
            )),
        }
    }
}

/// Bisection tolerances used by the experiment runner.
pub fn default_settings() -> MaxMinSettings {
    MaxMinSettings {
        tol: 1e-3,
        max_iter: 60,
        feasibility_tol: 1e-4,
    }
}

/// Max-min fair coefficients for one drop.
pub fn maxmin_eta(problem: &MaxMinProblem, settings: &MaxMinSettings, verbose: bool) -> Result<MaxMinSolution> {
    power_control::maxmin_eta(problem, settings, &mut SocpOracle::verbose(verbose))
}
