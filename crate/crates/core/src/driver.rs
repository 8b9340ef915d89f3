//! Penalty-doubling driver and the theoretical constants used by the
//! runtime bound checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::auglag::PenaltyParams;
use crate::cycle::{run_cycle, CycleConfig, CycleHistory, CycleOutcome, StationaryTriple};
use crate::problem::{ProblemInstance, TolerancePair};
use crate::{log1_plus, Error, Result, Vector};

/// Starting point of each cycle after a penalty increase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestartMode {
    /// Restart from the original `z0`.
    Cold,
    /// Restart from the last `z_k` of the failed cycle.
    HybridWarm,
}

impl RestartMode {
    pub fn name(self) -> &'static str {
        match self {
            RestartMode::Cold => "cold",
            RestartMode::HybridWarm => "warm",
        }
    }
}

pub const DEFAULT_MAX_CYCLES: usize = 64;

#[derive(Debug, Clone)]
pub struct DriverConfig {
    pub c1: f64,
    pub restart: RestartMode,
    pub nu: f64,
    pub sigma: f64,
    pub tol: TolerancePair,
    /// Per-cycle outer cap; `None` uses the cycle default.
    pub max_outer: Option<usize>,
    pub max_cycles: usize,
    pub acg_trace: bool,
    pub deadline: Option<std::time::Instant>,
}

impl DriverConfig {
    pub fn new(tol: TolerancePair) -> Self {
        DriverConfig {
            c1: 1.0,
            restart: RestartMode::HybridWarm,
            nu: 1.0,
            sigma: std::f64::consts::FRAC_1_SQRT_2,
            tol,
            max_outer: None,
            max_cycles: DEFAULT_MAX_CYCLES,
            acg_trace: false,
            deadline: None,
        }
    }

    fn cycle_config(&self, c: f64) -> CycleConfig {
        CycleConfig {
            nu: self.nu,
            sigma: self.sigma,
            c,
            tol: self.tol,
            max_outer: self.max_outer,
            acg_trace: self.acg_trace,
            deadline: self.deadline,
        }
    }
}

/// Constants entering the complexity bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalConstants {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub c_bar: f64,
    /// `phi(zbar) - phi_lower + D^2 / lambda`, when a lower bound is known.
    pub r_star: Option<f64>,
    pub t1: f64,
    pub t2: f64,
    pub d_bar: f64,
    pub grad_bound: f64,
    pub c_one: f64,
    pub lambda: f64,
    pub diameter: f64,
    /// `phi(zbar)`, an upper bound on the optimal value.
    pub phi_upper: f64,
    pub phi_lower: Option<f64>,
}

/// Computes all constants for `(nu, sigma, tol)` and initial penalty `c1`.
pub fn theoretical_constants(
    problem: &ProblemInstance,
    nu: f64,
    sigma: f64,
    tol: &TolerancePair,
    c1: f64,
) -> Result<TheoreticalConstants> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::Argument(format!("sigma must lie in (0, 1), got {sigma}")));
    }
    if !(nu > 0.0) {
        return Err(Error::Argument(format!("nu must be positive, got {nu}")));
    }
    let m_f = problem.smooth.m_f;
    let lambda = 1.0 / (2.0 * m_f);
    let d = problem.diameter();
    let d_bar = problem.slater_distance();
    let grad_bound = problem.grad_bound();
    let l_h = problem.composite.l_h;
    let op = problem.constraint.op_norm;
    let sp = problem.constraint.sigma_plus;

    let kappa0 = (2.0 * (l_h + grad_bound) * d
        + (2.0 * (1.0 + nu) / (1.0 - sigma) + sigma * sigma / (2.0 * (1.0 - sigma).powi(2))) * d * d / lambda)
        / sp;
    let kappa2 = 2.0 * kappa0 / d_bar + nu * d / (lambda * op * (1.0 - sigma));
    let kappa1 =
        32.0 * (1.0 + 2.0 * nu).powi(2) * kappa0 * kappa0 / (lambda * (1.0 - sigma * sigma) * d_bar * d_bar);
    let c_bar = (kappa1 / (tol.rho * tol.rho)).max(kappa2 / tol.eta);
    let phi_upper = problem.objective(&problem.slater_point);
    let r_star = problem.phi_lower.map(|lo| phi_upper - lo + d * d / lambda);
    let t1 = c1
        .max(m_f * kappa0 * kappa0 / (d_bar * d_bar * tol.rho * tol.rho))
        .max(kappa0 / (d_bar * tol.eta));
    let t2 = (problem.smooth.l_f + t1 * op * op) / m_f;
    Ok(TheoreticalConstants {
        kappa0,
        kappa1,
        kappa2,
        c_bar,
        r_star,
        t1,
        t2,
        d_bar,
        grad_bound,
        c_one: 2.0 * (1.0 + 2.0 * nu).powi(2) / (1.0 - sigma * sigma),
        lambda,
        diameter: d,
        phi_upper,
        phi_lower: problem.phi_lower,
    })
}

/// ACG iterations allowed per outer iteration:
/// `ceil(1 + sqrt(T_c) log1+(2 T_c / min{nu, sigma}))` with `T_c = 2 lambda L_c + 1`.
pub fn inner_iteration_bound(params: &PenaltyParams) -> usize {
    let t_c = 2.0 * params.lambda * params.l_c + 1.0;
    (1.0 + t_c.sqrt() * log1_plus(2.0 * t_c / params.nu.min(params.sigma))).ceil() as usize
}

/// Outer iterations per cycle, when `R*` is available.
pub fn outer_iteration_bound(k: &TheoreticalConstants, nu: f64, sigma: f64, rho: f64, c: f64) -> Option<usize> {
    let r = k.r_star?;
    let lead = 4.0 * (1.0 + 2.0 * nu).powi(2) / ((1.0 - sigma * sigma) * k.lambda * rho * rho);
    let v = (1.0 + lead * (3.0 * r + k.kappa0 * k.kappa0 / (2.0 * k.d_bar * k.d_bar * c))).ceil();
    if v.is_finite() && v < 1e18 {
        Some(v as usize)
    } else {
        None
    }
}

/// Number of penalty cycles: `ceil(log2(max{1, 2 c_bar / c1})) + 1`.
pub fn cycle_count_bound(c_bar: f64, c1: f64) -> usize {
    (2.0 * c_bar / c1).max(1.0).log2().ceil() as usize + 1
}

/// Summary of a single cycle.
#[derive(Debug, Clone, Serialize)]
pub struct CycleSummary {
    pub c: f64,
    pub outcome: &'static str,
    pub outer_iters: usize,
    pub total_acg_iters: usize,
    pub final_w_hat: f64,
    pub final_feasibility: f64,
}

/// Full record of a driver run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub success: bool,
    pub restart: RestartMode,
    pub triple: Option<StationaryTriple>,
    pub cycles: Vec<CycleSummary>,
    pub histories: Vec<CycleHistory>,
    pub constants: Option<TheoreticalConstants>,
    pub tol: TolerancePair,
    pub nu: f64,
    pub sigma: f64,
    pub c1: f64,
}

impl SolveReport {
    pub fn total_acg_iters(&self) -> usize {
        self.cycles.iter().map(|c| c.total_acg_iters).sum()
    }
}

fn summarize(outcome: &CycleOutcome) -> CycleSummary {
    let h = outcome.history();
    let last = h.records.last();
    CycleSummary {
        c: h.c(),
        outcome: outcome.name(),
        outer_iters: h.records.len(),
        total_acg_iters: h.total_inner(),
        final_w_hat: last.map_or(f64::NAN, |r| r.w_hat_norm),
        final_feasibility: last.map_or(f64::NAN, |r| r.feas),
    }
}

/// One row of a penalty sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub c: f64,
    pub outcome: &'static str,
    pub outer_iters: usize,
    pub total_acg_iters: usize,
    /// `||A z_hat - b||` at the last iteration, NaN if none ran.
    pub final_feasibility: f64,
    pub final_w_hat: f64,
    /// `kappa2 / c`, NaN when the constants are not computable.
    pub feasibility_bound: f64,
}

/// Runs a single cycle at each `c` of an ascending grid, in parallel.
/// Rows come back in grid order.
pub fn sweep(problem: &ProblemInstance, grid: &[f64], base: &CycleConfig, z0: &Vector) -> Result<Vec<SweepRow>> {
    if grid.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::Argument("sweep grid must be positive and finite".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Argument("sweep grid must be strictly ascending".into()));
    }
    let kappa2 = theoretical_constants(problem, base.nu, base.sigma, &base.tol, grid.first().copied().unwrap_or(1.0))
        .map_or(f64::NAN, |k| k.kappa2);
    grid.par_iter()
        .map(|&c| {
            let cfg = CycleConfig { c, ..base.clone() };
            let out = run_cycle(problem, &cfg, z0)?;
            let s = summarize(&out);
            Ok(SweepRow {
                c,
                outcome: s.outcome,
                outer_iters: s.outer_iters,
                total_acg_iters: s.total_acg_iters,
                final_feasibility: s.final_feasibility,
                final_w_hat: s.final_w_hat,
                feasibility_bound: kappa2 / c,
            })
        })
        .collect()
}

/// Runs cycles with `c = c1 2^(l-1)` until one succeeds.
pub fn solve(problem: &ProblemInstance, config: &DriverConfig, z0: &Vector) -> Result<SolveReport> {
    if !(config.c1 > 0.0 && config.c1.is_finite()) {
        return Err(Error::Argument(format!("c1 must be positive, got {}", config.c1)));
    }
    let constants = theoretical_constants(problem, config.nu, config.sigma, &config.tol, config.c1).ok();
    let mut report = SolveReport {
        success: false,
        restart: config.restart,
        triple: None,
        cycles: Vec::new(),
        histories: Vec::new(),
        constants,
        tol: config.tol,
        nu: config.nu,
        sigma: config.sigma,
        c1: config.c1,
    };
    let mut start = z0.clone();
    let mut c = config.c1;
    for _ in 0..config.max_cycles {
        let outcome = run_cycle(problem, &config.cycle_config(c), &start)?;
        report.cycles.push(summarize(&outcome));
        match outcome {
            CycleOutcome::Success { triple, history } => {
                report.histories.push(history);
                report.triple = Some(triple);
                report.success = true;
                return Ok(report);
            }
            CycleOutcome::SmallPenalty { history, .. } | CycleOutcome::BudgetExceeded { history } => {
                if config.restart == RestartMode::HybridWarm {
                    start = history.last_z.clone();
                }
                report.histories.push(history);
            }
        }
        if config.deadline.is_some_and(|d| std::time::Instant::now() >= d) {
            return Err(Error::Timeout {
                report: Box::new(report),
            });
        }
        c *= 2.0;
    }
    Err(Error::CycleCap {
        cap: config.max_cycles,
        report: Box::new(report),
    })
}
