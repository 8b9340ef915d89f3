//! One penalty cycle: proximal augmented Lagrangian steps solved by ACG,
//! refinement, full multiplier updates and the small-penalty test.

use serde::Serialize;

use crate::acg::{acg_run, AcgOptions, AcgTrace};
use crate::auglag::{build_subproblem, lagrangian_value, refine, PenaltyParams};
use crate::driver::{inner_iteration_bound, outer_iteration_bound, theoretical_constants};
use crate::problem::{stationarity_check, ProblemInstance, TolerancePair};
use crate::{Error, Result, Vector};

/// Outer iteration cap used when no theoretical bound is computable.
pub const FALLBACK_MAX_OUTER: usize = 100_000;

#[derive(Debug, Clone)]
pub struct CycleConfig {
    pub nu: f64,
    pub sigma: f64,
    pub c: f64,
    pub tol: TolerancePair,
    /// Defaults to twice the outer iteration bound, or [`FALLBACK_MAX_OUTER`].
    pub max_outer: Option<usize>,
    /// Keep per-iteration ACG traces in the history.
    pub acg_trace: bool,
    /// Stops the cycle with `BudgetExceeded` once passed.
    pub deadline: Option<std::time::Instant>,
}

impl CycleConfig {
    pub fn new(c: f64, tol: TolerancePair) -> Self {
        CycleConfig {
            nu: 1.0,
            sigma: std::f64::consts::FRAC_1_SQRT_2,
            c,
            tol,
            max_outer: None,
            acg_trace: false,
            deadline: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.nu > 0.0) {
            return Err(Error::Argument(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.sigma > 0.0 && self.sigma <= std::f64::consts::FRAC_1_SQRT_2 + 1e-12) {
            return Err(Error::Argument(format!(
                "sigma must lie in (0, 1/sqrt 2], got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// Everything recorded about one outer iteration `k`.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub inner_iters: usize,
    /// Iteration bound of the ACG call for its `(M_s, mu, sigma_c)`.
    pub acg_bound: usize,
    pub r_norm: f64,
    pub eps: f64,
    pub w_norm: f64,
    pub delta: f64,
    pub w_hat_norm: f64,
    /// `||A z_hat_k - b||`.
    pub feas: f64,
    /// `||A z_k - b||`.
    pub z_feas: f64,
    /// `||p_k||` with `p_k = p_{k-1} + c (A z_k - b)`.
    pub p_norm: f64,
    /// `Delta_k`, absent for `k = 1`.
    pub delta_k: Option<f64>,
    /// `L_c(z_k, p_k)`.
    pub lagrangian: f64,
    /// `L_c(z_{k-1}, p_{k-1})`.
    pub lagrangian_prev: f64,
    #[serde(skip)]
    pub acg_trace: Vec<AcgTrace>,
}

/// Per-cycle record of all outer iterations.
#[derive(Debug, Clone)]
pub struct CycleHistory {
    pub params: PenaltyParams,
    pub records: Vec<IterationRecord>,
    /// Last `z_k` produced, used by warm restarts.
    pub last_z: Vector,
    /// Outer cap that was in force.
    pub max_outer: usize,
}

impl CycleHistory {
    pub fn c(&self) -> f64 {
        self.params.c
    }

    pub fn total_inner(&self) -> usize {
        self.records.iter().map(|r| r.inner_iters).sum()
    }

    /// Index of the record with the smallest `||w_hat||`.
    pub fn best(&self) -> Option<usize> {
        (0..self.records.len()).min_by(|&i, &j| {
            self.records[i]
                .w_hat_norm
                .total_cmp(&self.records[j].w_hat_norm)
        })
    }
}

/// `(z_hat, w_hat, p_hat)`.
#[derive(Debug, Clone)]
pub struct StationaryTriple {
    pub z: Vector,
    pub w: Vector,
    pub p: Vector,
}

#[derive(Debug, Clone)]
pub enum CycleOutcome {
    Success {
        triple: StationaryTriple,
        history: CycleHistory,
    },
    SmallPenalty {
        triple: StationaryTriple,
        history: CycleHistory,
    },
    BudgetExceeded {
        history: CycleHistory,
    },
}

impl CycleOutcome {
    pub fn history(&self) -> &CycleHistory {
        match self {
            CycleOutcome::Success { history, .. }
            | CycleOutcome::SmallPenalty { history, .. }
            | CycleOutcome::BudgetExceeded { history } => history,
        }
    }

    pub fn triple(&self) -> Option<&StationaryTriple> {
        match self {
            CycleOutcome::Success { triple, .. } | CycleOutcome::SmallPenalty { triple, .. } => Some(triple),
            CycleOutcome::BudgetExceeded { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CycleOutcome::Success { .. } => "success",
            CycleOutcome::SmallPenalty { .. } => "small_penalty",
            CycleOutcome::BudgetExceeded { .. } => "budget_exceeded",
        }
    }
}

/// `p_{k-1} + c (A z_k - b)`.
pub fn multiplier_update(problem: &ProblemInstance, p_prev: &Vector, z_k: &Vector, c: f64) -> Vector {
    p_prev + problem.constraint.residual(z_k) * c
}

/// `(L_1 - L_k) / (k - 1)` for `k >= 2`.
pub fn delta_k(l_first: f64, l_k: f64, k: usize) -> Option<f64> {
    if k < 2 {
        None
    } else {
        Some((l_first - l_k) / (k - 1) as f64)
    }
}

/// `lambda (1 - sigma^2) rho^2 / (4 (1 + 2 nu)^2)`.
pub fn small_penalty_threshold(lambda: f64, sigma: f64, nu: f64, rho: f64) -> f64 {
    lambda * (1.0 - sigma * sigma) * rho * rho / (4.0 * (1.0 + 2.0 * nu).powi(2))
}

pub fn small_penalty_test(delta: Option<f64>, params: &PenaltyParams, rho: f64) -> bool {
    match delta {
        Some(d) => d <= small_penalty_threshold(params.lambda, params.sigma, params.nu, rho),
        None => false,
    }
}

/// Default outer cap for a cycle with penalty `c`.
pub fn default_max_outer(problem: &ProblemInstance, config: &CycleConfig) -> usize {
    let bound = theoretical_constants(problem, config.nu, config.sigma, &config.tol, config.c)
        .ok()
        .and_then(|k| outer_iteration_bound(&k, config.nu, config.sigma, config.tol.rho, config.c));
    match bound {
        Some(b) if (b as f64) < 0.5 * usize::MAX as f64 => b.saturating_mul(2),
        _ => FALLBACK_MAX_OUTER,
    }
}

/// Runs one penalty cycle from `z0 in H` with `p_0 = 0`.
pub fn run_cycle(problem: &ProblemInstance, config: &CycleConfig, z0: &Vector) -> Result<CycleOutcome> {
    config.check()?;
    if z0.len() != problem.n() {
        return Err(Error::Dimension(format!(
            "z0 has length {}, expected {}",
            z0.len(),
            problem.n()
        )));
    }
    if !problem.composite.contains(z0) {
        return Err(Error::OutsideDomain);
    }
    let params = PenaltyParams::new(problem, config.c, config.nu, config.sigma)?;
    let max_outer = config.max_outer.unwrap_or_else(|| default_max_outer(problem, config));
    let inner_cap = inner_iteration_bound(&params);
    let c = params.c;

    let mut z_prev = z0.clone();
    let mut p_prev = Vector::zeros(problem.l());
    let mut l_prev = lagrangian_value(problem, &z_prev, &p_prev, c)?;
    let mut l_first = f64::NAN;
    let mut history = CycleHistory {
        params,
        records: Vec::new(),
        last_z: z0.clone(),
        max_outer,
    };

    for k in 1..=max_outer {
        let sub = build_subproblem(problem, &z_prev, &p_prev, &params);
        let mut trace = Vec::new();
        let mut hook = |t: &AcgTrace| trace.push(*t);
        let opts = AcgOptions {
            sigma_tilde: params.sigma_c,
            max_iters: Some(10 * inner_cap.max(crate::acg::acg_iteration_bound(params.m_s, params.mu, params.sigma_c))),
            deadline: config.deadline,
        };
        let cert = match acg_run(
            &sub,
            &z_prev,
            &opts,
            if config.acg_trace { Some(&mut hook) } else { None },
        ) {
            Err(Error::Deadline) => return Ok(CycleOutcome::BudgetExceeded { history }),
            r => r?,
        };
        let z_k = cert.x;
        let refined = refine(problem, &z_prev, &p_prev, &z_k, &cert.u, cert.eta, cert.eta_slack, &params)?;

        let p_k = multiplier_update(problem, &p_prev, &z_k, c);
        let l_k = lagrangian_value(problem, &z_k, &p_k, c)?;
        if k == 1 {
            l_first = l_k;
        }
        let dk = delta_k(l_first, l_k, k);
        let feas = problem.feasibility(&refined.z_hat);
        history.records.push(IterationRecord {
            k,
            inner_iters: cert.iterations,
            acg_bound: cert.bound,
            r_norm: refined.r.norm(),
            eps: cert.eta,
            w_norm: refined.w.norm(),
            delta: refined.delta,
            w_hat_norm: refined.w_hat.norm(),
            feas,
            z_feas: problem.feasibility(&z_k),
            p_norm: p_k.norm(),
            delta_k: dk,
            lagrangian: l_k,
            lagrangian_prev: l_prev,
            acg_trace: trace,
        });
        history.last_z = z_k.clone();

        let triple = || StationaryTriple {
            z: refined.z_hat.clone(),
            w: refined.w_hat.clone(),
            p: refined.p_hat.clone(),
        };
        if stationarity_check(&problem.constraint, &refined.z_hat, &refined.w_hat, &config.tol) {
            return Ok(CycleOutcome::Success {
                triple: triple(),
                history,
            });
        }
        if small_penalty_test(dk, &params, config.tol.rho) {
            return Ok(CycleOutcome::SmallPenalty {
                triple: triple(),
                history,
            });
        }
        z_prev = z_k;
        p_prev = p_k;
        l_prev = l_k;
    }
    Ok(CycleOutcome::BudgetExceeded { history })
}
