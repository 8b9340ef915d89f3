use serde::Serialize;

use crate::cycle::CycleHistory;
use crate::driver::{inner_iteration_bound, outer_iteration_bound, TheoreticalConstants};

const TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MonitorStatus {
    Pass,
    Fail,
    Skipped,
}

/// One checked inequality `lhs <= rhs` over a whole run.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorEntry {
    pub inequality_id: &'static str,
    pub formula: &'static str,
    pub status: MonitorStatus,
    /// Smallest `rhs + tol - lhs` seen (negative on failure).
    pub worst_slack: Option<f64>,
    /// Outer iteration `k` where the worst slack occurred.
    pub at_iteration: Option<usize>,
    /// Penalty cycle (1-based) where the worst slack occurred.
    pub at_cycle: Option<usize>,
    pub checked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonitorReport {
    pub entries: Vec<MonitorEntry>,
}

impl MonitorReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.status != MonitorStatus::Fail)
    }

    pub fn entry(&self, id: &str) -> Option<&MonitorEntry> {
        self.entries.iter().find(|e| e.inequality_id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &MonitorEntry> {
        self.entries.iter().filter(|e| e.status == MonitorStatus::Fail)
    }
}

struct Acc {
    entry: MonitorEntry,
}

impl Acc {
    fn new(id: &'static str, formula: &'static str) -> Self {
        Acc {
            entry: MonitorEntry {
                inequality_id: id,
                formula,
                status: MonitorStatus::Pass,
                worst_slack: None,
                at_iteration: None,
                at_cycle: None,
                checked: 0,
            },
        }
    }

    fn skipped(id: &'static str, formula: &'static str) -> MonitorEntry {
        let mut a = Acc::new(id, formula);
        a.entry.status = MonitorStatus::Skipped;
        a.entry
    }

    /// Records `lhs <= rhs` with additive tolerance `TOL * scale`.
    fn leq(&mut self, lhs: f64, rhs: f64, scale: f64, cycle: usize, k: usize) {
        let slack = rhs + TOL * scale - lhs;
        let e = &mut self.entry;
        e.checked += 1;
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if e.worst_slack.map_or(true, |w| slack < w) {
            e.worst_slack = Some(slack);
            e.at_iteration = Some(k);
            e.at_cycle = Some(cycle);
        }
        if slack < 0.0 {
            e.status = MonitorStatus::Fail;
        }
    }

    /// Entries that never saw a checkable iteration are reported as skipped.
    fn finish(mut self) -> MonitorEntry {
        if self.entry.checked == 0 {
            self.entry.status = MonitorStatus::Skipped;
        }
        self.entry
    }
}

/// Re-checks every recorded inequality of a run. Entries needing constants
/// or a lower bound on the optimal value are skipped when those are absent.
pub fn monitor(histories: &[CycleHistory], constants: Option<&TheoreticalConstants>, rho: f64) -> MonitorReport {
    let mut tele = Acc::new(
        "lagrangian_telescoping",
        "|r_k|^2 <= 2 lambda / (1 - sigma_c^2) (L(z_{k-1}, p_{k-1}) - L(z_k, p_k) + |p_k - p_{k-1}|^2 / c)",
    );
    let mut refine_w = Acc::new(
        "refined_residual_bound",
        "lambda |w_hat_k| <= (1 + 2 sigma_c sqrt(lambda L_c + 1)) |r_k|",
    );
    let mut acg = Acc::new(
        "acg_iteration_bound",
        "j <= ceil(1 + sqrt(M_s / mu) log1+((1 + 1/sigma_c) sqrt(2 M_s)))",
    );
    let mut inner = Acc::new(
        "inner_iteration_bound",
        "j <= ceil(1 + sqrt(T_c) log1+(2 T_c / min(nu, sigma))), T_c = 2 lambda L_c + 1",
    );
    let mut aggregate = Acc::new(
        "residual_aggregation",
        "min_i |w_hat_i|^2 <= C1 / lambda (Delta_k + 4 / (c (k - 1)) sum_i |p_i|^2)",
    );

    let mult_id = "multiplier_bound";
    let mult_ref = "|p_k| <= kappa0 / dbar";
    let feas_id = "feasibility_bound";
    let feas_ref = "|A z_hat_k - b| <= kappa2 / c";
    let dk_id = "delta_k_bound";
    let dk_ref = "Delta_k <= (3 R* + |p_k|^2 / (2 c)) / (k - 1)";
    let low_id = "lagrangian_lower_bound";
    let low_ref = "L(z_k, p_k) >= phi_lower - |p_k|^2 / (2 c)";
    let first_id = "first_iterate_bound";
    let first_ref = "L(z_1, p_1) <= 3 R* + phi_lower";
    let outer_id = "outer_iteration_bound";
    let outer_ref = "k <= ceil(1 + 4 (1 + 2 nu)^2 / ((1 - sigma^2) lambda rho^2) (3 R* + kappa0^2 / (2 dbar^2 c)))";

    let mut mult = constants.map(|_| Acc::new(mult_id, mult_ref));
    let mut feas = constants.map(|_| Acc::new(feas_id, feas_ref));
    let with_r = constants.filter(|k| k.r_star.is_some() && k.phi_lower.is_some());
    let mut dk = with_r.map(|_| Acc::new(dk_id, dk_ref));
    let mut low = with_r.map(|_| Acc::new(low_id, low_ref));
    let mut first = with_r.map(|_| Acc::new(first_id, first_ref));
    let mut outer = with_r.map(|_| Acc::new(outer_id, outer_ref));

    for (ci, h) in histories.iter().enumerate() {
        let cycle = ci + 1;
        let p = &h.params;
        let c = p.c;
        let lam = p.lambda;
        let root = (lam * p.l_c + 1.0).sqrt();
        let coef = 2.0 * lam / (1.0 - p.sigma_c * p.sigma_c);
        let inner_cap = inner_iteration_bound(p) as f64;
        let c_one = 2.0 * (1.0 + 2.0 * p.nu).powi(2) / (1.0 - p.sigma * p.sigma);

        let mut min_w2 = f64::INFINITY;
        let mut sum_p2 = 0.0;
        for r in &h.records {
            let k = r.k;
            let pen = c * r.z_feas * r.z_feas;
            let rhs = coef * (r.lagrangian_prev - r.lagrangian + pen);
            let scale = 1.0 + r.r_norm * r.r_norm + coef * (r.lagrangian_prev.abs() + r.lagrangian.abs() + pen);
            tele.leq(r.r_norm * r.r_norm, rhs, scale, cycle, k);

            let rhs = (1.0 + 2.0 * p.sigma_c * root) * r.r_norm;
            refine_w.leq(lam * r.w_hat_norm, rhs, 1.0 + rhs.abs(), cycle, k);

            acg.leq(r.inner_iters as f64, r.acg_bound as f64, 0.0, cycle, k);
            inner.leq(r.inner_iters as f64, inner_cap, 0.0, cycle, k);

            min_w2 = min_w2.min(r.w_hat_norm * r.w_hat_norm);
            sum_p2 += r.p_norm * r.p_norm;
            if let Some(d) = r.delta_k {
                let rhs = c_one / lam * (d + 4.0 / (c * (k - 1) as f64) * sum_p2);
                aggregate.leq(min_w2, rhs, 1.0 + rhs.abs(), cycle, k);
            }

            if let (Some(acc), Some(kc)) = (mult.as_mut(), constants) {
                let rhs = kc.kappa0 / kc.d_bar;
                acc.leq(r.p_norm, rhs, 1.0 + rhs, cycle, k);
            }
            if let (Some(acc), Some(kc)) = (feas.as_mut(), constants) {
                let rhs = kc.kappa2 / c;
                acc.leq(r.feas, rhs, 1.0 + rhs, cycle, k);
            }
            if let Some(kc) = with_r {
                let r_star = kc.r_star.unwrap_or(f64::NAN);
                let phi_lo = kc.phi_lower.unwrap_or(f64::NAN);
                let p2c = r.p_norm * r.p_norm / (2.0 * c);
                if let (Some(acc), Some(d)) = (dk.as_mut(), r.delta_k) {
                    let rhs = (3.0 * r_star + p2c) / (k - 1) as f64;
                    acc.leq(d, rhs, 1.0 + rhs.abs(), cycle, k);
                }
                if let Some(acc) = low.as_mut() {
                    let rhs = phi_lo - p2c;
                    // written as -L <= -rhs
                    acc.leq(-r.lagrangian, -rhs, 1.0 + rhs.abs(), cycle, k);
                }
                if k == 1 {
                    if let Some(acc) = first.as_mut() {
                        let rhs = 3.0 * r_star + phi_lo;
                        acc.leq(r.lagrangian, rhs, 1.0 + rhs.abs(), cycle, k);
                    }
                }
            }
        }
        if let (Some(acc), Some(kc)) = (outer.as_mut(), with_r) {
            let bound = outer_iteration_bound(kc, p.nu, p.sigma, rho, c).map_or(f64::INFINITY, |b| b as f64);
            acc.leq(h.records.len() as f64, bound, 0.0, cycle, h.records.len());
        }
    }

    let mut entries = vec![tele.finish(), refine_w.finish(), acg.finish(), inner.finish(), aggregate.finish()];
    entries.push(mult.map_or_else(|| Acc::skipped(mult_id, mult_ref), Acc::finish));
    entries.push(feas.map_or_else(|| Acc::skipped(feas_id, feas_ref), Acc::finish));
    entries.push(dk.map_or_else(|| Acc::skipped(dk_id, dk_ref), Acc::finish));
    entries.push(low.map_or_else(|| Acc::skipped(low_id, low_ref), Acc::finish));
    entries.push(first.map_or_else(|| Acc::skipped(first_id, first_ref), Acc::finish));
    entries.push(outer.map_or_else(|| Acc::skipped(outer_id, outer_ref), Acc::finish));
    MonitorReport { entries }
}
