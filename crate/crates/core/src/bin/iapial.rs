use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use iapial::cycle::CycleConfig;
use iapial::driver::{
    cycle_count_bound, inner_iteration_bound, outer_iteration_bound, solve, sweep, theoretical_constants,
    DriverConfig, SweepRow, DEFAULT_MAX_CYCLES,
};
use iapial::auglag::PenaltyParams;
use iapial::io::{
    fmt_f64, histories_from_rows, parse_restart, parse_trace_csv, read_problem, read_summary, to_json_string,
    trace_csv, write_problem, write_summary, ConstantsOut, Summary, SCHEMA,
};
use iapial::problem::TolerancePair;
use iapial::verify::{generate, monitor, GeneratorSpec, MonitorStatus};
use iapial::Error;

#[derive(Parser)]
#[command(name = "iapial", version, about = "Inexact proximal augmented Lagrangian solver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a random instance from a generator spec.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
        /// Overrides the seed in the spec.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the penalty-doubling solver.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        /// Summary JSON.
        #[arg(long, short)]
        out: PathBuf,
        /// Per-iteration CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
        #[arg(long, default_value = "warm")]
        restart: String,
        #[arg(long, default_value_t = DEFAULT_MAX_CYCLES)]
        max_cycles: usize,
    },
    /// Re-check the recorded inequalities of a solve.
    Verify {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        summary: PathBuf,
        /// Check this trace instead of the history embedded in the summary.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the monitor report as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the theoretical constants and iteration bounds.
    Constants {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        params: Params,
    },
    /// One cycle per penalty value; CSV of outcomes and final feasibility.
    Sweep {
        #[arg(long)]
        problem: PathBuf,
        /// Comma-separated penalties.
        #[arg(long, value_delimiter = ',', required_unless_present = "cbar_multiples")]
        grid: Vec<f64>,
        /// Comma-separated multiples of c_bar, used instead of --grid.
        #[arg(long, value_delimiter = ',', conflicts_with = "grid")]
        cbar_multiples: Vec<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
    },
}

#[derive(Args, Clone)]
struct Params {
    #[arg(long, default_value_t = 1e-3)]
    rho: f64,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 0.70710678)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    /// Outer iterations per cycle.
    #[arg(long)]
    max_outer: Option<usize>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl Params {
    fn tol(&self) -> Result<TolerancePair, Error> {
        TolerancePair::new(self.rho, self.eta)
    }

    fn deadline(&self) -> Result<Option<Instant>, Error> {
        match self.time_limit {
            None => Ok(None),
            Some(s) if s > 0.0 && s.is_finite() => Ok(Some(Instant::now() + Duration::from_secs_f64(s))),
            Some(s) => Err(Error::Argument(format!("time limit must be positive, got {s}"))),
        }
    }
}

fn fail(code: u8, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(code)
}

fn distinct(input: &Path, output: &Path) -> Result<(), Error> {
    if input == output {
        return Err(Error::Argument(format!("output path {} equals an input path", output.display())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Generate { spec, out, seed } => cmd_generate(&spec, &out, seed),
        Cmd::Solve {
            problem,
            out,
            trace,
            params,
            restart,
            max_cycles,
        } => cmd_solve(&problem, &out, trace.as_deref(), &params, &restart, max_cycles),
        Cmd::Verify {
            problem,
            summary,
            trace,
            report,
        } => cmd_verify(&problem, &summary, trace.as_deref(), report.as_deref()),
        Cmd::Constants { problem, params } => cmd_constants(&problem, &params),
        Cmd::Sweep {
            problem,
            grid,
            cbar_multiples,
            out,
            params,
        } => cmd_sweep(&problem, grid, cbar_multiples, out.as_deref(), &params),
    };
    match res {
        Ok(code) => code,
        Err(e) => fail(2, e),
    }
}

fn cmd_generate(spec_path: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode, Error> {
    distinct(spec_path, out)?;
    let text = std::fs::read_to_string(spec_path)?;
    let mut spec: GeneratorSpec = serde_json::from_str(&text)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let inst = generate(&spec)?;
    write_problem(out, &inst)?;
    let c = &inst.constraint;
    println!("n = {}", inst.n());
    println!("l = {}", inst.l());
    println!("m_f = {}", fmt_f64(inst.smooth.m_f));
    println!("L_f = {}", fmt_f64(inst.smooth.l_f));
    println!("L_h = {}", fmt_f64(inst.composite.l_h));
    println!("norm_A = {}", fmt_f64(c.op_norm));
    println!("sigma_A_plus = {}", fmt_f64(c.sigma_plus));
    println!("diameter = {}", fmt_f64(inst.diameter()));
    println!("slater_distance = {}", fmt_f64(inst.slater_distance()));
    println!("grad_bound = {}", fmt_f64(inst.grad_bound()));
    match inst.phi_lower {
        Some(v) => println!("phi_lower = {}", fmt_f64(v)),
        None => println!("phi_lower ="),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_solve(
    problem: &Path,
    out: &Path,
    trace: Option<&Path>,
    params: &Params,
    restart: &str,
    max_cycles: usize,
) -> Result<ExitCode, Error> {
    distinct(problem, out)?;
    if let Some(t) = trace {
        distinct(problem, t)?;
        distinct(out, t)?;
    }
    let inst = read_problem(problem)?;
    let mut cfg = DriverConfig::new(params.tol()?);
    cfg.nu = params.nu;
    cfg.sigma = params.sigma;
    cfg.c1 = params.c1;
    cfg.restart = parse_restart(restart)?;
    cfg.max_cycles = max_cycles;
    cfg.max_outer = params.max_outer;
    cfg.deadline = params.deadline()?;
    let z0 = inst.default_start()?;

    let (report, code) = match solve(&inst, &cfg, &z0) {
        Ok(r) => (r, ExitCode::SUCCESS),
        Err(Error::CycleCap { cap, report }) => {
            eprintln!("cycle cap of {cap} reached");
            (*report, ExitCode::from(3))
        }
        Err(Error::Timeout { report }) => {
            eprintln!("time limit reached after {} cycles", report.cycles.len());
            (*report, ExitCode::from(3))
        }
        Err(e) => return Err(e),
    };
    let summary = Summary::from_report(&inst, &report);
    write_summary(out, &summary)?;
    if let Some(t) = trace {
        std::fs::write(t, trace_csv(&summary.history))?;
    }
    for c in &summary.cycles {
        println!(
            "cycle c = {} outcome = {} outer = {} acg = {}",
            fmt_f64(c.c),
            c.outcome,
            c.outer_iters,
            c.total_acg_iters
        );
    }
    if let Some(t) = &summary.triple {
        println!("w_norm = {}", fmt_f64(t.w_norm));
        println!("feasibility = {}", fmt_f64(t.feasibility));
        println!("inclusion_residual = {}", fmt_f64(t.inclusion_residual));
    }
    Ok(code)
}

fn cmd_verify(problem: &Path, summary: &Path, trace: Option<&Path>, report: Option<&Path>) -> Result<ExitCode, Error> {
    let inst = read_problem(problem)?;
    let sum = read_summary(summary)?;
    if sum.schema != SCHEMA {
        return Err(Error::Parse(format!("unsupported summary schema {}", sum.schema)));
    }
    let rows = match trace {
        Some(t) => parse_trace_csv(&std::fs::read_to_string(t)?)?,
        None => sum.history.clone(),
    };
    let tol = sum.tol()?;
    let histories = histories_from_rows(&inst, &rows, sum.nu, sum.sigma)?;
    let constants = theoretical_constants(&inst, sum.nu, sum.sigma, &tol, sum.c1).ok();
    let rep = monitor(&histories, constants.as_ref(), tol.rho);
    for e in &rep.entries {
        let status = match e.status {
            MonitorStatus::Pass => "pass",
            MonitorStatus::Fail => "FAIL",
            MonitorStatus::Skipped => "skipped",
        };
        let slack = e.worst_slack.map_or(String::new(), fmt_f64);
        println!("{status:7} {:24} checked = {:6} worst_slack = {slack}", e.inequality_id, e.checked);
    }
    if let Some(p) = report {
        std::fs::write(p, to_json_string(&rep)?)?;
    }
    if rep.passed() {
        return Ok(ExitCode::SUCCESS);
    }
    for e in rep.failures() {
        eprintln!(
            "violated: {} ({}) at cycle {} iteration {}",
            e.inequality_id,
            e.formula,
            e.at_cycle.unwrap_or(0),
            e.at_iteration.unwrap_or(0)
        );
    }
    Ok(ExitCode::from(1))
}

#[derive(Serialize)]
struct ConstantsReport {
    schema: u32,
    constants: ConstantsOut,
    inner_iteration_bound: usize,
    outer_iteration_bound: Option<usize>,
    cycle_count_bound: usize,
}

fn cmd_constants(problem: &Path, params: &Params) -> Result<ExitCode, Error> {
    let inst = read_problem(problem)?;
    let tol = params.tol()?;
    let k = theoretical_constants(&inst, params.nu, params.sigma, &tol, params.c1)?;
    let pp = PenaltyParams::new(&inst, params.c1, params.nu, params.sigma)?;
    let rep = ConstantsReport {
        schema: SCHEMA,
        constants: ConstantsOut::from(&k),
        inner_iteration_bound: inner_iteration_bound(&pp),
        outer_iteration_bound: outer_iteration_bound(&k, params.nu, params.sigma, tol.rho, params.c1),
        cycle_count_bound: cycle_count_bound(k.c_bar, params.c1),
    };
    println!("{}", to_json_string(&rep)?);
    Ok(ExitCode::SUCCESS)
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("c,outcome,outer_iters,total_acg_iters,final_feasibility,final_w_hat,feasibility_bound\n");
    let num = |v: f64| if v.is_nan() { String::new() } else { fmt_f64(v) };
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(r.c),
            r.outcome,
            r.outer_iters,
            r.total_acg_iters,
            num(r.final_feasibility),
            num(r.final_w_hat),
            num(r.feasibility_bound)
        ));
    }
    s
}

fn cmd_sweep(
    problem: &Path,
    grid: Vec<f64>,
    multiples: Vec<f64>,
    out: Option<&Path>,
    params: &Params,
) -> Result<ExitCode, Error> {
    if let Some(o) = out {
        distinct(problem, o)?;
    }
    let inst = read_problem(problem)?;
    let tol = params.tol()?;
    let grid = if multiples.is_empty() {
        grid
    } else {
        let k = theoretical_constants(&inst, params.nu, params.sigma, &tol, params.c1)?;
        multiples.iter().map(|m| m * k.c_bar).collect()
    };
    let mut cfg = CycleConfig::new(grid.first().copied().unwrap_or(1.0), tol);
    cfg.nu = params.nu;
    cfg.sigma = params.sigma;
    cfg.max_outer = params.max_outer;
    cfg.deadline = params.deadline()?;
    let rows = sweep(&inst, &grid, &cfg, &inst.default_start()?)?;
    let csv = sweep_csv(&rows);
    match out {
        Some(o) => std::fs::write(o, csv)?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}
