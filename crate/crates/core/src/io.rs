//! File formats: problem JSON, run summary JSON and the per-iteration trace
//! CSV. Floats are written with 17 significant digits so that every value
//! round-trips exactly.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::auglag::PenaltyParams;
use crate::cycle::{CycleHistory, IterationRecord};
use crate::driver::{RestartMode, SolveReport, TheoreticalConstants};
use crate::problem::{ConvexComposite, LinearConstraint, ProblemInstance, SmoothObjective, TolerancePair};
use crate::prox::ProxSet;
use crate::verify::inclusion_residual;
use crate::{Error, Matrix, Result, Vector};

pub const SCHEMA: u32 = 1;

/// `serde_json` formatter printing floats as `{:.16e}`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{}", fmt_f64(value))
    }
}

/// A float with 17 significant digits; empty for NaN.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

/// Serializes `value` as indented JSON with [`Digits17`] floats.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, PrettyDigits::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Parse(e.to_string()))
}

/// Pretty printer that delegates float output to [`Digits17`].
#[derive(Default)]
struct PrettyDigits<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
            self.inner.$name(writer $(, $arg)*)
        })*
    };
}

impl serde_json::ser::Formatter for PrettyDigits<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        Digits17.write_f64(writer, value)
    }
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

// ---------------------------------------------------------------- problem file

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FSection {
    pub kind: String,
    pub params: Value,
    pub m_f: f64,
    #[serde(rename = "L_f")]
    pub l_f: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HSection {
    pub kind: String,
    pub params: Value,
    #[serde(rename = "L_h")]
    pub l_h: f64,
}

/// On-disk problem description. `A` and `Q` are row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default = "schema_one")]
    pub schema: u32,
    pub n: usize,
    pub l: usize,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub f: FSection,
    pub h: HSection,
    pub slater_point: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_lower: Option<f64>,
}

fn schema_one() -> u32 {
    SCHEMA
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadraticParams {
    #[serde(rename = "Q")]
    q_mat: Vec<f64>,
    q: Vec<f64>,
}

fn param<T: for<'de> Deserialize<'de>>(v: &Value, what: &str) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

fn expect_len(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() == len {
        Ok(())
    } else {
        Err(Error::Dimension(format!("{name} has {} entries, expected {len}", v.len())))
    }
}

impl ProblemFile {
    pub fn from_instance(inst: &ProblemInstance) -> Self {
        let n = inst.n();
        let l = inst.l();
        let row_major = |m: &Matrix| m.transpose().as_slice().to_vec();
        let (kind, params) = match &inst.composite.set {
            ProxSet::Box { lower, upper } => (
                "box",
                serde_json::json!({"lower": lower.as_slice(), "upper": upper.as_slice()}),
            ),
            ProxSet::Ball { center, radius } => (
                "ball",
                serde_json::json!({"center": center.as_slice(), "radius": radius}),
            ),
            ProxSet::Simplex { radius } => ("simplex", serde_json::json!({ "radius": radius })),
            ProxSet::L1Box { lower, upper, gamma } => (
                "l1_box",
                serde_json::json!({"lower": lower.as_slice(), "upper": upper.as_slice(), "gamma": gamma}),
            ),
        };
        ProblemFile {
            schema: SCHEMA,
            n,
            l,
            a: row_major(&inst.constraint.a),
            b: inst.constraint.b.as_slice().to_vec(),
            f: FSection {
                kind: "quadratic".into(),
                params: serde_json::json!({
                    "Q": row_major(&inst.smooth.hessian),
                    "q": inst.smooth.linear.as_slice(),
                }),
                m_f: inst.smooth.m_f,
                l_f: inst.smooth.l_f,
            },
            h: HSection {
                kind: kind.into(),
                params,
                l_h: inst.composite.l_h,
            },
            slater_point: inst.slater_point.as_slice().to_vec(),
            phi_lower: inst.phi_lower,
        }
    }

    pub fn to_instance(&self) -> Result<ProblemInstance> {
        let (n, l) = (self.n, self.l);
        if self.schema != SCHEMA {
            return Err(Error::Parse(format!("unsupported schema {}", self.schema)));
        }
        expect_len("A", &self.a, n * l)?;
        expect_len("b", &self.b, l)?;
        expect_len("slater_point", &self.slater_point, n)?;
        if self.f.kind != "quadratic" {
            return Err(Error::Parse(format!("unsupported f kind {:?}", self.f.kind)));
        }
        let qp: QuadraticParams = param(&self.f.params, "f.params")?;
        expect_len("Q", &qp.q_mat, n * n)?;
        expect_len("q", &qp.q, n)?;
        let smooth = SmoothObjective::quadratic(
            Matrix::from_row_slice(n, n, &qp.q_mat),
            Vector::from_vec(qp.q),
            self.f.m_f,
            self.f.l_f,
        )?;
        let vec_field = |key: &str| -> Result<Vector> {
            let v: Vec<f64> = param(
                self.h.params.get(key).unwrap_or(&Value::Null),
                &format!("h.params.{key}"),
            )?;
            expect_len(key, &v, n)?;
            Ok(Vector::from_vec(v))
        };
        let num_field = |key: &str| -> Result<f64> {
            param(
                self.h.params.get(key).unwrap_or(&Value::Null),
                &format!("h.params.{key}"),
            )
        };
        let set = match self.h.kind.as_str() {
            "box" => ProxSet::Box {
                lower: vec_field("lower")?,
                upper: vec_field("upper")?,
            },
            "ball" => ProxSet::Ball {
                center: vec_field("center")?,
                radius: num_field("radius")?,
            },
            "simplex" => ProxSet::Simplex {
                radius: num_field("radius")?,
            },
            "l1_box" => ProxSet::L1Box {
                lower: vec_field("lower")?,
                upper: vec_field("upper")?,
                gamma: num_field("gamma")?,
            },
            other => return Err(Error::Parse(format!("unsupported h kind {other:?}"))),
        };
        let composite = ConvexComposite::new(set, self.h.l_h)?;
        let constraint = LinearConstraint::new(
            Matrix::from_row_slice(l, n, &self.a),
            Vector::from_column_slice(&self.b),
        )?;
        ProblemInstance::new(
            smooth,
            composite,
            constraint,
            Vector::from_column_slice(&self.slater_point),
            self.phi_lower,
        )
    }
}

pub fn read_problem(path: &Path) -> Result<ProblemInstance> {
    let text = std::fs::read_to_string(path)?;
    let file: ProblemFile = serde_json::from_str(&text)?;
    file.to_instance()
}

pub fn write_problem(path: &Path, inst: &ProblemInstance) -> Result<()> {
    std::fs::write(path, to_json_string(&ProblemFile::from_instance(inst))?)?;
    Ok(())
}

// ---------------------------------------------------------------- summary

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleOut {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub w_norm: f64,
    pub feasibility: f64,
    pub inclusion_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleOut {
    pub c: f64,
    pub outcome: String,
    pub outer_iters: usize,
    pub total_acg_iters: usize,
    pub final_w_hat: Option<f64>,
    pub final_feasibility: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordOut {
    pub cycle: usize,
    pub c: f64,
    pub k: usize,
    pub inner_iters: usize,
    pub acg_bound: usize,
    pub r_norm: f64,
    pub eps: f64,
    pub w_norm: f64,
    pub delta: f64,
    pub w_hat_norm: f64,
    pub feas: f64,
    pub z_feas: f64,
    pub p_norm: f64,
    pub delta_k: Option<f64>,
    pub lagrangian: f64,
    pub lagrangian_prev: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsOut {
    pub kappa0: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub c_bar: f64,
    pub r_star: Option<f64>,
    pub t1: f64,
    pub t2: f64,
    pub d_bar: f64,
    pub grad_bound: f64,
    pub c_one: f64,
    pub lambda: f64,
    pub diameter: f64,
    pub phi_upper: f64,
    pub phi_lower: Option<f64>,
}

impl From<&TheoreticalConstants> for ConstantsOut {
    fn from(k: &TheoreticalConstants) -> Self {
        ConstantsOut {
            kappa0: k.kappa0,
            kappa1: k.kappa1,
            kappa2: k.kappa2,
            c_bar: k.c_bar,
            r_star: k.r_star,
            t1: k.t1,
            t2: k.t2,
            d_bar: k.d_bar,
            grad_bound: k.grad_bound,
            c_one: k.c_one,
            lambda: k.lambda,
            diameter: k.diameter,
            phi_upper: k.phi_upper,
            phi_lower: k.phi_lower,
        }
    }
}

impl From<&ConstantsOut> for TheoreticalConstants {
    fn from(k: &ConstantsOut) -> Self {
        TheoreticalConstants {
            kappa0: k.kappa0,
            kappa1: k.kappa1,
            kappa2: k.kappa2,
            c_bar: k.c_bar,
            r_star: k.r_star,
            t1: k.t1,
            t2: k.t2,
            d_bar: k.d_bar,
            grad_bound: k.grad_bound,
            c_one: k.c_one,
            lambda: k.lambda,
            diameter: k.diameter,
            phi_upper: k.phi_upper,
            phi_lower: k.phi_lower,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub schema: u32,
    pub success: bool,
    pub restart: String,
    pub rho: f64,
    pub eta: f64,
    pub nu: f64,
    pub sigma: f64,
    pub c1: f64,
    pub cycles: Vec<CycleOut>,
    pub triple: Option<TripleOut>,
    pub constants: Option<ConstantsOut>,
    pub history: Vec<RecordOut>,
}

fn finite(v: f64) -> Option<f64> {
    if v.is_nan() {
        None
    } else {
        Some(v)
    }
}

pub fn history_rows(histories: &[CycleHistory]) -> Vec<RecordOut> {
    let mut rows = Vec::new();
    for (ci, h) in histories.iter().enumerate() {
        for r in &h.records {
            rows.push(RecordOut {
                cycle: ci + 1,
                c: h.c(),
                k: r.k,
                inner_iters: r.inner_iters,
                acg_bound: r.acg_bound,
                r_norm: r.r_norm,
                eps: r.eps,
                w_norm: r.w_norm,
                delta: r.delta,
                w_hat_norm: r.w_hat_norm,
                feas: r.feas,
                z_feas: r.z_feas,
                p_norm: r.p_norm,
                delta_k: r.delta_k,
                lagrangian: r.lagrangian,
                lagrangian_prev: r.lagrangian_prev,
            });
        }
    }
    rows
}

impl Summary {
    pub fn from_report(problem: &ProblemInstance, rep: &SolveReport) -> Self {
        let triple = rep.triple.as_ref().map(|t| TripleOut {
            z: t.z.as_slice().to_vec(),
            w: t.w.as_slice().to_vec(),
            p: t.p.as_slice().to_vec(),
            w_norm: t.w.norm(),
            feasibility: problem.feasibility(&t.z),
            inclusion_residual: inclusion_residual(problem, &t.z, &t.w, &t.p, 1.0 / problem.smooth.l_f),
        });
        Summary {
            schema: SCHEMA,
            success: rep.success,
            restart: rep.restart.name().into(),
            rho: rep.tol.rho,
            eta: rep.tol.eta,
            nu: rep.nu,
            sigma: rep.sigma,
            c1: rep.c1,
            cycles: rep
                .cycles
                .iter()
                .map(|c| CycleOut {
                    c: c.c,
                    outcome: c.outcome.into(),
                    outer_iters: c.outer_iters,
                    total_acg_iters: c.total_acg_iters,
                    final_w_hat: finite(c.final_w_hat),
                    final_feasibility: finite(c.final_feasibility),
                })
                .collect(),
            triple,
            constants: rep.constants.as_ref().map(ConstantsOut::from),
            history: history_rows(&rep.histories),
        }
    }

    pub fn restart_mode(&self) -> Result<RestartMode> {
        parse_restart(&self.restart)
    }

    pub fn tol(&self) -> Result<TolerancePair> {
        TolerancePair::new(self.rho, self.eta)
    }
}

pub fn parse_restart(s: &str) -> Result<RestartMode> {
    match s {
        "cold" => Ok(RestartMode::Cold),
        "warm" => Ok(RestartMode::HybridWarm),
        other => Err(Error::Parse(format!("unknown restart mode {other:?}"))),
    }
}

/// Rebuilds per-cycle histories from flat rows, recomputing the penalty
/// parameters from the problem.
pub fn histories_from_rows(
    problem: &ProblemInstance,
    rows: &[RecordOut],
    nu: f64,
    sigma: f64,
) -> Result<Vec<CycleHistory>> {
    let mut out: Vec<CycleHistory> = Vec::new();
    for row in rows {
        if row.cycle == 0 || row.cycle > out.len() + 1 {
            return Err(Error::Parse(format!("cycle index {} out of order", row.cycle)));
        }
        if row.cycle == out.len() + 1 {
            out.push(CycleHistory {
                params: PenaltyParams::new(problem, row.c, nu, sigma)?,
                records: Vec::new(),
                last_z: Vector::zeros(problem.n()),
                max_outer: 0,
            });
        }
        out[row.cycle - 1].records.push(IterationRecord {
            k: row.k,
            inner_iters: row.inner_iters,
            acg_bound: row.acg_bound,
            r_norm: row.r_norm,
            eps: row.eps,
            w_norm: row.w_norm,
            delta: row.delta,
            w_hat_norm: row.w_hat_norm,
            feas: row.feas,
            z_feas: row.z_feas,
            p_norm: row.p_norm,
            delta_k: row.delta_k,
            lagrangian: row.lagrangian,
            lagrangian_prev: row.lagrangian_prev,
            acg_trace: Vec::new(),
        });
    }
    Ok(out)
}

pub fn write_summary(path: &Path, summary: &Summary) -> Result<()> {
    std::fs::write(path, to_json_string(summary)?)?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

// ---------------------------------------------------------------- trace CSV

pub const TRACE_COLUMNS: [&str; 16] = [
    "cycle",
    "c",
    "k",
    "inner_iters",
    "r_norm",
    "eps",
    "w_hat_norm",
    "feas",
    "p_norm",
    "delta_k",
    "lagrangian",
    "z_feas",
    "lagrangian_prev",
    "w_norm",
    "delta",
    "acg_bound",
];

pub fn trace_csv(rows: &[RecordOut]) -> String {
    let mut s = TRACE_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let fields = [
            r.cycle.to_string(),
            fmt_f64(r.c),
            r.k.to_string(),
            r.inner_iters.to_string(),
            fmt_f64(r.r_norm),
            fmt_f64(r.eps),
            fmt_f64(r.w_hat_norm),
            fmt_f64(r.feas),
            fmt_f64(r.p_norm),
            r.delta_k.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.lagrangian),
            fmt_f64(r.z_feas),
            fmt_f64(r.lagrangian_prev),
            fmt_f64(r.w_norm),
            fmt_f64(r.delta),
            r.acg_bound.to_string(),
        ];
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

fn parse_float(s: &str, line: usize) -> Result<f64> {
    match s {
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "" => Ok(f64::NAN),
        _ => s
            .parse()
            .map_err(|_| Error::Parse(format!("line {line}: bad number {s:?}"))),
    }
}

fn parse_int(s: &str, line: usize) -> Result<usize> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad integer {s:?}")))
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<RecordOut>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trace".into()))?
        .split(',')
        .collect();
    let col = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Parse(format!("trace lacks column {name:?}")))
    };
    let idx: Vec<usize> = TRACE_COLUMNS.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != header.len() {
            return Err(Error::Parse(format!(
                "line {line_no}: {} fields, header has {}",
                f.len(),
                header.len()
            )));
        }
        let get = |j: usize| f[idx[j]];
        let delta_k = parse_float(get(9), line_no)?;
        rows.push(RecordOut {
            cycle: parse_int(get(0), line_no)?,
            c: parse_float(get(1), line_no)?,
            k: parse_int(get(2), line_no)?,
            inner_iters: parse_int(get(3), line_no)?,
            r_norm: parse_float(get(4), line_no)?,
            eps: parse_float(get(5), line_no)?,
            w_hat_norm: parse_float(get(6), line_no)?,
            feas: parse_float(get(7), line_no)?,
            p_norm: parse_float(get(8), line_no)?,
            delta_k: if delta_k.is_nan() { None } else { Some(delta_k) },
            lagrangian: parse_float(get(10), line_no)?,
            z_feas: parse_float(get(11), line_no)?,
            lagrangian_prev: parse_float(get(12), line_no)?,
            w_norm: parse_float(get(13), line_no)?,
            delta: parse_float(get(14), line_no)?,
            acg_bound: parse_int(get(15), line_no)?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{generate, GeneratorSpec, HSpec};

    #[test]
    fn floats_round_trip_with_17_digits() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let digits = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).count();
            assert_eq!(digits, 17);
        }
    }

    #[test]
    fn problem_file_round_trip() {
        for h in [
            HSpec::Box { lower: -1.0, upper: 1.0 },
            HSpec::Ball { radius: 1.5 },
            HSpec::Simplex { radius: 2.0 },
            HSpec::L1Box {
                lower: -1.0,
                upper: 1.0,
                gamma: 0.2,
            },
        ] {
            let mut spec = GeneratorSpec::box_default(5, 2, 1);
            spec.h = h;
            let inst = generate(&spec).unwrap();
            let text = to_json_string(&ProblemFile::from_instance(&inst)).unwrap();
            let back: ProblemFile = serde_json::from_str(&text).unwrap();
            let back = back.to_instance().unwrap();
            assert_eq!(back.smooth.hessian, inst.smooth.hessian);
            assert_eq!(back.constraint.a, inst.constraint.a);
            assert_eq!(back.composite.set, inst.composite.set);
            assert_eq!(back.slater_point, inst.slater_point);
            assert_eq!(back.phi_lower, inst.phi_lower);
        }
    }

    #[test]
    fn rejects_bad_problem_files() {
        let inst = generate(&GeneratorSpec::box_default(3, 1, 0)).unwrap();
        let mut f = ProblemFile::from_instance(&inst);
        f.b.push(1.0);
        assert!(matches!(f.to_instance(), Err(Error::Dimension(_))));
        let mut f = ProblemFile::from_instance(&inst);
        f.h.kind = "cone".into();
        assert!(matches!(f.to_instance(), Err(Error::Parse(_))));
    }

    #[test]
    fn trace_round_trip() {
        let rows = vec![
            RecordOut {
                cycle: 1,
                c: 1.0,
                k: 1,
                inner_iters: 4,
                acg_bound: 9,
                r_norm: 0.3,
                eps: 1e-5,
                w_norm: 0.2,
                delta: 2e-5,
                w_hat_norm: 0.25,
                feas: 0.01,
                z_feas: 0.02,
                p_norm: 0.02,
                delta_k: None,
                lagrangian: -1.5,
                lagrangian_prev: 0.0,
            },
            RecordOut {
                cycle: 1,
                c: 1.0,
                k: 2,
                inner_iters: 5,
                acg_bound: 9,
                r_norm: 0.1,
                eps: 0.0,
                w_norm: 0.1,
                delta: 0.0,
                w_hat_norm: 0.1,
                feas: 0.001,
                z_feas: 0.002,
                p_norm: 0.021,
                delta_k: Some(0.5),
                lagrangian: -2.0,
                lagrangian_prev: -1.5,
            },
        ];
        let back = parse_trace_csv(&trace_csv(&rows)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].delta_k, None);
        assert_eq!(back[1].delta_k, Some(0.5));
        assert_eq!(back[1].lagrangian_prev, -1.5);
        assert!(parse_trace_csv("cycle,c\n1,2\n").is_err());
    }
}
