//! Problem data: `min f(z) + h(z) s.t. A z = b`, assumption checks and the
//! approximate stationarity test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::prox::ProxSet;
use crate::{Error, Matrix, Result, Vector};

/// Singular values below `RANK_CUTOFF * sigma_max` are treated as zero.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Smooth part `f(z) = 1/2 z'Qz + q'z` with its curvature metadata.
#[derive(Debug, Clone)]
pub struct SmoothObjective {
    pub hessian: Matrix,
    pub linear: Vector,
    /// Weak convexity modulus: `f + m_f/2 ||.||^2` is convex.
    pub m_f: f64,
    /// Lipschitz constant of the gradient.
    pub l_f: f64,
    /// Upper bound on `||grad f||` over the domain, once computed.
    pub grad_bound: Option<f64>,
}

impl SmoothObjective {
    pub fn quadratic(hessian: Matrix, linear: Vector, m_f: f64, l_f: f64) -> Result<Self> {
        let n = linear.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::Dimension(format!(
                "Q is {}x{}, q has length {n}",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        let asym = (&hessian - hessian.transpose()).amax();
        if asym > 1e-12 * (1.0 + hessian.amax()) {
            return Err(Error::Assumption(format!("Q is not symmetric ({asym:.3e})")));
        }
        if !(m_f.is_finite() && l_f.is_finite()) {
            return Err(Error::Argument("m_f and L_f must be finite".into()));
        }
        Ok(SmoothObjective {
            hessian,
            linear,
            m_f,
            l_f,
            grad_bound: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, z: &Vector) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + self.linear.dot(z)
    }

    pub fn gradient(&self, z: &Vector) -> Vector {
        &self.hessian * z + &self.linear
    }

    pub fn with_grad_bound(mut self, bound: f64) -> Self {
        self.grad_bound = Some(bound);
        self
    }
}

/// Convex part `h` with its Lipschitz constant on `H = dom h`.
#[derive(Debug, Clone)]
pub struct ConvexComposite {
    pub set: ProxSet,
    pub l_h: f64,
}

impl ConvexComposite {
    pub fn new(set: ProxSet, l_h: f64) -> Result<Self> {
        set.check()?;
        if !(l_h >= 0.0 && l_h.is_finite()) {
            return Err(Error::Argument(format!("L_h must be >= 0, got {l_h}")));
        }
        Ok(ConvexComposite { set, l_h })
    }

    pub fn value(&self, z: &Vector) -> f64 {
        self.set.value(z)
    }

    pub fn contains(&self, z: &Vector) -> bool {
        self.set.contains(z)
    }

    pub fn prox(&self, t: f64, x: &Vector) -> Result<Vector> {
        self.set.prox(t, x)
    }
}

/// `A z = b` with cached singular value data.
#[derive(Debug, Clone)]
pub struct LinearConstraint {
    pub a: Matrix,
    pub b: Vector,
    /// Largest singular value of `A`.
    pub op_norm: f64,
    /// Smallest positive singular value of `A`.
    pub sigma_plus: f64,
}

impl LinearConstraint {
    pub fn new(a: Matrix, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A has {} rows, b has length {}",
                a.nrows(),
                b.len()
            )));
        }
        let (op_norm, sigma_plus) = operator_norms(&a)?;
        Ok(LinearConstraint {
            a,
            b,
            op_norm,
            sigma_plus,
        })
    }

    pub fn residual(&self, z: &Vector) -> Vector {
        &self.a * z - &self.b
    }

    pub fn adjoint(&self, p: &Vector) -> Vector {
        self.a.tr_mul(p)
    }
}

/// Largest and smallest positive singular values of `a`.
pub fn operator_norms(a: &Matrix) -> Result<(f64, f64)> {
    if a.is_empty() || a.iter().all(|v| *v == 0.0) {
        return Err(Error::Assumption("A must be a nonzero operator".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("A has non-finite entries".into()));
    }
    let sv = a.singular_values();
    let max = sv.max();
    let cutoff = RANK_CUTOFF * max;
    let min_pos = sv
        .iter()
        .copied()
        .filter(|s| *s > cutoff)
        .fold(f64::INFINITY, f64::min);
    Ok((max, min_pos))
}

/// Stationarity and feasibility tolerances `(rho, eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolerancePair {
    pub rho: f64,
    pub eta: f64,
}

impl TolerancePair {
    pub fn new(rho: f64, eta: f64) -> Result<Self> {
        if !(rho > 0.0 && eta > 0.0 && rho.is_finite() && eta.is_finite()) {
            return Err(Error::Argument(format!(
                "tolerances must be positive, got ({rho}, {eta})"
            )));
        }
        Ok(TolerancePair { rho, eta })
    }
}

/// A complete problem instance. Immutable once built.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub smooth: SmoothObjective,
    pub composite: ConvexComposite,
    pub constraint: LinearConstraint,
    /// Strictly interior feasible point.
    pub slater_point: Vector,
    /// Optional lower bound on `inf (f + h)`.
    pub phi_lower: Option<f64>,
}

impl ProblemInstance {
    pub fn new(
        smooth: SmoothObjective,
        composite: ConvexComposite,
        constraint: LinearConstraint,
        slater_point: Vector,
        phi_lower: Option<f64>,
    ) -> Result<Self> {
        let n = smooth.dim();
        if constraint.a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A has {} columns, f lives in dimension {n}",
                constraint.a.ncols()
            )));
        }
        if let Some(m) = composite.set.dim() {
            if m != n {
                return Err(Error::Dimension(format!("h lives in dimension {m}, f in {n}")));
            }
        }
        if slater_point.len() != n {
            return Err(Error::Dimension(format!(
                "Slater point has length {}, expected {n}",
                slater_point.len()
            )));
        }
        Ok(ProblemInstance {
            smooth,
            composite,
            constraint,
            slater_point,
            phi_lower,
        })
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.smooth.dim()
    }

    /// Number of constraints.
    pub fn l(&self) -> usize {
        self.constraint.b.len()
    }

    /// Diameter `D` of `H`.
    pub fn diameter(&self) -> f64 {
        self.composite.set.diameter(self.n())
    }

    /// Distance `d` from the Slater point to the boundary of `H`.
    pub fn slater_distance(&self) -> f64 {
        self.composite.set.boundary_distance(&self.slater_point)
    }

    /// `phi = f + h`.
    pub fn objective(&self, z: &Vector) -> f64 {
        self.smooth.value(z) + self.composite.value(z)
    }

    /// Default starting point: the prox of the origin, which lies in `H`.
    pub fn default_start(&self) -> Result<Vector> {
        self.composite.prox(1.0, &Vector::zeros(self.n()))
    }

    pub fn feasibility(&self, z: &Vector) -> f64 {
        self.constraint.residual(z).norm()
    }

    /// The declared gradient bound, or `||grad f(zbar)|| + L_f D` at the Slater point.
    pub fn grad_bound(&self) -> f64 {
        self.smooth.grad_bound.unwrap_or_else(|| {
            self.smooth.gradient(&self.slater_point).norm() + self.smooth.l_f * self.diameter()
        })
    }
}

/// `||grad f(y)|| + L_f D`, which majorizes `||grad f||` on `H`.
pub fn grad_bound(f: &SmoothObjective, domain: &ConvexComposite, y: &Vector) -> Result<f64> {
    if !domain.contains(y) {
        return Err(Error::OutsideDomain);
    }
    Ok(f.gradient(y).norm() + f.l_f * domain.set.diameter(y.len()))
}

/// `||w|| <= rho` and `||A z - b|| <= eta`.
///
/// The inclusion `w in grad f(z) + dh(z) + A'p` is certified separately by
/// [`crate::verify::inclusion_residual`].
pub fn stationarity_check(
    constraint: &LinearConstraint,
    z: &Vector,
    w: &Vector,
    tol: &TolerancePair,
) -> bool {
    w.norm() <= tol.rho && constraint.residual(z).norm() <= tol.eta
}

/// Outcome of a single sampled assumption check.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest amount by which the inequality was violated (<= 0 when it holds).
    pub worst_violation: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const SAMPLE_TOL: f64 = 1e-9;

struct Worst {
    value: f64,
    detail: String,
}

impl Worst {
    fn new() -> Self {
        Worst {
            value: f64::NEG_INFINITY,
            detail: String::new(),
        }
    }

    fn update(&mut self, violation: f64, detail: impl FnOnce() -> String) {
        if violation > self.value {
            self.value = violation;
            self.detail = detail();
        }
    }

    fn finish(self, name: &'static str, scale_tol: f64) -> AssumptionCheck {
        AssumptionCheck {
            name,
            passed: self.value <= scale_tol,
            worst_violation: self.value,
            detail: self.detail,
        }
    }
}

/// Numerically spot-checks the standing assumptions on `instance`.
///
/// Fails hard when the Slater certificate is broken; every other assumption
/// is reported as a pass/fail entry together with its worst sample.
pub fn validate(instance: &ProblemInstance, samples: usize, seed: u64) -> Result<ValidationReport> {
    let n = instance.n();
    if instance.constraint.a.ncols() != n || instance.slater_point.len() != n {
        return Err(Error::Dimension("instance is not dimensionally consistent".into()));
    }
    let set = &instance.composite.set;
    let f = &instance.smooth;
    let zbar = &instance.slater_point;

    let slater_res = instance.feasibility(zbar);
    if slater_res > 1e-10 * (1.0 + instance.constraint.b.norm()) {
        return Err(Error::Assumption(format!(
            "Slater point is infeasible: ||A zbar - b|| = {slater_res:.3e}"
        )));
    }
    let dbar = instance.slater_distance();
    if !(dbar > 0.0) {
        return Err(Error::Assumption(
            "Slater point is not interior to dom h".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng, i: usize| {
        if i % 4 == 3 {
            set.sample_boundary(rng, n)
        } else {
            set.sample(rng, n)
        }
    };
    let pairs: Vec<(Vector, Vector)> = (0..samples)
        .map(|i| (draw(&mut rng, i), draw(&mut rng, i + 1)))
        .collect();

    let mut checks = Vec::new();

    checks.push(AssumptionCheck {
        name: "m_f <= L_f",
        passed: f.m_f > 0.0 && f.m_f <= f.l_f,
        worst_violation: (f.m_f - f.l_f).max(-f.m_f),
        detail: format!("m_f = {}, L_f = {}", f.m_f, f.l_f),
    });

    let mut lip = Worst::new();
    let mut curv = Worst::new();
    let mut hlip = Worst::new();
    let mut gbound = Worst::new();
    let bound = instance.grad_bound();
    for (idx, (z, zp)) in pairs.iter().enumerate() {
        let d = zp - z;
        let dn = d.norm();
        let gz = f.gradient(z);
        let gzp = f.gradient(zp);
        let scale = 1.0 + gz.norm() + gzp.norm();
        lip.update((&gzp - &gz).norm() - f.l_f * dn - SAMPLE_TOL * scale, || {
            format!("pair {idx}: ||dg|| = {:.6e}, L_f ||dz|| = {:.6e}", (&gzp - &gz).norm(), f.l_f * dn)
        });
        let fz = f.value(z);
        let fzp = f.value(zp);
        let lin_gap = fzp - fz - gz.dot(&d);
        let vscale = 1.0 + fz.abs() + fzp.abs();
        curv.update(-(f.m_f / 2.0) * dn * dn - lin_gap - SAMPLE_TOL * vscale, || {
            format!("pair {idx}: f(z') - l_f(z';z) = {lin_gap:.6e}, -m_f/2 ||dz||^2 = {:.6e}", -(f.m_f / 2.0) * dn * dn)
        });
        let hz = set.value(z);
        let hzp = set.value(zp);
        hlip.update((hz - hzp).abs() - instance.composite.l_h * dn - SAMPLE_TOL * (1.0 + hz.abs() + hzp.abs()), || {
            format!("pair {idx}: |dh| = {:.6e}, L_h ||dz|| = {:.6e}", (hz - hzp).abs(), instance.composite.l_h * dn)
        });
        gbound.update(gz.norm() - bound - SAMPLE_TOL * scale, || {
            format!("sample {idx}: ||grad f|| = {:.6e}, bound = {bound:.6e}", gz.norm())
        });
    }
    checks.push(lip.finish("gradient Lipschitz", 0.0));
    checks.push(curv.finish("lower curvature", 0.0));
    checks.push(hlip.finish("h Lipschitz", 0.0));
    checks.push(gbound.finish("gradient bound", 0.0));

    let mut prox_in = Worst::new();
    let spread = set.diameter(n).max(1.0);
    for idx in 0..samples {
        let x = set.sample(&mut rng, n)
            + Vector::from_fn(n, |_, _| spread * (2.0 * rng.gen::<f64>() - 1.0));
        let t = 0.01 + rng.gen::<f64>() * 10.0;
        let u = set.prox(t, &x)?;
        let outside = if set.contains(&u) && set.value(&u).is_finite() { -1.0 } else { 1.0 };
        prox_in.update(outside, || format!("sample {idx}: prox output outside H"));
    }
    checks.push(prox_in.finish("prox in domain", 0.0));

    let diameter = instance.diameter();
    checks.push(AssumptionCheck {
        name: "bounded domain",
        passed: diameter.is_finite(),
        worst_violation: if diameter.is_finite() { -1.0 } else { f64::INFINITY },
        detail: format!("D = {diameter}"),
    });
    checks.push(AssumptionCheck {
        name: "Slater point",
        passed: true,
        worst_violation: slater_res,
        detail: format!("||A zbar - b|| = {slater_res:.3e}, dbar = {dbar}"),
    });
    let (op_norm, sigma_plus) = (instance.constraint.op_norm, instance.constraint.sigma_plus);
    checks.push(AssumptionCheck {
        name: "nonzero operator",
        passed: op_norm >= sigma_plus && sigma_plus > 0.0,
        worst_violation: -sigma_plus,
        detail: format!("||A|| = {op_norm}, sigma_A+ = {sigma_plus}"),
    });

    Ok(ValidationReport {
        seed,
        samples,
        checks,
    })
}
