//! Augmented Lagrangian evaluation, the proximal subproblem handed to ACG,
//! and the refinement of an inexact subproblem solution.

use crate::acg::CompositeStructure;
use crate::problem::ProblemInstance;
use crate::prox::{shifted_prox, ProxSet};
use crate::{Error, Result, Vector};

/// Relative slack for the refinement inequalities.
pub const REFINE_TOL: f64 = 1e-8;

/// Per-cycle parameters derived from the penalty `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyParams {
    pub c: f64,
    pub lambda: f64,
    /// `L_f + c ||A||^2`.
    pub l_c: f64,
    pub sigma_c: f64,
    pub m_s: f64,
    pub mu: f64,
    pub nu: f64,
    pub sigma: f64,
}

impl PenaltyParams {
    pub fn new(problem: &ProblemInstance, c: f64, nu: f64, sigma: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Argument(format!("penalty must be positive, got {c}")));
        }
        if !(nu > 0.0) {
            return Err(Error::Argument(format!("nu must be positive, got {nu}")));
        }
        if !(sigma > 0.0 && sigma <= std::f64::consts::FRAC_1_SQRT_2 + 1e-12) {
            return Err(Error::Argument(format!(
                "sigma must lie in (0, 1/sqrt 2], got {sigma}"
            )));
        }
        let lambda = 1.0 / (2.0 * problem.smooth.m_f);
        let op = problem.constraint.op_norm;
        let l_c = problem.smooth.l_f + c * op * op;
        let sigma_c = (nu / (lambda * l_c + 1.0).sqrt()).min(sigma);
        Ok(PenaltyParams {
            c,
            lambda,
            l_c,
            sigma_c,
            m_s: lambda * l_c + 0.5,
            mu: 0.5,
            nu,
            sigma,
        })
    }

    /// `lambda L_c + 1`.
    pub fn prox_curvature(&self) -> f64 {
        self.lambda * self.l_c + 1.0
    }
}

/// `f(z) + h(z) + <p, Az - b> + (c/2) ||Az - b||^2`.
pub fn lagrangian_value(problem: &ProblemInstance, z: &Vector, p: &Vector, c: f64) -> Result<f64> {
    let h = problem.composite.value(z);
    if !h.is_finite() {
        return Err(Error::OutsideDomain);
    }
    let res = problem.constraint.residual(z);
    Ok(problem.smooth.value(z) + h + p.dot(&res) + 0.5 * c * res.norm_squared())
}

/// `grad f(z) + A^T (p + c (Az - b))`.
pub fn smooth_grad(problem: &ProblemInstance, z: &Vector, p: &Vector, c: f64) -> Vector {
    let res = problem.constraint.residual(z);
    problem.smooth.gradient(z) + problem.constraint.adjoint(&(p + res * c))
}

/// The proximal augmented Lagrangian subproblem
/// `min lambda L_c(., p_prev) + 1/2 ||. - z_prev||^2` split as
/// `psi_s = lambda g + 1/4 ||. - z_prev||^2`, `psi_n = lambda h + 1/4 ||. - z_prev||^2`.
#[derive(Debug, Clone)]
pub struct ProxAlSubproblem<'a> {
    pub problem: &'a ProblemInstance,
    pub z_prev: Vector,
    pub p_prev: Vector,
    pub params: PenaltyParams,
}

pub fn build_subproblem<'a>(
    problem: &'a ProblemInstance,
    z_prev: &Vector,
    p_prev: &Vector,
    params: &PenaltyParams,
) -> ProxAlSubproblem<'a> {
    ProxAlSubproblem {
        problem,
        z_prev: z_prev.clone(),
        p_prev: p_prev.clone(),
        params: *params,
    }
}

impl CompositeStructure for ProxAlSubproblem<'_> {
    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn smooth_value(&self, x: &Vector) -> f64 {
        self.smooth_eval(x).0
    }

    fn smooth_grad(&self, x: &Vector) -> Vector {
        self.smooth_eval(x).1
    }

    fn smooth_eval(&self, x: &Vector) -> (f64, Vector) {
        let f = &self.problem.smooth;
        let lam = self.params.lambda;
        let c = self.params.c;
        let qx = &f.hessian * x;
        let res = self.problem.constraint.residual(x);
        let d = x - &self.z_prev;
        let g_val = 0.5 * x.dot(&qx) + f.linear.dot(x) + self.p_prev.dot(&res) + 0.5 * c * res.norm_squared();
        let g_grad = qx + &f.linear + self.problem.constraint.adjoint(&(&self.p_prev + res * c));
        (lam * g_val + 0.25 * d.norm_squared(), g_grad * lam + d * 0.5)
    }

    fn nonsmooth_value(&self, x: &Vector) -> f64 {
        self.params.lambda * self.problem.composite.value(x) + 0.25 * (x - &self.z_prev).norm_squared()
    }

    fn nonsmooth_prox(&self, t: f64, x: &Vector) -> Result<Vector> {
        let s = 1.0 + 0.5 * t;
        let centre = (x + &self.z_prev * (0.5 * t)) / s;
        self.problem.composite.prox(self.params.lambda * t / s, &centre)
    }

    fn upper_curvature(&self) -> f64 {
        self.params.m_s
    }

    fn strong_convexity(&self) -> f64 {
        self.params.mu
    }
}

/// Output of the refinement step.
#[derive(Debug, Clone)]
pub struct RefinedIterate {
    pub r: Vector,
    pub z_hat: Vector,
    pub w: Vector,
    pub w_hat: Vector,
    pub delta: f64,
    pub p_hat: Vector,
}

/// Refinement with an arbitrary gradient oracle for `g`; `p_hat` is left
/// empty and no inequality is checked.
#[allow(clippy::too_many_arguments)]
pub fn refine_core<G: Fn(&Vector) -> Vector>(
    h: &ProxSet,
    lambda: f64,
    l_c: f64,
    z_prev: &Vector,
    z_k: &Vector,
    v_k: &Vector,
    eps_k: f64,
    grad_g: G,
) -> Result<RefinedIterate> {
    let curv = lambda * l_c + 1.0;
    let r = v_k + z_prev - z_k;
    let g_k = grad_g(z_k);
    // objective of the refinement problem divided by lambda
    let a = &g_k - &r / lambda;
    let z_hat = shifted_prox(h, &a, curv / lambda, z_k)?;
    let w = (&r + (z_k - &z_hat) * curv) / lambda;
    let w_hat = &w + grad_g(&z_hat) - g_k;
    Ok(RefinedIterate {
        r,
        z_hat,
        w,
        w_hat,
        delta: eps_k / lambda,
        p_hat: Vector::zeros(0),
    })
}

fn leq(name: &str, lhs: f64, rhs: f64) -> Result<()> {
    if lhs <= rhs + REFINE_TOL * (1.0 + lhs.abs() + rhs.abs()) {
        Ok(())
    } else {
        Err(Error::Invariant(format!("refinement: {name}: {lhs:.6e} > {rhs:.6e}")))
    }
}

impl RefinedIterate {
    /// Checks the four refinement inequalities for a certificate obtained
    /// with relative tolerance `sigma_tilde`. `eps_slack` bounds the roundoff
    /// in `eps_k`; it enters only the distance bound, where the square root
    /// would otherwise amplify it.
    pub fn check(
        &self,
        lambda: f64,
        l_c: f64,
        sigma_tilde: f64,
        z_k: &Vector,
        eps_k: f64,
        eps_slack: f64,
    ) -> Result<()> {
        let root = (lambda * l_c + 1.0).sqrt();
        let rn = self.r.norm();
        leq(
            "lambda |w| <= (1 + s sqrt(T)) |r|",
            lambda * self.w.norm(),
            (1.0 + sigma_tilde * root) * rn,
        )?;
        leq(
            "delta <= s^2 |r|^2 / (2 lambda)",
            self.delta,
            sigma_tilde * sigma_tilde * rn * rn / (2.0 * lambda),
        )?;
        leq(
            "lambda |w_hat| <= (1 + 2 s sqrt(T)) |r|",
            lambda * self.w_hat.norm(),
            (1.0 + 2.0 * sigma_tilde * root) * rn,
        )?;
        leq(
            "|z_hat - z| <= sqrt(2 eps / T)",
            (&self.z_hat - z_k).norm(),
            (2.0 * (eps_k + eps_slack) / (root * root)).sqrt(),
        )
    }
}

/// Refines an inexact solution `(z_k, v_k, eps_k)` of the subproblem
/// centred at `(z_prev, p_prev)` and checks the refinement inequalities.
#[allow(clippy::too_many_arguments)]
pub fn refine(
    problem: &ProblemInstance,
    z_prev: &Vector,
    p_prev: &Vector,
    z_k: &Vector,
    v_k: &Vector,
    eps_k: f64,
    eps_slack: f64,
    params: &PenaltyParams,
) -> Result<RefinedIterate> {
    let c = params.c;
    let mut out = refine_core(
        &problem.composite.set,
        params.lambda,
        params.l_c,
        z_prev,
        z_k,
        v_k,
        eps_k,
        |z| smooth_grad(problem, z, p_prev, c),
    )?;
    out.p_hat = p_prev + problem.constraint.residual(&out.z_hat) * c;
    out.check(params.lambda, params.l_c, params.sigma_c, z_k, eps_k, eps_slack)?;
    Ok(out)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::acg::{acg_run, AcgOptions};
    use crate::problem::{ConvexComposite, LinearConstraint, SmoothObjective};
    use crate::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn small_instance(seed: u64) -> ProblemInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 4;
        let l = 2;
        let m = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let q = (&m + m.transpose()) * 0.5;
        let eig = q.clone().symmetric_eigen().eigenvalues;
        let m_f = (-eig.min()).max(0.1);
        let l_f = eig.abs().max().max(m_f);
        let smooth =
            SmoothObjective::quadratic(q, Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0)), m_f, l_f).unwrap();
        let set = ProxSet::Box {
            lower: Vector::from_element(n, -1.0),
            upper: Vector::from_element(n, 1.0),
        };
        let composite = ConvexComposite::new(set, 0.0).unwrap();
        let a = Matrix::from_fn(l, n, |_, _| rng.gen_range(-1.0..1.0));
        let z_bar = Vector::from_fn(n, |_, _| rng.gen_range(-0.5..0.5));
        let b = &a * &z_bar;
        let constraint = LinearConstraint::new(a, b).unwrap();
        ProblemInstance::new(smooth, composite, constraint, z_bar, None).unwrap()
    }

    #[test]
    fn lagrangian_on_feasible_point_is_objective() {
        let inst = small_instance(1);
        let z = inst.slater_point.clone();
        let p = Vector::from_column_slice(&[3.0, -2.0]);
        let v = lagrangian_value(&inst, &z, &p, 7.0).unwrap();
        assert!((v - inst.objective(&z)).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_penalty_term() {
        let inst = small_instance(2);
        let mut z = inst.slater_point.clone();
        z[0] += 0.3;
        let res = inst.constraint.residual(&z);
        let z = &z;
        let base = inst.objective(z);
        let p = Vector::zeros(2);
        let scale = 1.0 / res.norm();
        // rescale so that ||Az - b|| = 1 is emulated through c
        let v = lagrangian_value(&inst, z, &p, 2.0 * scale * scale).unwrap();
        assert!((v - base - 1.0).abs() < 1e-12);
        let v1 = lagrangian_value(&inst, z, &p, 3.0).unwrap();
        let v2 = lagrangian_value(&inst, z, &p, 6.0).unwrap();
        assert!((v2 - v1 - 1.5 * res.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn lagrangian_rejects_points_outside_h() {
        let inst = small_instance(3);
        let z = Vector::from_element(4, 2.0);
        assert!(lagrangian_value(&inst, &z, &Vector::zeros(2), 1.0).is_err());
    }

    #[test]
    fn smooth_grad_identity_case() {
        let smooth = SmoothObjective::quadratic(Matrix::zeros(2, 2), Vector::zeros(2), 1.0, 1.0).unwrap();
        let set = ProxSet::Box {
            lower: Vector::from_element(2, -1.0),
            upper: Vector::from_element(2, 1.0),
        };
        let inst = ProblemInstance::new(
            smooth,
            ConvexComposite::new(set, 0.0).unwrap(),
            LinearConstraint::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap(),
            Vector::zeros(2),
            None,
        )
        .unwrap();
        let z = Vector::from_column_slice(&[0.3, -0.4]);
        let p = Vector::from_column_slice(&[1.0, 2.0]);
        let g = smooth_grad(&inst, &z, &p, 1.0);
        assert!((g - (&z + &p)).norm() < 1e-15);
    }

    #[test]
    fn smooth_grad_matches_central_differences() {
        for seed in 0..5 {
            let inst = small_instance(seed);
            let z = Vector::from_column_slice(&[0.1, -0.2, 0.3, 0.05]);
            let p = Vector::from_column_slice(&[0.7, -1.1]);
            let c = 3.5;
            let g = smooth_grad(&inst, &z, &p, c);
            let fd = Vector::from_fn(4, |i, _| {
                let mut zp = z.clone();
                let mut zm = z.clone();
                let step = 1e-6;
                zp[i] += step;
                zm[i] -= step;
                (lagrangian_value(&inst, &zp, &p, c).unwrap() - lagrangian_value(&inst, &zm, &p, c).unwrap())
                    / (2.0 * step)
            });
            assert!((&g - &fd).norm() <= 1e-5 * (1.0 + g.norm()));
        }
    }

    #[test]
    fn subproblem_gradient_at_centre() {
        let inst = small_instance(4);
        let params = PenaltyParams::new(&inst, 5.0, 1.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let z = Vector::from_column_slice(&[0.2, 0.1, -0.3, 0.4]);
        let p = Vector::from_column_slice(&[0.5, 0.5]);
        let sub = build_subproblem(&inst, &z, &p, &params);
        let g = sub.smooth_grad(&z);
        assert!((g - smooth_grad(&inst, &z, &p, 5.0) * params.lambda).norm() < 1e-13);
    }

    #[test]
    fn subproblem_curvature_within_declared_bound() {
        let inst = small_instance(5);
        let params = PenaltyParams::new(&inst, 2.0, 1.0, 0.5).unwrap();
        let a = &inst.constraint.a;
        let hess = (&inst.smooth.hessian + a.transpose() * a * params.c) * params.lambda
            + Matrix::identity(4, 4) * 0.5;
        let eig = hess.symmetric_eigen().eigenvalues;
        assert!(eig.max() <= params.m_s + 1e-12);
        // psi_s convex because lambda = 1/(2 m_f)
        assert!(eig.min() >= -1e-12);
    }

    #[test]
    fn nonsmooth_part_strongly_convex() {
        let inst = small_instance(6);
        let params = PenaltyParams::new(&inst, 1.0, 1.0, 0.5).unwrap();
        let z_prev = Vector::from_column_slice(&[0.9, -0.9, 0.0, 0.5]);
        let sub = build_subproblem(&inst, &z_prev, &Vector::zeros(2), &params);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let t = 0.7;
            let y = Vector::from_fn(4, |_, _| rng.gen_range(-2.0..2.0));
            let x = sub.nonsmooth_prox(t, &y).unwrap();
            // prox optimality gives s = (y - x)/t in the subdifferential at x
            let s = (&y - &x) / t;
            let u = inst.composite.set.sample(&mut rng, 4);
            let lhs = sub.nonsmooth_value(&u);
            let rhs = sub.nonsmooth_value(&x) + s.dot(&(&u - &x)) + 0.25 * (&u - &x).norm_squared();
            assert!(lhs >= rhs - 1e-10);
        }
    }

    #[test]
    fn refine_core_one_dimensional_example() {
        let h = ProxSet::Box {
            lower: Vector::from_element(1, -10.0),
            upper: Vector::from_element(1, 10.0),
        };
        let out = refine_core(
            &h,
            1.0,
            1.0,
            &Vector::from_element(1, 0.5),
            &Vector::zeros(1),
            &Vector::zeros(1),
            0.0,
            |_| Vector::from_element(1, 1.0),
        )
        .unwrap();
        assert!((out.r[0] - 0.5).abs() < 1e-15);
        assert!((out.z_hat[0] + 0.25).abs() < 1e-15);
        assert!((out.w[0] - 1.0).abs() < 1e-15);
        assert!((out.w_hat[0] - 1.0).abs() < 1e-15);
        assert_eq!(out.delta, 0.0);
    }

    #[test]
    fn refine_at_exact_interior_solution() {
        // f = 0, h = box indicator, A = I, b = 0; subproblem minimiser z solves
        // lambda c z + (z - z_prev) = 0
        let smooth = SmoothObjective::quadratic(Matrix::zeros(2, 2), Vector::zeros(2), 1.0, 1.0).unwrap();
        let set = ProxSet::Box {
            lower: Vector::from_element(2, -1.0),
            upper: Vector::from_element(2, 1.0),
        };
        let inst = ProblemInstance::new(
            smooth,
            ConvexComposite::new(set, 0.0).unwrap(),
            LinearConstraint::new(Matrix::identity(2, 2), Vector::zeros(2)).unwrap(),
            Vector::zeros(2),
            None,
        )
        .unwrap();
        let params = PenaltyParams::new(&inst, 2.0, 1.0, 0.5).unwrap();
        let z_prev = Vector::from_column_slice(&[0.4, -0.2]);
        let z_k = &z_prev / (1.0 + params.lambda * params.c);
        let out = refine(&inst, &z_prev, &Vector::zeros(2), &z_k, &Vector::zeros(2), 0.0, 0.0, &params).unwrap();
        assert!((&out.z_hat - &z_k).norm() < 1e-14);
        assert!((&out.w - &out.r / params.lambda).norm() < 1e-13);
        assert!((&out.r - (&z_prev - &z_k)).norm() < 1e-15);
    }

    #[test]
    fn refine_after_acg_satisfies_bounds_and_inclusion() {
        for seed in 0..5 {
            let inst = small_instance(seed);
            let params = PenaltyParams::new(&inst, 10.0, 1.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
            let z_prev = Vector::from_column_slice(&[0.9, -0.5, 0.2, -1.0]);
            let p_prev = Vector::from_column_slice(&[0.3, -0.7]);
            let sub = build_subproblem(&inst, &z_prev, &p_prev, &params);
            let cert = acg_run(
                &sub,
                &z_prev,
                &AcgOptions {
                    sigma_tilde: params.sigma_c,
                    max_iters: None,
                    deadline: None,
                },
                None,
            )
            .unwrap();
            let out = refine(&inst, &z_prev, &p_prev, &cert.x, &cert.u, cert.eta, cert.eta_slack, &params).unwrap();
            // refined inclusion via prox fixed point
            let t = 1.0 / inst.smooth.l_f;
            let g = inst.smooth.gradient(&out.z_hat) + inst.constraint.adjoint(&out.p_hat) - &out.w_hat;
            let fixed = inst.composite.prox(t, &(&out.z_hat - g * t)).unwrap();
            assert!((fixed - &out.z_hat).norm() <= 1e-8 * (1.0 + out.z_hat.norm()));
        }
    }
}
