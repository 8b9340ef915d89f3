//! Accelerated composite gradient (ACG) method for
//! `min psi_s(x) + psi_n(x)` where `psi_s` is convex with `M_s`-Lipschitz
//! gradient and `psi_n` is `mu`-strongly convex with a cheap prox.
//!
//! Besides the usual iterates the method maintains an averaged affine
//! minorant `Gamma_j` of `psi_s`, which yields a certificate
//! `u_j in d_{eta_j}(psi_s + psi_n)(x_j)` at every iteration. The run stops
//! at the first `j` with `||u||^2 + 2 eta <= sigma^2 ||x_0 - x + u||^2`.

use crate::{log1_plus, Error, Result, Vector};

/// A composite structure `(psi_s, psi_n)`.
pub trait CompositeStructure {
    fn dim(&self) -> usize;

    fn smooth_value(&self, x: &Vector) -> f64;

    fn smooth_grad(&self, x: &Vector) -> Vector;

    /// `(psi_s(x), grad psi_s(x))`; override when the two share work.
    fn smooth_eval(&self, x: &Vector) -> (f64, Vector) {
        (self.smooth_value(x), self.smooth_grad(x))
    }

    /// `psi_n(x)`, `+inf` outside its domain.
    fn nonsmooth_value(&self, x: &Vector) -> f64;

    /// `argmin_y { psi_n(y) + ||y - x||^2 / (2t) }`.
    fn nonsmooth_prox(&self, t: f64, x: &Vector) -> Result<Vector>;

    /// `M_s`.
    fn upper_curvature(&self) -> f64;

    /// `mu`.
    fn strong_convexity(&self) -> f64;

    fn value(&self, x: &Vector) -> f64 {
        self.smooth_value(x) + self.nonsmooth_value(x)
    }
}

/// Iterate of the ACG method.
///
/// `Gamma_j(y) = gamma_offset + <gamma_slope, y - y_0>`, kept centred at
/// `y_0` to limit cancellation when evaluating the certificate gap.
#[derive(Debug, Clone)]
pub struct AcgState {
    pub j: usize,
    pub a: f64,
    pub x: Vector,
    pub y: Vector,
    pub y0: Vector,
    pub gamma_slope: Vector,
    pub gamma_offset: f64,
}

impl AcgState {
    pub fn new(x0: Vector) -> Self {
        let n = x0.len();
        AcgState {
            j: 0,
            a: 0.0,
            y: x0.clone(),
            y0: x0.clone(),
            x: x0,
            gamma_slope: Vector::zeros(n),
            gamma_offset: 0.0,
        }
    }

    /// `Gamma_j(y)`.
    pub fn gamma(&self, y: &Vector) -> f64 {
        self.gamma_offset + self.gamma_slope.dot(&(y - &self.y0))
    }
}

/// `A_{j+1}` from `A_j`.
pub fn next_a(a: f64, m_s: f64, mu: f64) -> f64 {
    let s = mu * a + 1.0;
    a + (s + (s * s + 4.0 * m_s * s * a).sqrt()) / (2.0 * m_s)
}

/// One pass of step 1: new `A`, averaged minorant, prox step and convex
/// combination.
pub fn acg_step<C: CompositeStructure + ?Sized>(state: &AcgState, cs: &C) -> Result<AcgState> {
    let m_s = cs.upper_curvature();
    let mu = cs.strong_convexity();
    let a_next = next_a(state.a, m_s, mu);
    let keep = state.a / a_next;
    let take = (a_next - state.a) / a_next;

    let x_tilde = &state.x * keep + &state.y * take;
    let (val, grad) = cs.smooth_eval(&x_tilde);
    // l(.; x_tilde) = val + <grad, . - x_tilde>, centred at y0
    let lin_offset = val + grad.dot(&(&state.y0 - &x_tilde));
    let gamma_slope = &state.gamma_slope * keep + &grad * take;
    let gamma_offset = state.gamma_offset * keep + lin_offset * take;

    // argmin Gamma(y) + psi_n(y) + ||y - y0||^2 / (2A) = prox_{A psi_n}(y0 - A slope)
    let y = cs.nonsmooth_prox(a_next, &(&state.y0 - &gamma_slope * a_next))?;
    let x = &state.x * keep + &y * take;

    Ok(AcgState {
        j: state.j + 1,
        a: a_next,
        x,
        y,
        y0: state.y0.clone(),
        gamma_slope,
        gamma_offset,
    })
}

/// Step 2 quantities `(u_j, eta_j)` for a state with `j >= 1`; `eta` is not clamped.
pub fn certificate_pair<C: CompositeStructure + ?Sized>(state: &AcgState, cs: &C) -> (Vector, f64, f64) {
    let u = (&state.y0 - &state.y) / state.a;
    let psi_x = cs.value(&state.x);
    let gamma_y = state.gamma(&state.y);
    let psi_n_y = cs.nonsmooth_value(&state.y);
    let pair = u.dot(&(&state.x - &state.y));
    let eta = psi_x - gamma_y - psi_n_y - pair;
    let scale = 1.0 + psi_x.abs() + gamma_y.abs() + psi_n_y.abs() + pair.abs();
    (u, eta, scale)
}

/// `(1/M_s) max{ j^2/4, (1 + sqrt(mu / (4 M_s)))^(2(j-1)) }`.
pub fn a_j_lower_bound(j: usize, m_s: f64, mu: f64) -> f64 {
    let poly = (j * j) as f64 / 4.0;
    let geo = (1.0 + (mu / (4.0 * m_s)).sqrt()).powf(2.0 * (j as f64 - 1.0));
    poly.max(geo) / m_s
}

/// `ceil(1 + sqrt(M_s/mu) log1+((1 + 1/sigma) sqrt(2 M_s)))`.
pub fn acg_iteration_bound(m_s: f64, mu: f64, sigma_tilde: f64) -> usize {
    let v = 1.0 + (m_s / mu).sqrt() * log1_plus((1.0 + 1.0 / sigma_tilde) * (2.0 * m_s).sqrt());
    v.ceil() as usize
}

/// Output of a successful ACG run.
#[derive(Debug, Clone)]
pub struct AcgCertificate {
    pub x: Vector,
    pub u: Vector,
    /// Clamped to `[0, inf)`.
    pub eta: f64,
    /// Roundoff allowance on `eta`: `ETA_TOL` times the magnitude of its terms.
    pub eta_slack: f64,
    pub iterations: usize,
    /// Theoretical iteration bound for the run's `(M_s, mu, sigma)`.
    pub bound: usize,
}

/// Per-iteration trace record.
#[derive(Debug, Clone, Copy)]
pub struct AcgTrace {
    pub j: usize,
    pub a: f64,
    pub u_norm: f64,
    pub eta: f64,
    /// `(||u||^2 + 2 eta) / (sigma^2 ||x0 - x + u||^2)`; the test passes at <= 1.
    pub ratio: f64,
}

/// Relative slack for the growth bound on `A_j`.
pub const GROWTH_TOL: f64 = 1e-9;
/// Relative slack for negative gaps before clamping.
pub const ETA_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct AcgOptions {
    pub sigma_tilde: f64,
    /// Defaults to 10x [`acg_iteration_bound`].
    pub max_iters: Option<usize>,
    /// Wall-clock limit, checked every iteration.
    pub deadline: Option<std::time::Instant>,
}

/// Runs ACG from `x0` until the relative-error test holds.
pub fn acg_run<C: CompositeStructure + ?Sized>(
    cs: &C,
    x0: &Vector,
    opts: &AcgOptions,
    mut trace: Option<&mut dyn FnMut(&AcgTrace)>,
) -> Result<AcgCertificate> {
    let m_s = cs.upper_curvature();
    let mu = cs.strong_convexity();
    let sigma = opts.sigma_tilde;
    if !(mu > 0.0 && 4.0 * m_s >= mu) {
        return Err(Error::Argument(format!(
            "ACG needs 4 M_s >= mu > 0, got M_s = {m_s}, mu = {mu}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::Argument(format!("sigma must be positive, got {sigma}")));
    }
    if x0.len() != cs.dim() {
        return Err(Error::Dimension(format!(
            "x0 has length {}, structure has dimension {}",
            x0.len(),
            cs.dim()
        )));
    }
    if !cs.nonsmooth_value(x0).is_finite() {
        return Err(Error::OutsideDomain);
    }

    let bound = acg_iteration_bound(m_s, mu, sigma);
    let max_iters = opts.max_iters.unwrap_or(10 * bound).max(1);
    let mut state = AcgState::new(x0.clone());
    let mut last_ratio = f64::INFINITY;
    while state.j < max_iters {
        if opts.deadline.is_some_and(|d| std::time::Instant::now() >= d) {
            return Err(Error::Deadline);
        }
        state = acg_step(&state, cs)?;
        let lower = a_j_lower_bound(state.j, m_s, mu);
        if state.a < lower * (1.0 - GROWTH_TOL) {
            return Err(Error::Invariant(format!(
                "A_{} = {:.6e} below growth bound {:.6e}",
                state.j, state.a, lower
            )));
        }
        let (u, eta_raw, scale) = certificate_pair(&state, cs);
        if eta_raw < -ETA_TOL * scale {
            return Err(Error::Invariant(format!(
                "negative certificate gap eta_{} = {eta_raw:.3e} (scale {scale:.3e})",
                state.j
            )));
        }
        let eta = eta_raw.max(0.0);
        let lhs = u.norm_squared() + 2.0 * eta;
        let rhs = sigma * sigma * (x0 - &state.x + &u).norm_squared();
        last_ratio = lhs / rhs;
        if let Some(cb) = trace.as_mut() {
            cb(&AcgTrace {
                j: state.j,
                a: state.a,
                u_norm: u.norm(),
                eta,
                ratio: last_ratio,
            });
        }
        if lhs <= rhs {
            return Ok(AcgCertificate {
                x: state.x,
                u,
                eta,
                eta_slack: ETA_TOL * scale,
                iterations: state.j,
                bound,
            });
        }
    }
    Err(Error::AcgBudget {
        iterations: state.j,
        bound,
        last_ratio,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::prox::ProxSet;

    /// `psi_s = a/2 ||x - c||^2`, `psi_n = b/2 ||x||^2 + indicator of a box`.
    pub(crate) struct Separable {
        pub a: f64,
        pub c: Vector,
        pub b: f64,
        pub bounds: (f64, f64),
        pub m_s: f64,
        pub mu: f64,
    }

    impl CompositeStructure for Separable {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn smooth_value(&self, x: &Vector) -> f64 {
            0.5 * self.a * (x - &self.c).norm_squared()
        }
        fn smooth_grad(&self, x: &Vector) -> Vector {
            (x - &self.c) * self.a
        }
        fn nonsmooth_value(&self, x: &Vector) -> f64 {
            if x.iter().all(|v| *v >= self.bounds.0 && *v <= self.bounds.1) {
                0.5 * self.b * x.norm_squared()
            } else {
                f64::INFINITY
            }
        }
        fn nonsmooth_prox(&self, t: f64, x: &Vector) -> Result<Vector> {
            let n = x.len();
            let set = ProxSet::Box {
                lower: Vector::from_element(n, self.bounds.0),
                upper: Vector::from_element(n, self.bounds.1),
            };
            set.prox(t / (1.0 + t * self.b), &(x / (1.0 + t * self.b)))
        }
        fn upper_curvature(&self) -> f64 {
            self.m_s
        }
        fn strong_convexity(&self) -> f64 {
            self.mu
        }
    }

    fn one_d() -> Separable {
        // 1/2 (x-1)^2 + 1/4 x^2 on [-10, 10]
        Separable {
            a: 1.0,
            c: Vector::from_element(1, 1.0),
            b: 0.5,
            bounds: (-10.0, 10.0),
            m_s: 1.0,
            mu: 0.5,
        }
    }

    #[test]
    fn first_step_gives_inverse_curvature() {
        for (m_s, mu) in [(1.0, 0.5), (3.0, 0.0), (250.0, 2.0)] {
            assert_eq!(next_a(0.0, m_s, mu), 1.0 / m_s);
            assert!((a_j_lower_bound(1, m_s, mu) - 1.0 / m_s).abs() < 1e-15);
        }
    }

    #[test]
    fn recurrence_hand_value() {
        let a2 = next_a(1.0, 1.0, 0.5);
        let expected = 1.0 + (1.5 + 8.25f64.sqrt()) / 2.0;
        assert!((a2 - expected).abs() < 1e-15);
        assert!((a2 - 3.186140661634507).abs() < 1e-12);
        let lb = a_j_lower_bound(2, 1.0, 0.5);
        assert!((lb - (1.0 + 0.125f64.sqrt()).powi(2)).abs() < 1e-15);
        assert!(a2 >= lb);
    }

    #[test]
    fn growth_bound_without_strong_convexity() {
        for j in 1..20 {
            assert!((a_j_lower_bound(j, 2.0, 0.0) - (j * j) as f64 / 8.0).abs() < 1e-15 || j == 1);
        }
    }

    #[test]
    fn iteration_bound_examples() {
        let base = (1.0 + log1_plus(2.0 * 2.0f64.sqrt())).ceil() as usize;
        assert_eq!(acg_iteration_bound(1.0, 1.0, 1.0), base);
        assert_eq!(acg_iteration_bound(1.0, 0.5, 1.0), 3);
        assert_eq!(acg_iteration_bound(100.0, 0.5, 0.1), 73);
    }

    #[test]
    fn one_dimensional_run_reaches_two_thirds() {
        let cs = one_d();
        let cert = acg_run(
            &cs,
            &Vector::zeros(1),
            &AcgOptions {
                sigma_tilde: 0.3,
                max_iters: None,
                deadline: None,
            },
            None,
        )
        .unwrap();
        assert!(cert.iterations <= acg_iteration_bound(1.0, 0.5, 0.3));
        assert!((cert.x[0] - 2.0 / 3.0).abs() < 0.1, "{}", cert.x[0]);
    }

    #[test]
    fn huge_sigma_stops_after_one_iteration() {
        let cert = acg_run(
            &one_d(),
            &Vector::zeros(1),
            &AcgOptions {
                sigma_tilde: 1e6,
                max_iters: None,
                deadline: None,
            },
            None,
        )
        .unwrap();
        assert_eq!(cert.iterations, 1);
    }

    #[test]
    fn exact_minimizer_start_passes_at_once() {
        // minimizer of 1/2 x^2 + 1/2 x^2 is 0
        let cs = Separable {
            a: 1.0,
            c: Vector::zeros(2),
            b: 1.0,
            bounds: (-1.0, 1.0),
            m_s: 1.0,
            mu: 1.0,
        };
        let cert = acg_run(
            &cs,
            &Vector::zeros(2),
            &AcgOptions {
                sigma_tilde: 1e-3,
                max_iters: None,
                deadline: None,
            },
            None,
        )
        .unwrap();
        assert_eq!(cert.iterations, 1);
        assert_eq!(cert.u.norm(), 0.0);
        assert_eq!(cert.eta, 0.0);
    }

    #[test]
    fn quadratic_iterates_descend_to_origin() {
        // psi_s = 1/2 ||x||^2, psi_n = indicator of a large box (mu tiny but positive)
        let cs = Separable {
            a: 1.0,
            c: Vector::zeros(3),
            b: 1e-3,
            bounds: (-5.0, 5.0),
            m_s: 1.0,
            mu: 1e-3,
        };
        let mut state = AcgState::new(Vector::from_column_slice(&[1.0, 0.0, 0.0]));
        let mut prev = cs.value(&state.x);
        for _ in 0..30 {
            state = acg_step(&state, &cs).unwrap();
            let v = cs.value(&state.x);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
        assert!(state.x.norm() < 1e-6);
    }

    #[test]
    fn minorant_stays_below_smooth_part() {
        let cs = Separable {
            a: 2.0,
            c: Vector::from_column_slice(&[0.3, -0.7]),
            b: 0.5,
            bounds: (-1.0, 1.0),
            m_s: 2.0,
            mu: 0.5,
        };
        let mut state = AcgState::new(Vector::from_column_slice(&[1.0, 1.0]));
        for _ in 0..10 {
            state = acg_step(&state, &cs).unwrap();
            for k in 0..20 {
                let z = Vector::from_column_slice(&[
                    -1.0 + 0.1 * k as f64,
                    1.0 - 0.07 * k as f64,
                ]);
                assert!(state.gamma(&z) <= cs.smooth_value(&z) + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_preconditions() {
        let mut cs = one_d();
        cs.mu = 0.0;
        let opts = AcgOptions {
            sigma_tilde: 0.5,
            max_iters: None,
            deadline: None,
        };
        assert!(matches!(
            acg_run(&cs, &Vector::zeros(1), &opts, None),
            Err(Error::Argument(_))
        ));
        let cs = one_d();
        assert!(matches!(
            acg_run(&cs, &Vector::from_element(1, 11.0), &opts, None),
            Err(Error::OutsideDomain)
        ));
    }

    #[test]
    fn understated_curvature_exhausts_the_budget() {
        // true curvature 50, declared 1: the growth of A outruns the function
        let mut cs = one_d();
        cs.a = 50.0;
        let res = acg_run(
            &cs,
            &Vector::from_element(1, 9.0),
            &AcgOptions {
                sigma_tilde: 0.01,
                max_iters: Some(40),
                deadline: None,
            },
            None,
        );
        assert!(res.is_err());
    }
}
