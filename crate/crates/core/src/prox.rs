//! Closed-form proximal operators for the supported family of `h`.
//!
//! Every member is the indicator of a bounded convex set `H`, optionally plus
//! `gamma * ||z||_1` (the `l1_box` kind). Proximal maps are exact up to
//! roundoff, which the ACG subproblem relies on.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::{Error, Result, Vector};

/// Relative slack used when deciding membership in `H`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// The set `H = dom h` together with the (optional) `l1` weight.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxSet {
    /// `h = indicator of {lower <= z <= upper}`.
    Box { lower: Vector, upper: Vector },
    /// `h = indicator of {||z - center|| <= radius}`.
    Ball { center: Vector, radius: f64 },
    /// `h = indicator of {z >= 0, sum(z) <= radius}` (full-dimensional simplex).
    Simplex { radius: f64 },
    /// `h = gamma * ||z||_1 + indicator of {lower <= z <= upper}`.
    L1Box {
        lower: Vector,
        upper: Vector,
        gamma: f64,
    },
}

impl ProxSet {
    /// Checks the structural invariants of the set.
    pub fn check(&self) -> Result<()> {
        match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                if lower.len() != upper.len() {
                    return Err(Error::Dimension(format!(
                        "box bounds have lengths {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Assumption("box bounds must be finite".into()));
                }
                if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
                    return Err(Error::Assumption("box needs lower <= upper".into()));
                }
                if let ProxSet::L1Box { gamma, .. } = self {
                    if !(*gamma >= 0.0 && gamma.is_finite()) {
                        return Err(Error::Assumption("l1 weight must be >= 0".into()));
                    }
                }
            }
            ProxSet::Ball { radius, center } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Assumption("ball radius must be > 0".into()));
                }
                if center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Assumption("ball center must be finite".into()));
                }
            }
            ProxSet::Simplex { radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::Assumption("simplex radius must be > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Dimension fixed by the set, if any (the simplex adapts to its input).
    pub fn dim(&self) -> Option<usize> {
        match self {
            ProxSet::Box { lower, .. } | ProxSet::L1Box { lower, .. } => Some(lower.len()),
            ProxSet::Ball { center, .. } => Some(center.len()),
            ProxSet::Simplex { .. } => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ProxSet::Box { .. } => "box",
            ProxSet::Ball { .. } => "ball",
            ProxSet::Simplex { .. } => "simplex",
            ProxSet::L1Box { .. } => "l1_box",
        }
    }

    fn scale(&self, z: &Vector) -> f64 {
        let set = match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                lower.amax().max(upper.amax())
            }
            ProxSet::Ball { center, radius } => center.amax() + radius,
            ProxSet::Simplex { radius } => *radius,
        };
        1.0 + set + z.amax()
    }

    /// Membership test with a small relative slack for roundoff.
    pub fn contains(&self, z: &Vector) -> bool {
        let tol = MEMBERSHIP_TOL * self.scale(z);
        match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                z.len() == lower.len()
                    && z.iter()
                        .zip(lower.iter().zip(upper.iter()))
                        .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol)
            }
            ProxSet::Ball { center, radius } => {
                z.len() == center.len() && (z - center).norm() <= radius + tol
            }
            ProxSet::Simplex { radius } => {
                z.iter().all(|v| *v >= -tol) && z.sum() <= radius + tol * (z.len() as f64)
            }
        }
    }

    /// `h(z)`, `+inf` outside `H`.
    pub fn value(&self, z: &Vector) -> f64 {
        if !self.contains(z) {
            return f64::INFINITY;
        }
        match self {
            ProxSet::L1Box { gamma, .. } => gamma * z.lp_norm(1),
            _ => 0.0,
        }
    }

    /// Natural Lipschitz constant of `h` on `H` (Euclidean norm).
    pub fn lipschitz(&self, n: usize) -> f64 {
        match self {
            ProxSet::L1Box { gamma, .. } => gamma * (n as f64).sqrt(),
            _ => 0.0,
        }
    }

    /// Diameter of `H`.
    pub fn diameter(&self, n: usize) -> f64 {
        match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                (upper - lower).norm()
            }
            ProxSet::Ball { radius, .. } => 2.0 * radius,
            ProxSet::Simplex { radius } => {
                if n >= 2 {
                    radius * std::f64::consts::SQRT_2
                } else {
                    *radius
                }
            }
        }
    }

    /// Distance from `z` to the boundary of `H`; zero if `z` is not interior.
    pub fn boundary_distance(&self, z: &Vector) -> f64 {
        let d = match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                if z.len() != lower.len() {
                    return 0.0;
                }
                z.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| (v - l).min(u - v))
                    .fold(f64::INFINITY, f64::min)
            }
            ProxSet::Ball { center, radius } => {
                if z.len() != center.len() {
                    return 0.0;
                }
                radius - (z - center).norm()
            }
            ProxSet::Simplex { radius } => {
                let n = z.len() as f64;
                let face = (radius - z.sum()) / n.sqrt();
                z.iter().copied().fold(face, f64::min)
            }
        };
        d.max(0.0)
    }

    /// `sup_{z in H} ||z||`.
    pub fn norm_bound(&self) -> f64 {
        match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => lower
                .iter()
                .zip(upper.iter())
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            ProxSet::Ball { center, radius } => center.norm() + radius,
            ProxSet::Simplex { radius } => *radius,
        }
    }

    /// `min_{z in H} h(z)`.
    pub fn min_value(&self) -> f64 {
        match self {
            ProxSet::L1Box {
                lower,
                upper,
                gamma,
            } => {
                gamma
                    * lower
                        .iter()
                        .zip(upper.iter())
                        .map(|(l, u)| {
                            if *l > 0.0 {
                                *l
                            } else if *u < 0.0 {
                                -u
                            } else {
                                0.0
                            }
                        })
                        .sum::<f64>()
            }
            _ => 0.0,
        }
    }

    /// A maximizer of `<dir, z> - h(z)` over `H`.
    ///
    /// Used to make epsilon-subdifferential sampling exact: the worst case of
    /// `h(z') - h(z) - <u, z' - z>` is attained here.
    pub fn support_point(&self, dir: &Vector) -> Vector {
        match self {
            ProxSet::Box { lower, upper } => Vector::from_iterator(
                dir.len(),
                dir.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(d, (l, u))| if *d >= 0.0 { *u } else { *l }),
            ),
            ProxSet::L1Box {
                lower,
                upper,
                gamma,
            } => Vector::from_iterator(
                dir.len(),
                dir.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(d, (l, u))| {
                        // piecewise linear in one variable: candidates l, u and 0
                        let score = |v: f64| d * v - gamma * v.abs();
                        let mut best = *l;
                        if score(*u) > score(best) {
                            best = *u;
                        }
                        if *l <= 0.0 && *u >= 0.0 && score(0.0) > score(best) {
                            best = 0.0;
                        }
                        best
                    }),
            ),
            ProxSet::Ball { center, radius } => {
                let norm = dir.norm();
                if norm == 0.0 {
                    center.clone()
                } else {
                    center + dir * (radius / norm)
                }
            }
            ProxSet::Simplex { radius } => {
                let (i, m) = dir.argmax();
                let mut v = Vector::zeros(dir.len());
                if m > 0.0 {
                    v[i] = *radius;
                }
                v
            }
        }
    }

    /// Uniform sample from `H`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vector {
        match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                Vector::from_iterator(
                    n,
                    lower
                        .iter()
                        .zip(upper.iter())
                        .map(|(l, u)| l + (u - l) * rng.gen::<f64>()),
                )
            }
            ProxSet::Ball { center, radius } => {
                let g = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let norm = g.norm().max(f64::MIN_POSITIVE);
                let r = radius * rng.gen::<f64>().powf(1.0 / n as f64);
                center + g * (r / norm)
            }
            ProxSet::Simplex { radius } => {
                let e: Vec<f64> = (0..=n).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                Vector::from_iterator(n, e[..n].iter().map(|v| radius * v / total))
            }
        }
    }

    /// Sample biased towards the boundary of `H`.
    pub fn sample_boundary<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vector {
        let dir = Vector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        match self {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                // uniform point with a random subset of coordinates pushed to a face
                let mut z = self.sample(rng, n);
                for i in 0..n {
                    if rng.gen::<f64>() < 0.5 {
                        z[i] = if dir[i] >= 0.0 { upper[i] } else { lower[i] };
                    }
                }
                z
            }
            ProxSet::Ball { center, radius } => {
                let norm = dir.norm().max(f64::MIN_POSITIVE);
                center + dir * (radius / norm)
            }
            ProxSet::Simplex { .. } => {
                let x = self.sample(rng, n) + dir * self.diameter(n);
                project(self, &x)
            }
        }
    }

    /// `argmin_u { h(u) + ||u - x||^2 / (2t) }`.
    pub fn prox(&self, t: f64, x: &Vector) -> Result<Vector> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Argument(format!("prox step must be positive, got {t}")));
        }
        if let Some(n) = self.dim() {
            if x.len() != n {
                return Err(Error::Dimension(format!(
                    "prox input has length {}, set has dimension {n}",
                    x.len()
                )));
            }
        }
        Ok(match self {
            ProxSet::L1Box {
                lower,
                upper,
                gamma,
            } => {
                let thr = t * gamma;
                Vector::from_iterator(
                    x.len(),
                    x.iter().zip(lower.iter().zip(upper.iter())).map(|(v, (l, u))| {
                        let s = v.signum() * (v.abs() - thr).max(0.0);
                        s.clamp(*l, *u)
                    }),
                )
            }
            _ => project(self, x),
        })
    }
}

/// Euclidean projection onto `H` (the prox of the indicator part).
fn project(set: &ProxSet, x: &Vector) -> Vector {
    match set {
        ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
            Vector::from_iterator(
                x.len(),
                x.iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .map(|(v, (l, u))| v.clamp(*l, *u)),
            )
        }
        ProxSet::Ball { center, radius } => {
            let d = x - center;
            let norm = d.norm();
            if norm <= *radius {
                x.clone()
            } else {
                center + d * (radius / norm)
            }
        }
        ProxSet::Simplex { radius } => project_simplex(x, *radius),
    }
}

/// Projection onto `{z >= 0, sum(z) <= r}` by sort-and-threshold.
fn project_simplex(x: &Vector, r: f64) -> Vector {
    let pos = x.map(|v| v.max(0.0));
    if pos.sum() <= r {
        return pos;
    }
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, v) in sorted.iter().enumerate() {
        cumsum += v;
        let candidate = (cumsum - r) / (i + 1) as f64;
        // ties keep the larger support
        if v - candidate >= 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    x.map(|v| (v - theta).max(0.0))
}

/// `argmin_u { <a, u> + h(u) + (alpha/2) ||u - center||^2 }`.
pub fn shifted_prox(h: &ProxSet, a: &Vector, alpha: f64, center: &Vector) -> Result<Vector> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::Argument(format!(
            "shifted prox needs alpha > 0, got {alpha}"
        )));
    }
    h.prox(1.0 / alpha, &(center - a / alpha))
}

/// `h(u) + ||u - x||^2 / (2t)`.
pub fn prox_objective(h: &ProxSet, t: f64, x: &Vector, u: &Vector) -> f64 {
    h.value(u) + (u - x).norm_squared() / (2.0 * t)
}

/// Result of [`brute_force_prox`].
#[derive(Debug, Clone)]
pub struct BruteForceProx {
    pub point: Vector,
    pub objective: f64,
}

/// Projected subgradient descent on `u -> h(u) + ||u - x||^2 / (2t)` with
/// weighted iterate averaging. For `l1_box` the objective is separable and
/// each coordinate is also minimized by golden-section search; the better of
/// the two answers is returned.
///
/// Independent of [`ProxSet::prox`]: the projection used here is computed by
/// its own routines (bisection for the simplex) and the `l1` term is handled
/// by subgradients and direct search, not soft-thresholding.
pub fn brute_force_prox(h: &ProxSet, t: f64, x: &Vector, iterations: usize) -> BruteForceProx {
    let n = x.len();
    let proj = |v: &Vector| -> Vector {
        match h {
            ProxSet::Box { lower, upper } | ProxSet::L1Box { lower, upper, .. } => {
                Vector::from_fn(n, |i, _| v[i].max(lower[i]).min(upper[i]))
            }
            ProxSet::Ball { center, radius } => {
                let d = v - center;
                let s = (radius / d.norm()).min(1.0);
                if s.is_finite() {
                    center + d * s
                } else {
                    center.clone()
                }
            }
            ProxSet::Simplex { radius } => bisect_simplex(v, *radius),
        }
    };
    let gamma = match h {
        ProxSet::L1Box { gamma, .. } => *gamma,
        _ => 0.0,
    };
    let objective = |u: &Vector| gamma * u.lp_norm(1) + (u - x).norm_squared() / (2.0 * t);

    let mut u = proj(x);
    let mut avg = u.clone();
    let mut weight = 0.0;
    let mut best = u.clone();
    let mut best_obj = objective(&u);
    for k in 1..=iterations.max(1) {
        let g = (&u - x) / t + u.map(|v| gamma * if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 });
        let step = 2.0 * t / (k as f64 + 1.0);
        u = proj(&(&u - g * step));
        let wk = k as f64;
        weight += wk;
        avg += (&u - &avg) * (wk / weight);
        let obj = objective(&u);
        if obj < best_obj {
            best_obj = obj;
            best = u.clone();
        }
    }
    let avg_obj = objective(&avg);
    if avg_obj < best_obj {
        best_obj = avg_obj;
        best = avg;
    }
    if let ProxSet::L1Box { lower, upper, .. } = h {
        let u = Vector::from_fn(n, |i, _| {
            golden_min(|v| gamma * v.abs() + (v - x[i]).powi(2) / (2.0 * t), lower[i], upper[i])
        });
        let obj = objective(&u);
        if obj < best_obj {
            best_obj = obj;
            best = u;
        }
    }
    BruteForceProx {
        point: best,
        objective: best_obj,
    }
}

/// Minimizer of a convex function on `[a, b]` by golden-section search.
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    // endpoints and the kink at 0 can beat the bracket midpoint
    let mut best = 0.5 * (a + b);
    for cand in [a, b, 0.0] {
        if cand >= a && cand <= b && f(cand) < f(best) {
            best = cand;
        }
    }
    best
}

/// Projection onto `{z >= 0, sum(z) <= r}` by bisection on the threshold.
fn bisect_simplex(v: &Vector, r: f64) -> Vector {
    let excess = |theta: f64| v.iter().map(|x| (x - theta).max(0.0)).sum::<f64>() - r;
    if excess(0.0) <= 0.0 {
        return v.map(|x| x.max(0.0));
    }
    let (mut lo, mut hi) = (0.0, v.max());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    v.map(|x| (x - hi).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(data: &[f64]) -> Vector {
        Vector::from_column_slice(data)
    }

    fn unit_box(n: usize) -> ProxSet {
        ProxSet::Box {
            lower: Vector::from_element(n, -1.0),
            upper: Vector::from_element(n, 1.0),
        }
    }

    #[test]
    fn box_interior_point_is_fixed() {
        let h = unit_box(4);
        for t in [0.1, 1.0, 10.0] {
            assert_eq!(h.prox(t, &Vector::zeros(4)).unwrap(), Vector::zeros(4));
        }
    }

    #[test]
    fn box_clamps() {
        let h = unit_box(1);
        assert_eq!(h.prox(1.0, &v(&[3.0])).unwrap(), v(&[1.0]));
    }

    #[test]
    fn simplex_two_d() {
        let h = ProxSet::Simplex { radius: 1.0 };
        let p = h.prox(1.0, &v(&[2.0, 0.0])).unwrap();
        assert!((p - v(&[1.0, 0.0])).norm() < 1e-15);
        // bisection route agrees
        assert!((bisect_simplex(&v(&[2.0, 0.0]), 1.0) - v(&[1.0, 0.0])).norm() < 1e-12);
    }

    #[test]
    fn simplex_inside_is_fixed() {
        let h = ProxSet::Simplex { radius: 1.0 };
        let x = v(&[0.2, 0.3]);
        assert_eq!(h.prox(0.5, &x).unwrap(), x);
        // negative coordinates only get clipped when the sum is small
        assert_eq!(h.prox(0.5, &v(&[-0.2, 0.3])).unwrap(), v(&[0.0, 0.3]));
    }

    #[test]
    fn ball_radial_projection() {
        let h = ProxSet::Ball {
            center: Vector::zeros(2),
            radius: 1.0,
        };
        let p = h.prox(1.0, &v(&[3.0, 4.0])).unwrap();
        assert!((p - v(&[0.6, 0.8])).norm() < 1e-15);
        let b = brute_force_prox(&h, 1.0, &v(&[3.0, 4.0]), 1000);
        assert!((b.point - v(&[0.6, 0.8])).norm() < 1e-12);
    }

    #[test]
    fn l1_box_soft_threshold_then_clamp() {
        let h = ProxSet::L1Box {
            lower: Vector::from_element(3, -1.0),
            upper: Vector::from_element(3, 1.0),
            gamma: 0.5,
        };
        let p = h.prox(1.0, &v(&[0.3, -2.0, 1.2])).unwrap();
        assert!((p - v(&[0.0, -1.0, 0.7])).norm() < 1e-15);
    }

    #[test]
    fn nonpositive_step_is_rejected() {
        let h = unit_box(2);
        assert!(matches!(h.prox(0.0, &Vector::zeros(2)), Err(Error::Argument(_))));
        assert!(matches!(h.prox(-1.0, &Vector::zeros(2)), Err(Error::Argument(_))));
        assert!(shifted_prox(&h, &Vector::zeros(2), 0.0, &Vector::zeros(2)).is_err());
    }

    #[test]
    fn shifted_prox_reduction() {
        let h = ProxSet::Box {
            lower: v(&[-10.0]),
            upper: v(&[10.0]),
        };
        let p = shifted_prox(&h, &v(&[1.0]), 2.0, &v(&[0.0])).unwrap();
        assert!((p[0] + 0.5).abs() < 1e-15);

        let h = ProxSet::Box {
            lower: v(&[0.0]),
            upper: v(&[10.0]),
        };
        let p = shifted_prox(&h, &v(&[1.0]), 2.0, &v(&[0.0])).unwrap();
        assert_eq!(p[0], 0.0);

        let h = unit_box(3);
        let c = v(&[0.5, 2.0, -3.0]);
        assert_eq!(
            shifted_prox(&h, &Vector::zeros(3), 4.0, &c).unwrap(),
            h.prox(0.25, &c).unwrap()
        );
    }

    #[test]
    fn brute_force_fixed_point_for_members() {
        let h = unit_box(3);
        let x = v(&[0.1, -0.4, 0.9]);
        let b = brute_force_prox(&h, 0.7, &x, 50);
        assert!((b.point - x).norm() < 1e-15);
    }

    #[test]
    fn brute_force_l1_box_matches_soft_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let lower = Vector::from_fn(5, |_, _| rng.gen_range(-2.0..0.0));
            let upper = Vector::from_fn(5, |i, _| lower[i] + rng.gen_range(0.1..3.0));
            let h = ProxSet::L1Box {
                lower,
                upper,
                gamma: rng.gen_range(0.0..2.0),
            };
            let t = rng.gen_range(0.05..5.0);
            let x = Vector::from_fn(5, |_, _| rng.gen_range(-4.0..4.0));
            let lib = h.prox(t, &x).unwrap();
            let obj = h.value(&lib) + (&lib - &x).norm_squared() / (2.0 * t);
            let b = brute_force_prox(&h, t, &x, 100);
            assert!((obj - b.objective).abs() < 1e-9, "{obj} vs {}", b.objective);
        }
    }

    #[test]
    fn l1_box_subgradient_splits_into_lipschitz_and_normal_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 6;
        let gamma = 0.8;
        let h = ProxSet::L1Box {
            lower: Vector::from_element(n, -1.0),
            upper: Vector::from_element(n, 0.5),
            gamma,
        };
        for _ in 0..200 {
            let x = Vector::from_fn(n, |_, _| 4.0 * rng.gen::<f64>() - 2.0);
            let t = 0.1 + rng.gen::<f64>();
            let u = h.prox(t, &x).unwrap();
            let s = (&x - &u) / t;
            let bounded = s.map(|v| v.clamp(-gamma, gamma));
            let normal = &s - &bounded;
            assert!(bounded.norm() <= h.lipschitz(n) + 1e-12);
            // the remainder must lie in the normal cone of the box at u
            let (lower, upper) = (-1.0, 0.5);
            for i in 0..n {
                if normal[i] > 1e-12 {
                    assert!((u[i] - upper).abs() < 1e-12);
                } else if normal[i] < -1e-12 {
                    assert!((u[i] - lower).abs() < 1e-12);
                }
            }
            // and the sum is an exact subgradient: check against the support point
            let z_star = h.support_point(&s);
            let gap = (s.dot(&z_star) - h.value(&z_star)) - (s.dot(&u) - h.value(&u));
            assert!(gap <= 1e-12, "gap {gap}");
        }
    }

    #[test]
    fn geometry_of_unit_box() {
        let n = 9;
        let h = unit_box(n);
        assert!((h.diameter(n) - 2.0 * 3.0).abs() < 1e-15);
        assert_eq!(h.boundary_distance(&Vector::zeros(n)), 1.0);
        assert_eq!(h.boundary_distance(&Vector::from_element(n, 2.0)), 0.0);
    }

    #[test]
    fn samples_stay_in_the_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 5;
        let sets = [
            unit_box(n),
            ProxSet::Ball {
                center: Vector::from_element(n, 1.0),
                radius: 2.0,
            },
            ProxSet::Simplex { radius: 3.0 },
            ProxSet::L1Box {
                lower: Vector::from_element(n, -2.0),
                upper: Vector::from_element(n, 1.0),
                gamma: 1.0,
            },
        ];
        for h in &sets {
            for _ in 0..200 {
                assert!(h.contains(&h.sample(&mut rng, n)));
                assert!(h.contains(&h.sample_boundary(&mut rng, n)));
            }
        }
    }
}
