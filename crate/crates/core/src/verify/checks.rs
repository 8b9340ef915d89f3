use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::problem::ProblemInstance;
use crate::prox::ProxSet;
use crate::Vector;

pub const DEFAULT_INTERIOR_SAMPLES: usize = 200;
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 50;

/// Largest `||g(z) - fd(z)||_inf / (1 + ||fd(z)||_inf)` over `points`, where
/// `fd` uses central differences with step `1e-6 (1 + ||z||)`.
pub fn finite_diff_grad_check<F, G>(value: F, grad: G, points: &[Vector]) -> f64
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    let mut worst = 0.0f64;
    for z in points {
        let step = 1e-6 * (1.0 + z.norm());
        let g = grad(z);
        let mut zp = z.clone();
        let fd = Vector::from_fn(z.len(), |i, _| {
            let orig = zp[i];
            zp[i] = orig + step;
            let up = value(&zp);
            zp[i] = orig - step;
            let down = value(&zp);
            zp[i] = orig;
            (up - down) / (2.0 * step)
        });
        worst = worst.max((&g - &fd).amax() / (1.0 + fd.amax()));
    }
    worst
}

/// Result of a sampled epsilon-subdifferential test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdiffCheck {
    pub passed: bool,
    /// Largest amount by which `h(z') >= h(z) + <u, z' - z> - eps` failed (0 if never).
    pub worst_violation: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Tests `u in d_eps h(z)` on `interior` uniform samples, `boundary`
/// boundary-biased samples and the exact maximizer of `<u, .> - h`.
pub fn eps_subdiff_check(
    h: &ProxSet,
    z: &Vector,
    u: &Vector,
    eps: f64,
    interior: usize,
    boundary: usize,
    seed: u64,
) -> SubdiffCheck {
    let n = z.len();
    let hz = h.value(z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<Vector> = Vec::with_capacity(interior + boundary + 1);
    candidates.extend((0..interior).map(|_| h.sample(&mut rng, n)));
    candidates.extend((0..boundary).map(|_| h.sample_boundary(&mut rng, n)));
    candidates.push(h.support_point(u));

    let mut worst = 0.0f64;
    let mut passed = true;
    for zp in &candidates {
        let pair = u.dot(&(zp - z));
        let hp = h.value(zp);
        let margin = hp - hz - pair + eps;
        let scale = 1.0 + hz.abs() + hp.abs() + pair.abs() + eps;
        if margin < 0.0 {
            worst = worst.max(-margin);
            if margin < -1e-9 * scale {
                passed = false;
            }
        }
    }
    SubdiffCheck {
        passed,
        worst_violation: worst,
        samples: candidates.len(),
        seed,
    }
}

/// `||z - prox(h, t, z - t (grad f(z) + A'p - w))||`, zero iff
/// `w in grad f(z) + dh(z) + A'p`.
pub fn inclusion_residual(problem: &ProblemInstance, z: &Vector, w: &Vector, p: &Vector, t: f64) -> f64 {
    let g = problem.smooth.gradient(z) + problem.constraint.adjoint(p) - w;
    match problem.composite.prox(t, &(z - g * t)) {
        Ok(x) => (z - x).norm(),
        Err(_) => f64::INFINITY,
    }
}
