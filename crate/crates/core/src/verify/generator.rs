use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::problem::{ConvexComposite, LinearConstraint, ProblemInstance, SmoothObjective};
use crate::prox::ProxSet;
use crate::{Error, Matrix, Result, Vector};

/// Domain of a generated instance; bounds are applied to every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HSpec {
    Box { lower: f64, upper: f64 },
    Ball { radius: f64 },
    Simplex { radius: f64 },
    L1Box { lower: f64, upper: f64, gamma: f64 },
}

fn default_one() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

/// Recipe for a random instance with exactly known constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub l: usize,
    pub m_f: f64,
    pub l_f: f64,
    pub h: HSpec,
    /// `(sigma_min, sigma_max)` of `A`.
    pub singular_values: (f64, f64),
    #[serde(default)]
    pub seed: u64,
    /// Standard deviation of the entries of the linear term `q`.
    #[serde(default = "default_one")]
    pub q_scale: f64,
    /// Offset of the Slater point from the centre of `H`, as a fraction of
    /// the available room (0 puts it at the centre).
    #[serde(default)]
    pub slater_offset: f64,
    /// Attach a certified lower bound on `inf (f + h)`.
    #[serde(default = "default_true")]
    pub phi_lower: bool,
}

impl GeneratorSpec {
    /// The box `[-1, 1]^n` spec used by the end-to-end tests.
    pub fn box_default(n: usize, l: usize, seed: u64) -> Self {
        GeneratorSpec {
            n,
            l,
            m_f: 1.0,
            l_f: 10.0,
            h: HSpec::Box {
                lower: -1.0,
                upper: 1.0,
            },
            singular_values: (0.5, 2.0),
            seed,
            q_scale: 1.0,
            slater_offset: 0.0,
            phi_lower: true,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Argument(m));
        if self.n == 0 || self.l == 0 {
            return bad(format!("need n, l >= 1, got n = {}, l = {}", self.n, self.l));
        }
        if self.l > self.n {
            return bad(format!(
                "a full-rank {} x {} constraint matrix needs l <= n",
                self.l, self.n
            ));
        }
        if !(self.m_f > 0.0 && self.m_f <= self.l_f && self.l_f.is_finite()) {
            return bad(format!("need 0 < m_f <= L_f, got ({}, {})", self.m_f, self.l_f));
        }
        if self.n == 1 && self.m_f != self.l_f {
            return bad("n = 1 needs m_f = L_f".into());
        }
        let (lo, hi) = self.singular_values;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return bad(format!("need 0 < sigma_min <= sigma_max, got ({lo}, {hi})"));
        }
        if !(self.q_scale >= 0.0 && self.q_scale.is_finite()) {
            return bad(format!("q_scale must be >= 0, got {}", self.q_scale));
        }
        if !(0.0..1.0).contains(&self.slater_offset) {
            return bad(format!("slater_offset must lie in [0, 1), got {}", self.slater_offset));
        }
        let ok = match self.h {
            HSpec::Box { lower, upper } => lower < upper,
            HSpec::L1Box { lower, upper, gamma } => lower < upper && gamma >= 0.0,
            HSpec::Ball { radius } | HSpec::Simplex { radius } => radius > 0.0,
        };
        if !ok {
            return bad(format!("invalid domain {:?}", self.h));
        }
        Ok(())
    }
}

fn orthonormal_columns(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn uniform_between(rng: &mut ChaCha8Rng, count: usize, first: f64, last: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(count);
    if count >= 1 {
        v.push(first);
    }
    for _ in 2..count {
        v.push(rng.gen_range(last.min(first)..=last.max(first)));
    }
    if count >= 2 {
        v.push(last);
    }
    v
}

/// Builds an instance whose `m_f, L_f, ||A||, sigma_A+` are exact by construction.
pub fn generate(spec: &GeneratorSpec) -> Result<ProblemInstance> {
    spec.check()?;
    let n = spec.n;
    let l = spec.l;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let eig = if n == 1 {
        vec![-spec.m_f]
    } else {
        uniform_between(&mut rng, n, -spec.m_f, spec.l_f)
    };
    let u = orthonormal_columns(&mut rng, n, n);
    let q = &u * Matrix::from_diagonal(&Vector::from_vec(eig)) * u.transpose();
    let q = (&q + q.transpose()) * 0.5;
    let linear = Vector::from_fn(n, |_, _| spec.q_scale * rng.sample::<f64, _>(StandardNormal));
    let smooth = SmoothObjective::quadratic(q, linear, spec.m_f, spec.l_f)?;

    let (s_min, s_max) = spec.singular_values;
    let s = uniform_between(&mut rng, l, s_max, s_min);
    let left = orthonormal_columns(&mut rng, l, l);
    let right = orthonormal_columns(&mut rng, n, l);
    let a = left * Matrix::from_diagonal(&Vector::from_vec(s)) * right.transpose();

    let dir = Vector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
    let off = spec.slater_offset;
    let (set, l_h, z_bar) = match spec.h {
        HSpec::Box { lower, upper } | HSpec::L1Box { lower, upper, .. } => {
            let mid = 0.5 * (lower + upper);
            let half = 0.5 * (upper - lower);
            let z = dir.map(|d| mid + off * half * d);
            let lo = Vector::from_element(n, lower);
            let hi = Vector::from_element(n, upper);
            match spec.h {
                HSpec::L1Box { gamma, .. } => (
                    ProxSet::L1Box {
                        lower: lo,
                        upper: hi,
                        gamma,
                    },
                    gamma * (n as f64).sqrt(),
                    z,
                ),
                _ => (ProxSet::Box { lower: lo, upper: hi }, 0.0, z),
            }
        }
        HSpec::Ball { radius } => {
            let norm = dir.norm().max(f64::MIN_POSITIVE);
            let z = &dir * (off * radius / norm);
            (
                ProxSet::Ball {
                    center: Vector::zeros(n),
                    radius,
                },
                0.0,
                z,
            )
        }
        HSpec::Simplex { radius } => {
            // incentre of {z >= 0, sum z <= r}: equal distance t to every facet
            let nf = n as f64;
            let t = radius / (nf + nf.sqrt());
            // move inside the inscribed ball
            let norm = dir.norm().max(f64::MIN_POSITIVE);
            let z = Vector::from_element(n, t) + &dir * (off * t / norm);
            (ProxSet::Simplex { radius }, 0.0, z)
        }
    };
    let b = &a * &z_bar;
    let constraint = LinearConstraint::new(a, b)?;
    let composite = ConvexComposite::new(set, l_h)?;

    let phi_lower = if spec.phi_lower {
        let r = composite.set.norm_bound();
        Some(-0.5 * spec.m_f * r * r - smooth.linear.norm() * r + composite.set.min_value())
    } else {
        None
    };
    ProblemInstance::new(smooth, composite, constraint, z_bar, phi_lower)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate;

    #[test]
    fn scalar_spectrum_admissible() {
        let mut spec = GeneratorSpec::box_default(2, 1, 0);
        spec.m_f = 1.0;
        spec.l_f = 1.0;
        let inst = generate(&spec).unwrap();
        let eig = inst.smooth.hessian.clone().symmetric_eigen().eigenvalues;
        assert!((eig.min() + 1.0).abs() < 1e-12);
        assert!((eig.abs().max() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn declared_constants_are_exact() {
        let spec = GeneratorSpec::box_default(50, 10, 3);
        let inst = generate(&spec).unwrap();
        assert!((inst.constraint.op_norm - 2.0).abs() < 1e-10);
        assert!((inst.constraint.sigma_plus - 0.5).abs() < 1e-10);
        let eig = inst.smooth.hessian.clone().symmetric_eigen().eigenvalues;
        assert!((eig.min() + 1.0).abs() < 1e-10);
        assert!((eig.abs().max() - 10.0).abs() < 1e-10);
        assert_eq!(inst.slater_distance(), 1.0);
        assert!((inst.diameter() - 2.0 * 50f64.sqrt()).abs() < 1e-12);
        assert!(inst.feasibility(&inst.slater_point) < 1e-12);
    }

    #[test]
    fn generated_instances_validate() {
        for (i, h) in [
            HSpec::Box { lower: -1.0, upper: 1.0 },
            HSpec::Ball { radius: 2.0 },
            HSpec::Simplex { radius: 3.0 },
            HSpec::L1Box {
                lower: -1.0,
                upper: 2.0,
                gamma: 0.3,
            },
        ]
        .into_iter()
        .enumerate()
        {
            let mut spec = GeneratorSpec::box_default(6, 3, i as u64);
            spec.h = h;
            spec.slater_offset = 0.5;
            let inst = generate(&spec).unwrap();
            let rep = validate(&inst, 200, 1).unwrap();
            assert!(rep.all_passed(), "{:?}", rep.checks);
            assert!(inst.slater_distance() > 0.0);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = GeneratorSpec::box_default(8, 3, 42);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.smooth.hessian, b.smooth.hessian);
        assert_eq!(a.constraint.a, b.constraint.a);
    }

    #[test]
    fn rejects_wide_constraint() {
        let spec = GeneratorSpec::box_default(3, 4, 0);
        assert!(matches!(generate(&spec), Err(Error::Argument(_))));
    }

    #[test]
    fn phi_lower_bounds_sampled_values() {
        let inst = generate(&GeneratorSpec::box_default(10, 2, 5)).unwrap();
        let lo = inst.phi_lower.unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let z = inst.composite.set.sample_boundary(&mut rng, 10);
            assert!(inst.objective(&z) >= lo);
        }
    }
}
