//! Inexact proximal augmented Lagrangian solver for linearly constrained,
//! smooth nonconvex composite problems
//!
//! ```text
//! minimize f(z) + h(z)   subject to   A z = b
//! ```
//!
//! where `f` is a weakly convex quadratic, `h` is a closed convex function
//! with a bounded domain (box, ball, simplex or box plus `l1` term) and `A` is
//! a dense matrix. Each outer iteration solves a proximal augmented
//! Lagrangian subproblem with an accelerated composite gradient (ACG) method,
//! refines the inexact solution into a certified stationarity triple and
//! performs a full multiplier update. The penalty parameter is doubled
//! whenever a cycle detects that it is too small.
//!
//! Every inequality the convergence analysis relies on is recorded in the
//! iteration history and can be re-checked with [`verify::monitor`].

pub mod acg;
pub mod auglag;
pub mod cycle;
pub mod driver;
mod error;
pub mod io;
pub mod problem;
pub mod prox;
pub mod verify;

pub use error::{Error, Result};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;

/// `max{log t, 1}`.
pub fn log1_plus(t: f64) -> f64 {
    if t > 0.0 {
        t.ln().max(1.0)
    } else {
        1.0
    }
}
