//! Scalar Newton solve for one grid point of the implicit scheme.
//!
//! Multiplying the scheme by `Δt²` gives, for `x = v_j^{n+1}`, `a = v_j^{n-1}`, `c = v_j^n`,
//!
//! ```text
//! F(x) = x - 2c + a - D + ½Δt²(x + a) - s (x³ + x²a + xa² + a³)
//! ```
//!
//! with `D = (Δt/Δr)² (c_{j+1} - 2c + c_{j-1})` and `s = Δt² / (4 r_j²)`.

use std::fmt;

/// Iterates beyond this magnitude are far-away roots, not continuations of the field.
const RUNAWAY: f64 = 1e10;
/// Relative floor on `|F'|`, scaled by `1 + |linear coefficient|`.
const DEGENERACY_FLOOR: f64 = 1e-10;

pub(crate) struct Coefficients {
    /// `1 + ½Δt²`
    pub linear: f64,
    /// `½Δt²`
    pub half_dt2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonFailure {
    MaxIterations,
    Runaway,
    NonFinite,
}

impl fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NewtonFailure::MaxIterations => "reached the iteration cap",
            NewtonFailure::Runaway => "iterate ran away",
            NewtonFailure::NonFinite => "produced a non-finite iterate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NewtonOutcome {
    /// `iterations` counts residual evaluations, so an exact starting guess takes one.
    Converged { root: f64, iterations: usize },
    Degenerate,
    Failed(NewtonFailure),
}

#[inline]
pub(crate) fn solve(k: &Coefficients, c: f64, a: f64, curv: f64, s: f64, tol: f64, max_iter: usize) -> NewtonOutcome {
    let a2 = a * a;
    let constant = a - 2.0 * c - curv + k.half_dt2 * a - s * a2 * a;
    // every later occurrence of x replaced by c
    let mut x = 2.0 * c - a + curv - k.half_dt2 * (c + a) + s * (c * c * c + c * c * a + c * a2 + a2 * a);
    let floor = DEGENERACY_FLOOR * (1.0 + k.linear.abs());
    for it in 1..=max_iter {
        let f = k.linear * x - s * x * (x * x + x * a + a2) + constant;
        if !f.is_finite() {
            return NewtonOutcome::Failed(NewtonFailure::NonFinite);
        }
        if f.abs() < tol {
            return NewtonOutcome::Converged { root: x, iterations: it };
        }
        let df = k.linear - s * (3.0 * x * x + 2.0 * x * a + a2);
        if df.abs() < floor {
            return NewtonOutcome::Degenerate;
        }
        let delta = f / df;
        x -= delta;
        if x.abs() > RUNAWAY {
            return NewtonOutcome::Failed(NewtonFailure::Runaway);
        }
        // the update is below rounding of x: the residual cannot shrink further
        if delta.abs() <= 4.0 * f64::EPSILON * x.abs() {
            return NewtonOutcome::Converged { root: x, iterations: it + 1 };
        }
    }
    NewtonOutcome::Failed(NewtonFailure::MaxIterations)
}

/// One Newton and one chord update from the explicit guess. Returns the iterate and
/// whether it can be accepted without running [`solve`]: derivative above the
/// degeneracy floor and the final residual below `tol`. Branch-free so that the
/// per-point loop vectorises.
#[inline(always)]
pub(crate) fn fast_solve(k: &Coefficients, c: f64, a: f64, curv: f64, s: f64, tol: f64) -> (f64, bool) {
    let a2 = a * a;
    let constant = a - 2.0 * c - curv + k.half_dt2 * a - s * a2 * a;
    let x0 = 2.0 * c - a + curv - k.half_dt2 * (c + a) + s * (c * c * c + c * c * a + c * a2 + a2 * a);
    let floor = DEGENERACY_FLOOR * (1.0 + k.linear.abs());
    let f = |x: f64| k.linear * x - s * x * (x * x + x * a + a2) + constant;
    let df = |x: f64| k.linear - s * (3.0 * x * x + 2.0 * x * a + a2);
    let d0 = df(x0);
    let inv = 1.0 / d0;
    let x1 = x0 - f(x0) * inv;
    // chord update: F' barely moves over one Newton correction
    let x2 = x1 - f(x1) * inv;
    let f2 = f(x2);
    let ok = (d0.abs() >= floor) & (f2.abs() < tol) & (x2.abs() <= RUNAWAY);
    (x2, ok)
}
