//! Fixed-step RK4 shooting for `Q'' + (2/r) Q' = Q - Q³`, `Q(0) = b`, `Q'(0) = 0`.

use crate::RadialGrid;

/// First qualitative event met while integrating outward from the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotOutcome {
    /// `Q` reached zero at `radius` (too large a central value). `diverged` marks a
    /// non-finite intermediate value, reported the same way.
    CrossesZero { radius: f64, diverged: bool },
    /// `Q'` reached zero while `Q > 0` (too small a central value).
    TurnsUp { radius: f64 },
    /// Neither event before the truncation radius.
    Profile,
}

impl ShotOutcome {
    pub fn overshoots(&self) -> bool {
        matches!(self, ShotOutcome::CrossesZero { .. })
    }
}

/// Samples of one shot on the whole grid together with its first event.
pub(crate) struct Shot {
    pub q: Vec<f64>,
    pub dq: Vec<f64>,
    pub outcome: ShotOutcome,
}

#[inline]
fn rhs(r: f64, q: f64, p: f64) -> (f64, f64) {
    (p, q - q * q * q - 2.0 * p / r)
}

/// Integrates the whole grid when `full` is set, otherwise stops at the first event.
pub(crate) fn integrate(b: f64, grid: &RadialGrid, full: bool) -> Shot {
    let n = grid.n_points();
    let h = grid.dr();
    let mut q = Vec::with_capacity(n);
    let mut dq = Vec::with_capacity(n);
    q.push(b);
    dq.push(0.0);

    // Series start at r = h avoids the 2/r singularity.
    let c = b - b * b * b;
    let (mut qj, mut pj) = (b + c * h * h / 6.0, c * h / 3.0);
    q.push(qj);
    dq.push(pj);

    let mut outcome = classify_point(qj, pj, h);
    for j in 1..n - 1 {
        if outcome.is_some() && !full {
            break;
        }
        let r = grid.r(j);
        let (k1q, k1p) = rhs(r, qj, pj);
        let (k2q, k2p) = rhs(r + 0.5 * h, qj + 0.5 * h * k1q, pj + 0.5 * h * k1p);
        let (k3q, k3p) = rhs(r + 0.5 * h, qj + 0.5 * h * k2q, pj + 0.5 * h * k2p);
        let (k4q, k4p) = rhs(r + h, qj + h * k3q, pj + h * k3p);
        qj += h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        pj += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        q.push(qj);
        dq.push(pj);
        if outcome.is_none() {
            outcome = classify_point(qj, pj, r + h);
        }
        if !(qj.is_finite() && pj.is_finite()) {
            // nothing sensible left to integrate
            q.resize(n, f64::NAN);
            dq.resize(n, f64::NAN);
            break;
        }
    }
    Shot { q, dq, outcome: outcome.unwrap_or(ShotOutcome::Profile) }
}

fn classify_point(q: f64, p: f64, r: f64) -> Option<ShotOutcome> {
    if !(q.is_finite() && p.is_finite()) {
        Some(ShotOutcome::CrossesZero { radius: r, diverged: true })
    } else if q <= 0.0 {
        Some(ShotOutcome::CrossesZero { radius: r, diverged: false })
    } else if p >= 0.0 {
        Some(ShotOutcome::TurnsUp { radius: r })
    } else {
        None
    }
}

/// Integrates outward from `Q(0) = b` and reports the first event before `grid.r_max()`.
pub fn shoot(b: f64, grid: &RadialGrid) -> ShotOutcome {
    integrate(b, grid, false).outcome
}
