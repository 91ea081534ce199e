//! Ground state `Q` of `-ΔQ + Q = Q³` and the Payne-Sattinger functionals.

mod functionals;
mod shoot;

use std::fmt;

pub use functionals::{functional_e, functional_j, functional_k, h1_norm_sq, radial_derivative};
pub use shoot::{shoot, ShotOutcome};

use crate::grid::DEFAULT_CFL;
use crate::{Error, RadialGrid, Result};

/// Radius beyond which the profile is replaced by the decay law `c e^{-r} / r`.
pub const SPLICE_RADIUS: f64 = 15.0;
/// Default truncation radius for shooting.
pub const DEFAULT_RMAX: f64 = 20.0;

/// Relative disagreement of the two bracketing shots above which the profile is
/// no longer trusted.
const RELIABLE_SPREAD: f64 = 1e-6;

/// The positive radial ground state sampled on its shooting grid.
#[derive(Debug, Clone)]
pub struct GroundState {
    grid: RadialGrid,
    profile: Vec<f64>,
    slope: Vec<f64>,
    central_value: f64,
    energy_j: f64,
    splice_radius: f64,
    tail_coeff: f64,
}

/// Shooting grid helper: spacing `dr` out to `r_max`.
pub fn shooting_grid(dr: f64, r_max: f64) -> Result<RadialGrid> {
    if r_max < SPLICE_RADIUS {
        return Err(Error::config(format!(
            "shooting truncation radius must be at least {SPLICE_RADIUS}, got {r_max}"
        )));
    }
    RadialGrid::with_extent(dr, r_max, DEFAULT_CFL)
}

/// Shooting spacing of [`standard_ground_state`].
pub const DEFAULT_SHOOTING_DR: f64 = 1e-3;
/// Bracket width on the central value of [`standard_ground_state`].
pub const DEFAULT_TOL: f64 = 1e-12;

/// The ground state every sweep, classification and bisection uses.
pub fn standard_ground_state() -> Result<GroundState> {
    compute_ground_state(DEFAULT_TOL, &shooting_grid(DEFAULT_SHOOTING_DR, DEFAULT_RMAX)?)
}

/// Bisects the central amplitude between a [`ShotOutcome::TurnsUp`] and a
/// [`ShotOutcome::CrossesZero`] bracket until its width drops below `tol`.
pub fn bracket_central_value(tol: f64, grid: &RadialGrid) -> Result<(f64, f64)> {
    if !(tol > 0.0) {
        return Err(Error::config(format!("shooting tolerance must be positive, got {tol}")));
    }
    if grid.r_max() < SPLICE_RADIUS {
        return Err(Error::config(format!(
            "shooting grid must reach r = {SPLICE_RADIUS}, reaches {}",
            grid.r_max()
        )));
    }
    let scan: Vec<f64> = (1..=20).map(|k| 0.5 * k as f64).collect();
    let outcomes: Vec<ShotOutcome> = scan.iter().map(|&b| shoot(b, grid)).collect();
    let k = outcomes
        .windows(2)
        .position(|w| matches!(w[0], ShotOutcome::TurnsUp { .. }) && w[1].overshoots())
        .ok_or_else(|| Error::config("no shooting bracket found for central values in [0.5, 10]"))?;
    let (mut lo, mut hi) = (scan[k], scan[k + 1]);
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, grid) {
            ShotOutcome::TurnsUp { .. } => lo = mid,
            ShotOutcome::CrossesZero { .. } => hi = mid,
            ShotOutcome::Profile => return Ok((mid, mid)),
        }
    }
    Ok((lo, hi))
}

/// Computes `Q` by shooting, splicing the exponential tail onto the averaged
/// bracketing profiles at the last reliable radius (at most [`SPLICE_RADIUS`]).
pub fn compute_ground_state(tol: f64, grid: &RadialGrid) -> Result<GroundState> {
    let (lo, hi) = bracket_central_value(tol, grid)?;
    let under = shoot::integrate(lo, grid, true);
    let over = shoot::integrate(hi, grid, true);

    let splice_cap = grid.index_at_or_below(SPLICE_RADIUS);
    let mut splice = splice_cap;
    for j in 1..=splice_cap {
        let (a, b) = (under.q[j], over.q[j]);
        let mean = 0.5 * (a + b);
        if !(mean > 0.0) || (a - b).abs() > RELIABLE_SPREAD * mean {
            splice = j - 1;
            break;
        }
    }
    if splice < 2 {
        return Err(Error::config("shooting profile unreliable near the origin"));
    }

    let n = grid.n_points();
    let mut profile = Vec::with_capacity(n);
    let mut slope = Vec::with_capacity(n);
    for j in 0..=splice {
        profile.push(0.5 * (under.q[j] + over.q[j]));
        slope.push(0.5 * (under.dq[j] + over.dq[j]));
    }
    let rs = grid.r(splice);
    let tail_coeff = profile[splice] * rs * rs.exp();
    for j in splice + 1..n {
        let r = grid.r(j);
        profile.push(tail(tail_coeff, r));
        slope.push(tail_slope(tail_coeff, r));
    }

    let energy_j = functional_j(&profile, grid)?;
    Ok(GroundState {
        grid: *grid,
        central_value: profile[0],
        profile,
        slope,
        energy_j,
        splice_radius: rs,
        tail_coeff,
    })
}

#[inline]
fn tail(c: f64, r: f64) -> f64 {
    c * (-r).exp() / r
}

#[inline]
fn tail_slope(c: f64, r: f64) -> f64 {
    -c * (-r).exp() * (1.0 / r + 1.0 / (r * r))
}

impl GroundState {
    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn central_value(&self) -> f64 {
        self.central_value
    }

    /// `J(Q)` on the shooting grid.
    pub fn energy_j(&self) -> f64 {
        self.energy_j
    }

    pub fn splice_radius(&self) -> f64 {
        self.splice_radius
    }

    /// `Q(r)` for any `r >= 0`: cubic Hermite interpolation up to the splice radius,
    /// the fitted decay law beyond.
    pub fn eval(&self, r: f64) -> f64 {
        if r >= self.splice_radius {
            return tail(self.tail_coeff, r);
        }
        let h = self.grid.dr();
        let x = r / h;
        let j = (x.floor() as usize).min(self.grid.n_points() - 2);
        let t = x - j as f64;
        if t == 0.0 {
            return self.profile[j];
        }
        let (y0, y1) = (self.profile[j], self.profile[j + 1]);
        let (m0, m1) = (self.slope[j] * h, self.slope[j + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// `Q` sampled on another grid.
    pub fn sample(&self, grid: &RadialGrid) -> Vec<f64> {
        grid.radii().map(|r| self.eval(r)).collect()
    }

    /// `J(Q)` evaluated with the quadrature of `grid`, the right reference when
    /// comparing against energies computed on that grid.
    pub fn energy_j_on(&self, grid: &RadialGrid) -> Result<f64> {
        functional_j(&self.sample(grid), grid)
    }
}

/// Payne-Sattinger region of a datum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PsRegion {
    PsPlus,
    PsMinus,
    AboveThreshold,
}

impl PsRegion {
    pub fn as_str(&self) -> &'static str {
        match self {
            PsRegion::PsPlus => "PS_PLUS",
            PsRegion::PsMinus => "PS_MINUS",
            PsRegion::AboveThreshold => "ABOVE_THRESHOLD",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "PS_PLUS" => Some(PsRegion::PsPlus),
            "PS_MINUS" => Some(PsRegion::PsMinus),
            "ABOVE_THRESHOLD" => Some(PsRegion::AboveThreshold),
            _ => None,
        }
    }
}

impl fmt::Display for PsRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsMembership {
    pub energy: f64,
    pub j_of_q: f64,
    pub k_of_u0: f64,
    pub region: PsRegion,
}

impl PsMembership {
    /// Applies the two trapping inequalities; `K = 0` counts as `PS+`.
    pub fn from_values(energy: f64, j_of_q: f64, k_of_u0: f64) -> Self {
        let region = if energy < j_of_q {
            if k_of_u0 >= 0.0 {
                PsRegion::PsPlus
            } else {
                PsRegion::PsMinus
            }
        } else {
            PsRegion::AboveThreshold
        };
        Self { energy, j_of_q, k_of_u0, region }
    }
}

/// `J(Q)` pinned to one sampling grid, shared read-only by sweep workers.
#[derive(Debug, Clone)]
pub struct PsReference {
    grid: RadialGrid,
    j_of_q: f64,
}

impl PsReference {
    pub fn new(ground: &GroundState, grid: &RadialGrid) -> Result<Self> {
        Ok(Self { grid: *grid, j_of_q: ground.energy_j_on(grid)? })
    }

    pub fn j_of_q(&self) -> f64 {
        self.j_of_q
    }

    pub fn classify(&self, u0: &[f64], u1: &[f64]) -> Result<PsMembership> {
        let energy = functional_e(u0, u1, &self.grid)?;
        let k = functional_k(u0, &self.grid)?;
        Ok(PsMembership::from_values(energy, self.j_of_q, k))
    }
}

/// Region membership of `(u0, u1)` sampled on `grid`, with `J(Q)` evaluated in the same quadrature.
pub fn ps_classify(u0: &[f64], u1: &[f64], ground: &GroundState, grid: &RadialGrid) -> Result<PsMembership> {
    PsReference::new(ground, grid)?.classify(u0, u1)
}

#[cfg(test)]
mod tests;

pub(crate) use functionals::radial_trapezoid as radial_trapezoid_pub;
