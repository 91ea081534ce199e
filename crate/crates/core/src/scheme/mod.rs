//! Finite-difference time stepping of `v_tt - v_rr + v = v³ / r²`, `v = r u`.
//!
//! Two second-order schemes share the grid, the start-up rule and the boundary
//! treatment (`v = 0` at the origin and at the outermost point):
//!
//! * [`SchemeKind::ImplicitSv`]: the nonlinearity enters as the difference quotient
//!   `(G(v^{n+1}) - G(v^{n-1})) / (v^{n+1} - v^{n-1})` with `G(v) = -v⁴/4`, which makes
//!   [`discrete_energy`] an exact invariant. Each grid point needs a scalar Newton solve.
//! * [`SchemeKind::Explicit`]: leapfrog with the nonlinearity at the current level.

mod energy;
mod newton;

use std::fmt;

pub use energy::discrete_energy;
pub use newton::{NewtonFailure, NewtonOutcome};

use crate::grid::DEFAULT_CFL;
use crate::{Error, RadialGrid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    ImplicitSv,
    Explicit,
}

impl SchemeKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchemeKind::ImplicitSv => "sv",
            SchemeKind::Explicit => "explicit",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "sv" | "implicit" => Some(SchemeKind::ImplicitSv),
            "explicit" => Some(SchemeKind::Explicit),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub scheme: SchemeKind,
    pub dr: f64,
    pub cfl_ratio: f64,
    /// Absolute tolerance on the Newton residual, measured in units of `v`
    /// (the scheme multiplied through by `Δt²`).
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub t_final: f64,
    /// Radius `R` of the region of interest; the grid reaches `R + t_final`.
    pub r_interest: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::ImplicitSv,
            dr: 1e-2,
            cfl_ratio: DEFAULT_CFL,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            t_final: 60.0,
            r_interest: 5.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) {
            return Err(Error::config(format!("newton_tol must be positive, got {}", self.newton_tol)));
        }
        if self.newton_max_iter == 0 {
            return Err(Error::config("newton_max_iter must be at least 1"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(format!("t_final must be positive, got {}", self.t_final)));
        }
        if !(self.r_interest > 0.0 && self.r_interest.is_finite()) {
            return Err(Error::config(format!("r_interest must be positive, got {}", self.r_interest)));
        }
        RadialGrid::new(self.dr, 3, self.cfl_ratio).map(|_| ())
    }

    /// Grid on `[0, r_interest + t_final]`, the smallest interval holding the
    /// domain of dependence of the region of interest.
    pub fn grid(&self) -> Result<RadialGrid> {
        self.validate()?;
        RadialGrid::with_extent(self.dr, self.r_interest + self.t_final, self.cfl_ratio)
    }

    pub fn max_steps(&self) -> usize {
        (self.t_final / (self.cfl_ratio * self.dr) + 1e-9).floor() as usize
    }
}

/// Two consecutive time levels `v^{n-1}`, `v^n` of the reduced field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub v_prev: Vec<f64>,
    pub v_curr: Vec<f64>,
    pub step_index: usize,
    pub grid: RadialGrid,
}

impl FieldState {
    pub fn zero(grid: RadialGrid) -> Self {
        let n = grid.n_points();
        Self { v_prev: vec![0.0; n], v_curr: vec![0.0; n], step_index: 1, grid }
    }

    /// Physical time of `v_curr`.
    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.grid.dt()
    }

    /// `u = v / r` at level `n`, with `u(0)` taken as `v_1 / Δr`.
    pub fn u_curr(&self) -> Vec<f64> {
        to_u(&self.v_curr, &self.grid)
    }

    pub fn u_origin(&self) -> f64 {
        self.v_curr[1] / self.grid.dr()
    }

    /// `M(t) = max_{j>=1} |v_j| / r_j` at level `n`.
    pub fn sup_u(&self) -> f64 {
        self.v_curr
            .iter()
            .enumerate()
            .skip(1)
            .map(|(j, v)| v.abs() / self.grid.r(j))
            .fold(0.0, f64::max)
    }

    pub fn negated(&self) -> Self {
        Self {
            v_prev: self.v_prev.iter().map(|x| -x).collect(),
            v_curr: self.v_curr.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }

    /// Exchanges the two levels, reversing the direction of time.
    pub fn reversed(&self) -> Self {
        Self { v_prev: self.v_curr.clone(), v_curr: self.v_prev.clone(), ..self.clone() }
    }
}

pub(crate) fn to_u(v: &[f64], grid: &RadialGrid) -> Vec<f64> {
    let mut u = Vec::with_capacity(v.len());
    u.push(v[1] / grid.dr());
    u.extend(v.iter().enumerate().skip(1).map(|(j, x)| x / grid.r(j)));
    u
}

/// Why a step could not be taken. Every variant is a numerical blowup signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepError {
    /// A non-finite value appeared at grid index `index`.
    NonFinite { step: usize, index: usize },
    /// The Newton polynomial is (nearly) degenerate, or `M(t) Δr > 1` so that it may be.
    DegenerateNewton { step: usize, index: usize, amplitude_bound: bool },
    /// Newton failed to converge or ran away from any physical root.
    NonConvergence { step: usize, index: usize, failure: NewtonFailure },
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepError::NonFinite { step, index } => write!(f, "non-finite value at step {step}, index {index}"),
            StepError::DegenerateNewton { step, index, amplitude_bound } => {
                if *amplitude_bound {
                    write!(f, "M(t)·Δr > 1 before step {step}")
                } else {
                    write!(f, "degenerate Newton derivative at step {step}, index {index}")
                }
            }
            StepError::NonConvergence { step, index, failure } => {
                write!(f, "Newton {failure} at step {step}, index {index}")
            }
        }
    }
}

impl std::error::Error for StepError {}

/// Magnitudes below this are stored as exact zeros. Cubes of such values would
/// leave the normal range, and subnormal arithmetic is slow on common hardware.
pub const TINY: f64 = 1e-90;

#[inline(always)]
fn flush(x: f64) -> f64 {
    if x.abs() < TINY {
        0.0
    } else {
        x
    }
}

/// Index past which both levels vanish identically; the update there is exactly zero.
fn active_extent(state: &FieldState, next: &mut [f64]) -> usize {
    let n = next.len();
    let last = |v: &[f64]| v[..n - 1].iter().rposition(|&x| x != 0.0).unwrap_or(0);
    let hi = last(&state.v_curr).max(last(&state.v_prev));
    let m = (hi + 1).min(n - 2);
    for x in &mut next[m + 1..] {
        *x = 0.0;
    }
    m
}

/// Starting levels from sampled data `u0`, `u1`:
/// `v⁰ = r u0`, `v¹ = v⁰ + Δt r u1 + ½Δt² (v⁰_rr - v⁰ + (v⁰)³ / r²)`.
pub fn init_levels(u0: &[f64], u1: &[f64], grid: &RadialGrid) -> Result<FieldState> {
    grid.check_len("u0", u0.len())?;
    grid.check_len("u1", u1.len())?;
    for (j, (a, b)) in u0.iter().zip(u1).enumerate() {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::Data { radius: grid.r(j), message: "non-finite initial data".into() });
        }
    }
    let n = grid.n_points();
    let (dr, dt) = (grid.dr(), grid.dt());
    let mut v0: Vec<f64> = grid.radii().zip(u0).map(|(r, u)| flush(r * u)).collect();
    v0[n - 1] = 0.0;
    let mut v1 = vec![0.0; n];
    for j in 1..n - 1 {
        let r = grid.r(j);
        let v = v0[j];
        let lap = (v0[j + 1] - 2.0 * v + v0[j - 1]) / (dr * dr);
        v1[j] = flush(v + dt * r * u1[j] + 0.5 * dt * dt * (lap - v + v * v * v / (r * r)));
        if !v1[j].is_finite() {
            return Err(Error::Data { radius: r, message: "non-finite start-up level".into() });
        }
    }
    Ok(FieldState { v_prev: v0, v_curr: v1, step_index: 1, grid: *grid })
}

/// Per-run Newton statistics of the implicit scheme.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NewtonStats {
    pub solves: u64,
    pub iterations: u64,
    pub max_iterations: usize,
}

/// Reusable in-place stepper for one grid and one scheme.
#[derive(Debug, Clone)]
pub struct Stepper {
    scheme: SchemeKind,
    grid: RadialGrid,
    inv_r2: Vec<f64>,
    next: Vec<f64>,
    newton_tol: f64,
    newton_max_iter: usize,
    nonlinear: bool,
    stats: NewtonStats,
}

impl Stepper {
    pub fn new(cfg: &SolverConfig, grid: RadialGrid) -> Self {
        let n = grid.n_points();
        let mut inv_r2 = vec![0.0; n];
        for j in 1..n {
            let r = grid.r(j);
            inv_r2[j] = 1.0 / (r * r);
        }
        Self {
            scheme: cfg.scheme,
            grid,
            inv_r2,
            next: vec![0.0; n],
            newton_tol: cfg.newton_tol,
            newton_max_iter: cfg.newton_max_iter,
            nonlinear: true,
            stats: NewtonStats::default(),
        }
    }

    /// Drops the cubic term: the same discretisation of the free Klein-Gordon equation.
    pub fn without_nonlinearity(mut self) -> Self {
        self.nonlinear = false;
        self
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn stats(&self) -> NewtonStats {
        self.stats
    }

    /// Advances `state` by one step. On error `state` is left untouched.
    pub fn advance(&mut self, state: &mut FieldState) -> Result<(), StepError> {
        debug_assert_eq!(state.grid, self.grid);
        match self.scheme {
            SchemeKind::Explicit => self.explicit_into(state)?,
            SchemeKind::ImplicitSv => self.implicit_into(state)?,
        }
        std::mem::swap(&mut state.v_prev, &mut state.v_curr);
        std::mem::swap(&mut state.v_curr, &mut self.next);
        state.step_index += 1;
        Ok(())
    }

    fn explicit_into(&mut self, state: &FieldState) -> Result<(), StepError> {
        let n = self.grid.n_points();
        let dt = self.grid.dt();
        let lam2 = (dt / self.grid.dr()).powi(2);
        let dt2 = dt * dt;
        let nl = if self.nonlinear { 1.0 } else { 0.0 };
        let (p, c, out) = (&state.v_prev, &state.v_curr, &mut self.next);
        let m = active_extent(state, out);
        let k = ExplicitCoeffs { lam2, dt2, nl };
        let finite = kernels::explicit(&k, &c[..m + 2], &p[1..m + 1], &self.inv_r2[1..m + 1], &mut out[1..m + 1]);
        out[0] = 0.0;
        out[n - 1] = 0.0;
        if !finite {
            let index = out.iter().position(|x| !x.is_finite()).unwrap_or(0);
            return Err(StepError::NonFinite { step: state.step_index + 1, index });
        }
        Ok(())
    }

    fn implicit_into(&mut self, state: &FieldState) -> Result<(), StepError> {
        let n = self.grid.n_points();
        let dr = self.grid.dr();
        let dt = self.grid.dt();
        let lam2 = (dt / dr).powi(2);
        let dt2 = dt * dt;
        let step = state.step_index + 1;
        let (p, c) = (&state.v_prev, &state.v_curr);

        let m = active_extent(state, &mut self.next);
        if self.nonlinear {
            // M(t) dr > 1, compared in squares
            let sup2 = kernels::sup_sq_ratio(&c[1..=m], &self.inv_r2[1..=m]);
            if !sup2.is_finite() {
                let index = c.iter().position(|x| !x.is_finite()).unwrap_or(0);
                return Err(StepError::NonFinite { step, index });
            }
            if sup2 * dr * dr > 1.0 {
                return Err(StepError::DegenerateNewton { step, index: 0, amplitude_bound: true });
            }
        }

        let coeffs = newton::Coefficients { linear: 1.0 + 0.5 * dt2, half_dt2: 0.5 * dt2 };
        let nl = if self.nonlinear { 0.25 * dt2 } else { 0.0 };
        let tol = self.newton_tol;
        let k = ImplicitCoeffs { newton: coeffs, lam2, nl, tol };
        let all_ok = kernels::implicit(&k, &c[..m + 2], &p[1..m + 1], &self.inv_r2[1..m + 1], &mut self.next[1..m + 1]);
        self.stats.solves += m as u64;
        self.stats.iterations += 3 * m as u64;
        self.stats.max_iterations = self.stats.max_iterations.max(3);
        if all_ok {
            self.next[0] = 0.0;
            self.next[n - 1] = 0.0;
            return Ok(());
        }
        for j in 1..=m {
            if !self.next[j].is_nan() {
                continue;
            }
            let curv = lam2 * (c[j + 1] - 2.0 * c[j] + c[j - 1]);
            let s = nl * self.inv_r2[j];
            match newton::solve(&k.newton, c[j], p[j], curv, s, tol, self.newton_max_iter) {
                NewtonOutcome::Converged { root, iterations } => {
                    self.stats.iterations += iterations as u64;
                    self.stats.max_iterations = self.stats.max_iterations.max(3 + iterations);
                    self.next[j] = flush(root);
                }
                NewtonOutcome::Degenerate => {
                    return Err(StepError::DegenerateNewton { step, index: j, amplitude_bound: false })
                }
                NewtonOutcome::Failed(failure) => {
                    if matches!(failure, NewtonFailure::NonFinite) {
                        return Err(StepError::NonFinite { step, index: j });
                    }
                    return Err(StepError::NonConvergence { step, index: j, failure });
                }
            }
        }
        self.next[0] = 0.0;
        self.next[n - 1] = 0.0;
        Ok(())
    }
}

pub(crate) struct ExplicitCoeffs {
    lam2: f64,
    dt2: f64,
    nl: f64,
}

pub(crate) struct ImplicitCoeffs {
    newton: newton::Coefficients,
    lam2: f64,
    nl: f64,
    tol: f64,
}

/// Per-point update loops. `c` holds the current level from `j = 0` to one past the
/// last updated point; `old`, `inv_r2` and `next` start at `j = 1`. On x86-64 a copy
/// compiled for AVX2 is picked at run time; both copies perform the same IEEE
/// operations in the same order, so results are bit-identical.
mod kernels {
    use super::{flush, newton, ExplicitCoeffs, ImplicitCoeffs};

    #[inline(always)]
    fn explicit_body(k: &ExplicitCoeffs, c: &[f64], old: &[f64], inv_r2: &[f64], next: &mut [f64]) -> bool {
        let m = next.len();
        let (left, mid, right) = (&c[..m], &c[1..m + 1], &c[2..m + 2]);
        let (old, inv_r2) = (&old[..m], &inv_r2[..m]);
        let mut finite = true;
        for i in 0..m {
            let v = mid[i];
            let x = 2.0 * v - old[i] + k.lam2 * (right[i] - 2.0 * v + left[i]) + k.dt2 * (k.nl * v * v * v * inv_r2[i] - v);
            finite &= x.is_finite();
            next[i] = flush(x);
        }
        finite
    }

    /// Marks points the fast Newton path cannot accept with NaN.
    #[inline(always)]
    fn implicit_body(k: &ImplicitCoeffs, c: &[f64], old: &[f64], inv_r2: &[f64], next: &mut [f64]) -> bool {
        let m = next.len();
        let (left, mid, right) = (&c[..m], &c[1..m + 1], &c[2..m + 2]);
        let (old, inv_r2) = (&old[..m], &inv_r2[..m]);
        let mut all_ok = true;
        for i in 0..m {
            let curv = k.lam2 * (right[i] - 2.0 * mid[i] + left[i]);
            let (x, ok) = newton::fast_solve(&k.newton, mid[i], old[i], curv, k.nl * inv_r2[i], k.tol);
            next[i] = if ok { flush(x) } else { f64::NAN };
            all_ok &= ok;
        }
        all_ok
    }

    /// `max_j c_j² / r_j²` in four independent lanes, which vectorises without
    /// reassociation. Stored levels are finite, so the select form is exact.
    #[inline(always)]
    fn sup_body(c: &[f64], inv_r2: &[f64]) -> f64 {
        let inv_r2 = &inv_r2[..c.len()];
        let mut lanes = [0.0f64; 4];
        let (cc, ct) = (c.chunks_exact(4), c.chunks_exact(4).remainder());
        let (ic, it) = (inv_r2.chunks_exact(4), inv_r2.chunks_exact(4).remainder());
        for (x, y) in cc.zip(ic) {
            for l in 0..4 {
                let w = x[l] * x[l] * y[l];
                lanes[l] = if w > lanes[l] { w } else { lanes[l] };
            }
        }
        for (x, y) in ct.iter().zip(it) {
            let w = x * x * y;
            lanes[0] = if w > lanes[0] { w } else { lanes[0] };
        }
        lanes.iter().fold(0.0, |m, &w| if w > m { w } else { m })
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn sup_avx2(c: &[f64], inv_r2: &[f64]) -> f64 {
        sup_body(c, inv_r2)
    }

    pub(super) fn sup_sq_ratio(c: &[f64], inv_r2: &[f64]) -> f64 {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2
            return unsafe { sup_avx2(c, inv_r2) };
        }
        sup_body(c, inv_r2)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn explicit_avx2(k: &ExplicitCoeffs, c: &[f64], old: &[f64], inv_r2: &[f64], next: &mut [f64]) -> bool {
        explicit_body(k, c, old, inv_r2, next)
    }

    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn implicit_avx2(k: &ImplicitCoeffs, c: &[f64], old: &[f64], inv_r2: &[f64], next: &mut [f64]) -> bool {
        implicit_body(k, c, old, inv_r2, next)
    }

    pub(super) fn explicit(k: &ExplicitCoeffs, c: &[f64], old: &[f64], inv_r2: &[f64], next: &mut [f64]) -> bool {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2
            return unsafe { explicit_avx2(k, c, old, inv_r2, next) };
        }
        explicit_body(k, c, old, inv_r2, next)
    }

    pub(super) fn implicit(k: &ImplicitCoeffs, c: &[f64], old: &[f64], inv_r2: &[f64], next: &mut [f64]) -> bool {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the CPU supports AVX2
            return unsafe { implicit_avx2(k, c, old, inv_r2, next) };
        }
        implicit_body(k, c, old, inv_r2, next)
    }
}

/// One explicit step, returning the advanced state.
pub fn step_explicit(state: &FieldState) -> Result<FieldState, StepError> {
    let cfg = SolverConfig { scheme: SchemeKind::Explicit, ..SolverConfig::default() };
    let mut stepper = Stepper::new(&cfg, state.grid);
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// One implicit step with the Newton settings of `cfg`.
pub fn step_implicit(state: &FieldState, cfg: &SolverConfig) -> Result<FieldState, StepError> {
    let cfg = SolverConfig { scheme: SchemeKind::ImplicitSv, ..*cfg };
    let mut stepper = Stepper::new(&cfg, state.grid);
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}
