//! Blowup / dispersion / indecisive verdicts from the `H¹ × L²` norm on a fixed ball.

use std::fmt;

use crate::scheme::{init_levels, FieldState, NewtonFailure, SolverConfig, StepError, Stepper};
use crate::{Error, RadialGrid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Blowup,
    Dispersive,
    Indecisive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Blowup => "BLOWUP",
            Verdict::Dispersive => "DISPERSIVE",
            Verdict::Indecisive => "INDECISIVE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "BLOWUP" => Some(Verdict::Blowup),
            "DISPERSIVE" => Some(Verdict::Dispersive),
            "INDECISIVE" => Some(Verdict::Indecisive),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trigger {
    NormExploded,
    NewtonDegenerate,
    NonFinite,
    NormSmallSustained,
    MaxSteps,
}

impl Trigger {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trigger::NormExploded => "NORM_EXPLODED",
            Trigger::NewtonDegenerate => "NEWTON_DEGENERATE",
            Trigger::NonFinite => "NONFINITE",
            Trigger::NormSmallSustained => "NORM_SMALL_SUSTAINED",
            Trigger::MaxSteps => "MAX_STEPS",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "NORM_EXPLODED" => Some(Trigger::NormExploded),
            "NEWTON_DEGENERATE" => Some(Trigger::NewtonDegenerate),
            "NONFINITE" => Some(Trigger::NonFinite),
            "NORM_SMALL_SUSTAINED" => Some(Trigger::NormSmallSustained),
            "MAX_STEPS" => Some(Trigger::MaxSteps),
            _ => None,
        }
    }

    pub fn verdict(&self) -> Verdict {
        match self {
            Trigger::NormExploded | Trigger::NewtonDegenerate | Trigger::NonFinite => Verdict::Blowup,
            Trigger::NormSmallSustained => Verdict::Dispersive,
            Trigger::MaxSteps => Verdict::Indecisive,
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Detail behind a [`Trigger::NewtonDegenerate`] verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonDiagnostic {
    /// `M(t) Δr > 1` before a step.
    AmplitudeBound,
    /// `|F'|` fell below the degeneracy floor.
    SmallDerivative,
    NonConvergence(NewtonFailure),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub trigger: Trigger,
    pub decision_time: f64,
    pub steps_taken: usize,
    pub initial_norm: f64,
    pub peak_norm: f64,
    pub final_norm: f64,
    pub newton: Option<NewtonDiagnostic>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub r_monitor: f64,
    pub blowup_factor: f64,
    pub disperse_factor: f64,
    /// Consecutive monitor events the small-norm condition must hold.
    pub sustain_window: usize,
    /// Steps between norm evaluations.
    pub monitor_stride: usize,
    /// Step cap; `None` runs to the solver's `t_final`.
    pub max_steps: Option<usize>,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            r_monitor: 5.0,
            blowup_factor: 1e5,
            disperse_factor: 0.1,
            sustain_window: 200,
            monitor_stride: 10,
            max_steps: None,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.blowup_factor > 1.0 && 1.0 > self.disperse_factor && self.disperse_factor > 0.0) {
            return Err(Error::config(format!(
                "need blowup_factor > 1 > disperse_factor > 0, got {} and {}",
                self.blowup_factor, self.disperse_factor
            )));
        }
        if !(self.r_monitor > 0.0) {
            return Err(Error::config(format!("r_monitor must be positive, got {}", self.r_monitor)));
        }
        if self.sustain_window == 0 || self.monitor_stride == 0 {
            return Err(Error::config("sustain_window and monitor_stride must be at least 1"));
        }
        Ok(())
    }
}

/// `sqrt(4π ∫_0^R (u_r² + u² + u_t²) r² dr)` by the trapezoid rule, `u_r` by
/// centred differences (zero at the origin).
fn ball_norm(grid: &RadialGrid, r_monitor: f64, u: &[f64], ut: impl Fn(usize) -> f64) -> f64 {
    let jm = grid.index_at_or_below(r_monitor).min(u.len() - 2);
    let inv2 = 0.5 / grid.dr();
    let sq = crate::groundstate::radial_trapezoid_pub(grid, jm + 1, |j| {
        let ur = if j == 0 { 0.0 } else { (u[j + 1] - u[j - 1]) * inv2 };
        let t = ut(j);
        ur * ur + u[j] * u[j] + t * t
    });
    sq.sqrt()
}

/// Ball norm of the evolving field: position from `v_curr`, velocity from the
/// backward difference `(v_curr - v_prev) / (Δt r)`.
pub fn monitored_norm(state: &FieldState, r_monitor: f64) -> f64 {
    let g = &state.grid;
    let u = ball_u(&state.v_curr, g, r_monitor);
    let dt = g.dt();
    let (c, p) = (&state.v_curr, &state.v_prev);
    ball_norm(g, r_monitor, &u, |j| {
        if j == 0 {
            (c[1] - p[1]) / (dt * g.dr())
        } else {
            (c[j] - p[j]) / (dt * g.r(j))
        }
    })
}

/// Ball norm of sampled data `(u0, u1)` at `t = 0`; linear in the data.
pub fn data_norm(u0: &[f64], u1: &[f64], grid: &RadialGrid, r_monitor: f64) -> f64 {
    ball_norm(grid, r_monitor, u0, |j| u1[j])
}

/// Position-only distance `min_± ‖u - (±target)‖` in the ball norm (velocity dropped).
pub fn distance_to_pair(state: &FieldState, target: &[f64], r_monitor: f64) -> f64 {
    let g = &state.grid;
    let u = ball_u(&state.v_curr, g, r_monitor);
    let minus: Vec<f64> = u.iter().zip(target).map(|(a, q)| a - q).collect();
    let plus: Vec<f64> = u.iter().zip(target).map(|(a, q)| a + q).collect();
    let d1 = ball_norm(g, r_monitor, &minus, |_| 0.0);
    let d2 = ball_norm(g, r_monitor, &plus, |_| 0.0);
    d1.min(d2)
}

/// `u = v / r` on the ball plus one point for the centred derivative.
fn ball_u(v: &[f64], grid: &RadialGrid, r_monitor: f64) -> Vec<f64> {
    let jm = (grid.index_at_or_below(r_monitor) + 1).min(v.len() - 1);
    let mut u = Vec::with_capacity(jm + 1);
    u.push(v[1] / grid.dr());
    u.extend((1..=jm).map(|j| v[j] / grid.r(j)));
    u
}

/// State handed to a monitor observer.
pub struct MonitorEvent<'a> {
    pub state: &'a FieldState,
    pub time: f64,
    pub norm: f64,
}

/// Classifies the evolution of sampled data on `solver.grid()`.
pub fn classify_evolution(
    u0: &[f64],
    u1: &[f64],
    solver: &SolverConfig,
    classifier: &ClassifierConfig,
) -> Result<Classification> {
    classify_with_monitor(u0, u1, solver, classifier, |_| {})
}

/// As [`classify_evolution`], calling `observer` at every monitor event.
pub fn classify_with_monitor(
    u0: &[f64],
    u1: &[f64],
    solver: &SolverConfig,
    classifier: &ClassifierConfig,
    mut observer: impl FnMut(&MonitorEvent<'_>),
) -> Result<Classification> {
    classifier.validate()?;
    if classifier.r_monitor > solver.r_interest {
        return Err(Error::config(format!(
            "r_monitor = {} exceeds the region of interest r_interest = {}",
            classifier.r_monitor, solver.r_interest
        )));
    }
    let grid = solver.grid()?;
    let n0 = data_norm(u0, u1, &grid, classifier.r_monitor);
    let mut result = Classification {
        verdict: Verdict::Dispersive,
        trigger: Trigger::NormSmallSustained,
        decision_time: 0.0,
        steps_taken: 0,
        initial_norm: n0,
        peak_norm: n0,
        final_norm: n0,
        newton: None,
    };
    if !n0.is_finite() {
        return Err(Error::Input("initial data norm is not finite".into()));
    }
    if n0 == 0.0 {
        return Ok(result);
    }

    let max_steps = classifier.max_steps.map_or(solver.max_steps(), |m| m.min(solver.max_steps()));
    let mut state = init_levels(u0, u1, &grid)?;
    let mut stepper = Stepper::new(solver, grid);
    let dt = grid.dt();
    let blowup_level = classifier.blowup_factor * n0;
    let small_level = classifier.disperse_factor * n0;
    let mut small_run = 0usize;

    finish(&mut result, Trigger::MaxSteps, max_steps, dt);
    while state.step_index < max_steps {
        if let Err(e) = stepper.advance(&mut state) {
            let (trigger, newton) = match e {
                StepError::NonFinite { .. } => (Trigger::NonFinite, None),
                StepError::DegenerateNewton { amplitude_bound, .. } => (
                    Trigger::NewtonDegenerate,
                    Some(if amplitude_bound {
                        NewtonDiagnostic::AmplitudeBound
                    } else {
                        NewtonDiagnostic::SmallDerivative
                    }),
                ),
                StepError::NonConvergence { failure, .. } => {
                    (Trigger::NewtonDegenerate, Some(NewtonDiagnostic::NonConvergence(failure)))
                }
            };
            result.newton = newton;
            finish(&mut result, trigger, state.step_index, dt);
            return Ok(result);
        }
        if state.step_index % classifier.monitor_stride != 0 {
            continue;
        }
        let norm = monitored_norm(&state, classifier.r_monitor);
        if !norm.is_finite() {
            finish(&mut result, Trigger::NonFinite, state.step_index, dt);
            return Ok(result);
        }
        result.final_norm = norm;
        result.peak_norm = result.peak_norm.max(norm);
        observer(&MonitorEvent { state: &state, time: state.time(), norm });
        if norm > blowup_level {
            finish(&mut result, Trigger::NormExploded, state.step_index, dt);
            return Ok(result);
        }
        if norm < small_level {
            small_run += 1;
            if small_run >= classifier.sustain_window {
                finish(&mut result, Trigger::NormSmallSustained, state.step_index, dt);
                return Ok(result);
            }
        } else {
            small_run = 0;
        }
    }
    finish(&mut result, Trigger::MaxSteps, state.step_index, dt);
    Ok(result)
}

fn finish(result: &mut Classification, trigger: Trigger, steps: usize, dt: f64) {
    result.trigger = trigger;
    result.verdict = trigger.verdict();
    result.steps_taken = steps;
    result.decision_time = steps as f64 * dt;
}

#[cfg(test)]
mod tests;
