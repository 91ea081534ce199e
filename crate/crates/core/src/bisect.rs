//! Boundary refinement between a blowup and a dispersive datum, and ringing traces.
//!
//! Points on the segment are `p(s) = p_blow + s (p_disp - p_blow)` with `s` kept
//! dyadic, so every accepted step halves the bracket exactly.

use std::io::Write;
use std::path::Path;

use crate::classify::{classify_with_monitor, distance_to_pair, Classification, Verdict};
use crate::datafn::Params;
use crate::groundstate::GroundState;
use crate::sweep::PointEvaluator;
use crate::{Error, Result};

/// One tested midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Midpoint {
    /// 1 for the first midpoint.
    pub depth: usize,
    pub s: f64,
    pub point: Params,
    pub verdict: Verdict,
    pub decision_time: f64,
    /// Classified again with doubled `t_final` after an INDECISIVE first run.
    pub retried: bool,
    /// `(s_blow, s_disp)` after this step.
    pub bracket: (f64, f64),
    /// Euclidean length of that bracket in parameter space.
    pub width: f64,
}

#[derive(Debug, Clone)]
pub struct BisectionTrace {
    pub blow_end: Params,
    pub disp_end: Params,
    pub blow_classification: Classification,
    pub disp_classification: Classification,
    pub initial_width: f64,
    pub midpoints: Vec<Midpoint>,
    pub final_bracket: (f64, f64),
    pub final_width: f64,
    /// Refinement stopped at a midpoint that stayed INDECISIVE after the retry.
    pub halted_indecisive: bool,
}

fn on_segment(p: &Params, q: &Params, s: f64) -> Params {
    Params { a: p.a + s * (q.a - p.a), b: p.b + s * (q.b - p.b), c: p.c + s * (q.c - p.c) }
}

fn distance(p: &Params, q: &Params) -> f64 {
    ((p.a - q.a).powi(2) + (p.b - q.b).powi(2) + (p.c - q.c).powi(2)).sqrt()
}

impl BisectionTrace {
    pub fn point_at(&self, s: f64) -> Params {
        on_segment(&self.blow_end, &self.disp_end, s)
    }

    /// Midpoint of the final bracket.
    pub fn boundary_estimate(&self) -> Params {
        self.point_at(0.5 * (self.final_bracket.0 + self.final_bracket.1))
    }

    /// Checks the recorded bracket sequence: every bracket end carries the verdict of
    /// its side, and the width halves exactly at every accepted step.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        if self.blow_classification.verdict != Verdict::Blowup || self.disp_classification.verdict != Verdict::Dispersive {
            return Err("endpoint verdicts are not BLOWUP / DISPERSIVE".into());
        }
        let mut bracket = (0.0, 1.0);
        let mut width = self.initial_width;
        let mut tested: Vec<(f64, Verdict)> = vec![(0.0, Verdict::Blowup), (1.0, Verdict::Dispersive)];
        for m in &self.midpoints {
            if m.s != 0.5 * (bracket.0 + bracket.1) {
                return Err(format!("depth {}: s = {} is not the bracket midpoint", m.depth, m.s));
            }
            tested.push((m.s, m.verdict));
            match m.verdict {
                Verdict::Blowup => bracket.0 = m.s,
                Verdict::Dispersive => bracket.1 = m.s,
                Verdict::Indecisive => {
                    if m.bracket != bracket {
                        return Err(format!("depth {}: an INDECISIVE midpoint moved the bracket", m.depth));
                    }
                    continue;
                }
            }
            width *= 0.5;
            if m.bracket != bracket || m.width != width {
                return Err(format!("depth {}: recorded bracket or width disagrees with the verdicts", m.depth));
            }
            let verdict_at = |s: f64| tested.iter().rev().find(|(t, _)| *t == s).map(|(_, v)| *v);
            if verdict_at(bracket.0) != Some(Verdict::Blowup) || verdict_at(bracket.1) != Some(Verdict::Dispersive) {
                return Err(format!("depth {}: bracket ends do not have opposite verdicts", m.depth));
            }
        }
        if self.final_bracket != bracket || self.final_width != width {
            return Err("final bracket disagrees with the midpoints".into());
        }
        Ok(())
    }
}

/// Bisects the segment from `p_blow` to `p_disp` until the bracket is no longer than
/// `precision` or `max_iter` midpoints have been tested. Both endpoints are
/// classified first and must come out BLOWUP and DISPERSIVE respectively.
pub fn bisect_boundary(
    p_blow: Params,
    p_disp: Params,
    evaluator: &PointEvaluator,
    ground: &GroundState,
    precision: f64,
    max_iter: usize,
) -> Result<BisectionTrace> {
    if !(precision >= 0.0) {
        return Err(Error::config(format!("precision must be non-negative, got {precision}")));
    }
    let blow = evaluator.classify(&p_blow)?;
    if blow.verdict != Verdict::Blowup {
        return Err(Error::Input(format!(
            "blowup endpoint (a = {}, b = {}, c = {}) classifies {}",
            p_blow.a, p_blow.b, p_blow.c, blow.verdict
        )));
    }
    let disp = evaluator.classify(&p_disp)?;
    if disp.verdict != Verdict::Dispersive {
        return Err(Error::Input(format!(
            "dispersive endpoint (a = {}, b = {}, c = {}) classifies {}",
            p_disp.a, p_disp.b, p_disp.c, disp.verdict
        )));
    }

    let initial_width = distance(&p_blow, &p_disp);
    let mut bracket = (0.0, 1.0);
    let mut width = initial_width;
    let mut midpoints = Vec::new();
    let mut retry: Option<PointEvaluator> = None;
    let mut halted = false;
    for depth in 1..=max_iter {
        if width <= precision {
            break;
        }
        let s = 0.5 * (bracket.0 + bracket.1);
        let point = on_segment(&p_blow, &p_disp, s);
        let mut cls = evaluator.classify(&point)?;
        let mut retried = false;
        if cls.verdict == Verdict::Indecisive {
            if retry.is_none() {
                let mut solver = *evaluator.solver();
                let mut classifier = *evaluator.classifier();
                solver.t_final *= 2.0;
                classifier.max_steps = classifier.max_steps.map(|m| 2 * m);
                retry = Some(evaluator.reconfigured(solver, classifier, ground)?);
            }
            cls = retry.as_ref().expect("retry evaluator").classify(&point)?;
            retried = true;
        }
        match cls.verdict {
            Verdict::Blowup => bracket.0 = s,
            Verdict::Dispersive => bracket.1 = s,
            Verdict::Indecisive => halted = true,
        }
        if !halted {
            width *= 0.5;
        }
        midpoints.push(Midpoint {
            depth,
            s,
            point,
            verdict: cls.verdict,
            decision_time: cls.decision_time,
            retried,
            bracket,
            width,
        });
        if halted {
            break;
        }
    }
    Ok(BisectionTrace {
        blow_end: p_blow,
        disp_end: p_disp,
        blow_classification: blow,
        disp_classification: disp,
        initial_width,
        midpoints,
        final_bracket: bracket,
        final_width: width,
        halted_indecisive: halted,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RingingSample {
    pub t: f64,
    /// `u(t, r_probe)`
    pub u_probe: f64,
    /// `min(‖u - Q‖, ‖u + Q‖)` in the position part of the monitored norm.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct RingingTrace {
    pub point: Params,
    pub r_probe: f64,
    pub samples: Vec<RingingSample>,
    pub classification: Classification,
}

impl RingingTrace {
    /// Longest time span over which `distance` stays below `level`.
    pub fn plateau_duration(&self, level: f64) -> f64 {
        let mut best: f64 = 0.0;
        let mut start: Option<f64> = None;
        for s in &self.samples {
            match (s.distance < level, start) {
                (true, None) => start = Some(s.t),
                (true, Some(t0)) => best = best.max(s.t - t0),
                (false, _) => start = None,
            }
        }
        best
    }
}

/// Evolves the datum at `point`, sampling `u(t, r_probe)` and the distance to `±Q`
/// at every monitor event. `r_probe = 0` reads the origin value `v_1 / Δr`.
pub fn ringing_trace(point: Params, evaluator: &PointEvaluator, r_probe: f64) -> Result<RingingTrace> {
    let solver = evaluator.solver();
    if !(0.0..=solver.r_interest).contains(&r_probe) {
        return Err(Error::config(format!("r_probe = {r_probe} must lie in [0, r_interest = {}]", solver.r_interest)));
    }
    let (u0, u1) = evaluator.sample(&point)?;
    let grid = *evaluator.grid();
    let probe = (r_probe / grid.dr()).round() as usize;
    let r_monitor = evaluator.classifier().r_monitor;
    let q = evaluator.ground_samples();
    let mut samples = Vec::new();
    let classification = classify_with_monitor(&u0, &u1, solver, evaluator.classifier(), |ev| {
        let v = &ev.state.v_curr;
        let u_probe = if probe == 0 { v[1] / grid.dr() } else { v[probe] / grid.r(probe) };
        samples.push(RingingSample { t: ev.time, u_probe, distance: distance_to_pair(ev.state, q, r_monitor) });
    })?;
    Ok(RingingTrace { point, r_probe, samples, classification })
}

fn open_with_note(path: &Path, note: Option<&str>) -> Result<std::io::BufWriter<std::fs::File>> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(note) = note {
        writeln!(w, "# {note}")?;
    }
    Ok(w)
}

/// Midpoint log: `depth,s,a,b,c,verdict,decision_time,retried,s_blow,s_disp,width`,
/// the two endpoints first at depth 0. `note` becomes a leading `#` line.
pub fn write_trace_csv(trace: &BisectionTrace, path: &Path, note: Option<&str>) -> Result<()> {
    let mut w = open_with_note(path, note)?;
    writeln!(w, "depth,s,a,b,c,verdict,decision_time,retried,s_blow,s_disp,width")?;
    for (depth, s, p, cls) in [(0usize, 0.0, &trace.blow_end, &trace.blow_classification), (0, 1.0, &trace.disp_end, &trace.disp_classification)] {
        writeln!(w, "{depth},{s:?},{:?},{:?},{:?},{},{:?},false,0.0,1.0,{:?}", p.a, p.b, p.c, cls.verdict, cls.decision_time, trace.initial_width)?;
    }
    for m in &trace.midpoints {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?},{},{:?},{},{:?},{:?},{:?}",
            m.depth, m.s, m.point.a, m.point.b, m.point.c, m.verdict, m.decision_time, m.retried, m.bracket.0, m.bracket.1, m.width
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Ringing series: `t,u_probe,distance`.
pub fn write_ringing_csv(trace: &RingingTrace, path: &Path, note: Option<&str>) -> Result<()> {
    let mut w = open_with_note(path, note)?;
    writeln!(w, "t,u_probe,distance")?;
    for s in &trace.samples {
        writeln!(w, "{:?},{:?},{:?}", s.t, s.u_probe, s.distance)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::ClassifierConfig;
    use crate::datafn::builtin_family;
    use crate::groundstate::{compute_ground_state, shooting_grid};
    use crate::scheme::SolverConfig;

    fn setup() -> (GroundState, PointEvaluator) {
        let g = compute_ground_state(1e-12, &shooting_grid(1e-3, 20.0).unwrap()).unwrap();
        // (A Q, 0): the ray through the soliton
        let family = builtin_family("fig1_1_right").unwrap();
        let solver = SolverConfig { dr: 0.05, t_final: 60.0, ..SolverConfig::default() };
        let classifier = ClassifierConfig { sustain_window: 40, ..ClassifierConfig::default() };
        let ev = PointEvaluator::new(family, solver, classifier, &g).unwrap();
        (g, ev)
    }

    #[test]
    fn soliton_ray_brackets_the_soliton() {
        let (g, ev) = setup();
        let blow = Params { a: 1.2, b: 0.0, c: 0.0 };
        let disp = Params { a: 0.8, b: 0.0, c: 0.0 };
        let trace = bisect_boundary(blow, disp, &ev, &g, 1e-3, 30).unwrap();
        trace.check_invariants().unwrap();
        assert!(trace.final_width <= 1e-3 || trace.halted_indecisive);
        let est = trace.boundary_estimate().a;
        assert!((est - 1.0).abs() < 0.02, "boundary at A = {est}");
        for pair in trace.midpoints.windows(2) {
            if pair[1].verdict != Verdict::Indecisive {
                assert_eq!(pair[1].width, pair[0].width / 2.0);
            }
        }
    }

    #[test]
    fn endpoints_are_verified() {
        let (g, ev) = setup();
        let small = Params { a: 0.5, b: 0.0, c: 0.0 };
        let err = bisect_boundary(small, small, &ev, &g, 0.0, 5).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        assert!(err.to_string().contains("blowup endpoint"), "{err}");
        let big = Params { a: 1.5, b: 0.0, c: 0.0 };
        let err = bisect_boundary(big, big, &ev, &g, 0.0, 5).unwrap_err();
        assert!(err.to_string().contains("dispersive endpoint"), "{err}");
    }

    #[test]
    fn tampered_traces_fail_the_check() {
        let (g, ev) = setup();
        let trace = bisect_boundary(Params { a: 1.2, ..Default::default() }, Params { a: 0.8, ..Default::default() }, &ev, &g, 0.0, 4)
            .unwrap();
        trace.check_invariants().unwrap();
        let mut bad = trace.clone();
        bad.midpoints[1].verdict = match bad.midpoints[1].verdict {
            Verdict::Blowup => Verdict::Dispersive,
            _ => Verdict::Blowup,
        };
        assert!(bad.check_invariants().is_err());
        let mut bad = trace;
        bad.midpoints[2].width *= 1.0 + 1e-15;
        assert!(bad.check_invariants().is_err());
    }

    #[test]
    fn soliton_trace_stays_close_to_q() {
        let (_, ev) = setup();
        let trace = ringing_trace(Params { a: 1.0, ..Default::default() }, &ev, 0.0).unwrap();
        assert!(!trace.samples.is_empty());
        let q0 = ev.ground_samples()[0];
        let first = trace.samples[0];
        assert!((first.u_probe - q0).abs() < 0.05 * q0, "{} vs {q0}", first.u_probe);
        // discretisation-limited at this coarse spacing
        assert!(first.distance < 0.02 * trace.classification.initial_norm, "{}", first.distance);
    }

    #[test]
    fn probe_radius_is_validated() {
        let (_, ev) = setup();
        assert!(ringing_trace(Params::default(), &ev, 6.0).unwrap_err().is_config());
    }

    #[test]
    fn plateau_duration_counts_the_longest_run() {
        let mk = |d: &[f64]| RingingTrace {
            point: Params::default(),
            r_probe: 0.0,
            samples: d.iter().enumerate().map(|(i, &x)| RingingSample { t: i as f64, u_probe: 0.0, distance: x }).collect(),
            classification: Classification {
                verdict: Verdict::Indecisive,
                trigger: crate::classify::Trigger::MaxSteps,
                decision_time: 0.0,
                steps_taken: 0,
                initial_norm: 0.0,
                peak_norm: 0.0,
                final_norm: 0.0,
                newton: None,
            },
        };
        assert_eq!(mk(&[1.0, 0.1, 0.1, 0.1, 1.0, 0.1, 0.1]).plateau_duration(0.5), 2.0);
        assert_eq!(mk(&[1.0, 2.0]).plateau_duration(0.5), 0.0);
    }
}
