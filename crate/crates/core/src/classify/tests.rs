use std::sync::OnceLock;

use super::*;
use crate::groundstate::{functional_e, standard_ground_state, GroundState};
use crate::scheme::SchemeKind;

fn ground() -> &'static GroundState {
    static G: OnceLock<GroundState> = OnceLock::new();
    G.get_or_init(|| standard_ground_state().unwrap())
}

fn coarse() -> SolverConfig {
    SolverConfig { dr: 0.05, t_final: 30.0, ..SolverConfig::default() }
}

fn quick_classifier() -> ClassifierConfig {
    ClassifierConfig { sustain_window: 20, ..ClassifierConfig::default() }
}

fn q_times(solver: &SolverConfig, a: f64) -> (Vec<f64>, Vec<f64>) {
    let g = solver.grid().unwrap();
    let q: Vec<f64> = ground().sample(&g).iter().map(|x| a * x).collect();
    (q, vec![0.0; g.n_points()])
}

fn gaussian(solver: &SolverConfig, amp: f64) -> (Vec<f64>, Vec<f64>) {
    let g = solver.grid().unwrap();
    (g.radii().map(|r| amp * (-r * r).exp()).collect(), vec![0.0; g.n_points()])
}

#[test]
fn zero_data_disperse_immediately() {
    let s = coarse();
    let n = s.grid().unwrap().n_points();
    let z = vec![0.0; n];
    let c = classify_evolution(&z, &z, &s, &ClassifierConfig::default()).unwrap();
    assert_eq!((c.verdict, c.decision_time, c.steps_taken), (Verdict::Dispersive, 0.0, 0));
    let state = FieldState::zero(s.grid().unwrap());
    assert_eq!(monitored_norm(&state, 5.0), 0.0);
}

#[test]
fn data_norm_is_linear_in_the_data() {
    let s = coarse();
    let g = s.grid().unwrap();
    let (u0, _) = gaussian(&s, 1.0);
    let u1: Vec<f64> = g.radii().map(|r| r * (-r).exp()).collect();
    let n1 = data_norm(&u0, &u1, &g, 5.0);
    for c in [-3.0, 0.5, 7.25] {
        let a: Vec<f64> = u0.iter().map(|x| c * x).collect();
        let b: Vec<f64> = u1.iter().map(|x| c * x).collect();
        let nc = data_norm(&a, &b, &g, 5.0);
        assert!((nc - c.abs() * n1).abs() <= 1e-14 * nc);
    }
}

#[test]
fn monitored_norm_of_the_started_ground_state_matches_its_quadrature() {
    let s = SolverConfig { dr: 1e-2, ..SolverConfig::default() };
    let g = s.grid().unwrap();
    let (q, z) = q_times(&s, 1.0);
    let state = init_levels(&q, &z, &g).unwrap();
    let direct = data_norm(&q, &z, &g, 5.0);
    let monitored = monitored_norm(&state, 5.0);
    assert!(((monitored - direct) / direct).abs() < 1e-3, "{monitored} vs {direct}");
}

#[test]
fn perturbed_ground_states_go_their_separate_ways() {
    let s = SolverConfig::default();
    let k = ClassifierConfig::default();
    let (u0, u1) = q_times(&s, 0.95);
    assert_eq!(classify_evolution(&u0, &u1, &s, &k).unwrap().verdict, Verdict::Dispersive);
    let (u0, u1) = q_times(&s, 1.05);
    assert_eq!(classify_evolution(&u0, &u1, &s, &k).unwrap().verdict, Verdict::Blowup);
}

#[test]
fn negative_energy_blows_up() {
    let s = coarse();
    let g = s.grid().unwrap();
    let (u0, u1) = gaussian(&s, 5.0);
    assert!(functional_e(&u0, &u1, &g).unwrap() < 0.0);
    let c = classify_evolution(&u0, &u1, &s, &quick_classifier()).unwrap();
    assert_eq!(c.verdict, Verdict::Blowup);
}

#[test]
fn verdicts_ignore_the_sign_of_the_data() {
    let s = coarse();
    let k = quick_classifier();
    for (u0, u1) in [gaussian(&s, 1.0), gaussian(&s, 4.0), q_times(&s, 0.9), q_times(&s, 1.2)] {
        let n0: Vec<f64> = u0.iter().map(|x| -x).collect();
        let n1: Vec<f64> = u1.iter().map(|x| -x).collect();
        let a = classify_evolution(&u0, &u1, &s, &k).unwrap();
        let b = classify_evolution(&n0, &n1, &s, &k).unwrap();
        assert_eq!((a.verdict, a.trigger), (b.verdict, b.trigger));
        assert_eq!(a.initial_norm, b.initial_norm);
    }
}

#[test]
fn decisive_explosions_survive_a_doubled_threshold() {
    let s = SolverConfig { scheme: SchemeKind::Explicit, ..coarse() };
    let k = quick_classifier();
    let doubled = ClassifierConfig { blowup_factor: 2.0 * k.blowup_factor, ..k };
    let mut exploded = 0;
    for a in [1.2, 1.5, 2.0, 3.0] {
        let (u0, u1) = q_times(&s, a);
        let c = classify_evolution(&u0, &u1, &s, &k).unwrap();
        assert_eq!(c.verdict, Verdict::Blowup, "A = {a}");
        if c.trigger == Trigger::NormExploded && c.peak_norm >= 2e5 * c.initial_norm {
            exploded += 1;
            assert_eq!(classify_evolution(&u0, &u1, &s, &doubled).unwrap().verdict, Verdict::Blowup);
        }
    }
    assert!(exploded > 0, "no run overshot decisively");
}

#[test]
fn step_cap_gives_indecisive() {
    let s = coarse();
    let (u0, u1) = q_times(&s, 0.9);
    let k = ClassifierConfig { max_steps: Some(30), ..quick_classifier() };
    let c = classify_evolution(&u0, &u1, &s, &k).unwrap();
    assert_eq!((c.verdict, c.trigger, c.steps_taken), (Verdict::Indecisive, Trigger::MaxSteps, 30));
}

#[test]
fn observer_sees_every_monitor_event() {
    let s = coarse();
    let (u0, u1) = gaussian(&s, 0.5);
    let k = quick_classifier();
    let mut times = Vec::new();
    let c = classify_with_monitor(&u0, &u1, &s, &k, |ev| times.push(ev.time)).unwrap();
    assert_eq!(c.verdict, Verdict::Dispersive);
    assert_eq!(times.len(), c.steps_taken / k.monitor_stride);
    assert!(times.len() >= k.sustain_window);
}

#[test]
fn bad_settings_are_configuration_errors() {
    let s = coarse();
    let (u0, u1) = gaussian(&s, 0.5);
    for k in [
        ClassifierConfig { blowup_factor: 0.5, ..ClassifierConfig::default() },
        ClassifierConfig { disperse_factor: 0.0, ..ClassifierConfig::default() },
        ClassifierConfig { sustain_window: 0, ..ClassifierConfig::default() },
        ClassifierConfig { r_monitor: 6.0, ..ClassifierConfig::default() },
    ] {
        assert!(classify_evolution(&u0, &u1, &s, &k).unwrap_err().is_config());
    }
}

#[test]
fn names_round_trip() {
    for v in [Verdict::Blowup, Verdict::Dispersive, Verdict::Indecisive] {
        assert_eq!(Verdict::parse(v.as_str()), Some(v));
    }
    for t in [
        Trigger::NormExploded,
        Trigger::NewtonDegenerate,
        Trigger::NonFinite,
        Trigger::NormSmallSustained,
        Trigger::MaxSteps,
    ] {
        assert_eq!(Trigger::parse(t.as_str()), Some(t));
    }
}
