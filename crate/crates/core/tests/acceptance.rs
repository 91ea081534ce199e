//! Acceptance checks for the simulator and basin mapper.
//!
//! Prints one `PASS` or `FAIL` line per criterion and exits non-zero when any
//! criterion fails. The full run takes tens of minutes on one core; set
//! `NLKG_WORKERS` to use more.

use std::process::ExitCode;
use std::time::Instant;

use nlkg_core::bisect::bisect_boundary;
use nlkg_core::classify::{classify_evolution, ClassifierConfig, Verdict};
use nlkg_core::datafn::Params;
use nlkg_core::groundstate::{functional_e, standard_ground_state, GroundState, PsRegion};
use nlkg_core::scheme::{discrete_energy, init_levels, SchemeKind, SolverConfig, Stepper};
use nlkg_core::sweep::{
    connected_components, resolve_workers, run_sweep, write_records, PointEvaluator, RecordRow, SweepConfig,
    SweepRecord,
};
use nlkg_core::RadialGrid;

const ENERGY_DRIFT_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-12;
const ENERGY_STEPS: usize = 10_000;
const SWEEP_SIDE: usize = 61;
const MAX_INDECISIVE_FRACTION: f64 = 0.02;
const MAX_FLIP_FRACTION: f64 = 0.01;
const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
const BISECT_DEPTH: usize = 40;
const BISECT_WIDTH_RATIO: f64 = 1e-12;
const SCAN_SIDE: usize = 41;

struct Report {
    failed: usize,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn workers() -> usize {
    let n = std::env::var("NLKG_WORKERS").ok().and_then(|s| s.parse().ok()).unwrap_or(0);
    resolve_workers(n)
}

fn energy_conservation(report: &mut Report) {
    let grid = RadialGrid::with_extent(1e-2, 100.0, 0.9).unwrap();
    let u0: Vec<f64> = grid.radii().map(|r| 0.5 * (-r * r).exp()).collect();
    let u1 = vec![0.0; grid.n_points()];
    let mut state = init_levels(&u0, &u1, &grid).unwrap();
    let cfg = SolverConfig { newton_tol: NEWTON_TOL, ..SolverConfig::default() };
    let mut stepper = Stepper::new(&cfg, grid);
    let e0 = discrete_energy(&state);
    let mut worst: f64 = 0.0;
    for _ in 0..ENERGY_STEPS {
        if let Err(e) = stepper.advance(&mut state) {
            report.line("energy_conservation", false, format!("step failed: {e}"));
            return;
        }
        worst = worst.max(((discrete_energy(&state) - e0) / e0).abs());
    }
    report.line(
        "energy_conservation",
        worst < ENERGY_DRIFT_TOL,
        format!("max relative drift {worst:.3e} over {ENERGY_STEPS} steps (limit {ENERGY_DRIFT_TOL:.0e})"),
    );
}

fn ps_sweep(scheme: SchemeKind) -> SweepConfig {
    let mut cfg = SweepConfig::from_preset("fig1_1_left").unwrap();
    cfg.a_count = SWEEP_SIDE;
    cfg.b_count = SWEEP_SIDE;
    cfg.solver.scheme = scheme;
    cfg.workers = workers();
    cfg
}

fn payne_sattinger(report: &mut Report, records: &[SweepRecord]) {
    let (mut covered, mut indecisive, mut decided, mut wrong) = (0usize, 0usize, 0usize, 0usize);
    for rec in records {
        let region = match rec.ps.map(|p| p.region) {
            Some(r @ (PsRegion::PsPlus | PsRegion::PsMinus)) => r,
            _ => continue,
        };
        covered += 1;
        let expected = if region == PsRegion::PsPlus { Verdict::Dispersive } else { Verdict::Blowup };
        match rec.verdict() {
            Some(Verdict::Indecisive) => indecisive += 1,
            Some(v) => {
                decided += 1;
                if v != expected {
                    wrong += 1;
                }
            }
            // a failed datum counts against consistency
            None => {
                decided += 1;
                wrong += 1;
            }
        }
    }
    let frac = indecisive as f64 / covered.max(1) as f64;
    report.line(
        "payne_sattinger_consistency",
        covered > 0 && wrong == 0 && frac < MAX_INDECISIVE_FRACTION,
        format!(
            "{covered} PS points, {wrong} of {decided} decided inconsistent, INDECISIVE {:.2}% (limit {:.0}%)",
            100.0 * frac,
            100.0 * MAX_INDECISIVE_FRACTION
        ),
    );
}

fn soliton_ray(report: &mut Report, ground: &GroundState) {
    let solver = SolverConfig::default();
    let grid = solver.grid().unwrap();
    let q = ground.sample(&grid);
    let z = vec![0.0; grid.n_points()];
    let verdict = |a: f64| {
        let u0: Vec<f64> = q.iter().map(|x| a * x).collect();
        classify_evolution(&u0, &z, &solver, &ClassifierConfig::default()).map(|c| c.verdict)
    };
    let (below, above) = (verdict(0.95), verdict(1.05));
    report.line(
        "soliton_instability",
        matches!((&below, &above), (Ok(Verdict::Dispersive), Ok(Verdict::Blowup))),
        format!("0.95 Q -> {below:?}, 1.05 Q -> {above:?}"),
    );
}

fn negative_energy(report: &mut Report) {
    let solver = SolverConfig::default();
    let grid = solver.grid().unwrap();
    let z = vec![0.0; grid.n_points()];
    let profile = |a: f64| -> Vec<f64> { grid.radii().map(|r| a * (-r * r).exp()).collect() };
    let energy = |a: f64| functional_e(&profile(a), &z, &grid).unwrap();
    // E(A g) = A² T - A⁴ P, so the sign changes once at A₀ = sqrt(T / P)
    let (e1, e2) = (energy(1.0), energy(2.0));
    let p = (4.0 * e1 - e2) / 12.0;
    let t = e1 + p;
    let a0 = (t / p).sqrt();
    let a = 1.1 * a0;
    let e = energy(a);
    let verdict = classify_evolution(&profile(a), &z, &solver, &ClassifierConfig::default()).map(|c| c.verdict);
    report.line(
        "negative_energy_blowup",
        e < 0.0 && matches!(verdict, Ok(Verdict::Blowup)),
        format!("E = 0 at A = {a0:.6}; A = {a:.6} has E = {e:.4e} -> {verdict:?}"),
    );
}

fn u_at(dr: f64, scheme: SchemeKind, t: f64) -> Vec<f64> {
    let grid = RadialGrid::with_extent(dr, 10.0, 0.9).unwrap();
    let u0: Vec<f64> = grid.radii().map(|r| (-r * r).exp()).collect();
    let mut state = init_levels(&u0, &vec![0.0; grid.n_points()], &grid).unwrap();
    let cfg = SolverConfig { scheme, dr, ..SolverConfig::default() };
    let mut stepper = Stepper::new(&cfg, grid);
    while state.time() < t - 1e-9 {
        stepper.advance(&mut state).unwrap();
    }
    state.u_curr()
}

fn convergence_order(report: &mut Report) {
    // t = 1.8 is a whole number of steps at every spacing below
    let t = 1.8;
    let mut orders = Vec::new();
    for scheme in [SchemeKind::Explicit, SchemeKind::ImplicitSv] {
        for base in [0.04, 0.02] {
            let reference = u_at(base / 8.0, scheme, t);
            let err = |dr: f64| {
                let u = u_at(dr, scheme, t);
                let ratio = (dr / (base / 8.0)).round() as usize;
                let last = (4.0 / dr).round() as usize;
                (0..=last).map(|j| (u[j] - reference[j * ratio]).abs()).fold(0.0, f64::max)
            };
            let order = (err(base) / err(base / 2.0)).log2();
            orders.push((scheme, base, order));
        }
    }
    let pass = orders.iter().all(|&(_, _, p)| (ORDER_RANGE.0..=ORDER_RANGE.1).contains(&p));
    let detail: Vec<String> = orders.iter().map(|(s, b, p)| format!("{s} dr {b}: {p:.3}")).collect();
    report.line("convergence_order", pass, detail.join(", "));
}

fn scheme_agreement(report: &mut Report, implicit: &[SweepRecord], explicit: &[SweepRecord]) {
    let (mut compared, mut flips) = (0usize, 0usize);
    for (a, b) in implicit.iter().zip(explicit) {
        match (a.verdict(), b.verdict()) {
            (Some(x), Some(y)) if x != Verdict::Indecisive && y != Verdict::Indecisive => {
                compared += 1;
                if x != y {
                    flips += 1;
                }
            }
            _ => {}
        }
    }
    let frac = flips as f64 / compared.max(1) as f64;
    report.line(
        "scheme_cross_validation",
        compared > 0 && frac < MAX_FLIP_FRACTION,
        format!("{flips} of {compared} decided verdicts flip ({:.2}%, limit {:.0}%)", 100.0 * frac, 100.0 * MAX_FLIP_FRACTION),
    );
}

/// Adjacent pair on the middle row of the sweep with opposite decided verdicts,
/// blowup end first.
fn boundary_pair(records: &[SweepRecord], side: usize) -> Option<(Params, Params)> {
    let rows = std::iter::once(side / 2).chain(0..side);
    for row in rows {
        let line = &records[row * side..(row + 1) * side];
        for w in line.windows(2) {
            let p = |r: &SweepRecord| Params { a: r.a, b: r.b, c: r.c };
            match (w[0].verdict(), w[1].verdict()) {
                (Some(Verdict::Blowup), Some(Verdict::Dispersive)) => return Some((p(&w[0]), p(&w[1]))),
                (Some(Verdict::Dispersive), Some(Verdict::Blowup)) => return Some((p(&w[1]), p(&w[0]))),
                _ => {}
            }
        }
    }
    None
}

fn bisection(report: &mut Report, ground: &GroundState, records: &[SweepRecord]) {
    let name = "bisection_metastability";
    let Some((blow, disp)) = boundary_pair(records, SWEEP_SIDE) else {
        report.line(name, false, "no adjacent BLOWUP / DISPERSIVE pair in the sweep".into());
        return;
    };
    let cfg = ps_sweep(SchemeKind::ImplicitSv);
    let evaluator = PointEvaluator::new(cfg.resolve_family().unwrap(), cfg.solver, cfg.classifier, ground).unwrap();
    let trace = match bisect_boundary(blow, disp, &evaluator, ground, 0.0, BISECT_DEPTH) {
        Ok(t) => t,
        Err(e) => {
            report.line(name, false, format!("bisection failed: {e}"));
            return;
        }
    };
    let depth = trace.midpoints.len();
    let ratio = trace.final_width / trace.initial_width;
    let invariant = trace.check_invariants();
    let at = |d: usize| trace.midpoints.get(d - 1);
    let (t5, t40) = (at(5).map(|m| m.decision_time), at(BISECT_DEPTH).map(|m| m.decision_time));
    // the two sides decide on different clocks, so the delay is also measured
    // against the deepest midpoint at depth <= 5 on the same side as depth 40
    let same_side = at(BISECT_DEPTH).and_then(|last| {
        trace.midpoints[..5.min(depth)].iter().rev().find(|m| m.verdict == last.verdict).map(|m| (m.depth, m.decision_time))
    });
    let delayed = matches!((t5, t40), (Some(a), Some(b)) if b > a);
    let delayed_same_side = matches!((same_side, t40), (Some((_, a)), Some(b)) if b > a);
    let pass = depth >= BISECT_DEPTH
        && !trace.halted_indecisive
        && ratio < BISECT_WIDTH_RATIO
        && invariant.is_ok()
        && delayed_same_side;
    let verdicts = |d: usize| at(d).map(|m| m.verdict.as_str()).unwrap_or("-");
    report.line(
        name,
        pass,
        format!(
            "depth {depth}, width ratio {ratio:.3e}, invariant {}, decision time depth 5 {t5:?} ({}) depth 40 {t40:?} ({}), \
             literal delay {delayed}, same-side reference {same_side:?} delay {delayed_same_side}",
            if invariant.is_ok() { "ok".to_string() } else { format!("{invariant:?}") },
            verdicts(5),
            verdicts(BISECT_DEPTH),
        ),
    );
}

fn csv_bytes(records: &[SweepRecord]) -> Vec<u8> {
    let rows: Vec<RecordRow> = records.iter().map(RecordRow::from).collect();
    let mut out = Vec::new();
    write_records(&rows, &mut out, None).unwrap();
    out
}

fn determinism_and_symmetry(report: &mut Report, ground: &GroundState) {
    let side = 21;
    let mut cfg = SweepConfig::from_preset("fig1_2_left").unwrap();
    cfg.a_count = side;
    cfg.b_count = side;
    let run = |workers: usize| {
        let mut c = cfg.clone();
        c.workers = workers;
        run_sweep(&c, ground).unwrap().records
    };
    let (one, eight) = (run(1), run(8));
    let identical = csv_bytes(&one) == csv_bytes(&eight);
    let n = one.len();
    let mut asymmetric = 0;
    for (i, rec) in one.iter().enumerate() {
        let mirror = &one[n - 1 - i];
        assert!(mirror.a == -rec.a && mirror.b == -rec.b, "mirrored axes");
        if rec.verdict() != mirror.verdict() {
            asymmetric += 1;
        }
    }
    report.line(
        "determinism_and_symmetry",
        identical && asymmetric == 0,
        format!("{side}x{side} records identical for workers 1 and 8: {identical}; verdicts changed by (A, B) -> (-A, -B): {asymmetric}"),
    );
}

fn three_parameter_scan(report: &mut Report, ground: &GroundState) {
    let mut cfg = SweepConfig::from_preset("3param").unwrap();
    cfg.a_count = SCAN_SIDE;
    cfg.b_count = SCAN_SIDE;
    cfg.workers = workers();
    let outcome = run_sweep(&cfg, ground).unwrap();
    let per = SCAN_SIDE * SCAN_SIDE;
    let counts: Vec<(f64, usize)> = outcome
        .records
        .chunks(per)
        .map(|s| (s[0].c, connected_components(s, SCAN_SIDE, SCAN_SIDE, Verdict::Dispersive)))
        .collect();
    let changes = counts.windows(2).any(|w| w[0].1 != w[1].1);
    let detail: Vec<String> = counts.iter().map(|(c, k)| format!("C = {c}: {k}")).collect();
    report.line(
        "three_parameter_scan",
        counts.len() == 3 && changes,
        format!("dispersive components {}", detail.join(", ")),
    );
}

fn timed<T>(label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    eprintln!("  [{label}: {:.1} s]", start.elapsed().as_secs_f64());
    out
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags such as `--list`; only a plain run executes
    if std::env::args().skip(1).any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let ground = standard_ground_state().unwrap();
    let mut report = Report { failed: 0 };

    timed("energy", || energy_conservation(&mut report));
    let implicit = timed("implicit sweep", || run_sweep(&ps_sweep(SchemeKind::ImplicitSv), &ground).unwrap().records);
    payne_sattinger(&mut report, &implicit);
    timed("soliton", || soliton_ray(&mut report, &ground));
    timed("negative energy", || negative_energy(&mut report));
    timed("convergence", || convergence_order(&mut report));
    let explicit = timed("explicit sweep", || run_sweep(&ps_sweep(SchemeKind::Explicit), &ground).unwrap().records);
    scheme_agreement(&mut report, &implicit, &explicit);
    timed("bisection", || bisection(&mut report, &ground, &implicit));
    timed("determinism", || determinism_and_symmetry(&mut report, &ground));
    timed("scan", || three_parameter_scan(&mut report, &ground));

    if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", report.failed);
        ExitCode::FAILURE
    }
}
