use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nlkg_core::bisect::{bisect_boundary, ringing_trace, write_ringing_csv, write_trace_csv};
use nlkg_core::classify::{classify_evolution, Verdict};
use nlkg_core::config::{fmt_f64, push, KeyValues};
use nlkg_core::datafn::Params;
use nlkg_core::groundstate::{
    compute_ground_state, shooting_grid, standard_ground_state, GroundState, PsRegion, DEFAULT_RMAX,
    DEFAULT_SHOOTING_DR, DEFAULT_TOL,
};
use nlkg_core::render::{read_csv, render_section, sections, select_section, write_ppm, Palette, SectionPoint, PALETTE_KEYS};
use nlkg_core::scheme::{discrete_energy, init_levels, Stepper};
use nlkg_core::sweep::{run_sweep, section_path, write_records, PointConfig, RecordRow, SweepConfig, POINT_KEYS};

use crate::manifest::{self, prepare_dir, RunManifest};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(CliError::io)?))
}

fn io<T>(r: std::io::Result<T>) -> Result<T> {
    r.map_err(CliError::io)
}

fn with_keys(extra: &[&'static str]) -> Vec<&'static str> {
    POINT_KEYS.iter().chain(extra).copied().collect()
}

fn ground_note(ground: &GroundState) -> String {
    format!(
        "ground state: dr = {}, central_value = {}, J(Q) = {}",
        fmt_f64(ground.grid().dr()),
        fmt_f64(ground.central_value()),
        fmt_f64(ground.energy_j())
    )
}

fn start_manifest(command: &'static str, config: String, input: Option<PathBuf>) -> Result<RunManifest> {
    let mut m = RunManifest::new(command, config);
    if let Some(path) = input {
        m.input(&path)?;
    }
    Ok(m)
}

fn take_params(kv: &mut KeyValues) -> Result<Params> {
    Ok(Params {
        a: kv.take_parsed("a")?.unwrap_or(0.0),
        b: kv.take_parsed("b")?.unwrap_or(0.0),
        c: kv.take_parsed("c")?.unwrap_or(0.0),
    })
}

fn push_params(out: &mut String, p: &Params) {
    push(out, "a", fmt_f64(p.a));
    push(out, "b", fmt_f64(p.b));
    push(out, "c", fmt_f64(p.c));
}

pub fn groundstate(mut kv: KeyValues, config: Option<PathBuf>, dir: &Path) -> Result<()> {
    let dr = kv.take_parsed("dr")?.unwrap_or(DEFAULT_SHOOTING_DR);
    let tol = kv.take_parsed("tol")?.unwrap_or(DEFAULT_TOL);
    let rmax = kv.take_parsed("rmax")?.unwrap_or(DEFAULT_RMAX);
    kv.finish(&["dr", "tol", "rmax"])?;
    if !(tol > 0.0) {
        return Err(CliError::Config(format!("tol must be positive, got {tol}")));
    }
    prepare_dir(dir, "groundstate")?;
    let ground = compute_ground_state(tol, &shooting_grid(dr, rmax)?)?;

    let summary = format!(
        "central_value = {} J(Q) = {}",
        fmt_f64(ground.central_value()),
        fmt_f64(ground.energy_j())
    );
    let mut w = create(&dir.join("groundstate.txt"))?;
    io(writeln!(w, "# {}\n# {summary}\n# r Q(r)", manifest::note()))?;
    for (r, q) in ground.grid().radii().zip(ground.profile()) {
        io(writeln!(w, "{} {q:.17e}", fmt_f64(r)))?;
    }
    io(w.flush())?;

    let mut cfg = String::new();
    push(&mut cfg, "dr", fmt_f64(dr));
    push(&mut cfg, "tol", fmt_f64(tol));
    push(&mut cfg, "rmax", fmt_f64(rmax));
    let mut m = start_manifest("groundstate", cfg, config)?;
    m.output("groundstate.txt");
    m.notes.push(summary.clone());
    m.write(dir)?;
    println!("{summary}");
    println!("profile written to {}", dir.join("groundstate.txt").display());
    Ok(())
}

pub fn evolve(mut kv: KeyValues, config: Option<PathBuf>, dir: &Path) -> Result<()> {
    let point = PointConfig::take_from(&mut kv)?;
    let params = take_params(&mut kv)?;
    let dump_every: usize = kv.take_parsed("dump_every")?.unwrap_or(0);
    kv.finish(&with_keys(&["a", "b", "c", "dump_every"]))?;
    let family = point.resolve_family()?;
    let solver = point.solver;
    let grid = solver.grid()?;
    prepare_dir(dir, "evolve")?;

    let ground = if family.needs_ground_state() { Some(standard_ground_state()?) } else { None };
    let q = ground.as_ref().map(|g| g.sample(&grid));
    let (u0, u1) = family.sample(&grid, &params, q.as_deref())?;
    let mut state = init_levels(&u0, &u1, &grid)?;
    let mut stepper = Stepper::new(&solver, grid);

    let mut outputs = vec!["energy.txt".to_string()];
    let note = manifest::note();
    let dump = |state: &nlkg_core::scheme::FieldState, outputs: &mut Vec<String>| -> Result<()> {
        let name = format!("snapshot_{:07}.txt", state.step_index);
        let mut w = create(&dir.join(&name))?;
        io(writeln!(w, "# {note}\n# t = {}\n# r u", fmt_f64(state.time())))?;
        for (j, u) in state.u_curr().iter().enumerate() {
            io(writeln!(w, "{} {u:.17e}", fmt_f64(grid.r(j))))?;
        }
        io(w.flush())?;
        outputs.push(name);
        Ok(())
    };

    let mut energy = create(&dir.join("energy.txt"))?;
    io(writeln!(energy, "# {note}\n# step t energy"))?;
    let e0 = discrete_energy(&state);
    io(writeln!(energy, "{} {} {e0:.17e}", state.step_index, fmt_f64(state.time())))?;
    dump(&state, &mut outputs)?;
    let mut stopped = None;
    let mut last_dumped = state.step_index;
    while state.time() < solver.t_final - 0.5 * grid.dt() {
        if let Err(e) = stepper.advance(&mut state) {
            stopped = Some(e);
            break;
        }
        let e = discrete_energy(&state);
        io(writeln!(energy, "{} {} {e:.17e}", state.step_index, fmt_f64(state.time())))?;
        if dump_every > 0 && state.step_index % dump_every == 0 {
            dump(&state, &mut outputs)?;
            last_dumped = state.step_index;
        }
    }
    io(energy.flush())?;
    if last_dumped != state.step_index {
        dump(&state, &mut outputs)?;
    }
    let e1 = discrete_energy(&state);

    let mut cfg = String::new();
    point.write_keys(&mut cfg);
    push_params(&mut cfg, &params);
    push(&mut cfg, "dump_every", dump_every);
    let mut m = start_manifest("evolve", cfg, config)?;
    if let Some(g) = &ground {
        m.notes.push(ground_note(g));
    }
    for o in outputs {
        m.output(o);
    }
    m.write(dir)?;

    println!("scheme = {} steps = {} t = {}", solver.scheme, state.step_index, fmt_f64(state.time()));
    println!(
        "energy initial = {e0:.12e} final = {e1:.12e} relative_drift = {:.3e}",
        ((e1 - e0) / e0.abs().max(f64::MIN_POSITIVE)).abs()
    );
    let stats = stepper.stats();
    if stats.solves > 0 {
        println!("newton solves = {} iterations = {} max_iterations = {}", stats.solves, stats.iterations, stats.max_iterations);
    }
    if let Some(e) = stopped {
        println!("stopped early: {e}");
    }
    Ok(())
}

const CLASSIFY_HEADER: &str =
    "a,b,c,verdict,trigger,decision_time,steps_taken,initial_norm,peak_norm,final_norm,energy,J_Q,K,ps_region";

pub fn classify(mut kv: KeyValues, config: Option<PathBuf>, dir: &Path) -> Result<()> {
    let point = PointConfig::take_from(&mut kv)?;
    let params = take_params(&mut kv)?;
    kv.finish(&with_keys(&["a", "b", "c"]))?;
    prepare_dir(dir, "classify")?;
    let ground = standard_ground_state()?;
    let evaluator = point.evaluator(&ground)?;
    let (u0, u1) = evaluator.sample(&params)?;
    let ps = evaluator.ps_membership(&u0, &u1)?;
    let cls = classify_evolution(&u0, &u1, evaluator.solver(), evaluator.classifier())?;

    let f = fmt_f64;
    let row = [
        f(params.a),
        f(params.b),
        f(params.c),
        cls.verdict.to_string(),
        cls.trigger.to_string(),
        f(cls.decision_time),
        cls.steps_taken.to_string(),
        f(cls.initial_norm),
        f(cls.peak_norm),
        f(cls.final_norm),
        f(ps.energy),
        f(ps.j_of_q),
        f(ps.k_of_u0),
        ps.region.to_string(),
    ]
    .join(",");
    io(fs::write(dir.join("classify.csv"), format!("# {}\n{CLASSIFY_HEADER}\n{row}\n", manifest::note())))?;

    let mut cfg = String::new();
    point.write_keys(&mut cfg);
    push_params(&mut cfg, &params);
    let mut m = start_manifest("classify", cfg, config)?;
    m.notes.push(ground_note(&ground));
    m.output("classify.csv");
    m.write(dir)?;
    println!("{CLASSIFY_HEADER}\n{row}");
    Ok(())
}

/// Verdict counts and PS consistency of a finished sweep.
fn sweep_summary(rows: &[RecordRow]) -> String {
    let count = |v: Option<Verdict>| rows.iter().filter(|r| r.verdict() == v).count();
    let mut plus_bad = 0;
    let mut minus_bad = 0;
    for r in rows {
        match (r.ps_region(), r.verdict()) {
            (Some(PsRegion::PsPlus), Some(Verdict::Blowup)) => plus_bad += 1,
            (Some(PsRegion::PsMinus), Some(Verdict::Dispersive)) => minus_bad += 1,
            _ => {}
        }
    }
    let mut s = String::new();
    let _ = write!(
        s,
        "points = {} DISPERSIVE = {} BLOWUP = {} INDECISIVE = {} ERROR = {}\n\
         PS+ points that blow up = {plus_bad} PS- points that disperse = {minus_bad}",
        rows.len(),
        count(Some(Verdict::Dispersive)),
        count(Some(Verdict::Blowup)),
        count(Some(Verdict::Indecisive)),
        count(None),
    );
    s
}

pub fn sweep(mut kv: KeyValues, config: Option<PathBuf>, dir: &Path) -> Result<()> {
    if !kv.contains("checkpoint") {
        kv.set("checkpoint", dir.join("checkpoint.log").display().to_string());
    }
    let cfg = SweepConfig::from_keys(kv)?;
    prepare_dir(dir, "sweep")?;
    let ground = standard_ground_state()?;
    let out = run_sweep(&cfg, &ground)?;
    let rows: Vec<RecordRow> = out.records.iter().map(RecordRow::from).collect();
    let path = dir.join("records.csv");
    write_records(&rows, create(&path)?, Some(&manifest::note()))?;

    let mut m = start_manifest("sweep", cfg.to_config_text(), config)?;
    m.notes.push(ground_note(&ground));
    m.notes.push(format!("fingerprint: {}", cfg.fingerprint(&ground)));
    m.output("records.csv");
    if let Some(ck) = &cfg.checkpoint_path {
        m.output(ck.display().to_string());
    }
    m.write(dir)?;
    println!("evaluated = {} resumed = {}", out.evaluated, out.resumed);
    println!("{}", sweep_summary(&rows));
    println!("records written to {}", path.display());
    Ok(())
}

fn take_point(kv: &mut KeyValues, key: &str) -> Result<Params> {
    let v = kv
        .take_f64_list(key)?
        .ok_or_else(|| CliError::Config(format!("`{key}` is required (a,b or a,b,c)")))?;
    match v[..] {
        [a, b] => Ok(Params { a, b, c: 0.0 }),
        [a, b, c] => Ok(Params { a, b, c }),
        _ => Err(CliError::Config(format!("`{key}` needs two or three numbers, got {}", v.len()))),
    }
}

pub fn bisect(mut kv: KeyValues, config: Option<PathBuf>, dir: &Path) -> Result<()> {
    let point = PointConfig::take_from(&mut kv)?;
    let from = take_point(&mut kv, "from")?;
    let to = take_point(&mut kv, "to")?;
    let precision: f64 = kv.take_parsed("precision")?.unwrap_or(1e-6);
    let max_iter: usize = kv.take_parsed("max_iter")?.unwrap_or(60);
    let ringing = kv.take_bool("ringing")?.unwrap_or(false);
    let r_probe: f64 = kv.take_parsed("r_probe")?.unwrap_or(0.0);
    kv.finish(&with_keys(&["from", "to", "precision", "max_iter", "ringing", "r_probe"]))?;
    prepare_dir(dir, "bisect")?;
    let ground = standard_ground_state()?;
    let evaluator = point.evaluator(&ground)?;

    let (p_blow, p_disp) = match evaluator.classify(&from)?.verdict {
        Verdict::Dispersive => (to, from),
        _ => (from, to),
    };
    let trace = bisect_boundary(p_blow, p_disp, &evaluator, &ground, precision, max_iter)?;
    let note = manifest::note();
    write_trace_csv(&trace, &dir.join("trace.csv"), Some(&note))?;
    let mut outputs = vec!["trace.csv"];
    let est = trace.boundary_estimate();
    let ring = if ringing {
        let r = ringing_trace(est, &evaluator, r_probe)?;
        write_ringing_csv(&r, &dir.join("ringing.csv"), Some(&note))?;
        outputs.push("ringing.csv");
        Some(r)
    } else {
        None
    };

    let mut cfg = String::new();
    point.write_keys(&mut cfg);
    let list = |p: &Params| format!("{}, {}, {}", fmt_f64(p.a), fmt_f64(p.b), fmt_f64(p.c));
    push(&mut cfg, "from", list(&from));
    push(&mut cfg, "to", list(&to));
    push(&mut cfg, "precision", fmt_f64(precision));
    push(&mut cfg, "max_iter", max_iter);
    push(&mut cfg, "ringing", ringing);
    push(&mut cfg, "r_probe", fmt_f64(r_probe));
    let mut m = start_manifest("bisect", cfg, config)?;
    m.notes.push(ground_note(&ground));
    for o in outputs {
        m.output(o);
    }
    m.write(dir)?;

    println!(
        "depth = {} final_width = {:.3e} initial_width = {:.3e}",
        trace.midpoints.len(),
        trace.final_width,
        trace.initial_width
    );
    println!("boundary_estimate = {}", list(&est));
    if trace.halted_indecisive {
        println!("halted: midpoint stayed INDECISIVE after a retry with doubled t_final");
    }
    if let Some(r) = ring {
        println!("ringing: {} samples, verdict {}", r.samples.len(), r.classification.verdict);
    }
    Ok(())
}

pub fn render(mut kv: KeyValues, config: Option<PathBuf>, dir: &Path) -> Result<()> {
    let records = kv
        .take("records")
        .map(PathBuf::from)
        .ok_or_else(|| CliError::Config("`records` is required (--records FILE)".into()))?;
    let only_c: Option<f64> = kv.take_parsed("c")?;
    let mut palette = Palette::default();
    palette.apply_keys(&mut kv)?;
    let mut known = vec!["records", "c"];
    known.extend(PALETTE_KEYS);
    kv.finish(&known)?;
    prepare_dir(dir, "render")?;

    let rows = read_csv(&records).map_err(|e| match e {
        nlkg_core::Error::Io(io) => CliError::Config(format!("{}: {io}", records.display())),
        other => other.into(),
    })?;
    let points: Vec<SectionPoint> = rows.iter().map(SectionPoint::from).collect();
    let cs = match only_c {
        Some(c) => {
            if !points.iter().any(|p| p.c == c) {
                return Err(CliError::Config(format!("{} holds no section with c = {c}", records.display())));
            }
            vec![c]
        }
        None => sections(&points),
    };
    let stem = records.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "section".into());
    let base = dir.join(format!("{stem}.ppm"));
    let note = manifest::note();
    let mut outputs = Vec::new();
    for &c in &cs {
        let img = render_section(&select_section(&points, c), &palette)?;
        let path = if cs.len() == 1 { base.clone() } else { section_path(&base, c) };
        write_ppm(&img, &path, Some(&note))?;
        println!("{} ({}x{})", path.display(), img.width, img.height);
        outputs.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }

    let mut cfg = String::new();
    push(&mut cfg, "records", records.display());
    if let Some(c) = only_c {
        push(&mut cfg, "c", fmt_f64(c));
    }
    let hex = |c: [u8; 3]| format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2]);
    push(&mut cfg, "overlay", if palette.mode == nlkg_core::render::OverlayMode::Contour { "contour" } else { "fill" });
    for (key, c) in [
        ("color_dispersive", palette.dispersive),
        ("color_blowup", palette.blowup),
        ("color_indecisive", palette.indecisive),
        ("color_ps_plus", palette.ps_plus),
        ("color_ps_minus", palette.ps_minus),
        ("color_error", palette.error),
    ] {
        push(&mut cfg, key, hex(c));
    }
    let mut m = start_manifest("render", cfg, config)?;
    m.input(&records)?;
    for o in outputs {
        m.output(o);
    }
    m.write(dir)?;
    Ok(())
}
