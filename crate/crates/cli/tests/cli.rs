use std::path::Path;
use std::process::{Command, Output};

fn nlkg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlkg"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NLKG_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const QUICK: &[&str] = &["--dr", "0.05", "--tfinal", "30", "--sustain-window", "20"];

fn ppm_size(bytes: &[u8]) -> (usize, usize) {
    let text = String::from_utf8_lossy(&bytes[..bytes.len().min(200)]).into_owned();
    let mut fields = text.lines().filter(|l| !l.starts_with('#')).skip(1);
    let dims: Vec<usize> = fields.next().unwrap().split_whitespace().map(|s| s.parse().unwrap()).collect();
    (dims[0], dims[1])
}

#[test]
fn groundstate_writes_profile_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlkg(&["groundstate", "--dr", "1e-3"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let central: f64 = out.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert!((central - 4.33738768).abs() < 1e-6, "{out}");
    let profile = std::fs::read_to_string(dir.path().join("nlkg-groundstate/groundstate.txt")).unwrap();
    assert!(profile.starts_with("# manifest: manifest.txt"));
    assert_eq!(profile.lines().filter(|l| !l.starts_with('#')).count(), 20001);
    assert!(dir.path().join("nlkg-groundstate/manifest.txt").exists());
}

#[test]
fn sweep_render_and_reproduce_from_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--preset", "fig1_1_left", "--a-count", "5", "--b-count", "4", "--out", "run1"];
    args.extend(QUICK);
    let o = nlkg(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("PS+ points that blow up = 0 PS- points that disperse = 0"), "{}", stdout(&o));

    let run1 = dir.path().join("run1");
    let manifests: Vec<_> = std::fs::read_dir(&run1)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("manifest"))
        .collect();
    assert_eq!(manifests.len(), 1);
    let manifest = std::fs::read_to_string(run1.join("manifest.txt")).unwrap();
    assert!(manifest.contains("# command: sweep") && manifest.contains("a_count = 5"));

    // recompute from scratch with the manifest's configuration
    let o = nlkg(
        &["sweep", "--config", "run1/manifest.txt", "--out", "run2", "--checkpoint", "run2/checkpoint.log"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("evaluated = 20 resumed = 0"));
    let a = std::fs::read(run1.join("records.csv")).unwrap();
    let b = std::fs::read(dir.path().join("run2/records.csv")).unwrap();
    assert_eq!(a, b);

    let o = nlkg(&["render", "--records", "run1/records.csv"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let ppm = std::fs::read(dir.path().join("nlkg-render/records.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n# manifest: manifest.txt\n"));
    assert_eq!(ppm_size(&ppm), (5, 4));

    // a render may not claim the sweep's directory
    let o = nlkg(&["render", "--records", "run1/records.csv", "--out", "run1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn workers_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--preset", "fig1_2_left", "--a-count", "2", "--b-count", "2"];
    args.extend(QUICK);
    let o = Command::new(env!("CARGO_BIN_EXE_nlkg"))
        .args(&args)
        .current_dir(dir.path())
        .env("NLKG_WORKERS", "3")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = std::fs::read_to_string(dir.path().join("nlkg-sweep/manifest.txt")).unwrap();
    assert!(manifest.contains("workers = 3"), "{manifest}");
}

#[test]
fn classify_prints_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["classify", "--u0", "5*exp(-r^2)", "--u1", "0"];
    args.extend(QUICK);
    let o = nlkg(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("a,b,c,verdict,trigger,decision_time"));
    assert!(lines[1].contains(",BLOWUP,"), "{out}");
    assert!(lines[1].ends_with(",PS_MINUS"), "{out}");
}

#[test]
fn evolve_dumps_snapshots_and_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlkg(
        &["evolve", "--u0", "0.5*exp(-r^2)", "--u1", "0", "--dr", "0.05", "--tfinal", "2", "--dump-every", "20"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("nlkg-evolve");
    let snapshots = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("snapshot_"))
        .count();
    // steps 1, 20, 40 and the last one, 44 (t = 1.98)
    assert_eq!(snapshots, 4);
    let energy = std::fs::read_to_string(out.join("energy.txt")).unwrap();
    let values: Vec<f64> = energy
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 44);
    assert!(values.iter().all(|e| ((e - values[0]) / values[0]).abs() < 1e-9));
}

#[test]
fn bisect_writes_trace_and_ringing() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "bisect", "--family", "fig1_1_right", "--from", "0.8,0", "--to", "1.2,0", "--max-iter", "4", "--ringing",
    ];
    args.extend(QUICK);
    let o = nlkg(&args, dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(dir.path().join("nlkg-bisect/trace.csv")).unwrap();
    // note, header, two endpoints, four midpoints
    assert_eq!(trace.lines().count(), 8, "{trace}");
    assert!(trace.lines().nth(2).unwrap().contains(",BLOWUP,"), "the blowup end comes first");
    assert!(dir.path().join("nlkg-bisect/ringing.csv").exists());
}

#[test]
fn exit_codes_separate_config_from_runtime_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlkg(&["sweep", "--a-cuont", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--a-count"), "{}", stderr(&o));

    let o = nlkg(&["sweep", "--preset", "fig1_1_left", "--set", "b_cuont=3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("did you mean `b_count`"));

    let o = nlkg(&["classify", "--u0", "2r", "--u1", "0"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(dir.path().join("taken"), "x").unwrap();
    let o = nlkg(&["groundstate", "--out", "taken"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn help_documents_the_grammar() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlkg(&["--help"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in ["precedence", "right", "Juxtaposition", "NLKG_WORKERS", "Exit status"] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let o = nlkg(&["sweep", "--help"], dir.path());
    let text = stdout(&o);
    assert!(text.contains("--a-count") && text.contains("c_values") && text.contains("precedence"));
}
