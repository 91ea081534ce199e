//! `nlkg`: command-line front end of the radial cubic Klein-Gordon toolkit.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlkg_core::config::{fmt_f64, KeyValues};

const TOP_HELP: &str = "\
Every subcommand reads its settings as flat `key = value` lines (`#` starts a
comment) from --config, then applies its flags, then any --set KEY=VALUE
overrides. Unknown keys are rejected. Each run writes its outputs and a
manifest.txt into --out; the manifest holds the fully resolved configuration
and can be passed back with --config to repeat the run.

Exit status: 0 on success, 1 on a configuration or input error, 2 on a
runtime failure.

Environment: NLKG_WORKERS sets the sweep worker count (0 = all cores).";

const DATA_HELP: &str = "\
Data come from a builtin family (--family) or from a custom pair --u0/--u1.
Builtin families: fig1_1_left fig1_1_right fig1_2_left fig1_2_right
fig1_3_left fig1_3_right fig1_4 fig1_6_left curve1 3param.";

fn long_help(extra: &str) -> String {
    format!("{extra}\n\n{DATA_HELP}\n\n{}\n\n{TOP_HELP}", nlkg_core::datafn::GRAMMAR_HELP)
}

#[derive(Parser, Debug)]
#[command(name = "nlkg", version, about = "Radial focusing cubic Klein-Gordon simulator and basin mapper")]
#[command(after_long_help = long_help("Run `nlkg <command> --help` for the keys each command accepts."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute the ground state Q by shooting and write its profile
    #[command(after_long_help = format!("Keys: dr, tol, rmax.\n\n{TOP_HELP}"))]
    Groundstate(GroundstateArgs),
    /// Evolve one datum, writing (r, u) snapshots and the discrete energy
    #[command(after_long_help = long_help("Keys: family, u0, u1, add_q, a, b, c, dump_every, and the solver keys\nscheme, dr, cfl, newton_tol, newton_max_iter, t_final, r_interest."))]
    Evolve(EvolveArgs),
    /// Classify one datum as BLOWUP, DISPERSIVE or INDECISIVE
    #[command(after_long_help = long_help("Keys: family, u0, u1, add_q, a, b, c, the solver keys and the classifier keys\nr_monitor, blowup_factor, disperse_factor, sustain_window, monitor_stride,\nmax_steps (a count or `auto`)."))]
    Classify(ClassifyArgs),
    /// Classify every point of an (A, B) grid, for one or more C values
    #[command(after_long_help = long_help("Keys: preset, family, u0, u1, add_q, a_min, a_max, b_min, b_max, a_count,\nb_count, c_values, workers, checkpoint, checkpoint_interval, and the solver and\nclassifier keys. Without a preset the four range keys are required.\nPresets: fig1_1_left fig1_1_right fig1_2_left fig1_2_right fig1_3_left\nfig1_3_right fig1_4 fig1_6_left curve1 3param."))]
    Sweep(SweepArgs),
    /// Bisect the segment between a blowup and a dispersive datum
    #[command(after_long_help = long_help("Keys: from, to (each `a,b` or `a,b,c`), precision, max_iter, ringing, r_probe,\nplus family, u0, u1, add_q and the solver and classifier keys. The endpoints\nmay be given in either order; one must blow up and the other disperse."))]
    Bisect(BisectArgs),
    /// Render a records file as PPM images, one per C section
    #[command(after_long_help = format!("Keys: records, c, overlay (fill or contour), color_dispersive, color_blowup,\ncolor_indecisive, color_ps_plus, color_ps_minus, color_error (each #rrggbb).\n\n{TOP_HELP}"))]
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Config file of `key = value` lines
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory [default: nlkg-<command>]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GroundstateArgs {
    #[command(flatten)]
    common: Common,
    /// Shooting step [default: 1e-3]
    #[arg(long)]
    dr: Option<f64>,
    /// Bracket width on the central value [default: 1e-12]
    #[arg(long)]
    tol: Option<f64>,
    /// Truncation radius [default: 20]
    #[arg(long)]
    rmax: Option<f64>,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// `sv` (implicit, energy conserving) or `explicit` [default: sv]
    #[arg(long)]
    scheme: Option<String>,
    /// Radial step [default: 0.01]
    #[arg(long)]
    dr: Option<f64>,
    /// Ratio dt/dr [default: 0.9]
    #[arg(long)]
    cfl: Option<f64>,
    /// Final time [default: 60]
    #[arg(long)]
    tfinal: Option<f64>,
    /// Radius of the region of interest [default: 5]
    #[arg(long)]
    rinterest: Option<f64>,
    /// Newton residual tolerance [default: 1e-12]
    #[arg(long)]
    newton_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct ClassifierArgs {
    /// Radius of the monitored ball [default: 5]
    #[arg(long)]
    r_monitor: Option<f64>,
    /// Step cap, or `auto` to run to the final time [default: auto]
    #[arg(long)]
    max_steps: Option<String>,
    /// Monitor events the small-norm condition must hold [default: 200]
    #[arg(long)]
    sustain_window: Option<usize>,
    /// Steps between norm evaluations [default: 10]
    #[arg(long)]
    monitor_stride: Option<usize>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Builtin data family
    #[arg(long)]
    family: Option<String>,
    /// Custom u0 expression
    #[arg(long, allow_hyphen_values = true)]
    u0: Option<String>,
    /// Custom u1 expression
    #[arg(long, allow_hyphen_values = true)]
    u1: Option<String>,
    /// Add the ground state to u0
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    add_q: Option<bool>,
}

#[derive(Args, Debug)]
struct ParamArgs {
    /// Parameter A [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Parameter B [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Parameter C [default: 0]
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Steps between snapshots; 0 keeps the first and last only [default: 0]
    #[arg(long)]
    dump_every: Option<usize>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Figure preset supplying family and ranges
    #[arg(long)]
    preset: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    /// Grid points along A [default: 121]
    #[arg(long)]
    a_count: Option<usize>,
    /// Grid points along B [default: 121]
    #[arg(long)]
    b_count: Option<usize>,
    /// Worker threads, 0 for all cores
    #[arg(long, env = "NLKG_WORKERS")]
    workers: Option<usize>,
    /// Checkpoint log [default: <out>/checkpoint.log]
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

#[derive(Args, Debug)]
struct BisectArgs {
    #[command(flatten)]
    common: Common,
    /// One endpoint, `a,b` or `a,b,c`
    #[arg(long, allow_hyphen_values = true, value_name = "A,B[,C]")]
    from: Option<String>,
    /// The other endpoint
    #[arg(long, allow_hyphen_values = true, value_name = "A,B[,C]")]
    to: Option<String>,
    /// Stop once the bracket is this short [default: 1e-6]
    #[arg(long)]
    precision: Option<f64>,
    /// Maximum number of midpoints [default: 60]
    #[arg(long)]
    max_iter: Option<usize>,
    /// Also write the ringing series at the boundary estimate
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    ringing: Option<bool>,
    /// Probe radius of the ringing series [default: 0]
    #[arg(long)]
    r_probe: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    common: Common,
    /// Records CSV written by `nlkg sweep`
    #[arg(long, value_name = "FILE")]
    records: Option<PathBuf>,
    /// Render only the section with this C
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// `fill` or `contour`
    #[arg(long)]
    overlay: Option<String>,
}

/// Failure classes with distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn io(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<nlkg_core::Error> for CliError {
    fn from(e: nlkg_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

/// Collects flag values as config overrides.
#[derive(Default)]
struct Overrides(Vec<(&'static str, String)>);

impl Overrides {
    fn put(&mut self, key: &'static str, value: Option<impl ToString>) -> &mut Self {
        if let Some(v) = value {
            self.0.push((key, v.to_string()));
        }
        self
    }

    fn num(&mut self, key: &'static str, value: Option<f64>) -> &mut Self {
        self.put(key, value.map(fmt_f64))
    }

    fn solver(&mut self, s: &SolverArgs) -> &mut Self {
        self.put("scheme", s.scheme.as_ref())
            .num("dr", s.dr)
            .num("cfl", s.cfl)
            .num("t_final", s.tfinal)
            .num("r_interest", s.rinterest)
            .num("newton_tol", s.newton_tol)
    }

    fn classifier(&mut self, c: &ClassifierArgs) -> &mut Self {
        self.num("r_monitor", c.r_monitor)
            .put("max_steps", c.max_steps.as_ref())
            .put("sustain_window", c.sustain_window)
            .put("monitor_stride", c.monitor_stride)
    }

    fn data(&mut self, d: &DataArgs) -> &mut Self {
        self.put("family", d.family.as_ref())
            .put("u0", d.u0.as_ref())
            .put("u1", d.u1.as_ref())
            .put("add_q", d.add_q)
    }

    fn params(&mut self, p: &ParamArgs) -> &mut Self {
        self.num("a", p.a).num("b", p.b).num("c", p.c)
    }
}

/// Config file, then flags, then `--set` entries.
fn load_keys(common: &Common, flags: &Overrides) -> Result<(KeyValues, Option<PathBuf>), CliError> {
    let mut kv = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            KeyValues::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => KeyValues::new(),
    };
    for (k, v) in &flags.0 {
        kv.set(k, v.clone());
    }
    for entry in &common.set {
        let (k, v) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{entry}`")))?;
        kv.set(k.trim(), v.trim());
    }
    Ok((kv, common.config.clone()))
}

fn out_dir(common: &Common, command: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(format!("nlkg-{command}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Groundstate(a) => {
            let mut o = Overrides::default();
            o.num("dr", a.dr).num("tol", a.tol).num("rmax", a.rmax);
            let (kv, config) = load_keys(&a.common, &o)?;
            commands::groundstate(kv, config, &out_dir(&a.common, "groundstate"))
        }
        Command::Evolve(a) => {
            let mut o = Overrides::default();
            o.data(&a.data).params(&a.params).solver(&a.solver).put("dump_every", a.dump_every);
            let (kv, config) = load_keys(&a.common, &o)?;
            commands::evolve(kv, config, &out_dir(&a.common, "evolve"))
        }
        Command::Classify(a) => {
            let mut o = Overrides::default();
            o.data(&a.data).params(&a.params).solver(&a.solver).classifier(&a.classifier);
            let (kv, config) = load_keys(&a.common, &o)?;
            commands::classify(kv, config, &out_dir(&a.common, "classify"))
        }
        Command::Sweep(a) => {
            let mut o = Overrides::default();
            o.put("preset", a.preset.as_ref())
                .data(&a.data)
                .put("a_count", a.a_count)
                .put("b_count", a.b_count)
                .put("workers", a.workers)
                .put("checkpoint", a.checkpoint.as_ref().map(|p| p.display().to_string()))
                .solver(&a.solver)
                .classifier(&a.classifier);
            let (kv, config) = load_keys(&a.common, &o)?;
            commands::sweep(kv, config, &out_dir(&a.common, "sweep"))
        }
        Command::Bisect(a) => {
            let mut o = Overrides::default();
            o.put("from", a.from.as_ref())
                .put("to", a.to.as_ref())
                .num("precision", a.precision)
                .put("max_iter", a.max_iter)
                .put("ringing", a.ringing)
                .num("r_probe", a.r_probe)
                .data(&a.data)
                .solver(&a.solver)
                .classifier(&a.classifier);
            let (kv, config) = load_keys(&a.common, &o)?;
            commands::bisect(kv, config, &out_dir(&a.common, "bisect"))
        }
        Command::Render(a) => {
            let mut o = Overrides::default();
            o.put("records", a.records.as_ref().map(|p| p.display().to_string()))
                .num("c", a.c)
                .put("overlay", a.overlay.as_ref());
            let (kv, config) = load_keys(&a.common, &o)?;
            commands::render(kv, config, &out_dir(&a.common, "render"))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
