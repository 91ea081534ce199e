use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::classify::ClassifierConfig;
use crate::config::{
    apply_classifier_keys, apply_solver_keys, fmt_f64, push, write_classifier_keys, write_solver_keys, KeyValues,
};
use crate::datafn::{builtin_family, DataFamily};
use crate::groundstate::GroundState;
use super::PointEvaluator;
use crate::scheme::SolverConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Builtin(String),
    Custom { u0: String, u1: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: FamilySpec,
    /// Adds `Q` to `u0`.
    pub add_q: bool,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub a_count: usize,
    pub b_count: usize,
    /// Empty means the single section `C = 0`.
    pub c_values: Vec<f64>,
    pub solver: SolverConfig,
    pub classifier: ClassifierConfig,
    /// Worker threads; `0` uses every available core.
    pub workers: usize,
    pub checkpoint_path: Option<PathBuf>,
    /// Records per checkpoint flush.
    pub checkpoint_interval: usize,
    /// Preset the ranges came from, recorded for the output metadata.
    pub preset: Option<String>,
}

/// Figure preset: family plus a frame chosen by trial around both PS regions.
#[derive(Debug, Clone, Copy)]
pub struct Preset {
    pub name: &'static str,
    pub family: &'static str,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub c_values: &'static [f64],
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "fig1_1_left", family: "fig1_1_left", a_range: (-5.0, 3.0), b_range: (-4.0, 4.0), c_values: &[] },
    Preset { name: "fig1_1_right", family: "fig1_1_right", a_range: (-1.5, 1.5), b_range: (-2.0, 2.0), c_values: &[] },
    Preset { name: "fig1_2_left", family: "fig1_2_left", a_range: (-4.0, 4.0), b_range: (-6.0, 6.0), c_values: &[] },
    Preset { name: "fig1_2_right", family: "fig1_2_right", a_range: (-1.5, 1.5), b_range: (-3.0, 3.0), c_values: &[] },
    Preset { name: "fig1_3_left", family: "fig1_3_left", a_range: (-6.0, 6.0), b_range: (-3.0, 3.0), c_values: &[] },
    Preset { name: "fig1_3_right", family: "fig1_3_right", a_range: (-1.0, 1.0), b_range: (-6.0, 6.0), c_values: &[] },
    Preset { name: "fig1_4", family: "fig1_4", a_range: (-4.0, 4.0), b_range: (-6.0, 6.0), c_values: &[] },
    Preset { name: "fig1_6_left", family: "fig1_6_left", a_range: (-4.0, 4.0), b_range: (-6.0, 6.0), c_values: &[] },
    Preset { name: "curve1", family: "curve1", a_range: (-6.0, 6.0), b_range: (-3.0, 3.0), c_values: &[] },
    Preset {
        name: "3param",
        family: "3param",
        a_range: (-4.0, 4.0),
        b_range: (-5.0, 5.0),
        c_values: &[9.70, 9.72, 9.74],
    },
];

pub fn preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        Error::config(format!("unknown preset `{name}`; known presets: {}", names.join(", ")))
    })
}

/// Keys understood by [`SweepConfig::from_keys`], including solver and classifier keys.
pub const SWEEP_KEYS: &[&str] = &[
    "preset",
    "family",
    "u0",
    "u1",
    "add_q",
    "a_min",
    "a_max",
    "b_min",
    "b_max",
    "a_count",
    "b_count",
    "c_values",
    "workers",
    "checkpoint",
    "checkpoint_interval",
    "scheme",
    "dr",
    "cfl",
    "newton_tol",
    "newton_max_iter",
    "t_final",
    "r_interest",
    "r_monitor",
    "blowup_factor",
    "disperse_factor",
    "sustain_window",
    "monitor_stride",
    "max_steps",
];

pub const DEFAULT_COUNT: usize = 121;

impl SweepConfig {
    /// Preset frame at the default resolution and solver settings.
    pub fn from_preset(name: &str) -> Result<Self> {
        let p = preset(name)?;
        let add_q = builtin_family(p.family)?.add_q;
        Ok(Self {
            family: FamilySpec::Builtin(p.family.to_string()),
            add_q,
            a_range: p.a_range,
            b_range: p.b_range,
            a_count: DEFAULT_COUNT,
            b_count: DEFAULT_COUNT,
            c_values: p.c_values.to_vec(),
            solver: SolverConfig::default(),
            classifier: ClassifierConfig::default(),
            workers: 0,
            checkpoint_path: None,
            checkpoint_interval: 64,
            preset: Some(name.to_string()),
        })
    }

    /// Builds a config from flat keys: a `preset` (or `family` with explicit
    /// ranges) plus any overrides. Unknown keys are rejected.
    pub fn from_keys(mut kv: KeyValues) -> Result<Self> {
        let mut cfg = match kv.take("preset") {
            Some(name) => Self::from_preset(&name)?,
            None => {
                let mut base = Self::from_preset("fig1_1_left")?;
                base.preset = None;
                if !kv.contains("family") && !kv.contains("u0") {
                    return Err(Error::config("set `preset`, `family`, or the custom pair `u0`/`u1`"));
                }
                for key in ["a_min", "a_max", "b_min", "b_max"] {
                    if !kv.contains(key) {
                        return Err(Error::config(format!("`{key}` is required without a preset")));
                    }
                }
                base
            }
        };
        take_family(&mut kv, &mut cfg.family, &mut cfg.add_q)?;
        if let Some(x) = kv.take_parsed("a_min")? {
            cfg.a_range.0 = x;
        }
        if let Some(x) = kv.take_parsed("a_max")? {
            cfg.a_range.1 = x;
        }
        if let Some(x) = kv.take_parsed("b_min")? {
            cfg.b_range.0 = x;
        }
        if let Some(x) = kv.take_parsed("b_max")? {
            cfg.b_range.1 = x;
        }
        if let Some(x) = kv.take_parsed("a_count")? {
            cfg.a_count = x;
        }
        if let Some(x) = kv.take_parsed("b_count")? {
            cfg.b_count = x;
        }
        if let Some(x) = kv.take_f64_list("c_values")? {
            cfg.c_values = x;
        }
        if let Some(x) = kv.take_parsed("workers")? {
            cfg.workers = x;
        }
        if let Some(x) = kv.take("checkpoint") {
            cfg.checkpoint_path = if x.is_empty() { None } else { Some(PathBuf::from(x)) };
        }
        if let Some(x) = kv.take_parsed("checkpoint_interval")? {
            cfg.checkpoint_interval = x;
        }
        apply_solver_keys(&mut kv, &mut cfg.solver)?;
        apply_classifier_keys(&mut kv, &mut cfg.classifier)?;
        kv.finish(SWEEP_KEYS)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_count < 2 || self.b_count < 2 {
            return Err(Error::config(format!(
                "a_count and b_count must be at least 2, got {} and {}",
                self.a_count, self.b_count
            )));
        }
        for (name, (lo, hi)) in [("a", self.a_range), ("b", self.b_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::config(format!("{name} range [{lo}, {hi}] is empty or not finite")));
            }
        }
        if let Some(c) = self.c_values.iter().find(|c| !c.is_finite()) {
            return Err(Error::config(format!("c value {c} is not finite")));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::config("checkpoint_interval must be at least 1"));
        }
        self.solver.validate()?;
        self.classifier.validate()?;
        let family = self.resolve_family()?;
        if family.uses_c() && self.c_values.is_empty() {
            return Err(Error::config(format!("family `{}` uses C; set `c_values`", family.name)));
        }
        Ok(())
    }

    /// `c_values`, or `[0]` when none are set.
    pub fn c_values(&self) -> Vec<f64> {
        if self.c_values.is_empty() {
            vec![0.0]
        } else {
            self.c_values.clone()
        }
    }

    pub fn resolve_family(&self) -> Result<DataFamily> {
        resolve(&self.family, self.add_q)
    }

    pub fn point_count(&self) -> usize {
        self.a_count * self.b_count * self.c_values().len()
    }

    /// Every setting that influences record content, as config text.
    pub fn science_text(&self) -> String {
        let mut out = String::new();
        write_family(&mut out, &self.family, self.add_q);
        push(&mut out, "a_min", fmt_f64(self.a_range.0));
        push(&mut out, "a_max", fmt_f64(self.a_range.1));
        push(&mut out, "b_min", fmt_f64(self.b_range.0));
        push(&mut out, "b_max", fmt_f64(self.b_range.1));
        push(&mut out, "a_count", self.a_count);
        push(&mut out, "b_count", self.b_count);
        let cs: Vec<String> = self.c_values.iter().map(|c| fmt_f64(*c)).collect();
        push(&mut out, "c_values", cs.join(", "));
        write_solver_keys(&mut out, &self.solver);
        write_classifier_keys(&mut out, &self.classifier);
        out
    }

    /// Complete config text; parsing it back gives an equal config.
    pub fn to_config_text(&self) -> String {
        let mut out = String::new();
        if let Some(p) = &self.preset {
            out.push_str(&format!("# ranges from preset {p}\n"));
        }
        out.push_str(&self.science_text());
        push(&mut out, "workers", self.workers);
        push(
            &mut out,
            "checkpoint",
            self.checkpoint_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
        );
        push(&mut out, "checkpoint_interval", self.checkpoint_interval);
        out
    }

    /// Digest of the record-relevant settings and the ground state in use.
    pub fn fingerprint(&self, ground: &GroundState) -> String {
        let mut h = Sha256::new();
        h.update(self.science_text().as_bytes());
        h.update(format!(
            "ground dr={} central={} j={}\n",
            fmt_f64(ground.grid().dr()),
            fmt_f64(ground.central_value()),
            fmt_f64(ground.energy_j())
        ));
        hex(&h.finalize())
    }
}

/// Reads `family` or `u0`/`u1` plus `add_q`. Choosing a builtin family resets
/// `add_q` to the family's own setting before `add_q` is applied.
fn take_family(kv: &mut KeyValues, family: &mut FamilySpec, add_q: &mut bool) -> Result<()> {
    let name = kv.take("family");
    let pair = (kv.take("u0"), kv.take("u1"));
    match (name, pair) {
        (Some(_), (Some(_), _) | (_, Some(_))) => {
            return Err(Error::config("give either `family` or `u0`/`u1`, not both"));
        }
        (Some(name), _) => {
            *add_q = builtin_family(&name)?.add_q;
            *family = FamilySpec::Builtin(name);
        }
        (None, (Some(u0), Some(u1))) => {
            *family = FamilySpec::Custom { u0, u1 };
            *add_q = false;
        }
        (None, (None, None)) => {}
        (None, _) => return Err(Error::config("custom families need both `u0` and `u1`")),
    }
    if let Some(x) = kv.take_bool("add_q")? {
        *add_q = x;
    }
    Ok(())
}

fn resolve(family: &FamilySpec, add_q: bool) -> Result<DataFamily> {
    match family {
        FamilySpec::Builtin(name) => {
            let mut f = builtin_family(name)?;
            f.add_q = add_q;
            Ok(f)
        }
        FamilySpec::Custom { u0, u1 } => DataFamily::custom(u0, u1, add_q),
    }
}

fn write_family(out: &mut String, family: &FamilySpec, add_q: bool) {
    match family {
        FamilySpec::Builtin(name) => push(out, "family", name),
        FamilySpec::Custom { u0, u1 } => {
            push(out, "u0", u0);
            push(out, "u1", u1);
        }
    }
    push(out, "add_q", add_q);
}

/// Family and evolution settings for work on single points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    pub family: FamilySpec,
    pub add_q: bool,
    pub solver: SolverConfig,
    pub classifier: ClassifierConfig,
}

/// Keys read by [`PointConfig::take_from`].
pub const POINT_KEYS: &[&str] = &[
    "family",
    "u0",
    "u1",
    "add_q",
    "scheme",
    "dr",
    "cfl",
    "newton_tol",
    "newton_max_iter",
    "t_final",
    "r_interest",
    "r_monitor",
    "blowup_factor",
    "disperse_factor",
    "sustain_window",
    "monitor_stride",
    "max_steps",
];

impl PointConfig {
    /// Consumes the point keys of `kv`, leaving any others. A family is required.
    pub fn take_from(kv: &mut KeyValues) -> Result<Self> {
        if !kv.contains("family") && !kv.contains("u0") && !kv.contains("u1") {
            return Err(Error::config("set `family` or the custom pair `u0`/`u1`"));
        }
        let mut cfg = Self {
            family: FamilySpec::Builtin(String::new()),
            add_q: false,
            solver: SolverConfig::default(),
            classifier: ClassifierConfig::default(),
        };
        take_family(kv, &mut cfg.family, &mut cfg.add_q)?;
        apply_solver_keys(kv, &mut cfg.solver)?;
        apply_classifier_keys(kv, &mut cfg.classifier)?;
        cfg.resolve_family()?;
        Ok(cfg)
    }

    pub fn resolve_family(&self) -> Result<DataFamily> {
        resolve(&self.family, self.add_q)
    }

    pub fn evaluator(&self, ground: &GroundState) -> Result<PointEvaluator> {
        PointEvaluator::new(self.resolve_family()?, self.solver, self.classifier, ground)
    }

    pub fn write_keys(&self, out: &mut String) {
        write_family(out, &self.family, self.add_q);
        write_solver_keys(out, &self.solver);
        write_classifier_keys(out, &self.classifier);
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
