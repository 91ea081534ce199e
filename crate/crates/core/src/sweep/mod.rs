//! Sweeps over rectangular `(A, B)` grids, optionally repeated for several `C`.
//!
//! Every grid point is an independent work unit. Records come back in row-major
//! `(c, b, a)` order whatever the execution order, so the output is identical for
//! any worker count. An optional checkpoint log makes interrupted sweeps resumable.

mod checkpoint;
mod config;
mod exec;
mod records;

pub use exec::resolve_workers;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::classify::{classify_evolution, Classification, ClassifierConfig, Verdict};
use crate::datafn::{DataFamily, Params};
use crate::groundstate::{GroundState, PsMembership, PsReference};
use crate::scheme::SolverConfig;
use crate::{Error, RadialGrid, Result};

pub use config::{preset, FamilySpec, PointConfig, Preset, SweepConfig, POINT_KEYS, PRESETS, SWEEP_KEYS};
pub use records::{read_records_csv, write_records, write_records_csv, RecordRow, RECORD_HEADER};

/// One classified grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// A failure to sample or evolve the datum is kept as its message.
    pub classification: std::result::Result<Classification, String>,
    /// Absent when the datum could not be sampled.
    pub ps: Option<PsMembership>,
    pub wall_time: f64,
}

impl SweepRecord {
    pub fn verdict(&self) -> Option<Verdict> {
        self.classification.as_ref().ok().map(|c| c.verdict)
    }

    /// Equality of everything except the wall time.
    pub fn same_result(&self, other: &SweepRecord) -> bool {
        self.a.to_bits() == other.a.to_bits()
            && self.b.to_bits() == other.b.to_bits()
            && self.c.to_bits() == other.c.to_bits()
            && self.classification == other.classification
            && self.ps == other.ps
    }
}

/// Samples and classifies single data of one family. Holds the ground state
/// sampled on the solver grid and `J(Q)` in the same quadrature.
#[derive(Debug, Clone)]
pub struct PointEvaluator {
    family: DataFamily,
    solver: SolverConfig,
    classifier: ClassifierConfig,
    grid: RadialGrid,
    q: Vec<f64>,
    ps: PsReference,
}

impl PointEvaluator {
    pub fn new(
        family: DataFamily,
        solver: SolverConfig,
        classifier: ClassifierConfig,
        ground: &GroundState,
    ) -> Result<Self> {
        classifier.validate()?;
        let grid = solver.grid()?;
        if classifier.r_monitor > solver.r_interest {
            return Err(Error::config(format!(
                "r_monitor = {} exceeds r_interest = {}",
                classifier.r_monitor, solver.r_interest
            )));
        }
        let q = ground.sample(&grid);
        let ps = PsReference::new(ground, &grid)?;
        Ok(Self { family, solver, classifier, grid, q, ps })
    }

    pub fn family(&self) -> &DataFamily {
        &self.family
    }

    pub fn solver(&self) -> &SolverConfig {
        &self.solver
    }

    pub fn classifier(&self) -> &ClassifierConfig {
        &self.classifier
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// The ground state on the solver grid.
    pub fn ground_samples(&self) -> &[f64] {
        &self.q
    }

    /// Same family and ground state with other solver and classifier settings.
    pub fn reconfigured(&self, solver: SolverConfig, classifier: ClassifierConfig, ground: &GroundState) -> Result<Self> {
        Self::new(self.family.clone(), solver, classifier, ground)
    }

    pub fn sample(&self, params: &Params) -> Result<(Vec<f64>, Vec<f64>)> {
        self.family.sample(&self.grid, params, Some(&self.q))
    }

    pub fn ps_membership(&self, u0: &[f64], u1: &[f64]) -> Result<PsMembership> {
        self.ps.classify(u0, u1)
    }

    pub fn classify(&self, params: &Params) -> Result<Classification> {
        let (u0, u1) = self.sample(params)?;
        classify_evolution(&u0, &u1, &self.solver, &self.classifier)
    }

    /// Full record for one point; errors end up inside the record.
    pub fn evaluate(&self, params: &Params) -> SweepRecord {
        let start = Instant::now();
        let (classification, ps) = match self.sample(params) {
            Err(e) => (Err(e.to_string()), None),
            Ok((u0, u1)) => {
                let ps = self.ps.classify(&u0, &u1).ok();
                let cls = classify_evolution(&u0, &u1, &self.solver, &self.classifier).map_err(|e| e.to_string());
                (cls, ps)
            }
        };
        SweepRecord {
            a: params.a,
            b: params.b,
            c: params.c,
            classification,
            ps,
            wall_time: start.elapsed().as_secs_f64(),
        }
    }
}

/// `n` points from `lo` to `hi` inclusive. Mirrored ranges give exactly negated values.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let d = (n - 1) as f64;
    (0..n).map(|i| (lo * (n - 1 - i) as f64 + hi * i as f64) / d).collect()
}

/// Parameter points of `cfg` in output order: row-major in `(c, b, a)`.
pub fn grid_points(cfg: &SweepConfig) -> Vec<Params> {
    let a = axis(cfg.a_range.0, cfg.a_range.1, cfg.a_count);
    let b = axis(cfg.b_range.0, cfg.b_range.1, cfg.b_count);
    let mut out = Vec::with_capacity(a.len() * b.len() * cfg.c_values().len());
    for &c in &cfg.c_values() {
        for &bv in &b {
            for &av in &a {
                out.push(Params { a: av, b: bv, c });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    /// Points classified by this call.
    pub evaluated: usize,
    /// Points taken over from the checkpoint.
    pub resumed: usize,
}

/// Classifies every point of `cfg`. With a checkpoint path the sweep resumes from
/// the log when one exists and appends to it as points complete.
pub fn run_sweep(cfg: &SweepConfig, ground: &GroundState) -> Result<SweepOutcome> {
    cfg.validate()?;
    let evaluator = PointEvaluator::new(cfg.resolve_family()?, cfg.solver, cfg.classifier, ground)?;
    let points = grid_points(cfg);
    let mut slots: Vec<Option<SweepRecord>> = vec![None; points.len()];

    let mut log = match &cfg.checkpoint_path {
        Some(path) => {
            let fingerprint = cfg.fingerprint(ground);
            let (log, done) = checkpoint::Checkpoint::open(path, &fingerprint, &points, cfg.checkpoint_interval)?;
            for (i, rec) in done {
                slots[i] = Some(rec);
            }
            Some(log)
        }
        None => None,
    };
    let resumed = slots.iter().filter(|s| s.is_some()).count();
    let pending: Vec<usize> = (0..points.len()).filter(|&i| slots[i].is_none()).collect();

    exec::run_points(&pending, cfg.workers, |i| evaluator.evaluate(&points[i]), |i, rec| {
        if let Some(log) = log.as_mut() {
            log.append(i, &rec)?;
        }
        slots[i] = Some(rec);
        Ok(())
    })?;
    if let Some(log) = log.as_mut() {
        log.flush()?;
    }
    let records: Vec<SweepRecord> = slots.into_iter().map(|s| s.expect("every point evaluated")).collect();
    Ok(SweepOutcome { records, evaluated: pending.len(), resumed })
}

/// One `(A, B)` section of a three-parameter scan.
#[derive(Debug, Clone)]
pub struct Section {
    pub c: f64,
    pub outcome: SweepOutcome,
}

/// Runs one sweep per entry of `c_values`, each with its own checkpoint file.
pub fn scan_third_parameter(cfg: &SweepConfig, ground: &GroundState) -> Result<Vec<Section>> {
    cfg.validate()?;
    cfg.c_values()
        .into_iter()
        .map(|c| {
            let mut sub = cfg.clone();
            sub.c_values = vec![c];
            sub.checkpoint_path = cfg.checkpoint_path.as_deref().map(|p| section_path(p, c));
            Ok(Section { c, outcome: run_sweep(&sub, ground)? })
        })
        .collect()
}

/// `dir/name.ext` becomes `dir/name_C<c>.ext`.
pub fn section_path(base: &Path, c: f64) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_C{c}.{}", ext.to_string_lossy()),
        None => format!("{stem}_C{c}"),
    };
    base.with_file_name(name)
}

/// Number of 4-connected components of the points with verdict `target` in one
/// `a_count × b_count` section stored in row-major `(b, a)` order.
pub fn connected_components(records: &[SweepRecord], a_count: usize, b_count: usize, target: Verdict) -> usize {
    assert_eq!(records.len(), a_count * b_count, "section size");
    let hit: Vec<bool> = records.iter().map(|r| r.verdict() == Some(target)).collect();
    let mut seen = vec![false; hit.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..hit.len() {
        if !hit[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (ia, ib) = (i % a_count, i / a_count);
            let mut next = Vec::with_capacity(4);
            if ia > 0 {
                next.push(i - 1);
            }
            if ia + 1 < a_count {
                next.push(i + 1);
            }
            if ib > 0 {
                next.push(i - a_count);
            }
            if ib + 1 < b_count {
                next.push(i + a_count);
            }
            for j in next {
                if hit[j] && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    count
}
