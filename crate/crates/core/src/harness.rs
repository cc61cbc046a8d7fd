//! Batch experiments, error statistics and result files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de_engine::{run, DEConfig, RunRecord};
use crate::error::{ConfigError, ExportError};
use crate::kinematics::{coupler_point, joint_positions, Branch};
use crate::problem::{decode, evaluate, CaseSpec, PenaltyWeights};
use crate::strategies::StrategySpec;

/// Final errors at or above this are reported as exactly this value.
pub const ERROR_CAP: f64 = 1000.0;

/// Strictly ascending positive thresholds for cumulative error counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Thresholds(Vec<f64>);

impl Thresholds {
    pub fn new(values: Vec<f64>) -> Option<Self> {
        let ascending = values.windows(2).all(|w| w[0] < w[1]);
        let positive = values.iter().all(|v| *v > 0.0 && v.is_finite());
        (!values.is_empty() && ascending && positive).then_some(Self(values))
    }

    /// Rows used for the larger-scale problems (cases 1 and 3).
    pub fn coarse() -> Self {
        Self(vec![0.1, 1.0, 10.0, 100.0, 200.0, 500.0, 1000.0])
    }

    /// Rows used for case 2.
    pub fn fine() -> Self {
        Self(vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0])
    }

    pub fn for_case(name: &str) -> Self {
        if name.starts_with('2') {
            Self::fine()
        } else {
            Self::coarse()
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub thresholds: Vec<f64>,
    /// Errors strictly below each threshold.
    pub cumulative: Vec<usize>,
    /// Counts per interval: `[0, t0)`, `[t0, t1)`, …, `[t_last, cap)`.
    pub per_bin: Vec<usize>,
    /// Errors equal to the cap.
    pub capped: usize,
}

pub fn cap_error(e: f64) -> f64 {
    if e.is_nan() || e >= ERROR_CAP {
        ERROR_CAP
    } else {
        e
    }
}

pub fn histogram(errors: &[f64], thresholds: &Thresholds) -> Histogram {
    let t = thresholds.values();
    let capped_errors: Vec<f64> = errors.iter().map(|&e| cap_error(e)).collect();
    let cumulative = t
        .iter()
        .map(|&th| capped_errors.iter().filter(|&&e| e < th).count())
        .collect();
    let capped = capped_errors.iter().filter(|&&e| e == ERROR_CAP).count();
    let mut per_bin = vec![0; t.len() + 1];
    for &e in capped_errors.iter().filter(|&&e| e < ERROR_CAP) {
        let bin = t.iter().position(|&th| e < th).unwrap_or(t.len());
        per_bin[bin] += 1;
    }
    Histogram {
        thresholds: t.to_vec(),
        cumulative,
        per_bin,
        capped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub case: String,
    pub strategy: String,
    pub runs: usize,
    pub seed_base: u64,
    /// Final raw errors, capped, ordered by seed.
    pub errors: Vec<f64>,
    pub histogram: Histogram,
    pub best_run: RunRecord,
    pub mean_wall_time: f64,
    /// How the `=cap` bucket is produced.
    pub cap_semantics: String,
}

impl BatchStats {
    pub fn from_records(records: &[RunRecord], thresholds: &Thresholds, seed_base: u64) -> Self {
        assert!(!records.is_empty());
        let mut sorted: Vec<&RunRecord> = records.iter().collect();
        sorted.sort_by_key(|r| r.seed);
        let errors: Vec<f64> = sorted.iter().map(|r| cap_error(r.best_error)).collect();
        let best_run = sorted
            .iter()
            .min_by(|a, b| a.best_error.total_cmp(&b.best_error).then(a.seed.cmp(&b.seed)))
            .map(|r| (*r).clone())
            .expect("non-empty");
        Self {
            case: best_run.case.clone(),
            strategy: best_run.strategy.clone(),
            runs: records.len(),
            seed_base,
            histogram: histogram(&errors, thresholds),
            errors,
            best_run,
            mean_wall_time: sorted.iter().map(|r| r.wall_time).sum::<f64>() / records.len() as f64,
            cap_semantics: format!("final raw errors >= {ERROR_CAP} are capped to {ERROR_CAP}"),
        }
    }

    /// Runs with a capped error below `threshold`.
    pub fn count_below(&self, threshold: f64) -> usize {
        self.errors.iter().filter(|&&e| e < threshold).count()
    }

    /// Equality ignoring wall-clock time.
    pub fn same_result(&self, other: &BatchStats) -> bool {
        self.case == other.case
            && self.strategy == other.strategy
            && self.runs == other.runs
            && self.errors == other.errors
            && self.histogram == other.histogram
            && self.best_run.same_result(&other.best_run)
    }
}

/// Runs `seeds` independently in parallel; records come back in seed order.
pub fn run_seeds(
    spec: &CaseSpec,
    strategy: &StrategySpec,
    cfg: &DEConfig,
    seeds: &[u64],
) -> Result<Vec<RunRecord>, ConfigError> {
    cfg.validate()?;
    let mut records = seeds
        .par_iter()
        .map(|&seed| run(spec, strategy, &cfg.with_seed(seed)))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by_key(|r| r.seed);
    Ok(records)
}

/// `runs` independent runs with seeds `seed_base..seed_base + runs`.
pub fn batch_run(
    spec: &CaseSpec,
    strategy: &StrategySpec,
    cfg: &DEConfig,
    runs: usize,
    seed_base: u64,
) -> Result<(BatchStats, Vec<RunRecord>), ConfigError> {
    if runs < 1 {
        return Err(ConfigError::NoRuns);
    }
    let seeds: Vec<u64> = (0..runs as u64).map(|i| seed_base.wrapping_add(i)).collect();
    let records = run_seeds(spec, strategy, cfg, &seeds)?;
    let stats = BatchStats::from_records(&records, &Thresholds::for_case(&spec.name), seed_base);
    Ok((stats, records))
}

fn create(path: &Path) -> Result<BufWriter<File>, ExportError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| io_err(dir, source))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| io_err(path, source))
}

fn io_err(path: &Path, source: std::io::Error) -> ExportError {
    ExportError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), ExportError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_record(path: &Path) -> Result<RunRecord, ExportError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Columns `generation, best_penalized, best_raw`; one row per generation.
pub fn write_history_csv(record: &RunRecord, path: &Path) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["generation", "best_penalized", "best_raw"])?;
    for (i, (p, r)) in record.history.iter().zip(&record.raw_history).enumerate() {
        w.write_record(&[(i + 1).to_string(), p.to_string(), r.to_string()])?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// One traced sample; `point` is `None` where the linkage cannot close.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub theta1: f64,
    pub point: Option<(f64, f64)>,
    pub branch: Branch,
}

/// Coupler curve of a chromosome over `samples` evenly spaced crank angles,
/// on the branch that gives the lower tracking error.
pub fn trace_vector(
    v: &[f64],
    spec: &CaseSpec,
    samples: usize,
) -> Result<Vec<TraceSample>, crate::error::CaseError> {
    let e = evaluate(v, spec, &PenaltyWeights::default())?;
    let (params, _) = decode(v, spec)?;
    let branch = e.best_branch;
    Ok((0..samples)
        .map(|i| {
            let theta1 = std::f64::consts::TAU * i as f64 / samples as f64;
            let point = coupler_point(&params, theta1, branch).ok().map(|p| (p.x, p.y));
            TraceSample {
                theta1,
                point,
                branch,
            }
        })
        .collect())
}

/// Columns `theta1, x, y, branch`; unassemblable rows have empty coordinates
/// and `unassemblable` in the branch column.
pub fn write_trace_csv(samples: &[TraceSample], path: &Path) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["theta1", "x", "y", "branch"])?;
    for s in samples {
        match s.point {
            Some((x, y)) => w.write_record(&[
                s.theta1.to_string(),
                x.to_string(),
                y.to_string(),
                s.branch.to_string(),
            ])?,
            None => w.write_record(&[
                s.theta1.to_string(),
                String::new(),
                String::new(),
                "unassemblable".into(),
            ])?,
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Target points next to the achieved coupler points.
pub fn write_targets_csv(v: &[f64], spec: &CaseSpec, path: &Path) -> Result<(), ExportError> {
    let e =
        evaluate(v, spec, &PenaltyWeights::default()).map_err(|c| io_err(path, std::io::Error::other(c)))?;
    let (params, angles) = decode(v, spec).map_err(|c| io_err(path, std::io::Error::other(c)))?;
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["index", "theta1", "target_x", "target_y", "x", "y"])?;
    for (i, (t, &theta1)) in spec.targets.iter().zip(&angles).enumerate() {
        let (x, y) = match coupler_point(&params, theta1, e.best_branch) {
            Ok(p) => (p.x.to_string(), p.y.to_string()),
            Err(_) => (String::new(), String::new()),
        };
        w.write_record(&[
            i.to_string(),
            theta1.to_string(),
            t.x.to_string(),
            t.y.to_string(),
            x,
            y,
        ])?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Joint positions at each target angle, for mechanism sketches.
pub fn write_mechanism_csv(v: &[f64], spec: &CaseSpec, path: &Path) -> Result<(), ExportError> {
    let e =
        evaluate(v, spec, &PenaltyWeights::default()).map_err(|c| io_err(path, std::io::Error::other(c)))?;
    let (params, angles) = decode(v, spec).map_err(|c| io_err(path, std::io::Error::other(c)))?;
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["index", "joint", "x", "y"])?;
    for (i, &theta1) in angles.iter().enumerate() {
        let Ok(j) = joint_positions(&params, theta1, e.best_branch) else {
            continue;
        };
        for (name, p) in [
            ("crank_pivot", j.crank_pivot),
            ("crank_tip", j.crank_tip),
            ("rocker_tip", j.rocker_tip),
            ("rocker_pivot", j.rocker_pivot),
            ("coupler_point", j.coupler_point),
        ] {
            w.write_record(&[i.to_string(), name.to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Per-run rows of a batch: `seed, best_error, best_penalized, stop_generation, wall_time`.
pub fn write_batch_csv(records: &[RunRecord], path: &Path) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "seed",
        "best_error",
        "best_penalized",
        "stop_generation",
        "wall_time",
    ])?;
    for r in records {
        w.write_record(&[
            r.seed.to_string(),
            r.best_error.to_string(),
            r.best_penalized.to_string(),
            r.stop_generation.to_string(),
            r.wall_time.to_string(),
        ])?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Columns `threshold, cumulative, per_bin`, then a final `=cap` row.
pub fn write_histogram_csv(h: &Histogram, path: &Path) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["threshold", "cumulative", "per_bin"])?;
    for (i, t) in h.thresholds.iter().enumerate() {
        w.write_record(&[
            format!("<{t}"),
            h.cumulative[i].to_string(),
            h.per_bin[i].to_string(),
        ])?;
    }
    let last = h.thresholds.last().copied().unwrap_or(0.0);
    w.write_record(&[
        format!(">={last}"),
        String::new(),
        h.per_bin[h.thresholds.len()].to_string(),
    ])?;
    w.write_record(&[format!("={ERROR_CAP}"), String::new(), h.capped.to_string()])?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes `record.json`, `history.csv`, `path.csv`, `targets.csv` and
/// `mechanism.csv` for one run into `dir`.
pub fn export_run(
    record: &RunRecord,
    spec: &CaseSpec,
    dir: &Path,
    trace_samples: usize,
) -> Result<(), ExportError> {
    write_json(record, &dir.join("record.json"))?;
    write_history_csv(record, &dir.join("history.csv"))?;
    let trace = trace_vector(&record.best_vector, spec, trace_samples)
        .map_err(|c| io_err(dir, std::io::Error::other(c)))?;
    write_trace_csv(&trace, &dir.join("path.csv"))?;
    write_targets_csv(&record.best_vector, spec, &dir.join("targets.csv"))?;
    write_mechanism_csv(&record.best_vector, spec, &dir.join("mechanism.csv"))
}
