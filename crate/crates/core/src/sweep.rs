//! Grid search over the discrete mask/loop parameters and the continuous
//! gains, with replicated datasets, landscape export and SER-vs-SNR curves.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::config_hash;
use crate::error::{RcError, Result};
use crate::mask::{generate_mask, Mask, MaskFamily, MaskSpec};
use crate::pipeline::{evaluate_dataset, ReadoutSettings, TaskSpec};
use crate::readout::MetricKind;
use crate::reservoir::{NonlinearitySpec, ReservoirConfig, DEFAULT_WASHOUT};
use crate::tasks::TaskDataset;

/// Default feedback gains: 0.5, 0.55, …, 0.95.
pub fn default_alpha_values() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// Default input gains: 7 points log-spaced from 1e-2 to 1e1.
pub fn default_beta_values() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect()
}

fn default_replicas() -> usize {
    3
}

fn default_phases() -> Vec<f64> {
    vec![0.0]
}

fn default_washout() -> usize {
    DEFAULT_WASHOUT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub family: MaskFamily,
    pub n_nodes: usize,
    pub k_values: Vec<usize>,
    #[serde(default)]
    pub f1_values: Vec<usize>,
    #[serde(default)]
    pub f2_values: Vec<usize>,
    #[serde(default = "default_alpha_values")]
    pub alpha_values: Vec<f64>,
    #[serde(default = "default_beta_values")]
    pub beta_values: Vec<f64>,
    #[serde(default = "default_phases")]
    pub phase_values: Vec<f64>,
    pub task: TaskSpec,
    #[serde(default)]
    pub metric: Option<MetricKind>,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed_base: u64,
    /// Seed of random-family masks; the same mask is used at every point.
    #[serde(default)]
    pub mask_seed: u64,
    #[serde(default)]
    pub readout: ReadoutSettings,
    /// Nonlinearity shared by all points; its phase is replaced by the
    /// phase axis.
    #[serde(default)]
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub state_noise_std: f64,
    #[serde(default = "default_washout")]
    pub washout: usize,
}

impl SweepGrid {
    pub fn new(family: MaskFamily, n_nodes: usize, task: TaskSpec) -> Self {
        SweepGrid {
            family,
            n_nodes,
            k_values: (1..n_nodes).collect(),
            f1_values: if family.is_harmonic() { (1..=n_nodes).collect() } else { Vec::new() },
            f2_values: if family == MaskFamily::TwoSine { (1..=n_nodes).collect() } else { Vec::new() },
            alpha_values: default_alpha_values(),
            beta_values: default_beta_values(),
            phase_values: default_phases(),
            task,
            metric: None,
            replicas: default_replicas(),
            seed_base: 0,
            mask_seed: 0,
            readout: ReadoutSettings::default(),
            nonlinearity: NonlinearitySpec::default(),
            state_noise_std: 0.0,
            washout: DEFAULT_WASHOUT,
        }
    }

    pub fn metric(&self) -> MetricKind {
        self.metric.unwrap_or_else(|| self.task.default_metric())
    }

    /// Sorts and deduplicates every axis and drops axes the family ignores.
    pub fn normalized(&self) -> SweepGrid {
        fn ints(v: &[usize]) -> Vec<usize> {
            let mut v = v.to_vec();
            v.sort_unstable();
            v.dedup();
            v
        }
        fn reals(v: &[f64]) -> Vec<f64> {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| a.total_cmp(b) == Ordering::Equal);
            v
        }
        let mut g = self.clone();
        g.k_values = ints(&self.k_values);
        g.f1_values = if self.family.is_harmonic() { ints(&self.f1_values) } else { vec![0] };
        g.f2_values = if self.family == MaskFamily::TwoSine { ints(&self.f2_values) } else { vec![0] };
        g.alpha_values = reals(&self.alpha_values);
        g.beta_values = reals(&self.beta_values);
        g.phase_values = reals(&self.phase_values);
        g
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes;
        if n < 2 {
            return Err(RcError::invalid("sweep.n_nodes", format!("must be >= 2, got {n}")));
        }
        let axes: [(&str, bool); 3] = [
            ("sweep.k_values", self.k_values.is_empty()),
            ("sweep.alpha_values", self.alpha_values.is_empty()),
            ("sweep.beta_values", self.beta_values.is_empty()),
        ];
        for (name, empty) in axes {
            if empty {
                return Err(RcError::invalid(name, "must not be empty"));
            }
        }
        if self.phase_values.is_empty() {
            return Err(RcError::invalid("sweep.phase_values", "must not be empty"));
        }
        if let Some(k) = self.k_values.iter().find(|k| !(1..n).contains(*k)) {
            return Err(RcError::invalid("sweep.k_values", format!("must lie in [1, {}], got {k}", n - 1)));
        }
        if self.family.is_harmonic() {
            if self.f1_values.is_empty() {
                return Err(RcError::invalid("sweep.f1_values", "must not be empty"));
            }
            if let Some(f) = self.f1_values.iter().find(|f| !(1..=n).contains(*f)) {
                return Err(RcError::invalid("sweep.f1_values", format!("must lie in [1, {n}], got {f}")));
            }
        }
        if self.family == MaskFamily::TwoSine {
            if self.f2_values.is_empty() {
                return Err(RcError::invalid("sweep.f2_values", "must not be empty"));
            }
            if let Some(f) = self.f2_values.iter().find(|f| !(1..=n).contains(*f)) {
                return Err(RcError::invalid("sweep.f2_values", format!("must lie in [1, {n}], got {f}")));
            }
        }
        if let Some(a) = self.alpha_values.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
            return Err(RcError::invalid("sweep.alpha_values", format!("must be finite and >= 0, got {a}")));
        }
        if let Some(b) = self.beta_values.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
            return Err(RcError::invalid("sweep.beta_values", format!("must be finite and >= 0, got {b}")));
        }
        if let Some(p) = self.phase_values.iter().find(|p| !p.is_finite()) {
            return Err(RcError::invalid("sweep.phase_values", format!("must be finite, got {p}")));
        }
        if self.replicas == 0 {
            return Err(RcError::invalid("sweep.replicas", "must be >= 1"));
        }
        if !(self.state_noise_std >= 0.0 && self.state_noise_std.is_finite()) {
            return Err(RcError::invalid("sweep.state_noise_std", "must be finite and >= 0"));
        }
        if matches!(self.task, TaskSpec::Memory { .. }) {
            return Err(RcError::invalid("task.name", "memory capacities are not swept"));
        }
        self.nonlinearity.validate()?;
        self.readout.validate()?;
        self.task.validate()?;
        if self.points().is_empty() {
            return Err(RcError::invalid("sweep.f2_values", "every (f1, f2) pair has f1 = f2"));
        }
        Ok(())
    }

    /// Grid points in lexicographic order of `(k, f1, f2, alpha, beta, phase)`.
    /// Two-sine points with `f1 = f2` are skipped.
    pub fn points(&self) -> Vec<SweepPoint> {
        let g = self.normalized();
        let mut out = Vec::new();
        for &k in &g.k_values {
            for &f1 in &g.f1_values {
                for &f2 in &g.f2_values {
                    if g.family == MaskFamily::TwoSine && f1 == f2 {
                        continue;
                    }
                    for &alpha in &g.alpha_values {
                        for &beta in &g.beta_values {
                            for &phase in &g.phase_values {
                                out.push(SweepPoint { k, f1, f2, alpha, beta, phase });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn replica_seed(&self, replica: usize) -> u64 {
        self.seed_base.wrapping_add(replica as u64)
    }

    pub fn mask_spec(&self, point: &SweepPoint) -> MaskSpec {
        MaskSpec {
            family: self.family,
            n_nodes: self.n_nodes,
            f1: if self.family.is_harmonic() { point.f1 } else { 1 },
            f2: if self.family == MaskFamily::TwoSine { point.f2 } else { 2 },
            seed: self.mask_seed,
        }
    }

    pub fn reservoir_config(&self, point: &SweepPoint) -> ReservoirConfig {
        let mut nonlinearity = self.nonlinearity;
        nonlinearity.phase = point.phase;
        ReservoirConfig {
            n_nodes: self.n_nodes,
            offset_k: point.k,
            alpha: point.alpha,
            beta: point.beta,
            nonlinearity,
            state_noise_std: self.state_noise_std,
            washout: self.washout,
        }
    }

    pub fn hash(&self) -> String {
        config_hash(&self.normalized())
    }
}

/// One grid point. For families without a second (or any) frequency the
/// unused indices are 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub f1: usize,
    pub f2: usize,
    pub alpha: f64,
    pub beta: f64,
    pub phase: f64,
}

impl SweepPoint {
    pub fn lex_cmp(&self, other: &SweepPoint) -> Ordering {
        (self.k, self.f1, self.f2)
            .cmp(&(other.k, other.f1, other.f2))
            .then(self.alpha.total_cmp(&other.alpha))
            .then(self.beta.total_cmp(&other.beta))
            .then(self.phase.total_cmp(&other.phase))
    }

    pub fn axis(&self, axis: Axis) -> f64 {
        match axis {
            Axis::K => self.k as f64,
            Axis::F1 => self.f1 as f64,
            Axis::F2 => self.f2 as f64,
            Axis::Alpha => self.alpha,
            Axis::Beta => self.beta,
            Axis::Phase => self.phase,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    K,
    F1,
    F2,
    Alpha,
    Beta,
    Phase,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::K => "k",
            Axis::F1 => "f1",
            Axis::F2 => "f2",
            Axis::Alpha => "alpha",
            Axis::Beta => "beta",
            Axis::Phase => "phase",
        }
    }

    fn format(self, value: f64) -> String {
        match self {
            Axis::K | Axis::F1 | Axis::F2 => format!("{}", value as usize),
            _ => format!("{value}"),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = RcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "k" => Ok(Axis::K),
            "f1" => Ok(Axis::F1),
            "f2" => Ok(Axis::F2),
            "alpha" => Ok(Axis::Alpha),
            "beta" => Ok(Axis::Beta),
            "phase" => Ok(Axis::Phase),
            other => Err(RcError::UnknownAxis(other.to_string())),
        }
    }
}

/// Outcome of one (point, replica) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub value: Option<f64>,
    pub lambda: Option<f64>,
    pub validation_nmse: Option<f64>,
    pub error: Option<String>,
}

impl ReplicaOutcome {
    fn failed(err: &RcError) -> Self {
        ReplicaOutcome {
            value: None,
            lambda: None,
            validation_nmse: None,
            error: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub replicas: Vec<ReplicaOutcome>,
    /// Mean over successful replicas; infinite when none succeeded.
    pub mean: f64,
    pub std: f64,
    pub validation_mean: f64,
}

impl SweepRow {
    fn new(point: SweepPoint, replicas: Vec<ReplicaOutcome>) -> Self {
        let (mean, std) = mean_std(replicas.iter().filter_map(|r| r.value));
        let (validation_mean, _) = mean_std(replicas.iter().filter_map(|r| r.validation_nmse));
        SweepRow {
            point,
            replicas,
            mean,
            std,
            validation_mean,
        }
    }

    pub fn failed(&self) -> bool {
        self.replicas.iter().any(|r| r.error.is_some())
    }
}

/// Mean and sample standard deviation; `(inf, 0)` for an empty sequence and
/// NaN-carrying values count as failures.
fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (f64::INFINITY, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed_base: u64,
    pub replica_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub metric: MetricKind,
    pub rows: Vec<SweepRow>,
    pub provenance: Provenance,
}

/// Index of the minimal key; ties keep the lexicographically smallest point.
fn argmin_by(rows: &[SweepRow], key: impl Fn(&SweepRow) -> f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (idx, row) in rows.iter().enumerate() {
        let v = key(row);
        if v.is_nan() || v == f64::INFINITY {
            continue;
        }
        best = match best {
            None => Some(idx),
            Some(b) => {
                let bv = key(&rows[b]);
                match v.total_cmp(&bv) {
                    Ordering::Less => Some(idx),
                    Ordering::Equal if row.point.lex_cmp(&rows[b].point) == Ordering::Less => Some(idx),
                    _ => Some(b),
                }
            }
        };
    }
    best
}

impl SweepResult {
    /// Row with the lowest mean test metric.
    pub fn best_point(&self) -> Option<&SweepRow> {
        argmin_by(&self.rows, |r| r.mean).map(|i| &self.rows[i])
    }

    /// Row with the lowest mean validation NMSE, i.e. the point a user
    /// would pick without looking at the test segment.
    pub fn best_by_validation(&self) -> Option<&SweepRow> {
        argmin_by(&self.rows, |r| r.validation_mean).map(|i| &self.rows[i])
    }

    pub fn failures(&self) -> Vec<(SweepPoint, usize, String)> {
        let mut out = Vec::new();
        for row in &self.rows {
            for (r, outcome) in row.replicas.iter().enumerate() {
                if let Some(e) = &outcome.error {
                    out.push((row.point, r, e.clone()));
                }
            }
        }
        out
    }

    /// `k,f1,f2,alpha,beta,phase,lambda,replica,metric,value`, one row per
    /// point and replica with the test metric.
    pub fn to_csv(&self) -> String {
        self.csv(self.metric.name(), |o| o.value)
    }

    /// Same layout with the validation NMSE that drove the ridge choice.
    pub fn to_validation_csv(&self) -> String {
        self.csv("validation_nmse", |o| o.validation_nmse)
    }

    fn csv(&self, metric: &str, value: impl Fn(&ReplicaOutcome) -> Option<f64>) -> String {
        let mut out = format!(
            "# config_hash={} seed={}\nk,f1,f2,alpha,beta,phase,lambda,replica,metric,value\n",
            self.provenance.config_hash, self.provenance.seed_base
        );
        let fmt = |v: Option<f64>| v.map_or_else(|| "NaN".to_string(), |v| v.to_string());
        for row in &self.rows {
            let p = row.point;
            for (r, outcome) in row.replicas.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    p.k,
                    p.f1,
                    p.f2,
                    p.alpha,
                    p.beta,
                    p.phase,
                    fmt(outcome.lambda),
                    r,
                    metric,
                    fmt(value(outcome))
                );
            }
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Append-only log of completed work items.
    pub checkpoint: Option<PathBuf>,
    /// Reuse the outcomes already present in `checkpoint`.
    pub resume: bool,
    /// Shuffles the execution order; results must not change.
    pub order_seed: Option<u64>,
    /// Stop after this many newly evaluated items (for interruption tests).
    pub max_new_items: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointHeader {
    config_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointRecord {
    point: usize,
    replica: usize,
    outcome: ReplicaOutcome,
}

fn read_checkpoint(path: &Path, hash: &str) -> Result<HashMap<(usize, usize), ReplicaOutcome>> {
    let mut done = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(done),
        Err(e) => return Err(e.into()),
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        None => return Ok(done),
        Some(line) => {
            let line = line?;
            match serde_json::from_str::<CheckpointHeader>(&line) {
                Ok(h) if h.config_hash == hash => {}
                Ok(_) => {
                    return Err(RcError::invalid(
                        "sweep",
                        format!("checkpoint {} belongs to a different sweep configuration", path.display()),
                    ))
                }
                // an interrupted first write leaves a partial header
                Err(_) => return Ok(done),
            }
        }
    }
    for line in lines {
        let line = line?;
        // a torn final line from an interrupted write is ignored
        if let Ok(rec) = serde_json::from_str::<CheckpointRecord>(&line) {
            done.insert((rec.point, rec.replica), rec.outcome);
        }
    }
    Ok(done)
}

struct Checkpoint {
    file: Mutex<File>,
}

impl Checkpoint {
    fn open(path: &Path, hash: &str, fresh: bool) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let needs_header = fresh || std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = if fresh {
            File::create(path)?
        } else {
            OpenOptions::new().create(true).append(true).open(path)?
        };
        if needs_header {
            let header = serde_json::to_string(&CheckpointHeader { config_hash: hash.to_string() })
                .expect("header serializes");
            writeln!(file, "{header}")?;
            file.sync_data()?;
        } else {
            // terminate a torn line so the next record starts cleanly
            writeln!(file)?;
        }
        Ok(Checkpoint { file: Mutex::new(file) })
    }

    fn append(&self, point: usize, replica: usize, outcome: &ReplicaOutcome) -> Result<()> {
        let line = serde_json::to_string(&CheckpointRecord {
            point,
            replica,
            outcome: outcome.clone(),
        })
        .expect("record serializes");
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        writeln!(file, "{line}")?;
        file.sync_data()?;
        Ok(())
    }
}

fn evaluate_item(grid: &SweepGrid, point: &SweepPoint, dataset: &TaskDataset, mask: &Mask, seed: u64) -> ReplicaOutcome {
    let config = grid.reservoir_config(point);
    match config
        .validate()
        .and_then(|_| evaluate_dataset(dataset, mask, &config, &grid.readout, grid.metric(), seed))
    {
        Ok(ev) => ReplicaOutcome {
            value: Some(ev.test_value),
            lambda: Some(ev.readout.ridge),
            validation_nmse: Some(ev.validation_nmse),
            error: None,
        },
        Err(e) => ReplicaOutcome::failed(&e),
    }
}

pub fn run_sweep(grid: &SweepGrid) -> Result<SweepResult> {
    run_sweep_with(grid, &SweepOptions::default())
}

/// Evaluates every (point, replica) pair. Each replica has its own dataset
/// seed; the dataset for a replica is generated once and shared by all
/// points. Results depend only on the grid, never on scheduling.
pub fn run_sweep_with(grid: &SweepGrid, options: &SweepOptions) -> Result<SweepResult> {
    grid.validate()?;
    let grid = grid.normalized();
    let hash = grid.hash();
    let points = grid.points();
    let metric = grid.metric();

    let mut done = match (&options.checkpoint, options.resume) {
        (Some(path), true) => read_checkpoint(path, &hash)?,
        _ => HashMap::new(),
    };
    done.retain(|(p, r), _| *p < points.len() && *r < grid.replicas);
    let checkpoint = match &options.checkpoint {
        Some(path) => Some(Checkpoint::open(path, &hash, !options.resume)?),
        None => None,
    };

    let mut work: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..grid.replicas).map(move |r| (p, r)))
        .filter(|key| !done.contains_key(key))
        .collect();
    if let Some(seed) = options.order_seed {
        work.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let interrupted = options.max_new_items.is_some_and(|m| m < work.len());
    if let Some(max) = options.max_new_items {
        work.truncate(max);
    }

    let needed_replicas: HashSet<usize> = work.iter().map(|&(_, r)| r).collect();
    let datasets: BTreeMap<usize, std::result::Result<TaskDataset, String>> = needed_replicas
        .into_par_iter()
        .map(|r| (r, grid.task.generate(grid.washout, grid.replica_seed(r)).map_err(|e| e.to_string())))
        .collect();
    let needed_masks: HashSet<(usize, usize)> = work.iter().map(|&(p, _)| (points[p].f1, points[p].f2)).collect();
    let masks: HashMap<(usize, usize), std::result::Result<Mask, String>> = needed_masks
        .into_iter()
        .map(|(f1, f2)| {
            let spec = grid.mask_spec(&SweepPoint { k: 1, f1, f2, alpha: 0.0, beta: 0.0, phase: 0.0 });
            ((f1, f2), generate_mask(&spec).map_err(|e| e.to_string()))
        })
        .collect();

    let fresh: Vec<((usize, usize), ReplicaOutcome)> = work
        .into_par_iter()
        .map(|(p, r)| -> Result<((usize, usize), ReplicaOutcome)> {
            let point = &points[p];
            let outcome = match (&datasets[&r], &masks[&(point.f1, point.f2)]) {
                (Ok(ds), Ok(mask)) => evaluate_item(&grid, point, ds, mask, grid.replica_seed(r)),
                (Err(e), _) | (_, Err(e)) => ReplicaOutcome {
                    value: None,
                    lambda: None,
                    validation_nmse: None,
                    error: Some(e.clone()),
                },
            };
            if let Some(cp) = &checkpoint {
                cp.append(p, r, &outcome)?;
            }
            Ok(((p, r), outcome))
        })
        .collect::<Result<_>>()?;
    done.extend(fresh);

    if interrupted {
        return Err(RcError::Interrupted {
            completed: done.len(),
            total: points.len() * grid.replicas,
        });
    }

    let rows = points
        .iter()
        .enumerate()
        .map(|(p, point)| {
            let replicas = (0..grid.replicas)
                .map(|r| done.remove(&(p, r)).expect("every work item evaluated"))
                .collect();
            SweepRow::new(*point, replicas)
        })
        .collect();
    Ok(SweepResult {
        metric,
        rows,
        provenance: Provenance {
            config_hash: hash,
            seed_base: grid.seed_base,
            replica_seeds: (0..grid.replicas).map(|r| grid.replica_seed(r)).collect(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeCell {
    pub a: f64,
    pub b: f64,
    pub metric: f64,
}

/// Reduces the sweep to two axes by taking the minimal mean metric over all
/// other axes. Cells are ordered by `(axis1, axis2)`.
pub fn landscape(result: &SweepResult, axes: (Axis, Axis)) -> Result<Vec<LandscapeCell>> {
    let (a1, a2) = axes;
    if a1 == a2 {
        return Err(RcError::invalid("landscape", format!("axes must differ, got {} twice", a1.name())));
    }
    let mut cells: Vec<LandscapeCell> = Vec::new();
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    for row in &result.rows {
        let (a, b) = (row.point.axis(a1), row.point.axis(a2));
        match index.get(&(a.to_bits(), b.to_bits())) {
            Some(&i) => {
                if row.mean < cells[i].metric {
                    cells[i].metric = row.mean;
                }
            }
            None => {
                index.insert((a.to_bits(), b.to_bits()), cells.len());
                cells.push(LandscapeCell { a, b, metric: row.mean });
            }
        }
    }
    cells.sort_by(|x, y| x.a.total_cmp(&y.a).then(x.b.total_cmp(&y.b)));
    Ok(cells)
}

pub fn landscape_export(result: &SweepResult, axes: (Axis, Axis)) -> Result<String> {
    let cells = landscape(result, axes)?;
    let mut out = format!(
        "# config_hash={} seed={}\n{},{},{}\n",
        result.provenance.config_hash,
        result.provenance.seed_base,
        axes.0.name(),
        axes.1.name(),
        result.metric.name()
    );
    for c in cells {
        let _ = writeln!(out, "{},{},{}", axes.0.format(c.a), axes.1.format(c.b), c.metric);
    }
    Ok(out)
}

/// Parses `"f1,k"` into a pair of axes.
pub fn parse_axes(spec: &str) -> Result<(Axis, Axis)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(RcError::invalid("landscape", format!("expected two comma-separated axes, got `{spec}`")));
    }
    Ok((parts[0].parse()?, parts[1].parse()?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrPoint {
    pub snr_db: f64,
    pub ser_mean: f64,
    pub ser_std: f64,
    /// Gains picked on validation at this SNR.
    pub point: Option<SweepPoint>,
    pub test_len: usize,
}

impl SnrPoint {
    /// Fewer than ten expected errors on the test segment.
    pub fn unresolved(&self) -> bool {
        (self.test_len as f64) * self.ser_mean < 10.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnrCurve {
    pub points: Vec<SnrPoint>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl SnrCurve {
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# config_hash={} seed={}\nsnr_db,ser_mean,ser_std,k,f1,f2,alpha,beta,phase\n",
            self.provenance.config_hash, self.provenance.seed_base
        );
        for p in &self.points {
            let point = p.point.map_or_else(
                || ",,,,,".to_string(),
                |q| format!("{},{},{},{},{},{}", q.k, q.f1, q.f2, q.alpha, q.beta, q.phase),
            );
            let _ = writeln!(out, "{},{},{},{}", p.snr_db, p.ser_mean, p.ser_std, point);
        }
        out
    }
}

/// SER against SNR for a channel sweep. At every SNR the grid is swept, the
/// point with the best validation NMSE is kept and its mean test SER over
/// the replicas reported.
pub fn snr_curve(grid: &SweepGrid, snr_list: &[f64]) -> Result<SnrCurve> {
    let TaskSpec::Channel { test, .. } = grid.task else {
        return Err(RcError::invalid("task.name", "an SNR curve needs the channel task"));
    };
    if snr_list.is_empty() {
        return Err(RcError::invalid("snr_list", "must not be empty"));
    }
    let mut points = Vec::new();
    let mut warnings = Vec::new();
    for &snr in snr_list {
        let mut g = grid.clone();
        if let TaskSpec::Channel { snr_db, .. } = &mut g.task {
            *snr_db = snr;
        }
        g.metric = Some(MetricKind::Ser);
        let result = run_sweep(&g)?;
        let best = result.best_by_validation();
        let p = SnrPoint {
            snr_db: snr,
            ser_mean: best.map_or(f64::NAN, |r| r.mean),
            ser_std: best.map_or(f64::NAN, |r| r.std),
            point: best.map(|r| r.point),
            test_len: test,
        };
        if p.unresolved() {
            warnings.push(format!(
                "SNR {snr} dB: test length {test} times SER {} is below 10 errors; the estimate is not resolved",
                p.ser_mean
            ));
        }
        points.push(p);
    }
    let g = grid.normalized();
    Ok(SnrCurve {
        points,
        warnings,
        provenance: Provenance {
            config_hash: g.hash(),
            seed_base: g.seed_base,
            replica_seeds: (0..g.replicas).map(|r| g.replica_seed(r)).collect(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> SweepGrid {
        let mut g = SweepGrid::new(
            MaskFamily::TwoSine,
            11,
            TaskSpec::Narma10 { train: 300, validation: 100, test: 150 },
        );
        g.k_values = vec![3, 5];
        g.f1_values = vec![1, 2];
        g.f2_values = vec![2, 3];
        g.alpha_values = vec![0.8];
        g.beta_values = vec![0.5];
        g.replicas = 2;
        g.washout = 50;
        g
    }

    #[test]
    fn default_axes() {
        let a = default_alpha_values();
        assert_eq!(a.len(), 10);
        assert_eq!(a[0], 0.5);
        assert_eq!(a[9], 0.95);
        let b = default_beta_values();
        assert_eq!(b.len(), 7);
        assert!((b[0] - 1e-2).abs() < 1e-15 && (b[6] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn skip_rule() {
        let mut g = small_grid();
        g.f1_values = vec![5, 3];
        g.f2_values = vec![3, 5];
        g.k_values = vec![2];
        let pts = g.points();
        assert_eq!(pts.len(), 2);
        assert_eq!((pts[0].f1, pts[0].f2), (3, 5));
        assert_eq!((pts[1].f1, pts[1].f2), (5, 3));
    }

    #[test]
    fn single_sine_collapses_f2() {
        let mut g = small_grid();
        g.family = MaskFamily::SingleSine;
        assert_eq!(g.points().len(), 2 * 2);
        assert!(g.points().iter().all(|p| p.f2 == 0));
    }

    #[test]
    fn order_does_not_matter() {
        let g = small_grid();
        let a = run_sweep(&g).unwrap();
        let b = run_sweep_with(&g, &SweepOptions { order_seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.len(), 2 * 3);
    }

    #[test]
    fn ties_go_to_smallest_point() {
        let g = small_grid();
        let mut r = run_sweep(&g).unwrap();
        for row in r.rows.iter_mut() {
            row.mean = 0.5;
        }
        assert_eq!(r.best_point().unwrap().point, r.rows[0].point);
        r.rows[3].mean = 0.5 - 1e-15;
        assert_eq!(r.best_point().unwrap().point, r.rows[3].point);
    }

    #[test]
    fn failed_points_do_not_abort() {
        let mut g = small_grid();
        g.readout.ridge_grid = vec![0.0];
        g.beta_values = vec![0.0, 0.5];
        let r = run_sweep(&g).unwrap();
        // beta = 0 leaves every state at zero, so the ridge-free system is singular
        assert!(r.rows.iter().filter(|row| row.point.beta == 0.0).all(|row| row.failed() && row.mean.is_infinite()));
        assert!(r.best_point().unwrap().point.beta == 0.5);
        assert!(r.to_csv().contains("NaN"));
    }

    #[test]
    fn landscape_reduces_by_min() {
        let g = small_grid();
        let r = run_sweep(&g).unwrap();
        let cells = landscape(&r, (Axis::F1, Axis::K)).unwrap();
        assert_eq!(cells.len(), 2 * 2);
        let expected = r
            .rows
            .iter()
            .filter(|row| row.point.f1 == 1 && row.point.k == 3)
            .map(|row| row.mean)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(cells[0].metric, expected);
        assert!(matches!(parse_axes("f1,q"), Err(RcError::UnknownAxis(_))));
        assert!(landscape(&r, (Axis::K, Axis::K)).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        let mut g = small_grid();
        g.k_values = vec![11];
        assert!(g.validate().is_err());
        let mut g = small_grid();
        g.f1_values = vec![2];
        g.f2_values = vec![2];
        assert!(g.validate().is_err());
        let mut g = small_grid();
        g.replicas = 0;
        assert!(g.validate().is_err());
    }
}
