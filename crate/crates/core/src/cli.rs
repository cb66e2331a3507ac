//! Command-line front end: `run`, `sweep`, `capacity`, `gen-mask` and
//! `dataset`.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for failures
//! while running.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::config::{config_hash, RunConfig};
use crate::error::RcError;
use crate::mask::{generate_mask, mask_degeneracy_report, MaskFamily, MaskSpec};
use crate::pipeline::{noise_seed, run_task, TaskSpec};
use crate::readout::{capacity_suite, CapacitySplit};
use crate::sweep::{landscape_export, parse_axes, run_sweep_with, snr_curve, SweepOptions};
use crate::tasks::memory_input;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

const DEFAULT_SNR_LIST: [f64; 6] = [12.0, 16.0, 20.0, 24.0, 28.0, 32.0];

#[derive(Debug, Parser)]
#[command(name = "delay-rc", version, about = "Delay-line reservoir computer simulator")]
pub struct Cli {
    /// Overrides the seed of the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory (default: output.dir of the config, else `out`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and score one reservoir point.
    Run { config: PathBuf },
    /// Grid search over the `[sweep]` section.
    Sweep {
        config: PathBuf,
        /// Two axes for landscape.csv, e.g. `f1,k`.
        #[arg(long)]
        landscape: Option<String>,
        /// SER against SNR; takes a comma list or falls back to
        /// `sweep.snr_list`, then to 12,16,…,32.
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        snr_curve: Option<Vec<f64>>,
        /// Continue from the checkpoint of an interrupted sweep.
        #[arg(long)]
        resume: bool,
        #[arg(long, hide = true)]
        stop_after: Option<usize>,
    },
    /// Linear, quadratic and cross memory capacities.
    Capacity { config: PathBuf },
    /// Write an input mask to mask.csv.
    GenMask {
        #[arg(long)]
        family: MaskFamily,
        #[arg(long)]
        n_nodes: usize,
        #[arg(long, default_value_t = 1)]
        f1: usize,
        #[arg(long, default_value_t = 2)]
        f2: usize,
    },
    /// Write the task dataset of a config to dataset.csv.
    Dataset { config: PathBuf },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<RcError> for Failure {
    fn from(e: RcError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs.unwrap_or(0)).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    match pool.install(|| dispatch(&cli)) {
        Ok(()) => EXIT_OK,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run { config } => cmd_run(cli, config),
        Command::Sweep {
            config,
            landscape,
            snr_curve,
            resume,
            stop_after,
        } => cmd_sweep(cli, config, landscape.as_deref(), snr_curve.as_deref(), *resume, *stop_after),
        Command::Capacity { config } => cmd_capacity(cli, config),
        Command::GenMask { family, n_nodes, f1, f2 } => cmd_gen_mask(cli, *family, *n_nodes, *f1, *f2),
        Command::Dataset { config } => cmd_dataset(cli, config),
    }
}

fn load(cli: &Cli, path: &Path) -> CliResult<RunConfig> {
    let config = RunConfig::load(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Ok(match cli.seed {
        Some(seed) => config.with_seed(seed),
        None => config,
    })
}

fn out_dir(cli: &Cli, config: Option<&RunConfig>) -> CliResult<PathBuf> {
    let dir = cli
        .out
        .clone()
        .or_else(|| config.and_then(|c| c.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn provenance(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash} seed={seed}\n")
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    write(dir, name, &format!("{text}\n"))
}

fn cmd_run(cli: &Cli, path: &Path) -> CliResult<()> {
    let config = load(cli, path)?;
    if matches!(config.task, TaskSpec::Memory { .. }) {
        return Err(Failure::Config(format!(
            "{}: the memory task is evaluated with the `capacity` command",
            path.display()
        )));
    }
    let dir = out_dir(cli, Some(&config))?;
    let hash = config.hash();
    let mask = generate_mask(&config.mask)?;
    let metric = config.task.default_metric();
    let ev = run_task(&config.task, &mask, &config.reservoir, &config.readout, metric, config.seed)?;

    write_json(
        &dir,
        "metrics.json",
        &json!({
            "config_hash": hash,
            "seed": config.seed,
            "task": config.task.name(),
            "metric": metric.name(),
            "test_value": ev.test_value,
            "validation_nmse": ev.validation_nmse,
            "ridge": ev.readout.ridge,
            "test_len": ev.targets.len(),
        }),
    )?;
    if config.output.predictions {
        let mut csv = provenance(&hash, config.seed);
        csv.push_str("n,y,d\n");
        for (n, (y, d)) in ev.predictions.iter().zip(&ev.targets).enumerate() {
            let _ = writeln!(csv, "{n},{y},{d}");
        }
        write(&dir, "predictions.csv", &csv)?;
    }
    if config.output.weights {
        write(&dir, "weights.csv", &(provenance(&hash, config.seed) + &ev.readout.to_csv()))?;
    }
    println!("{} test {} = {}", config.task.name(), metric.name(), ev.test_value);
    Ok(())
}

fn cmd_sweep(
    cli: &Cli,
    path: &Path,
    landscape: Option<&str>,
    snr_list: Option<&[f64]>,
    resume: bool,
    stop_after: Option<usize>,
) -> CliResult<()> {
    let config = load(cli, path)?;
    let axes = landscape.map(parse_axes).transpose()?;
    let grid = config.sweep_grid()?;
    grid.validate()
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let dir = out_dir(cli, Some(&config))?;
    let checkpoint = dir.join("sweep.partial.jsonl");
    let options = SweepOptions {
        checkpoint: Some(checkpoint.clone()),
        resume,
        order_seed: None,
        max_new_items: stop_after,
    };
    let result = run_sweep_with(&grid, &options)?;
    write(&dir, "sweep.csv", &result.to_csv())?;
    write(&dir, "sweep_validation.csv", &result.to_validation_csv())?;
    let best = result.best_point();
    let by_validation = result.best_by_validation();
    let failures = result.failures();
    write_json(
        &dir,
        "sweep_summary.json",
        &json!({
            "config_hash": result.provenance.config_hash,
            "seed": result.provenance.seed_base,
            "replica_seeds": result.provenance.replica_seeds,
            "metric": result.metric.name(),
            "points": result.rows.len(),
            "best_point": best,
            "best_by_validation": by_validation,
            "failures": failures.iter().map(|(p, r, e)| json!({"point": p, "replica": r, "error": e})).collect::<Vec<_>>(),
        }),
    )?;
    if let Some(axes) = axes {
        write(&dir, "landscape.csv", &landscape_export(&result, axes)?)?;
    }
    if let Some(list) = snr_list {
        let list: Vec<f64> = if !list.is_empty() {
            list.to_vec()
        } else {
            config
                .sweep
                .as_ref()
                .and_then(|s| s.snr_list.clone())
                .unwrap_or_else(|| DEFAULT_SNR_LIST.to_vec())
        };
        let curve = snr_curve(&grid, &list)?;
        for w in &curve.warnings {
            eprintln!("warning: {w}");
        }
        write(&dir, "snr_curve.csv", &curve.to_csv())?;
    }
    let _ = std::fs::remove_file(&checkpoint);
    match best {
        Some(row) => println!(
            "best {} = {} at k={} f1={} f2={} alpha={} beta={} phase={}",
            result.metric.name(),
            row.mean,
            row.point.k,
            row.point.f1,
            row.point.f2,
            row.point.alpha,
            row.point.beta,
            row.point.phase
        ),
        None => println!("no grid point succeeded"),
    }
    if !failures.is_empty() {
        eprintln!("warning: {} evaluations failed; see sweep_summary.json", failures.len());
    }
    Ok(())
}

fn cmd_capacity(cli: &Cli, path: &Path) -> CliResult<()> {
    let config = load(cli, path)?;
    let TaskSpec::Memory { train, validation, test, lags } = config.task.clone() else {
        return Err(Failure::Config(format!(
            "{}: the capacity command needs task.name = \"memory\"",
            path.display()
        )));
    };
    let dir = out_dir(cli, Some(&config))?;
    let hash = config.hash();
    let split = CapacitySplit { train, validation, test };
    let washout = config.reservoir.washout;
    let len = washout + lags.max_lag().saturating_sub(washout) + split.total();
    let input = memory_input(len, config.seed).input;
    let mask = generate_mask(&config.mask)?;
    let report = capacity_suite(
        &config.reservoir,
        &mask,
        &input,
        &lags,
        &split,
        &config.readout.ridge_grid,
        noise_seed(config.seed),
    )?;
    write(&dir, "capacity.csv", &(provenance(&hash, config.seed) + &report.to_csv()))?;
    let t = report.totals;
    write_json(
        &dir,
        "capacity_totals.json",
        &json!({
            "config_hash": hash,
            "seed": config.seed,
            "n_nodes": report.n_nodes,
            "linear": t.linear,
            "quadratic": t.quadratic,
            "cross": t.cross,
            "total": t.total,
            "raw_total": t.raw_total,
        }),
    )?;
    println!(
        "capacity linear={} quadratic={} cross={} total={} (N={})",
        t.linear, t.quadratic, t.cross, t.total, report.n_nodes
    );
    Ok(())
}

fn cmd_gen_mask(cli: &Cli, family: MaskFamily, n_nodes: usize, f1: usize, f2: usize) -> CliResult<()> {
    let seed = cli.seed.unwrap_or(0);
    let spec = MaskSpec { family, n_nodes, f1, f2, seed };
    let mask = generate_mask(&spec)?;
    let dir = out_dir(cli, None)?;
    let hash = config_hash(&spec);
    write(&dir, "mask.csv", &(provenance(&hash, seed) + &mask.to_csv()))?;
    let report = mask_degeneracy_report(&mask);
    let gcd = |g: Option<usize>| g.map_or_else(|| "-".to_string(), |g| g.to_string());
    println!(
        "{} N={} duplicates={} gcd(F1,N)={} gcd(F2,N)={} gcd(F1+F2,N)={} gcd(F1-F2,N)={}",
        family.name(),
        n_nodes,
        report.duplicates.len(),
        gcd(report.gcd_f1),
        gcd(report.gcd_f2),
        gcd(report.gcd_sum),
        gcd(report.gcd_diff)
    );
    Ok(())
}

fn cmd_dataset(cli: &Cli, path: &Path) -> CliResult<()> {
    let config = load(cli, path)?;
    let dir = out_dir(cli, Some(&config))?;
    let ds = config.task.generate(config.reservoir.washout, config.seed)?;
    write(&dir, "dataset.csv", &(provenance(&config.hash(), config.seed) + &ds.to_csv()))?;
    println!("{} samples (train {}, validation {}, test {})", ds.len(), ds.split.train, ds.split.validation, ds.split.test);
    Ok(())
}
