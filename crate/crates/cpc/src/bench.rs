//! Replicated multi-solver comparison.
//!
//! Every replication draws one instance from its own RNG stream and runs the
//! requested solvers on it from `D0 = I` with a shared configuration. The
//! converged objectives are compared through [`percent_diff`].

use std::collections::hash_map::DefaultHasher;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use cpc_core::{OrthonormalMatrix, ProblemInstance, SolverConfig, SolverKind};
use serde::Serialize;

use crate::error::{HarnessError, Result};
use crate::generate::{generate_instance, replication_rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(HarnessError::Config(format!("unknown format `{other}` (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub p: usize,
    pub groups: usize,
    pub reps: usize,
    pub solvers: Vec<SolverKind>,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub output_path: Option<PathBuf>,
    pub format: OutputFormat,
    /// Replications run concurrently on this many threads.
    pub threads: usize,
}

impl BenchConfig {
    pub fn new(p: usize, groups: usize, reps: usize, solvers: Vec<SolverKind>, seed: u64) -> Self {
        let defaults = SolverConfig::default();
        Self {
            p,
            groups,
            reps,
            solvers,
            seed,
            tol: defaults.tol,
            max_iter: defaults.max_iter,
            output_path: None,
            format: OutputFormat::Csv,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(HarnessError::Config("reps must be at least 1".into()));
        }
        if self.solvers.is_empty() {
            return Err(HarnessError::Config("at least one solver is required".into()));
        }
        if self.threads == 0 {
            return Err(HarnessError::Config("threads must be at least 1".into()));
        }
        if self.p < 2 || self.groups < 1 {
            return Err(HarnessError::Config(format!(
                "need p >= 2 and G >= 1, got p = {}, G = {}",
                self.p, self.groups
            )));
        }
        self.solver_config().validate()?;
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig::with_tol(self.tol, self.max_iter)
    }

    /// Summary file written next to a CSV record file.
    pub fn summary_path(&self) -> Option<PathBuf> {
        self.output_path.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".summary.csv");
            PathBuf::from(s)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub rep: usize,
    #[serde(serialize_with = "solver_id")]
    pub solver: SolverKind,
    pub elapsed_seconds: f64,
    pub iterations: usize,
    /// Converged objective `t_k`.
    pub objective: f64,
    /// `(t_k - t_min) / t_min` within the replication (a ratio, not percent).
    pub pct_diff: f64,
}

fn solver_id<S: serde::Serializer>(k: &SolverKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.id())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    #[serde(serialize_with = "solver_id")]
    pub solver: SolverKind,
    pub mean_time: f64,
    pub mean_iterations: f64,
    /// Mean of `pct_diff` times 100.
    pub mean_pct_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BenchTable {
    pub rows: Vec<SummaryRow>,
}

impl BenchTable {
    /// Per-solver means, rows in first-appearance order.
    pub fn from_records(records: &[BenchRecord]) -> Self {
        let mut order: Vec<SolverKind> = Vec::new();
        for r in records {
            if !order.contains(&r.solver) {
                order.push(r.solver);
            }
        }
        let rows = order
            .into_iter()
            .map(|solver| {
                let mine: Vec<&BenchRecord> = records.iter().filter(|r| r.solver == solver).collect();
                let n = mine.len() as f64;
                SummaryRow {
                    solver,
                    mean_time: mine.iter().map(|r| r.elapsed_seconds).sum::<f64>() / n,
                    mean_iterations: mine.iter().map(|r| r.iterations as f64).sum::<f64>() / n,
                    mean_pct_diff: 100.0 * mine.iter().map(|r| r.pct_diff).sum::<f64>() / n,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn row(&self, solver: SolverKind) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.solver == solver)
    }
}

/// `(t_k - t_min) / t_min` for every entry; the minimum maps to exactly 0.
pub fn percent_diff<K: Clone>(objectives: &[(K, f64)]) -> Result<Vec<(K, f64)>> {
    if objectives.is_empty() {
        return Err(HarnessError::Config("percent_diff needs at least one objective".into()));
    }
    if let Some((_, v)) = objectives.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
        return Err(HarnessError::Config(format!("objective values must be positive, got {v}")));
    }
    let min = objectives.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    Ok(objectives.iter().map(|(k, v)| (k.clone(), (v - min) / min)).collect())
}

/// Hash of every entry's bit pattern.
pub fn fingerprint(inst: &ProblemInstance) -> u64 {
    let mut h = DefaultHasher::new();
    inst.dim().hash(&mut h);
    for w in inst.scatter() {
        w.iter().for_each(|x| x.to_bits().hash(&mut h));
    }
    for a in inst.weights() {
        a.iter().for_each(|x| x.to_bits().hash(&mut h));
    }
    h.finish()
}

fn run_replication(cfg: &BenchConfig, rep: usize) -> Result<Vec<BenchRecord>> {
    let mut rng = replication_rng(cfg.seed, rep as u64);
    let inst = generate_instance(cfg.p, cfg.groups, &mut rng)?;
    let before = fingerprint(&inst);
    let d0 = OrthonormalMatrix::identity(cfg.p);
    let scfg = cfg.solver_config();
    let mut runs = Vec::with_capacity(cfg.solvers.len());
    for &solver in &cfg.solvers {
        let report = solver.solve(&inst, &d0, &scfg)?;
        if report.stalled {
            log::warn!("rep {rep}: {solver} line search stalled after {} iterations", report.iterations);
        }
        runs.push(report);
    }
    debug_assert_eq!(before, fingerprint(&inst));
    let objectives: Vec<(usize, f64)> = runs.iter().enumerate().map(|(k, r)| (k, r.objective())).collect();
    let diffs = percent_diff(&objectives)?;
    Ok(runs
        .into_iter()
        .zip(diffs)
        .map(|(r, (_, pct_diff))| BenchRecord {
            rep,
            solver: r.solver,
            elapsed_seconds: r.elapsed_seconds,
            iterations: r.iterations,
            objective: r.objective(),
            pct_diff,
        })
        .collect())
}

/// Runs every replication and aggregates; no file output.
pub fn execute(cfg: &BenchConfig) -> Result<(Vec<BenchRecord>, BenchTable)> {
    cfg.validate()?;
    let threads = cfg.threads.min(cfg.reps);
    let mut per_rep: Vec<Option<Result<Vec<BenchRecord>>>> = (0..cfg.reps).map(|_| None).collect();
    if threads <= 1 {
        for (rep, slot) in per_rep.iter_mut().enumerate() {
            *slot = Some(run_replication(cfg, rep));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut per_rep);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let rep = next.fetch_add(1, Ordering::Relaxed);
                    if rep >= cfg.reps {
                        break;
                    }
                    let out = run_replication(cfg, rep);
                    slots.lock().unwrap()[rep] = Some(out);
                });
            }
        });
    }
    let mut records = Vec::with_capacity(cfg.reps * cfg.solvers.len());
    for slot in per_rep {
        records.extend(slot.expect("every replication ran")?);
    }
    let table = BenchTable::from_records(&records);
    Ok((records, table))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| HarnessError::io(path, e))
}

/// [`execute`] plus output files. Output files are created before any solve
/// so an unwritable path fails fast.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<(Vec<BenchRecord>, BenchTable)> {
    cfg.validate()?;
    let mut sinks = match &cfg.output_path {
        None => None,
        Some(path) => {
            let main = create(path)?;
            let summary = match cfg.format {
                OutputFormat::Csv => Some((create(&cfg.summary_path().unwrap())?, cfg.summary_path().unwrap())),
                OutputFormat::Json => None,
            };
            Some((main, path.clone(), summary))
        }
    };
    let (records, table) = execute(cfg)?;
    if let Some((main, path, summary)) = sinks.take() {
        match cfg.format {
            OutputFormat::Csv => {
                write_records_csv(main, &records).map_err(|e| HarnessError::io(&path, e))?;
                let (sink, spath) = summary.expect("summary sink opened for csv");
                write_summary_csv(sink, &table).map_err(|e| HarnessError::io(&spath, e))?;
            }
            OutputFormat::Json => {
                write_json(main, &records, &table).map_err(|e| HarnessError::io(&path, e))?;
            }
        }
    }
    Ok((records, table))
}

pub const RECORD_HEADER: [&str; 6] = ["rep", "solver", "elapsed_seconds", "iterations", "objective", "pct_diff"];
pub const SUMMARY_HEADER: [&str; 4] = ["solver", "mean_time", "mean_iterations", "mean_pct_diff"];

fn csv_error(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::other(format!("{other:?}")),
    }
}

pub fn write_records_csv<W: Write>(sink: W, records: &[BenchRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(RECORD_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record([
            r.rep.to_string(),
            r.solver.id().to_string(),
            format!("{:.6}", r.elapsed_seconds),
            r.iterations.to_string(),
            format!("{:.16e}", r.objective),
            format!("{:.16e}", r.pct_diff),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_summary_csv<W: Write>(sink: W, table: &BenchTable) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(SUMMARY_HEADER).map_err(csv_error)?;
    for r in &table.rows {
        w.write_record([
            r.solver.id().to_string(),
            format!("{:.6}", r.mean_time),
            format!("{}", r.mean_iterations),
            format!("{}", r.mean_pct_diff),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_json<W: Write>(mut sink: W, records: &[BenchRecord], table: &BenchTable) -> std::io::Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        records: &'a [BenchRecord],
        summary: &'a [SummaryRow],
    }
    serde_json::to_writer_pretty(&mut sink, &Doc { records, summary: &table.rows })?;
    sink.write_all(b"\n")?;
    sink.flush()
}
