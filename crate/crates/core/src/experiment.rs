//! The evaluation grid: every corpus file × SNR × method, degraded, solved and
//! scored independently. Cells may run on a worker pool; results always come
//! back in cell order (file-major, then SNR, then method).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::read_wav;
use crate::pipeline::{degrade, spectral_convergence, DegradeConfig};
use crate::signal::TimeSignal;
use crate::solver::{reconstruct, IterTrace, Method, SolverConfig};
use crate::stft::{Stft, StftConfig};

/// Environment variable capping the worker count (unset or 0: one per core).
pub const THREADS_ENV: &str = "BREGMAN_PR_THREADS";

/// The SNR sweep used when none is given, in dB.
pub const DEFAULT_SNRS: [f64; 5] = [f64::INFINITY, 20.0, 10.0, 5.0, 0.0];

pub const RESULTS_HEADER: [&str; 15] = [
    "file",
    "algo",
    "divergence",
    "orientation",
    "d",
    "snr_db",
    "step",
    "accel",
    "iterations",
    "final_sc",
    "final_j",
    "runtime_ms",
    "seed",
    "stoi",
    "error",
];

/// Name used in the `file` column of the summary rows.
pub const SUMMARY_FILE: &str = "(mean)";

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub snrs: Vec<f64>,
    pub methods: Vec<Method>,
    pub stft: StftConfig,
    pub iterations: usize,
    pub seed: u64,
    pub subtraction_floor: f64,
    /// Worker count; 0 uses the rayon default.
    pub threads: usize,
    pub keep_traces: bool,
    /// Record wall-clock runtimes. Off by default so that results are
    /// reproducible byte for byte.
    pub timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            snrs: DEFAULT_SNRS.to_vec(),
            methods: Method::roster(),
            stft: StftConfig::default(),
            iterations: 1000,
            seed: 0,
            subtraction_floor: 0.0,
            threads: 0,
            keep_traces: false,
            timings: false,
        }
    }
}

/// Worker count from [`THREADS_ENV`]; 0 when unset or unparsable.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}

#[derive(Clone, Debug)]
pub struct CorpusFile {
    pub name: String,
    pub signal: TimeSignal,
}

/// All `*.wav` files directly inside `dir`, sorted by name.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<CorpusFile>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        })
        .collect();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "corpus {} contains no .wav files",
            dir.display()
        )));
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            Ok(CorpusFile {
                name: p.file_name().unwrap().to_string_lossy().into_owned(),
                signal: read_wav(&p)?,
            })
        })
        .collect()
}

/// `inf` for the clean condition, the shortest decimal otherwise.
pub fn snr_label(snr_db: f64) -> String {
    if snr_db == f64::INFINITY {
        "inf".into()
    } else {
        format!("{snr_db}")
    }
}

pub fn parse_snr(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.eq_ignore_ascii_case("inf") || s == "+inf" {
        return Ok(f64::INFINITY);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::InvalidConfig(format!(
            "invalid SNR {s:?}, expected dB or inf"
        ))),
    }
}

/// Noise seed for one (file, SNR) pair, shared by all methods so they see the
/// same noisy signal.
pub fn noise_seed(seed: u64, file_index: usize, snr_index: usize) -> u64 {
    seed ^ (file_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (snr_index as u64 + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

#[derive(Clone, Debug)]
pub struct CellResult {
    pub final_sc: f64,
    pub final_j: f64,
    pub runtime_ms: f64,
    pub trace: Option<IterTrace>,
}

#[derive(Clone, Debug)]
pub struct ExperimentRow {
    pub file: String,
    pub method: Method,
    pub snr_db: f64,
    pub step: f64,
    pub acceleration: f64,
    pub iterations: usize,
    pub seed: u64,
    pub outcome: std::result::Result<CellResult, String>,
}

#[derive(Clone, Debug)]
pub struct SummaryRow {
    pub method: Method,
    pub snr_db: f64,
    /// `None` if any contributing cell failed.
    pub mean_sc: Option<f64>,
    pub mean_j: Option<f64>,
    pub mean_runtime_ms: Option<f64>,
}

pub fn run_experiment(corpus: &[CorpusFile], cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    if corpus.is_empty() {
        return Err(Error::InvalidConfig("empty corpus".into()));
    }
    if cfg.methods.is_empty() || cfg.snrs.is_empty() {
        return Err(Error::InvalidConfig("no methods or SNRs to run".into()));
    }
    if cfg.iterations == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    let stft = Stft::new(cfg.stft)?;
    let mut cells = Vec::new();
    for (fi, file) in corpus.iter().enumerate() {
        for (si, &snr) in cfg.snrs.iter().enumerate() {
            for method in &cfg.methods {
                cells.push((fi, file, si, snr, method));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        cells
            .par_iter()
            .map(|&(fi, file, si, snr, method)| run_cell(file, fi, si, snr, method, &stft, cfg))
            .collect()
    }))
}

fn run_cell(
    file: &CorpusFile,
    file_index: usize,
    snr_index: usize,
    snr_db: f64,
    method: &Method,
    stft: &Stft,
    cfg: &ExperimentConfig,
) -> ExperimentRow {
    let mut solver = SolverConfig::new(method.algorithm.clone());
    solver.iterations = cfg.iterations;
    solver.seed = cfg.seed;
    let outcome = (|| {
        let degrade_cfg = DegradeConfig {
            snr_db,
            seed: noise_seed(cfg.seed, file_index, snr_index),
            subtraction_floor: cfg.subtraction_floor,
        };
        let (r, _) = degrade(&file.signal, stft, method.power, &degrade_cfg)?;
        let start = Instant::now();
        let rec = reconstruct(&r, stft, &solver)?;
        let runtime_ms = if cfg.timings {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };
        let last = rec.trace.last();
        let final_j = last.objective;
        let final_sc = spectral_convergence(&r, rec.signal.samples(), stft)?;
        Ok::<_, Error>(CellResult {
            final_sc,
            final_j,
            runtime_ms,
            trace: cfg.keep_traces.then_some(rec.trace),
        })
    })();
    if let Err(e) = &outcome {
        log::warn!(
            "{} / {} / snr {}: {e}",
            file.name,
            method,
            snr_label(snr_db)
        );
    }
    ExperimentRow {
        file: file.name.clone(),
        method: method.clone(),
        snr_db,
        step: solver.step,
        acceleration: solver.acceleration,
        iterations: solver.iterations,
        seed: cfg.seed,
        outcome: outcome.map_err(|e| e.to_string()),
    }
}

/// Per-(method, SNR) means over files, in method-major order.
pub fn summarize(rows: &[ExperimentRow], cfg: &ExperimentConfig) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for method in &cfg.methods {
        for &snr in &cfg.snrs {
            let cell: Vec<_> = rows
                .iter()
                .filter(|r| &r.method == method && r.snr_db.to_bits() == snr.to_bits())
                .collect();
            let ok: Option<Vec<&CellResult>> =
                cell.iter().map(|r| r.outcome.as_ref().ok()).collect();
            let mean = |f: fn(&CellResult) -> f64| {
                ok.as_ref()
                    .filter(|v| !v.is_empty())
                    .map(|v| v.iter().map(|c| f(c)).sum::<f64>() / v.len() as f64)
            };
            out.push(SummaryRow {
                method: method.clone(),
                snr_db: snr,
                mean_sc: mean(|c| c.final_sc),
                mean_j: mean(|c| c.final_j),
                mean_runtime_ms: mean(|c| c.runtime_ms),
            });
        }
    }
    out
}

fn num_or_error(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => "error".into(),
    }
}

/// Writes the cell rows followed by the summary block.
pub fn write_results<W: Write>(
    rows: &[ExperimentRow],
    summary: &[SummaryRow],
    cfg: &ExperimentConfig,
    out: W,
) -> Result<()> {
    let csv_err = |e: csv::Error| Error::InvalidConfig(format!("writing results: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for row in rows {
        let m = &row.method;
        let ok = row.outcome.as_ref().ok();
        w.write_record([
            row.file.clone(),
            m.to_string(),
            m.divergence_label(),
            m.orientation().to_string(),
            m.power.exponent().to_string(),
            snr_label(row.snr_db),
            format!("{}", row.step),
            format!("{}", row.acceleration),
            row.iterations.to_string(),
            num_or_error(ok.map(|c| c.final_sc)),
            num_or_error(ok.map(|c| c.final_j)),
            num_or_error(ok.map(|c| c.runtime_ms)),
            row.seed.to_string(),
            String::new(),
            row.outcome.as_ref().err().cloned().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    for s in summary {
        let m = &s.method;
        let solver = SolverConfig::new(m.algorithm.clone());
        w.write_record([
            SUMMARY_FILE.to_string(),
            m.to_string(),
            m.divergence_label(),
            m.orientation().to_string(),
            m.power.exponent().to_string(),
            snr_label(s.snr_db),
            format!("{}", solver.step),
            format!("{}", solver.acceleration),
            cfg.iterations.to_string(),
            num_or_error(s.mean_sc),
            num_or_error(s.mean_j),
            num_or_error(s.mean_runtime_ms),
            cfg.seed.to_string(),
            String::new(),
            if s.mean_sc.is_some() {
                String::new()
            } else {
                "failed cells".into()
            },
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidConfig(format!("writing results: {e}")))?;
    Ok(())
}

/// File name for one cell's iteration trace.
pub fn trace_file_name(row: &ExperimentRow) -> String {
    let stem = Path::new(&row.file)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| row.file.clone());
    format!("{stem}__{}__snr{}.csv", row.method, snr_label(row.snr_db))
}
