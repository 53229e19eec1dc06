//! The `bregman-pr` command line. Everything lives here so that tests can drive
//! [`run`] with in-memory output streams; the binary only forwards to [`main`].
//!
//! Exit codes: 0 on success, 1 on runtime failures (unreadable input, solver
//! divergence, failed experiment cells), 2 on usage errors.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiment::{
    self, load_corpus, run_experiment, summarize, trace_file_name, write_results, ExperimentConfig,
};
use crate::io::{read_measurements, read_wav, write_measurements, write_wav, BitDepth};
use crate::measurements::{Measurements, Power};
use crate::pipeline::{
    add_noise, empirical_snr_db, spectral_convergence, spectral_subtract, DegradeConfig,
};
use crate::solver::{reconstruct, Algorithm, Method, SolverConfig};
use crate::stft::{Stft, StftConfig};

#[derive(Parser, Debug)]
#[command(
    name = "bregman-pr",
    version,
    about = "Phase retrieval from STFT magnitudes or powers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reconstruct a signal from a WAV (self-measurement) or a measurement CSV.
    Reconstruct(ReconstructArgs),
    /// Add white noise at a target SNR and write spectrally subtracted measurements.
    Degrade(DegradeArgs),
    /// Run the file × SNR × method grid over a directory of WAV files.
    Experiment(ExperimentArgs),
    /// Spectral convergence of a signal against measurements.
    Evaluate(EvaluateArgs),
}

/// STFT layout flags. Unset values fall back to the measurement header, or to
/// 512/256 with the FFT size equal to the window length.
#[derive(Args, Debug, Clone, Copy, Default)]
pub struct StftArgs {
    /// Window length in samples.
    #[arg(long)]
    pub win: Option<usize>,
    /// Hop size in samples.
    #[arg(long)]
    pub hop: Option<usize>,
    /// FFT size (defaults to the window length).
    #[arg(long)]
    pub fft_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// WAV file or measurement CSV (detected from the file contents).
    #[arg(long)]
    pub input: PathBuf,
    /// Method label: gla, fgla or gd-<divergence>[left]-d<1|2>.
    #[arg(long, value_parser = parse_method)]
    pub algo: Method,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    /// Step size (gradient methods); defaults depend on the method.
    #[arg(long)]
    pub step: Option<f64>,
    /// Momentum in [0, 1); defaults depend on the method.
    #[arg(long)]
    pub accel: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Measurement exponent for WAV input (defaults to the method's).
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub d: Option<u32>,
    /// Write 16-bit PCM instead of 32-bit float.
    #[arg(long)]
    pub pcm16: bool,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Args, Debug)]
pub struct DegradeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Target SNR in dB, or `inf` for no noise.
    #[arg(long, value_parser = parse_snr, allow_hyphen_values = true)]
    pub snr: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    pub d: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Floor for the subtracted power spectrum.
    #[arg(long, default_value_t = 0.0)]
    pub floor: f64,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Directory of WAV files.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Comma-separated SNRs in dB; `inf` is the clean condition.
    #[arg(long, value_delimiter = ',', value_parser = parse_snr, default_value = "inf,20,10,5,0", allow_hyphen_values = true)]
    pub snrs: Vec<f64>,
    /// Comma-separated method labels.
    #[arg(
        long,
        value_delimiter = ',',
        value_parser = parse_method,
        default_value = "gla,fgla,gd-l2-d1,gd-beta0.5-d1,gd-kl-d2,gd-klleft-d2"
    )]
    pub algos: Vec<Method>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub iters: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for per-run `iter,J,SC,ms` traces.
    #[arg(long)]
    pub traces: Option<PathBuf>,
    /// Record wall-clock runtimes (makes the output run-dependent).
    #[arg(long)]
    pub timings: bool,
    #[arg(long, default_value_t = 0.0)]
    pub floor: f64,
    #[command(flatten)]
    pub stft: StftArgs,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub measurements: PathBuf,
    #[arg(long)]
    pub signal: PathBuf,
    #[command(flatten)]
    pub stft: StftArgs,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_snr(s: &str) -> Result<f64, String> {
    experiment::parse_snr(s).map_err(|e| e.to_string())
}

enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                if !text.contains("Usage:") {
                    let _ = writeln!(err, "\n{}", usage_for(&args));
                }
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = match cli.command {
        Command::Reconstruct(a) => cmd_reconstruct(a, out),
        Command::Degrade(a) => cmd_degrade(a, out),
        Command::Experiment(a) => cmd_experiment(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Usage line of the subcommand named in `args`, or of the whole program.
fn usage_for(args: &[OsString]) -> String {
    let mut cmd = <Cli as clap::CommandFactory>::command();
    cmd.build();
    let name = args
        .get(1)
        .and_then(|a| a.to_str())
        .unwrap_or_default()
        .to_string();
    match cmd.find_subcommand_mut(&name) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

/// Entry point for the binary: process arguments and standard streams.
pub fn main() -> i32 {
    let (stdout, stderr) = (io::stdout(), io::stderr());
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}

fn stft_from_flags(flags: StftArgs) -> CliResult<StftConfig> {
    let win = flags.win.unwrap_or(512);
    let hop = flags.hop.unwrap_or(win / 2);
    let fft = flags.fft_size.unwrap_or(win);
    StftConfig::new(win, hop, fft).map_err(|e| CliError::Usage(e.to_string()))
}

/// The header layout, checked against any flags that were given.
fn stft_from_header(header: StftConfig, flags: StftArgs) -> CliResult<StftConfig> {
    let checks = [
        ("win", flags.win, header.win_len),
        ("hop", flags.hop, header.hop),
        ("fft-size", flags.fft_size, header.fft_size),
    ];
    for (field, flag, value) in checks {
        if let Some(flag) = flag {
            if flag != value {
                return Err(CliError::Usage(format!(
                    "--{field} {flag} does not match the measurement header ({field}={value})"
                )));
            }
        }
    }
    Ok(header)
}

fn is_wav(path: &Path) -> CliResult<bool> {
    let mut magic = [0u8; 4];
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let n = f.read(&mut magic).map_err(|e| Error::io(path, e))?;
    Ok(n == 4 && &magic == b"RIFF")
}

fn power_arg(d: u32) -> Power {
    Power::from_exponent(d).expect("clap restricts d to 1 or 2")
}

fn cmd_reconstruct(a: ReconstructArgs, out: &mut dyn Write) -> CliResult<i32> {
    let method = a.algo;
    let is_gd = matches!(method.algorithm, Algorithm::BregmanGd(_));
    if let Some(d) = a.d {
        if is_gd && d != method.power.exponent() {
            return Err(CliError::Usage(format!(
                "--d {d} conflicts with method {method}"
            )));
        }
    }
    let (r, config) = if is_wav(&a.input)? {
        let x = read_wav(&a.input)?;
        let config = stft_from_flags(a.stft)?;
        let power = a.d.map(power_arg).unwrap_or(method.power);
        let stft = Stft::new(config)?;
        (crate::pipeline::measure(&x, &stft, power)?, config)
    } else {
        let file = read_measurements(&a.input)?;
        let config = stft_from_header(file.stft, a.stft)?;
        if let Some(d) = a.d {
            if d != file.measurements.power().exponent() {
                return Err(CliError::Usage(format!(
                    "--d {d} does not match the measurement header (power={})",
                    file.measurements.power().exponent()
                )));
            }
        }
        (file.measurements, config)
    };
    let stft = Stft::new(config)?;
    let r: Measurements = if is_gd { r.with_power(method.power) } else { r };

    let mut cfg = SolverConfig::new(method.algorithm.clone());
    cfg.iterations = a.iters as usize;
    cfg.seed = a.seed;
    if let Some(step) = a.step {
        cfg.step = step;
    }
    if let Some(accel) = a.accel {
        cfg.acceleration = accel;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let rec = reconstruct(&r, &stft, &cfg)?;
    let depth = if a.pcm16 {
        BitDepth::Pcm16
    } else {
        BitDepth::Float32
    };
    let clipped = write_wav(&rec.signal, &a.out, depth)?;
    if clipped > 0 {
        log::warn!(
            "{clipped} samples clipped while writing {}",
            a.out.display()
        );
    }
    let last = rec.trace.last();
    writeln!(out, "J={} SC={}", last.objective, last.spectral_convergence).ok();
    Ok(0)
}

fn cmd_degrade(a: DegradeArgs, out: &mut dyn Write) -> CliResult<i32> {
    let x = read_wav(&a.input)?;
    let config = stft_from_flags(a.stft)?;
    let stft = Stft::new(config)?;
    let cfg = DegradeConfig {
        snr_db: a.snr,
        seed: a.seed,
        subtraction_floor: a.floor,
    };
    if !(a.floor >= 0.0 && a.floor.is_finite()) {
        return Err(CliError::Usage(format!(
            "--floor must be nonnegative, got {}",
            a.floor
        )));
    }
    let (noisy, sigma) = add_noise(&x, &cfg)?;
    let r = spectral_subtract(&noisy, sigma, &stft, power_arg(a.d), a.floor)?;
    write_measurements(&r, &config, &a.out)?;
    let snr = if sigma == 0.0 {
        f64::INFINITY
    } else {
        empirical_snr_db(&x, &noisy)
    };
    writeln!(
        out,
        "SNR={}",
        experiment::snr_label((snr * 1e3).round() / 1e3)
    )
    .ok();
    Ok(0)
}

fn cmd_experiment(a: ExperimentArgs, out: &mut dyn Write) -> CliResult<i32> {
    if !(a.floor >= 0.0 && a.floor.is_finite()) {
        return Err(CliError::Usage(format!(
            "--floor must be nonnegative, got {}",
            a.floor
        )));
    }
    let cfg = ExperimentConfig {
        snrs: a.snrs,
        methods: a.algos,
        stft: stft_from_flags(a.stft)?,
        iterations: a.iters as usize,
        seed: a.seed,
        subtraction_floor: a.floor,
        threads: experiment::threads_from_env(),
        keep_traces: a.traces.is_some(),
        timings: a.timings,
    };
    let corpus = load_corpus(&a.corpus)?;
    let rows = run_experiment(&corpus, &cfg)?;
    let summary = summarize(&rows, &cfg);
    let file = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_results(&rows, &summary, &cfg, io::BufWriter::new(file))?;
    if let Some(dir) = &a.traces {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for row in &rows {
            if let Some(trace) = row.outcome.as_ref().ok().and_then(|c| c.trace.as_ref()) {
                let path = dir.join(trace_file_name(row));
                fs::write(&path, trace.to_csv(cfg.timings)).map_err(|e| Error::io(&path, e))?;
            }
        }
    }
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    writeln!(
        out,
        "{} cells ({} failed) written to {}",
        rows.len(),
        failed,
        a.out.display()
    )
    .ok();
    Ok(if failed > 0 { 1 } else { 0 })
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> CliResult<i32> {
    let file = read_measurements(&a.measurements)?;
    let config = stft_from_header(file.stft, a.stft)?;
    let x = read_wav(&a.signal)?;
    if x.sample_rate() != file.measurements.sample_rate() {
        log::warn!(
            "signal sample rate {} differs from measurement header {}",
            x.sample_rate(),
            file.measurements.sample_rate()
        );
    }
    let stft = Stft::new(config)?;
    let sc = spectral_convergence(&file.measurements, x.samples(), &stft)?;
    writeln!(out, "SC={sc:.6}").ok();
    Ok(0)
}
