//! Iterative reconstruction: Griffin-Lim (GLA), Fast GLA and fixed-step
//! Nesterov-accelerated gradient descent on a Bregman objective.
//!
//! Every solver is a deterministic function of the measurements, the STFT
//! layout and the [`SolverConfig`] (including its seed). Traces hold one record
//! for the initial point and one per iteration.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::divergence::{DivergenceKind, DivergenceSpec, Objective, Orientation};
use crate::error::{Error, Result};
use crate::measurements::{Measurements, Power};
use crate::signal::TimeSignal;
use crate::stft::{abs, project_magnitude_into, Stft, StftGrid};

/// Divergence guard: abort once `J` exceeds this multiple of `J(x₀)`.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub enum Algorithm {
    Gla,
    Fgla,
    BregmanGd(DivergenceSpec),
}

impl Algorithm {
    /// Step sizes (in unit-peak units, see [`run_bregman_gd`]) that stay stable
    /// on speech from clean down to 0 dB SNR.
    pub fn default_step(&self) -> f64 {
        match self {
            Algorithm::Gla | Algorithm::Fgla => 1.0,
            Algorithm::BregmanGd(spec) => match (spec.kind, spec.orientation) {
                (_, Orientation::Left) => 0.05,
                (DivergenceKind::L2, _) => 1.0,
                (DivergenceKind::Kl, _) => 0.5,
                (DivergenceKind::Is | DivergenceKind::Beta(_), _) => 1e-3,
            },
        }
    }

    pub fn default_acceleration(&self) -> f64 {
        match self {
            Algorithm::Gla => 0.0,
            Algorithm::BregmanGd(spec) if spec.orientation == Orientation::Left => 0.9,
            Algorithm::Fgla | Algorithm::BregmanGd(_) => 0.99,
        }
    }
}

/// Relative divergence floor used by method labels. Divergences whose
/// curvature blows up at zero (`is`, `beta`) need a coarse floor to be usable
/// with a fixed step, and so does left-oriented `kl` to a lesser degree.
pub fn default_floor(kind: DivergenceKind, orientation: Orientation) -> f64 {
    match (kind, orientation) {
        (DivergenceKind::Is | DivergenceKind::Beta(_), _) => 1e-2,
        (DivergenceKind::Kl, Orientation::Left) => 1e-6,
        _ => crate::divergence::EPS_DIV,
    }
}

/// An algorithm together with the measurement power it runs on, identified by
/// labels such as `gla`, `fgla`, `gd-l2-d1`, `gd-beta0.5-d1`, `gd-kl-d2` or
/// `gd-klleft-d2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Method {
    pub algorithm: Algorithm,
    pub power: Power,
}

impl Method {
    /// Gradient descent with the [`default_floor`] for the divergence.
    pub fn gd(kind: DivergenceKind, orientation: Orientation, power: Power) -> Result<Self> {
        let spec =
            DivergenceSpec::new(kind, orientation)?.with_eps(default_floor(kind, orientation))?;
        Ok(Self {
            algorithm: Algorithm::BregmanGd(spec),
            power,
        })
    }

    /// The roster compared in the experiments: both GLA baselines and the four
    /// gradient variants.
    pub fn roster() -> Vec<Method> {
        [
            "gla",
            "fgla",
            "gd-l2-d1",
            "gd-beta0.5-d1",
            "gd-kl-d2",
            "gd-klleft-d2",
        ]
        .iter()
        .map(|s| s.parse().expect("roster labels parse"))
        .collect()
    }

    pub fn divergence_label(&self) -> String {
        match &self.algorithm {
            Algorithm::Gla | Algorithm::Fgla => "l2".into(),
            Algorithm::BregmanGd(spec) => spec.kind.to_string(),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match &self.algorithm {
            Algorithm::BregmanGd(spec) => spec.orientation,
            _ => Orientation::Right,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.algorithm {
            Algorithm::Gla => f.write_str("gla"),
            Algorithm::Fgla => f.write_str("fgla"),
            Algorithm::BregmanGd(spec) => {
                write!(f, "gd-{}-d{}", spec.label(), self.power.exponent())
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || {
            Error::InvalidConfig(format!(
                "unknown algorithm label {s:?} (expected gla, fgla or gd-<l2|kl|is|beta<b>>[left]-d<1|2>)"
            ))
        };
        match s {
            "gla" => {
                return Ok(Method {
                    algorithm: Algorithm::Gla,
                    power: Power::Magnitude,
                })
            }
            "fgla" => {
                return Ok(Method {
                    algorithm: Algorithm::Fgla,
                    power: Power::Magnitude,
                })
            }
            _ => {}
        }
        let rest = s.strip_prefix("gd-").ok_or_else(unknown)?;
        let (div, d) = rest.rsplit_once('-').ok_or_else(unknown)?;
        let power = match d {
            "d1" => Power::Magnitude,
            "d2" => Power::Power,
            _ => return Err(unknown()),
        };
        let (kind, orientation) = match div.strip_suffix("left") {
            Some(kind) => (kind, Orientation::Left),
            None => (div, Orientation::Right),
        };
        let kind: DivergenceKind = kind.parse().map_err(|_| unknown())?;
        Method::gd(kind, orientation, power)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Init {
    /// `Aᴴ(r^{1/d} ⊙ e^{iφ})` with seeded uniform phases, Hermitian-symmetric per frame.
    #[default]
    RandomPhase,
    /// `Aᴴ(r^{1/d})`.
    ZeroPhase,
    /// Warm start from a caller-provided signal.
    Given(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub algorithm: Algorithm,
    /// Step size `μ` (gradient descent only).
    pub step: f64,
    /// Momentum `γ ∈ [0, 1)` (Fast GLA and gradient descent).
    pub acceleration: f64,
    pub iterations: usize,
    pub init: Init,
    pub seed: u64,
    /// Drop the momentum whenever the objective increases (gradient descent only).
    pub restart: bool,
}

impl SolverConfig {
    /// Defaults: 1000 iterations, random-phase init with seed 0, and the
    /// algorithm's default step and momentum.
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            step: algorithm.default_step(),
            acceleration: algorithm.default_acceleration(),
            algorithm,
            iterations: 1000,
            init: Init::RandomPhase,
            seed: 0,
            restart: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(0.0..1.0).contains(&self.acceleration) {
            return Err(Error::InvalidConfig(format!(
                "acceleration must be in [0, 1), got {}",
                self.acceleration
            )));
        }
        Ok(())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iteration: usize,
    /// Objective value: the Bregman objective for gradient descent, the squared
    /// inconsistency `‖r^{1/d} − |Ax|‖²` for the GLA family.
    pub objective: f64,
    pub spectral_convergence: f64,
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterTrace {
    pub records: Vec<IterRecord>,
}

impl IterTrace {
    pub fn last(&self) -> &IterRecord {
        self.records
            .last()
            .expect("trace always has the initial record")
    }

    pub fn spectral_convergence(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.spectral_convergence)
            .collect()
    }

    pub fn objective(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.objective).collect()
    }

    /// `iter,J,SC,ms` rows; timing is written as 0 unless `with_timing`.
    pub fn to_csv(&self, with_timing: bool) -> String {
        let mut out = String::from("iter,J,SC,ms\n");
        for r in &self.records {
            let ms = if with_timing { r.elapsed_ms } else { 0.0 };
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.iteration, r.objective, r.spectral_convergence, ms
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub signal: TimeSignal,
    pub trace: IterTrace,
}

/// Initial signal for a run.
pub fn init_signal(r: &Measurements, stft: &Stft, init: &Init, seed: u64) -> Result<Vec<f64>> {
    check_layout(r, stft)?;
    let bins = r.bins();
    match init {
        Init::Given(x) => {
            if x.len() != r.signal_len() {
                return Err(Error::ShapeMismatch(format!(
                    "warm start has {} samples, measurements describe {}",
                    x.len(),
                    r.signal_len()
                )));
            }
            Ok(x.clone())
        }
        Init::ZeroPhase => {
            let coeffs = r
                .magnitudes()
                .into_iter()
                .map(|m| Complex64::new(m, 0.0))
                .collect();
            let grid = StftGrid::from_coeffs(*stft.config(), r.signal_len(), coeffs)?;
            Ok(stft.istft(&grid))
        }
        Init::RandomPhase => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mags = r.magnitudes();
            let mut coeffs = vec![Complex64::default(); mags.len()];
            let tau = 2.0 * std::f64::consts::PI;
            for (frame, frame_mags) in coeffs.chunks_exact_mut(bins).zip(mags.chunks_exact(bins)) {
                // DC (and Nyquist for even sizes) must stay real
                let sign = |rng: &mut ChaCha8Rng| if rng.gen::<bool>() { 1.0 } else { -1.0 };
                frame[0] = Complex64::new(sign(&mut rng) * frame_mags[0], 0.0);
                for m in 1..bins.div_ceil(2) {
                    let phi = rng.gen_range(0.0..tau);
                    frame[m] = Complex64::from_polar(frame_mags[m], phi);
                    frame[bins - m] = Complex64::from_polar(frame_mags[bins - m], -phi);
                }
                if bins.is_multiple_of(2) {
                    let m = bins / 2;
                    frame[m] = Complex64::new(sign(&mut rng) * frame_mags[m], 0.0);
                }
            }
            let grid = StftGrid::from_coeffs(*stft.config(), r.signal_len(), coeffs)?;
            Ok(stft.istft(&grid))
        }
    }
}

fn check_layout(r: &Measurements, stft: &Stft) -> Result<()> {
    let frames = stft.frame_count(r.signal_len());
    if r.bins() != stft.config().fft_size || r.frames() != frames {
        return Err(Error::ShapeMismatch(format!(
            "measurements are {}x{}, STFT layout gives {}x{frames}",
            r.bins(),
            r.frames(),
            stft.config().fft_size
        )));
    }
    Ok(())
}

/// Tracks `‖target − |Ax|‖` against the target magnitudes.
struct Scorer {
    target: Vec<f64>,
    target_norm: f64,
    started: Instant,
}

impl Scorer {
    fn new(r: &Measurements) -> Self {
        let target = r.magnitudes();
        let target_norm = target.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            target,
            target_norm,
            started: Instant::now(),
        }
    }

    fn inconsistency_sqr(&self, grid: &StftGrid) -> f64 {
        grid.coeffs()
            .iter()
            .zip(&self.target)
            .map(|(z, t)| (t - abs(*z)).powi(2))
            .sum()
    }

    fn sc_from_sqr(&self, sqr: f64) -> f64 {
        if self.target_norm > 0.0 {
            sqr.sqrt() / self.target_norm
        } else {
            f64::NAN
        }
    }

    fn record(&self, iteration: usize, objective: f64, inconsistency_sqr: f64) -> IterRecord {
        IterRecord {
            iteration,
            objective,
            spectral_convergence: self.sc_from_sqr(inconsistency_sqr),
            elapsed_ms: self.started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

fn finish(x: Vec<f64>, r: &Measurements, trace: IterTrace) -> Result<Reconstruction> {
    Ok(Reconstruction {
        signal: TimeSignal::new(x, r.sample_rate())?,
        trace,
    })
}

/// Griffin-Lim: `x̃ ← P_C(P_M(x̃))`. Power measurements are converted to
/// magnitudes first.
pub fn run_gla(r: &Measurements, stft: &Stft, cfg: &SolverConfig) -> Result<Reconstruction> {
    run_fast_gla(
        r,
        stft,
        &SolverConfig {
            acceleration: 0.0,
            ..cfg.clone()
        },
    )
}

/// Fast Griffin-Lim: `t̃ₖ = P_C(P_M(c̃ₖ))`, `c̃ₖ₊₁ = t̃ₖ + γ(t̃ₖ − t̃ₖ₋₁)`.
/// With `γ = 0` this is exactly [`run_gla`].
pub fn run_fgla(r: &Measurements, stft: &Stft, cfg: &SolverConfig) -> Result<Reconstruction> {
    run_fast_gla(r, stft, cfg)
}

fn run_fast_gla(r: &Measurements, stft: &Stft, cfg: &SolverConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let r = r.to_magnitude();
    let gamma = cfg.acceleration;
    let mut x = init_signal(&r, stft, &cfg.init, cfg.seed)?;
    let scorer = Scorer::new(&r);
    let mut trace = IterTrace::default();

    let mut c = stft.stft(&x);
    let inc = scorer.inconsistency_sqr(&c);
    trace.records.push(scorer.record(0, inc, inc));

    let mut projected = c.clone();
    let mut t_prev: Option<StftGrid> = None;
    for k in 0..cfg.iterations {
        project_magnitude_into(&c, &scorer.target, &mut projected);
        x = stft.istft(&projected);
        let t = stft.stft(&x);
        let inc = scorer.inconsistency_sqr(&t);
        trace.records.push(scorer.record(k + 1, inc, inc));

        let prev = t_prev.as_ref().unwrap_or(&t);
        for ((ci, ti), pi) in c.coeffs_mut().iter_mut().zip(t.coeffs()).zip(prev.coeffs()) {
            *ci = ti + (ti - pi) * gamma;
        }
        t_prev = Some(t);
    }
    finish(x, &r, trace)
}

/// Accelerated gradient descent on `objective`:
/// `yₖ = xₖ + γ(xₖ − xₖ₋₁)`, `xₖ₊₁ = yₖ − μ∇J(yₖ)`.
///
/// The step `μ` is expressed for measurements normalized to unit peak
/// magnitude: the applied step is `μ · s^{2 − d·h}` with `s` the peak target
/// magnitude and `h` the divergence's homogeneity degree. For `l2` with
/// `d = 1` and for `kl` with `d = 2` the exponent is zero and `μ` is used as is.
pub fn run_bregman_gd(objective: &Objective, cfg: &SolverConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    let r = objective.measurements();
    let stft = objective.stft();
    let exponent = 2.0 - r.power().as_f64() * objective.divergence().kind.homogeneity();
    let step = cfg.step * objective.scale().powf(exponent);
    let gamma = cfg.acceleration;
    let scorer = Scorer::new(r);
    let mut trace = IterTrace::default();

    let mut x = init_signal(r, stft, &cfg.init, cfg.seed)?;
    let mut x_prev = x.clone();
    let grid = stft.stft(&x);
    let j0 = objective.value_from_grid(&grid);
    trace
        .records
        .push(scorer.record(0, j0, scorer.inconsistency_sqr(&grid)));

    let mut y = vec![0.0; x.len()];
    let mut j_prev = j0;
    for k in 0..cfg.iterations {
        for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(&x_prev) {
            *yi = xi + gamma * (xi - pi);
        }
        let grad = objective.gradient(&y);
        std::mem::swap(&mut x_prev, &mut x);
        for ((xi, yi), gi) in x.iter_mut().zip(&y).zip(&grad) {
            *xi = yi - step * gi;
        }

        let grid = stft.stft(&x);
        let j = objective.value_from_grid(&grid);
        if !j.is_finite() || (j0 > 0.0 && j > DIVERGENCE_FACTOR * j0) {
            return Err(Error::Diverged {
                iteration: k + 1,
                step: cfg.step,
                value: j,
                initial: j0,
            });
        }
        if cfg.restart && j > j_prev {
            x_prev.copy_from_slice(&x);
        }
        j_prev = j;
        trace
            .records
            .push(scorer.record(k + 1, j, scorer.inconsistency_sqr(&grid)));
    }
    finish(x, r, trace)
}

/// Runs `cfg.algorithm` on `r`.
pub fn reconstruct(r: &Measurements, stft: &Stft, cfg: &SolverConfig) -> Result<Reconstruction> {
    match &cfg.algorithm {
        Algorithm::Gla => run_gla(r, stft, cfg),
        Algorithm::Fgla => run_fgla(r, stft, cfg),
        Algorithm::BregmanGd(spec) => {
            let objective = Objective::new(*spec, r.clone(), stft.clone())?;
            run_bregman_gd(&objective, cfg)
        }
    }
}
