//! Degradation and evaluation: white noise at a target SNR, oracle spectral
//! subtraction to form nonnegative measurements, and spectral convergence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::measurements::{Measurements, Power};
use crate::signal::TimeSignal;
use crate::stft::Stft;

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DegradeConfig {
    /// Target SNR in dB; `f64::INFINITY` disables the noise.
    pub snr_db: f64,
    pub seed: u64,
    /// Lower bound for the subtracted power spectrum.
    pub subtraction_floor: f64,
}

impl DegradeConfig {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            seed,
            subtraction_floor: 0.0,
        }
    }
}

/// SNR in dB between a clean signal and the difference to its noisy version.
pub fn empirical_snr_db(clean: &TimeSignal, noisy: &TimeSignal) -> f64 {
    let noise_power: f64 = clean
        .samples()
        .iter()
        .zip(noisy.samples())
        .map(|(c, n)| (n - c).powi(2))
        .sum::<f64>()
        / clean.len() as f64;
    10.0 * (clean.power() / noise_power).log10()
}

/// Adds i.i.d. Gaussian noise with `σ = sqrt(P_s · 10^{−snr/10})`,
/// `P_s = ‖x‖²/L`. Returns the noisy signal and `σ`.
pub fn add_noise(x: &TimeSignal, cfg: &DegradeConfig) -> Result<(TimeSignal, f64)> {
    if cfg.snr_db == f64::INFINITY {
        return Ok((x.clone(), 0.0));
    }
    if cfg.snr_db.is_nan() || cfg.snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidConfig(format!(
            "SNR must be a number or +inf, got {}",
            cfg.snr_db
        )));
    }
    let signal_power = x.power();
    if signal_power == 0.0 {
        return Err(Error::InvalidSignal(
            "cannot add noise at a finite SNR to a silent signal".into(),
        ));
    }
    let sigma = (signal_power * 10f64.powf(-cfg.snr_db / 10.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noisy = x
        .samples()
        .iter()
        .map(|&s| {
            let n: f64 = StandardNormal.sample(&mut rng);
            s + sigma * n
        })
        .collect();
    Ok((TimeSignal::new(noisy, x.sample_rate())?, sigma))
}

/// Clean self-measurements `|Ax|^d`.
pub fn measure(x: &TimeSignal, stft: &Stft, power: Power) -> Result<Measurements> {
    let grid = stft.analyze(x);
    let values = grid
        .coeffs()
        .iter()
        .map(|z| power.apply(z.norm()))
        .collect();
    Measurements::new(
        grid.bins(),
        grid.frames(),
        power,
        x.len(),
        x.sample_rate(),
        values,
    )
}

/// Expected per-bin power of unit-variance white noise through the normalized
/// analysis window, `‖w̃‖²`.
pub fn noise_power_per_bin(stft: &Stft, sigma: f64) -> f64 {
    sigma * sigma * stft.window().iter().map(|w| w * w).sum::<f64>()
}

/// Power spectral subtraction with half-wave rectification:
/// `p = max(|A·noisy|² − σ²‖w̃‖², floor)`, returned as `r = p^{d/2}`.
pub fn spectral_subtract(
    noisy: &TimeSignal,
    sigma: f64,
    stft: &Stft,
    power: Power,
    floor: f64,
) -> Result<Measurements> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "noise level must be nonnegative, got {sigma}"
        )));
    }
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "subtraction floor must be nonnegative, got {floor}"
        )));
    }
    if sigma == 0.0 && floor == 0.0 {
        return measure(noisy, stft, power);
    }
    let noise = noise_power_per_bin(stft, sigma);
    let grid = stft.analyze(noisy);
    let values = grid
        .coeffs()
        .iter()
        .map(|z| {
            let p = (z.norm_sqr() - noise).max(floor);
            match power {
                Power::Magnitude => p.sqrt(),
                Power::Power => p,
            }
        })
        .collect();
    Measurements::new(
        grid.bins(),
        grid.frames(),
        power,
        noisy.len(),
        noisy.sample_rate(),
        values,
    )
}

/// Noise at `cfg.snr_db` followed by spectral subtraction.
pub fn degrade(
    x: &TimeSignal,
    stft: &Stft,
    power: Power,
    cfg: &DegradeConfig,
) -> Result<(Measurements, TimeSignal)> {
    let (noisy, sigma) = add_noise(x, cfg)?;
    let r = spectral_subtract(&noisy, sigma, stft, power, cfg.subtraction_floor)?;
    Ok((r, noisy))
}

/// `E_SC = ‖r^{1/d} − |Ax|‖₂ / ‖r^{1/d}‖₂`.
pub fn spectral_convergence(r: &Measurements, x: &[f64], stft: &Stft) -> Result<f64> {
    let grid = stft.stft(x);
    if grid.bins() != r.bins() || grid.frames() != r.frames() {
        return Err(Error::ShapeMismatch(format!(
            "signal STFT is {}x{}, measurements are {}x{}",
            grid.bins(),
            grid.frames(),
            r.bins(),
            r.frames()
        )));
    }
    let power = r.power();
    let (mut num, mut den) = (0.0, 0.0);
    for (z, &v) in grid.coeffs().iter().zip(r.values()) {
        let target = power.root(v);
        num += (target - z.norm()).powi(2);
        den += target * target;
    }
    if den == 0.0 {
        return Err(Error::InvalidConfig(
            "spectral convergence is undefined for all-zero measurements".into(),
        ));
    }
    Ok((num / den).sqrt())
}
