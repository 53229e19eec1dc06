//! The noisy-measurement protocol on one clip: white noise at a target SNR,
//! spectral subtraction, reconstruction, and scoring. Measurements and the
//! reconstruction are written to a temporary directory, as the CLI would.
//!
//! ```text
//! cargo run --release --example degrade_and_evaluate [-- <snr dB>]
//! ```

use bregman_pr::io::{read_measurements, write_measurements, write_wav, BitDepth};
use bregman_pr::pipeline::{
    add_noise, empirical_snr_db, spectral_convergence, spectral_subtract, DegradeConfig,
};
use bregman_pr::solver::reconstruct;
use bregman_pr::synth::speech_like;
use bregman_pr::{Method, Power, SolverConfig, Stft, StftConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let snr: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10.0);
    let config = StftConfig::default();
    let stft = Stft::new(config)?;
    let clean = speech_like(7, 16_000, 16_000, 0.7)?;

    let (noisy, sigma) = add_noise(&clean, &DegradeConfig::new(snr, 1))?;
    println!(
        "target {snr} dB, achieved {:.2} dB, σ = {sigma:.4}",
        empirical_snr_db(&clean, &noisy)
    );

    let dir = std::env::temp_dir().join("bregman-pr-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("measurements.csv");
    let r = spectral_subtract(&noisy, sigma, &stft, Power::Power, 0.0)?;
    write_measurements(&r, &config, &path)?;
    let r = read_measurements(&path)?.measurements;

    for label in ["fgla", "gd-kl-d2"] {
        let method: Method = label.parse()?;
        let r = r.with_power(method.power);
        let rec = reconstruct(&r, &stft, &SolverConfig::new(method.algorithm))?;
        let against_measurements = spectral_convergence(&r, rec.signal.samples(), &stft)?;
        let clean_r = bregman_pr::pipeline::measure(&clean, &stft, Power::Magnitude)?;
        let against_clean = spectral_convergence(&clean_r, rec.signal.samples(), &stft)?;
        let out = dir.join(format!("{label}.wav"));
        write_wav(&rec.signal, &out, BitDepth::Float32)?;
        println!(
            "{label:<10} SC vs measurements {against_measurements:.4}, vs clean {against_clean:.4} -> {}",
            out.display()
        );
    }
    Ok(())
}
