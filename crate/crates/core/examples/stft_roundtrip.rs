//! Tight-frame STFT: analysis, synthesis, and the two Griffin-Lim projections.
//!
//! ```text
//! cargo run --example stft_roundtrip
//! ```

use bregman_pr::pipeline::measure;
use bregman_pr::stft::project_magnitude;
use bregman_pr::synth::sine;
use bregman_pr::{Power, Stft, StftConfig};

fn main() -> bregman_pr::Result<()> {
    let config = StftConfig::new(512, 128, 512)?;
    let stft = Stft::new(config)?;
    let x = sine(440.0, 0.5, 8000, 16_000)?;

    let grid = stft.analyze(&x);
    println!(
        "{} samples -> {} frames x {} bins (pad {} on each side)",
        x.len(),
        grid.frames(),
        grid.bins(),
        config.pad()
    );

    // AᴴA = I, so synthesis inverts analysis and energy is preserved
    let y = stft.istft(&grid);
    let err = x
        .samples()
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let energy: f64 = x.samples().iter().map(|v| v * v).sum();
    println!("round trip max error {err:.2e}");
    println!("‖x‖² = {energy:.6}, ‖Ax‖² = {:.6}", grid.norm_sqr());

    // P_M keeps the phase and imposes magnitudes; P_C maps back to consistent grids
    let r = measure(&x, &stft, Power::Magnitude)?;
    let mut scrambled = grid.clone();
    for (i, c) in scrambled.coeffs_mut().iter_mut().enumerate() {
        *c *= rustfft::num_complex::Complex64::from_polar(1.0, 0.7 * i as f64);
    }
    let pm = project_magnitude(&scrambled, &r)?;
    let pc = stft.project_consistent(&pm);
    let pc2 = stft.project_consistent(&pc);
    let drift: f64 = pc
        .coeffs()
        .iter()
        .zip(pc2.coeffs())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    println!("P_C is idempotent: max |P_C(P_C(g)) - P_C(g)| = {drift:.2e}");
    Ok(())
}
