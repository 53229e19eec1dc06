//! Accelerated gradient descent on Bregman objectives for every method in the
//! roster, on clean self-measurements of a sine.
//!
//! ```text
//! cargo run --release --example bregman_descent [-- <iterations>]
//! ```

use bregman_pr::pipeline::measure;
use bregman_pr::solver::reconstruct;
use bregman_pr::synth::sine;
use bregman_pr::{Method, SolverConfig, Stft, StftConfig};

fn main() -> bregman_pr::Result<()> {
    let iterations = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1000);
    let stft = Stft::new(StftConfig::default())?;
    let x = sine(440.0, 0.5, 22_050, 22_050)?;

    println!(
        "{:<16} {:>8} {:>6} {:>10} {:>12}",
        "method", "step", "accel", "SC", "J"
    );
    for method in Method::roster() {
        let r = measure(&x, &stft, method.power)?;
        let mut cfg = SolverConfig::new(method.algorithm.clone());
        cfg.iterations = iterations;
        let rec = reconstruct(&r, &stft, &cfg)?;
        let last = rec.trace.last();
        println!(
            "{:<16} {:>8} {:>6} {:>10.5} {:>12.4e}",
            method.to_string(),
            cfg.step,
            cfg.acceleration,
            last.spectral_convergence,
            last.objective
        );
    }
    Ok(())
}
