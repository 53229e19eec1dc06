//! Griffin-Lim and Fast Griffin-Lim on a sine, printing the spectral
//! convergence every 100 iterations.
//!
//! ```text
//! cargo run --release --example griffin_lim
//! ```

use bregman_pr::pipeline::measure;
use bregman_pr::solver::{run_fgla, run_gla};
use bregman_pr::synth::sine;
use bregman_pr::{Algorithm, Power, SolverConfig, Stft, StftConfig};

fn main() -> bregman_pr::Result<()> {
    let stft = Stft::new(StftConfig::default())?;
    let x = sine(440.0, 0.5, 22_050, 22_050)?;
    let r = measure(&x, &stft, Power::Magnitude)?;

    let gla = run_gla(&r, &stft, &SolverConfig::new(Algorithm::Gla))?;
    let fgla = run_fgla(&r, &stft, &SolverConfig::new(Algorithm::Fgla))?;
    println!("{:>5} {:>10} {:>10}", "iter", "gla", "fgla");
    for k in (0..=1000).step_by(100) {
        println!(
            "{k:>5} {:>10.5} {:>10.5}",
            gla.trace.records[k].spectral_convergence, fgla.trace.records[k].spectral_convergence
        );
    }
    Ok(())
}
