//! Bregman divergences between nonnegative sequences, and the phase retrieval
//! objective built from them.
//!
//! ```text
//! cargo run --example divergences
//! ```

use bregman_pr::pipeline::measure;
use bregman_pr::synth::sine;
use bregman_pr::{DivergenceKind, DivergenceSpec, Objective, Orientation, Power, Stft, StftConfig};

fn main() -> bregman_pr::Result<()> {
    let p = [1.0, 2.0, 0.5, 3.0];
    let q = [1.5, 1.0, 0.5, 2.0];
    let kinds = [
        DivergenceKind::L2,
        DivergenceKind::Kl,
        DivergenceKind::Is,
        DivergenceKind::Beta(0.5),
        DivergenceKind::Beta(1.5),
    ];
    println!("{:<8} {:>12} {:>12}", "kind", "D(p|q)", "D(q|p)");
    for kind in kinds {
        let spec = DivergenceSpec::new(kind, Orientation::Right)?;
        println!(
            "{:<8} {:>12.6} {:>12.6}",
            kind.to_string(),
            spec.bregman(&p, &q)?,
            spec.bregman(&q, &p)?
        );
    }

    // β-divergences approach KL and IS at β = 1 and β = 0
    let kl = DivergenceSpec::new(DivergenceKind::Kl, Orientation::Right)?.bregman(&p, &q)?;
    let near = DivergenceSpec::new(DivergenceKind::Beta(1.0 + 1e-6), Orientation::Right)?
        .bregman(&p, &q)?;
    println!("kl {kl:.8}  beta(1+1e-6) {near:.8}");

    // Objective and gradient on a short sine
    let stft = Stft::new(StftConfig::new(64, 32, 64)?)?;
    let x = sine(500.0, 0.5, 512, 8000)?;
    let r = measure(&x, &stft, Power::Power)?;
    let objective = Objective::new(
        DivergenceSpec::new(DivergenceKind::Kl, Orientation::Right)?,
        r,
        stft,
    )?;
    let wrong: Vec<f64> = x.samples().iter().map(|v| 0.8 * v).collect();
    let grad = objective.gradient(&wrong);
    println!(
        "J(x) = {:.3e}, J(0.8x) = {:.3e}, ‖∇J(0.8x)‖ = {:.3e}",
        objective.value(x.samples()),
        objective.value(&wrong),
        grad.iter().map(|g| g * g).sum::<f64>().sqrt()
    );
    Ok(())
}
