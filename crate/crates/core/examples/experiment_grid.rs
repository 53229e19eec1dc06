//! A small file × SNR × method grid over synthetic clips, printing the
//! per-(method, SNR) mean spectral convergence and the results CSV.
//!
//! ```text
//! cargo run --release --example experiment_grid
//! ```

use bregman_pr::experiment::{
    run_experiment, summarize, write_results, CorpusFile, ExperimentConfig,
};
use bregman_pr::synth::speech_like;

fn main() -> bregman_pr::Result<()> {
    let corpus = (1..=2)
        .map(|seed| {
            Ok(CorpusFile {
                name: format!("babble{seed}.wav"),
                signal: speech_like(seed, 8000, 16_000, 0.7)?,
            })
        })
        .collect::<bregman_pr::Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        snrs: vec![f64::INFINITY, 10.0, 0.0],
        methods: ["gla", "fgla", "gd-kl-d2"]
            .iter()
            .map(|s| s.parse())
            .collect::<bregman_pr::Result<_>>()?,
        iterations: 200,
        ..Default::default()
    };
    let rows = run_experiment(&corpus, &cfg)?;
    let summary = summarize(&rows, &cfg);
    for s in &summary {
        println!(
            "{:<10} snr {:>4}: mean SC {:.4}",
            s.method.to_string(),
            bregman_pr::experiment::snr_label(s.snr_db),
            s.mean_sc.unwrap_or(f64::NAN)
        );
    }
    println!();
    write_results(&rows, &summary, &cfg, std::io::stdout())?;
    Ok(())
}
