//! Regenerates the mini-corpus used by the experiment tests: three short
//! speech-like clips at 16 kHz, written as 16-bit PCM.
//!
//! ```text
//! cargo run --example make_corpus [-- <out dir>]
//! ```

use std::path::PathBuf;

use bregman_pr::io::{write_wav, BitDepth};
use bregman_pr::synth::speech_like;

const SAMPLE_RATE: u32 = 16_000;
const LEN: usize = 12_000;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus"));
    std::fs::create_dir_all(&dir)?;
    for seed in 1..=3u64 {
        let x = speech_like(seed, LEN, SAMPLE_RATE, 0.7)?;
        let path = dir.join(format!("babble{seed}.wav"));
        write_wav(&x, &path, BitDepth::Pcm16)?;
        println!(
            "{} ({} samples, power {:.4})",
            path.display(),
            x.len(),
            x.power()
        );
    }
    Ok(())
}
