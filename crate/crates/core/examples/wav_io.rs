//! WAV and measurement CSV round trips.
//!
//! ```text
//! cargo run --example wav_io
//! ```

use bregman_pr::io::{read_measurements, read_wav, write_measurements, write_wav, BitDepth};
use bregman_pr::pipeline::measure;
use bregman_pr::synth::sine;
use bregman_pr::{Power, Stft, StftConfig, TimeSignal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("bregman-pr-wav-io");
    std::fs::create_dir_all(&dir)?;

    let x = sine(1000.0, 0.9, 4000, 8000)?;
    for (depth, name) in [
        (BitDepth::Pcm16, "pcm16.wav"),
        (BitDepth::Float32, "float32.wav"),
    ] {
        let path = dir.join(name);
        write_wav(&x, &path, depth)?;
        let y = read_wav(&path)?;
        let err = x
            .samples()
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!(
            "{name}: {} bytes, max error {err:.2e}",
            std::fs::metadata(&path)?.len()
        );
    }

    let loud = TimeSignal::new(vec![0.5, 1.5, -2.0, 0.25], 8000)?;
    let clipped = write_wav(&loud, dir.join("loud.wav"), BitDepth::Pcm16)?;
    println!("loud.wav: {clipped} samples clipped");

    let config = StftConfig::new(256, 64, 256)?;
    let r = measure(&x, &Stft::new(config)?, Power::Power)?;
    let path = dir.join("measurements.csv");
    write_measurements(&r, &config, &path)?;
    let back = read_measurements(&path)?;
    println!(
        "measurements.csv: {}x{} power={}, values identical: {}",
        back.measurements.frames(),
        back.measurements.bins(),
        back.measurements.power().exponent(),
        back.measurements.values() == r.values()
    );
    Ok(())
}
