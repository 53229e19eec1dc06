//! Deterministic synthetic test signals: pure tones and a crude speech-like
//! source-filter signal (voiced segments with formants, unvoiced bursts and
//! pauses).

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::signal::TimeSignal;

pub fn sine(freq_hz: f64, amplitude: f64, len: usize, sample_rate: u32) -> Result<TimeSignal> {
    let samples = (0..len)
        .map(|i| amplitude * (2.0 * PI * freq_hz * i as f64 / sample_rate as f64).sin())
        .collect();
    TimeSignal::new(samples, sample_rate)
}

/// Two-pole resonator at `freq` with bandwidth `bw` (Hz).
struct Resonator {
    a1: f64,
    a2: f64,
    gain: f64,
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn new(freq: f64, bw: f64, sample_rate: f64) -> Self {
        let r = (-PI * bw / sample_rate).exp();
        let theta = 2.0 * PI * freq / sample_rate;
        Self {
            a1: 2.0 * r * theta.cos(),
            a2: -r * r,
            gain: 1.0 - r,
            y1: 0.0,
            y2: 0.0,
        }
    }

    fn process(&mut self, x: f64) -> f64 {
        let y = self.gain * x + self.a1 * self.y1 + self.a2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// A speech-like signal of `len` samples peaking at `peak`.
///
/// Alternates voiced segments (a glottal pulse train with drifting pitch
/// through three formant resonators), unvoiced noise bursts and short pauses.
pub fn speech_like(seed: u64, len: usize, sample_rate: u32, peak: f64) -> Result<TimeSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = sample_rate as f64;
    let mut out = Vec::with_capacity(len);

    while out.len() < len {
        let kind = rng.gen_range(0..10);
        let seg_len = ((rng.gen_range(0.06..0.22) * sr) as usize).min(len - out.len());
        let fade = (0.01 * sr) as usize;
        let envelope = |i: usize| {
            let rise = (i as f64 / fade as f64).min(1.0);
            let fall = ((seg_len - i) as f64 / fade as f64).min(1.0);
            rise.min(fall)
        };
        match kind {
            // voiced
            0..=5 => {
                let f0 = rng.gen_range(95.0..230.0);
                let drift = rng.gen_range(-0.3..0.3);
                let formants = [
                    rng.gen_range(300.0..850.0),
                    rng.gen_range(900.0..2300.0),
                    rng.gen_range(2400.0..3200.0),
                ];
                let mut filters: Vec<Resonator> = formants
                    .iter()
                    .map(|&f| Resonator::new(f, 0.08 * f + 50.0, sr))
                    .collect();
                let mut phase = 0.0;
                for i in 0..seg_len {
                    let t = i as f64 / seg_len as f64;
                    let f = f0
                        * (1.0 + drift * t)
                        * (1.0 + 0.01 * (2.0 * PI * 5.0 * i as f64 / sr).sin());
                    phase += f / sr;
                    let pulse = if phase >= 1.0 {
                        phase -= 1.0;
                        1.0
                    } else {
                        0.0
                    };
                    let noise: f64 = StandardNormal.sample(&mut rng);
                    let excitation = pulse + 0.02 * noise;
                    let y: f64 = filters.iter_mut().map(|r| r.process(excitation)).sum();
                    out.push(envelope(i) * y);
                }
            }
            // unvoiced
            6..=7 => {
                let mut filter = Resonator::new(rng.gen_range(3000.0..6000.0), 1500.0, sr);
                let level = rng.gen_range(0.05..0.2);
                for i in 0..seg_len {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    out.push(envelope(i) * level * filter.process(n));
                }
            }
            // pause: low-level breath noise
            _ => {
                for _ in 0..seg_len {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    out.push(1e-4 * n);
                }
            }
        }
    }

    let max = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        out.iter_mut().for_each(|v| *v *= peak / max);
    }
    TimeSignal::new(out, sample_rate)
}
