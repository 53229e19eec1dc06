//! Reference implementations for the integration tests, written from the
//! definitions and sharing no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_signal(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn periodic_hann(w: usize) -> Vec<f64> {
    (0..w)
        .map(|l| 0.5 - 0.5 * (2.0 * PI * l as f64 / w as f64).cos())
        .collect()
}

/// `w(l) / sqrt(M · Σₙ w(l mod H + nH)²)`.
pub fn tight_window(w: usize, h: usize, m: usize) -> Vec<f64> {
    let base = periodic_hann(w);
    (0..w)
        .map(|l| {
            let s: f64 = (l % h..w).step_by(h).map(|j| base[j] * base[j]).sum();
            base[l] / (m as f64 * s).sqrt()
        })
        .collect()
}

/// Direct-DFT STFT: `W` zeros of padding on each side,
/// `floor((L + W) / H) + 1` frames, phase referenced to the frame start.
pub fn naive_stft(x: &[f64], w: usize, h: usize, m: usize) -> Vec<Vec<Complex64>> {
    let win = tight_window(w, h, m);
    let frames = (x.len() + w) / h + 1;
    let sample = |i: usize| {
        if i >= w && i - w < x.len() {
            x[i - w]
        } else {
            0.0
        }
    };
    (0..frames)
        .map(|n| {
            (0..m)
                .map(|k| {
                    (0..w)
                        .map(|j| {
                            let v = sample(n * h + j) * win[j];
                            Complex64::from_polar(v, -2.0 * PI * (k * j) as f64 / m as f64)
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}

pub fn l2(p: f64, q: f64) -> f64 {
    (p - q).powi(2)
}

pub fn kl(p: f64, q: f64) -> f64 {
    p * (p / q).ln() - p + q
}

pub fn itakura_saito(p: f64, q: f64) -> f64 {
    p / q - (p / q).ln() - 1.0
}

pub fn beta_div(beta: f64, p: f64, q: f64) -> f64 {
    (p.powf(beta) + (beta - 1.0) * q.powf(beta) - beta * p * q.powf(beta - 1.0))
        / (beta * (beta - 1.0))
}

/// A reference objective: `Σ D(r | |Ax|^d)` (or left-oriented), computed with
/// the direct DFT and the closed forms above.
pub struct RefObjective {
    pub div: fn(f64, f64) -> f64,
    pub left: bool,
    pub d: i32,
    pub r: Vec<f64>,
    pub w: usize,
    pub h: usize,
    pub m: usize,
}

impl RefObjective {
    pub fn value(&self, x: &[f64]) -> f64 {
        let grid = naive_stft(x, self.w, self.h, self.m);
        grid.iter()
            .flatten()
            .zip(&self.r)
            .map(|(z, &r)| {
                let y = z.norm().powi(self.d);
                // the all-padding frame: both sides vanish and the term is zero
                if y == 0.0 && r == 0.0 {
                    0.0
                } else if self.left {
                    (self.div)(y, r)
                } else {
                    (self.div)(r, y)
                }
            })
            .sum()
    }
}

pub fn sine(freq: f64, amp: f64, len: usize, sr: f64) -> Vec<f64> {
    (0..len)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / sr).sin())
        .collect()
}

/// Fourth-order central difference of `f` at 0.
pub fn five_point(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}
