//! Tight-frame STFT analysis `A`, its adjoint `Aᴴ`, and the two Griffin-Lim
//! projections.
//!
//! The analysis window is normalized so that `M · Σₙ w̃(l − nH)² = 1` on every
//! sample of the original signal. With that normalization the overlap-add
//! synthesis using the same window is exactly the adjoint of the analysis and
//! also its left inverse: `AᴴA = I`.
//!
//! Signals are zero-padded by `W` samples on both sides before framing so that
//! every original sample is fully covered. Each frame's phase is referenced to
//! the frame start, `e^{−2iπ(m/M)(l−nH)}`, which differs from absolute-time
//! phase by a unitary per-frame diagonal and leaves all magnitudes unchanged.

use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::measurements::Measurements;
use crate::signal::TimeSignal;

/// Below this magnitude a coefficient's phase factor is taken as `1 + 0i`.
pub const EPS_MAG: f64 = 1e-12;

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum WindowKind {
    #[default]
    Hann,
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WindowKind::Hann => f.write_str("hann"),
        }
    }
}

impl std::str::FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            other => Err(Error::InvalidConfig(format!(
                "unsupported window {other:?}"
            ))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct StftConfig {
    /// Window length `W`.
    pub win_len: usize,
    /// Hop size `H`.
    pub hop: usize,
    /// Number of frequency bins `M` (two-sided DFT size).
    pub fft_size: usize,
    pub window: WindowKind,
}

impl Default for StftConfig {
    /// 512-sample Hann window, 50 % overlap.
    fn default() -> Self {
        Self {
            win_len: 512,
            hop: 256,
            fft_size: 512,
            window: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn new(win_len: usize, hop: usize, fft_size: usize) -> Result<Self> {
        let cfg = Self {
            win_len,
            hop,
            fft_size,
            window: WindowKind::Hann,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0 < self.hop && self.hop <= self.win_len && self.win_len <= self.fft_size) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < hop <= win <= fft size, got hop={} win={} fft={}",
                self.hop, self.win_len, self.fft_size
            )));
        }
        if self.win_len < 2 {
            return Err(Error::InvalidConfig(
                "window length must be at least 2".into(),
            ));
        }
        Ok(())
    }

    /// Zero-padding added on each side of the signal.
    pub fn pad(&self) -> usize {
        self.win_len
    }

    /// Number of frames `N = ⌊(L_padded − W)/H⌋ + 1` for a signal of `signal_len` samples.
    pub fn frame_count(&self, signal_len: usize) -> usize {
        (signal_len + 2 * self.pad() - self.win_len) / self.hop + 1
    }

    /// Longest signal that yields exactly `frames` frames, if any.
    pub fn max_signal_len(&self, frames: usize) -> Option<usize> {
        (frames * self.hop)
            .checked_sub(self.win_len + 1)
            .filter(|&l| l > 0)
    }
}

/// Window samples `w[0..W)`.
pub fn make_window(kind: WindowKind, len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::InvalidConfig(format!(
            "window length must be at least 2, got {len}"
        )));
    }
    match kind {
        // periodic Hann
        WindowKind::Hann => Ok((0..len)
            .map(|l| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * l as f64 / len as f64).cos()))
            .collect()),
    }
}

/// Rescales `window` so that the STFT with hop `hop` and `fft_size` bins is a
/// tight frame: `w̃(l) = w(l) / sqrt(M · s(l mod H))` with
/// `s(p) = Σₙ w(p + nH)²`.
pub fn tight_normalize(window: &[f64], hop: usize, fft_size: usize) -> Result<Vec<f64>> {
    if hop == 0 || hop > window.len() {
        return Err(Error::InvalidConfig(format!(
            "hop {hop} must be in 1..={}",
            window.len()
        )));
    }
    let mut overlap = vec![0.0; hop];
    for (l, w) in window.iter().enumerate() {
        overlap[l % hop] += w * w;
    }
    if let Some(p) = overlap.iter().position(|&s| s <= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "window does not cover phase {p} at hop {hop}; no frame is possible"
        )));
    }
    Ok(window
        .iter()
        .enumerate()
        .map(|(l, w)| w / (fft_size as f64 * overlap[l % hop]).sqrt())
        .collect())
}

/// Complex STFT coefficients, `fft_size` bins by `frames` frames, frame-major
/// (index `m + n·M`).
#[derive(Clone, Debug, PartialEq)]
pub struct StftGrid {
    coeffs: Vec<Complex64>,
    config: StftConfig,
    frames: usize,
    signal_len: usize,
}

impl StftGrid {
    pub fn zeros(config: StftConfig, signal_len: usize) -> Self {
        let frames = config.frame_count(signal_len);
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); frames * config.fft_size],
            config,
            frames,
            signal_len,
        }
    }

    pub fn from_coeffs(
        config: StftConfig,
        signal_len: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        let frames = config.frame_count(signal_len);
        if coeffs.len() != frames * config.fft_size {
            return Err(Error::ShapeMismatch(format!(
                "grid for {signal_len} samples needs {} coefficients, got {}",
                frames * config.fft_size,
                coeffs.len()
            )));
        }
        Ok(Self {
            coeffs,
            config,
            frames,
            signal_len,
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn bins(&self) -> usize {
        self.config.fft_size
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn frame(&self, n: usize) -> &[Complex64] {
        let m = self.config.fft_size;
        &self.coeffs[n * m..(n + 1) * m]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `Re⟨self, other⟩`, the real inner product on ℂᴷ seen as ℝ²ᴷ.
    pub fn real_dot(&self, other: &StftGrid) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    fn check_shape(&self, bins: usize, frames: usize) -> Result<()> {
        if self.bins() != bins || self.frames != frames {
            return Err(Error::ShapeMismatch(format!(
                "grid is {}x{}, measurements are {bins}x{frames}",
                self.bins(),
                self.frames
            )));
        }
        Ok(())
    }
}

/// Planned STFT operator for one [`StftConfig`]. Cheap to clone and shareable
/// across threads.
#[derive(Clone)]
pub struct Stft {
    config: StftConfig,
    window: Arc<[f64]>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Stft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Stft")
            .field("config", &self.config)
            .finish()
    }
}

impl Stft {
    pub fn new(config: StftConfig) -> Result<Self> {
        config.validate()?;
        let raw = make_window(config.window, config.win_len)?;
        let window = tight_normalize(&raw, config.hop, config.fft_size)?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            config,
            window: window.into(),
            forward: planner.plan_fft_forward(config.fft_size),
            inverse: planner.plan_fft_inverse(config.fft_size),
        })
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    /// The tight-frame normalized analysis/synthesis window `w̃`.
    pub fn window(&self) -> &[f64] {
        &self.window
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        self.config.frame_count(signal_len)
    }

    pub fn analyze(&self, x: &TimeSignal) -> StftGrid {
        self.stft(x.samples())
    }

    /// `A x`.
    pub fn stft(&self, x: &[f64]) -> StftGrid {
        let StftConfig {
            win_len,
            hop,
            fft_size,
            ..
        } = self.config;
        let pad = self.config.pad();
        let mut grid = StftGrid::zeros(self.config, x.len());
        let mut scratch = vec![Complex64::default(); self.forward.get_inplace_scratch_len()];

        for (n, frame) in grid.coeffs.chunks_exact_mut(fft_size).enumerate() {
            let start = n * hop;
            for (j, c) in frame[..win_len].iter_mut().enumerate() {
                let l = start + j;
                let sample = if l >= pad && l - pad < x.len() {
                    x[l - pad]
                } else {
                    0.0
                };
                *c = Complex64::new(sample * self.window[j], 0.0);
            }
            self.forward.process_with_scratch(frame, &mut scratch);
        }
        grid
    }

    /// `Re(Aᴴ ỹ)`: overlap-add synthesis with the same normalized window,
    /// trimmed to the grid's signal length.
    pub fn istft(&self, grid: &StftGrid) -> Vec<f64> {
        self.synthesize(grid, false).0
    }

    /// Like [`Stft::istft`], also returning `‖Im(Aᴴ ỹ)‖ / ‖Re(Aᴴ ỹ)‖`, which is
    /// zero up to rounding for Hermitian-symmetric grids.
    pub fn istft_with_residual(&self, grid: &StftGrid) -> (Vec<f64>, f64) {
        let (re, im) = self.synthesize(grid, true);
        let re_norm = re.iter().map(|v| v * v).sum::<f64>().sqrt();
        let im_norm = im.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ratio = if im_norm == 0.0 {
            0.0
        } else {
            im_norm / re_norm.max(f64::MIN_POSITIVE)
        };
        (re, ratio)
    }

    pub fn synthesize_signal(&self, grid: &StftGrid, sample_rate: u32) -> Result<TimeSignal> {
        TimeSignal::new(self.istft(grid), sample_rate)
    }

    fn synthesize(&self, grid: &StftGrid, with_imag: bool) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(
            grid.config, self.config,
            "grid was produced with a different STFT configuration"
        );
        let StftConfig {
            win_len,
            hop,
            fft_size,
            ..
        } = self.config;
        let pad = self.config.pad();
        let len = grid.signal_len;
        let mut re = vec![0.0; len];
        let mut im = vec![0.0; if with_imag { len } else { 0 }];
        let mut buf = vec![Complex64::default(); fft_size];
        let mut scratch = vec![Complex64::default(); self.inverse.get_inplace_scratch_len()];

        for n in 0..grid.frames {
            buf.copy_from_slice(grid.frame(n));
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            let start = n * hop;
            for (j, c) in buf[..win_len].iter().enumerate() {
                let l = start + j;
                if l >= pad && l - pad < len {
                    re[l - pad] += c.re * self.window[j];
                    if with_imag {
                        im[l - pad] += c.im * self.window[j];
                    }
                }
            }
        }
        (re, im)
    }

    /// Projection onto consistent grids, `P_C(ỹ) = A Aᴴ ỹ`.
    pub fn project_consistent(&self, grid: &StftGrid) -> StftGrid {
        let x = self.istft(grid);
        self.stft(&x)
    }
}

/// Projection onto the magnitude constraint set, `P_M(ỹ) = r^{1/d} ⊙ ỹ/|ỹ|`.
pub fn project_magnitude(grid: &StftGrid, r: &Measurements) -> Result<StftGrid> {
    grid.check_shape(r.bins(), r.frames())?;
    let power = r.power();
    let mut out = grid.clone();
    for (c, &v) in out.coeffs.iter_mut().zip(r.values()) {
        *c = with_magnitude(*c, power.root(v));
    }
    Ok(out)
}

/// `P_M` with magnitudes given directly, writing into `out`.
pub(crate) fn project_magnitude_into(grid: &StftGrid, magnitudes: &[f64], out: &mut StftGrid) {
    debug_assert_eq!(grid.coeffs.len(), magnitudes.len());
    for ((o, &c), &mag) in out.coeffs.iter_mut().zip(&grid.coeffs).zip(magnitudes) {
        *o = with_magnitude(c, mag);
    }
}

/// `|c|` without the overflow protection of `hypot`, which is several times
/// slower and unnecessary at audio scales.
#[inline]
pub(crate) fn abs(c: Complex64) -> f64 {
    c.norm_sqr().sqrt()
}

#[inline]
fn with_magnitude(c: Complex64, magnitude: f64) -> Complex64 {
    let norm = abs(c);
    if norm < EPS_MAG {
        Complex64::new(magnitude, 0.0)
    } else {
        c * (magnitude / norm)
    }
}
