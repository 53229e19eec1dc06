//! Bregman divergences generated by separable functions `ψ`, and the
//! phase-retrieval objective `J(x) = D_ψ(r | |Ax|^d)` with its gradient.
//!
//! | kind | `ψ(x)` | `ψ'(x)` | `ψ''(x)` |
//! |------|--------|---------|----------|
//! | `l2` | `x²` | `2x` | `2` |
//! | `kl` | `x log x` | `log x + 1` | `1/x` |
//! | `is` | `−log x` | `−1/x` | `1/x²` |
//! | `beta(β)` | `x^β/(β(β−1)) − x/(β−1) + 1/β` | `(x^{β−1} − 1)/(β−1)` | `x^{β−2}` |
//!
//! Every kind except `l2` floors its inputs at `eps` before evaluation so that
//! silent bins (zero measurements or zero magnitudes) stay finite.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::measurements::{Measurements, Power};
use crate::stft::{abs, Stft, StftGrid, EPS_MAG};

/// Default domain floor for logs and negative powers.
pub const EPS_DIV: f64 = 1e-12;

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum DivergenceKind {
    L2,
    Kl,
    Is,
    Beta(f64),
}

impl DivergenceKind {
    /// Degree `h` with `D(λp | λq) = λʰ D(p | q)` (ignoring the floor).
    pub fn homogeneity(&self) -> f64 {
        match self {
            DivergenceKind::L2 => 2.0,
            DivergenceKind::Kl => 1.0,
            DivergenceKind::Is => 0.0,
            DivergenceKind::Beta(b) => *b,
        }
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceKind::L2 => f.write_str("l2"),
            DivergenceKind::Kl => f.write_str("kl"),
            DivergenceKind::Is => f.write_str("is"),
            DivergenceKind::Beta(b) => write!(f, "beta{b}"),
        }
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(DivergenceKind::L2),
            "kl" => Ok(DivergenceKind::Kl),
            "is" => Ok(DivergenceKind::Is),
            _ => {
                let beta = s
                    .strip_prefix("beta")
                    .and_then(|b| b.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown divergence {s:?}")))?;
                Ok(DivergenceKind::Beta(beta))
            }
        }
    }
}

/// Which argument of `D_ψ` the estimate `|Ax|^d` occupies.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// `D_ψ(r | |Ax|^d)`
    #[default]
    Right,
    /// `D_ψ(|Ax|^d | r)`
    Left,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Orientation::Right => f.write_str("right"),
            Orientation::Left => f.write_str("left"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct DivergenceSpec {
    pub kind: DivergenceKind,
    pub orientation: Orientation,
    pub eps: f64,
}

impl DivergenceSpec {
    pub fn new(kind: DivergenceKind, orientation: Orientation) -> Result<Self> {
        Self {
            kind,
            orientation,
            eps: EPS_DIV,
        }
        .validated()
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self { eps, ..self }.validated()
    }

    fn validated(self) -> Result<Self> {
        if let DivergenceKind::Beta(b) = self.kind {
            if !b.is_finite() || b == 0.0 || b == 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "beta must be finite and not 0 or 1 (use is / kl), got {b}"
                )));
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "divergence floor must be positive, got {}",
                self.eps
            )));
        }
        Ok(self)
    }

    #[inline]
    fn floor(&self, v: f64) -> f64 {
        match self.kind {
            DivergenceKind::L2 => v,
            _ => v.max(self.eps),
        }
    }

    #[inline]
    fn psi_at(&self, v: f64) -> f64 {
        let x = self.floor(v);
        match self.kind {
            DivergenceKind::L2 => x * x,
            DivergenceKind::Kl => x * x.ln(),
            DivergenceKind::Is => -x.ln(),
            DivergenceKind::Beta(b) => x.powf(b) / (b * (b - 1.0)) - x / (b - 1.0) + 1.0 / b,
        }
    }

    #[inline]
    fn psi_grad_at(&self, v: f64) -> f64 {
        let x = self.floor(v);
        match self.kind {
            DivergenceKind::L2 => 2.0 * x,
            DivergenceKind::Kl => x.ln() + 1.0,
            DivergenceKind::Is => -1.0 / x,
            DivergenceKind::Beta(b) => (x.powf(b - 1.0) - 1.0) / (b - 1.0),
        }
    }

    #[inline]
    fn psi_hess_at(&self, v: f64) -> f64 {
        let x = self.floor(v);
        match self.kind {
            DivergenceKind::L2 => 2.0,
            DivergenceKind::Kl => 1.0 / x,
            DivergenceKind::Is => 1.0 / (x * x),
            DivergenceKind::Beta(b) => x.powf(b - 2.0),
        }
    }

    /// `Σ ψ(vᵢ)`.
    pub fn psi(&self, values: &[f64]) -> f64 {
        values.iter().map(|&v| self.psi_at(v)).sum()
    }

    /// `∇ψ`, elementwise.
    pub fn psi_grad(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.psi_grad_at(v)).collect()
    }

    /// Diagonal of `∇²ψ`; the generating functions are separable so the
    /// Hessian has no off-diagonal terms.
    pub fn psi_hess_diag(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.psi_hess_at(v)).collect()
    }

    /// `D_ψ(p | q)` for one pair. Evaluated as `q^β φ_β(p/q − 1)` rather than
    /// from the definition, which cancels catastrophically when `p ≈ q`.
    #[inline]
    fn bregman_at(&self, p: f64, q: f64) -> f64 {
        let beta = match self.kind {
            DivergenceKind::L2 => return (p - q) * (p - q),
            DivergenceKind::Kl => 1.0,
            DivergenceKind::Is => 0.0,
            DivergenceKind::Beta(b) => b,
        };
        let (p, q) = (self.floor(p), self.floor(q));
        let t = (p - q) / q;
        let scale = match self.kind {
            DivergenceKind::Kl => q,
            DivergenceKind::Is => 1.0,
            _ => q.powf(beta),
        };
        scale * beta_kernel(beta, t)
    }

    /// `D_ψ(p | q) = ψ(p) − ψ(q) − ⟨∇ψ(q), p − q⟩`.
    pub fn bregman(&self, p: &[f64], q: &[f64]) -> Result<f64> {
        if p.len() != q.len() {
            return Err(Error::ShapeMismatch(format!(
                "divergence arguments have lengths {} and {}",
                p.len(),
                q.len()
            )));
        }
        Ok(p.iter().zip(q).map(|(&a, &b)| self.bregman_at(a, b)).sum())
    }

    /// Per-bin objective term for estimate `y = |Ax|^d` and measurement `r`.
    #[inline]
    fn term(&self, y: f64, r: f64) -> f64 {
        match self.orientation {
            Orientation::Right => self.bregman_at(r, y),
            Orientation::Left => self.bregman_at(y, r),
        }
    }

    /// `∂/∂y` of [`Self::term`]: `ψ''(y)(y − r)` on the right,
    /// `ψ'(y) − ψ'(r)` on the left.
    #[inline]
    fn term_derivative(&self, y: f64, r: f64) -> f64 {
        match self.orientation {
            Orientation::Right => {
                let (y, r) = (self.floor(y), self.floor(r));
                self.psi_hess_at(y) * (y - r)
            }
            Orientation::Left => self.psi_grad_at(y) - self.psi_grad_at(r),
        }
    }

    /// Short identifier used in algorithm labels, e.g. `kl` or `klleft`.
    pub fn label(&self) -> String {
        match self.orientation {
            Orientation::Right => self.kind.to_string(),
            Orientation::Left => format!("{}left", self.kind),
        }
    }
}

/// `φ_β(t) = ((1 + t)^β − 1 − βt) / (β(β − 1))`, continuously extended to
/// `β ∈ {0, 1}`, so that `d_β(p | q) = q^β φ_β(p/q − 1)`.
fn beta_kernel(beta: f64, t: f64) -> f64 {
    if t.abs() < 0.1 {
        // Σₙ≥₂ cₙ tⁿ with c₂ = 1/2, cₙ₊₁ = cₙ (β − n) / (n + 1)
        let (mut c, mut tn, mut sum) = (0.5, t * t, 0.0);
        for n in 2..60 {
            let term = c * tn;
            sum += term;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            c *= (beta - n as f64) / (n as f64 + 1.0);
            tn *= t;
        }
        return sum;
    }
    let log1p = t.ln_1p();
    if beta == 1.0 {
        (1.0 + t) * log1p - t
    } else if beta == 0.0 {
        t - log1p
    } else {
        ((beta * log1p).exp_m1() - beta * t) / (beta * (beta - 1.0))
    }
}

/// `J(x) = D_ψ(r | |Ax|^d)` (or the left-oriented variant) for fixed
/// measurements `r`.
///
/// The divergence floor is relative to the measurements: values are floored at
/// `eps · s^d` where `s = max r^{1/d}` is the peak target magnitude, so the
/// objective does not depend on the input gain beyond the divergence's own
/// homogeneity.
#[derive(Clone, Debug)]
pub struct Objective {
    divergence: DivergenceSpec,
    floored: DivergenceSpec,
    scale: f64,
    measurements: Measurements,
    stft: Stft,
}

impl Objective {
    pub fn new(divergence: DivergenceSpec, measurements: Measurements, stft: Stft) -> Result<Self> {
        let frames = stft.frame_count(measurements.signal_len());
        if measurements.bins() != stft.config().fft_size || measurements.frames() != frames {
            return Err(Error::ShapeMismatch(format!(
                "measurements are {}x{}, STFT of {} samples is {}x{}",
                measurements.bins(),
                measurements.frames(),
                measurements.signal_len(),
                stft.config().fft_size,
                frames
            )));
        }
        let peak = measurements.values().iter().fold(0.0f64, |m, &v| m.max(v));
        let scale = match measurements.power().root(peak) {
            s if s > 0.0 => s,
            _ => 1.0,
        };
        let abs_eps = (divergence.eps * measurements.power().apply(scale)).max(f64::MIN_POSITIVE);
        let floored = divergence.with_eps(abs_eps)?;
        Ok(Self {
            divergence,
            floored,
            scale,
            measurements,
            stft,
        })
    }

    pub fn divergence(&self) -> &DivergenceSpec {
        &self.divergence
    }

    /// Peak target magnitude `max r^{1/d}` (1 for all-zero measurements).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn measurements(&self) -> &Measurements {
        &self.measurements
    }

    pub fn power(&self) -> Power {
        self.measurements.power()
    }

    pub fn stft(&self) -> &Stft {
        &self.stft
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_from_grid(&self.stft.stft(x))
    }

    /// `J` evaluated from `Ax` directly.
    pub fn value_from_grid(&self, grid: &StftGrid) -> f64 {
        let power = self.power();
        grid.coeffs()
            .iter()
            .zip(self.measurements.values())
            .map(|(z, &r)| self.floored.term(power.apply(abs(*z)), r))
            .sum()
    }

    /// The gradient in the Wirtinger convention,
    /// `Re Aᴴ{ Ax ⊙ (d/2)|Ax|^{d−2} ⊙ w }` with `w` the derivative of the
    /// per-bin divergence with respect to `|Ax|^d`.
    ///
    /// This is `∂J/∂x̄`, i.e. half of the ordinary real gradient: a directional
    /// derivative of `J` along `u` equals `2⟨∇J(x), u⟩`. With this scaling the
    /// `l2`, `d = 1` gradient is `x − Aᴴ P_M(Ax)`, so a unit step is one
    /// Griffin-Lim iteration.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_from_grid(&self.stft.stft(x))
    }

    pub fn gradient_from_grid(&self, grid: &StftGrid) -> Vec<f64> {
        let mut weighted = grid.clone();
        self.weight_grid(grid, &mut weighted);
        if !cfg!(debug_assertions) {
            return self.stft.istft(&weighted);
        }
        let (re, residual) = self.stft.istft_with_residual(&weighted);
        assert!(
            residual < 1e-8 || re.iter().all(|v| v.abs() < 1e-12),
            "gradient has imaginary residue {residual}"
        );
        re
    }

    fn weight_grid(&self, grid: &StftGrid, out: &mut StftGrid) {
        let power = self.power();
        let spec = &self.floored;
        for ((o, z), &r) in out
            .coeffs_mut()
            .iter_mut()
            .zip(grid.coeffs())
            .zip(self.measurements.values())
        {
            let mag = abs(*z);
            let w = spec.term_derivative(power.apply(mag), r);
            let scale = match power {
                Power::Magnitude => 0.5 / mag.max(EPS_MAG),
                Power::Power => 1.0,
            };
            *o = *z * (scale * w);
        }
    }

    /// Coefficients before synthesis.
    #[cfg(test)]
    fn weighted(&self, grid: &StftGrid) -> Vec<rustfft::num_complex::Complex64> {
        let mut out = grid.clone();
        self.weight_grid(grid, &mut out);
        out.into_coeffs()
    }
}
