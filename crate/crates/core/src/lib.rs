//! Phase retrieval for audio from nonnegative STFT measurements.
//!
//! The toolkit reconstructs a real time-domain signal `x` from measurements
//! `r ≈ |Ax|^d` (magnitude `d = 1` or power `d = 2`) where `A` is a tight-frame
//! STFT. Reconstruction either runs the Griffin-Lim baselines or minimizes a
//! Bregman divergence between `r` and `|Ax|^d` with a fixed-step,
//! Nesterov-accelerated gradient method.
//!
//! Modules, bottom-up:
//!
//! * [`signal`]: the [`TimeSignal`] sample container.
//! * [`io`]: WAV reading/writing and the measurement CSV format.
//! * [`stft`]: analysis/synthesis operators and the two GLA projections.
//! * [`divergence`]: generating functions, Bregman divergences, objective and gradient.
//! * [`solver`]: GLA, Fast GLA and accelerated Bregman gradient descent.
//! * [`pipeline`]: noise degradation, spectral subtraction, spectral convergence.
//! * [`experiment`]: the file × SNR × method evaluation grid.
//! * [`synth`]: deterministic test signals (sines, a speech-like babble).
//! * [`cli`]: the `bregman-pr` command line.

pub mod cli;
pub mod divergence;
mod error;
pub mod experiment;
pub mod io;
pub mod measurements;
pub mod pipeline;
pub mod signal;
pub mod solver;
pub mod stft;
pub mod synth;

pub use divergence::{DivergenceKind, DivergenceSpec, Objective, Orientation};
pub use error::{Error, Result};
pub use measurements::{Measurements, Power};
pub use signal::TimeSignal;
pub use solver::{Algorithm, Init, IterRecord, IterTrace, Method, Reconstruction, SolverConfig};
pub use stft::{Stft, StftConfig, StftGrid, WindowKind};
