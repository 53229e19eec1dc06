//! File formats: RIFF WAV audio and the measurement CSV.

mod measurement_csv;
mod wav;

pub use measurement_csv::{read_measurements, write_measurements, MeasurementFile};
pub use wav::{read_wav, write_wav, BitDepth};
