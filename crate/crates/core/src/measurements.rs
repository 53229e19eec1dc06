use crate::error::{Error, Result};

/// Exponent `d` applied to STFT magnitudes: `r ≈ |Ax|^d`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Power {
    /// `d = 1`
    Magnitude,
    /// `d = 2`
    Power,
}

impl Power {
    pub fn from_exponent(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Power::Magnitude),
            2 => Ok(Power::Power),
            other => Err(Error::InvalidConfig(format!(
                "power exponent must be 1 or 2, got {other}"
            ))),
        }
    }

    pub fn exponent(self) -> u32 {
        match self {
            Power::Magnitude => 1,
            Power::Power => 2,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.exponent() as f64
    }

    /// `|z|^d`
    #[inline]
    pub fn apply(self, magnitude: f64) -> f64 {
        match self {
            Power::Magnitude => magnitude,
            Power::Power => magnitude * magnitude,
        }
    }

    /// `v^{1/d}`
    #[inline]
    pub fn root(self, value: f64) -> f64 {
        match self {
            Power::Magnitude => value,
            Power::Power => value.sqrt(),
        }
    }
}

/// Nonnegative time-frequency measurements `r`, `bins × frames`, frame-major
/// (index `m + n·bins`).
///
/// `signal_len` and `sample_rate` describe the time signal the grid belongs to;
/// solvers reconstruct a signal of that length.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    bins: usize,
    frames: usize,
    power: Power,
    signal_len: usize,
    sample_rate: u32,
    values: Vec<f64>,
}

impl Measurements {
    pub fn new(
        bins: usize,
        frames: usize,
        power: Power,
        signal_len: usize,
        sample_rate: u32,
        values: Vec<f64>,
    ) -> Result<Self> {
        if bins == 0 || frames == 0 {
            return Err(Error::ShapeMismatch("measurement grid is empty".into()));
        }
        if values.len() != bins * frames {
            return Err(Error::ShapeMismatch(format!(
                "expected {bins}x{frames} = {} values, got {}",
                bins * frames,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::MeasurementValue {
                line: k / bins,
                column: k % bins,
                reason: format!("value {} is not a finite nonnegative number", values[k]),
            });
        }
        if signal_len == 0 || sample_rate == 0 {
            return Err(Error::InvalidConfig(
                "signal length and sample rate must be positive".into(),
            ));
        }
        Ok(Self {
            bins,
            frames,
            power,
            signal_len,
            sample_rate,
            values,
        })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn power(&self) -> Power {
        self.power
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Target magnitudes `r^{1/d}`.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|&v| self.power.root(v)).collect()
    }

    /// The same measurements expressed as magnitudes (`d = 1`).
    pub fn to_magnitude(&self) -> Measurements {
        Measurements {
            power: Power::Magnitude,
            values: self.magnitudes(),
            ..self.clone()
        }
    }

    /// The same measurements expressed with exponent `power`.
    pub fn with_power(&self, power: Power) -> Measurements {
        if power == self.power {
            return self.clone();
        }
        Measurements {
            power,
            values: self
                .magnitudes()
                .into_iter()
                .map(|m| power.apply(m))
                .collect(),
            ..self.clone()
        }
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_bad_shape() {
        let err = Measurements::new(2, 2, Power::Magnitude, 4, 8000, vec![0.0, 1.0, -1.0, 0.0])
            .unwrap_err();
        match err {
            Error::MeasurementValue { line, column, .. } => assert_eq!((line, column), (1, 0)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Measurements::new(2, 2, Power::Magnitude, 4, 8000, vec![0.0; 3]).is_err());
    }

    #[test]
    fn power_to_magnitude() {
        let m = Measurements::new(2, 1, Power::Power, 1, 8000, vec![4.0, 9.0]).unwrap();
        let mag = m.to_magnitude();
        assert_eq!(mag.power(), Power::Magnitude);
        assert_eq!(mag.values(), &[2.0, 3.0]);
        assert!(Power::from_exponent(3).is_err());
    }
}
