//! Measurement CSV:
//!
//! ```text
//! # bins=M frames=N power=d sample_rate=R hop=H win=W
//! r[0,0],r[1,0],...,r[M-1,0]
//! ...                                (N lines, one frame per line)
//! ```
//!
//! Values are written in Rust's shortest round-trip decimal form, so a
//! write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::measurements::{Measurements, Power};
use crate::stft::StftConfig;

/// A measurement grid together with the STFT layout it was taken with.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementFile {
    pub measurements: Measurements,
    pub stft: StftConfig,
}

pub fn write_measurements(
    measurements: &Measurements,
    stft: &StftConfig,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_measurements(measurements, stft)).map_err(|e| Error::io(path, e))
}

pub(crate) fn format_measurements(m: &Measurements, stft: &StftConfig) -> String {
    let mut out = String::with_capacity(m.values().len() * 12 + 64);
    writeln!(
        out,
        "# bins={} frames={} power={} sample_rate={} hop={} win={}",
        m.bins(),
        m.frames(),
        m.power().exponent(),
        m.sample_rate(),
        stft.hop,
        stft.win_len
    )
    .unwrap();
    for frame in m.values().chunks_exact(m.bins()) {
        for (i, v) in frame.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads a measurement CSV. The signal length is not stored in the file, so
/// it is set to the longest length consistent with the frame count.
pub fn read_measurements(path: impl AsRef<Path>) -> Result<MeasurementFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_measurements(&text)
}

#[derive(Default)]
struct Header {
    bins: Option<usize>,
    frames: Option<usize>,
    power: Option<u32>,
    sample_rate: Option<u32>,
    hop: Option<usize>,
    win: Option<usize>,
}

fn parse_header(line: &str) -> Result<Header> {
    let body = line.strip_prefix('#').ok_or_else(|| {
        Error::MeasurementFormat("first line must be a '# bins=...' header".into())
    })?;
    let mut header = Header::default();
    for token in body.split_whitespace() {
        let (key, value) = token.split_once('=').ok_or_else(|| {
            Error::MeasurementFormat(format!("header token {token:?} is not key=value"))
        })?;
        let bad =
            |_| Error::MeasurementFormat(format!("header field {key}: cannot parse {value:?}"));
        match key {
            "bins" => header.bins = Some(value.parse().map_err(bad)?),
            "frames" => header.frames = Some(value.parse().map_err(bad)?),
            "power" => header.power = Some(value.parse().map_err(bad)?),
            "sample_rate" => header.sample_rate = Some(value.parse().map_err(bad)?),
            "hop" => header.hop = Some(value.parse().map_err(bad)?),
            "win" => header.win = Some(value.parse().map_err(bad)?),
            other => {
                return Err(Error::MeasurementFormat(format!(
                    "unknown header field {other:?}"
                )))
            }
        }
    }
    Ok(header)
}

fn required<T>(v: Option<T>, key: &str) -> Result<T> {
    v.ok_or_else(|| Error::MeasurementFormat(format!("header is missing {key}")))
}

pub(crate) fn parse_measurements(text: &str) -> Result<MeasurementFile> {
    let mut lines = text.lines();
    let header = parse_header(lines.next().unwrap_or(""))?;
    let bins = required(header.bins, "bins")?;
    let frames = required(header.frames, "frames")?;
    let power = Power::from_exponent(required(header.power, "power")?)?;
    let sample_rate = required(header.sample_rate, "sample_rate")?;
    let hop = required(header.hop, "hop")?;
    let win = required(header.win, "win")?;
    let stft = StftConfig::new(win, hop, bins)?;
    let signal_len = stft.max_signal_len(frames).ok_or_else(|| {
        Error::MeasurementFormat(format!(
            "{frames} frames is too few for hop={hop} win={win}"
        ))
    })?;

    let mut values = Vec::with_capacity(bins * frames);
    let mut rows = 0;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        rows += 1;
        if rows > frames {
            return Err(Error::MeasurementFormat(format!(
                "line {line_no}: more than the declared {frames} frames"
            )));
        }
        let before = values.len();
        for (col, field) in line.split(',').enumerate() {
            let column = col + 1;
            let v: f64 = field.trim().parse().map_err(|_| Error::MeasurementValue {
                line: line_no,
                column,
                reason: format!("cannot parse {field:?}"),
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::MeasurementValue {
                    line: line_no,
                    column,
                    reason: format!("value {v} is not a finite nonnegative number"),
                });
            }
            values.push(v);
        }
        if values.len() - before != bins {
            return Err(Error::MeasurementFormat(format!(
                "line {line_no}: expected {bins} values, found {}",
                values.len() - before
            )));
        }
    }
    if rows != frames {
        return Err(Error::MeasurementFormat(format!(
            "header declares {frames} frames, file has {rows}"
        )));
    }

    let measurements = Measurements::new(bins, frames, power, signal_len, sample_rate, values)?;
    Ok(MeasurementFile { measurements, stft })
}
