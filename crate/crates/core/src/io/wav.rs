use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::signal::TimeSignal;

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Sample encoding used by [`write_wav`].
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Pcm16,
    Float32,
}

#[derive(Debug)]
struct Format {
    tag: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::wav(
            "fmt ",
            format!("chunk holds {} bytes, need at least 16", body.len()),
        ));
    }
    let mut tag = u16_at(body, 0);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(Error::wav(
                "fmt ",
                "truncated WAVE_FORMAT_EXTENSIBLE header",
            ));
        }
        // first two bytes of the sub-format GUID carry the real tag
        tag = u16_at(body, 24);
    }
    let format = Format {
        tag,
        channels: u16_at(body, 2),
        sample_rate: u32_at(body, 4),
        block_align: u16_at(body, 12),
        bits: u16_at(body, 14),
    };
    if format.channels == 0 {
        return Err(Error::wav("fmt ", "zero channels"));
    }
    if format.sample_rate == 0 {
        return Err(Error::wav("fmt ", "zero sample rate"));
    }
    let supported = matches!(
        (format.tag, format.bits),
        (FORMAT_PCM, 8 | 16 | 24 | 32) | (FORMAT_FLOAT, 32 | 64)
    );
    if !supported {
        return Err(Error::wav(
            "fmt ",
            format!(
                "unsupported encoding (format tag {}, {} bits)",
                format.tag, format.bits
            ),
        ));
    }
    let min_align = format.channels as usize * (format.bits as usize / 8);
    if (format.block_align as usize) < min_align {
        return Err(Error::wav(
            "fmt ",
            format!("block align {} too small", format.block_align),
        ));
    }
    Ok(format)
}

fn decode_sample(format: &Format, b: &[u8]) -> f64 {
    match (format.tag, format.bits) {
        (FORMAT_PCM, 8) => (b[0] as f64 - 128.0) / 128.0,
        (FORMAT_PCM, 16) => i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0,
        (FORMAT_PCM, 24) => {
            let v = i32::from_le_bytes([0, b[0], b[1], b[2]]) >> 8;
            v as f64 / 8_388_608.0
        }
        (FORMAT_PCM, 32) => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64 / 2_147_483_648.0,
        (FORMAT_FLOAT, 32) => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
        (FORMAT_FLOAT, 64) => f64::from_le_bytes(b[..8].try_into().unwrap()),
        _ => unreachable!("validated in parse_fmt"),
    }
}

/// Reads a RIFF/WAVE file into a mono [`TimeSignal`].
///
/// Integer PCM is scaled by `2^(bits-1)`; float data passes through. Only the
/// first channel of multichannel files is kept.
pub fn read_wav(path: impl AsRef<Path>) -> Result<TimeSignal> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes)
}

pub(crate) fn parse_wav(bytes: &[u8]) -> Result<TimeSignal> {
    if bytes.len() < 12 {
        return Err(Error::wav("RIFF", "file shorter than the RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(Error::wav("RIFF", "missing RIFF signature"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::wav("RIFF", "RIFF form type is not WAVE"));
    }

    let mut format: Option<Format> = None;
    let mut pos = 12;
    loop {
        if pos + 8 > bytes.len() {
            let missing = if format.is_none() { "fmt " } else { "data" };
            return Err(Error::wav(missing, "chunk not found before end of file"));
        }
        let id = &bytes[pos..pos + 4];
        let id_str = String::from_utf8_lossy(id).into_owned();
        let size = u32_at(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let declared_end = body_start.saturating_add(size);

        match id {
            b"fmt " => {
                if declared_end > bytes.len() {
                    return Err(Error::wav(
                        "fmt ",
                        format!(
                            "truncated: declares {size} bytes, {} present",
                            bytes.len() - body_start
                        ),
                    ));
                }
                format = Some(parse_fmt(&bytes[body_start..declared_end])?);
            }
            b"data" => {
                let format = format
                    .ok_or_else(|| Error::wav("fmt ", "data chunk precedes the fmt chunk"))?;
                // tolerate writers that leave a placeholder size
                let end = declared_end.min(bytes.len());
                let data = &bytes[body_start..end];
                return decode_data(&format, data);
            }
            _ => {
                if declared_end > bytes.len() {
                    return Err(Error::wav(&id_str, "truncated chunk"));
                }
            }
        }
        pos = declared_end + (size & 1);
    }
}

fn decode_data(format: &Format, data: &[u8]) -> Result<TimeSignal> {
    let block = format.block_align as usize;
    let frames = data.len() / block;
    if frames == 0 {
        return Err(Error::wav("data", "no sample frames"));
    }
    if format.channels > 1 {
        warn!(
            "WAV has {} channels; keeping channel 0 only",
            format.channels
        );
    }
    let samples = data
        .chunks_exact(block)
        .map(|frame| decode_sample(format, frame))
        .collect();
    TimeSignal::new(samples, format.sample_rate)
}

/// Writes `signal` as a mono WAV and returns the number of samples that had to
/// be clipped (always 0 for [`BitDepth::Float32`]).
pub fn write_wav(signal: &TimeSignal, path: impl AsRef<Path>, depth: BitDepth) -> Result<usize> {
    let path = path.as_ref();
    let (bytes, clipped) = encode_wav(signal, depth);
    if clipped > 0 {
        warn!(
            "{}: clipped {clipped} samples outside [-1, 1]",
            path.display()
        );
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(clipped)
}

pub(crate) fn encode_wav(signal: &TimeSignal, depth: BitDepth) -> (Vec<u8>, usize) {
    let (tag, bits) = match depth {
        BitDepth::Pcm16 => (FORMAT_PCM, 16u16),
        BitDepth::Float32 => (FORMAT_FLOAT, 32u16),
    };
    let bytes_per_sample = bits as usize / 8;
    let data_len = signal.len() * bytes_per_sample;

    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&tag.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&signal.sample_rate().to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate() * bytes_per_sample as u32).to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample as u16).to_le_bytes());
    out.extend_from_slice(&bits.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());

    let mut clipped = 0;
    for &s in signal.samples() {
        match depth {
            BitDepth::Pcm16 => {
                if !(-1.0..=1.0).contains(&s) {
                    clipped += 1;
                }
                let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
                out.extend_from_slice(&q.to_le_bytes());
            }
            BitDepth::Float32 => out.extend_from_slice(&(s as f32).to_le_bytes()),
        }
    }
    if data_len & 1 == 1 {
        out.push(0);
    }
    (out, clipped)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcm16_bytes(channels: u16, samples: &[i16]) -> Vec<u8> {
        let data_len = samples.len() * 2;
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&channels.to_le_bytes());
        out.extend_from_slice(&8000u32.to_le_bytes());
        out.extend_from_slice(&(8000u32 * 2 * channels as u32).to_le_bytes());
        out.extend_from_slice(&(2 * channels).to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data_len as u32).to_le_bytes());
        for s in samples {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    #[test]
    fn pcm16_scaling() {
        let s = parse_wav(&pcm16_bytes(1, &[0, 16384, -16384])).unwrap();
        assert_eq!(s.samples(), &[0.0, 0.5, -0.5]);
        assert_eq!(s.sample_rate(), 8000);
    }

    #[test]
    fn stereo_keeps_left() {
        let s = parse_wav(&pcm16_bytes(2, &[16384, -1, -16384, 7])).unwrap();
        assert_eq!(s.samples(), &[0.5, -0.5]);
    }

    #[test]
    fn truncated_fmt_names_chunk() {
        let bytes = pcm16_bytes(1, &[1, 2]);
        // RIFF header + fmt id/size + 6 bytes of the fmt body
        let err = parse_wav(&bytes[..26]).unwrap_err();
        match err {
            Error::Wav { chunk, .. } => assert_eq!(chunk, "fmt "),
            other => panic!("unexpected {other:?}"),
        }
        // fmt id itself cut off
        let err = parse_wav(&bytes[..14]).unwrap_err();
        assert!(matches!(err, Error::Wav { ref chunk, .. } if chunk == "fmt "));
    }

    #[test]
    fn unsupported_encoding() {
        let mut bytes = pcm16_bytes(1, &[1, 2]);
        bytes[20] = 2; // ADPCM
        let err = parse_wav(&bytes).unwrap_err();
        assert!(err.to_string().contains("fmt "));
    }

    #[test]
    fn write_pcm16_values_and_clipping() {
        let s = TimeSignal::new(vec![0.0, 0.5, 1.7, -1.0], 8000).unwrap();
        let (bytes, clipped) = encode_wav(&s, BitDepth::Pcm16);
        assert_eq!(clipped, 1);
        let data: Vec<i16> = bytes[44..]
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(data, vec![0, 16384, 32767, -32768]);
    }

    #[test]
    fn float32_round_trip_is_exact() {
        let samples: Vec<f64> = (0..101).map(|i| ((i as f32) * 0.37).sin() as f64).collect();
        let s = TimeSignal::new(samples, 22050).unwrap();
        let (bytes, clipped) = encode_wav(&s, BitDepth::Float32);
        assert_eq!(clipped, 0);
        assert_eq!(parse_wav(&bytes).unwrap(), s);
    }
}
