//! Minimal PCM 16-bit mono little-endian WAV reader/writer.
//!
//! Anything else (float, stereo, compressed) is rejected with an error
//! naming the offending header field rather than silently converted.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{AudioClip, AudioError};

const PCM_SCALE: f64 = 32768.0;

/// Read a PCM 16-bit mono WAV file. Samples are scaled to `[-1, 1)` by
/// dividing by 32768.
pub fn read_wav(path: &Path) -> Result<AudioClip, AudioError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = [0u8; 12];
    reader.read_exact(&mut header)?;
    if &header[0..4] != b"RIFF" {
        return Err(AudioError::Format {
            field: "riff_tag",
            got: format!("{:?}", &header[0..4]),
            expected: "RIFF",
        });
    }
    if &header[8..12] != b"WAVE" {
        return Err(AudioError::Format {
            field: "wave_tag",
            got: format!("{:?}", &header[8..12]),
            expected: "WAVE",
        });
    }

    let mut sample_rate = 0u32;
    let mut have_fmt = false;
    let mut data: Option<Vec<u8>> = None;

    // Walk chunks until both fmt and data are seen.
    loop {
        let mut chunk_head = [0u8; 8];
        match reader.read_exact(&mut chunk_head) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let id = [chunk_head[0], chunk_head[1], chunk_head[2], chunk_head[3]];
        let size = u32::from_le_bytes([chunk_head[4], chunk_head[5], chunk_head[6], chunk_head[7]]) as usize;
        match &id {
            b"fmt " => {
                let mut fmt = vec![0u8; size];
                reader.read_exact(&mut fmt)?;
                if size < 16 {
                    return Err(AudioError::Format {
                        field: "fmt_size",
                        got: size.to_string(),
                        expected: ">= 16",
                    });
                }
                let audio_format = u16::from_le_bytes([fmt[0], fmt[1]]);
                if audio_format != 1 {
                    return Err(AudioError::Format {
                        field: "audio_format",
                        got: audio_format.to_string(),
                        expected: "1 (PCM)",
                    });
                }
                let channels = u16::from_le_bytes([fmt[2], fmt[3]]);
                if channels != 1 {
                    return Err(AudioError::Format {
                        field: "channels",
                        got: channels.to_string(),
                        expected: "1 (mono)",
                    });
                }
                sample_rate = u32::from_le_bytes([fmt[4], fmt[5], fmt[6], fmt[7]]);
                if sample_rate == 0 {
                    return Err(AudioError::Format {
                        field: "sample_rate",
                        got: "0".into(),
                        expected: "> 0",
                    });
                }
                let bits = u16::from_le_bytes([fmt[14], fmt[15]]);
                if bits != 16 {
                    return Err(AudioError::Format {
                        field: "bits_per_sample",
                        got: bits.to_string(),
                        expected: "16",
                    });
                }
                have_fmt = true;
            }
            b"data" => {
                let mut raw = vec![0u8; size];
                reader.read_exact(&mut raw)?;
                data = Some(raw);
            }
            _ => {
                // Skip unknown chunks (with pad byte for odd sizes).
                let skip = size + (size & 1);
                std::io::copy(&mut reader.by_ref().take(skip as u64), &mut std::io::sink())?;
            }
        }
        if have_fmt && data.is_some() {
            break;
        }
    }

    if !have_fmt {
        return Err(AudioError::Format { field: "fmt_chunk", got: "missing".into(), expected: "present" });
    }
    let raw = data.ok_or(AudioError::Format {
        field: "data_chunk",
        got: "missing".into(),
        expected: "present",
    })?;
    if raw.len() % 2 != 0 {
        return Err(AudioError::Format {
            field: "data_size",
            got: raw.len().to_string(),
            expected: "even (16-bit samples)",
        });
    }

    let samples = raw
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / PCM_SCALE)
        .collect();
    Ok(AudioClip { samples, sample_rate })
}

/// Write a clip as PCM 16-bit mono little-endian. Out-of-range samples
/// saturate to the i16 limits.
pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<(), AudioError> {
    let mut w = BufWriter::new(File::create(path)?);
    let data_len = (clip.len() * 2) as u32;

    w.write_all(b"RIFF")?;
    w.write_all(&(36 + data_len).to_le_bytes())?;
    w.write_all(b"WAVE")?;

    w.write_all(b"fmt ")?;
    w.write_all(&16u32.to_le_bytes())?;
    w.write_all(&1u16.to_le_bytes())?; // PCM
    w.write_all(&1u16.to_le_bytes())?; // mono
    w.write_all(&clip.sample_rate.to_le_bytes())?;
    w.write_all(&(clip.sample_rate * 2).to_le_bytes())?; // byte rate
    w.write_all(&2u16.to_le_bytes())?; // block align
    w.write_all(&16u16.to_le_bytes())?;

    w.write_all(b"data")?;
    w.write_all(&data_len.to_le_bytes())?;
    for &s in &clip.samples {
        let q = (s * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        w.write_all(&q.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}
