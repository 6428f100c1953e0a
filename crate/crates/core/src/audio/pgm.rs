//! 8-bit grayscale PGM (binary P5) dumps for spectrogram and threshold
//! matrices. Rows are frames, columns are frequency bins.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{AudioError, Spectrogram};

/// Write any frame-by-bin matrix of gray levels.
pub fn write_pgm(pixels: &[Vec<u8>], path: &Path) -> Result<(), AudioError> {
    let rows = pixels.len();
    let cols = pixels.first().map_or(0, Vec::len);
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    for row in pixels {
        w.write_all(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Map a dB matrix linearly onto `[0, 255]`, clamping to a window of
/// `range_db` below the matrix maximum.
pub fn db_to_gray(values: &[Vec<f64>], range_db: f64) -> Vec<Vec<u8>> {
    let max = values
        .iter()
        .flat_map(|r| r.iter())
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return values.iter().map(|r| vec![0; r.len()]).collect();
    }
    let lo = max - range_db;
    values
        .iter()
        .map(|row| {
            row.iter()
                .map(|&v| (((v - lo) / range_db).clamp(0.0, 1.0) * 255.0).round() as u8)
                .collect()
        })
        .collect()
}

/// Dump spectrogram magnitudes in dB, windowed 96 dB below the peak.
pub fn write_spectrogram_pgm(spec: &Spectrogram, path: &Path) -> Result<(), AudioError> {
    let db: Vec<Vec<f64>> = (0..spec.frames.len())
        .map(|f| {
            spec.magnitudes(f)
                .iter()
                .map(|&m| 20.0 * m.max(1e-12).log10())
                .collect()
        })
        .collect();
    write_pgm(&db_to_gray(&db, 96.0), path)
}
