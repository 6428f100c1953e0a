//! Log-magnitude power spectral density and its 96-dB normalization.

use rustfft::num_complex::Complex;

use super::PsychoError;

/// Values below this floor (and true zeros) are clamped; it sits far
/// below any threshold of interest.
pub const PSD_FLOOR_DB: f64 = -200.0;

/// Reference level the per-frame maximum is pinned to after normalization.
pub const PSD_REFERENCE_DB: f64 = 96.0;

/// Per-bin dB levels of one analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PSDFrame {
    pub values: Vec<f64>,
    pub normalized: bool,
    /// `96 - max_k p(k)`, recorded at normalization time so other signals
    /// can be placed on the same dB scale.
    pub normalization_offset: f64,
}

/// `p(k) = 10 log10 |s(k)/N|^2`, floored at -200 dB.
pub fn psd(frame: &[Complex<f64>], window_size: usize) -> PSDFrame {
    let n = window_size as f64;
    let values = frame
        .iter()
        .map(|c| {
            let mag = c.norm() / n;
            if mag <= 0.0 {
                PSD_FLOOR_DB
            } else {
                (20.0 * mag.log10()).max(PSD_FLOOR_DB)
            }
        })
        .collect();
    PSDFrame { values, normalized: false, normalization_offset: 0.0 }
}

/// Shift the frame so its maximum sits at 96 dB, recording the offset.
pub fn normalize_psd(p: &PSDFrame) -> Result<PSDFrame, PsychoError> {
    if p.normalized {
        return Err(PsychoError::AlreadyNormalized);
    }
    let max = p.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let offset = PSD_REFERENCE_DB - max;
    Ok(PSDFrame {
        values: p.values.iter().map(|v| v + offset).collect(),
        normalized: true,
        normalization_offset: offset,
    })
}
