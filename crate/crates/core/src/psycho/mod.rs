//! Per-frame global masking thresholds.
//!
//! Pipeline per analysis frame: log-magnitude PSD, normalization to a
//! 96 dB peak, masker identification, then log-additive combination of
//! the quiet threshold with every masker's spread contribution.

pub mod curves;
mod masker;
mod psd;

pub use curves::{ath, bark, bin_to_freq, in_hearing_range, HEARING_MAX_HZ, HEARING_MIN_HZ};
pub use masker::{find_maskers, global_threshold, individual_threshold, smoothed_level, spreading, Masker};
pub use psd::{normalize_psd, psd, PSDFrame, PSD_FLOOR_DB, PSD_REFERENCE_DB};

use crate::audio::{stft, AudioClip};
use crate::par;

/// Default analysis grid for threshold computation.
pub const DEFAULT_WINDOW: usize = 2048;
pub const DEFAULT_HOP: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum PsychoError {
    #[error("frequency {0} Hz outside the 20 Hz .. 20 kHz hearing range")]
    FrequencyOutOfRange(f64),

    #[error("bin {bin} out of range (max {max})")]
    BinOutOfRange { bin: usize, max: usize },

    #[error("frame is already normalized")]
    AlreadyNormalized,

    #[error("frame is not normalized")]
    NotNormalized,

    #[error("empty clip")]
    EmptyClip,

    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
}

/// Per-frame global masking threshold in dB over frequency bins, plus the
/// normalization offsets needed to place other signals on the same scale.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskingThreshold {
    /// `frames[i][k]` is the threshold of frame `i` at bin `k`.
    pub frames: Vec<Vec<f64>>,
    /// `96 - max_k p(k)` per frame.
    pub offsets: Vec<f64>,
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl MaskingThreshold {
    pub fn bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    /// Which bins lie inside the modeled hearing range.
    pub fn hearing_bins(&self) -> Vec<bool> {
        (0..self.bins())
            .map(|k| in_hearing_range(k as f64 / self.window_size as f64 * self.sample_rate as f64))
            .collect()
    }
}

fn threshold_frame(
    frame: &[rustfft::num_complex::Complex<f64>],
    window_size: usize,
    fs: u32,
) -> (Vec<f64>, f64) {
    let raw = psd(frame, window_size);
    let normalized = normalize_psd(&raw).expect("raw frame is unnormalized");
    let maskers = find_maskers(&normalized, window_size, fs).expect("frame is normalized");
    (global_threshold(&maskers, window_size, fs), normalized.normalization_offset)
}

/// Compute the per-frame global masking threshold of a clip on the default
/// 2048/512 grid. Frames are independent; with the `parallel` feature they
/// are processed concurrently and assembled in frame order, bit-identical
/// to the sequential path.
pub fn masking_threshold(clip: &AudioClip) -> Result<MaskingThreshold, PsychoError> {
    masking_threshold_with(clip, DEFAULT_WINDOW, DEFAULT_HOP, false)
}

/// Sequential reference path for [`masking_threshold`].
pub fn masking_threshold_seq(clip: &AudioClip) -> Result<MaskingThreshold, PsychoError> {
    masking_threshold_with(clip, DEFAULT_WINDOW, DEFAULT_HOP, true)
}

pub fn masking_threshold_with(
    clip: &AudioClip,
    window_size: usize,
    hop: usize,
    force_sequential: bool,
) -> Result<MaskingThreshold, PsychoError> {
    if clip.is_empty() {
        return Err(PsychoError::EmptyClip);
    }
    let spec = stft(clip, window_size, hop)?;
    let fs = clip.sample_rate;
    let f = |frame: &Vec<rustfft::num_complex::Complex<f64>>| threshold_frame(frame, window_size, fs);
    let results = if force_sequential {
        par::map_ordered_seq(&spec.frames, f)
    } else {
        par::map_ordered(&spec.frames, f)
    };
    let mut frames = Vec::with_capacity(results.len());
    let mut offsets = Vec::with_capacity(results.len());
    for (theta, off) in results {
        frames.push(theta);
        offsets.push(off);
    }
    Ok(MaskingThreshold { frames, offsets, window_size, hop, sample_rate: fs })
}

/// Raw (unnormalized) PSD rows of a clip on the same grid the threshold
/// pipeline uses.
pub fn psd_frames(clip: &AudioClip, window_size: usize, hop: usize) -> Result<Vec<PSDFrame>, PsychoError> {
    let spec = stft(clip, window_size, hop)?;
    Ok(spec.frames.iter().map(|f| psd(f, window_size)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn sine(freq: f64, len: usize, rate: u32, amp: f64) -> AudioClip {
        AudioClip {
            samples: (0..len).map(|n| amp * (TAU * freq * n as f64 / rate as f64).sin()).collect(),
            sample_rate: rate,
        }
    }

    #[test]
    fn silence_yields_exact_ath_everywhere() {
        let clip = AudioClip::silence(8000, 16000);
        let mt = masking_threshold(&clip).unwrap();
        let hearing = mt.hearing_bins();
        for frame in &mt.frames {
            for (k, &t) in frame.iter().enumerate() {
                if hearing[k] {
                    let f = k as f64 / 2048.0 * 16000.0;
                    assert_eq!(t, ath(f).unwrap());
                }
            }
        }
    }

    #[test]
    fn parallel_matches_sequential_bit_exactly() {
        let clip = sine(997.0, 16000, 16000, 0.4);
        let a = masking_threshold(&clip).unwrap();
        let b = masking_threshold_seq(&clip).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stationary_tone_thresholds_are_stable() {
        let clip = sine(1000.0, 16000, 16000, 0.5);
        let mt = masking_threshold(&clip).unwrap();
        let hearing = mt.hearing_bins();
        // Interior frames (fully inside the tone) agree to within 1 dB.
        let interior = &mt.frames[2..mt.frames.len() - 2];
        for w in interior.windows(2) {
            let max_dev = w[0]
                .iter()
                .zip(&w[1])
                .enumerate()
                .filter(|(k, _)| hearing[*k])
                .map(|(_, (a, b))| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(max_dev < 1.0, "max_dev = {max_dev}");
        }
    }

    #[test]
    fn tone_burst_elevates_only_overlapping_frames() {
        let rate = 16000;
        let mut samples = vec![0.0; 16000];
        for (n, s) in samples.iter_mut().enumerate().take(6000).skip(4000) {
            *s = 0.5 * (TAU * 1000.0 * n as f64 / rate as f64).sin();
        }
        let clip = AudioClip { samples, sample_rate: rate };
        let mt = masking_threshold(&clip).unwrap();
        let k = 128; // 1 kHz bin
        let quiet = ath(1000.0).unwrap();
        for (i, frame) in mt.frames.iter().enumerate() {
            let start = i * mt.hop;
            let overlaps = start < 6000 && start + mt.window_size > 4000;
            if overlaps {
                assert!(frame[k] > quiet);
            } else {
                assert_eq!(frame[k], quiet, "frame {i}");
            }
        }
    }

    #[test]
    fn threshold_never_below_ath() {
        let clip = sine(523.0, 12000, 16000, 0.7);
        let mt = masking_threshold(&clip).unwrap();
        let hearing = mt.hearing_bins();
        for frame in &mt.frames {
            for (k, &t) in frame.iter().enumerate() {
                if hearing[k] {
                    let f = k as f64 / 2048.0 * 16000.0;
                    assert!(t >= ath(f).unwrap() - 1e-12);
                }
            }
        }
    }

    #[test]
    fn gain_invariance_of_normalized_domain() {
        // Scaling the clip shifts PSD and its max equally, so thresholds
        // in the normalized domain are unchanged (away from the floor).
        let a = sine(440.0, 8000, 16000, 0.5);
        let b = sine(440.0, 8000, 16000, 0.05);
        let ta = masking_threshold(&a).unwrap();
        let tb = masking_threshold(&b).unwrap();
        for (fa, fb) in ta.frames.iter().zip(&tb.frames) {
            for (x, y) in fa.iter().zip(fb) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn empty_clip_rejected() {
        assert!(matches!(
            masking_threshold(&AudioClip::silence(0, 16000)),
            Err(PsychoError::EmptyClip)
        ));
    }
}
