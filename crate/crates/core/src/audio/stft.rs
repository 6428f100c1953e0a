//! Short-time Fourier transform with the power-normalized Hann window.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioClip, AudioError};

/// Complex one-sided spectra, one row per analysis window.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    /// `frames[i]` holds bins `0..=window_size/2` of window `i`.
    pub frames: Vec<Vec<Complex<f64>>>,
    pub window_size: usize,
    pub hop: usize,
    pub sample_rate: u32,
}

impl Spectrogram {
    pub fn bins(&self) -> usize {
        self.window_size / 2 + 1
    }

    /// Per-bin magnitudes of frame `i`.
    pub fn magnitudes(&self, i: usize) -> Vec<f64> {
        self.frames[i].iter().map(|c| c.norm()).collect()
    }
}

/// Power-normalized Hann window `sqrt(8/3) * 0.5 * (1 - cos(2*pi*n/N))`.
pub fn modified_hann(n: usize) -> Vec<f64> {
    let norm = (8.0f64 / 3.0).sqrt();
    (0..n)
        .map(|i| norm * 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect()
}

/// Number of analysis windows for a clip of `len` samples: every sample is
/// covered, the tail window is zero-padded.
pub fn frame_count(len: usize, window: usize, hop: usize) -> usize {
    if len == 0 {
        0
    } else if len <= window {
        1
    } else {
        (len - window).div_ceil(hop) + 1
    }
}

/// Windowed DFT of every analysis frame; one-sided bins are kept.
pub fn stft(clip: &AudioClip, window_size: usize, hop: usize) -> Result<Spectrogram, AudioError> {
    if window_size == 0 || !window_size.is_power_of_two() {
        return Err(AudioError::InvalidWindow(window_size));
    }
    if hop == 0 || hop > window_size {
        return Err(AudioError::HopTooLarge { hop, window: window_size });
    }

    let window = modified_hann(window_size);
    let fft = FftPlanner::new().plan_fft_forward(window_size);
    let n_frames = frame_count(clip.len(), window_size, hop);
    let bins = window_size / 2 + 1;

    let mut frames = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); window_size];
    for f in 0..n_frames {
        let start = f * hop;
        for (i, slot) in buf.iter_mut().enumerate() {
            let s = clip.samples.get(start + i).copied().unwrap_or(0.0);
            *slot = Complex::new(s * window[i], 0.0);
        }
        fft.process(&mut buf);
        frames.push(buf[..bins].to_vec());
    }

    Ok(Spectrogram { frames, window_size, hop, sample_rate: clip.sample_rate })
}
