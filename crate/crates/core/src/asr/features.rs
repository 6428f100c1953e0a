//! Log-mel feature chain with a hand-written backward pass.
//!
//! Forward per frame: windowed DFT -> one-sided power -> triangular mel
//! bank (partition of unity over [0, Nyquist]) -> log with a linear power
//! floor -> optional orthonormal DCT-II. Every stage is differentiable
//! with respect to the input samples; the backward pass routes gradients
//! through the same stages and sums overlapping-frame contributions per
//! sample.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::modified_hann;
use super::AsrError;

/// Feature-chain parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureChain {
    pub window: usize,
    pub hop: usize,
    pub mel_filter_count: usize,
    /// Linear power floor applied before the log.
    pub log_floor: f64,
    pub include_dct: bool,
}

impl Default for FeatureChain {
    fn default() -> Self {
        Self { window: 512, hop: 256, mel_filter_count: 32, log_floor: 1e-10, include_dct: false }
    }
}

impl FeatureChain {
    pub fn validate(&self) -> Result<(), AsrError> {
        if self.window == 0 || !self.window.is_power_of_two() {
            return Err(AsrError::InvalidChain(format!("window {} not a power of two", self.window)));
        }
        if self.hop == 0 || self.hop > self.window {
            return Err(AsrError::InvalidChain(format!("hop {} vs window {}", self.hop, self.window)));
        }
        if self.mel_filter_count < 2 {
            return Err(AsrError::InvalidChain(format!("mel_filter_count {}", self.mel_filter_count)));
        }
        if !(self.log_floor > 0.0) {
            return Err(AsrError::InvalidChain(format!("log_floor {} must be > 0", self.log_floor)));
        }
        Ok(())
    }

    pub fn frame_count(&self, samples: usize) -> usize {
        if samples < self.window {
            0
        } else {
            (samples - self.window).div_ceil(self.hop) + 1
        }
    }
}

fn mel_of_hz(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

fn hz_of_mel(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangular mel filterbank over the one-sided spectrum. Filters sum to
/// exactly 1 at every bin (the edge filters are flattened outward), so no
/// spectral energy is lost at the band edges.
#[derive(Debug, Clone)]
pub struct MelBank {
    /// `weights[m][k]` for filter `m`, bin `k`.
    pub weights: Vec<Vec<f64>>,
    /// Peak frequency of each filter in Hz.
    pub centers_hz: Vec<f64>,
}

impl MelBank {
    pub fn new(filters: usize, window: usize, sample_rate: u32) -> Self {
        let bins = window / 2 + 1;
        let nyquist = sample_rate as f64 / 2.0;
        let mel_max = mel_of_hz(nyquist);
        // filters+1 boundaries give `filters` peaks m_1..m_filters.
        let bounds: Vec<f64> = (0..=filters + 1)
            .map(|i| mel_max * i as f64 / (filters + 1) as f64)
            .collect();

        let mut weights = vec![vec![0.0; bins]; filters];
        for k in 0..bins {
            let mel = mel_of_hz(k as f64 / window as f64 * sample_rate as f64);
            for (m, row) in weights.iter_mut().enumerate() {
                let lo = bounds[m];
                let mid = bounds[m + 1];
                let hi = bounds[m + 2];
                let w = if m == 0 && mel <= mid {
                    1.0
                } else if m == filters - 1 && mel >= mid {
                    1.0
                } else if mel >= lo && mel <= mid && mid > lo {
                    (mel - lo) / (mid - lo)
                } else if mel > mid && mel <= hi && hi > mid {
                    (hi - mel) / (hi - mid)
                } else {
                    0.0
                };
                row[k] = w;
            }
        }
        let centers_hz = (1..=filters).map(|i| hz_of_mel(bounds[i])).collect();
        Self { weights, centers_hz }
    }
}

/// Orthonormal DCT-II matrix (rows are output coefficients).
fn dct_matrix(n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        let scale = if i == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
        for (j, v) in row.iter_mut().enumerate() {
            *v = scale * (std::f64::consts::PI * i as f64 * (j as f64 + 0.5) / n as f64).cos();
        }
    }
    d
}

/// Forward intermediates kept for the backward pass.
pub struct FeatureCache {
    pub spectra: Vec<Vec<Complex<f64>>>,
    pub mel_power: Vec<Vec<f64>>,
    pub input_len: usize,
}

/// Feature extractor bound to a sample rate.
pub struct FeatureExtractor {
    pub chain: FeatureChain,
    pub sample_rate: u32,
    window_fn: Vec<f64>,
    mel: MelBank,
    dct: Option<Vec<Vec<f64>>>,
    fft: Arc<dyn Fft<f64>>,
}

impl FeatureExtractor {
    pub fn new(chain: FeatureChain, sample_rate: u32) -> Result<Self, AsrError> {
        chain.validate()?;
        let window_fn = modified_hann(chain.window);
        let mel = MelBank::new(chain.mel_filter_count, chain.window, sample_rate);
        let dct = chain.include_dct.then(|| dct_matrix(chain.mel_filter_count));
        let fft = FftPlanner::new().plan_fft_forward(chain.window);
        Ok(Self { chain, sample_rate, window_fn, mel, dct, fft })
    }

    pub fn coeff_count(&self) -> usize {
        self.chain.mel_filter_count
    }

    pub fn mel_centers_hz(&self) -> &[f64] {
        &self.mel.centers_hz
    }

    /// Feature matrix (frames x coefficients).
    pub fn compute(&self, samples: &[f64]) -> Result<Vec<Vec<f64>>, AsrError> {
        Ok(self.compute_with_cache(samples)?.0)
    }

    pub fn compute_with_cache(&self, samples: &[f64]) -> Result<(Vec<Vec<f64>>, FeatureCache), AsrError> {
        let w = self.chain.window;
        if samples.len() < w {
            return Err(AsrError::ClipTooShort { len: samples.len(), window: w });
        }
        let n_frames = self.chain.frame_count(samples.len());
        let bins = w / 2 + 1;

        let mut spectra = Vec::with_capacity(n_frames);
        let mut mel_power = Vec::with_capacity(n_frames);
        let mut feats = Vec::with_capacity(n_frames);
        let mut buf = vec![Complex::new(0.0, 0.0); w];

        for f in 0..n_frames {
            let start = f * self.chain.hop;
            for (i, slot) in buf.iter_mut().enumerate() {
                let s = samples.get(start + i).copied().unwrap_or(0.0);
                *slot = Complex::new(s * self.window_fn[i], 0.0);
            }
            self.fft.process(&mut buf);
            let spectrum = buf[..bins].to_vec();

            let power: Vec<f64> = spectrum.iter().map(|c| c.norm_sqr()).collect();
            let mel: Vec<f64> = self
                .mel
                .weights
                .iter()
                .map(|row| row.iter().zip(&power).map(|(w, p)| w * p).sum())
                .collect();
            let logmel: Vec<f64> = mel.iter().map(|&m| m.max(self.chain.log_floor).ln()).collect();
            let row = match &self.dct {
                Some(d) => d
                    .iter()
                    .map(|drow| drow.iter().zip(&logmel).map(|(a, b)| a * b).sum())
                    .collect(),
                None => logmel,
            };

            spectra.push(spectrum);
            mel_power.push(mel);
            feats.push(row);
        }

        Ok((feats, FeatureCache { spectra, mel_power, input_len: samples.len() }))
    }

    /// Backpropagate `d(loss)/d(features)` to a per-sample gradient.
    pub fn backward(&self, cache: &FeatureCache, grad_feat: &[Vec<f64>]) -> Vec<f64> {
        let w = self.chain.window;
        let mut grad = vec![0.0f64; cache.input_len];
        let mut c = vec![Complex::new(0.0, 0.0); w];

        for (f, gfeat) in grad_feat.iter().enumerate() {
            // Optional DCT is linear: transpose.
            let glogmel: Vec<f64> = match &self.dct {
                Some(d) => (0..self.chain.mel_filter_count)
                    .map(|j| d.iter().zip(gfeat).map(|(drow, g)| drow[j] * g).sum())
                    .collect(),
                None => gfeat.clone(),
            };
            // log(max(mel, floor)): zero gradient on floored bins.
            let gmel: Vec<f64> = glogmel
                .iter()
                .zip(&cache.mel_power[f])
                .map(|(g, &m)| if m > self.chain.log_floor { g / m } else { 0.0 })
                .collect();
            // Mel bank transpose to per-bin power gradients.
            let bins = w / 2 + 1;
            let mut gpower = vec![0.0f64; bins];
            for (m, row) in self.mel.weights.iter().enumerate() {
                let g = gmel[m];
                if g != 0.0 {
                    for (k, wk) in row.iter().enumerate() {
                        gpower[k] += wk * g;
                    }
                }
            }
            // d|X_k|^2/dx_n = 2 Re(conj(X_k) e^{-2 pi i k n / N}); summing
            // over one-sided bins k is one forward DFT of g_k * conj(X_k).
            for slot in c.iter_mut() {
                *slot = Complex::new(0.0, 0.0);
            }
            for (k, &g) in gpower.iter().enumerate() {
                c[k] = cache.spectra[f][k].conj() * g;
            }
            self.fft.process(&mut c);

            let start = f * self.chain.hop;
            for n in 0..w {
                let idx = start + n;
                if idx < cache.input_len {
                    grad[idx] += 2.0 * c[n].re * self.window_fn[n];
                }
            }
        }
        grad
    }
}

/// Convenience wrapper matching the spectrogram grid used elsewhere.
pub fn features(clip: &crate::audio::AudioClip, chain: &FeatureChain) -> Result<Vec<Vec<f64>>, AsrError> {
    FeatureExtractor::new(chain.clone(), clip.sample_rate)?.compute(&clip.samples)
}
