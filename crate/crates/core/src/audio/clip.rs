use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::AudioError;

/// Mono PCM signal with a sample rate. Samples live in `[-1, 1]`; every
/// constructor and operation that could leave that range saturates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidRate(sample_rate));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(AudioError::NonFiniteSample(i));
        }
        Ok(Self { samples, sample_rate })
    }

    /// A clip of `len` zero samples.
    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self { samples: vec![0.0; len], sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Root-mean-square amplitude; 0 for an empty clip.
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let e: f64 = self.samples.iter().map(|s| s * s).sum();
        (e / self.samples.len() as f64).sqrt()
    }
}

/// Sample-wise sum of `a` and `b`, with `b` shifted right by `offset`
/// samples. The result covers both operands and saturates to `[-1, 1]`.
pub fn mix(a: &AudioClip, b: &AudioClip, offset: usize) -> Result<AudioClip, AudioError> {
    if a.sample_rate != b.sample_rate {
        return Err(AudioError::SampleRateMismatch { a: a.sample_rate, b: b.sample_rate });
    }
    let len = a.len().max(offset + b.len());
    let mut out = vec![0.0f64; len];
    out[..a.len()].copy_from_slice(&a.samples);
    for (i, &s) in b.samples.iter().enumerate() {
        out[offset + i] = (out[offset + i] + s).clamp(-1.0, 1.0);
    }
    Ok(AudioClip { samples: out, sample_rate: a.sample_rate })
}

/// Add i.i.d. Gaussian noise with standard deviation `sigma`, saturating
/// to `[-1, 1]`. Deterministic for a given seed.
pub fn add_white_noise(clip: &AudioClip, sigma: f64, seed: u64) -> Result<AudioClip, AudioError> {
    if sigma < 0.0 || !sigma.is_finite() {
        return Err(AudioError::NegativeSigma(sigma));
    }
    if sigma == 0.0 {
        return Ok(clip.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma validated above");
    let samples = clip
        .samples
        .iter()
        .map(|&s| (s + normal.sample(&mut rng)).clamp(-1.0, 1.0))
        .collect();
    Ok(AudioClip { samples, sample_rate: clip.sample_rate })
}
