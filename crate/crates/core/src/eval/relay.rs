//! Simulated play/record relay: each hop narrows the band, jitters the
//! gain, adds noise, and smears the signal with a short reverb tail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::{resample, AudioClip};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayParams {
    /// Intermediate rate each hop passes through.
    pub resample_to: u32,
    /// Uniform gain jitter bound in dB.
    pub gain_jitter_db: f64,
    /// Additive noise deviation per hop.
    pub noise_sigma: f64,
    /// Exponential decay time of the reverb tail in ms.
    pub reverb_decay_ms: f64,
    /// Wet level of the reverb tail; 0 disables it.
    pub reverb_wet: f64,
}

impl Default for RelayParams {
    fn default() -> Self {
        Self {
            resample_to: 12000,
            gain_jitter_db: 1.0,
            noise_sigma: 0.002,
            reverb_decay_ms: 40.0,
            reverb_wet: 0.25,
        }
    }
}

impl RelayParams {
    /// Parameters that leave a clip untouched.
    pub fn identity(rate: u32) -> Self {
        Self {
            resample_to: rate,
            gain_jitter_db: 0.0,
            noise_sigma: 0.0,
            reverb_decay_ms: 0.0,
            reverb_wet: 0.0,
        }
    }
}

/// Direct path plus a positive exponential-decay tail whose energy is
/// `wet^2` of the direct path's, normalized to unit DC gain. A causal
/// energy smear: successive hops can only compound it.
fn reverb_kernel(params: &RelayParams, rate: u32) -> Vec<f64> {
    if params.reverb_wet <= 0.0 || params.reverb_decay_ms <= 0.0 {
        return vec![1.0];
    }
    let tau = params.reverb_decay_ms / 1000.0 * rate as f64;
    let len = (3.0 * tau).ceil() as usize;
    let mut tail: Vec<f64> = (1..=len).map(|n| (-(n as f64) / tau).exp()).collect();
    let tail_energy: f64 = tail.iter().map(|k| k * k).sum();
    let scale = params.reverb_wet / tail_energy.sqrt();
    for k in &mut tail {
        *k *= scale;
    }
    let mut kernel = Vec::with_capacity(len + 1);
    kernel.push(1.0);
    kernel.extend(tail);
    let dc: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= dc;
    }
    kernel
}

/// Apply `hops` play/record cycles. Deterministic per seed.
pub fn relay_simulate(
    sample: &AudioClip,
    hops: usize,
    params: &RelayParams,
    seed: u64,
) -> Result<AudioClip, EvalError> {
    if hops == 0 {
        return Err(EvalError::NoHops);
    }
    let rate = sample.sample_rate;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clip = sample.clone();

    for _ in 0..hops {
        clip = resample(&resample(&clip, params.resample_to)?, rate)?;

        let gain_db = if params.gain_jitter_db > 0.0 {
            rng.random_range(-params.gain_jitter_db..params.gain_jitter_db)
        } else {
            0.0
        };
        let gain = 10f64.powf(gain_db / 20.0);

        let kernel = reverb_kernel(params, rate);
        let mut out = vec![0.0f64; clip.len()];
        if kernel.len() == 1 && kernel[0] == 1.0 {
            out.copy_from_slice(&clip.samples);
            for s in &mut out {
                *s *= gain;
            }
        } else {
            for (n, o) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, &k) in kernel.iter().enumerate() {
                    if j > n {
                        break;
                    }
                    acc += k * clip.samples[n - j];
                }
                *o = acc * gain;
            }
        }

        if params.noise_sigma > 0.0 {
            let normal = Normal::new(0.0, params.noise_sigma).expect("sigma > 0");
            for s in &mut out {
                *s += normal.sample(&mut rng);
            }
        }
        for s in &mut out {
            *s = s.clamp(-1.0, 1.0);
        }
        clip = AudioClip { samples: out, sample_rate: rate };
    }
    Ok(clip)
}

/// Signal-to-distortion ratio in dB between a reference and a processed
/// clip, over their common length.
pub fn sdr_db(reference: &AudioClip, processed: &AudioClip) -> f64 {
    let n = reference.len().min(processed.len());
    let sig: f64 = reference.samples[..n].iter().map(|s| s * s).sum();
    let err: f64 = reference.samples[..n]
        .iter()
        .zip(&processed.samples[..n])
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    10.0 * (sig / err.max(1e-300)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn tone() -> AudioClip {
        AudioClip {
            samples: (0..8000).map(|n| 0.4 * (TAU * 700.0 * n as f64 / 16000.0).sin()).collect(),
            sample_rate: 16000,
        }
    }

    fn broadband() -> AudioClip {
        // Several incommensurate partials plus deterministic wideband
        // content; per-frequency channel effects cannot cancel in sum.
        let samples = (0..8000)
            .map(|n| {
                let t = n as f64 / 16000.0;
                0.15 * (TAU * 443.0 * t).sin()
                    + 0.12 * (TAU * 1187.0 * t).sin()
                    + 0.1 * (TAU * 2531.0 * t).sin()
                    + 0.08 * (TAU * 3779.0 * t).sin()
                    + 0.05 * ((n as f64 * 0.7919).sin() * (n as f64 * 0.1373).cos())
            })
            .collect();
        AudioClip { samples, sample_rate: 16000 }
    }

    #[test]
    fn identity_params_leave_clip_unchanged() {
        let clip = tone();
        let out = relay_simulate(&clip, 3, &RelayParams::identity(16000), 5).unwrap();
        assert_eq!(out, clip);
    }

    #[test]
    fn zero_hops_rejected() {
        assert!(matches!(
            relay_simulate(&tone(), 0, &RelayParams::default(), 1),
            Err(EvalError::NoHops)
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let clip = tone();
        let a = relay_simulate(&clip, 2, &RelayParams::default(), 9).unwrap();
        let b = relay_simulate(&clip, 2, &RelayParams::default(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sdr_decreases_with_hops() {
        // Gain jitter is a multiplicative random walk that can cancel
        // between hops; the irreversible distortions are what accumulate.
        let clip = broadband();
        let params = RelayParams { gain_jitter_db: 0.0, ..RelayParams::default() };
        let mut prev = f64::INFINITY;
        for hops in 1..=4 {
            let out = relay_simulate(&clip, hops, &params, 13).unwrap();
            let sdr = sdr_db(&clip, &out);
            assert!(sdr < prev, "hops {hops}: {sdr} !< {prev}");
            prev = sdr;
        }
    }
}
