//! Band-limited sample-rate conversion.
//!
//! Kaiser-windowed sinc interpolation, 32 zero crossings per side and
//! beta = 8, which keeps the stopband below -60 dB. Content above the
//! smaller Nyquist frequency is removed.

use super::{AudioClip, AudioError};

const ZERO_CROSSINGS: f64 = 32.0;
const KAISER_BETA: f64 = 8.0;

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k as f64 * k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidRate(target_rate));
    }
    if target_rate == clip.sample_rate || clip.is_empty() {
        return Ok(AudioClip { samples: clip.samples.clone(), sample_rate: target_rate });
    }

    let ratio = target_rate as f64 / clip.sample_rate as f64;
    let out_len = (clip.len() as f64 * ratio).round() as usize;
    // Cutoff in cycles per source sample; downsampling narrows it.
    let fc = 0.5 * ratio.min(1.0);
    let half_width = ZERO_CROSSINGS / (2.0 * fc);
    let i0_beta = bessel_i0(KAISER_BETA);

    let src = &clip.samples;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let t = n as f64 / ratio;
        let lo = (t - half_width).ceil() as i64;
        let hi = (t + half_width).floor() as i64;
        let mut acc = 0.0;
        let mut norm = 0.0;
        for m in lo..=hi {
            let tau = t - m as f64;
            let r = tau / half_width;
            let w = bessel_i0(KAISER_BETA * (1.0 - r * r).max(0.0).sqrt()) / i0_beta;
            let h = 2.0 * fc * sinc(2.0 * fc * tau) * w;
            norm += h;
            if (0..src.len() as i64).contains(&m) {
                acc += src[m as usize] * h;
            }
        }
        // Normalizing by the kernel sum pins the passband gain at 1.
        out.push((acc / norm).clamp(-1.0, 1.0));
    }

    Ok(AudioClip { samples: out, sample_rate: target_rate })
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

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len().min(b.len());
        let dot: f64 = a[..n].iter().zip(&b[..n]).map(|(x, y)| x * y).sum();
        let na: f64 = a[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b[..n].iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nb)
    }

    #[test]
    fn same_rate_is_identity() {
        let clip = sine(440.0, 8000, 8000, 0.4);
        let out = resample(&clip, 8000).unwrap();
        let rms_err: f64 = clip
            .samples
            .iter()
            .zip(&out.samples)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        assert!(rms_err < 1e-6);
    }

    #[test]
    fn length_scales_by_ratio() {
        let clip = AudioClip::silence(8000, 8000);
        assert_eq!(resample(&clip, 5000).unwrap().len(), 5000);
        assert_eq!(resample(&clip, 16000).unwrap().len(), 16000);
        assert_eq!(resample(&clip, 12000).unwrap().len(), 12000);
    }

    #[test]
    fn passband_tone_survives_down_up() {
        // 1 kHz is below the 2.5 kHz Nyquist of the 5 kHz leg.
        let clip = sine(1000.0, 8000, 8000, 0.5);
        let down = resample(&clip, 5000).unwrap();
        let back = resample(&down, 8000).unwrap();
        assert!(correlation(&clip.samples, &back.samples) > 0.99);
    }

    #[test]
    fn stopband_tone_is_removed() {
        // 3 kHz exceeds the 2.5 kHz Nyquist of the 5 kHz leg.
        let clip = sine(3000.0, 8000, 8000, 0.5);
        let down = resample(&clip, 5000).unwrap();
        let back = resample(&down, 8000).unwrap();
        assert!(back.rms() < 0.05 * clip.rms(), "rms {} vs {}", back.rms(), clip.rms());
    }

    #[test]
    fn rejects_zero_rate() {
        assert!(resample(&AudioClip::silence(10, 8000), 0).is_err());
    }
}
