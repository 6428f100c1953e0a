//! Additive-synthesis tone footage with named timbre profiles.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;

use super::SearchError;

/// Partial-amplitude profile of a footage piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Timbre {
    /// Fundamental only.
    Sine,
    /// Decaying harmonic stack with an exponential amplitude envelope.
    Piano,
    /// Sustained odd harmonics.
    Organ,
}

impl Timbre {
    pub fn parse(name: &str) -> Result<Self, SearchError> {
        match name {
            "sine" => Ok(Self::Sine),
            "piano" => Ok(Self::Piano),
            "organ" => Ok(Self::Organ),
            other => Err(SearchError::UnknownTimbre(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Sine => "sine",
            Self::Piano => "piano",
            Self::Organ => "organ",
        }
    }

    /// `(harmonic multiple, relative amplitude)` pairs.
    fn partials(&self) -> &'static [(f64, f64)] {
        match self {
            Self::Sine => &[(1.0, 1.0)],
            Self::Piano => &[(1.0, 1.0), (2.0, 0.5), (3.0, 0.33), (4.0, 0.25), (5.0, 0.2), (6.0, 0.17)],
            Self::Organ => &[(1.0, 1.0), (3.0, 0.5), (5.0, 0.25)],
        }
    }

    /// Amplitude envelope at relative position `x` in `[0, 1]`.
    fn envelope(&self, x: f64) -> f64 {
        match self {
            Self::Piano => (-3.0 * x).exp(),
            _ => 1.0,
        }
    }
}

/// A rendered tone clip with its bank coordinates. `position` is the
/// frame-grid slot the search assigns; freshly synthesized footage sits
/// at slot 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MusicFootage {
    pub tone: f64,
    pub timbre: Timbre,
    pub duration_ms: f64,
    pub position: usize,
    pub rendered: AudioClip,
}

/// Render a footage piece: harmonic partials under the timbre profile,
/// peak-normalized to `amplitude`, with 10 ms raised-cosine fades.
/// Partials above Nyquist are dropped; a fundamental at or above Nyquist
/// is an error.
pub fn synth_footage(
    tone: f64,
    timbre: Timbre,
    duration_ms: f64,
    amplitude: f64,
    fs: u32,
) -> Result<MusicFootage, SearchError> {
    if tone >= fs as f64 / 2.0 || tone <= 0.0 {
        return Err(SearchError::ToneOutOfRange { tone, nyquist: fs as f64 / 2.0 });
    }
    if duration_ms <= 0.0 {
        return Err(SearchError::InvalidDuration(duration_ms));
    }
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(SearchError::InvalidAmplitude(amplitude));
    }

    let len = (duration_ms / 1000.0 * fs as f64).round() as usize;
    let fade = (fs as usize / 100).min(len / 2);
    let nyquist = fs as f64 / 2.0;

    let mut samples = vec![0.0f64; len];
    for (n, s) in samples.iter_mut().enumerate() {
        let t = n as f64 / fs as f64;
        let x = n as f64 / len as f64;
        let mut v = 0.0;
        for &(h, a) in timbre.partials() {
            let f = tone * h;
            if f < nyquist {
                v += a * (std::f64::consts::TAU * f * t).sin();
            }
        }
        let mut env = timbre.envelope(x);
        if n < fade {
            env *= 0.5 * (1.0 - (std::f64::consts::PI * n as f64 / fade as f64).cos());
        } else if n >= len - fade {
            let m = len - 1 - n;
            env *= 0.5 * (1.0 - (std::f64::consts::PI * m as f64 / fade as f64).cos());
        }
        *s = v * env;
    }

    let peak = samples.iter().map(|s| s.abs()).fold(0.0f64, f64::max);
    if peak > 0.0 {
        let scale = amplitude / peak;
        for s in &mut samples {
            *s *= scale;
        }
    }

    Ok(MusicFootage {
        tone,
        timbre,
        duration_ms,
        position: 0,
        rendered: AudioClip { samples, sample_rate: fs },
    })
}
