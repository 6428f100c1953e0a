//! Heuristic search for footage placements that hide a perturbation
//! under the mixture's masking threshold while preserving its decoded
//! transcription.
//!
//! The score of a candidate mixture compares the perturbation's PSD
//! (normalized with the mixture's per-frame offsets, so both live on one
//! dB scale) against the mixture's global masking threshold. Candidates
//! are produced by mutating one coordinate of one placement at a time and
//! accepted only when they lower the score without breaking the decode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::asr::{transcribe, AcousticModel, Transcription};
use crate::audio::AudioClip;
use crate::psycho::{masking_threshold, psd_frames, MaskingThreshold, PSDFrame, DEFAULT_HOP, DEFAULT_WINDOW};

use super::bank::BankSpec;
use super::footage::{synth_footage, MusicFootage, Timbre};
use super::SearchError;

/// Longest allowed grid step; post-masking decays out near 200 ms.
pub const MAX_FRAME_LEN_MS: f64 = 200.0;

/// Candidates may saturate at most this fraction of mixture samples.
const MAX_SATURATION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Number of footage pieces placed simultaneously.
    pub k: usize,
    /// Insertion grid step in milliseconds.
    pub frame_len_ms: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Peak amplitude of each rendered footage piece.
    pub amplitude: f64,
    pub bank: BankSpec,
    /// Score only threshold exceedance instead of absolute distance.
    pub hinge: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            k: 2,
            frame_len_ms: 200.0,
            max_iters: 500,
            seed: 0,
            amplitude: 0.18,
            bank: BankSpec::default(),
            hinge: false,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, fs: u32) -> Result<Vec<Timbre>, SearchError> {
        if self.k == 0 {
            return Err(SearchError::InvalidK);
        }
        if !(self.frame_len_ms > 0.0 && self.frame_len_ms <= MAX_FRAME_LEN_MS) {
            return Err(SearchError::FrameLenTooLarge(self.frame_len_ms));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(SearchError::InvalidAmplitude(self.amplitude));
        }
        self.bank.validate(fs)
    }
}

/// The search outcome: the best accepted mixture and its bookkeeping.
#[derive(Debug, Clone)]
pub struct MaskedSample {
    pub mixture: AudioClip,
    pub placements: Vec<MusicFootage>,
    /// Best accepted score.
    pub score: f64,
    pub transcription: Transcription,
    /// Set when no candidate (including the initial mixture) was
    /// acceptable and the perturbation is returned unmasked.
    pub no_mask: bool,
    /// Score of the initial random mixture.
    pub initial_score: f64,
    /// Score of every evaluated candidate in iteration order.
    pub v_trace: Vec<f64>,
}

/// Grid of insertion positions: multiples of the frame length covering
/// the clip. A clip shorter than one frame still gets position 0.
pub fn frame_grid(delta: &AudioClip, frame_len_ms: f64) -> Result<Vec<usize>, SearchError> {
    if !(frame_len_ms > 0.0 && frame_len_ms <= MAX_FRAME_LEN_MS) {
        return Err(SearchError::FrameLenTooLarge(frame_len_ms));
    }
    let step = (frame_len_ms / 1000.0 * delta.sample_rate as f64).round() as usize;
    let step = step.max(1);
    let mut positions = vec![0];
    let mut p = step;
    while p < delta.len() {
        positions.push(p);
        p += step;
    }
    Ok(positions)
}

fn mean_threshold_distance(
    threshold: &MaskingThreshold,
    delta_psd: &[PSDFrame],
    hearing: &[bool],
    hinge: bool,
) -> f64 {
    let mut acc = 0.0;
    let mut count = 0usize;
    for (frame, (theta, offset)) in threshold.frames.iter().zip(&threshold.offsets).enumerate() {
        let psd = &delta_psd[frame].values;
        for (k, &t) in theta.iter().enumerate() {
            if !hearing[k] {
                continue;
            }
            let theta_delta = psd[k] + offset;
            let d = theta_delta - t;
            acc += if hinge { d.max(0.0) } else { d.abs() };
            count += 1;
        }
    }
    acc / count.max(1) as f64
}

/// Fraction of (frame, in-range bin) cells where the perturbation's
/// normalized PSD exceeds the mixture's masking threshold. The auditable
/// stand-in for "the perturbation is audible here".
pub fn coverage_exceedance(mixture: &AudioClip, delta: &AudioClip) -> Result<f64, SearchError> {
    let (threshold, delta_psd) = threshold_and_psd(mixture, delta)?;
    let hearing = threshold.hearing_bins();
    let mut over = 0usize;
    let mut count = 0usize;
    for (frame, (theta, offset)) in threshold.frames.iter().zip(&threshold.offsets).enumerate() {
        for (k, &t) in theta.iter().enumerate() {
            if !hearing[k] {
                continue;
            }
            if delta_psd[frame].values[k] + offset > t {
                over += 1;
            }
            count += 1;
        }
    }
    Ok(over as f64 / count.max(1) as f64)
}

fn threshold_and_psd(
    mixture: &AudioClip,
    delta: &AudioClip,
) -> Result<(MaskingThreshold, Vec<PSDFrame>), SearchError> {
    if mixture.sample_rate != delta.sample_rate {
        return Err(SearchError::RateMismatch { a: mixture.sample_rate, b: delta.sample_rate });
    }
    if delta.len() > mixture.len() {
        return Err(SearchError::LengthMismatch { mixture: mixture.len(), delta: delta.len() });
    }
    let mut padded = delta.samples.clone();
    padded.resize(mixture.len(), 0.0);
    let padded = AudioClip { samples: padded, sample_rate: delta.sample_rate };
    let threshold = masking_threshold(mixture)?;
    let delta_psd = psd_frames(&padded, DEFAULT_WINDOW, DEFAULT_HOP)?;
    Ok((threshold, delta_psd))
}

/// Mean absolute distance between the perturbation's normalized PSD and
/// the mixture's masking threshold, over frames and in-range bins.
pub fn score(mixture: &AudioClip, delta: &AudioClip) -> Result<f64, SearchError> {
    let (threshold, delta_psd) = threshold_and_psd(mixture, delta)?;
    let hearing = threshold.hearing_bins();
    Ok(mean_threshold_distance(&threshold, &delta_psd, &hearing, false))
}

/// One placement as bank/grid indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    tone: usize,
    timbre: usize,
    duration: usize,
    position: usize,
}

struct Renderer<'a> {
    bank: &'a BankSpec,
    timbres: Vec<Timbre>,
    grid: Vec<usize>,
    amplitude: f64,
    fs: u32,
    canvas: Vec<f64>,
    cache: HashMap<(usize, usize, usize), AudioClip>,
}

impl<'a> Renderer<'a> {
    fn footage(&mut self, s: &Slot) -> Result<AudioClip, SearchError> {
        let key = (s.tone, s.timbre, s.duration);
        if let Some(c) = self.cache.get(&key) {
            return Ok(c.clone());
        }
        let f = synth_footage(
            self.bank.tones[s.tone],
            self.timbres[s.timbre],
            self.bank.durations_ms[s.duration],
            self.amplitude,
            self.fs,
        )?;
        self.cache.insert(key, f.rendered.clone());
        Ok(f.rendered)
    }

    /// Mix the slots over the delta canvas; returns the mixture and the
    /// count of saturated samples.
    fn render(&mut self, slots: &[Slot]) -> Result<(AudioClip, usize), SearchError> {
        let mut samples = self.canvas.clone();
        let mut saturated = 0usize;
        for s in slots {
            let piece = self.footage(s)?;
            let at = self.grid[s.position];
            for (i, &v) in piece.samples.iter().enumerate() {
                let idx = at + i;
                if idx >= samples.len() {
                    break;
                }
                let sum = samples[idx] + v;
                if sum.abs() > 1.0 {
                    saturated += 1;
                }
                samples[idx] = sum.clamp(-1.0, 1.0);
            }
        }
        Ok((AudioClip { samples, sample_rate: self.fs }, saturated))
    }
}

fn random_slot(rng: &mut ChaCha8Rng, bank: &BankSpec, timbres: usize, grid: usize) -> Slot {
    Slot {
        tone: rng.random_range(0..bank.tones.len()),
        timbre: rng.random_range(0..timbres),
        duration: rng.random_range(0..bank.durations_ms.len()),
        position: rng.random_range(0..grid),
    }
}

fn mutate(slot: &mut Slot, rng: &mut ChaCha8Rng, bank: &BankSpec, timbres: usize, grid: usize) {
    match rng.random_range(0..4u32) {
        0 => slot.tone = rng.random_range(0..bank.tones.len()),
        1 => slot.timbre = rng.random_range(0..timbres),
        2 => slot.duration = rng.random_range(0..bank.durations_ms.len()),
        _ => slot.position = rng.random_range(0..grid),
    }
}

/// Greedy seeded search over footage placements.
pub fn search(
    delta: &AudioClip,
    target: &Transcription,
    model: &AcousticModel,
    cfg: &SearchConfig,
) -> Result<MaskedSample, SearchError> {
    let fs = delta.sample_rate;
    let timbres = cfg.validate(fs)?;
    if transcribe(model, delta)? != *target {
        return Err(SearchError::NotAdversarial);
    }

    let grid = frame_grid(delta, cfg.frame_len_ms)?;
    let max_dur = cfg
        .bank
        .durations_ms
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    let canvas_len = delta.len() + (max_dur / 1000.0 * fs as f64).round() as usize;
    let mut canvas = delta.samples.clone();
    canvas.resize(canvas_len, 0.0);

    let delta_padded = AudioClip { samples: canvas.clone(), sample_rate: fs };
    let delta_psd = psd_frames(&delta_padded, DEFAULT_WINDOW, DEFAULT_HOP)?;

    let mut renderer = Renderer {
        bank: &cfg.bank,
        timbres: timbres.clone(),
        grid: grid.clone(),
        amplitude: cfg.amplitude,
        fs,
        canvas,
        cache: HashMap::new(),
    };

    let evaluate = |mixture: &AudioClip| -> Result<f64, SearchError> {
        let threshold = masking_threshold(mixture)?;
        let hearing = threshold.hearing_bins();
        Ok(mean_threshold_distance(&threshold, &delta_psd, &hearing, cfg.hinge))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current: Vec<Slot> = (0..cfg.k)
        .map(|_| random_slot(&mut rng, &cfg.bank, timbres.len(), grid.len()))
        .collect();

    let (initial_mix, sat0) = renderer.render(&current)?;
    let initial_score = evaluate(&initial_mix)?;
    let initial_ok = sat0 as f64 <= MAX_SATURATION * initial_mix.len() as f64
        && transcribe(model, &initial_mix)? == *target;

    let mut v_best = if initial_ok { initial_score } else { f64::INFINITY };
    let mut best: Option<(AudioClip, Vec<Slot>)> = initial_ok.then(|| (initial_mix, current.clone()));
    let mut v_trace = vec![initial_score];

    for _ in 0..cfg.max_iters {
        let mut cand = current.clone();
        let which = rng.random_range(0..cfg.k);
        mutate(&mut cand[which], &mut rng, &cfg.bank, timbres.len(), grid.len());

        let (mix, sat) = renderer.render(&cand)?;
        let v = evaluate(&mix)?;
        v_trace.push(v);
        if sat as f64 > MAX_SATURATION * mix.len() as f64 {
            continue;
        }
        if v < v_best && transcribe(model, &mix)? == *target {
            v_best = v;
            current = cand;
            best = Some((mix, current.clone()));
        }
    }

    match best {
        Some((mixture, slots)) => {
            let placements = slots
                .iter()
                .map(|s| {
                    let mut f = synth_footage(
                        cfg.bank.tones[s.tone],
                        timbres[s.timbre],
                        cfg.bank.durations_ms[s.duration],
                        cfg.amplitude,
                        fs,
                    )?;
                    f.position = s.position;
                    Ok(f)
                })
                .collect::<Result<Vec<_>, SearchError>>()?;
            Ok(MaskedSample {
                mixture,
                placements,
                score: v_best,
                transcription: target.clone(),
                no_mask: false,
                initial_score,
                v_trace,
            })
        }
        None => Ok(MaskedSample {
            mixture: delta.clone(),
            placements: Vec::new(),
            score: score(&delta_padded, delta)?,
            transcription: target.clone(),
            no_mask: true,
            initial_score,
            v_trace,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta_fixture() -> AudioClip {
        // A second of band-limited pseudo-speech energy.
        let mut samples = vec![0.0; 16000];
        for (n, s) in samples.iter_mut().enumerate() {
            let t = n as f64 / 16000.0;
            *s = 0.1 * (std::f64::consts::TAU * 700.0 * t).sin()
                + 0.06 * (std::f64::consts::TAU * 1900.0 * t).sin();
        }
        AudioClip { samples, sample_rate: 16000 }
    }

    #[test]
    fn grid_positions() {
        let clip = AudioClip::silence(16000, 16000);
        let grid = frame_grid(&clip, 200.0).unwrap();
        assert_eq!(grid, vec![0, 3200, 6400, 9600, 12800]);
    }

    #[test]
    fn grid_rejects_long_frames() {
        let clip = AudioClip::silence(16000, 16000);
        assert!(matches!(frame_grid(&clip, 250.0), Err(SearchError::FrameLenTooLarge(_))));
    }

    #[test]
    fn short_clip_gets_origin_only() {
        let clip = AudioClip::silence(1000, 16000);
        assert_eq!(frame_grid(&clip, 200.0).unwrap(), vec![0]);
    }

    #[test]
    fn self_score_equals_normalized_gap() {
        // With mixture == delta the measured quantity reduces to the mean
        // gap between delta's own normalized PSD and its threshold.
        let delta = delta_fixture();
        let v = score(&delta, &delta).unwrap();
        let threshold = masking_threshold(&delta).unwrap();
        let psd = psd_frames(&delta, DEFAULT_WINDOW, DEFAULT_HOP).unwrap();
        let hearing = threshold.hearing_bins();
        let manual = mean_threshold_distance(&threshold, &psd, &hearing, false);
        assert_eq!(v, manual);
    }

    #[test]
    fn silent_delta_scores_floor_distance() {
        let mixture = delta_fixture();
        let silent = AudioClip::silence(16000, 16000);
        let v = score(&mixture, &silent).unwrap();
        // theta_delta sits at the -200 dB floor plus offset, far below any
        // threshold, so the mean distance is large.
        assert!(v > 50.0, "v = {v}");
    }

    #[test]
    fn overlapping_tone_masks_better_than_disjoint() {
        // Identical footage placed on top of the perturbation's energy vs
        // past its end: the overlapping placement scores strictly lower.
        let mut delta = AudioClip::silence(16000, 16000);
        for n in 0..6400 {
            let t = n as f64 / 16000.0;
            delta.samples[n] = 0.08 * (std::f64::consts::TAU * 500.0 * t).sin();
        }
        let piece = synth_footage(523.0, Timbre::Piano, 200.0, 0.3, 16000).unwrap();

        let place = |at: usize| {
            let mut m = delta.samples.clone();
            for (i, &v) in piece.rendered.samples.iter().enumerate() {
                if at + i < m.len() {
                    m[at + i] = (m[at + i] + v).clamp(-1.0, 1.0);
                }
            }
            AudioClip { samples: m, sample_rate: 16000 }
        };
        let overlapping = score(&place(1600), &delta).unwrap();
        let disjoint = score(&place(12800), &delta).unwrap();
        assert!(
            overlapping < disjoint,
            "overlap {overlapping} vs disjoint {disjoint}"
        );
    }

    #[test]
    fn k_zero_rejected() {
        let cfg = SearchConfig { k: 0, ..SearchConfig::default() };
        assert!(matches!(cfg.validate(16000), Err(SearchError::InvalidK)));
    }
}
