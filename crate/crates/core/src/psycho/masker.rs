//! Masker identification, the two-slope spread function, and the
//! individual/global threshold combination.

use super::curves::{ath, bark, bin_to_freq, in_hearing_range};
use super::psd::PSDFrame;
use super::PsychoError;

/// A spectral component strong enough to raise nearby audibility
/// thresholds. `level` is the smoothed normalized PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct Masker {
    pub bin_index: usize,
    pub bark: f64,
    pub level: f64,
}

/// Log-domain additive smoothing of a masker with its two neighbors.
pub fn smoothed_level(left: f64, center: f64, right: f64) -> f64 {
    10.0 * (10f64.powf(left / 10.0) + 10f64.powf(center / 10.0) + 10f64.powf(right / 10.0)).log10()
}

/// Identify maskers in a normalized PSD frame.
///
/// A bin qualifies when it is a local maximum with at least one strict
/// neighbor inequality (flat frames therefore yield none), sits at or
/// above the threshold in quiet, and carries the highest level among
/// candidates within half a Bark. Survivors are smoothed with their
/// immediate neighbors. Boundary bins never qualify.
pub fn find_maskers(frame: &PSDFrame, window_size: usize, fs: u32) -> Result<Vec<Masker>, PsychoError> {
    if !frame.normalized {
        return Err(PsychoError::NotNormalized);
    }
    let p = &frame.values;
    let bins = p.len();

    let mut candidates: Vec<(usize, f64, f64)> = Vec::new(); // (bin, raw level, bark)
    for k in 1..bins.saturating_sub(1) {
        let local_max = p[k - 1] <= p[k] && p[k] >= p[k + 1];
        let strict = p[k - 1] < p[k] || p[k] > p[k + 1];
        if !(local_max && strict) {
            continue;
        }
        let f = bin_to_freq(k, window_size, fs)?;
        if !in_hearing_range(f) {
            continue;
        }
        if p[k] < ath(f)? {
            continue;
        }
        candidates.push((k, p[k], bark(f)));
    }

    // Greedy half-Bark exclusion from the strongest candidate down; ties
    // resolve to the lower bin so the outcome is deterministic.
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for &(k, _, b) in &candidates {
        if kept.iter().all(|&(_, kb)| (b - kb).abs() > 0.5) {
            kept.push((k, b));
        }
    }
    kept.sort_by_key(|&(k, _)| k);

    Ok(kept
        .into_iter()
        .map(|(k, b)| Masker {
            bin_index: k,
            bark: b,
            level: smoothed_level(p[k - 1], p[k], p[k + 1]),
        })
        .collect())
}

/// Two-slope spread of masking across Bark distance: +27 dB/Bark toward
/// lower frequencies, a level-dependent slope toward higher ones.
pub fn spreading(b_masker: f64, b_maskee: f64, masker_level: f64) -> f64 {
    let db = b_maskee - b_masker;
    if db < 0.0 {
        27.0 * db
    } else {
        let g = -27.0 + 0.37 * (masker_level - 40.0).max(0.0);
        g * db
    }
}

/// Threshold contribution of one masker at a maskee position.
pub fn individual_threshold(masker: &Masker, b_maskee: f64) -> f64 {
    let delta_m = -6.025 - 0.275 * masker.bark;
    masker.level + delta_m + spreading(masker.bark, b_maskee, masker.level)
}

/// Combine the threshold in quiet with all individual thresholds per bin.
///
/// Bins below 20 Hz inherit the first in-range value and bins above
/// 20 kHz the last one; the hearing model does not cover them.
pub fn global_threshold(maskers: &[Masker], window_size: usize, fs: u32) -> Vec<f64> {
    let bins = window_size / 2 + 1;
    let mut theta = vec![f64::NAN; bins];
    let mut first_in_range = None;
    let mut last_in_range = None;

    for (k, slot) in theta.iter_mut().enumerate() {
        let f = k as f64 / window_size as f64 * fs as f64;
        if !in_hearing_range(f) {
            continue;
        }
        let quiet = ath(f).expect("in range");
        *slot = if maskers.is_empty() {
            quiet
        } else {
            let b = bark(f);
            let mut acc = 10f64.powf(quiet / 10.0);
            for m in maskers {
                acc += 10f64.powf(individual_threshold(m, b) / 10.0);
            }
            10.0 * acc.log10()
        };
        if first_in_range.is_none() {
            first_in_range = Some(k);
        }
        last_in_range = Some(k);
    }

    if let (Some(lo), Some(hi)) = (first_in_range, last_in_range) {
        for k in 0..lo {
            theta[k] = theta[lo];
        }
        for k in hi + 1..bins {
            theta[k] = theta[hi];
        }
    }
    theta
}
