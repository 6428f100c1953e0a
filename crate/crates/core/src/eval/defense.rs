//! Defense probes: down/up resampling and additive-noise sensitivity.

use serde::{Deserialize, Serialize};

use crate::asr::{transcribe, AcousticModel, Transcription};
use crate::audio::{add_white_noise, resample, AudioClip};
use crate::par;

use super::EvalError;

/// Per-sample outcome of a defense pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefenseRow {
    pub index: usize,
    pub target: Transcription,
    pub decoded_before: Transcription,
    pub decoded_after: Transcription,
    pub success_before: bool,
    pub success_after: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefenseReport {
    pub rows: Vec<DefenseRow>,
    pub success_rate_before: f64,
    pub success_rate_after: f64,
    pub low_hz: u32,
    pub restore_hz: u32,
}

/// Resample every clip down to `low` and back up to `restore`, then check
/// whether it still decodes to its target.
pub fn defense_downsample(
    samples: &[(AudioClip, Transcription)],
    model: &AcousticModel,
    low: u32,
    restore: u32,
) -> Result<DefenseReport, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptySampleSet);
    }
    let rate = samples[0].0.sample_rate;
    if !(low < restore && restore <= rate) {
        return Err(EvalError::RateOrdering { low, restore, rate });
    }

    let rows: Vec<Result<DefenseRow, EvalError>> =
        par::map_ordered(&samples.iter().enumerate().collect::<Vec<_>>(), |(i, (clip, target))| {
            let decoded_before = transcribe(model, clip)?;
            let processed = resample(&resample(clip, low)?, restore)?;
            let decoded_after = transcribe(model, &processed)?;
            Ok(DefenseRow {
                index: *i,
                target: target.clone(),
                success_before: decoded_before == *target,
                success_after: decoded_after == *target,
                decoded_before,
                decoded_after,
            })
        });
    let rows: Vec<DefenseRow> = rows.into_iter().collect::<Result<_, _>>()?;

    let n = rows.len() as f64;
    let before = rows.iter().filter(|r| r.success_before).count() as f64 / n;
    let after = rows.iter().filter(|r| r.success_after).count() as f64 / n;
    Ok(DefenseReport {
        rows,
        success_rate_before: before,
        success_rate_after: after,
        low_hz: low,
        restore_hz: restore,
    })
}

/// Targeted-decode success rate under increasing white noise. Returns one
/// `(sigma, success_fraction)` point per grid entry.
pub fn defense_noise_probe(
    sample: &AudioClip,
    model: &AcousticModel,
    target: &Transcription,
    sigma_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>, EvalError> {
    if sigma_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(EvalError::UnsortedGrid);
    }
    if trials == 0 {
        return Err(EvalError::NoTrials);
    }

    let cases: Vec<(usize, usize)> = sigma_grid
        .iter()
        .enumerate()
        .flat_map(|(gi, _)| (0..trials).map(move |t| (gi, t)))
        .collect();
    let outcomes: Vec<Result<bool, EvalError>> = par::map_ordered(&cases, |&(gi, trial)| {
        let sigma = sigma_grid[gi];
        let noise_seed = seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(gi as u64 + 1))
            .wrapping_add(trial as u64);
        let noisy = add_white_noise(sample, sigma, noise_seed)?;
        Ok(transcribe(model, &noisy)? == *target)
    });

    let mut curve = Vec::with_capacity(sigma_grid.len());
    for (gi, &sigma) in sigma_grid.iter().enumerate() {
        let mut hits = 0usize;
        for (c, o) in cases.iter().zip(&outcomes) {
            if c.0 == gi {
                match o {
                    Ok(true) => hits += 1,
                    Ok(false) => {}
                    Err(e) => return Err(EvalError::Asr(format!("{e}"))),
                }
            }
        }
        curve.push((sigma, hits as f64 / trials as f64));
    }
    Ok(curve)
}

/// Least-squares slope of a curve; the "trendwise" direction check.
pub fn trend_slope(curve: &[(f64, f64)]) -> f64 {
    let n = curve.len() as f64;
    if curve.len() < 2 {
        return 0.0;
    }
    let mx = curve.iter().map(|p| p.0).sum::<f64>() / n;
    let my = curve.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = curve.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = curve.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asr::{FeatureChain, Vocabulary};

    fn tiny_model() -> AcousticModel {
        AcousticModel::new_random(
            Vocabulary::default_synthetic(),
            FeatureChain::default(),
            &[8],
            16000,
            11,
        )
        .unwrap()
    }

    #[test]
    fn rate_ordering_enforced() {
        let model = tiny_model();
        let samples = vec![(AudioClip::silence(4096, 16000), Transcription::empty())];
        assert!(matches!(
            defense_downsample(&samples, &model, 16000, 10000),
            Err(EvalError::RateOrdering { .. })
        ));
        assert!(matches!(
            defense_downsample(&samples, &model, 10000, 20000),
            Err(EvalError::RateOrdering { .. })
        ));
    }

    #[test]
    fn empty_sample_set_rejected() {
        let model = tiny_model();
        assert!(matches!(
            defense_downsample(&[], &model, 10000, 16000),
            Err(EvalError::EmptySampleSet)
        ));
    }

    #[test]
    fn noise_probe_zero_sigma_matches_clean_decode() {
        let model = tiny_model();
        let clip = AudioClip::silence(4096, 16000);
        let target = transcribe(&model, &clip).unwrap();
        let curve = defense_noise_probe(&clip, &model, &target, &[0.0], 5, 3).unwrap();
        assert_eq!(curve, vec![(0.0, 1.0)]);
    }

    #[test]
    fn noise_probe_rejects_unsorted_grid() {
        let model = tiny_model();
        let clip = AudioClip::silence(4096, 16000);
        assert!(matches!(
            defense_noise_probe(&clip, &model, &Transcription::empty(), &[0.1, 0.05], 2, 1),
            Err(EvalError::UnsortedGrid)
        ));
    }

    #[test]
    fn noise_probe_is_deterministic() {
        let model = tiny_model();
        let clip = AudioClip::silence(4096, 16000);
        let t = transcribe(&model, &clip).unwrap();
        let a = defense_noise_probe(&clip, &model, &t, &[0.0, 0.02, 0.05], 10, 7).unwrap();
        let b = defense_noise_probe(&clip, &model, &t, &[0.0, 0.02, 0.05], 10, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slope_signs() {
        assert!(trend_slope(&[(0.0, 1.0), (1.0, 0.5), (2.0, 0.0)]) < 0.0);
        assert!(trend_slope(&[(0.0, 0.0), (1.0, 1.0)]) > 0.0);
        assert_eq!(trend_slope(&[(0.0, 1.0), (1.0, 1.0)]), 0.0);
    }
}
