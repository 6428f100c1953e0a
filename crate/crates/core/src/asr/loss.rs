//! Targeted frame-level loss and its exact input gradient.
//!
//! The target transcription is stretched over the frame axis by uniform
//! segmentation: token `t` of `T` owns frames `[t*F/T, (t+1)*F/T)`. The
//! loss is the mean per-frame cross-entropy against that alignment.

use crate::audio::AudioClip;

use super::model::AcousticModel;
use super::vocab::{TokenId, Transcription};
use super::AsrError;

/// Frame labels for a target under uniform segmentation. Covers every
/// frame exactly once.
pub fn uniform_alignment(frames: usize, target: &Transcription) -> Result<Vec<TokenId>, AsrError> {
    let t_len = target.len();
    if t_len > frames {
        return Err(AsrError::TargetTooLong { tokens: t_len, frames });
    }
    if t_len == 0 {
        return Ok(vec![super::vocab::BLANK; frames]);
    }
    let mut labels = Vec::with_capacity(frames);
    for t in 0..t_len {
        let start = t * frames / t_len;
        let end = (t + 1) * frames / t_len;
        labels.extend(std::iter::repeat_n(target.tokens[t], end - start));
    }
    debug_assert_eq!(labels.len(), frames);
    Ok(labels)
}

fn check_target(model: &AcousticModel, target: &Transcription) -> Result<(), AsrError> {
    for &id in &target.tokens {
        if id >= model.vocab_size() {
            return Err(AsrError::UnknownToken(format!("id {id}")));
        }
    }
    Ok(())
}

/// Mean frame-level cross-entropy of the clip against the target's
/// uniform alignment.
pub fn loss(model: &AcousticModel, clip: &AudioClip, target: &Transcription) -> Result<f64, AsrError> {
    check_target(model, target)?;
    let extractor = model.extractor()?;
    let feats = extractor.compute(&clip.samples)?;
    let labels = uniform_alignment(feats.len(), target)?;
    let probs = model.forward(&feats)?;
    let total: f64 = probs
        .iter()
        .zip(&labels)
        .map(|(p, &y)| -p[y].max(1e-300).ln())
        .sum();
    Ok(total / feats.len() as f64)
}

/// Loss and its exact reverse-mode gradient with respect to every input
/// sample. The gradient has the clip's length; overlapping-frame
/// contributions are summed per sample.
pub fn loss_and_grad(
    model: &AcousticModel,
    clip: &AudioClip,
    target: &Transcription,
) -> Result<(f64, Vec<f64>), AsrError> {
    check_target(model, target)?;
    let extractor = model.extractor()?;
    let (feats, fcache) = extractor.compute_with_cache(&clip.samples)?;
    let labels = uniform_alignment(feats.len(), target)?;
    let cache = model.forward_with_cache(&feats)?;

    let n = feats.len() as f64;
    let mut total = 0.0;
    let grad_logits: Vec<Vec<f64>> = cache
        .probs
        .iter()
        .zip(&labels)
        .map(|(p, &y)| {
            total += -p[y].max(1e-300).ln();
            let mut g = p.clone();
            g[y] -= 1.0;
            g.iter_mut().for_each(|v| *v /= n);
            g
        })
        .collect();

    let (grad_feats, _) = model.backward(&cache, &grad_logits, false);
    let grad = extractor.backward(&fcache, &grad_feats);
    Ok((total / n, grad))
}

/// Gradient-only wrapper around [`loss_and_grad`].
pub fn grad_input(
    model: &AcousticModel,
    clip: &AudioClip,
    target: &Transcription,
) -> Result<Vec<f64>, AsrError> {
    Ok(loss_and_grad(model, clip, target)?.1)
}
