//! Seeded mini-batch gradient descent on frame-level cross-entropy.
//!
//! Per-utterance gradients inside a batch may be computed in parallel but
//! are reduced in input order, so training is bit-identical regardless of
//! thread count.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::par;

use super::corpus::LabeledClip;
use super::decode::decode;
use super::features::{FeatureChain, FeatureExtractor};
use super::model::{AcousticModel, ParamGrads};
use super::vocab::Vocabulary;
use super::AsrError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub momentum: f64,
    pub seed: u64,
    pub holdout_fraction: f64,
    pub hidden: Vec<usize>,
    pub chain: FeatureChain,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 8,
            lr: 0.3,
            momentum: 0.9,
            seed: 1,
            holdout_fraction: 0.1,
            hidden: vec![128, 128],
            chain: FeatureChain::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub frame_accuracy: f64,
    pub sequence_match: f64,
    pub train_count: usize,
    pub holdout_count: usize,
    pub final_loss: f64,
}

fn utterance_grad(
    model: &AcousticModel,
    extractor: &FeatureExtractor,
    lc: &LabeledClip,
) -> Result<(f64, ParamGrads), AsrError> {
    let feats = extractor.compute(&lc.clip.samples)?;
    let labels = lc.frame_labels(&model.chain);
    debug_assert_eq!(feats.len(), labels.len());
    let cache = model.forward_with_cache(&feats)?;
    let n = feats.len() as f64;
    let mut loss = 0.0;
    let grad_logits: Vec<Vec<f64>> = cache
        .probs
        .iter()
        .zip(&labels)
        .map(|(p, &y)| {
            loss += -p[y].max(1e-300).ln();
            let mut g = p.clone();
            g[y] -= 1.0;
            g.iter_mut().for_each(|v| *v /= n);
            g
        })
        .collect();
    let (_, pg) = model.backward(&cache, &grad_logits, true);
    Ok((loss / n, pg.expect("param grads requested")))
}

/// Train a fresh model on the corpus. With `epochs == 0` the seeded
/// initialization is returned untouched.
pub fn train(
    corpus: &[LabeledClip],
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> Result<(AcousticModel, TrainReport), AsrError> {
    if corpus.is_empty() {
        return Err(AsrError::EmptyCorpus);
    }
    let rate = corpus[0].clip.sample_rate;
    if corpus.iter().any(|lc| lc.clip.sample_rate != rate) {
        return Err(AsrError::CorpusRateMismatch);
    }
    for lc in corpus {
        for &t in &lc.tokens {
            if t >= vocab.len() {
                return Err(AsrError::UnknownToken(format!("id {t}")));
            }
        }
    }

    let mut model =
        AcousticModel::new_random(vocab.clone(), cfg.chain.clone(), &cfg.hidden, rate, cfg.seed)?;
    let extractor = model.extractor()?;

    // Deterministic holdout split.
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5EED_0F42);
    order.shuffle(&mut rng);
    let holdout_count = ((corpus.len() as f64 * cfg.holdout_fraction).round() as usize)
        .min(corpus.len().saturating_sub(1));
    let (train_idx, held_idx) = order.split_at(corpus.len() - holdout_count);
    let mut train_idx = train_idx.to_vec();

    let mut velocity = ParamGrads::zeros_like(&model);
    let mut final_loss = f64::NAN;

    for _epoch in 0..cfg.epochs {
        train_idx.shuffle(&mut rng);
        for batch in train_idx.chunks(cfg.batch_size.max(1)) {
            let refs: Vec<&LabeledClip> = batch.iter().map(|&i| &corpus[i]).collect();
            let results = par::map_ordered(&refs, |lc| utterance_grad(&model, &extractor, lc));
            let mut acc = ParamGrads::zeros_like(&model);
            let mut loss = 0.0;
            for r in results {
                let (l, g) = r?;
                loss += l;
                acc.add_assign(&g);
            }
            acc.scale(1.0 / batch.len() as f64);
            final_loss = loss / batch.len() as f64;

            velocity.scale(cfg.momentum);
            velocity.add_assign(&acc);
            model.sgd_step(&velocity, cfg.lr);
        }
    }

    let eval_idx = if held_idx.is_empty() { &train_idx[..] } else { held_idx };
    let report = evaluate(&model, &extractor, corpus, eval_idx, train_idx.len(), final_loss)?;
    Ok((model, report))
}

fn evaluate(
    model: &AcousticModel,
    extractor: &FeatureExtractor,
    corpus: &[LabeledClip],
    idx: &[usize],
    train_count: usize,
    final_loss: f64,
) -> Result<TrainReport, AsrError> {
    let mut frames_total = 0usize;
    let mut frames_right = 0usize;
    let mut seq_right = 0usize;
    for &i in idx {
        let lc = &corpus[i];
        let feats = extractor.compute(&lc.clip.samples)?;
        let probs = model.forward(&feats)?;
        let labels = lc.frame_labels(&model.chain);
        for (p, &y) in probs.iter().zip(&labels) {
            let arg = p.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            frames_total += 1;
            if arg == y {
                frames_right += 1;
            }
        }
        if decode(&probs).tokens == lc.tokens {
            seq_right += 1;
        }
    }
    Ok(TrainReport {
        frame_accuracy: frames_right as f64 / frames_total.max(1) as f64,
        sequence_match: seq_right as f64 / idx.len().max(1) as f64,
        train_count,
        holdout_count: idx.len(),
        final_loss,
    })
}

/// End-to-end transcription: features, forward pass, greedy decode.
pub fn transcribe(model: &AcousticModel, clip: &crate::audio::AudioClip) -> Result<super::vocab::Transcription, AsrError> {
    let feats = model.extractor()?.compute(&clip.samples)?;
    Ok(decode(&model.forward(&feats)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asr::corpus::synth_corpus;

    #[test]
    fn empty_corpus_rejected() {
        let v = Vocabulary::default_synthetic();
        assert!(matches!(train(&[], &v, &TrainConfig::default()), Err(AsrError::EmptyCorpus)));
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let v = Vocabulary::default_synthetic();
        let corpus = synth_corpus(&v, 4, 2, 16000).unwrap();
        let cfg = TrainConfig { epochs: 0, ..TrainConfig::default() };
        let (model, _) = train(&corpus, &v, &cfg).unwrap();
        let fresh = AcousticModel::new_random(v.clone(), cfg.chain.clone(), &cfg.hidden, 16000, cfg.seed).unwrap();
        assert_eq!(model, fresh);
    }

    #[test]
    fn training_is_bit_deterministic() {
        let v = Vocabulary::default_synthetic();
        let corpus = synth_corpus(&v, 10, 3, 16000).unwrap();
        let cfg = TrainConfig { epochs: 2, hidden: vec![16], ..TrainConfig::default() };
        let (a, _) = train(&corpus, &v, &cfg).unwrap();
        let (b, _) = train(&corpus, &v, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn loss_decreases_over_training() {
        let v = Vocabulary::default_synthetic();
        let corpus = synth_corpus(&v, 12, 4, 16000).unwrap();
        let cfg0 = TrainConfig { epochs: 0, hidden: vec![16], ..TrainConfig::default() };
        let cfg5 = TrainConfig { epochs: 5, hidden: vec![16], ..TrainConfig::default() };
        let (m0, _) = train(&corpus, &v, &cfg0).unwrap();
        let (m5, _) = train(&corpus, &v, &cfg5).unwrap();
        let ex = m0.extractor().unwrap();
        let mean_loss = |m: &AcousticModel| -> f64 {
            corpus
                .iter()
                .map(|lc| utterance_grad(m, &ex, lc).unwrap().0)
                .sum::<f64>()
                / corpus.len() as f64
        };
        assert!(mean_loss(&m5) < mean_loss(&m0));
    }
}
