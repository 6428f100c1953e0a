//! Synthetic labeled corpus: token sounds rendered as formant-style
//! partial stacks, concatenated into short utterances with random gaps,
//! gain, and light noise. Deterministic per seed.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::audio::{read_wav, write_wav, AudioClip};

use super::features::FeatureChain;
use super::vocab::{TokenId, Transcription, Vocabulary, BLANK};
use super::AsrError;

/// Where a token sounds inside its clip, in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSpan {
    pub token: TokenId,
    pub start: usize,
    pub end: usize,
}

/// One labeled utterance.
#[derive(Debug, Clone)]
pub struct LabeledClip {
    pub clip: AudioClip,
    pub tokens: Vec<TokenId>,
    pub spans: Vec<TokenSpan>,
}

impl LabeledClip {
    pub fn transcription(&self) -> Transcription {
        Transcription { tokens: self.tokens.clone() }
    }

    /// Frame labels on the given chain's grid: a frame is labeled with the
    /// token whose span contains the frame center, blank otherwise.
    pub fn frame_labels(&self, chain: &FeatureChain) -> Vec<TokenId> {
        let frames = chain.frame_count(self.clip.len());
        (0..frames)
            .map(|f| {
                let center = f * chain.hop + chain.window / 2;
                self.spans
                    .iter()
                    .find(|s| (s.start..s.end).contains(&center))
                    .map_or(BLANK, |s| s.token)
            })
            .collect()
    }
}

const GAP_NOISE_SIGMA: f64 = 0.003;

fn render_token(
    vocab: &Vocabulary,
    token: TokenId,
    duration: usize,
    gain: f64,
    rate: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let spec = &vocab.tokens[token];
    let phases: Vec<f64> = spec.partials.iter().map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let peak: f64 = spec.partials.iter().map(|&(_, a)| a).sum();
    let fade = (rate as usize / 100).min(duration / 2); // 10 ms
    (0..duration)
        .map(|n| {
            let t = n as f64 / rate as f64;
            let mut s = 0.0;
            for (&(f, a), &ph) in spec.partials.iter().zip(&phases) {
                s += a * (std::f64::consts::TAU * f * t + ph).sin();
            }
            let mut env = 1.0;
            if n < fade {
                env = 0.5 * (1.0 - (std::f64::consts::PI * n as f64 / fade as f64).cos());
            } else if n >= duration - fade {
                let m = duration - 1 - n;
                env = 0.5 * (1.0 - (std::f64::consts::PI * m as f64 / fade as f64).cos());
            }
            gain * env * s / peak
        })
        .collect()
}

/// Generate `count` labeled utterances of 2-4 tokens each. Adjacent
/// duplicate tokens are avoided so greedy collapse can reproduce every
/// label sequence.
pub fn synth_corpus(
    vocab: &Vocabulary,
    count: usize,
    seed: u64,
    sample_rate: u32,
) -> Result<Vec<LabeledClip>, AsrError> {
    if vocab.speech_tokens().len() < 2 {
        return Err(AsrError::VocabularyTooSmall(vocab.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, GAP_NOISE_SIGMA).expect("fixed sigma");
    let speech = vocab.speech_tokens();
    let mut out = Vec::with_capacity(count);

    for _ in 0..count {
        let n_tokens = rng.random_range(2..=4usize);
        let mut tokens: Vec<TokenId> = Vec::with_capacity(n_tokens);
        for _ in 0..n_tokens {
            loop {
                let t = speech[rng.random_range(0..speech.len())];
                if tokens.last() != Some(&t) {
                    tokens.push(t);
                    break;
                }
            }
        }

        let lead = rng.random_range(0.03..0.08);
        let mut samples: Vec<f64> = vec![0.0; (lead * sample_rate as f64) as usize];
        let mut spans = Vec::with_capacity(n_tokens);
        for (i, &tok) in tokens.iter().enumerate() {
            let dur_ms = rng.random_range(100.0..300.0);
            let duration = (dur_ms / 1000.0 * sample_rate as f64) as usize;
            let gain = rng.random_range(0.3..0.8);
            let start = samples.len();
            samples.extend(render_token(vocab, tok, duration, gain, sample_rate, &mut rng));
            spans.push(TokenSpan { token: tok, start, end: samples.len() });
            if i + 1 < tokens.len() {
                let gap = rng.random_range(0.03..0.12);
                samples.extend(std::iter::repeat_n(0.0, (gap * sample_rate as f64) as usize));
            }
        }
        let tail = rng.random_range(0.03..0.08);
        samples.extend(std::iter::repeat_n(0.0, (tail * sample_rate as f64) as usize));

        for s in &mut samples {
            *s = (*s + noise.sample(&mut rng)).clamp(-1.0, 1.0);
        }
        out.push(LabeledClip {
            clip: AudioClip { samples, sample_rate },
            tokens,
            spans,
        });
    }
    Ok(out)
}

/// Write clips as WAVs plus a `manifest.csv` of (path, labels).
pub fn write_manifest(corpus: &[LabeledClip], vocab: &Vocabulary, dir: &Path) -> Result<PathBuf, AsrError> {
    std::fs::create_dir_all(dir).map_err(AsrError::Io)?;
    let manifest_path = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest_path).map_err(|e| AsrError::Manifest(e.to_string()))?;
    w.write_record(["path", "tokens"]).map_err(|e| AsrError::Manifest(e.to_string()))?;
    for (i, lc) in corpus.iter().enumerate() {
        let name = format!("clip_{i:05}.wav");
        write_wav(&lc.clip, &dir.join(&name))?;
        let labels = vocab.render(&lc.transcription());
        w.write_record([name.as_str(), labels.as_str()])
            .map_err(|e| AsrError::Manifest(e.to_string()))?;
    }
    w.flush().map_err(AsrError::Io)?;
    Ok(manifest_path)
}

/// Read a manifest back. Token spans are recovered by energy segmentation
/// (tokens are separated by near-silent gaps); a clip whose active-region
/// count disagrees with its label count is an error.
pub fn read_manifest(manifest: &Path, vocab: &Vocabulary) -> Result<Vec<LabeledClip>, AsrError> {
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut r = csv::Reader::from_path(manifest).map_err(|e| AsrError::Manifest(e.to_string()))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| AsrError::Manifest(e.to_string()))?;
        let path = dir.join(&rec[0]);
        let clip = read_wav(&path)?;
        let tokens = vocab.map_text(&rec[1])?.tokens;
        let spans = segment_by_energy(&clip, &tokens)?;
        out.push(LabeledClip { clip, tokens, spans });
    }
    Ok(out)
}

/// Split a clip into active regions by short-window RMS and assign the
/// given tokens to them in order.
pub fn segment_by_energy(clip: &AudioClip, tokens: &[TokenId]) -> Result<Vec<TokenSpan>, AsrError> {
    let win = (clip.sample_rate as usize / 100).max(1); // 10 ms
    let hop = win / 2;
    let threshold = 0.03;
    let min_gap = clip.sample_rate as usize / 50; // 20 ms

    let mut active: Vec<(usize, usize)> = Vec::new();
    let mut pos = 0;
    while pos < clip.len() {
        let end = (pos + win).min(clip.len());
        let rms = {
            let seg = &clip.samples[pos..end];
            (seg.iter().map(|s| s * s).sum::<f64>() / seg.len() as f64).sqrt()
        };
        if rms > threshold {
            match active.last_mut() {
                Some(last) if pos <= last.1 + min_gap => last.1 = end,
                _ => active.push((pos, end)),
            }
        }
        pos += hop.max(1);
    }

    if active.len() != tokens.len() {
        return Err(AsrError::SegmentationMismatch { regions: active.len(), labels: tokens.len() });
    }
    Ok(active
        .into_iter()
        .zip(tokens)
        .map(|((start, end), &token)| TokenSpan { token, start, end })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_corpus() {
        let v = Vocabulary::default_synthetic();
        assert!(synth_corpus(&v, 0, 1, 16000).unwrap().is_empty());
    }

    #[test]
    fn corpus_is_deterministic() {
        let v = Vocabulary::default_synthetic();
        let a = synth_corpus(&v, 3, 99, 16000).unwrap();
        let b = synth_corpus(&v, 3, 99, 16000).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.clip, y.clip);
            assert_eq!(x.tokens, y.tokens);
        }
    }

    #[test]
    fn utterances_have_2_to_4_distinct_adjacent_tokens() {
        let v = Vocabulary::default_synthetic();
        for lc in synth_corpus(&v, 20, 5, 16000).unwrap() {
            assert!((2..=4).contains(&lc.tokens.len()));
            for w in lc.tokens.windows(2) {
                assert_ne!(w[0], w[1]);
            }
        }
    }

    #[test]
    fn frame_labels_cover_spans() {
        let v = Vocabulary::default_synthetic();
        let corpus = synth_corpus(&v, 2, 11, 16000).unwrap();
        let chain = FeatureChain::default();
        for lc in &corpus {
            let labels = lc.frame_labels(&chain);
            assert_eq!(labels.len(), chain.frame_count(lc.clip.len()));
            // Every token appears in the frame labels.
            for &t in &lc.tokens {
                assert!(labels.contains(&t));
            }
            // Collapsing the frame labels reproduces the token sequence.
            let mut collapsed = Vec::new();
            let mut prev = BLANK;
            for &l in &labels {
                if l != prev && l != BLANK {
                    collapsed.push(l);
                }
                prev = l;
            }
            assert_eq!(collapsed, lc.tokens);
        }
    }

    #[test]
    fn manifest_round_trip_recovers_spans() {
        let v = Vocabulary::default_synthetic();
        let corpus = synth_corpus(&v, 4, 21, 16000).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_manifest(&corpus, &v, dir.path()).unwrap();
        let back = read_manifest(&manifest, &v).unwrap();
        assert_eq!(back.len(), corpus.len());
        for (a, b) in corpus.iter().zip(&back) {
            assert_eq!(a.tokens, b.tokens);
            // Recovered spans land close to the true ones.
            for (sa, sb) in a.spans.iter().zip(&b.spans) {
                assert_eq!(sa.token, sb.token);
                assert!((sa.start as i64 - sb.start as i64).abs() < 400, "{sa:?} vs {sb:?}");
            }
        }
    }

    #[test]
    fn token_sounds_are_distinguishable() {
        // Mean inter-token log-mel distance exceeds intra-token distance.
        let v = Vocabulary::default_synthetic();
        let chain = FeatureChain::default();
        let ex = super::super::features::FeatureExtractor::new(chain, 16000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);

        let mut profiles: Vec<Vec<Vec<f64>>> = Vec::new(); // token -> renders -> mean feature
        for t in v.speech_tokens() {
            let mut renders = Vec::new();
            for _ in 0..3 {
                let s = render_token(&v, t, 3200, 0.5, 16000, &mut rng);
                let feats = ex.compute(&s).unwrap();
                let mut mean = vec![0.0; 32];
                for row in &feats {
                    for (m, x) in mean.iter_mut().zip(row) {
                        *m += x / feats.len() as f64;
                    }
                }
                renders.push(mean);
            }
            profiles.push(renders);
        }

        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
        };
        let mut intra = Vec::new();
        let mut inter = Vec::new();
        for (i, ri) in profiles.iter().enumerate() {
            for a in 0..ri.len() {
                for b in a + 1..ri.len() {
                    intra.push(dist(&ri[a], &ri[b]));
                }
            }
            for rj in profiles.iter().skip(i + 1) {
                inter.push(dist(&ri[0], &rj[0]));
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&inter) > mean(&intra),
            "inter {} <= intra {}",
            mean(&inter),
            mean(&intra)
        );
    }
}
