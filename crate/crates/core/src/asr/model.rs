//! Feed-forward frame classifier with tanh hidden layers and a softmax
//! output, plus a versioned JSON container for persistence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::features::{FeatureChain, FeatureExtractor};
use super::vocab::Vocabulary;
use super::AsrError;

pub const MODEL_FILE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// Row-major `rows x cols` weight matrix.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
}

impl DenseLayer {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { weights: vec![0.0; rows * cols], bias: vec![0.0; rows], rows, cols }
    }

    fn xavier(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        let weights = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
        Self { weights, bias: vec![0.0; rows], rows, cols }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            out[r] = self.bias[r] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn validate(&self) -> Result<(), AsrError> {
        if self.weights.len() != self.rows * self.cols || self.bias.len() != self.rows {
            return Err(AsrError::ShapeMismatch {
                what: "layer",
                expected: self.rows * self.cols,
                got: self.weights.len(),
            });
        }
        Ok(())
    }
}

/// The white-box recognizer: feature chain parameters, network weights,
/// and the vocabulary (with its text/sub-unit mapping) in one place.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticModel {
    pub version: u32,
    pub vocab: Vocabulary,
    pub chain: FeatureChain,
    pub sample_rate: u32,
    pub seed: u64,
    pub layers: Vec<DenseLayer>,
}

/// Forward intermediates for backpropagation: layer inputs and the
/// post-softmax probabilities.
pub struct ForwardCache {
    /// `activations[l]` is the input to layer `l`; the last entry is the
    /// final hidden activation feeding the output layer.
    pub activations: Vec<Vec<Vec<f64>>>,
    pub probs: Vec<Vec<f64>>,
}

/// Per-parameter gradients matching the layer layout.
pub struct ParamGrads {
    pub layers: Vec<DenseLayer>,
}

impl ParamGrads {
    pub fn zeros_like(model: &AcousticModel) -> Self {
        Self {
            layers: model.layers.iter().map(|l| DenseLayer::zeros(l.rows, l.cols)).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for l in &mut self.layers {
            for x in &mut l.weights {
                *x *= s;
            }
            for x in &mut l.bias {
                *x *= s;
            }
        }
    }
}

fn softmax_row(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

impl AcousticModel {
    /// Seeded Xavier-uniform initialization.
    pub fn new_random(
        vocab: Vocabulary,
        chain: FeatureChain,
        hidden: &[usize],
        sample_rate: u32,
        seed: u64,
    ) -> Result<Self, AsrError> {
        chain.validate()?;
        let vocab = vocab.checked()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![chain.mel_filter_count];
        dims.extend_from_slice(hidden);
        dims.push(vocab.len());
        let layers = dims
            .windows(2)
            .map(|d| DenseLayer::xavier(d[1], d[0], &mut rng))
            .collect();
        Ok(Self { version: MODEL_FILE_VERSION, vocab, chain, sample_rate, seed, layers })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn extractor(&self) -> Result<FeatureExtractor, AsrError> {
        FeatureExtractor::new(self.chain.clone(), self.sample_rate)
    }

    /// Per-frame softmax distributions over the vocabulary.
    pub fn forward(&self, features: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, AsrError> {
        Ok(self.forward_with_cache(features)?.probs)
    }

    pub fn forward_with_cache(&self, features: &[Vec<f64>]) -> Result<ForwardCache, AsrError> {
        if let Some(row) = features.first() {
            if row.len() != self.layers[0].cols {
                return Err(AsrError::ShapeMismatch {
                    what: "features",
                    expected: self.layers[0].cols,
                    got: row.len(),
                });
            }
        }
        let n_layers = self.layers.len();
        let mut activations: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(features.len()); n_layers];
        let mut probs = Vec::with_capacity(features.len());

        for row in features {
            let mut x = row.clone();
            for (l, layer) in self.layers.iter().enumerate() {
                activations[l].push(x.clone());
                let mut out = vec![0.0; layer.rows];
                layer.apply(&x, &mut out);
                if l + 1 < n_layers {
                    for v in &mut out {
                        *v = v.tanh();
                    }
                }
                x = out;
            }
            probs.push(softmax_row(&x));
        }
        Ok(ForwardCache { activations, probs })
    }

    /// Backpropagate per-frame logit gradients. Returns the gradient with
    /// respect to the input features and, when requested, parameter grads.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_logits: &[Vec<f64>],
        want_params: bool,
    ) -> (Vec<Vec<f64>>, Option<ParamGrads>) {
        let n_layers = self.layers.len();
        let mut pgrads = want_params.then(|| ParamGrads::zeros_like(self));
        let mut grad_inputs = Vec::with_capacity(grad_logits.len());

        for (f, glogit) in grad_logits.iter().enumerate() {
            let mut g = glogit.clone();
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let input = &cache.activations[l][f];
                if let Some(p) = pgrads.as_mut() {
                    let pl = &mut p.layers[l];
                    for r in 0..layer.rows {
                        pl.bias[r] += g[r];
                        let dst = &mut pl.weights[r * layer.cols..(r + 1) * layer.cols];
                        for (d, &x) in dst.iter_mut().zip(input) {
                            *d += g[r] * x;
                        }
                    }
                }
                let mut gin = vec![0.0; layer.cols];
                for r in 0..layer.rows {
                    let row = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    let gr = g[r];
                    for (c, &w) in row.iter().enumerate() {
                        gin[c] += w * gr;
                    }
                }
                if l > 0 {
                    // Input to layer l is tanh output of layer l-1, so
                    // d tanh = 1 - a^2 at the stored activation.
                    for (v, &a) in gin.iter_mut().zip(input) {
                        *v *= 1.0 - a * a;
                    }
                }
                g = gin;
            }
            grad_inputs.push(g);
        }
        (grad_inputs, pgrads)
    }

    /// Apply an SGD step: `w -= lr * g`.
    pub fn sgd_step(&mut self, grads: &ParamGrads, lr: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= lr * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= lr * gb;
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), AsrError> {
        let json = serde_json::to_string(self).map_err(|e| AsrError::Serialize(e.to_string()))?;
        std::fs::write(path, json).map_err(AsrError::Io)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AsrError> {
        let json = std::fs::read_to_string(path).map_err(AsrError::Io)?;
        let model: Self = serde_json::from_str(&json).map_err(|e| AsrError::Serialize(e.to_string()))?;
        if model.version != MODEL_FILE_VERSION {
            return Err(AsrError::UnsupportedVersion(model.version));
        }
        model.chain.validate()?;
        for layer in &model.layers {
            layer.validate()?;
        }
        // Layer chain must be consistent end to end.
        if model.layers.is_empty()
            || model.layers[0].cols != model.chain.mel_filter_count
            || model.layers.last().unwrap().rows != model.vocab.len()
        {
            return Err(AsrError::ShapeMismatch {
                what: "model chain",
                expected: model.chain.mel_filter_count,
                got: model.layers.first().map_or(0, |l| l.cols),
            });
        }
        for w in model.layers.windows(2) {
            if w[0].rows != w[1].cols {
                return Err(AsrError::ShapeMismatch {
                    what: "layer chain",
                    expected: w[0].rows,
                    got: w[1].cols,
                });
            }
        }
        Ok(model)
    }
}
