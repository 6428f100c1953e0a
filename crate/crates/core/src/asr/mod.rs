//! A small fully differentiable white-box recognizer: log-mel feature
//! chain, feed-forward frame classifier, greedy decoding, synthetic
//! corpus generation, training, and exact input gradients.

pub mod corpus;
mod decode;
pub mod features;
mod loss;
mod model;
mod train;
mod vocab;

pub use corpus::{read_manifest, segment_by_energy, synth_corpus, write_manifest, LabeledClip, TokenSpan};
pub use decode::decode;
pub use features::{features, FeatureChain, FeatureExtractor, MelBank};
pub use loss::{grad_input, loss, loss_and_grad, uniform_alignment};
pub use model::{AcousticModel, DenseLayer, ForwardCache, ParamGrads, MODEL_FILE_VERSION};
pub use train::{train, transcribe, TrainConfig, TrainReport};
pub use vocab::{TokenId, TokenSpec, Transcription, Vocabulary, BLANK};

#[derive(Debug, thiserror::Error)]
pub enum AsrError {
    #[error("unknown token `{0}`")]
    UnknownToken(String),

    #[error("blank token not allowed in a transcription")]
    BlankInTranscription,

    #[error("vocabulary of {0} tokens is too small")]
    VocabularyTooSmall(usize),

    #[error("duplicate token name `{0}`")]
    DuplicateToken(String),

    #[error("invalid feature chain: {0}")]
    InvalidChain(String),

    #[error("clip of {len} samples is shorter than the {window}-sample analysis window")]
    ClipTooShort { len: usize, window: usize },

    #[error("{what} shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { what: &'static str, expected: usize, got: usize },

    #[error("target of {tokens} tokens does not fit {frames} frames")]
    TargetTooLong { tokens: usize, frames: usize },

    #[error("model serialization: {0}")]
    Serialize(String),

    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),

    #[error("corpus manifest: {0}")]
    Manifest(String),

    #[error("energy segmentation found {regions} regions for {labels} labels")]
    SegmentationMismatch { regions: usize, labels: usize },

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("corpus clips have mixed sample rates")]
    CorpusRateMismatch,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
}
