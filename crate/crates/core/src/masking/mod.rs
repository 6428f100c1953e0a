//! Footage synthesis and the heuristic masking-music search.

mod bank;
mod footage;
mod search;

pub use bank::BankSpec;
pub use footage::{synth_footage, MusicFootage, Timbre};
pub use search::{coverage_exceedance, frame_grid, score, search, MaskedSample, SearchConfig, MAX_FRAME_LEN_MS};

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error("tone {tone} Hz outside (0, {nyquist}) Hz")]
    ToneOutOfRange { tone: f64, nyquist: f64 },

    #[error("invalid footage duration {0} ms")]
    InvalidDuration(f64),

    #[error("invalid amplitude {0}")]
    InvalidAmplitude(f64),

    #[error("unknown timbre `{0}`")]
    UnknownTimbre(String),

    #[error("frame length {0} ms exceeds the 200 ms cap")]
    FrameLenTooLarge(f64),

    #[error("k must be at least 1")]
    InvalidK,

    #[error("bank must list at least one tone, timbre, and duration")]
    EmptyBank,

    #[error("sample rate mismatch: {a} Hz vs {b} Hz")]
    RateMismatch { a: u32, b: u32 },

    #[error("delta of {delta} samples exceeds mixture of {mixture}")]
    LengthMismatch { mixture: usize, delta: usize },

    #[error("input does not decode to the target; run the attack first")]
    NotAdversarial,

    #[error(transparent)]
    Psycho(#[from] crate::psycho::PsychoError),

    #[error(transparent)]
    Asr(#[from] crate::asr::AsrError),
}
