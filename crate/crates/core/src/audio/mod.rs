//! Deterministic audio containers, WAV I/O, framing/STFT, mixing,
//! resampling, and noise injection.

mod clip;
pub mod pgm;
mod resample;
mod stft;
mod wav;

pub use clip::{add_white_noise, mix, AudioClip};
pub use resample::resample;
pub use stft::{modified_hann, stft, Spectrogram};
pub use wav::{read_wav, write_wav};

/// Errors from audio container and I/O operations.
#[derive(Debug, thiserror::Error)]
pub enum AudioError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The file is a WAV but not one we accept; `field` names the header
    /// field that failed validation.
    #[error("unsupported wav: field `{field}` is {got}, expected {expected}")]
    Format {
        field: &'static str,
        got: String,
        expected: &'static str,
    },

    #[error("sample rate mismatch: {a} Hz vs {b} Hz")]
    SampleRateMismatch { a: u32, b: u32 },

    #[error("invalid window size {0}: must be a positive power of two")]
    InvalidWindow(usize),

    #[error("hop {hop} exceeds window size {window}")]
    HopTooLarge { hop: usize, window: usize },

    #[error("invalid sample rate {0}")]
    InvalidRate(u32),

    #[error("negative noise deviation {0}")]
    NegativeSigma(f64),

    #[error("non-finite sample at index {0}")]
    NonFiniteSample(usize),
}
