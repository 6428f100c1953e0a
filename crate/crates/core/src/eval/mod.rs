//! Attack metrics, defense probes, and relay-robustness simulation.

mod align;
mod defense;
mod relay;

pub use align::{align, sroa, Alignment, Granularity};
pub use defense::{defense_downsample, defense_noise_probe, trend_slope, DefenseReport, DefenseRow};
pub use relay::{relay_simulate, sdr_db, RelayParams};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty reference transcription")]
    EmptyReference,

    #[error("empty sample set")]
    EmptySampleSet,

    #[error("rate ordering violated: need low < restore <= rate, got {low}/{restore}/{rate}")]
    RateOrdering { low: u32, restore: u32, rate: u32 },

    #[error("sigma grid must be sorted ascending")]
    UnsortedGrid,

    #[error("trials must be at least 1")]
    NoTrials,

    #[error("hops must be at least 1")]
    NoHops,

    #[error("asr error: {0}")]
    Asr(String),

    #[error(transparent)]
    Audio(#[from] crate::audio::AudioError),
}

impl From<crate::asr::AsrError> for EvalError {
    fn from(e: crate::asr::AsrError) -> Self {
        EvalError::Asr(e.to_string())
    }
}
