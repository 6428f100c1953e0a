//! Audio perturbation toolkit: deterministic audio containers and DSP,
//! psychoacoustic masking thresholds, a small differentiable speech
//! recognizer, a two-stage targeted perturbation attack, heuristic search
//! for masking music, and evaluation/defense probes.
//!
//! Everything is seeded: identical inputs and seeds produce bit-identical
//! outputs, including under the optional `parallel` feature.

pub mod audio;
pub mod psycho;
pub mod asr;
pub mod attack;
pub mod masking;
pub mod eval;
pub mod par;

pub use audio::AudioClip;
pub use psycho::MaskingThreshold;
pub use asr::{AcousticModel, Transcription};
pub use attack::{AttackConfig, AttackResult};
pub use masking::{MaskedSample, MusicFootage, SearchConfig};
