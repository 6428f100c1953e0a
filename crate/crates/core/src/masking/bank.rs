//! The footage bank: the tone/timbre/duration sets the search draws from.

use serde::{Deserialize, Serialize};

use super::footage::Timbre;
use super::SearchError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankSpec {
    /// Fundamental frequencies in Hz.
    pub tones: Vec<f64>,
    /// Timbre profile names (`sine`, `piano`, `organ`).
    pub timbres: Vec<String>,
    /// Footage lengths in milliseconds.
    pub durations_ms: Vec<f64>,
}

impl Default for BankSpec {
    fn default() -> Self {
        Self {
            tones: vec![262.0, 330.0, 392.0, 440.0, 523.0],
            timbres: vec!["sine".into(), "piano".into(), "organ".into()],
            durations_ms: vec![100.0, 200.0],
        }
    }
}

impl BankSpec {
    pub fn validate(&self, fs: u32) -> Result<Vec<Timbre>, SearchError> {
        if self.tones.is_empty() || self.timbres.is_empty() || self.durations_ms.is_empty() {
            return Err(SearchError::EmptyBank);
        }
        for &t in &self.tones {
            if t <= 0.0 || t >= fs as f64 / 2.0 {
                return Err(SearchError::ToneOutOfRange { tone: t, nyquist: fs as f64 / 2.0 });
            }
        }
        for &d in &self.durations_ms {
            if d <= 0.0 {
                return Err(SearchError::InvalidDuration(d));
            }
        }
        self.timbres.iter().map(|n| Timbre::parse(n)).collect()
    }
}
