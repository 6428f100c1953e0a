//! Sequence alignment and the attack success-rate metric.

use crate::asr::{Transcription, Vocabulary};

use super::EvalError;

/// Match/edit bookkeeping between a reference and a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    /// Matched units under the match-maximizing alignment.
    pub matches: usize,
    /// Levenshtein distance (unit insert/delete/substitute costs).
    pub edit_distance: usize,
    pub reference_len: usize,
    pub hypothesis_len: usize,
}

/// Align two symbol sequences.
pub fn align<T: Eq>(reference: &[T], hypothesis: &[T]) -> Alignment {
    let n = reference.len();
    let m = hypothesis.len();

    // Match-maximizing DP.
    let mut lcs = vec![vec![0usize; m + 1]; n + 1];
    for i in 1..=n {
        for j in 1..=m {
            lcs[i][j] = if reference[i - 1] == hypothesis[j - 1] {
                lcs[i - 1][j - 1] + 1
            } else {
                lcs[i - 1][j].max(lcs[i][j - 1])
            };
        }
    }

    // Levenshtein DP.
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        dist[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = dist[i - 1][j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            dist[i][j] = sub.min(dist[i - 1][j] + 1).min(dist[i][j - 1] + 1);
        }
    }

    Alignment {
        matches: lcs[n][m],
        edit_distance: dist[n][m],
        reference_len: n,
        hypothesis_len: m,
    }
}

/// Metric granularity: whole tokens or their fine sub-units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Coarse,
    Fine,
}

/// Success rate of attack: matched units over reference units. Fine
/// granularity expands tokens into their sub-units before aligning.
pub fn sroa(
    reference: &Transcription,
    hypothesis: &Transcription,
    granularity: Granularity,
    vocab: &Vocabulary,
) -> Result<f64, EvalError> {
    if reference.is_empty() {
        return Err(EvalError::EmptyReference);
    }
    let a = match granularity {
        Granularity::Coarse => align(&reference.tokens, &hypothesis.tokens),
        Granularity::Fine => {
            let r = vocab.fine_units(reference);
            let h = vocab.fine_units(hypothesis);
            align(&r, &h)
        }
    };
    Ok(a.matches as f64 / a.reference_len as f64)
}
