//! Greedy frame decoding: per-frame argmax, collapse adjacent repeats,
//! drop blanks.

use super::vocab::{Transcription, BLANK};

pub fn decode(probs: &[Vec<f64>]) -> Transcription {
    let mut tokens = Vec::new();
    let mut prev = BLANK;
    for row in probs {
        let arg = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(BLANK);
        if arg != prev && arg != BLANK {
            tokens.push(arg);
        }
        prev = arg;
    }
    Transcription { tokens }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onehot(id: usize, v: usize) -> Vec<f64> {
        let mut row = vec![0.0; v];
        row[id] = 1.0;
        row
    }

    #[test]
    fn collapse_rule() {
        // blank blank A A blank B -> "A B"
        let rows: Vec<Vec<f64>> = [0, 0, 1, 1, 0, 2].iter().map(|&i| onehot(i, 4)).collect();
        assert_eq!(decode(&rows).tokens, vec![1, 2]);
    }

    #[test]
    fn all_blank_is_empty() {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| onehot(0, 4)).collect();
        assert!(decode(&rows).is_empty());
    }

    #[test]
    fn non_adjacent_repeats_survive() {
        let rows: Vec<Vec<f64>> = [1, 2, 2, 1].iter().map(|&i| onehot(i, 4)).collect();
        assert_eq!(decode(&rows).tokens, vec![1, 2, 1]);
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(decode(&[]).is_empty());
    }
}
