//! Synthetic token alphabet and the text/token/sub-unit mapper.

use serde::{Deserialize, Serialize};

use super::AsrError;

/// Index into the vocabulary. 0 is always the blank token.
pub type TokenId = usize;

pub const BLANK: TokenId = 0;

/// One token: its printable name, the fine-grained sub-units it expands
/// to for fine-level scoring, and the partial frequencies/amplitudes used
/// to render it as sound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenSpec {
    pub name: String,
    pub subunits: String,
    pub partials: Vec<(f64, f64)>,
}

/// Blank-free token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transcription {
    pub tokens: Vec<TokenId>,
}

impl Transcription {
    pub fn new(tokens: Vec<TokenId>) -> Result<Self, AsrError> {
        if tokens.contains(&BLANK) {
            return Err(AsrError::BlankInTranscription);
        }
        Ok(Self { tokens })
    }

    pub fn empty() -> Self {
        Self { tokens: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Token alphabet plus the total, injective mapping between target text,
/// token ids, and per-token sub-units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub tokens: Vec<TokenSpec>,
}

impl Vocabulary {
    /// The built-in 12-token alphabet plus blank. Partials stay below
    /// 4.3 kHz so ordinary speech-band processing keeps them intact.
    pub fn default_synthetic() -> Self {
        let names = [
            "hui", "che", "huo", "ba", "ke", "shi", "mo", "lu", "tan", "wei", "ni", "za",
        ];
        let mut tokens = vec![TokenSpec {
            name: "_".into(),
            subunits: String::new(),
            partials: Vec::new(),
        }];
        for (i, name) in names.iter().enumerate() {
            let f1 = 300.0 + 150.0 * (i % 4) as f64;
            let f2 = 1100.0 + 450.0 * (i / 4) as f64;
            let f3 = 2600.0 + 130.0 * i as f64;
            tokens.push(TokenSpec {
                name: (*name).into(),
                subunits: (*name).into(),
                partials: vec![(f1, 1.0), (f2, 0.8), (f3, 0.5)],
            });
        }
        Self { tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn name(&self, id: TokenId) -> &str {
        &self.tokens[id].name
    }

    pub fn id_of(&self, name: &str) -> Option<TokenId> {
        self.tokens.iter().position(|t| t.name == name)
    }

    /// Map whitespace-separated token names to a transcription.
    pub fn map_text(&self, text: &str) -> Result<Transcription, AsrError> {
        let mut tokens = Vec::new();
        for word in text.split_whitespace() {
            let id = self
                .id_of(word)
                .ok_or_else(|| AsrError::UnknownToken(word.to_string()))?;
            if id == BLANK {
                return Err(AsrError::BlankInTranscription);
            }
            tokens.push(id);
        }
        Ok(Transcription { tokens })
    }

    /// Render a transcription as space-separated token names.
    pub fn render(&self, t: &Transcription) -> String {
        t.tokens
            .iter()
            .map(|&id| self.tokens[id].name.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Expand a transcription into its fine-grained sub-units.
    pub fn fine_units(&self, t: &Transcription) -> Vec<char> {
        t.tokens
            .iter()
            .flat_map(|&id| self.tokens[id].subunits.chars())
            .collect()
    }

    /// Ids of the non-blank tokens.
    pub fn speech_tokens(&self) -> Vec<TokenId> {
        (1..self.tokens.len()).collect()
    }

    fn validate(&self) -> Result<(), AsrError> {
        if self.tokens.len() < 2 {
            return Err(AsrError::VocabularyTooSmall(self.tokens.len()));
        }
        for i in 0..self.tokens.len() {
            for j in i + 1..self.tokens.len() {
                if self.tokens[i].name == self.tokens[j].name {
                    return Err(AsrError::DuplicateToken(self.tokens[i].name.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn checked(self) -> Result<Self, AsrError> {
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_vocab_shape() {
        let v = Vocabulary::default_synthetic().checked().unwrap();
        assert_eq!(v.len(), 13);
        assert_eq!(v.name(BLANK), "_");
        assert!(v.tokens[1..].iter().all(|t| !t.partials.is_empty()));
        // Partials stay inside the band that survives 10 kHz downsampling.
        for t in &v.tokens[1..] {
            for &(f, _) in &t.partials {
                assert!(f < 4500.0, "{} has partial at {f}", t.name);
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let v = Vocabulary::default_synthetic();
        let t = v.map_text("hui che").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(v.render(&t), "hui che");
    }

    #[test]
    fn unknown_token_rejected() {
        let v = Vocabulary::default_synthetic();
        assert!(matches!(v.map_text("hui nope"), Err(AsrError::UnknownToken(w)) if w == "nope"));
    }

    #[test]
    fn fine_units_expand_letters() {
        let v = Vocabulary::default_synthetic();
        let t = v.map_text("hui che").unwrap();
        assert_eq!(v.fine_units(&t), vec!['h', 'u', 'i', 'c', 'h', 'e']);
    }

    #[test]
    fn blank_rejected_in_transcription() {
        assert!(Transcription::new(vec![BLANK, 1]).is_err());
    }

    #[test]
    fn mapping_is_injective_on_supported_targets() {
        let v = Vocabulary::default_synthetic();
        let a = v.map_text("hui che").unwrap();
        let b = v.map_text("huo che").unwrap();
        assert_ne!(a, b);
    }
}
