//! Character vocabulary: index assignment, frequency cutoff, UNK/PAD rules.
//!
//! The unit is the Unicode scalar value. No lowercasing, no preprocessing of
//! any kind; input text is kept as-is.

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Index reserved for batch padding. Never produced by [`CharVocab::encode`].
pub const PAD: usize = 0;
/// Index for characters absent from the vocabulary.
pub const UNK: usize = 1;
/// Number of reserved indices preceding real characters.
pub const RESERVED: usize = 2;

/// Immutable character-to-index map built from a training corpus.
///
/// Real characters occupy dense indices `[2, V+2)`; an index for a character
/// is stable across runs because characters are ordered by frequency
/// (descending) then codepoint (ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharVocab {
    index_of: HashMap<char, usize>,
    chars: Vec<char>,
    min_freq: u64,
}

impl CharVocab {
    /// Build the vocabulary from training texts, keeping every character that
    /// occurs at least `min_freq` times (raw occurrence count).
    pub fn build<'a, I>(texts: I, min_freq: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if min_freq < 1 {
            return Err(Error::Usage("min_freq must be >= 1".into()));
        }
        let mut freq: HashMap<char, u64> = HashMap::new();
        let mut any = false;
        for text in texts {
            any = true;
            for ch in text.chars() {
                *freq.entry(ch).or_insert(0) += 1;
            }
        }
        if !any {
            return Err(Error::Data("cannot build vocabulary from an empty stream".into()));
        }
        let mut kept: Vec<(char, u64)> =
            freq.into_iter().filter(|&(_, n)| n >= min_freq).collect();
        if kept.is_empty() {
            return Err(Error::Data(format!(
                "degenerate corpus: no character reaches min_freq = {min_freq}"
            )));
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let chars: Vec<char> = kept.into_iter().map(|(c, _)| c).collect();
        Ok(Self::from_chars(chars, min_freq))
    }

    /// Reassemble a vocabulary from its ordered character list (checkpoint load).
    pub fn from_chars(chars: Vec<char>, min_freq: u64) -> Self {
        let index_of = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, i + RESERVED))
            .collect();
        Self { index_of, chars, min_freq }
    }

    /// Number of real characters (excludes PAD and UNK).
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    /// Total index space, `V + 2`, the embedding row count.
    pub fn index_space(&self) -> usize {
        self.chars.len() + RESERVED
    }

    pub fn min_freq(&self) -> u64 {
        self.min_freq
    }

    /// Ordered character list (index `i + RESERVED` holds `chars[i]`).
    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn index_of(&self, ch: char) -> usize {
        self.index_of.get(&ch).copied().unwrap_or(UNK)
    }

    /// Encode `text` as one index per Unicode scalar value, truncated at
    /// `max_len`. Empty text encodes as a single UNK so downstream code never
    /// sees a zero-length sequence.
    pub fn encode(&self, text: &str, max_len: usize) -> Vec<usize> {
        assert!(max_len >= 1, "max_len must be >= 1");
        let mut out: Vec<usize> = text
            .chars()
            .take(max_len)
            .map(|c| self.index_of(c))
            .collect();
        if out.is_empty() {
            out.push(UNK);
        }
        out
    }

    /// Inverse of `encode` for in-vocabulary strings. UNK decodes to U+FFFD.
    pub fn decode(&self, indices: &[usize]) -> String {
        indices
            .iter()
            .filter(|&&i| i != PAD)
            .map(|&i| {
                if i >= RESERVED && i - RESERVED < self.chars.len() {
                    self.chars[i - RESERVED]
                } else {
                    '\u{FFFD}'
                }
            })
            .collect()
    }

    /// Standalone JSON export of the ordered character list.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({
            "min_freq": self.min_freq,
            "chars": self.chars.iter().collect::<String>(),
        }))
        .expect("vocab serializes")
    }
}
