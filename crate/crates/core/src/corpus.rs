//! Training text ingestion: vocabulary construction and the text ↔ index ↔
//! one-hot encodings.
//!
//! Characters are Unicode scalar values. The vocabulary is ordered by first
//! occurrence in the text it was built from, so the same text always yields
//! the same indices.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// The bundled training sequence: the opening 500 characters of Moby Dick as
/// distributed by Project Gutenberg (CRLF line endings kept).
pub const MOBY_DICK_500: &str = include_str!("../data/moby_dick_500.txt");

/// Length and distinct-character count the bundled corpus must have.
pub const MOBY_DICK_LEN: usize = 500;
pub const MOBY_DICK_VOCAB: usize = 42;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    chars: Vec<char>,
    index_of: HashMap<char, usize>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn index_of(&self, ch: char) -> Option<usize> {
        self.index_of.get(&ch).copied()
    }

    pub fn char_at(&self, index: usize) -> Option<char> {
        self.chars.get(index).copied()
    }
}

/// Builds the vocabulary of `text` in first-occurrence order.
pub fn build_vocabulary(text: &str) -> Result<Vocabulary> {
    if text.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut chars = Vec::new();
    let mut index_of = HashMap::new();
    for ch in text.chars() {
        index_of.entry(ch).or_insert_with(|| {
            chars.push(ch);
            chars.len() - 1
        });
    }
    Ok(Vocabulary { chars, index_of })
}

/// A text encoded as 0-based vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSequence {
    indices: Vec<usize>,
}

impl EncodedSequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    /// Index at 1-based position `pos`, the convention used by the sweep
    /// schedules.
    pub fn at1(&self, pos: usize) -> usize {
        self.indices[pos - 1]
    }

    /// The first `len` positions as a new sequence.
    pub fn prefix(&self, len: usize) -> EncodedSequence {
        EncodedSequence {
            indices: self.indices[..len.min(self.indices.len())].to_vec(),
        }
    }
}

pub fn encode(text: &str, vocab: &Vocabulary) -> Result<EncodedSequence> {
    let indices = text
        .chars()
        .enumerate()
        .map(|(position, ch)| {
            vocab
                .index_of(ch)
                .ok_or(Error::UnknownCharacter { ch, position })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedSequence { indices })
}

pub fn decode(indices: &[usize], vocab: &Vocabulary) -> Result<String> {
    indices
        .iter()
        .map(|&index| {
            vocab.char_at(index).ok_or(Error::OutOfRange {
                index,
                size: vocab.len(),
            })
        })
        .collect()
}

/// A 1-in-k activation vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OneHotVector(Vec<f64>);

impl OneHotVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn hot_index(&self) -> usize {
        argmax(&self.0)
    }
}

pub fn one_hot(index: usize, size: usize) -> Result<OneHotVector> {
    if index >= size {
        return Err(Error::OutOfRange { index, size });
    }
    let mut v = vec![0.0; size];
    v[index] = 1.0;
    Ok(OneHotVector(v))
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// How line endings in a corpus file are treated on load.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LineEndings {
    /// Bytes are taken exactly as stored.
    #[default]
    Verbatim,
    /// CRLF pairs become a single LF.
    NormalizeCrlf,
}

/// A loaded training text with its vocabulary and encoding.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub text: String,
    pub vocab: Vocabulary,
    pub sequence: EncodedSequence,
}

impl Corpus {
    pub fn from_text(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let vocab = build_vocabulary(&text)?;
        let sequence = encode(&text, &vocab)?;
        Ok(Corpus {
            text,
            vocab,
            sequence,
        })
    }

    pub fn load(path: &Path, endings: LineEndings) -> Result<Self> {
        let mut text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if endings == LineEndings::NormalizeCrlf {
            text = text.replace("\r\n", "\n");
        }
        Self::from_text(text)
    }

    /// The bundled Moby Dick excerpt, checked against its expected counts.
    pub fn moby_dick() -> Result<Self> {
        let corpus = Self::from_text(MOBY_DICK_500)?;
        corpus.check(MOBY_DICK_LEN, MOBY_DICK_VOCAB)?;
        Ok(corpus)
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    /// Fails unless the corpus has exactly `len` characters of which `vocab`
    /// are distinct.
    pub fn check(&self, len: usize, vocab: usize) -> Result<()> {
        if self.len() != len || self.vocab.len() != vocab {
            return Err(Error::CorpusGuard {
                expected_len: len,
                expected_vocab: vocab,
                len: self.len(),
                vocab: self.vocab.len(),
            });
        }
        Ok(())
    }

    /// The first `len` characters as a corpus of their own (vocabulary is
    /// rebuilt from the prefix).
    pub fn truncated(&self, len: usize) -> Result<Self> {
        Self::from_text(self.text.chars().take(len).collect::<String>())
    }
}
