//! Seeded free-running recall: teacher-force the first characters, then let the
//! network feed itself and score the result by edit distance.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{argmax, decode, one_hot, EncodedSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::metrics::levenshtein;
use crate::network::{forward, zero_state, NetworkParams};

pub const DEFAULT_SEED_LEN: usize = 10;

/// What goes into the character slot while free-running.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeedbackMode {
    /// The previous softmax output itself.
    #[default]
    Raw,
    /// One-hot of the previous output's argmax.
    OneHot,
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackMode::Raw => "raw",
            FeedbackMode::OneHot => "onehot",
        })
    }
}

impl FromStr for FeedbackMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(FeedbackMode::Raw),
            "onehot" => Ok(FeedbackMode::OneHot),
            other => Err(Error::Config(format!("unknown feedback mode {other:?} (expected raw or onehot)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecallResult {
    pub generated: String,
    pub edit_distance: usize,
    pub seed_length: usize,
    pub feedback: FeedbackMode,
}

/// Feeds `seq[0..seed_len)` from a zeroed history, then runs free for the
/// rest of the sequence length. The generated text is the seed followed by
/// the argmax-decoded predictions.
pub fn seed_and_generate(
    params: &NetworkParams,
    seq: &EncodedSequence,
    vocab: &Vocabulary,
    seed_len: usize,
    feedback: FeedbackMode,
) -> Result<RecallResult> {
    let len = seq.len();
    if seed_len == 0 || seed_len >= len {
        return Err(Error::Config(format!("seed length must be in 1..{len}, got {seed_len}")));
    }
    if params.dims.vocab != vocab.len() {
        return Err(Error::Shape(format!(
            "network has {} output classes, vocabulary has {}",
            params.dims.vocab,
            vocab.len()
        )));
    }
    let mut indices: Vec<usize> = seq.as_slice()[..seed_len].to_vec();
    let mut state = zero_state(params.dims);
    for &c in &seq.as_slice()[..seed_len] {
        state = forward(params, one_hot(c, vocab.len())?.as_slice(), &state)?;
    }
    while indices.len() < len {
        let predicted = argmax(&state.output);
        indices.push(predicted);
        if indices.len() == len {
            break;
        }
        let input = match feedback {
            FeedbackMode::Raw => state.output.clone(),
            FeedbackMode::OneHot => one_hot(predicted, vocab.len())?.into_vec(),
        };
        state = forward(params, &input, &state)?;
    }
    let generated = decode(&indices, vocab)?;
    let reference = decode(seq.as_slice(), vocab)?;
    Ok(RecallResult {
        edit_distance: levenshtein(&generated, &reference),
        generated,
        seed_length: seed_len,
        feedback,
    })
}

pub const TRAILER_PREFIX: &str = "edit_distance=";

/// Report body: the generated text verbatim, a newline, the
/// `edit_distance=<d>` trailer, then `feedback=` and `seed_length=` lines.
pub fn report_text(result: &RecallResult) -> String {
    format!(
        "{}\n{TRAILER_PREFIX}{}\nfeedback={}\nseed_length={}\n",
        result.generated, result.edit_distance, result.feedback, result.seed_length
    )
}

pub fn recall_report(result: &RecallResult, path: &Path) -> Result<()> {
    fs::write(path, report_text(result)).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReport<'a> {
    pub generated: &'a str,
    pub edit_distance: usize,
    pub feedback: FeedbackMode,
    pub seed_length: usize,
}

/// Inverse of [`report_text`].
pub fn parse_report(text: &str) -> Option<ParsedReport<'_>> {
    let split = text.rfind(&format!("\n{TRAILER_PREFIX}"))?;
    let generated = &text[..split];
    let mut lines = text[split + 1..].lines();
    let edit_distance = lines.next()?.strip_prefix(TRAILER_PREFIX)?.parse().ok()?;
    let feedback = lines.next()?.strip_prefix("feedback=")?.parse().ok()?;
    let seed_length = lines.next()?.strip_prefix("seed_length=")?.parse().ok()?;
    if lines.next().is_some() {
        return None;
    }
    Some(ParsedReport {
        generated,
        edit_distance,
        feedback,
        seed_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Corpus;
    use crate::network::{init_params, Dimensions};

    #[test]
    fn output_shape_and_seed() {
        let c = Corpus::from_text("ace act ace act tea").unwrap();
        let p = init_params(Dimensions::new(c.vocab.len(), 6), 0);
        for mode in [FeedbackMode::Raw, FeedbackMode::OneHot] {
            let r = seed_and_generate(&p, &c.sequence, &c.vocab, 4, mode).unwrap();
            assert_eq!(r.generated.chars().count(), c.len());
            assert!(r.generated.starts_with("ace "));
            assert_eq!(r, seed_and_generate(&p, &c.sequence, &c.vocab, 4, mode).unwrap());
            assert_eq!(r.edit_distance == 0, r.generated == c.text);
        }
    }

    #[test]
    fn rejects_bad_seed_length() {
        let c = Corpus::from_text("abcabc").unwrap();
        let p = init_params(Dimensions::new(3, 4), 0);
        assert!(seed_and_generate(&p, &c.sequence, &c.vocab, 6, FeedbackMode::Raw).is_err());
        assert!(seed_and_generate(&p, &c.sequence, &c.vocab, 0, FeedbackMode::Raw).is_err());
    }

    #[test]
    fn report_round_trip() {
        let r = RecallResult {
            generated: "line one\nline two".into(),
            edit_distance: 0,
            seed_length: 3,
            feedback: FeedbackMode::OneHot,
        };
        let text = report_text(&r);
        assert!(text.starts_with("line one\nline two\nedit_distance=0\n"));
        let parsed = parse_report(&text).unwrap();
        assert_eq!(parsed.generated, "line one\nline two");
        assert_eq!((parsed.edit_distance, parsed.feedback, parsed.seed_length), (0, FeedbackMode::OneHot, 3));
        assert!(parse_report("no trailer\n").is_none());
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        recall_report(&r, &a).unwrap();
        assert_eq!(fs::read_to_string(&a).unwrap(), text);
    }

    #[test]
    fn feedback_mode_parsing() {
        assert_eq!("raw".parse::<FeedbackMode>().unwrap(), FeedbackMode::Raw);
        assert_eq!("onehot".parse::<FeedbackMode>().unwrap(), FeedbackMode::OneHot);
        assert!("soft".parse::<FeedbackMode>().is_err());
        assert_eq!(FeedbackMode::OneHot.to_string(), "onehot");
    }
}
