//! Resolving the training text from flags or a manifest.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use pclones::corpus::{LineEndings, MOBY_DICK_500};
use pclones::Corpus;

use crate::manifest::Manifest;

pub const BUILTIN: &str = "builtin:moby_dick_500";

/// A corpus file (or the bundled excerpt), how to read it, and an optional
/// prefix length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSource {
    pub path: Option<PathBuf>,
    pub endings: LineEndings,
    pub length: Option<usize>,
}

impl CorpusSource {
    pub fn new(path: Option<PathBuf>, normalize_crlf: bool, length: Option<usize>) -> Self {
        CorpusSource {
            path,
            endings: if normalize_crlf {
                LineEndings::NormalizeCrlf
            } else {
                LineEndings::Verbatim
            },
            length,
        }
    }

    /// Loads the full text, before any truncation.
    pub fn load_full(&self) -> Result<Corpus> {
        match &self.path {
            None => {
                let text = match self.endings {
                    LineEndings::Verbatim => MOBY_DICK_500.to_string(),
                    LineEndings::NormalizeCrlf => MOBY_DICK_500.replace("\r\n", "\n"),
                };
                Ok(Corpus::from_text(text)?)
            }
            Some(p) => Ok(Corpus::load(p, self.endings)?),
        }
    }

    pub fn load(&self) -> Result<Corpus> {
        let full = self.load_full()?;
        self.truncate(full)
    }

    pub fn truncate(&self, full: Corpus) -> Result<Corpus> {
        match self.length {
            None => Ok(full),
            Some(n) if n > full.len() => bail!("corpus has {} characters, cannot take {n}", full.len()),
            Some(n) => Ok(full.truncated(n)?),
        }
    }

    pub fn describe(&self) -> String {
        match &self.path {
            None => BUILTIN.to_string(),
            Some(p) => fs::canonicalize(p).unwrap_or_else(|_| p.clone()).display().to_string(),
        }
    }

    pub fn record(&self, manifest: &mut Manifest, corpus: &Corpus) {
        manifest.set("corpus", self.describe());
        manifest.set(
            "line_endings",
            match self.endings {
                LineEndings::Verbatim => "verbatim",
                LineEndings::NormalizeCrlf => "crlf_to_lf",
            },
        );
        manifest.set("corpus_length", corpus.len());
        manifest.set("vocab_size", corpus.vocab.len());
        manifest.set("corpus_sha256", crate::manifest::sha256_hex(&corpus.text));
    }

    /// The source a manifest describes.
    pub fn from_manifest(m: &Manifest) -> Result<Self> {
        let corpus = m.get("corpus").context("manifest has no corpus entry")?;
        let path = (corpus != BUILTIN).then(|| PathBuf::from(corpus));
        let normalize = match m.get("line_endings") {
            Some("crlf_to_lf") => true,
            Some("verbatim") | None => false,
            Some(other) => bail!("manifest has unknown line_endings {other:?}"),
        };
        let length = m
            .get("corpus_length")
            .map(str::parse)
            .transpose()
            .context("manifest corpus_length is not an integer")?;
        Ok(Self::new(path, normalize, length))
    }
}
