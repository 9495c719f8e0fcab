use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use pclones::checkpoint;
use pclones::recall::{recall_report, seed_and_generate};
use pclones::{FeedbackMode, RecallResult};

use crate::args::RecallArgs;
use crate::manifest::{sha256_hex, Manifest};
use crate::source::CorpusSource;

/// Loads the checkpoint and corpus, checks the corpus against the owning
/// run's manifest when there is one, and writes the recall report.
pub fn cmd_recall(args: &RecallArgs) -> Result<(PathBuf, RecallResult)> {
    let params = checkpoint::load(&args.checkpoint)?;
    let manifest = Manifest::find_for_checkpoint(&args.checkpoint)
        .map(|p| Manifest::load(&p))
        .transpose()?;

    let mut source = match (&args.corpus.corpus, &manifest) {
        (None, Some(m)) => CorpusSource::from_manifest(m)?,
        _ => CorpusSource::new(args.corpus.corpus.clone(), args.corpus.normalize_crlf, None),
    };
    if args.corpus.normalize_crlf {
        source.endings = pclones::corpus::LineEndings::NormalizeCrlf;
    }
    if args.corpus_length.is_some() {
        source.length = args.corpus_length;
    } else if source.length.is_none() {
        source.length = manifest
            .as_ref()
            .and_then(|m| m.get("corpus_length"))
            .map(str::parse)
            .transpose()
            .context("manifest corpus_length is not an integer")?;
    }
    let corpus = source.load()?;

    if let Some(expected) = manifest.as_ref().and_then(|m| m.get("corpus_sha256")) {
        let actual = sha256_hex(&corpus.text);
        if actual != expected {
            bail!(pclones::Error::Config(format!(
                "corpus checksum {actual} does not match the run manifest ({expected})"
            )));
        }
    }

    let feedback = FeedbackMode::from(args.feedback);
    let result = seed_and_generate(&params, &corpus.sequence, &corpus.vocab, args.seed_length, feedback)?;
    let out = match &args.out {
        Some(p) => p.clone(),
        None => args
            .checkpoint
            .parent()
            .unwrap_or_else(|| ".".as_ref())
            .join(format!("recall_{feedback}.txt")),
    };
    recall_report(&result, &out)?;
    Ok((out, result))
}
