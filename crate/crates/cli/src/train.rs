use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use pclones::baseline::train_regular;
use pclones::checkpoint;
use pclones::corpus::{MOBY_DICK_LEN, MOBY_DICK_VOCAB};
use pclones::metrics::{row_sum, write_csv_row, SUM_LOSS_CSV_HEADER, SURFACE_CSV_HEADER};
use pclones::{train_target, Corpus, NetworkParams, RunConfig, SweepRecord};

use crate::args::{Mode, Preset, TrainArgs};
use crate::manifest::{unix_seconds, Manifest};
use crate::source::CorpusSource;

pub const SURFACE_FILE: &str = "loss_surface.csv";
pub const SUM_LOSS_FILE: &str = "sum_loss.csv";
pub const FINAL_PARAMS_FILE: &str = "final_params.ckpt";
pub const CHECKPOINT_DIR: &str = "checkpoints";

pub const SMOKE_LENGTH: usize = 100;
pub const SMOKE_ITERATIONS: usize = 10;

/// The corpus a preset trains on. Paper and smoke runs insist on the shipped
/// 500/42 counts before anything else happens.
pub fn resolve_corpus(args: &TrainArgs) -> Result<(CorpusSource, Corpus)> {
    let length = (args.preset == Preset::Smoke).then_some(SMOKE_LENGTH);
    let source = CorpusSource::new(args.corpus.corpus.clone(), args.corpus.normalize_crlf, length);
    let full = source.load_full()?;
    if args.preset != Preset::Custom {
        full.check(MOBY_DICK_LEN, MOBY_DICK_VOCAB)
            .context("corpus does not match the expected excerpt (use --preset custom for other texts)")?;
    }
    let corpus = source.truncate(full)?;
    Ok((source, corpus))
}

pub fn resolve_config(args: &TrainArgs, corpus: &Corpus) -> Result<RunConfig> {
    let base = RunConfig::default();
    let config = RunConfig {
        corpus: args.corpus.corpus.clone(),
        clones: args.clones.unwrap_or(corpus.len().saturating_sub(1)),
        iterations: args.iterations.unwrap_or(match args.preset {
            Preset::Smoke => SMOKE_ITERATIONS,
            Preset::Paper | Preset::Custom => base.iterations,
        }),
        lr: args.lr.unwrap_or(base.lr),
        rng_seed: args.seed.unwrap_or(base.rng_seed),
        threads: args.threads.unwrap_or(base.threads),
        hidden: args.hidden.unwrap_or(base.hidden),
        out: args.out.clone(),
        checkpoint_every: args.checkpoint_every.unwrap_or(base.checkpoint_every),
        measure_every_step: args.measure_every_step,
    };
    config.validate(corpus.len())?;
    Ok(config)
}

pub fn run_dir(args: &TrainArgs) -> PathBuf {
    match args.mode {
        Mode::Target => args.out.clone(),
        Mode::Regular => args.out.join("regular"),
    }
}

/// Streams each iteration's row to the run directory as it completes, so a
/// run that stops early leaves its history behind.
struct Recorder {
    dir: PathBuf,
    surface: BufWriter<File>,
    sums: BufWriter<File>,
    checkpoint_every: usize,
    iterations: usize,
}

impl Recorder {
    fn create(dir: &Path, config: &RunConfig) -> Result<Self> {
        let open = |name: &str, header: &str| -> Result<BufWriter<File>> {
            let path = dir.join(name);
            let mut w = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
            writeln!(w, "{header}")?;
            w.flush()?;
            Ok(w)
        };
        if config.checkpoint_every > 0 {
            fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
        }
        Ok(Recorder {
            dir: dir.to_path_buf(),
            surface: open(SURFACE_FILE, SURFACE_CSV_HEADER)?,
            sums: open(SUM_LOSS_FILE, SUM_LOSS_CSV_HEADER)?,
            checkpoint_every: config.checkpoint_every,
            iterations: config.iterations,
        })
    }

    fn record(&mut self, iteration: usize, params: &NetworkParams, record: &SweepRecord) -> Result<()> {
        let row = &record.mean_loss_by_step;
        let mut lines = String::new();
        write_csv_row(&mut lines, iteration, row);
        self.surface.write_all(lines.as_bytes())?;
        self.surface.flush()?;
        let sum = row_sum(row);
        writeln!(self.sums, "{iteration},{sum}")?;
        self.sums.flush()?;
        if self.checkpoint_every > 0 && iteration.is_multiple_of(self.checkpoint_every) {
            let path = self.dir.join(CHECKPOINT_DIR).join(format!("iter_{iteration:05}.ckpt"));
            checkpoint::save(params, &path)?;
        }
        eprintln!(
            "iteration {iteration}/{} sum_loss={sum:.6} zero_history_loss={:.6}",
            self.iterations, row[0]
        );
        Ok(())
    }
}

pub fn cmd_train(args: &TrainArgs) -> Result<PathBuf> {
    let (source, corpus) = resolve_corpus(args)?;
    let config = resolve_config(args, &corpus)?;
    let dir = run_dir(args);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut manifest = Manifest::default();
    manifest.set("format", "pclones-manifest 1");
    manifest.set("version", env!("CARGO_PKG_VERSION"));
    manifest.set("mode", args.mode.name());
    manifest.set("preset", args.preset.name());
    source.record(&mut manifest, &corpus);
    manifest.set("clones", config.clones);
    manifest.set("iterations", config.iterations);
    manifest.set("lr", config.lr);
    manifest.set("seed", config.rng_seed);
    manifest.set("threads", config.threads);
    manifest.set("hidden", config.hidden);
    manifest.set("checkpoint_every", config.checkpoint_every);
    manifest.set("measure_every_step", config.measure_every_step);
    manifest.set("started_unix", unix_seconds());
    manifest.set("status", "running");
    manifest.save(&dir)?;

    let mut recorder = Recorder::create(&dir, &config)?;
    let mut observer = |i: usize, p: &NetworkParams, r: &SweepRecord| -> pclones::Result<()> {
        recorder
            .record(i, p, r)
            .map_err(|e| pclones::Error::Config(format!("recording iteration {i}: {e:#}")))
    };
    let seq = &corpus.sequence;
    let vocab = corpus.vocab.len();
    let outcome = match args.mode {
        Mode::Target => train_target(seq, vocab, &config, &mut observer),
        Mode::Regular => train_regular(seq, vocab, &config, &mut observer),
    };
    manifest.set("finished_unix", unix_seconds());
    match outcome {
        Ok((params, _surface)) => {
            checkpoint::save(&params, &dir.join(FINAL_PARAMS_FILE))?;
            manifest.set("status", "complete");
            manifest.save(&dir)?;
            Ok(dir)
        }
        Err(e) => {
            let status = if matches!(e, pclones::Error::Divergence(_)) { "diverged" } else { "failed" };
            manifest.set("status", status);
            manifest.save(&dir)?;
            Err(e.into())
        }
    }
}
