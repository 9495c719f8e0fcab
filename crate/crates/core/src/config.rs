use std::path::PathBuf;

use crate::error::{Error, Result};

/// Hidden width of the reference architecture.
pub const DEFAULT_HIDDEN: usize = 256;

/// Every knob of a training run. The defaults reproduce the reference
/// Moby Dick experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// `None` means the bundled corpus.
    pub corpus: Option<PathBuf>,
    pub clones: usize,
    pub iterations: usize,
    pub lr: f64,
    pub rng_seed: u64,
    pub threads: usize,
    pub hidden: usize,
    pub out: PathBuf,
    /// Write a checkpoint every this many iterations (0 disables).
    pub checkpoint_every: usize,
    /// Baseline only: advance the measurement clones in lockstep with the
    /// regular training steps instead of one frozen sweep per iteration.
    pub measure_every_step: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            clones: 499,
            iterations: 100,
            lr: 1.0,
            rng_seed: 0,
            threads: 1,
            hidden: DEFAULT_HIDDEN,
            out: PathBuf::from("run"),
            checkpoint_every: 0,
            measure_every_step: false,
        }
    }
}

impl RunConfig {
    /// Checks the config against a training sequence of length `seq_len`.
    pub fn validate(&self, seq_len: usize) -> Result<()> {
        if seq_len < 2 {
            return Err(Error::Config(format!(
                "training sequence needs at least 2 characters, got {seq_len}"
            )));
        }
        if self.clones == 0 || self.clones > seq_len - 1 {
            return Err(Error::Config(format!(
                "clone count must be in 1..={}, got {}",
                seq_len - 1,
                self.clones
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if self.threads == 0 {
            return Err(Error::Config("thread count must be at least 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        Ok(())
    }
}
