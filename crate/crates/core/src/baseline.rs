//! The regular comparison model: plain online gradient descent along the
//! sequence from start to end, instrumented with non-active clones that only
//! measure loss per history level.

use crate::clones::{CloneEngine, IterationObserver, SweepRecord};
use crate::config::RunConfig;
use crate::corpus::{one_hot, EncodedSequence};
use crate::error::Result;
use crate::metrics::LossSurface;
use crate::network::{init_params, step_gradient, zero_state, Dimensions, NetworkParams};

/// One non-circular pass: history zeroed, then an update after every step
/// `t = 1..len−1` predicting `S[t+1]` from `S[t]`. Returns the per-step
/// losses.
pub fn regular_sweep(params: &mut NetworkParams, seq: &EncodedSequence, lr: f64) -> Result<Vec<f64>> {
    let mut measure = |_: usize, _: &NetworkParams| Ok(());
    regular_sweep_with(params, seq, lr, &mut measure)
}

/// [`regular_sweep`] calling `before_step(t, params)` ahead of each update.
fn regular_sweep_with(
    params: &mut NetworkParams,
    seq: &EncodedSequence,
    lr: f64,
    before_step: &mut dyn FnMut(usize, &NetworkParams) -> Result<()>,
) -> Result<Vec<f64>> {
    let dims = params.dims;
    let mut state = zero_state(dims);
    let mut losses = Vec::with_capacity(seq.len().saturating_sub(1));
    for t in 1..seq.len() {
        before_step(t, params)?;
        let x = one_hot(seq.at1(t), dims.vocab)?;
        let (grads, loss, next) = step_gradient(params, x.as_slice(), &state, seq.at1(t + 1))?;
        params.apply_update_in_place(&grads, lr)?;
        state = next;
        losses.push(loss);
    }
    Ok(losses)
}

/// Mean loss per history level under frozen `params`, measured by a bank of
/// `clones` non-active clones.
pub fn measure_with_nonactive_clones(
    params: &NetworkParams,
    seq: &EncodedSequence,
    clones: usize,
    threads: usize,
) -> Result<SweepRecord> {
    let mut engine = CloneEngine::for_sequence(params.dims, clones, seq.len(), threads)?;
    engine.measure_sweep(params, seq)
}

/// Trains the regular model from the same initialisation as the target run.
/// Each iteration is one regular sweep followed by a non-active measurement
/// sweep on the updated weights, or, with `measure_every_step`, measurement
/// clones stepping alongside training using the weights in force before each
/// update.
pub fn train_regular(
    seq: &EncodedSequence,
    vocab_size: usize,
    config: &RunConfig,
    mut observer: impl IterationObserver,
) -> Result<(NetworkParams, LossSurface)> {
    config.validate(seq.len())?;
    let dims = Dimensions::new(vocab_size, config.hidden);
    let mut params = init_params(dims, config.rng_seed);
    let mut engine = CloneEngine::for_sequence(dims, config.clones, seq.len(), config.threads)?;
    let mut surface = LossSurface::new(seq.len() - 1);
    for iteration in 1..=config.iterations {
        let record = if config.measure_every_step {
            engine.reset();
            let mut mean_loss_by_step = Vec::with_capacity(seq.len() - 1);
            let mut measure = |t: usize, p: &NetworkParams| {
                mean_loss_by_step.push(engine.measure_step(p, seq, t)?);
                Ok(())
            };
            regular_sweep_with(&mut params, seq, config.lr, &mut measure)?;
            SweepRecord { mean_loss_by_step }
        } else {
            regular_sweep(&mut params, seq, config.lr)?;
            engine.measure_sweep(&params, seq)?
        };
        surface.push_row(record.mean_loss_by_step.clone())?;
        observer.on_iteration(iteration, &params, &record)?;
    }
    Ok((params, surface))
}
