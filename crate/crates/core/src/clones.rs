//! Parallel-clones training.
//!
//! `N` clones share one weight set and each walks the circular training
//! sequence from its own phase. At every sweep step all clones compute a
//! single-step gradient from their own recurrent state, the gradients are
//! averaged and the average is applied once. Clone histories are zeroed at the
//! start of every full sweep, so at sweep step `q` each clone has `q − 1`
//! steps of history and the step's mean loss is the loss at history level
//! `q − 1`.
//!
//! Per-clone work runs on a fixed-size rayon pool. Reductions over clones are
//! always evaluated in ascending clone order, whichever worker produced the
//! terms, so results do not depend on the thread count.

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::corpus::EncodedSequence;
use crate::error::{Error, Result};
use crate::kernels::weighted_row_sums;
use crate::metrics::LossSurface;
use crate::network::{
    backward_into, cross_entropy, forward_group, init_params, zero_state, ActivationState, Dimensions,
    Gradients, NetworkParams,
};

/// Rows of `w_ih` accumulated together; sized so the block stays in L1.
const ROW_BLOCK: usize = 32;

/// Clones forwarded together; matches the width of the grouped forward kernel.
const GROUP: usize = 4;

/// 1-based `(input, target)` positions addressed by clone `n` at sweep step
/// `q` of a circular sequence of length `len`.
pub fn clone_indices(n: usize, q: usize, len: usize) -> (usize, usize) {
    debug_assert!(n >= 1 && q >= 1 && len >= 2);
    (1 + (n + q - 2) % len, 1 + (n + q - 1) % len)
}

/// Phases for `clones` clones on a sequence of length `len`: consecutive when
/// `clones = len − 1`, otherwise spaced `⌊len / clones⌋` apart.
pub fn clone_phases(clones: usize, len: usize) -> Vec<usize> {
    let spacing = if clones + 1 >= len { 1 } else { len / clones };
    (0..clones).map(|i| 1 + i * spacing).collect()
}

/// Mean cross-entropy per sweep step of one full sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub mean_loss_by_step: Vec<f64>,
}

/// Recurrent state of every clone, stored contiguously.
#[derive(Debug, Clone)]
pub struct CloneBank {
    dims: Dimensions,
    phases: Vec<usize>,
    hidden: Vec<f64>,
    output: Vec<f64>,
}

impl CloneBank {
    pub fn new(dims: Dimensions, phases: Vec<usize>) -> Self {
        let n = phases.len();
        CloneBank {
            dims,
            phases,
            hidden: vec![0.0; n * dims.hidden],
            output: vec![0.0; n * dims.vocab],
        }
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[usize] {
        &self.phases
    }

    pub fn reset(&mut self) {
        self.hidden.fill(0.0);
        self.output.fill(0.0);
    }

    /// Copy of clone `i`'s state (0-based position in the bank).
    pub fn state(&self, i: usize) -> ActivationState {
        let (h, v) = (self.dims.hidden, self.dims.vocab);
        ActivationState {
            hidden: self.hidden[i * h..(i + 1) * h].to_vec(),
            output: self.output[i * v..(i + 1) * v].to_vec(),
        }
    }

    pub fn is_zeroed(&self) -> bool {
        let zero = zero_state(self.dims);
        (0..self.len()).all(|i| self.state(i) == zero)
    }
}

/// Buffers and worker pool for stepping a [`CloneBank`].
pub struct CloneEngine {
    dims: Dimensions,
    bank: CloneBank,
    pool: rayon::ThreadPool,
    inputs: Vec<f64>,
    delta_h: Vec<f64>,
    delta_o: Vec<f64>,
    losses: Vec<f64>,
    grads: Gradients,
}

impl CloneEngine {
    pub fn new(dims: Dimensions, phases: Vec<usize>, threads: usize) -> Result<Self> {
        dims.validate()?;
        if phases.is_empty() {
            return Err(Error::Config("at least one clone is required".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        let n = phases.len();
        Ok(CloneEngine {
            dims,
            bank: CloneBank::new(dims, phases),
            pool,
            inputs: vec![0.0; n * dims.input_total()],
            delta_h: vec![0.0; n * dims.hidden],
            delta_o: vec![0.0; n * dims.vocab],
            losses: vec![0.0; n],
            grads: Gradients::zeros(dims),
        })
    }

    /// Engine for `clones` clones spaced over a sequence of length `len`.
    pub fn for_sequence(dims: Dimensions, clones: usize, len: usize, threads: usize) -> Result<Self> {
        if len < 2 || clones == 0 || clones > len - 1 {
            return Err(Error::Config(format!(
                "clone count must be in 1..={} for a sequence of length {len}, got {clones}",
                len.saturating_sub(1)
            )));
        }
        Self::new(dims, clone_phases(clones, len), threads)
    }

    pub fn bank(&self) -> &CloneBank {
        &self.bank
    }

    pub fn reset(&mut self) {
        self.bank.reset();
    }

    /// The averaged gradient of the last [`sweep_step`](Self::sweep_step).
    pub fn last_gradient(&self) -> &Gradients {
        &self.grads
    }

    /// Per-clone losses of the last step, in bank order.
    pub fn last_losses(&self) -> &[f64] {
        &self.losses
    }

    /// Forward every clone one step at sweep step `q`; fills the inputs,
    /// advances the bank and records per-clone losses. With `backprop`, also
    /// fills the per-clone error signals.
    fn advance(&mut self, params: &NetworkParams, seq: &EncodedSequence, q: usize, backprop: bool) {
        let dims = self.dims;
        let (ni, nh, nv) = (dims.input_total(), dims.hidden, dims.vocab);
        let len = seq.len();
        let bank = &mut self.bank;
        let work = self
            .inputs
            .par_chunks_mut(ni * GROUP)
            .zip(bank.hidden.par_chunks_mut(nh * GROUP))
            .zip(bank.output.par_chunks_mut(nv * GROUP))
            .zip(self.delta_h.par_chunks_mut(nh * GROUP))
            .zip(self.delta_o.par_chunks_mut(nv * GROUP))
            .zip(self.losses.par_chunks_mut(GROUP))
            .zip(bank.phases.par_chunks(GROUP));
        self.pool.install(|| {
            work.for_each(|((((((x, hidden), output), dh), d_o), loss), phases)| {
                let mut targets = [0usize; GROUP];
                for (c, &phase) in phases.iter().enumerate() {
                    let (input_pos, target_pos) = clone_indices(phase, q, len);
                    targets[c] = seq.at1(target_pos);
                    let xc = &mut x[c * ni..(c + 1) * ni];
                    xc[..nv].fill(0.0);
                    xc[seq.at1(input_pos)] = 1.0;
                    xc[nv..nv + nh].copy_from_slice(&hidden[c * nh..(c + 1) * nh]);
                    xc[nv + nh..].copy_from_slice(&output[c * nv..(c + 1) * nv]);
                }
                forward_group(params, x, hidden, output);
                for (c, l) in loss.iter_mut().enumerate() {
                    let (h, o) = (&hidden[c * nh..(c + 1) * nh], &output[c * nv..(c + 1) * nv]);
                    *l = cross_entropy(o, targets[c]);
                    if backprop {
                        backward_into(
                            params,
                            h,
                            o,
                            targets[c],
                            &mut d_o[c * nv..(c + 1) * nv],
                            &mut dh[c * nh..(c + 1) * nh],
                        );
                    }
                }
            });
        });
    }

    /// Averages the per-clone weight gradients held in the work buffers into
    /// `self.grads`, summing in ascending clone order.
    fn reduce_gradients(&mut self) {
        let dims = self.dims;
        let (ni, nh, nv) = (dims.input_total(), dims.hidden, dims.vocab);
        let n = self.bank.len();
        let scale = n as f64;
        let inputs = &self.inputs;
        let delta_h = &self.delta_h;
        let delta_o = &self.delta_o;
        let hidden = &self.bank.hidden;
        let grads = &mut self.grads;

        self.pool.install(|| {
            grads
                .w_ih
                .par_chunks_mut(ni * ROW_BLOCK)
                .zip(grads.b_h.par_chunks_mut(ROW_BLOCK))
                .enumerate()
                .for_each(|(block, (rows, bias))| {
                    let j0 = block * ROW_BLOCK;
                    weighted_row_sums(rows, bias.len(), ni, &delta_h[j0..], nh, inputs, n);
                    column_sums(bias, &delta_h[j0..], nh, n);
                    for v in rows.iter_mut().chain(bias.iter_mut()) {
                        *v /= scale;
                    }
                });
            grads
                .w_ho
                .par_chunks_mut(nh * ROW_BLOCK)
                .zip(grads.b_o.par_chunks_mut(ROW_BLOCK))
                .enumerate()
                .for_each(|(block, (rows, bias))| {
                    let v0 = block * ROW_BLOCK;
                    weighted_row_sums(rows, bias.len(), nh, &delta_o[v0..], nv, hidden, n);
                    column_sums(bias, &delta_o[v0..], nv, n);
                    for g in rows.iter_mut().chain(bias.iter_mut()) {
                        *g /= scale;
                    }
                });
        });
    }

    fn mean_loss(&self) -> f64 {
        self.losses.iter().fold(0.0, |acc, &l| acc + l) / self.losses.len() as f64
    }

    /// One synchronised step: every clone computes its gradient at sweep
    /// step `q` from the current (pre-update) weights, the mean gradient is
    /// applied with rate `lr`, and the mean per-clone loss is returned.
    pub fn sweep_step(
        &mut self,
        params: &mut NetworkParams,
        seq: &EncodedSequence,
        q: usize,
        lr: f64,
    ) -> Result<f64> {
        self.check(params)?;
        self.advance(params, seq, q, true);
        self.reduce_gradients();
        let mean = self.mean_loss();
        if !mean.is_finite() || !self.grads.is_finite() {
            return Err(Error::Divergence(format!(
                "averaged gradient is non-finite at sweep step {q}"
            )));
        }
        params.apply_update_in_place(&self.grads, lr)?;
        Ok(mean)
    }

    /// Forward-only step used by measurement clones; weights are untouched.
    pub fn measure_step(&mut self, params: &NetworkParams, seq: &EncodedSequence, q: usize) -> Result<f64> {
        self.check(params)?;
        self.advance(params, seq, q, false);
        let mean = self.mean_loss();
        if !mean.is_finite() {
            return Err(Error::Divergence(format!(
                "measurement produced non-finite loss at sweep step {q}"
            )));
        }
        Ok(mean)
    }

    /// Fresh histories, then sweep steps `q = 1..len−1`, updating `params`.
    pub fn full_sweep(&mut self, params: &mut NetworkParams, seq: &EncodedSequence, lr: f64) -> Result<SweepRecord> {
        self.reset();
        let steps = seq.len() - 1;
        let mut mean_loss_by_step = Vec::with_capacity(steps);
        for q in 1..=steps {
            mean_loss_by_step.push(self.sweep_step(params, seq, q, lr)?);
        }
        Ok(SweepRecord { mean_loss_by_step })
    }

    /// A full sweep with frozen weights.
    pub fn measure_sweep(&mut self, params: &NetworkParams, seq: &EncodedSequence) -> Result<SweepRecord> {
        self.reset();
        let steps = seq.len() - 1;
        let mut mean_loss_by_step = Vec::with_capacity(steps);
        for q in 1..=steps {
            mean_loss_by_step.push(self.measure_step(params, seq, q)?);
        }
        Ok(SweepRecord { mean_loss_by_step })
    }

    fn check(&self, params: &NetworkParams) -> Result<()> {
        if params.dims != self.dims {
            return Err(Error::Shape(format!(
                "engine built for {:?}, params are {:?}",
                self.dims, params.dims
            )));
        }
        Ok(())
    }
}

/// `out[r] = Σ_n values[n·stride + r]`, summed in ascending `n`.
fn column_sums(out: &mut [f64], values: &[f64], stride: usize, count: usize) {
    out.copy_from_slice(&values[..out.len()]);
    for n in 1..count {
        for (o, &v) in out.iter_mut().zip(&values[n * stride..]) {
            *o += v;
        }
    }
}

/// Called after each training iteration with its 1-based index, the updated
/// weights and the iteration's loss record.
pub trait IterationObserver {
    fn on_iteration(&mut self, iteration: usize, params: &NetworkParams, record: &SweepRecord) -> Result<()>;
}

impl<F> IterationObserver for F
where
    F: FnMut(usize, &NetworkParams, &SweepRecord) -> Result<()>,
{
    fn on_iteration(&mut self, iteration: usize, params: &NetworkParams, record: &SweepRecord) -> Result<()> {
        self(iteration, params, record)
    }
}

/// Observer that does nothing.
pub fn no_observer(_: usize, _: &NetworkParams, _: &SweepRecord) -> Result<()> {
    Ok(())
}

/// Trains the target model with parallel clones for `config.iterations` full
/// sweeps from `init_params(config.rng_seed)`.
pub fn train_target(
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
        let record = engine.full_sweep(&mut params, seq, config.lr)?;
        surface.push_row(record.mean_loss_by_step.clone())?;
        observer.on_iteration(iteration, &params, &record)?;
    }
    Ok((params, surface))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{one_hot, Corpus};
    use crate::network::step_gradient;

    #[test]
    fn index_formula() {
        assert_eq!(clone_indices(1, 1, 500), (1, 2));
        assert_eq!(clone_indices(2, 499, 500), (500, 1));
        assert_eq!(clone_indices(499, 499, 500), (497, 498));
    }

    #[test]
    fn phases_cover_distinct_positions() {
        assert_eq!(clone_phases(499, 500), (1..=499).collect::<Vec<_>>());
        assert_eq!(clone_phases(1, 50), vec![1]);
        assert_eq!(clone_phases(4, 20), vec![1, 6, 11, 16]);
        for (n, len) in [(499, 500), (10, 500), (7, 8), (3, 50)] {
            let phases = clone_phases(n, len);
            for q in 1..len {
                let mut inputs: Vec<_> = phases.iter().map(|&p| clone_indices(p, q, len).0).collect();
                inputs.sort_unstable();
                inputs.dedup();
                assert_eq!(inputs.len(), n);
            }
        }
    }

    fn ace_act() -> Corpus {
        Corpus::from_text("ace act").unwrap()
    }

    #[test]
    fn averaged_gradient_is_mean_of_single_steps() {
        let c = ace_act();
        let dims = Dimensions::new(c.vocab.len(), 6);
        let params = init_params(dims, 11);
        let len = c.len();
        let mut engine = CloneEngine::for_sequence(dims, 6, len, 2).unwrap();

        // Run two steps so the second one starts from non-trivial histories.
        let mut p = params.clone();
        engine.sweep_step(&mut p, &c.sequence, 1, 0.5).unwrap();
        let states: Vec<_> = (0..6).map(|i| engine.bank().state(i)).collect();
        let before = p.clone();
        engine.sweep_step(&mut p, &c.sequence, 2, 0.5).unwrap();

        let mut sum = Gradients::zeros(dims);
        let mut losses = 0.0;
        for (i, &phase) in engine.bank().phases().iter().enumerate() {
            let (inp, tgt) = clone_indices(phase, 2, len);
            let x = one_hot(c.sequence.at1(inp), dims.vocab).unwrap();
            let (g, loss, next) = step_gradient(&before, x.as_slice(), &states[i], c.sequence.at1(tgt)).unwrap();
            assert_eq!(next, engine.bank().state(i));
            for (s, g) in sum.buffers_mut().into_iter().zip(g.buffers()) {
                for (s, &g) in s.iter_mut().zip(g) {
                    *s = if i == 0 { g } else { *s + g };
                }
            }
            losses += loss;
        }
        for s in sum.buffers_mut() {
            s.iter_mut().for_each(|v| *v /= 6.0);
        }
        assert_eq!(&sum, engine.last_gradient());
        assert!((losses / 6.0 - engine.mean_loss()).abs() < 1e-15);
    }

    #[test]
    fn identical_clones_average_to_single_gradient() {
        let c = ace_act();
        let dims = Dimensions::new(c.vocab.len(), 5);
        let params = init_params(dims, 2);
        let mut engine = CloneEngine::new(dims, vec![3, 3, 3, 3], 1).unwrap();
        let mut p = params.clone();
        engine.sweep_step(&mut p, &c.sequence, 1, 1.0).unwrap();
        let (inp, tgt) = clone_indices(3, 1, c.len());
        let x = one_hot(c.sequence.at1(inp), dims.vocab).unwrap();
        let (g, _, _) = step_gradient(&params, x.as_slice(), &zero_state(dims), c.sequence.at1(tgt)).unwrap();
        for (a, b) in engine.last_gradient().buffers().iter().zip(g.buffers()) {
            for (a, b) in a.iter().zip(b) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn single_clone_is_an_online_step() {
        let c = ace_act();
        let dims = Dimensions::new(c.vocab.len(), 4);
        let params = init_params(dims, 5);
        let mut engine = CloneEngine::for_sequence(dims, 1, c.len(), 1).unwrap();
        let mut p = params.clone();
        let loss = engine.sweep_step(&mut p, &c.sequence, 1, 1.0).unwrap();
        let x = one_hot(c.sequence.at1(1), dims.vocab).unwrap();
        let (g, l, _) = step_gradient(&params, x.as_slice(), &zero_state(dims), c.sequence.at1(2)).unwrap();
        assert_eq!(loss, l);
        assert_eq!(p, crate::network::apply_update(&params, &g, 1.0).unwrap());
    }

    #[test]
    fn full_sweep_shape_and_zero_lr() {
        let c = ace_act();
        let dims = Dimensions::new(c.vocab.len(), 4);
        let params = init_params(dims, 0);
        let mut engine = CloneEngine::for_sequence(dims, 6, c.len(), 1).unwrap();
        let mut p = params.clone();
        let rec = engine.full_sweep(&mut p, &c.sequence, 0.0).unwrap();
        assert_eq!(rec.mean_loss_by_step.len(), 6);
        assert_eq!(p, params);
        assert!(rec.mean_loss_by_step.iter().all(|l| l.is_finite() && *l >= 0.0));
    }

    #[test]
    fn bank_is_zeroed_at_sweep_start() {
        let c = ace_act();
        let dims = Dimensions::new(c.vocab.len(), 4);
        let mut p = init_params(dims, 0);
        let mut engine = CloneEngine::for_sequence(dims, 6, c.len(), 1).unwrap();
        assert!(engine.bank().is_zeroed());
        engine.full_sweep(&mut p, &c.sequence, 1.0).unwrap();
        assert!(!engine.bank().is_zeroed());
        engine.reset();
        assert!(engine.bank().is_zeroed());
    }

    #[test]
    fn divergence_is_reported() {
        let c = ace_act();
        let dims = Dimensions::new(c.vocab.len(), 4);
        let mut p = init_params(dims, 0);
        p.w_ho[0] = f64::NAN;
        let mut engine = CloneEngine::for_sequence(dims, 6, c.len(), 1).unwrap();
        assert!(matches!(
            engine.sweep_step(&mut p, &c.sequence, 1, 1.0),
            Err(Error::Divergence(_))
        ));
    }

    #[test]
    fn rejects_too_many_clones() {
        let dims = Dimensions::new(3, 4);
        assert!(CloneEngine::for_sequence(dims, 7, 7, 1).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = Corpus::from_text("the cat sat on the mat and the rat ran").unwrap();
        let dims = Dimensions::new(c.vocab.len(), 9);
        let mut results = Vec::new();
        for threads in [1, 3] {
            let mut p = init_params(dims, 8);
            let mut engine = CloneEngine::for_sequence(dims, c.len() - 1, c.len(), threads).unwrap();
            let rec = engine.full_sweep(&mut p, &c.sequence, 1.0).unwrap();
            results.push((p, rec));
        }
        assert_eq!(results[0], results[1]);
    }
}
