//! The recurrent network: one sigmoid hidden layer and a softmax output layer,
//! with the previous step's hidden and output activations concatenated onto
//! the character input.
//!
//! ```text
//!   input  = [ character (V) | previous hidden (H) | previous output (V) ]
//!   hidden = sigmoid(W_ih · input + b_h)
//!   output = softmax(W_ho · hidden + b_o)
//! ```
//!
//! Gradients are single-step: the fed-back activations are inputs like any
//! other and no gradient flows into the step that produced them. History still
//! reaches the prediction through the forward pass.
//!
//! All arithmetic is `f64` and every reduction has a fixed evaluation order, so
//! results are bitwise reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kernels::{dot, dot4};

/// Half-width of the uniform weight initialisation interval.
pub const INIT_RANGE: f64 = 0.1;

/// Lower clamp on the target probability inside the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub vocab: usize,
    pub hidden: usize,
}

impl Dimensions {
    pub fn new(vocab: usize, hidden: usize) -> Self {
        Dimensions { vocab, hidden }
    }

    /// Width of the assembled input: character, previous hidden, previous
    /// output.
    pub fn input_total(&self) -> usize {
        2 * self.vocab + self.hidden
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.vocab == 0 || self.hidden == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive, got vocab={} hidden={}",
                self.vocab, self.hidden
            )));
        }
        Ok(())
    }
}

/// The shared weight set. Matrices are row-major: `w_ih` is
/// `hidden × input_total`, `w_ho` is `vocab × hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub dims: Dimensions,
    pub w_ih: Vec<f64>,
    pub b_h: Vec<f64>,
    pub w_ho: Vec<f64>,
    pub b_o: Vec<f64>,
}

/// ∂loss/∂parameter, laid out exactly like [`NetworkParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub dims: Dimensions,
    pub w_ih: Vec<f64>,
    pub b_h: Vec<f64>,
    pub w_ho: Vec<f64>,
    pub b_o: Vec<f64>,
}

impl NetworkParams {
    pub fn zeros(dims: Dimensions) -> Self {
        NetworkParams {
            dims,
            w_ih: vec![0.0; dims.hidden * dims.input_total()],
            b_h: vec![0.0; dims.hidden],
            w_ho: vec![0.0; dims.vocab * dims.hidden],
            b_o: vec![0.0; dims.vocab],
        }
    }

    pub fn w_ih_row(&self, j: usize) -> &[f64] {
        let n = self.dims.input_total();
        &self.w_ih[j * n..(j + 1) * n]
    }

    pub fn w_ho_row(&self, v: usize) -> &[f64] {
        let n = self.dims.hidden;
        &self.w_ho[v * n..(v + 1) * n]
    }

    pub fn is_finite(&self) -> bool {
        [&self.w_ih, &self.b_h, &self.w_ho, &self.b_o]
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite()))
    }

    /// `p ← p − lr·g` for every parameter.
    pub fn apply_update_in_place(&mut self, grads: &Gradients, lr: f64) -> Result<()> {
        if grads.dims != self.dims {
            return Err(Error::Shape(format!(
                "gradient dims {:?} do not match params {:?}",
                grads.dims, self.dims
            )));
        }
        let pairs = [
            (&mut self.w_ih, &grads.w_ih),
            (&mut self.b_h, &grads.b_h),
            (&mut self.w_ho, &grads.w_ho),
            (&mut self.b_o, &grads.b_o),
        ];
        for (p, g) in pairs {
            for (p, &g) in p.iter_mut().zip(g.iter()) {
                *p -= lr * g;
            }
        }
        if !self.is_finite() {
            return Err(Error::Divergence("parameter update produced non-finite weights".into()));
        }
        Ok(())
    }

    /// Parameters in checkpoint order: `w_ih`, `b_h`, `w_ho`, `b_o`.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.w_ih
            .iter()
            .chain(&self.b_h)
            .chain(&self.w_ho)
            .chain(&self.b_o)
            .copied()
    }

    pub fn parameter_count(&self) -> usize {
        self.w_ih.len() + self.b_h.len() + self.w_ho.len() + self.b_o.len()
    }
}

impl Gradients {
    pub fn zeros(dims: Dimensions) -> Self {
        let p = NetworkParams::zeros(dims);
        Gradients {
            dims,
            w_ih: p.w_ih,
            b_h: p.b_h,
            w_ho: p.w_ho,
            b_o: p.b_o,
        }
    }

    pub fn is_finite(&self) -> bool {
        [&self.w_ih, &self.b_h, &self.w_ho, &self.b_o]
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn buffers(&self) -> [&[f64]; 4] {
        [&self.w_ih, &self.b_h, &self.w_ho, &self.b_o]
    }

    pub fn buffers_mut(&mut self) -> [&mut Vec<f64>; 4] {
        [&mut self.w_ih, &mut self.b_h, &mut self.w_ho, &mut self.b_o]
    }
}

/// Activations of one step, fed back as recurrent input to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationState {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// The zeroed-history sentinel: all-zero hidden and output. The output part
/// is deliberately not a distribution.
pub fn zero_state(dims: Dimensions) -> ActivationState {
    ActivationState {
        hidden: vec![0.0; dims.hidden],
        output: vec![0.0; dims.vocab],
    }
}

pub fn init_params(dims: Dimensions, rng_seed: u64) -> NetworkParams {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut params = NetworkParams::zeros(dims);
    for w in params.w_ih.iter_mut().chain(params.w_ho.iter_mut()) {
        *w = rng.random_range(-INIT_RANGE..=INIT_RANGE);
    }
    params
}

fn check_state(dims: Dimensions, char_vec: &[f64], prev: &ActivationState) -> Result<()> {
    if char_vec.len() != dims.vocab
        || prev.hidden.len() != dims.hidden
        || prev.output.len() != dims.vocab
    {
        return Err(Error::Shape(format!(
            "expected character {} / hidden {} / output {}, got {} / {} / {}",
            dims.vocab,
            dims.hidden,
            dims.vocab,
            char_vec.len(),
            prev.hidden.len(),
            prev.output.len()
        )));
    }
    Ok(())
}

/// Concatenates `[character | previous hidden | previous output]`.
pub fn assemble_input(dims: Dimensions, char_vec: &[f64], prev: &ActivationState) -> Result<Vec<f64>> {
    check_state(dims, char_vec, prev)?;
    let mut x = vec![0.0; dims.input_total()];
    write_input(&mut x, char_vec, prev);
    Ok(x)
}

pub(crate) fn write_input(x: &mut [f64], char_vec: &[f64], prev: &ActivationState) {
    let (c, rest) = x.split_at_mut(char_vec.len());
    let (h, o) = rest.split_at_mut(prev.hidden.len());
    c.copy_from_slice(char_vec);
    h.copy_from_slice(&prev.hidden);
    o.copy_from_slice(&prev.output);
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub(crate) fn softmax_in_place(z: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Forward pass from an already assembled input into caller-owned buffers.
pub(crate) fn forward_into(params: &NetworkParams, x: &[f64], hidden: &mut [f64], output: &mut [f64]) {
    forward_group(params, x, hidden, output);
}

/// Forward pass for several inputs stored back to back (`x` holds `g` rows of
/// `input_total`, `hidden` and `output` the matching `g` rows). Rows are
/// processed four at a time so each weight row is loaded once per group; the
/// result for every row is bitwise identical to a lone forward pass.
pub(crate) fn forward_group(params: &NetworkParams, x: &[f64], hidden: &mut [f64], output: &mut [f64]) {
    let (ni, nh, nv) = (params.dims.input_total(), params.dims.hidden, params.dims.vocab);
    let g = x.len() / ni;
    debug_assert_eq!(hidden.len(), g * nh);
    debug_assert_eq!(output.len(), g * nv);
    let mut c0 = 0;
    while c0 + 4 <= g {
        let xs = [0, 1, 2, 3].map(|k| &x[(c0 + k) * ni..(c0 + k + 1) * ni]);
        for j in 0..nh {
            let d = dot4(params.w_ih_row(j), xs);
            for (k, d) in d.iter().enumerate() {
                hidden[(c0 + k) * nh + j] = sigmoid(params.b_h[j] + d);
            }
        }
        c0 += 4;
    }
    for c in c0..g {
        let xc = &x[c * ni..(c + 1) * ni];
        for j in 0..nh {
            hidden[c * nh + j] = sigmoid(params.b_h[j] + dot(params.w_ih_row(j), xc));
        }
    }
    for (h, o) in hidden.chunks_exact(nh).zip(output.chunks_exact_mut(nv)) {
        for (v, o) in o.iter_mut().enumerate() {
            *o = params.b_o[v] + dot(params.w_ho_row(v), h);
        }
        softmax_in_place(o);
    }
}

/// Error signals at the output logits and hidden pre-activations for the
/// step that produced `hidden`/`output`.
pub(crate) fn backward_into(
    params: &NetworkParams,
    hidden: &[f64],
    output: &[f64],
    target: usize,
    delta_o: &mut [f64],
    delta_h: &mut [f64],
) {
    delta_o.copy_from_slice(output);
    delta_o[target] -= 1.0;
    delta_h.fill(0.0);
    for (v, &d) in delta_o.iter().enumerate() {
        for (g, &w) in delta_h.iter_mut().zip(params.w_ho_row(v)) {
            *g += d * w;
        }
    }
    for (g, &h) in delta_h.iter_mut().zip(hidden) {
        *g *= h * (1.0 - h);
    }
}

pub fn forward(params: &NetworkParams, char_vec: &[f64], prev: &ActivationState) -> Result<ActivationState> {
    let x = assemble_input(params.dims, char_vec, prev)?;
    let mut next = zero_state(params.dims);
    forward_into(params, &x, &mut next.hidden, &mut next.output);
    if !next.output.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence("forward pass produced non-finite output".into()));
    }
    Ok(next)
}

/// `−ln(output[target])` with the probability clamped at [`PROB_FLOOR`].
pub fn cross_entropy(output: &[f64], target: usize) -> f64 {
    -output[target].max(PROB_FLOOR).ln()
}

/// Loss and gradient for a single prediction step. Returns the gradients, the
/// loss of the forward output and the new activation state.
pub fn step_gradient(
    params: &NetworkParams,
    char_vec: &[f64],
    prev: &ActivationState,
    target: usize,
) -> Result<(Gradients, f64, ActivationState)> {
    let dims = params.dims;
    if target >= dims.vocab {
        return Err(Error::OutOfRange {
            index: target,
            size: dims.vocab,
        });
    }
    let x = assemble_input(dims, char_vec, prev)?;
    let mut next = zero_state(dims);
    forward_into(params, &x, &mut next.hidden, &mut next.output);
    let loss = cross_entropy(&next.output, target);

    let mut grads = Gradients::zeros(dims);
    let mut delta_h = vec![0.0; dims.hidden];
    backward_into(params, &next.hidden, &next.output, target, &mut grads.b_o, &mut delta_h);
    for v in 0..dims.vocab {
        let d = grads.b_o[v];
        for (g, &h) in grads.w_ho[v * dims.hidden..(v + 1) * dims.hidden]
            .iter_mut()
            .zip(&next.hidden)
        {
            *g = d * h;
        }
    }
    let n = dims.input_total();
    for (j, &d) in delta_h.iter().enumerate() {
        for (g, &xk) in grads.w_ih[j * n..(j + 1) * n].iter_mut().zip(&x) {
            *g = d * xk;
        }
    }
    grads.b_h = delta_h;

    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::Divergence("single-step gradient is non-finite".into()));
    }
    Ok((grads, loss, next))
}

pub fn apply_update(params: &NetworkParams, grads: &Gradients, lr: f64) -> Result<NetworkParams> {
    let mut out = params.clone();
    out.apply_update_in_place(grads, lr)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::one_hot;

    fn small() -> Dimensions {
        Dimensions::new(5, 7)
    }

    #[test]
    fn input_width() {
        assert_eq!(Dimensions::new(42, 256).input_total(), 340);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_params(small(), 0);
        let b = init_params(small(), 0);
        let c = init_params(small(), 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.values().all(|v| (-0.1..=0.1).contains(&v)));
        assert!(a.b_h.iter().chain(&a.b_o).all(|&v| v == 0.0));
    }

    #[test]
    fn assemble_input_layout() {
        let dims = Dimensions::new(42, 256);
        let zero = zero_state(dims);
        let x = assemble_input(dims, one_hot(0, 42).unwrap().as_slice(), &zero).unwrap();
        assert_eq!(x.len(), 340);
        assert_eq!(x[0], 1.0);
        assert_eq!(x.iter().sum::<f64>(), 1.0);

        let x = assemble_input(dims, &[0.0; 42], &zero).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));

        let prev = ActivationState {
            hidden: vec![0.5; 256],
            output: vec![0.0; 42],
        };
        let x = assemble_input(dims, one_hot(3, 42).unwrap().as_slice(), &prev).unwrap();
        assert!(x[42..298].iter().all(|&v| v == 0.5));
        assert!(x[298..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn assemble_input_rejects_bad_shapes() {
        let dims = small();
        let zero = zero_state(dims);
        assert!(matches!(assemble_input(dims, &[1.0; 4], &zero), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let dims = small();
        let p = NetworkParams::zeros(dims);
        let s = forward(&p, one_hot(2, 5).unwrap().as_slice(), &zero_state(dims)).unwrap();
        assert!(s.hidden.iter().all(|&h| h == 0.5));
        assert!(s.output.iter().all(|&o| (o - 0.2).abs() < 1e-15));
    }

    #[test]
    fn forward_is_pure_and_normalised() {
        let dims = small();
        let p = init_params(dims, 3);
        let c = one_hot(1, 5).unwrap();
        let a = forward(&p, c.as_slice(), &zero_state(dims)).unwrap();
        let b = forward(&p, c.as_slice(), &zero_state(dims)).unwrap();
        assert_eq!(a, b);
        assert!((a.output.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let again = forward(&p, c.as_slice(), &a).unwrap();
        assert!(again.output.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[0.0, 1.0, 0.0], 1), 0.0);
        let u = vec![1.0 / 42.0; 42];
        assert!((cross_entropy(&u, 17) - 42f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&[0.5, 0.25, 0.25], 0) - 2f64.ln()).abs() < 1e-15);
        assert!((cross_entropy(&[1.0, 0.0], 1) - (-(1e-15f64).ln())).abs() < 1e-12);
    }

    #[test]
    fn output_bias_gradient_is_softmax_residual() {
        let dims = small();
        let p = init_params(dims, 9);
        let prev = zero_state(dims);
        let c = one_hot(0, 5).unwrap();
        let (g, loss, next) = step_gradient(&p, c.as_slice(), &prev, 3).unwrap();
        for v in 0..5 {
            let expected = next.output[v] - if v == 3 { 1.0 } else { 0.0 };
            assert_eq!(g.b_o[v], expected);
        }
        assert_eq!(loss, cross_entropy(&forward(&p, c.as_slice(), &prev).unwrap().output, 3));
    }

    #[test]
    fn update_rules() {
        let dims = small();
        let p = init_params(dims, 4);
        let g = Gradients {
            dims,
            w_ih: p.w_ih.clone(),
            b_h: p.b_h.clone(),
            w_ho: p.w_ho.clone(),
            b_o: p.b_o.clone(),
        };
        assert_eq!(apply_update(&p, &g, 0.0).unwrap(), p);
        assert!(apply_update(&p, &g, 1.0).unwrap().values().all(|v| v == 0.0));

        let (g, _, _) = step_gradient(&p, one_hot(1, 5).unwrap().as_slice(), &zero_state(dims), 2).unwrap();
        let mut neg = g.clone();
        for b in neg.buffers_mut() {
            b.iter_mut().for_each(|v| *v = -*v);
        }
        let back = apply_update(&apply_update(&p, &g, 0.3).unwrap(), &neg, 0.3).unwrap();
        for (a, b) in back.values().zip(p.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn update_detects_divergence() {
        let dims = small();
        let p = init_params(dims, 4);
        let mut g = Gradients::zeros(dims);
        g.b_o[0] = f64::INFINITY;
        assert!(matches!(apply_update(&p, &g, 1.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn zero_state_shape() {
        let s = zero_state(Dimensions::new(42, 256));
        assert_eq!(s.hidden.len(), 256);
        assert_eq!(s.output.len(), 42);
        assert!(s.hidden.iter().chain(&s.output).all(|&v| v == 0.0));
    }
}
