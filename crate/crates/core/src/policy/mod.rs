//! Dual-encoder policy/value network with masked categorical head.
//!
//! Two MLP encoders cover the two circuit representations (pre-layout over
//! logical qubits, post-routing over edges/physical qubits); the trunk takes
//! the selected encoding concatenated with stage indicator, global features,
//! and pass history, and feeds a masked policy head and a value head.
//!
//! Forward and backward passes are explicit; gradients are exact and
//! finite-difference-checked in the tests. Everything is generic over the
//! [`Scalar`] so oracles can run in f64 while training runs in f32.

pub mod checkpoint;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Dropout rate inside the encoders (train mode only).
pub const DROPOUT_RATE: f64 = 0.10;

/// One dense layer: row-major `w[out][in]` plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams<S> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<S>,
    pub b: Vec<S>,
}

impl<S: Scalar> LayerParams<S> {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            w: vec![S::zero(); in_dim * out_dim],
            b: vec![S::zero(); out_dim],
        }
    }

    /// He-uniform initialization.
    fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / in_dim as f64).sqrt();
        let mut layer = Self::zeros(in_dim, out_dim);
        for w in layer.w.iter_mut() {
            *w = S::from_f64_lossy(rng.gen_range(-bound..bound));
        }
        layer
    }

    fn matvec(&self, x: &[S], out: &mut [S]) {
        debug_assert_eq!(x.len(), self.in_dim);
        debug_assert_eq!(out.len(), self.out_dim);
        for (o, (row, bias)) in out
            .iter_mut()
            .zip(self.w.chunks_exact(self.in_dim).zip(&self.b))
        {
            let mut acc = *bias;
            for (wi, xi) in row.iter().zip(x) {
                acc += *wi * *xi;
            }
            *o = acc;
        }
    }

    pub fn param_count(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// A stack of dense layers with ReLU after every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams<S> {
    pub layers: Vec<LayerParams<S>>,
}

impl<S: Scalar> MlpParams<S> {
    fn init(dims: &[usize], rng: &mut ChaCha8Rng) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| LayerParams::init(w[0], w[1], rng))
            .collect();
        Self { layers }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }
}

/// Static description of every tensor dimension the network depends on.
/// Checkpoints embed a hash of this plus the observation config.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PolicyShape {
    pub pre_input: usize,
    pub post_input: usize,
    /// Hidden widths shared by both encoders; last entry is the embedding.
    pub encoder_widths: Vec<usize>,
    /// Stage one-hot + global + history width.
    pub aux_input: usize,
    pub trunk_widths: Vec<usize>,
    pub num_actions: usize,
}

impl PolicyShape {
    pub fn embedding_dim(&self) -> usize {
        *self.encoder_widths.last().expect("encoder has layers")
    }

    fn encoder_dims(&self, input: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.encoder_widths);
        dims
    }

    fn trunk_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.embedding_dim() + self.aux_input];
        dims.extend(&self.trunk_widths);
        dims
    }

    fn trunk_out(&self) -> usize {
        *self.trunk_widths.last().expect("trunk has layers")
    }

    /// Stable fingerprint of the shape (FNV-1a over the field values).
    pub fn hash(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut mix = |v: u64| {
            h ^= v;
            h = h.wrapping_mul(0x100000001b3);
        };
        mix(self.pre_input as u64);
        mix(self.post_input as u64);
        for &w in &self.encoder_widths {
            mix(w as u64);
        }
        mix(self.aux_input as u64);
        for &w in &self.trunk_widths {
            mix(w as u64);
        }
        mix(self.num_actions as u64);
        h
    }
}

/// Full parameter set: two encoders, shared trunk, policy and value heads.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<S> {
    pub shape: PolicyShape,
    pub encoder_pre: MlpParams<S>,
    pub encoder_post: MlpParams<S>,
    pub trunk: MlpParams<S>,
    pub policy_head: LayerParams<S>,
    pub value_head: LayerParams<S>,
}

/// Seeded He-uniform initialization.
pub fn init_params<S: Scalar>(shape: &PolicyShape, seed: u64) -> PolicyParams<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PolicyParams {
        encoder_pre: MlpParams::init(&shape.encoder_dims(shape.pre_input), &mut rng),
        encoder_post: MlpParams::init(&shape.encoder_dims(shape.post_input), &mut rng),
        trunk: MlpParams::init(&shape.trunk_dims(), &mut rng),
        policy_head: LayerParams::init(shape.trunk_out(), shape.num_actions, &mut rng),
        value_head: LayerParams::init(shape.trunk_out(), 1, &mut rng),
        shape: shape.clone(),
    }
}

impl<S: Scalar> PolicyParams<S> {
    /// Single source of truth for the parameter count.
    pub fn param_count(&self) -> usize {
        self.encoder_pre.param_count()
            + self.encoder_post.param_count()
            + self.trunk.param_count()
            + self.policy_head.param_count()
            + self.value_head.param_count()
    }

    /// Flat views over all tensors, in a fixed order (used by the optimizer
    /// and the checkpoint format).
    pub fn tensors(&self) -> Vec<(&[S], &[usize])> {
        let mut out: Vec<(&[S], &[usize])> = Vec::new();
        fn push<'a, S>(out: &mut Vec<(&'a [S], &'a [usize])>, layer: &'a LayerParams<S>) {
            out.push((&layer.w, std::slice::from_ref(&layer.out_dim)));
            out.push((&layer.b, std::slice::from_ref(&layer.out_dim)));
        }
        for mlp in [&self.encoder_pre, &self.encoder_post, &self.trunk] {
            for layer in &mlp.layers {
                push(&mut out, layer);
            }
        }
        push(&mut out, &self.policy_head);
        push(&mut out, &self.value_head);
        out
    }

    pub fn for_each_tensor_mut(&mut self, mut f: impl FnMut(&mut [S])) {
        for mlp in [
            &mut self.encoder_pre,
            &mut self.encoder_post,
            &mut self.trunk,
        ] {
            for layer in &mut mlp.layers {
                f(&mut layer.w);
                f(&mut layer.b);
            }
        }
        f(&mut self.policy_head.w);
        f(&mut self.policy_head.b);
        f(&mut self.value_head.w);
        f(&mut self.value_head.b);
    }

    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(S) -> T + Copy) -> PolicyParams<T> {
        let map_layer = |l: &LayerParams<S>| LayerParams {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            w: l.w.iter().map(|&v| f(v)).collect(),
            b: l.b.iter().map(|&v| f(v)).collect(),
        };
        let map_mlp = |m: &MlpParams<S>| MlpParams {
            layers: m.layers.iter().map(map_layer).collect(),
        };
        PolicyParams {
            shape: self.shape.clone(),
            encoder_pre: map_mlp(&self.encoder_pre),
            encoder_post: map_mlp(&self.encoder_post),
            trunk: map_mlp(&self.trunk),
            policy_head: map_layer(&self.policy_head),
            value_head: map_layer(&self.value_head),
        }
    }
}

/// Gradient buffer with the same structure as [`PolicyParams`].
pub type Gradients<S> = PolicyParams<S>;

/// Allocates a zeroed gradient buffer matching `params`.
pub fn zero_gradients<S: Scalar>(params: &PolicyParams<S>) -> Gradients<S> {
    let mut g = params.clone();
    g.for_each_tensor_mut(|t| t.fill(S::zero()));
    g
}

/// Adds `other` element-wise into `into`.
pub fn accumulate<S: Scalar>(into: &mut Gradients<S>, other: &Gradients<S>) {
    fn add_layer<S: Scalar>(a: &mut LayerParams<S>, b: &LayerParams<S>) {
        for (x, y) in a.w.iter_mut().zip(&b.w) {
            *x += *y;
        }
        for (x, y) in a.b.iter_mut().zip(&b.b) {
            *x += *y;
        }
    }
    fn add_mlp<S: Scalar>(a: &mut MlpParams<S>, b: &MlpParams<S>) {
        for (x, y) in a.layers.iter_mut().zip(&b.layers) {
            add_layer(x, y);
        }
    }
    add_mlp(&mut into.encoder_pre, &other.encoder_pre);
    add_mlp(&mut into.encoder_post, &other.encoder_post);
    add_mlp(&mut into.trunk, &other.trunk);
    add_layer(&mut into.policy_head, &other.policy_head);
    add_layer(&mut into.value_head, &other.value_head);
}

/// Scales every gradient entry.
pub fn scale<S: Scalar>(g: &mut Gradients<S>, factor: S) {
    g.for_each_tensor_mut(|t| {
        for v in t.iter_mut() {
            *v *= factor;
        }
    });
}

/// Forward mode: training applies seeded inverted dropout in the encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train { dropout_seed: u64 },
    Eval,
}

/// A single network input. The circuit tensor must match the encoder
/// selected by `use_pre_encoder`; `aux` is stage one-hot + global features +
/// history, in that order.
#[derive(Debug, Clone)]
pub struct PolicyInput<S> {
    pub use_pre_encoder: bool,
    pub circuit_tensor: Vec<S>,
    pub aux: Vec<S>,
}

/// Activations recorded by a forward pass for exact backpropagation.
#[derive(Debug, Clone)]
pub struct Tape<S> {
    input: PolicyInput<S>,
    /// Post-ReLU (and post-dropout) activations per encoder layer.
    encoder_acts: Vec<Vec<S>>,
    /// Dropout masks (scale factors) per encoder layer; empty in eval mode.
    dropout_masks: Vec<Vec<S>>,
    trunk_input: Vec<S>,
    trunk_acts: Vec<Vec<S>>,
    pub probs: Vec<S>,
    pub value: S,
    mask: Vec<bool>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PolicyError {
    #[error("input tensor has {got} entries, encoder expects {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("aux vector has {got} entries, trunk expects {want}")]
    AuxMismatch { got: usize, want: usize },
    #[error("action mask has no valid action")]
    EmptyMask,
}

/// Masked softmax: masked entries get exactly zero probability; the rest
/// renormalize. Invariant under constant shifts of the unmasked logits.
pub fn masked_softmax<S: Scalar>(logits: &[S], mask: &[bool]) -> Result<Vec<S>, PolicyError> {
    debug_assert_eq!(logits.len(), mask.len());
    let mut max = None;
    for (l, &ok) in logits.iter().zip(mask) {
        if ok && max.map(|m| *l > m).unwrap_or(true) {
            max = Some(*l);
        }
    }
    let Some(max) = max else {
        return Err(PolicyError::EmptyMask);
    };
    let mut out = vec![S::zero(); logits.len()];
    let mut total = S::zero();
    for (i, (l, &ok)) in logits.iter().zip(mask).enumerate() {
        if ok {
            let e = (*l - max).exp();
            out[i] = e;
            total += e;
        }
    }
    for v in out.iter_mut() {
        *v /= total;
    }
    Ok(out)
}

fn dropout_mask<S: Scalar>(len: usize, seed: u64, layer: usize) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37 * (layer as u64 + 1)));
    let keep = 1.0 - DROPOUT_RATE;
    let scale = S::from_f64_lossy(1.0 / keep);
    (0..len)
        .map(|_| {
            if rng.gen_bool(keep) {
                scale
            } else {
                S::zero()
            }
        })
        .collect()
}

/// Forward pass producing masked action probabilities and a value estimate,
/// with the activation tape needed for backprop.
pub fn forward<S: Scalar>(
    params: &PolicyParams<S>,
    input: &PolicyInput<S>,
    mask: &[bool],
    mode: Mode,
) -> Result<Tape<S>, PolicyError> {
    let shape = &params.shape;
    let want = if input.use_pre_encoder {
        shape.pre_input
    } else {
        shape.post_input
    };
    if input.circuit_tensor.len() != want {
        return Err(PolicyError::ShapeMismatch {
            got: input.circuit_tensor.len(),
            want,
        });
    }
    if input.aux.len() != shape.aux_input {
        return Err(PolicyError::AuxMismatch {
            got: input.aux.len(),
            want: shape.aux_input,
        });
    }
    let encoder = if input.use_pre_encoder {
        &params.encoder_pre
    } else {
        &params.encoder_post
    };

    let mut encoder_acts: Vec<Vec<S>> = Vec::with_capacity(encoder.layers.len());
    let mut dropout_masks: Vec<Vec<S>> = Vec::new();
    let mut x = input.circuit_tensor.clone();
    for (li, layer) in encoder.layers.iter().enumerate() {
        let mut y = vec![S::zero(); layer.out_dim];
        layer.matvec(&x, &mut y);
        for v in y.iter_mut() {
            if *v < S::zero() {
                *v = S::zero();
            }
        }
        if let Mode::Train { dropout_seed } = mode {
            let dm = dropout_mask::<S>(layer.out_dim, dropout_seed, li);
            for (v, m) in y.iter_mut().zip(&dm) {
                *v *= *m;
            }
            dropout_masks.push(dm);
        }
        encoder_acts.push(y.clone());
        x = y;
    }

    let mut trunk_input = x;
    trunk_input.extend_from_slice(&input.aux);
    let mut trunk_acts: Vec<Vec<S>> = Vec::with_capacity(params.trunk.layers.len());
    let mut t = trunk_input.clone();
    for layer in &params.trunk.layers {
        let mut y = vec![S::zero(); layer.out_dim];
        layer.matvec(&t, &mut y);
        for v in y.iter_mut() {
            if *v < S::zero() {
                *v = S::zero();
            }
        }
        trunk_acts.push(y.clone());
        t = y;
    }

    let mut logits = vec![S::zero(); shape.num_actions];
    params.policy_head.matvec(&t, &mut logits);
    let mut value_out = vec![S::zero(); 1];
    params.value_head.matvec(&t, &mut value_out);
    let probs = masked_softmax(&logits, mask)?;

    Ok(Tape {
        input: input.clone(),
        encoder_acts,
        dropout_masks,
        trunk_input,
        trunk_acts,
        probs,
        value: value_out[0],
        mask: mask.to_vec(),
    })
}

/// Loss-side gradient for one sample: the caller supplies the loss gradient
/// with respect to the pre-softmax logits and the value output.
pub struct GradSpec<S> {
    /// Gradient of the scalar loss w.r.t. each unmasked logit (masked
    /// entries must be zero).
    pub d_logits: Vec<S>,
    /// Gradient of the scalar loss w.r.t. the value output.
    pub d_value: S,
}

/// Exact backward pass for one sample; accumulates into `grads`.
pub fn backward<S: Scalar>(
    params: &PolicyParams<S>,
    tape: &Tape<S>,
    spec: &GradSpec<S>,
    grads: &mut Gradients<S>,
) {
    debug_assert_eq!(spec.d_logits.len(), params.shape.num_actions);
    for (i, &g) in spec.d_logits.iter().enumerate() {
        debug_assert!(tape.mask[i] || g == S::zero(), "masked logits carry no gradient");
    }
    let trunk_out = tape
        .trunk_acts
        .last()
        .cloned()
        .unwrap_or_else(|| tape.trunk_input.clone());

    // Heads.
    let mut d_trunk_out = vec![S::zero(); trunk_out.len()];
    backward_layer(
        &params.policy_head,
        &mut grads.policy_head,
        &trunk_out,
        &spec.d_logits,
        &mut d_trunk_out,
    );
    backward_layer(
        &params.value_head,
        &mut grads.value_head,
        &trunk_out,
        std::slice::from_ref(&spec.d_value),
        &mut d_trunk_out,
    );

    // Trunk (ReLU derivative uses the recorded activations).
    let mut d_out = d_trunk_out;
    for li in (0..params.trunk.layers.len()).rev() {
        let acts = &tape.trunk_acts[li];
        for (d, a) in d_out.iter_mut().zip(acts) {
            if *a <= S::zero() {
                *d = S::zero();
            }
        }
        let input = if li == 0 {
            &tape.trunk_input
        } else {
            &tape.trunk_acts[li - 1]
        };
        let mut d_in = vec![S::zero(); params.trunk.layers[li].in_dim];
        backward_layer(
            &params.trunk.layers[li],
            &mut grads.trunk.layers[li],
            input,
            &d_out,
            &mut d_in,
        );
        d_out = d_in;
    }

    // Split trunk-input gradient into encoder part (aux gets no params).
    let emb = params.shape.embedding_dim();
    let mut d_enc = d_out[..emb].to_vec();

    let (encoder, enc_grads) = if tape.input.use_pre_encoder {
        (&params.encoder_pre, &mut grads.encoder_pre)
    } else {
        (&params.encoder_post, &mut grads.encoder_post)
    };
    for li in (0..encoder.layers.len()).rev() {
        if let Some(dm) = tape.dropout_masks.get(li) {
            for (d, m) in d_enc.iter_mut().zip(dm) {
                *d *= *m;
            }
        }
        // ReLU derivative: recorded activation is post-dropout, but dropout
        // scaling never flips sign, so > 0 identifies the active units.
        let acts = &tape.encoder_acts[li];
        for (d, a) in d_enc.iter_mut().zip(acts) {
            if *a <= S::zero() {
                *d = S::zero();
            }
        }
        let input = if li == 0 {
            &tape.input.circuit_tensor
        } else {
            &tape.encoder_acts[li - 1]
        };
        let mut d_in = vec![S::zero(); encoder.layers[li].in_dim];
        backward_layer(
            &encoder.layers[li],
            &mut enc_grads.layers[li],
            input,
            &d_enc,
            &mut d_in,
        );
        d_enc = d_in;
    }
}

/// dW += d_out (outer) input; db += d_out; d_in += W^T d_out.
fn backward_layer<S: Scalar>(
    layer: &LayerParams<S>,
    grad: &mut LayerParams<S>,
    input: &[S],
    d_out: &[S],
    d_in: &mut [S],
) {
    for (o, &g) in d_out.iter().enumerate() {
        if g == S::zero() {
            continue;
        }
        grad.b[o] += g;
        let row = &mut grad.w[o * layer.in_dim..(o + 1) * layer.in_dim];
        for (gw, &x) in row.iter_mut().zip(input) {
            *gw += g * x;
        }
        let wrow = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
        for (di, &w) in d_in.iter_mut().zip(wrow) {
            *di += g * w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_shape() -> PolicyShape {
        PolicyShape {
            pre_input: 8,
            post_input: 6,
            encoder_widths: vec![8, 4],
            aux_input: 5,
            trunk_widths: vec![6],
            num_actions: 4,
        }
    }

    fn tiny_input(pre: bool) -> PolicyInput<f64> {
        PolicyInput {
            use_pre_encoder: pre,
            circuit_tensor: (0..if pre { 8 } else { 6 })
                .map(|i| (i as f64 * 0.37).sin())
                .collect(),
            aux: (0..5).map(|i| (i as f64 * 0.7).cos()).collect(),
        }
    }

    #[test]
    fn masked_probabilities_are_exactly_zero() {
        let params = init_params::<f64>(&tiny_shape(), 3);
        let mask = vec![true, false, true, false];
        let tape = forward(&params, &tiny_input(true), &mask, Mode::Eval).unwrap();
        assert_eq!(tape.probs[1], 0.0);
        assert_eq!(tape.probs[3], 0.0);
        let total: f64 = tape.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_valid_action_gets_probability_one() {
        let params = init_params::<f64>(&tiny_shape(), 3);
        let mask = vec![false, false, true, false];
        let tape = forward(&params, &tiny_input(false), &mask, Mode::Eval).unwrap();
        assert_eq!(tape.probs[2], 1.0);
    }

    #[test]
    fn masked_softmax_shift_invariance() {
        let logits = vec![0.3f64, -1.0, 2.0, 0.0];
        let mask = vec![true, true, false, true];
        let base = masked_softmax(&logits, &mask).unwrap();
        let shifted: Vec<f64> = logits.iter().map(|l| l + 7.5).collect();
        let moved = masked_softmax(&shifted, &mask).unwrap();
        for (a, b) in base.iter().zip(&moved) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn eval_forward_is_deterministic() {
        let params = init_params::<f64>(&tiny_shape(), 9);
        let mask = vec![true; 4];
        let a = forward(&params, &tiny_input(true), &mask, Mode::Eval).unwrap();
        let b = forward(&params, &tiny_input(true), &mask, Mode::Eval).unwrap();
        assert_eq!(a.probs, b.probs);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn argmax_is_always_unmasked() {
        for seed in 0..20 {
            let params = init_params::<f64>(&tiny_shape(), seed);
            let mask = vec![seed % 2 == 0, true, seed % 3 == 0, false];
            let tape = forward(&params, &tiny_input(seed % 2 == 0), &mask, Mode::Eval).unwrap();
            let argmax = tape
                .probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert!(mask[argmax]);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let params = init_params::<f64>(&tiny_shape(), 0);
        let mut input = tiny_input(true);
        input.circuit_tensor.pop();
        let err = forward(&params, &input, &[true; 4], Mode::Eval).unwrap_err();
        assert!(matches!(err, PolicyError::ShapeMismatch { .. }));
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = init_params::<f32>(&tiny_shape(), 42);
        let b = init_params::<f32>(&tiny_shape(), 42);
        assert_eq!(a, b);
        let c = init_params::<f32>(&tiny_shape(), 43);
        assert_ne!(a, c);
    }

    #[test]
    fn param_count_matches_tensor_sizes() {
        let p = init_params::<f32>(&tiny_shape(), 1);
        let from_tensors: usize = p.tensors().iter().map(|(t, _)| t.len()).sum();
        assert_eq!(p.param_count(), from_tensors);
    }
}
