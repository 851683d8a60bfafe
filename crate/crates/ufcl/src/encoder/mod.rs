//! Embedding encoder: optional GeM pooling followed by a small linear stack
//! and L2 normalization, with hand-derived gradients and an Adam optimizer.
//!
//! The encoder maps a raw example (a flat vector, or a `W x H x K` activation
//! map that is first pooled per channel) to a unit-norm embedding. All math is
//! `f64` and single-threaded per example, so batch encoding can fan out across
//! threads without changing any bit of the output.

mod adam;
mod gem;

pub use adam::{adam_update_block, AdamConfig, MomentBlock};
pub use gem::{gem_pool, gem_pool_backward, FeatureTensor, GemGrads};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Initial value for learnable pooling exponents.
pub const GEM_EXPONENT_INIT: f64 = 3.0;

/// Shape of the raw input accepted by the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputShape {
    /// A flat feature vector of length `dim`.
    Vector { dim: usize },
    /// An activation map pooled per channel before the linear stack.
    Map { width: usize, height: usize, channels: usize },
}

impl InputShape {
    /// Length of the flattened raw input.
    pub fn raw_dim(&self) -> usize {
        match *self {
            InputShape::Vector { dim } => dim,
            InputShape::Map { width, height, channels } => width * height * channels,
        }
    }

    /// Dimension entering the linear stack (channel count after pooling).
    pub fn feature_dim(&self) -> usize {
        match *self {
            InputShape::Vector { dim } => dim,
            InputShape::Map { channels, .. } => channels,
        }
    }
}

/// Architecture of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderSpec {
    pub input: InputShape,
    /// Optional tanh hidden layer width.
    pub hidden_dim: Option<usize>,
    pub out_dim: usize,
}

impl EncoderSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input.raw_dim() == 0 || self.out_dim == 0 || self.hidden_dim == Some(0) {
            return Err(Error::invalid("encoder dimensions must be positive"));
        }
        Ok(())
    }
}

/// Learnable parameters: pooling exponents (map input only) and one or two
/// linear maps. Weights are `out x in` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    spec: EncoderSpec,
    pub gem_exponents: Vec<f64>,
    pub w_hidden: Option<Matrix>,
    pub w_out: Matrix,
}

impl EncoderParams {
    /// Gaussian init scaled by `1/sqrt(fan_in)`; pooling exponents start at
    /// [`GEM_EXPONENT_INIT`].
    pub fn init<R: Rng>(spec: EncoderSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let feature_dim = spec.input.feature_dim();
        let gem_exponents = match spec.input {
            InputShape::Map { channels, .. } => vec![GEM_EXPONENT_INIT; channels],
            InputShape::Vector { .. } => Vec::new(),
        };
        let gaussian = |rows: usize, cols: usize, rng: &mut R| {
            let scale = 1.0 / (cols as f64).sqrt();
            let data =
                (0..rows * cols).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            Matrix::from_vec(rows, cols, data)
        };
        let (w_hidden, out_in) = match spec.hidden_dim {
            Some(h) => (Some(gaussian(h, feature_dim, rng)?), h),
            None => (None, feature_dim),
        };
        let w_out = gaussian(spec.out_dim, out_in, rng)?;
        Ok(EncoderParams { spec, gem_exponents, w_hidden, w_out })
    }

    /// Builds params from explicit weights (no hidden layer). Useful for tests
    /// and for loading checkpoints.
    pub fn from_parts(
        spec: EncoderSpec,
        gem_exponents: Vec<f64>,
        w_hidden: Option<Matrix>,
        w_out: Matrix,
    ) -> Result<Self> {
        spec.validate()?;
        let params = EncoderParams { spec, gem_exponents, w_hidden, w_out };
        params.check_shapes()?;
        Ok(params)
    }

    fn check_shapes(&self) -> Result<()> {
        let feature_dim = self.spec.input.feature_dim();
        let expected_gem = match self.spec.input {
            InputShape::Map { channels, .. } => channels,
            InputShape::Vector { .. } => 0,
        };
        if self.gem_exponents.len() != expected_gem {
            return Err(Error::shape(format!(
                "expected {} pooling exponents, got {}",
                expected_gem,
                self.gem_exponents.len()
            )));
        }
        let out_in = match (self.spec.hidden_dim, &self.w_hidden) {
            (Some(h), Some(w)) => {
                if w.rows() != h || w.cols() != feature_dim {
                    return Err(Error::shape("hidden weight shape disagrees with spec"));
                }
                h
            }
            (None, None) => feature_dim,
            _ => return Err(Error::shape("hidden weights must match spec.hidden_dim")),
        };
        if self.w_out.rows() != self.spec.out_dim || self.w_out.cols() != out_in {
            return Err(Error::shape("output weight shape disagrees with spec"));
        }
        Ok(())
    }

    pub fn spec(&self) -> EncoderSpec {
        self.spec
    }

    pub fn is_finite(&self) -> bool {
        self.gem_exponents.iter().all(|v| v.is_finite())
            && self.w_hidden.as_ref().map_or(true, Matrix::is_finite)
            && self.w_out.is_finite()
    }
}

/// Intermediate values cached by [`encoder_forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// Raw input as given.
    pub raw: Vec<f64>,
    /// Input to the linear stack (pooled channels, or the raw vector).
    pub features: Vec<f64>,
    /// tanh activations of the hidden layer, if any.
    pub hidden: Option<Vec<f64>>,
    /// Output of the linear stack before normalization.
    pub pre_norm: Vec<f64>,
    /// Final unit-norm embedding.
    pub embedding: Vec<f64>,
}

/// Parameter gradients mirroring [`EncoderParams`].
#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub gem_exponents: Vec<f64>,
    pub w_hidden: Option<Matrix>,
    pub w_out: Matrix,
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        EncoderGrads {
            gem_exponents: vec![0.0; params.gem_exponents.len()],
            w_hidden: params
                .w_hidden
                .as_ref()
                .map(|w| Matrix::zeros(w.rows(), w.cols())),
            w_out: Matrix::zeros(params.w_out.rows(), params.w_out.cols()),
        }
    }

    pub fn add_assign(&mut self, other: &EncoderGrads) {
        for (a, b) in self.gem_exponents.iter_mut().zip(&other.gem_exponents) {
            *a += b;
        }
        if let (Some(a), Some(b)) = (self.w_hidden.as_mut(), other.w_hidden.as_ref()) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        for (x, y) in self.w_out.data_mut().iter_mut().zip(other.w_out.data()) {
            *x += y;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.gem_exponents.iter_mut() {
            *v *= s;
        }
        if let Some(w) = self.w_hidden.as_mut() {
            for v in w.data_mut() {
                *v *= s;
            }
        }
        for v in self.w_out.data_mut() {
            *v *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.gem_exponents.iter().all(|v| v.is_finite())
            && self.w_hidden.as_ref().map_or(true, Matrix::is_finite)
            && self.w_out.is_finite()
    }
}

/// Normalizes `v` to unit Euclidean length. A zero vector cannot be projected
/// onto the sphere and is reported as a degenerate input.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = dot(v, v).sqrt();
    if !n.is_finite() {
        return Err(Error::numeric("cannot normalize a non-finite vector"));
    }
    if n < 1e-300 {
        return Err(Error::degenerate("cannot normalize a zero vector"));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Backprop through [`l2_normalize`]: with `q = v / |v|`,
/// `dL/dv = (g - (g . q) q) / |v|`.
pub fn l2_normalize_backward(pre_norm: &[f64], normalized: &[f64], upstream: &[f64]) -> Vec<f64> {
    let n = dot(pre_norm, pre_norm).sqrt();
    let gq = dot(upstream, normalized);
    upstream.iter().zip(normalized).map(|(g, q)| (g - gq * q) / n).collect()
}

fn matvec(w: &Matrix, x: &[f64]) -> Vec<f64> {
    (0..w.rows()).map(|r| dot(w.row(r), x)).collect()
}

fn matvec_transpose(w: &Matrix, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for r in 0..w.rows() {
        let row = w.row(r);
        let gr = g[r];
        for (o, wv) in out.iter_mut().zip(row) {
            *o += gr * wv;
        }
    }
    out
}

/// Runs the encoder on one raw example, returning the unit embedding and the
/// trace needed for [`encoder_backward`].
pub fn encoder_forward(params: &EncoderParams, raw: &[f64]) -> Result<(Vec<f64>, ForwardTrace)> {
    let spec = params.spec;
    if raw.len() != spec.input.raw_dim() {
        return Err(Error::shape(format!(
            "encoder expects raw input of length {}, got {}",
            spec.input.raw_dim(),
            raw.len()
        )));
    }
    let features = match spec.input {
        InputShape::Vector { .. } => raw.to_vec(),
        InputShape::Map { width, height, channels } => {
            let tensor = FeatureTensor::new(width, height, channels, raw.to_vec())?;
            gem_pool(&tensor, &params.gem_exponents)?
        }
    };
    let (hidden, stack_in) = match &params.w_hidden {
        Some(w) => {
            let mut h = matvec(w, &features);
            for v in h.iter_mut() {
                *v = v.tanh();
            }
            (Some(h.clone()), h)
        }
        None => (None, features.clone()),
    };
    let pre_norm = matvec(&params.w_out, &stack_in);
    let embedding = l2_normalize(&pre_norm)?;
    let trace =
        ForwardTrace { raw: raw.to_vec(), features, hidden, pre_norm, embedding: embedding.clone() };
    Ok((embedding, trace))
}

/// Embedding only, when no gradients are needed.
pub fn encode(params: &EncoderParams, raw: &[f64]) -> Result<Vec<f64>> {
    encoder_forward(params, raw).map(|(e, _)| e)
}

/// Encodes every row of `inputs` into a unit embedding.
///
/// Rows are independent, so the work fans out across the current rayon pool;
/// each row lands in its own output slice and the result is identical for any
/// thread count.
pub fn encode_all(params: &EncoderParams, inputs: &Matrix) -> Result<Matrix> {
    let mut out = Matrix::zeros(inputs.rows(), params.spec.out_dim);
    let rows: Vec<&mut [f64]> = out.par_rows_mut();
    let results: Result<Vec<()>> = rows
        .into_par_iter()
        .enumerate()
        .map(|(i, dst)| {
            let emb = encode(params, inputs.row(i))?;
            dst.copy_from_slice(&emb);
            Ok(())
        })
        .collect();
    results?;
    Ok(out)
}

/// Backpropagates `upstream = dL/d embedding` through the encoder, returning
/// gradients for every learnable parameter.
pub fn encoder_backward(
    params: &EncoderParams,
    trace: &ForwardTrace,
    upstream: &[f64],
) -> Result<EncoderGrads> {
    let spec = params.spec;
    if upstream.len() != spec.out_dim {
        return Err(Error::shape(format!(
            "upstream gradient length {} does not match out_dim {}",
            upstream.len(),
            spec.out_dim
        )));
    }
    let d_pre = l2_normalize_backward(&trace.pre_norm, &trace.embedding, upstream);

    let stack_in: &[f64] = trace.hidden.as_deref().unwrap_or(&trace.features);
    let mut w_out_grad = Matrix::zeros(params.w_out.rows(), params.w_out.cols());
    for r in 0..w_out_grad.rows() {
        let gr = d_pre[r];
        for (slot, x) in w_out_grad.row_mut(r).iter_mut().zip(stack_in) {
            *slot = gr * x;
        }
    }

    let mut d_features = matvec_transpose(&params.w_out, &d_pre);
    let w_hidden_grad = match (&params.w_hidden, &trace.hidden) {
        (Some(w), Some(h)) => {
            // d_features currently holds dL/dh; apply tanh' = 1 - h^2.
            let d_h_pre: Vec<f64> =
                d_features.iter().zip(h).map(|(g, hv)| g * (1.0 - hv * hv)).collect();
            let mut grad = Matrix::zeros(w.rows(), w.cols());
            for r in 0..grad.rows() {
                let gr = d_h_pre[r];
                for (slot, x) in grad.row_mut(r).iter_mut().zip(&trace.features) {
                    *slot = gr * x;
                }
            }
            d_features = matvec_transpose(w, &d_h_pre);
            Some(grad)
        }
        (None, None) => None,
        _ => return Err(Error::shape("trace does not match encoder architecture")),
    };

    let gem_exponents = match spec.input {
        InputShape::Vector { .. } => Vec::new(),
        InputShape::Map { width, height, channels } => {
            let tensor = FeatureTensor::new(width, height, channels, trace.raw.clone())?;
            gem_pool_backward(&tensor, &params.gem_exponents, &d_features)?.exponents
        }
    };

    Ok(EncoderGrads { gem_exponents, w_hidden: w_hidden_grad, w_out: w_out_grad })
}

/// Optimizer state: one moment block per parameter block plus a shared step
/// counter for bias correction.
#[derive(Debug, Clone)]
pub struct AdamState {
    step: u64,
    gem: MomentBlock,
    w_hidden: Option<MomentBlock>,
    w_out: MomentBlock,
}

impl AdamState {
    pub fn new(params: &EncoderParams) -> Self {
        AdamState {
            step: 0,
            gem: MomentBlock::new(params.gem_exponents.len()),
            w_hidden: params.w_hidden.as_ref().map(|w| MomentBlock::new(w.data().len())),
            w_out: MomentBlock::new(params.w_out.data().len()),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Rebuilds state from checkpointed moment vectors.
    pub fn from_parts(
        step: u64,
        gem: MomentBlock,
        w_hidden: Option<MomentBlock>,
        w_out: MomentBlock,
    ) -> Self {
        AdamState { step, gem, w_hidden, w_out }
    }

    pub fn parts(&self) -> (u64, &MomentBlock, Option<&MomentBlock>, &MomentBlock) {
        (self.step, &self.gem, self.w_hidden.as_ref(), &self.w_out)
    }
}

/// Applies one Adam step to all encoder parameters.
///
/// Weight decay is decoupled and applies to the linear weights only, never to
/// the pooling exponents. A non-finite gradient anywhere aborts the step with
/// a numeric error and leaves parameters and optimizer state untouched.
/// Exponents are projected back to their valid domain `p >= 1` afterwards.
pub fn adam_step(
    params: &mut EncoderParams,
    grads: &EncoderGrads,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::numeric("non-finite gradient; parameters left unchanged"));
    }
    if grads.gem_exponents.len() != params.gem_exponents.len()
        || grads.w_out.rows() != params.w_out.rows()
        || grads.w_out.cols() != params.w_out.cols()
        || grads.w_hidden.is_some() != params.w_hidden.is_some()
    {
        return Err(Error::shape("gradient shapes do not match parameters"));
    }
    state.step += 1;
    let t = state.step;
    adam_update_block(
        params.w_out.data_mut(),
        grads.w_out.data(),
        &mut state.w_out,
        cfg,
        t,
        true,
    )?;
    if let (Some(w), Some(g), Some(m)) =
        (params.w_hidden.as_mut(), grads.w_hidden.as_ref(), state.w_hidden.as_mut())
    {
        adam_update_block(w.data_mut(), g.data(), m, cfg, t, true)?;
    }
    if !params.gem_exponents.is_empty() {
        adam_update_block(
            &mut params.gem_exponents,
            &grads.gem_exponents,
            &mut state.gem,
            cfg,
            t,
            false,
        )?;
        for p in params.gem_exponents.iter_mut() {
            *p = p.max(1.0);
        }
    }
    Ok(())
}
