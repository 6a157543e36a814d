//! Layers with hand-written backward passes, the Graph-MLP model and the GCN baseline.
//!
//! Graph-MLP:
//!
//! ```text
//! X1 = Dropout(LayerNorm(GELU(X·W0 + b0)))
//! Z  = X1·W1 + b1          (contrastive head)
//! Y  = Z·W2 + b2           (classification head)
//! ```
//!
//! GCN (two propagation steps, same activation and dropout):
//!
//! ```text
//! H = Dropout(GELU(Â·(X·W1) + b1))
//! Y = Â·(H·W2) + b2
//! ```
//!
//! Weights are stored `in × out`, so a layer computes `x · W`.

use crate::error::{Error, Result};
use crate::graph::SparseMatrix;
use crate::rng::Rng;
use crate::tensor::{matmul, matmul_csr, matmul_nt, matmul_tn, CsrRows, Tensor2};

pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// What an optimizer needs to know about a parameter tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Weight,
    Bias,
    Norm,
}

/// Mutable view of one parameter tensor and its gradient.
pub struct ParamMut<'a> {
    pub name: &'static str,
    pub kind: ParamKind,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
}

/// Read-only view used by checkpointing.
pub struct ParamView<'a> {
    pub name: &'static str,
    pub kind: ParamKind,
    pub shape: (usize, usize),
    pub value: &'a [f64],
}

// ---------------------------------------------------------------------------
// GELU

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal CDF via `erf`.
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + libm::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

#[inline]
fn gelu_scalar(x: f64) -> f64 {
    x * normal_cdf(x)
}

#[inline]
fn gelu_grad_scalar(x: f64) -> f64 {
    normal_cdf(x) + x * FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Exact GELU, `x · Φ(x)`.
pub fn gelu(x: &Tensor2) -> Tensor2 {
    x.map(gelu_scalar)
}

/// Gradient of `gelu` at `x`, chained with `grad_out`.
pub fn gelu_backward(x: &Tensor2, grad_out: &Tensor2) -> Result<Tensor2> {
    if x.shape() != grad_out.shape() {
        return Err(Error::shape(
            "gelu_backward",
            format!("{:?} vs {:?}", x.shape(), grad_out.shape()),
        ));
    }
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| g * gelu_grad_scalar(v))
        .collect();
    Tensor2::from_vec(x.rows(), x.cols(), data)
}

// ---------------------------------------------------------------------------
// Linear

#[derive(Debug, Clone, PartialEq)]
pub struct LinearLayer {
    pub weight: Tensor2,
    pub bias: Vec<f64>,
    pub grad_weight: Tensor2,
    pub grad_bias: Vec<f64>,
    use_bias: bool,
    input: Option<Tensor2>,
}

impl LinearLayer {
    pub fn new(fan_in: usize, fan_out: usize, use_bias: bool) -> Self {
        LinearLayer {
            weight: Tensor2::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
            grad_weight: Tensor2::zeros(fan_in, fan_out),
            grad_bias: vec![0.0; fan_out],
            use_bias,
            input: None,
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    pub fn uses_bias(&self) -> bool {
        self.use_bias
    }

    /// Glorot-uniform weights, zero bias.
    pub fn init_glorot(&mut self, rng: &mut Rng) {
        let limit = glorot_limit(self.fan_in(), self.fan_out());
        for w in self.weight.data_mut() {
            *w = rng.uniform_range(-limit, limit);
        }
        self.bias.iter_mut().for_each(|b| *b = 0.0);
    }

    /// `x · W + b` without caching.
    pub fn apply(&self, x: &Tensor2) -> Result<Tensor2> {
        let mut y = matmul(x, &self.weight)?;
        if self.use_bias {
            y.add_row_vector(&self.bias);
        }
        Ok(y)
    }

    /// `x · W + b` for row-compressed input.
    pub fn apply_csr(&self, x: &CsrRows) -> Result<Tensor2> {
        let mut y = matmul_csr(x, &self.weight)?;
        if self.use_bias {
            y.add_row_vector(&self.bias);
        }
        Ok(y)
    }

    /// `x · W + b`, caching `x` for `backward`.
    pub fn forward(&mut self, x: &Tensor2) -> Result<Tensor2> {
        let y = self.apply(x)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    /// Stores parameter gradients; returns the input gradient when asked.
    pub fn backward(
        &mut self,
        grad_out: &Tensor2,
        want_input_grad: bool,
    ) -> Result<Option<Tensor2>> {
        let x = self
            .input
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("LinearLayer::backward before forward".into()))?;
        self.grad_weight = matmul_tn(x, grad_out)?;
        self.grad_bias = if self.use_bias {
            grad_out.column_sums()
        } else {
            vec![0.0; self.fan_out()]
        };
        if want_input_grad {
            Ok(Some(matmul_nt(grad_out, &self.weight)?))
        } else {
            Ok(None)
        }
    }

    fn clear_cache(&mut self) {
        self.input = None;
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

// ---------------------------------------------------------------------------
// LayerNorm

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormLayer {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub grad_gamma: Vec<f64>,
    pub grad_beta: Vec<f64>,
    pub eps: f64,
    cache: Option<LayerNormCache>,
}

/// Per-row statistics saved by the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormCache {
    pub x_hat: Tensor2,
    pub inv_std: Vec<f64>,
}

impl LayerNormLayer {
    pub fn new(dim: usize) -> Self {
        LayerNormLayer {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            grad_gamma: vec![0.0; dim],
            grad_beta: vec![0.0; dim],
            eps: LAYER_NORM_EPS,
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn reset(&mut self) {
        self.gamma.iter_mut().for_each(|g| *g = 1.0);
        self.beta.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn apply(&self, x: &Tensor2) -> Result<Tensor2> {
        Ok(layernorm_forward(x, &self.gamma, &self.beta, self.eps)?.0)
    }

    pub fn forward(&mut self, x: &Tensor2) -> Result<Tensor2> {
        let (y, cache) = layernorm_forward(x, &self.gamma, &self.beta, self.eps)?;
        self.cache = Some(cache);
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor2) -> Result<Tensor2> {
        let cache = self.cache.as_ref().ok_or_else(|| {
            Error::InvalidArgument("LayerNormLayer::backward before forward".into())
        })?;
        let (dx, dgamma, dbeta) = layernorm_backward(cache, &self.gamma, grad_out)?;
        self.grad_gamma = dgamma;
        self.grad_beta = dbeta;
        Ok(dx)
    }
}

/// Row-wise standardization followed by the affine map `gamma ⊙ x̂ + beta`.
/// Variance is the biased (population) estimate.
pub fn layernorm_forward(
    x: &Tensor2,
    gamma: &[f64],
    beta: &[f64],
    eps: f64,
) -> Result<(Tensor2, LayerNormCache)> {
    let h = x.cols();
    if gamma.len() != h || beta.len() != h {
        return Err(Error::shape(
            "layernorm_forward",
            format!("{} columns, norm dim {}", h, gamma.len()),
        ));
    }
    let mut y = Tensor2::zeros(x.rows(), h);
    let mut x_hat = Tensor2::zeros(x.rows(), h);
    let mut inv_std = Vec::with_capacity(x.rows());
    for r in 0..x.rows() {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / h as f64;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / h as f64;
        let istd = 1.0 / (var + eps).sqrt();
        inv_std.push(istd);
        let xh = x_hat.row_mut(r);
        for (o, &v) in xh.iter_mut().zip(row) {
            *o = (v - mean) * istd;
        }
        let yr = y.row_mut(r);
        for c in 0..h {
            yr[c] = gamma[c] * x_hat.get(r, c) + beta[c];
        }
    }
    Ok((y, LayerNormCache { x_hat, inv_std }))
}

/// Returns `(dx, dgamma, dbeta)`.
pub fn layernorm_backward(
    cache: &LayerNormCache,
    gamma: &[f64],
    grad_out: &Tensor2,
) -> Result<(Tensor2, Vec<f64>, Vec<f64>)> {
    if cache.x_hat.shape() != grad_out.shape() {
        return Err(Error::shape(
            "layernorm_backward",
            format!("{:?} vs {:?}", cache.x_hat.shape(), grad_out.shape()),
        ));
    }
    let h = grad_out.cols();
    let mut dgamma = vec![0.0; h];
    let mut dbeta = vec![0.0; h];
    let mut dx = Tensor2::zeros(grad_out.rows(), h);
    let mut g_hat = vec![0.0; h];
    for r in 0..grad_out.rows() {
        let g = grad_out.row(r);
        let xh = cache.x_hat.row(r);
        for c in 0..h {
            dgamma[c] += g[c] * xh[c];
            dbeta[c] += g[c];
            g_hat[c] = g[c] * gamma[c];
        }
        let mean_g = g_hat.iter().sum::<f64>() / h as f64;
        let mean_gx = g_hat.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / h as f64;
        let istd = cache.inv_std[r];
        let out = dx.row_mut(r);
        for c in 0..h {
            out[c] = istd * (g_hat[c] - mean_g - xh[c] * mean_gx);
        }
    }
    Ok((dx, dgamma, dbeta))
}

// ---------------------------------------------------------------------------
// Dropout

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at train time,
/// so evaluation is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutLayer {
    rate: f64,
    mask: Option<Vec<f64>>,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate {rate} outside [0, 1)"
            )));
        }
        Ok(DropoutLayer { rate, mask: None })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn forward(&mut self, x: &Tensor2, mode: Mode, rng: &mut Rng) -> Tensor2 {
        if mode == Mode::Eval || self.rate == 0.0 {
            self.mask = None;
            return x.clone();
        }
        let keep = 1.0 - self.rate;
        let scale = 1.0 / keep;
        let mask: Vec<f64> = (0..x.len())
            .map(|_| if rng.uniform() < keep { scale } else { 0.0 })
            .collect();
        let data = x.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.mask = Some(mask);
        Tensor2::from_vec(x.rows(), x.cols(), data).expect("same shape")
    }

    pub fn backward(&self, grad_out: &Tensor2) -> Tensor2 {
        match &self.mask {
            None => grad_out.clone(),
            Some(mask) => {
                let data = grad_out
                    .data()
                    .iter()
                    .zip(mask)
                    .map(|(g, m)| g * m)
                    .collect();
                Tensor2::from_vec(grad_out.rows(), grad_out.cols(), data).expect("same shape")
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Graph-MLP

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModelDims {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMlpModel {
    pub input: LinearLayer,
    pub norm: LayerNormLayer,
    pub dropout: DropoutLayer,
    pub head_z: LinearLayer,
    pub head_y: LinearLayer,
    mode: Mode,
    pre_activation: Option<Tensor2>,
}

impl GraphMlpModel {
    pub fn new(dims: ModelDims, dropout: f64, use_bias: bool) -> Result<Self> {
        Ok(GraphMlpModel {
            input: LinearLayer::new(dims.input, dims.hidden, use_bias),
            norm: LayerNormLayer::new(dims.hidden),
            dropout: DropoutLayer::new(dropout)?,
            head_z: LinearLayer::new(dims.hidden, dims.hidden, use_bias),
            head_y: LinearLayer::new(dims.hidden, dims.classes, use_bias),
            mode: Mode::Train,
            pre_activation: None,
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            input: self.input.fan_in(),
            hidden: self.input.fan_out(),
            classes: self.head_y.fan_out(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn init_params(&mut self, rng: &mut Rng) {
        self.input.init_glorot(rng);
        self.norm.reset();
        self.head_z.init_glorot(rng);
        self.head_y.init_glorot(rng);
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input.fan_in() {
            return Err(Error::shape(
                "GraphMlpModel::forward",
                format!(
                    "features have {} columns, model expects {}",
                    cols,
                    self.input.fan_in()
                ),
            ));
        }
        Ok(())
    }

    /// Returns `(z, y_logits)` and caches activations. Dropout draws from `rng`
    /// only in train mode. Takes no adjacency: the model never sees the graph.
    pub fn forward(&mut self, x: &Tensor2, rng: &mut Rng) -> Result<(Tensor2, Tensor2)> {
        self.check_input(x.cols())?;
        let pre = self.input.forward(x)?;
        let act = gelu(&pre);
        self.pre_activation = Some(pre);
        let normed = self.norm.forward(&act)?;
        let dropped = self.dropout.forward(&normed, self.mode, rng);
        let z = self.head_z.forward(&dropped)?;
        let y = self.head_y.forward(&z)?;
        Ok((z, y))
    }

    /// Eval-mode forward on a shared reference; no caches touched.
    pub fn predict(&self, x: &Tensor2) -> Result<(Tensor2, Tensor2)> {
        self.check_input(x.cols())?;
        self.predict_tail(&self.input.apply(x)?)
    }

    /// [`predict`](Self::predict) on row-compressed features; same result bit for bit.
    pub fn predict_csr(&self, x: &CsrRows) -> Result<(Tensor2, Tensor2)> {
        self.check_input(x.cols())?;
        self.predict_tail(&self.input.apply_csr(x)?)
    }

    fn predict_tail(&self, pre: &Tensor2) -> Result<(Tensor2, Tensor2)> {
        let act = gelu(pre);
        let normed = self.norm.apply(&act)?;
        let z = self.head_z.apply(&normed)?;
        let y = self.head_y.apply(&z)?;
        Ok((z, y))
    }

    /// Backpropagates both heads. The classification gradient flows through
    /// `head_y` into `z`, where it joins the contrastive gradient.
    pub fn backward(&mut self, grad_z: &Tensor2, grad_y: &Tensor2) -> Result<()> {
        let mut gz = self.head_y.backward(grad_y, true)?.expect("requested");
        gz.add_assign(grad_z)?;
        let g_dropped = self.head_z.backward(&gz, true)?.expect("requested");
        let g_normed = self.dropout.backward(&g_dropped);
        let g_act = self.norm.backward(&g_normed)?;
        let pre = self.pre_activation.as_ref().ok_or_else(|| {
            Error::InvalidArgument("GraphMlpModel::backward before forward".into())
        })?;
        let g_pre = gelu_backward(pre, &g_act)?;
        self.input.backward(&g_pre, false)?;
        Ok(())
    }

    pub fn clear_caches(&mut self) {
        self.input.clear_cache();
        self.head_z.clear_cache();
        self.head_y.clear_cache();
        self.norm.cache = None;
        self.dropout.mask = None;
        self.pre_activation = None;
    }

    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        vec![
            ParamMut {
                name: "input.weight",
                kind: ParamKind::Weight,
                value: self.input.weight.data_mut(),
                grad: self.input.grad_weight.data(),
            },
            ParamMut {
                name: "input.bias",
                kind: ParamKind::Bias,
                value: &mut self.input.bias,
                grad: &self.input.grad_bias,
            },
            ParamMut {
                name: "norm.gamma",
                kind: ParamKind::Norm,
                value: &mut self.norm.gamma,
                grad: &self.norm.grad_gamma,
            },
            ParamMut {
                name: "norm.beta",
                kind: ParamKind::Norm,
                value: &mut self.norm.beta,
                grad: &self.norm.grad_beta,
            },
            ParamMut {
                name: "head_z.weight",
                kind: ParamKind::Weight,
                value: self.head_z.weight.data_mut(),
                grad: self.head_z.grad_weight.data(),
            },
            ParamMut {
                name: "head_z.bias",
                kind: ParamKind::Bias,
                value: &mut self.head_z.bias,
                grad: &self.head_z.grad_bias,
            },
            ParamMut {
                name: "head_y.weight",
                kind: ParamKind::Weight,
                value: self.head_y.weight.data_mut(),
                grad: self.head_y.grad_weight.data(),
            },
            ParamMut {
                name: "head_y.bias",
                kind: ParamKind::Bias,
                value: &mut self.head_y.bias,
                grad: &self.head_y.grad_bias,
            },
        ]
    }

    pub fn params(&self) -> Vec<ParamView<'_>> {
        let h = self.input.fan_out();
        vec![
            ParamView {
                name: "input.weight",
                kind: ParamKind::Weight,
                shape: self.input.weight.shape(),
                value: self.input.weight.data(),
            },
            ParamView {
                name: "input.bias",
                kind: ParamKind::Bias,
                shape: (1, h),
                value: &self.input.bias,
            },
            ParamView {
                name: "norm.gamma",
                kind: ParamKind::Norm,
                shape: (1, h),
                value: &self.norm.gamma,
            },
            ParamView {
                name: "norm.beta",
                kind: ParamKind::Norm,
                shape: (1, h),
                value: &self.norm.beta,
            },
            ParamView {
                name: "head_z.weight",
                kind: ParamKind::Weight,
                shape: self.head_z.weight.shape(),
                value: self.head_z.weight.data(),
            },
            ParamView {
                name: "head_z.bias",
                kind: ParamKind::Bias,
                shape: (1, h),
                value: &self.head_z.bias,
            },
            ParamView {
                name: "head_y.weight",
                kind: ParamKind::Weight,
                shape: self.head_y.weight.shape(),
                value: self.head_y.weight.data(),
            },
            ParamView {
                name: "head_y.bias",
                kind: ParamKind::Bias,
                shape: (1, self.head_y.fan_out()),
                value: &self.head_y.bias,
            },
        ]
    }
}

// ---------------------------------------------------------------------------
// GCN

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub layer1: LinearLayer,
    pub layer2: LinearLayer,
    pub dropout: DropoutLayer,
    mode: Mode,
    cache: Option<GcnCache>,
}

#[derive(Debug, Clone, PartialEq)]
struct GcnCache {
    x: Tensor2,
    pre: Tensor2,
    hidden: Tensor2,
}

impl GcnModel {
    pub fn new(dims: ModelDims, dropout: f64, use_bias: bool) -> Result<Self> {
        Ok(GcnModel {
            layer1: LinearLayer::new(dims.input, dims.hidden, use_bias),
            layer2: LinearLayer::new(dims.hidden, dims.classes, use_bias),
            dropout: DropoutLayer::new(dropout)?,
            mode: Mode::Train,
            cache: None,
        })
    }

    pub fn dims(&self) -> ModelDims {
        ModelDims {
            input: self.layer1.fan_in(),
            hidden: self.layer1.fan_out(),
            classes: self.layer2.fan_out(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn init_params(&mut self, rng: &mut Rng) {
        self.layer1.init_glorot(rng);
        self.layer2.init_glorot(rng);
    }

    fn check(&self, a_hat: &SparseMatrix, (rows, cols): (usize, usize)) -> Result<()> {
        if a_hat.n() != rows {
            return Err(Error::shape(
                "GcnModel::forward",
                format!(
                    "adjacency is {0}x{0}, features have {1} rows",
                    a_hat.n(),
                    rows
                ),
            ));
        }
        if cols != self.layer1.fan_in() {
            return Err(Error::shape(
                "GcnModel::forward",
                format!(
                    "features have {} columns, model expects {}",
                    cols,
                    self.layer1.fan_in()
                ),
            ));
        }
        Ok(())
    }

    fn propagate(a_hat: &SparseMatrix, x: &Tensor2, layer: &LinearLayer) -> Result<Tensor2> {
        let mut out = a_hat.matmul_dense(&matmul(x, &layer.weight)?)?;
        if layer.uses_bias() {
            out.add_row_vector(&layer.bias);
        }
        Ok(out)
    }

    /// Full-graph logits; caches activations for `backward`.
    pub fn forward(&mut self, a_hat: &SparseMatrix, x: &Tensor2, rng: &mut Rng) -> Result<Tensor2> {
        self.check(a_hat, x.shape())?;
        let pre = Self::propagate(a_hat, x, &self.layer1)?;
        let act = gelu(&pre);
        let hidden = self.dropout.forward(&act, self.mode, rng);
        let logits = Self::propagate(a_hat, &hidden, &self.layer2)?;
        self.cache = Some(GcnCache {
            x: x.clone(),
            pre,
            hidden,
        });
        Ok(logits)
    }

    /// Eval-mode logits on a shared reference.
    pub fn predict(&self, a_hat: &SparseMatrix, x: &Tensor2) -> Result<Tensor2> {
        self.check(a_hat, x.shape())?;
        let hidden = gelu(&Self::propagate(a_hat, x, &self.layer1)?);
        Self::propagate(a_hat, &hidden, &self.layer2)
    }

    /// [`predict`](Self::predict) on row-compressed features; same result bit for bit.
    pub fn predict_csr(&self, a_hat: &SparseMatrix, x: &CsrRows) -> Result<Tensor2> {
        self.check(a_hat, (x.rows(), x.cols()))?;
        let mut pre = a_hat.matmul_dense(&matmul_csr(x, &self.layer1.weight)?)?;
        if self.layer1.uses_bias() {
            pre.add_row_vector(&self.layer1.bias);
        }
        Self::propagate(a_hat, &gelu(&pre), &self.layer2)
    }

    /// Backward through both propagation steps. `a_hat` must be the matrix
    /// used in `forward`; it is symmetric, so `Âᵀ·G = Â·G`.
    pub fn backward(&mut self, a_hat: &SparseMatrix, grad_logits: &Tensor2) -> Result<()> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("GcnModel::backward before forward".into()))?;
        let m2 = a_hat.matmul_dense(grad_logits)?;
        self.layer2.grad_weight = matmul_tn(&cache.hidden, &m2)?;
        self.layer2.grad_bias = bias_grad(&self.layer2, grad_logits);
        let g_hidden = matmul_nt(&m2, &self.layer2.weight)?;
        let g_act = self.dropout.backward(&g_hidden);
        let g_pre = gelu_backward(&cache.pre, &g_act)?;
        let m1 = a_hat.matmul_dense(&g_pre)?;
        self.layer1.grad_weight = matmul_tn(&cache.x, &m1)?;
        self.layer1.grad_bias = bias_grad(&self.layer1, &g_pre);
        Ok(())
    }

    pub fn clear_caches(&mut self) {
        self.cache = None;
        self.dropout.mask = None;
    }

    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        vec![
            ParamMut {
                name: "layer1.weight",
                kind: ParamKind::Weight,
                value: self.layer1.weight.data_mut(),
                grad: self.layer1.grad_weight.data(),
            },
            ParamMut {
                name: "layer1.bias",
                kind: ParamKind::Bias,
                value: &mut self.layer1.bias,
                grad: &self.layer1.grad_bias,
            },
            ParamMut {
                name: "layer2.weight",
                kind: ParamKind::Weight,
                value: self.layer2.weight.data_mut(),
                grad: self.layer2.grad_weight.data(),
            },
            ParamMut {
                name: "layer2.bias",
                kind: ParamKind::Bias,
                value: &mut self.layer2.bias,
                grad: &self.layer2.grad_bias,
            },
        ]
    }

    pub fn params(&self) -> Vec<ParamView<'_>> {
        vec![
            ParamView {
                name: "layer1.weight",
                kind: ParamKind::Weight,
                shape: self.layer1.weight.shape(),
                value: self.layer1.weight.data(),
            },
            ParamView {
                name: "layer1.bias",
                kind: ParamKind::Bias,
                shape: (1, self.layer1.fan_out()),
                value: &self.layer1.bias,
            },
            ParamView {
                name: "layer2.weight",
                kind: ParamKind::Weight,
                shape: self.layer2.weight.shape(),
                value: self.layer2.weight.data(),
            },
            ParamView {
                name: "layer2.bias",
                kind: ParamKind::Bias,
                shape: (1, self.layer2.fan_out()),
                value: &self.layer2.bias,
            },
        ]
    }
}

fn bias_grad(layer: &LinearLayer, grad: &Tensor2) -> Vec<f64> {
    if layer.uses_bias() {
        grad.column_sums()
    } else {
        vec![0.0; layer.fan_out()]
    }
}
