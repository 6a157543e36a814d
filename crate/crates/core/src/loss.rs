//! Neighboring contrastive loss, softmax cross-entropy and their sum.
//!
//! For a batch of embeddings `z` and connection strengths `γ` (a block of
//! `Â^r`), the contrastive term for node `i` is
//!
//! ```text
//! ℓ_i = -log( Σ_{j≠i} γ_ij · exp(s_ij / τ) / Σ_{k≠i} exp(s_ik / τ) )
//! ```
//!
//! with `s` the cosine similarity. Nodes whose batch row has no positive mass
//! are dropped from the average; the result is scaled by `α / B_eff`.

use crate::error::{Error, Result};
use crate::tensor::{dot, matmul, matmul_nt, Tensor2};

/// Floor applied to embedding norms inside the cosine similarity.
pub const COSINE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct NContrastBatch<'a> {
    pub z: &'a Tensor2,
    pub gamma: &'a Tensor2,
    pub tau: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone)]
pub struct NContrastOutput {
    pub loss: f64,
    pub grad_z: Tensor2,
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct CrossEntropyOutput {
    pub loss: f64,
    pub grad: Tensor2,
    /// Set when the mask was empty; `loss` is then 0 and `grad` all zeros.
    pub no_labeled_nodes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LossReport {
    pub loss_nc: f64,
    pub loss_ce: f64,
    pub loss_final: f64,
    pub skipped_nodes: usize,
}

fn row_norms(z: &Tensor2) -> Vec<f64> {
    (0..z.rows())
        .map(|i| dot(z.row(i), z.row(i)).sqrt())
        .collect()
}

fn unit_rows(z: &Tensor2, norms: &[f64]) -> Tensor2 {
    let mut u = z.clone();
    for (i, &n) in norms.iter().enumerate() {
        let d = n.max(COSINE_EPS);
        u.row_mut(i).iter_mut().for_each(|v| *v /= d);
    }
    u
}

/// `S[i][j] = ⟨z_i, z_j⟩ / (max(‖z_i‖, ε) · max(‖z_j‖, ε))`.
pub fn cosine_sim_matrix(z: &Tensor2) -> Result<Tensor2> {
    if z.rows() == 0 {
        return Err(Error::InvalidArgument(
            "cosine similarity of an empty batch".into(),
        ));
    }
    let u = unit_rows(z, &row_norms(z));
    Ok(matmul_nt(&u, &u)?.map(|v| v.clamp(-1.0, 1.0)))
}

const TILE: usize = 64;

fn tiles(b: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..b)
        .step_by(TILE)
        .flat_map(move |i| (0..b).step_by(TILE).map(move |j| (i, j)))
}

/// Contrastive loss and its gradient with respect to `z`.
pub fn ncontrast_loss(batch: NContrastBatch<'_>) -> Result<NContrastOutput> {
    let NContrastBatch {
        z,
        gamma,
        tau,
        alpha,
    } = batch;
    let b = z.rows();
    if b < 2 {
        return Err(Error::InvalidArgument(format!(
            "contrastive loss needs at least 2 nodes, got {b}"
        )));
    }
    if gamma.shape() != (b, b) {
        return Err(Error::shape(
            "ncontrast_loss",
            format!("gamma {:?} for batch of {b}", gamma.shape()),
        ));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be > 0, got {tau}"
        )));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "loss weight must be >= 0, got {alpha}"
        )));
    }

    let norms = row_norms(z);
    let u = unit_rows(z, &norms);
    let sim = matmul_nt(&u, &u)?;

    // Per-row: ℓ_i and dℓ_i/ds_ik = (p_ik - q_ik) / τ, with p the softmax over
    // k≠i and q the γ-weighted softmax over the positives.
    let mut per_row: Vec<Option<f64>> = Vec::with_capacity(b);
    let mut g_sim = Tensor2::zeros(b, b);
    let mut weights = vec![0.0; b];
    for i in 0..b {
        let s_row = sim.row(i);
        let g_row = gamma.row(i);
        let mass: f64 = (0..b).filter(|&j| j != i).map(|j| g_row[j]).sum();
        if mass <= 0.0 {
            per_row.push(None);
            continue;
        }
        let m = (0..b)
            .filter(|&k| k != i)
            .map(|k| s_row[k] / tau)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut den = 0.0;
        let mut num = 0.0;
        for k in 0..b {
            if k == i {
                weights[k] = 0.0;
                continue;
            }
            let e = (s_row[k] / tau - m).exp();
            weights[k] = e;
            den += e;
            num += g_row[k] * e;
        }
        if !(num > 0.0) || !den.is_finite() {
            return Err(Error::NonFinite(format!(
                "contrastive loss row {i} (positive mass underflowed)"
            )));
        }
        per_row.push(Some(den.ln() - num.ln()));
        let gr = g_sim.row_mut(i);
        for k in 0..b {
            if k == i {
                continue;
            }
            let p = weights[k] / den;
            let q = g_row[k] * weights[k] / num;
            gr[k] = (p - q) / tau;
        }
    }

    let skipped = per_row.iter().filter(|r| r.is_none()).count();
    let effective = b - skipped;
    if effective == 0 {
        return Ok(NContrastOutput {
            loss: 0.0,
            grad_z: Tensor2::zeros(b, z.cols()),
            skipped,
        });
    }
    let coef = alpha / effective as f64;
    let loss = coef * per_row.iter().flatten().sum::<f64>();

    // Rows without positives contribute nothing; their g_sim rows are zero.
    // S = U·Uᵀ, so dL/dU = (G + Gᵀ)·U.
    let h = z.cols();
    let mut w = Tensor2::zeros(b, b);
    for (i0, j0) in tiles(b) {
        for i in i0..(i0 + TILE).min(b) {
            for j in j0..(j0 + TILE).min(b) {
                w.data_mut()[i * b + j] = coef * (g_sim.get(i, j) + g_sim.get(j, i));
            }
        }
    }
    let g_u = matmul(&w, &u)?;
    // Through the normalization u = z / max(‖z‖, ε).
    let mut grad_z = Tensor2::zeros(b, h);
    for i in 0..b {
        let gu = g_u.row(i);
        let out = grad_z.row_mut(i);
        if norms[i] > COSINE_EPS {
            let ui = u.row(i);
            let proj = dot(gu, ui);
            for c in 0..h {
                out[c] = (gu[c] - ui[c] * proj) / norms[i];
            }
        } else {
            for c in 0..h {
                out[c] = gu[c] / COSINE_EPS;
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("contrastive loss".into()));
    }
    Ok(NContrastOutput {
        loss,
        grad_z,
        skipped,
    })
}

/// Mean negative log-likelihood over the rows listed in `mask`.
pub fn softmax_cross_entropy(
    logits: &Tensor2,
    labels: &[usize],
    mask: &[usize],
) -> Result<CrossEntropyOutput> {
    if labels.len() != logits.rows() {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{} labels for {} rows", labels.len(), logits.rows()),
        ));
    }
    let c = logits.cols();
    let mut grad = Tensor2::zeros(logits.rows(), c);
    if mask.is_empty() {
        return Ok(CrossEntropyOutput {
            loss: 0.0,
            grad,
            no_labeled_nodes: true,
        });
    }
    let inv = 1.0 / mask.len() as f64;
    let mut loss = 0.0;
    for &r in mask {
        if r >= logits.rows() {
            return Err(Error::InvalidArgument(format!(
                "mask row {r} outside {} rows",
                logits.rows()
            )));
        }
        let y = labels[r];
        if y >= c {
            return Err(Error::InvalidArgument(format!(
                "row {r} has label {y} outside {c} classes"
            )));
        }
        let row = logits.row(r);
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + sum.ln();
        loss += lse - row[y];
        let g = grad.row_mut(r);
        for k in 0..c {
            g[k] = inv * (row[k] - lse).exp();
        }
        g[y] -= inv;
    }
    let loss = loss * inv;
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss".into()));
    }
    Ok(CrossEntropyOutput {
        loss,
        grad,
        no_labeled_nodes: false,
    })
}

/// Gradients of the combined objective with respect to the two model outputs.
#[derive(Debug, Clone)]
pub struct CombinedGrads {
    pub grad_z: Tensor2,
    pub grad_y: Tensor2,
}

/// `loss_CE + loss_NC` on one batch.
///
/// The model's backward pass adds `head_yᵀ·grad_y` to `grad_z`, which
/// completes the gradient sum on the shared embedding. With `alpha == 0`
/// the contrastive term is not evaluated at all.
pub fn combined_loss(
    z: &Tensor2,
    y_logits: &Tensor2,
    gamma: &Tensor2,
    labels: &[usize],
    ce_mask: &[usize],
    tau: f64,
    alpha: f64,
) -> Result<(LossReport, CombinedGrads)> {
    let ce = softmax_cross_entropy(y_logits, labels, ce_mask)?;
    let (loss_nc, grad_z, skipped) = if alpha == 0.0 {
        (0.0, Tensor2::zeros(z.rows(), z.cols()), 0)
    } else {
        let nc = ncontrast_loss(NContrastBatch {
            z,
            gamma,
            tau,
            alpha,
        })?;
        (nc.loss, nc.grad_z, nc.skipped)
    };
    let report = LossReport {
        loss_nc,
        loss_ce: ce.loss,
        loss_final: ce.loss + loss_nc,
        skipped_nodes: skipped,
    };
    Ok((
        report,
        CombinedGrads {
            grad_z,
            grad_y: ce.grad,
        },
    ))
}
