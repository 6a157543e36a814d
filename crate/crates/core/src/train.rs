//! Batched training with validation-based model selection.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{
    extract_submatrix, normalize_adjacency, sparse_power, Graph, SparseMatrix, SplitKind,
};
use crate::loss::{combined_loss, softmax_cross_entropy, LossReport};
use crate::model::{Model, ModelKind};
use crate::nn::{GcnModel, GraphMlpModel, Mode, ModelDims};
use crate::optim::{AdamConfig, AdamState};
use crate::rng::Rng;
use crate::tensor::Tensor2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub alpha: f64,
    pub tau: f64,
    /// Adjacency power whose entries weight positive pairs.
    pub r: u32,
    pub iterations: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    pub dropout: f64,
    pub seed: u64,
    /// Iterations between validation passes; the last iteration is always validated.
    pub eval_every: usize,
    pub use_bias: bool,
    pub decay_norm_and_bias: bool,
    /// Scale feature rows to unit L1 norm before training and evaluation.
    pub row_normalize: bool,
    /// Record `elapsed_ms` as 0 so logs depend only on the inputs.
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 2000,
            alpha: 1.0,
            tau: 1.0,
            r: 2,
            iterations: 400,
            lr: 0.01,
            weight_decay: 5e-4,
            hidden: 256,
            dropout: 0.6,
            seed: 0,
            eval_every: 1,
            use_bias: true,
            decay_norm_and_bias: true,
            row_normalize: false,
            deterministic: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.batch_size < 2 {
            return bad(format!("batch size {} < 2", self.batch_size));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be at least 1".into());
        }
        if !(self.tau > 0.0) {
            return bad(format!("temperature {} must be positive", self.tau));
        }
        if !(self.alpha >= 0.0) {
            return bad(format!("alpha {} must be non-negative", self.alpha));
        }
        if self.r == 0 {
            return bad("adjacency power r must be at least 1".into());
        }
        if self.hidden == 0 {
            return bad("hidden dimension must be positive".into());
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("learning rate must be positive and weight decay non-negative".into());
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            decay_norm_and_bias: self.decay_norm_and_bias,
            ..AdamConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iter: usize,
    pub loss_nc: f64,
    pub loss_ce: f64,
    pub loss_final: f64,
    /// `None` on iterations without a validation pass.
    pub val_acc: Option<f64>,
    /// Wall time since the first optimizer step began.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub kind: ModelKind,
    pub config: TrainConfig,
    /// Parameters at the best validation pass (first one on ties).
    pub best_model: Model,
    pub best_optimizer: AdamState,
    pub best_val_acc: f64,
    pub best_iter: usize,
    /// Test accuracy of `best_model`; `None` if the graph has no test split.
    pub test_acc_at_best: Option<f64>,
    pub log: Vec<LogEntry>,
    pub train_ms: f64,
}

/// Serializable digest of a [`TrainResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub kind: ModelKind,
    pub config: TrainConfig,
    pub best_val_acc: f64,
    pub best_iter: usize,
    pub test_acc_at_best: Option<f64>,
    pub iterations: usize,
    pub final_loss: Option<LossReportLite>,
    pub train_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReportLite {
    pub loss_nc: f64,
    pub loss_ce: f64,
    pub loss_final: f64,
}

impl TrainResult {
    pub fn summary(&self) -> TrainSummary {
        TrainSummary {
            kind: self.kind,
            config: self.config.clone(),
            best_val_acc: self.best_val_acc,
            best_iter: self.best_iter,
            test_acc_at_best: self.test_acc_at_best,
            iterations: self.log.len(),
            final_loss: self.log.last().map(|e| LossReportLite {
                loss_nc: e.loss_nc,
                loss_ce: e.loss_ce,
                loss_final: e.loss_final,
            }),
            train_ms: self.train_ms,
        }
    }

    /// One JSON object per line.
    pub fn log_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.log {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// `min(b, n)` distinct node indices; all of `0..n` in order when `b >= n`.
pub fn sample_batch(n: usize, b: usize, rng: &mut Rng) -> Vec<usize> {
    if b >= n {
        return (0..n).collect();
    }
    rng.sample_distinct(n, b)
}

/// Feature matrix the model sees for `g` under `cfg`.
pub fn prepare_features(g: &Graph, cfg: &TrainConfig) -> Tensor2 {
    if cfg.row_normalize {
        g.row_normalized().features().clone()
    } else {
        g.features().clone()
    }
}

/// Forward, loss and backward for one Graph-MLP batch. Leaves parameter
/// gradients in the model and returns the loss terms.
///
/// `labels[k]` is the class of batch row `k`; only rows listed in
/// `ce_rows` contribute to the classification term.
#[allow(clippy::too_many_arguments)]
pub fn graphmlp_batch_step(
    model: &mut GraphMlpModel,
    xb: &Tensor2,
    gamma: &Tensor2,
    labels: &[usize],
    ce_rows: &[usize],
    tau: f64,
    alpha: f64,
    rng: &mut Rng,
) -> Result<LossReport> {
    let (z, y) = model.forward(xb, rng)?;
    let (report, grads) = combined_loss(&z, &y, gamma, labels, ce_rows, tau, alpha)?;
    model.backward(&grads.grad_z, &grads.grad_y)?;
    Ok(report)
}

struct Streams {
    init: Rng,
    batch: Rng,
    dropout: Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let mut root = Rng::new(seed);
        Streams {
            init: root.fork(),
            batch: root.fork(),
            dropout: root.fork(),
        }
    }
}

/// Trains one model on `g`.
///
/// Only training labels are handed to the loss; validation labels are read
/// for model selection and test labels only after the loop has finished.
pub fn train(g: &Graph, cfg: &TrainConfig, kind: ModelKind) -> Result<TrainResult> {
    cfg.validate()?;
    let splits = g.splits();
    if splits.train.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    if splits.val.is_empty() {
        return Err(Error::InvalidArgument(
            "validation split is empty; model selection needs it".into(),
        ));
    }
    let x = prepare_features(g, cfg);
    let n = g.n();
    let dims = ModelDims {
        input: g.d(),
        hidden: cfg.hidden,
        classes: g.num_classes(),
    };

    // Supervision visible to the optimizer: train labels and nothing else.
    let mut train_label: Vec<Option<usize>> = vec![None; n];
    for &i in &splits.train {
        train_label[i] = g.labels()[i];
    }
    let val_ids = splits.val.clone();
    let val_labels: Vec<Option<usize>> = val_ids.iter().map(|&i| g.labels()[i]).collect();
    let val_acc_of = |pred: &[usize]| {
        let hits = pred
            .iter()
            .zip(&val_labels)
            .filter(|(p, l)| Some(**p) == **l)
            .count();
        hits as f64 / val_ids.len() as f64
    };

    let mut streams = Streams::new(cfg.seed);
    let mut model = Model::new(kind, dims, cfg.dropout, cfg.use_bias)?;
    model.init_params(&mut streams.init);
    let mut opt = AdamState::new(cfg.adam());

    let a_hat = if kind == ModelKind::Gcn || cfg.alpha > 0.0 {
        Some(normalize_adjacency(&g.adjacency()))
    } else {
        None
    };
    let a_r: Option<SparseMatrix> = match (&a_hat, kind) {
        (Some(a), ModelKind::GraphMlp) if cfg.alpha > 0.0 => Some(sparse_power(a, cfg.r)?),
        _ => None,
    };
    let alpha = if kind == ModelKind::GraphMlp {
        cfg.alpha
    } else {
        0.0
    };

    let mut log = Vec::with_capacity(cfg.iterations);
    let mut best: Option<(Model, AdamState)> = None;
    let mut best_val_acc = f64::NEG_INFINITY;
    let mut best_iter = 0;
    let start = Instant::now();

    for it in 1..=cfg.iterations {
        model.set_mode(Mode::Train);
        let report = match &mut model {
            Model::GraphMlp(m) => {
                let batch = sample_batch(n, cfg.batch_size, &mut streams.batch);
                let xb = x.select_rows(&batch);
                let gamma = match &a_r {
                    Some(a) => extract_submatrix(a, &batch)?,
                    None => Tensor2::default(),
                };
                let mut labels = vec![0; batch.len()];
                let mut ce_rows = Vec::new();
                for (k, &i) in batch.iter().enumerate() {
                    if let Some(c) = train_label[i] {
                        labels[k] = c;
                        ce_rows.push(k);
                    }
                }
                graphmlp_batch_step(
                    m,
                    &xb,
                    &gamma,
                    &labels,
                    &ce_rows,
                    cfg.tau,
                    alpha,
                    &mut streams.dropout,
                )?
            }
            Model::Gcn(m) => gcn_full_step(
                m,
                a_hat.as_ref().expect("built for gcn"),
                &x,
                &train_label,
                &mut streams.dropout,
            )?,
        };
        opt.step(&mut model.params_mut())?;

        let val_acc = if it % cfg.eval_every == 0 || it == cfg.iterations {
            let pred = model.predict_classes(&x, a_hat.as_ref(), &val_ids)?;
            let acc = val_acc_of(&pred);
            if acc > best_val_acc {
                best_val_acc = acc;
                best_iter = it;
                let mut snapshot = model.clone();
                snapshot.clear_caches();
                snapshot.set_mode(Mode::Eval);
                best = Some((snapshot, opt.clone()));
            }
            Some(acc)
        } else {
            None
        };
        let elapsed_ms = if cfg.deterministic {
            0.0
        } else {
            start.elapsed().as_secs_f64() * 1e3
        };
        log.push(LogEntry {
            iter: it,
            loss_nc: report.loss_nc,
            loss_ce: report.loss_ce,
            loss_final: report.loss_final,
            val_acc,
            elapsed_ms,
        });
    }
    let train_ms = if cfg.deterministic {
        0.0
    } else {
        start.elapsed().as_secs_f64() * 1e3
    };

    let (best_model, best_optimizer) = best.expect("the final iteration always validates");
    let test_acc_at_best = if splits.test.is_empty() {
        None
    } else {
        Some(best_model.evaluate(g, &x, a_hat.as_ref(), SplitKind::Test)?)
    };
    Ok(TrainResult {
        kind,
        config: cfg.clone(),
        best_model,
        best_optimizer,
        best_val_acc,
        best_iter,
        test_acc_at_best,
        log,
        train_ms,
    })
}

fn gcn_full_step(
    m: &mut GcnModel,
    a_hat: &SparseMatrix,
    x: &Tensor2,
    train_label: &[Option<usize>],
    rng: &mut Rng,
) -> Result<LossReport> {
    let logits = m.forward(a_hat, x, rng)?;
    let labels: Vec<usize> = train_label.iter().map(|l| l.unwrap_or(0)).collect();
    let rows: Vec<usize> = (0..labels.len())
        .filter(|&i| train_label[i].is_some())
        .collect();
    let ce = softmax_cross_entropy(&logits, &labels, &rows)?;
    m.backward(a_hat, &ce.grad)?;
    Ok(LossReport {
        loss_nc: 0.0,
        loss_ce: ce.loss,
        loss_final: ce.loss,
        skipped_nodes: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthetic::{generate, SyntheticConfig};

    fn quick() -> TrainConfig {
        TrainConfig {
            batch_size: 128,
            iterations: 30,
            hidden: 32,
            deterministic: true,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn sample_batch_contract() {
        let mut rng = Rng::new(0);
        assert_eq!(sample_batch(5, 9, &mut rng), vec![0, 1, 2, 3, 4]);
        let b = sample_batch(100, 10, &mut rng);
        let mut s = b.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 10);
        assert_eq!(
            sample_batch(50, 7, &mut Rng::new(4)),
            sample_batch(50, 7, &mut Rng::new(4))
        );
    }

    #[test]
    fn pair_sampling_is_uniform() {
        let n = 50;
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        let mut rng = Rng::new(8);
        for _ in 0..draws {
            for i in sample_batch(n, 2, &mut rng) {
                counts[i] += 1;
            }
        }
        let p = 2.0 / n as f64;
        let mean = draws as f64 * p;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - mean).abs() < 4.0 * sd, "{c} vs {mean}±{sd}");
        }
    }

    #[test]
    fn one_iteration_one_step() {
        let g = generate(&SyntheticConfig::small(), 1).unwrap();
        let cfg = TrainConfig {
            iterations: 1,
            ..quick()
        };
        let res = train(&g, &cfg, ModelKind::GraphMlp).unwrap();
        assert_eq!(res.log.len(), 1);
        assert_eq!(res.best_optimizer.step, 1);
        assert!(res.log[0].val_acc.is_some());
    }

    #[test]
    fn identical_seeds_identical_runs() {
        let g = generate(&SyntheticConfig::small(), 2).unwrap();
        for kind in [ModelKind::GraphMlp, ModelKind::Gcn, ModelKind::Mlp] {
            let a = train(&g, &quick(), kind).unwrap();
            let b = train(&g, &quick(), kind).unwrap();
            assert_eq!(a.log, b.log);
            assert_eq!(a.best_model, b.best_model);
            assert_eq!(a.test_acc_at_best, b.test_acc_at_best);
        }
    }

    #[test]
    fn best_val_is_running_max() {
        let g = generate(&SyntheticConfig::small(), 3).unwrap();
        let cfg = TrainConfig {
            eval_every: 3,
            iterations: 20,
            ..quick()
        };
        let res = train(&g, &cfg, ModelKind::GraphMlp).unwrap();
        let vals: Vec<f64> = res.log.iter().filter_map(|e| e.val_acc).collect();
        assert_eq!(vals.len(), 7);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(res.best_val_acc, max);
        assert_eq!(res.log[res.best_iter - 1].val_acc, Some(max));
        assert!(
            res.log
                .iter()
                .rev()
                .find(|e| e.val_acc.is_some())
                .unwrap()
                .iter
                == 20
        );
    }

    #[test]
    fn test_labels_never_influence_training() {
        let g = generate(&SyntheticConfig::small(), 4).unwrap();
        let mut labels = g.labels().to_vec();
        for &i in &g.splits().test {
            labels[i] = Some((labels[i].unwrap() + 1) % g.num_classes());
        }
        let scrambled = g.clone().with_labels(labels).unwrap();
        for kind in [ModelKind::GraphMlp, ModelKind::Gcn] {
            let a = train(&g, &quick(), kind).unwrap();
            let b = train(&scrambled, &quick(), kind).unwrap();
            assert_eq!(a.log, b.log);
            assert_eq!(a.best_model, b.best_model);
        }
    }

    #[test]
    fn mlp_kind_equals_graphmlp_with_zero_alpha() {
        let g = generate(&SyntheticConfig::small(), 5).unwrap();
        let a = train(&g, &quick(), ModelKind::Mlp).unwrap();
        let b = train(
            &g,
            &TrainConfig {
                alpha: 0.0,
                ..quick()
            },
            ModelKind::GraphMlp,
        )
        .unwrap();
        assert_eq!(a.log, b.log);
        assert!(a.log.iter().all(|e| e.loss_nc == 0.0));
    }

    #[test]
    fn full_batch_ce_matches_graph_ce() {
        // With B ≥ n the batch is every node in order, so the batch CE term
        // equals CE over the train split of a full-graph forward.
        let g = generate(&SyntheticConfig::small(), 6).unwrap();
        let cfg = TrainConfig {
            batch_size: g.n(),
            dropout: 0.0,
            alpha: 0.0,
            ..quick()
        };
        let mut rng = Rng::new(0);
        let dims = ModelDims {
            input: g.d(),
            hidden: 16,
            classes: g.num_classes(),
        };
        let mut m = GraphMlpModel::new(dims, 0.0, true).unwrap();
        m.init_params(&mut rng);
        let batch = sample_batch(g.n(), cfg.batch_size, &mut rng);
        let labels: Vec<usize> = g.labels().iter().map(|l| l.unwrap_or(0)).collect();
        let rows: Vec<usize> = batch
            .iter()
            .copied()
            .filter(|i| g.splits().train.contains(i))
            .collect();
        let xb = g.features().select_rows(&batch);
        let rep = graphmlp_batch_step(
            &mut m,
            &xb,
            &Tensor2::default(),
            &labels,
            &rows,
            1.0,
            0.0,
            &mut rng,
        )
        .unwrap();
        let (_, y) = m.predict(g.features()).unwrap();
        let full = softmax_cross_entropy(&y, &labels, &g.splits().train).unwrap();
        assert_eq!(rep.loss_ce, full.loss);
    }

    #[test]
    fn graphmlp_learns_on_easy_graph() {
        let g = generate(
            &SyntheticConfig {
                signal: 0.6,
                ..SyntheticConfig::small()
            },
            7,
        )
        .unwrap();
        let res = train(
            &g,
            &TrainConfig {
                iterations: 60,
                ..quick()
            },
            ModelKind::GraphMlp,
        )
        .unwrap();
        assert!(
            res.test_acc_at_best.unwrap() > 0.7,
            "{:?}",
            res.test_acc_at_best
        );
    }

    #[test]
    fn rejects_bad_configs() {
        let g = generate(&SyntheticConfig::small(), 1).unwrap();
        for cfg in [
            TrainConfig {
                batch_size: 1,
                ..quick()
            },
            TrainConfig {
                iterations: 0,
                ..quick()
            },
            TrainConfig {
                tau: 0.0,
                ..quick()
            },
            TrainConfig { r: 0, ..quick() },
        ] {
            assert!(train(&g, &cfg, ModelKind::GraphMlp).is_err());
        }
        let no_train = g.clone().with_splits(Default::default()).unwrap();
        assert!(train(&no_train, &quick(), ModelKind::GraphMlp).is_err());
    }
}
