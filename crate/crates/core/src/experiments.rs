//! Experiment drivers: accuracy tables, inference timing, adjacency
//! corruption, embedding export and hyperparameter sweeps.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{corrupt_adjacency, normalize_adjacency, Graph, SplitKind, Splits};
use crate::model::{accuracy, Model, ModelKind};
use crate::rng::Rng;
use crate::tensor::CsrRows;
use crate::train::{prepare_features, train, LogEntry, TrainConfig, TrainResult};

/// Mean and sample standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed of run `k` derived from a base seed.
pub fn run_seed(base: u64, k: usize) -> u64 {
    base.wrapping_add(k as u64)
}

// ---------------------------------------------------------------------------
// Accuracy table

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub dataset: String,
    pub kind: ModelKind,
    pub seeds: Vec<u64>,
    pub test_accs: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Test accuracy of Graph-MLP and of the same network without the
/// contrastive term, over `n_seeds` initializations per dataset.
pub fn run_accuracy_table(
    datasets: &[(&str, &Graph)],
    cfg: &TrainConfig,
    n_seeds: usize,
) -> Result<Vec<AccuracyRow>> {
    let mut rows = Vec::new();
    for &(name, g) in datasets {
        for kind in [ModelKind::GraphMlp, ModelKind::Mlp] {
            let mut seeds = Vec::with_capacity(n_seeds);
            let mut accs = Vec::with_capacity(n_seeds);
            for k in 0..n_seeds {
                let seed = run_seed(cfg.seed, k);
                let res = train(
                    g,
                    &TrainConfig {
                        seed,
                        ..cfg.clone()
                    },
                    kind,
                )?;
                seeds.push(seed);
                accs.push(
                    res.test_acc_at_best
                        .ok_or_else(|| Error::InvalidArgument("graph has no test split".into()))?,
                );
            }
            let (mean, std) = mean_std(&accs);
            rows.push(AccuracyRow {
                dataset: name.to_string(),
                kind,
                seeds,
                test_accs: accs,
                mean,
                std,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Timing

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub iteration: usize,
    pub wall_ms: f64,
    pub val_acc: f64,
}

pub fn curve_from_log(log: &[LogEntry]) -> Vec<CurvePoint> {
    log.iter()
        .filter_map(|e| {
            e.val_acc.map(|v| CurvePoint {
                iteration: e.iter,
                wall_ms: e.elapsed_ms,
                val_acc: v,
            })
        })
        .collect()
}

/// `iteration,wall_ms,val_acc` with a header line.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("iteration,wall_ms,val_acc\n");
    for p in points {
        writeln!(out, "{},{},{}", p.iteration, p.wall_ms, p.val_acc).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub dataset: String,
    pub repetitions: usize,
    pub test_nodes: usize,
    pub graphmlp_infer_s: f64,
    pub gcn_infer_s: f64,
    /// `gcn_infer_s / graphmlp_infer_s`.
    pub speedup: f64,
    pub graphmlp_test_acc: f64,
    pub gcn_test_acc: f64,
    /// What the timed interval covers.
    pub measured_region: String,
    pub graphmlp_curve: Vec<CurvePoint>,
    pub gcn_curve: Vec<CurvePoint>,
}

pub const TIMING_REGION: &str = "graphmlp: eval forward on the test-node feature rows + argmax; \
gcn: eval forward on all features with the precomputed normalized adjacency + test-row argmax; \
both read features in row-compressed form; \
excludes training, model loading, dataset I/O, feature compression and adjacency normalization";

/// Mean wall time of `reps` calls of `f`, after one untimed warm-up call.
pub fn time_mean<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<f64> {
    std::hint::black_box(f()?);
    let start = Instant::now();
    for _ in 0..reps {
        std::hint::black_box(f()?);
    }
    Ok(start.elapsed().as_secs_f64() / reps.max(1) as f64)
}

/// Inference timing of already-trained models on `g`'s test split.
pub fn time_inference(
    g: &Graph,
    cfg: &TrainConfig,
    graphmlp: &Model,
    gcn: &Model,
    reps: usize,
) -> Result<(f64, f64)> {
    let x = prepare_features(g, cfg);
    let test = g.splits().test.clone();
    if test.is_empty() {
        return Err(Error::InvalidArgument("timing needs a test split".into()));
    }
    let (Model::GraphMlp(mlp), Model::Gcn(gcn)) = (graphmlp, gcn) else {
        return Err(Error::InvalidArgument(
            "time_inference expects a Graph-MLP and a GCN model".into(),
        ));
    };
    let x = CsrRows::from_dense(&x);
    let x_test = x.select_rows(&test);
    let a_hat = normalize_adjacency(&g.adjacency());
    let mlp_s = time_mean(reps, || Ok(mlp.predict_csr(&x_test)?.1.argmax_rows()))?;
    let gcn_s = time_mean(reps, || {
        Ok(gcn
            .predict_csr(&a_hat, &x)?
            .select_rows(&test)
            .argmax_rows())
    })?;
    Ok((mlp_s, gcn_s))
}

/// Trains both models once with `cfg` and times inference over `reps` repetitions.
pub fn run_timing(name: &str, g: &Graph, cfg: &TrainConfig, reps: usize) -> Result<TimingReport> {
    let mlp = train(g, cfg, ModelKind::GraphMlp)?;
    let gcn = train(g, cfg, ModelKind::Gcn)?;
    let (mlp_s, gcn_s) = time_inference(g, cfg, &mlp.best_model, &gcn.best_model, reps)?;
    Ok(TimingReport {
        dataset: name.to_string(),
        repetitions: reps,
        test_nodes: g.splits().test.len(),
        graphmlp_infer_s: mlp_s,
        gcn_infer_s: gcn_s,
        speedup: gcn_s / mlp_s,
        graphmlp_test_acc: mlp.test_acc_at_best.unwrap_or(f64::NAN),
        gcn_test_acc: gcn.test_acc_at_best.unwrap_or(f64::NAN),
        measured_region: TIMING_REGION.to_string(),
        graphmlp_curve: curve_from_log(&mlp.log),
        gcn_curve: curve_from_log(&gcn.log),
    })
}

// ---------------------------------------------------------------------------
// Corruption

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptionReport {
    pub delta: f64,
    pub kind: ModelKind,
    pub run_accs: Vec<f64>,
    pub mean: f64,
    /// For Graph-MLP: every run's test predictions equal its clean ones exactly.
    pub predictions_identical: Option<bool>,
}

/// Test predictions and accuracy of `model` when the graph's adjacency is
/// corrupted with ratio `delta` (renormalized afterwards).
pub fn evaluate_corrupted(
    g: &Graph,
    x: &crate::Tensor2,
    model: &Model,
    delta: f64,
    rng: &mut Rng,
) -> Result<(Vec<usize>, f64)> {
    let test = &g.splits().test;
    let a = corrupt_adjacency(&g.adjacency(), delta, rng)?;
    let a_hat = normalize_adjacency(&a);
    let pred = model.predict_classes(x, Some(&a_hat), test)?;
    let acc = accuracy(&pred, g.labels(), test);
    Ok((pred, acc))
}

/// Seed for the corruption draw of run `k` at `delta`.
pub fn corruption_seed(base: u64, k: usize, delta: f64) -> u64 {
    base ^ delta.to_bits().rotate_left(17) ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Trains `runs` Graph-MLP and GCN models on the clean graph, then tests each
/// against adjacencies corrupted at every ratio in `deltas`.
pub fn run_corruption(
    g: &Graph,
    cfg: &TrainConfig,
    deltas: &[f64],
    runs: usize,
) -> Result<Vec<CorruptionReport>> {
    let x = prepare_features(g, cfg);
    let mut trained: Vec<(Model, Model)> = Vec::with_capacity(runs);
    for k in 0..runs {
        let run_cfg = TrainConfig {
            seed: run_seed(cfg.seed, k),
            ..cfg.clone()
        };
        let mlp = train(g, &run_cfg, ModelKind::GraphMlp)?;
        let gcn = train(g, &run_cfg, ModelKind::Gcn)?;
        trained.push((mlp.best_model, gcn.best_model));
    }
    corruption_reports(g, &x, &trained, cfg.seed, deltas)
}

/// Corruption evaluation of already-trained `(graphmlp, gcn)` pairs.
pub fn corruption_reports(
    g: &Graph,
    x: &crate::Tensor2,
    trained: &[(Model, Model)],
    seed: u64,
    deltas: &[f64],
) -> Result<Vec<CorruptionReport>> {
    let clean: Vec<Vec<usize>> = trained
        .iter()
        .map(|(m, _)| m.predict_classes(x, None, &g.splits().test))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for &delta in deltas {
        let mut mlp_accs = Vec::new();
        let mut gcn_accs = Vec::new();
        let mut identical = true;
        for (k, (mlp, gcn)) in trained.iter().enumerate() {
            let mut rng = Rng::new(corruption_seed(seed, k, delta));
            let (pred, acc) = evaluate_corrupted(g, x, mlp, delta, &mut rng.clone())?;
            identical &= pred == clean[k];
            mlp_accs.push(acc);
            gcn_accs.push(evaluate_corrupted(g, x, gcn, delta, &mut rng)?.1);
        }
        out.push(CorruptionReport {
            delta,
            kind: ModelKind::GraphMlp,
            mean: mean_std(&mlp_accs).0,
            run_accs: mlp_accs,
            predictions_identical: Some(identical),
        });
        out.push(CorruptionReport {
            delta,
            kind: ModelKind::Gcn,
            mean: mean_std(&gcn_accs).0,
            run_accs: gcn_accs,
            predictions_identical: None,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Embeddings

/// TSV with a header and one row per node: index, label (`-1` if none), then `z`.
pub fn export_embeddings(model: &Model, g: &Graph, cfg: &TrainConfig) -> Result<String> {
    let Model::GraphMlp(m) = model else {
        return Err(Error::InvalidArgument(
            "embeddings are exported from Graph-MLP models".into(),
        ));
    };
    let (z, _) = m.predict(&prepare_features(g, cfg))?;
    let mut out = String::from("node\tlabel");
    for c in 0..z.cols() {
        write!(out, "\tz{c}").unwrap();
    }
    out.push('\n');
    for i in 0..z.rows() {
        match g.labels()[i] {
            Some(l) => write!(out, "{i}\t{l}").unwrap(),
            None => write!(out, "{i}\t-1").unwrap(),
        }
        for v in z.row(i) {
            write!(out, "\t{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub lr: Vec<f64>,
    pub weight_decay: Vec<f64>,
    pub batch_size: Vec<usize>,
    pub tau: Vec<f64>,
    pub r: Vec<u32>,
    pub alpha: Vec<f64>,
}

impl Default for SweepGrid {
    /// The full published search space (576 points).
    fn default() -> Self {
        SweepGrid {
            lr: vec![0.001, 0.01, 0.05, 0.1],
            weight_decay: vec![5e-4, 5e-3],
            batch_size: vec![2000, 3000],
            tau: vec![0.5, 1.0, 2.0],
            r: vec![2, 3, 4],
            alpha: vec![0.0, 1.0, 10.0, 100.0],
        }
    }
}

impl SweepGrid {
    /// A 16-point subset used unless the full grid is requested.
    pub fn reduced() -> Self {
        SweepGrid {
            lr: vec![0.01, 0.05],
            weight_decay: vec![5e-4],
            batch_size: vec![2000],
            tau: vec![0.5, 1.0],
            r: vec![2, 3],
            alpha: vec![1.0, 10.0],
        }
    }

    pub fn single(cfg: &TrainConfig) -> Self {
        SweepGrid {
            lr: vec![cfg.lr],
            weight_decay: vec![cfg.weight_decay],
            batch_size: vec![cfg.batch_size],
            tau: vec![cfg.tau],
            r: vec![cfg.r],
            alpha: vec![cfg.alpha],
        }
    }

    pub fn len(&self) -> usize {
        self.lr.len()
            * self.weight_decay.len()
            * self.batch_size.len()
            * self.tau.len()
            * self.r.len()
            * self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cartesian product in lexicographic order (lr outermost, alpha innermost).
    pub fn configs(&self, base: &TrainConfig) -> Result<Vec<TrainConfig>> {
        if self.is_empty() {
            return Err(Error::InvalidArgument(
                "sweep grid has an empty axis".into(),
            ));
        }
        let mut out = Vec::with_capacity(self.len());
        for &lr in &self.lr {
            for &weight_decay in &self.weight_decay {
                for &batch_size in &self.batch_size {
                    for &tau in &self.tau {
                        for &r in &self.r {
                            for &alpha in &self.alpha {
                                let cfg = TrainConfig {
                                    lr,
                                    weight_decay,
                                    batch_size,
                                    tau,
                                    r,
                                    alpha,
                                    ..base.clone()
                                };
                                cfg.validate()?;
                                out.push(cfg);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// Position in the grid's enumeration order.
    pub index: usize,
    pub config: TrainConfig,
    pub val_accs: Vec<f64>,
    pub mean_val: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub kind: ModelKind,
    pub n_seeds: usize,
    /// Sorted by mean validation accuracy, best first; ties keep grid order.
    pub ranked: Vec<SweepEntry>,
    /// Test accuracies of the top entry, measured after ranking.
    pub best_test_accs: Vec<f64>,
    pub best_test_mean: f64,
    pub best_test_std: f64,
}

/// Worker count: explicit value, else `GRAPHMLP_THREADS`, else available cores.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| {
            std::env::var("GRAPHMLP_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .max(1)
}

/// Trains every grid point with `n_seeds` seeds, ranks by mean validation
/// accuracy, then reports test accuracy for the winner only.
///
/// Training during the search sees a copy of the graph without a test split,
/// so no test accuracy exists until ranking is done; the winner is then
/// retrained (bit-identically) on the full graph to measure it.
pub fn run_sweep(
    g: &Graph,
    grid: &SweepGrid,
    base: &TrainConfig,
    kind: ModelKind,
    n_seeds: usize,
    threads: usize,
) -> Result<SweepReport> {
    if n_seeds == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one seed".into(),
        ));
    }
    let configs = grid.configs(base)?;
    let s = g.splits();
    let search_graph = g.clone().with_splits(Splits {
        train: s.train.clone(),
        val: s.val.clone(),
        test: Vec::new(),
    })?;

    let jobs: Vec<(usize, usize)> = (0..configs.len())
        .flat_map(|c| (0..n_seeds).map(move |k| (c, k)))
        .collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<f64>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(jobs.len()) {
            scope.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(c, k)) = jobs.get(j) else { break };
                let cfg = TrainConfig {
                    seed: run_seed(base.seed, k),
                    ..configs[c].clone()
                };
                let r = train(&search_graph, &cfg, kind).map(|res| res.best_val_acc);
                results.lock().unwrap()[j] = Some(r);
            });
        }
    });
    let results = results.into_inner().unwrap();

    let mut entries: Vec<SweepEntry> = configs
        .iter()
        .enumerate()
        .map(|(index, config)| SweepEntry {
            index,
            config: config.clone(),
            val_accs: Vec::new(),
            mean_val: 0.0,
        })
        .collect();
    for (j, r) in results.into_iter().enumerate() {
        let acc = r.expect("every job ran")?;
        entries[jobs[j].0].val_accs.push(acc);
    }
    for e in &mut entries {
        e.mean_val = mean_std(&e.val_accs).0;
    }
    entries.sort_by(|a, b| {
        b.mean_val
            .total_cmp(&a.mean_val)
            .then(a.index.cmp(&b.index))
    });

    let best = &entries[0];
    let mut test_accs = Vec::with_capacity(n_seeds);
    for k in 0..n_seeds {
        let res: TrainResult = train(
            g,
            &TrainConfig {
                seed: run_seed(base.seed, k),
                ..best.config.clone()
            },
            kind,
        )?;
        test_accs.push(
            res.test_acc_at_best
                .ok_or_else(|| Error::InvalidArgument("graph has no test split".into()))?,
        );
    }
    let (best_test_mean, best_test_std) = mean_std(&test_accs);
    Ok(SweepReport {
        kind,
        n_seeds,
        ranked: entries,
        best_test_accs: test_accs,
        best_test_mean,
        best_test_std,
    })
}

/// Test accuracy of a model on `g`, used by the CLI's `eval` command.
pub fn evaluate_split(
    model: &Model,
    g: &Graph,
    cfg: &TrainConfig,
    split: SplitKind,
) -> Result<f64> {
    let x = prepare_features(g, cfg);
    let a_hat = model_needs_adjacency(model).then(|| normalize_adjacency(&g.adjacency()));
    model.evaluate(g, &x, a_hat.as_ref(), split)
}

fn model_needs_adjacency(model: &Model) -> bool {
    matches!(model, Model::Gcn(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::synthetic::{generate, SyntheticConfig};
    use crate::tensor::Tensor2;

    fn quick() -> TrainConfig {
        TrainConfig {
            batch_size: 128,
            iterations: 15,
            hidden: 16,
            deterministic: true,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn default_grid_is_the_full_space() {
        assert_eq!(SweepGrid::default().len(), 576);
        assert_eq!(
            SweepGrid::default()
                .configs(&TrainConfig::default())
                .unwrap()
                .len(),
            576
        );
        let empty = SweepGrid {
            alpha: vec![],
            ..SweepGrid::default()
        };
        assert!(empty.configs(&TrainConfig::default()).is_err());
    }

    #[test]
    fn mean_std_sample() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }

    #[test]
    fn single_point_sweep_matches_train() {
        let g = generate(&SyntheticConfig::small(), 1).unwrap();
        let cfg = quick();
        let rep = run_sweep(
            &g,
            &SweepGrid::single(&cfg),
            &cfg,
            ModelKind::GraphMlp,
            1,
            2,
        )
        .unwrap();
        let direct = train(&g, &cfg, ModelKind::GraphMlp).unwrap();
        assert_eq!(rep.ranked.len(), 1);
        assert_eq!(rep.ranked[0].val_accs, vec![direct.best_val_acc]);
        assert_eq!(rep.best_test_accs, vec![direct.test_acc_at_best.unwrap()]);
    }

    #[test]
    fn sweep_is_independent_of_thread_count() {
        let g = generate(&SyntheticConfig::small(), 2).unwrap();
        let grid = SweepGrid {
            lr: vec![0.01, 0.05],
            alpha: vec![0.0, 1.0],
            ..SweepGrid::single(&quick())
        };
        let a = run_sweep(&g, &grid, &quick(), ModelKind::GraphMlp, 2, 1).unwrap();
        let b = run_sweep(&g, &grid, &quick(), ModelKind::GraphMlp, 2, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.ranked.windows(2).all(|w| w[0].mean_val >= w[1].mean_val));
    }

    #[test]
    fn embeddings_have_one_row_per_node() {
        let x = Tensor2::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        let splits = Splits {
            train: vec![0],
            val: vec![1],
            test: vec![2],
        };
        let g = Graph::new(x, vec![Some(0), Some(1), None], 2, vec![(0, 1)], splits).unwrap();
        let cfg = TrainConfig {
            hidden: 4,
            ..quick()
        };
        let mut model = Model::new(
            ModelKind::GraphMlp,
            crate::nn::ModelDims {
                input: 2,
                hidden: 4,
                classes: 2,
            },
            0.6,
            true,
        )
        .unwrap();
        model.init_params(&mut Rng::new(3));
        let tsv = export_embeddings(&model, &g, &cfg).unwrap();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 4);
        for (i, line) in lines[1..].iter().enumerate() {
            let cols: Vec<&str> = line.split('\t').collect();
            assert_eq!(cols.len(), 4 + 2);
            assert_eq!(cols[0], i.to_string());
        }
        assert!(lines[3].starts_with("2\t-1\t"));
        assert_eq!(tsv, export_embeddings(&model, &g, &cfg).unwrap());
    }

    #[test]
    fn corruption_leaves_graphmlp_predictions_untouched() {
        let g = generate(&SyntheticConfig::small(), 3).unwrap();
        let reps = run_corruption(&g, &quick(), &[0.0, 0.01, 0.1], 2).unwrap();
        assert_eq!(reps.len(), 6);
        let clean_gcn = reps
            .iter()
            .find(|r| r.kind == ModelKind::Gcn && r.delta == 0.0)
            .unwrap();
        for r in &reps {
            assert_eq!(r.run_accs.len(), 2);
            if r.kind == ModelKind::GraphMlp {
                assert_eq!(r.predictions_identical, Some(true));
            }
        }
        // δ = 0 reproduces the clean evaluation.
        let x = prepare_features(&g, &quick());
        let res = train(&g, &quick(), ModelKind::Gcn).unwrap();
        let a_hat = normalize_adjacency(&g.adjacency());
        assert_eq!(
            clean_gcn.run_accs[0],
            res.best_model
                .evaluate(&g, &x, Some(&a_hat), SplitKind::Test)
                .unwrap()
        );
    }

    #[test]
    fn curve_csv_layout() {
        let log = vec![
            LogEntry {
                iter: 1,
                loss_nc: 0.0,
                loss_ce: 1.0,
                loss_final: 1.0,
                val_acc: Some(0.5),
                elapsed_ms: 2.0,
            },
            LogEntry {
                iter: 2,
                loss_nc: 0.0,
                loss_ce: 1.0,
                loss_final: 1.0,
                val_acc: None,
                elapsed_ms: 3.0,
            },
        ];
        assert_eq!(
            curve_csv(&curve_from_log(&log)),
            "iteration,wall_ms,val_acc\n1,2,0.5\n"
        );
    }
}
