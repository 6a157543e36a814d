use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use graphmlp::checkpoint::Checkpoint;
use graphmlp::experiments::{
    curve_csv, curve_from_log, export_embeddings, run_accuracy_table, run_sweep, run_timing,
    worker_count, SweepGrid,
};
use graphmlp::ingest::synthetic::{self, SyntheticConfig};
use graphmlp::ingest::{
    load_canonical, load_linqs_content_cites, load_pubmed_tab, make_planetoid_splits,
    save_canonical, DatasetName, DatasetSpec, LoadReport,
};
use graphmlp::train::prepare_features;
use graphmlp::{Error, ErrorKind, Graph, Model, ModelKind, Result, Rng, SplitKind, TrainConfig};

#[derive(Parser)]
#[command(
    name = "graphmlp",
    version,
    about = "Graph-MLP and GCN node classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw corpus (or generate a synthetic one) into a canonical dataset directory.
    Ingest(IngestArgs),
    /// Train one model and write its log, summary and best checkpoint.
    Train(TrainArgs),
    /// Accuracy of a checkpoint on one split.
    Eval(EvalArgs),
    /// Test accuracy of a checkpoint under random adjacency corruption.
    CorruptEval(CorruptArgs),
    /// Inference timing of Graph-MLP against GCN.
    Bench(BenchArgs),
    /// Grid search ranked by validation accuracy.
    Sweep(SweepArgs),
    /// Export the Graph-MLP embedding of every node as TSV.
    Embed(EmbedArgs),
    /// Mean test accuracy of Graph-MLP and MLP over several seeds.
    Table(TableArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SourceFormat {
    Linqs,
    Pubmed,
    Synthetic,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long, value_enum)]
    format: SourceFormat,
    /// cora, citeseer, pubmed or custom; named datasets are checked against their known sizes.
    #[arg(long, default_value = "custom")]
    name: String,
    /// LINQS `.content` file.
    #[arg(long)]
    content: Option<PathBuf>,
    /// Pubmed `NODE.paper.tab` file.
    #[arg(long)]
    nodes: Option<PathBuf>,
    /// Citation file for either format.
    #[arg(long)]
    cites: Option<PathBuf>,
    /// Synthetic preset: cora-like, citeseer-like, pubmed-like or small.
    #[arg(long, default_value = "small")]
    preset: String,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    #[arg(long)]
    per_class_train: Option<usize>,
    #[arg(long)]
    num_val: Option<usize>,
    #[arg(long)]
    num_test: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

/// Training flags; unset flags fall back to `--config`, then to defaults.
#[derive(Args, Default, Clone)]
struct TrainFlags {
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    use_bias: Option<bool>,
    #[arg(long)]
    decay_norm_and_bias: Option<bool>,
    #[arg(long)]
    row_normalize: Option<bool>,
    /// Zero wall-clock fields so outputs are reproducible byte for byte.
    #[arg(long)]
    deterministic: bool,
}

impl TrainFlags {
    fn apply(&self, mut c: TrainConfig) -> TrainConfig {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { c.$f = v; } )* };
        }
        set!(
            batch_size,
            alpha,
            tau,
            r,
            iterations,
            lr,
            weight_decay,
            hidden,
            dropout,
            seed,
            eval_every,
            use_bias,
            decay_norm_and_bias,
            row_normalize
        );
        if self.deterministic {
            c.deterministic = true;
        }
        c
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Canonical dataset directory.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    /// A `config.json` written by an earlier `train` run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint file.
    #[arg(long)]
    model: PathBuf,
    /// Defaults to the dataset recorded next to the checkpoint.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: SplitKind,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CorruptArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Corruption ratio; repeat for several.
    #[arg(long = "delta", required = true)]
    deltas: Vec<f64>,
    /// Independent corruption draws per ratio.
    #[arg(long, default_value_t = 3)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// One or more canonical dataset directories.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "graphmlp")]
    model: ModelKind,
    /// Search the full 576-point grid instead of the reduced one.
    #[arg(long)]
    full_grid: bool,
    /// JSON file with the grid axes; overrides --full-grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Worker threads; defaults to GRAPHMLP_THREADS or the core count.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[command(flatten)]
    flags: TrainFlags,
    #[arg(long)]
    out: PathBuf,
}

/// What `train` records in `config.json`.
#[derive(Serialize, Deserialize)]
struct RunConfig {
    command: String,
    dataset: PathBuf,
    model: ModelKind,
    train: TrainConfig,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Numeric => 3,
            };
            eprintln!("error: {e}");
            ExitCode::from(code)
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::CorruptEval(a) => corrupt_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Embed(a) => embed_cmd(a),
        Command::Table(a) => table_cmd(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn required(path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    path.clone()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for this format")))
}

fn ingest(a: IngestArgs) -> Result<()> {
    let name: DatasetName = a.name.parse()?;
    let spec = DatasetSpec::named(name);
    let (g, report) = match a.format {
        SourceFormat::Linqs => load_linqs_content_cites(
            &required(&a.content, "content")?,
            &required(&a.cites, "cites")?,
        )?,
        SourceFormat::Pubmed => {
            load_pubmed_tab(&required(&a.nodes, "nodes")?, &required(&a.cites, "cites")?)?
        }
        SourceFormat::Synthetic => {
            let cfg = SyntheticConfig::preset(&a.preset)?;
            (
                synthetic::generate(&cfg, a.split_seed)?,
                LoadReport::default(),
            )
        }
    };
    if let (Some(spec), false) = (spec, matches!(a.format, SourceFormat::Synthetic)) {
        spec.validate(&g, &report)?;
    }
    let g = if matches!(a.format, SourceFormat::Synthetic) && a.per_class_train.is_none() {
        g
    } else {
        let per_class = a
            .per_class_train
            .or(spec.map(|s| s.per_class_train))
            .unwrap_or(20);
        let num_val = a.num_val.unwrap_or(DatasetSpec::NUM_VAL);
        let num_test = a.num_test.unwrap_or(DatasetSpec::NUM_TEST);
        let splits = make_planetoid_splits(
            &g,
            per_class,
            num_val,
            num_test,
            &mut Rng::new(a.split_seed),
        )?;
        g.with_splits(splits)?
    };
    let meta = save_canonical(&g, &a.name, &a.out)?;
    write_json(
        &a.out.join("ingest_report.json"),
        &json!({ "load": report, "meta": meta }),
    )?;
    eprintln!(
        "{}: {} nodes, {} features, {} classes, {} edges; splits {}/{}/{}",
        a.name,
        meta.n,
        meta.d,
        meta.num_classes,
        meta.num_edges,
        meta.num_train,
        meta.num_val,
        meta.num_test
    );
    Ok(())
}

fn load_dataset(dir: &Path) -> Result<Graph> {
    Ok(load_canonical(dir)?.0)
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let base: Option<RunConfig> = a.config.as_deref().map(read_json).transpose()?;
    let dataset = a
        .dataset
        .clone()
        .or_else(|| base.as_ref().map(|b| b.dataset.clone()))
        .ok_or_else(|| Error::InvalidArgument("--dataset is required".into()))?;
    let model = a
        .model
        .or(base.as_ref().map(|b| b.model))
        .unwrap_or(ModelKind::GraphMlp);
    let mut cfg = a.flags.apply(base.map(|b| b.train).unwrap_or_default());
    if model == ModelKind::Mlp {
        cfg.alpha = 0.0;
    }
    cfg.validate()?;
    let g = load_dataset(&dataset)?;

    create_dir(&a.out)?;
    let resolved = RunConfig {
        command: "train".into(),
        dataset,
        model,
        train: cfg.clone(),
    };
    write_json(&a.out.join("config.json"), &resolved)?;

    let res = graphmlp::train(&g, &cfg, model)?;
    write_file(&a.out.join("log.jsonl"), &res.log_jsonl()?)?;
    write_file(
        &a.out.join("curve.csv"),
        &curve_csv(&curve_from_log(&res.log)),
    )?;
    let ck = Checkpoint {
        kind: model,
        model: res.best_model.clone(),
        optimizer: Some(res.best_optimizer.clone()),
    };
    ck.save(&a.out.join("best.ckpt"))?;
    write_json(&a.out.join("result.json"), &res.summary())?;
    match res.test_acc_at_best {
        Some(t) => eprintln!(
            "{model}: best val {:.4} at iteration {}, test {:.4}",
            res.best_val_acc, res.best_iter, t
        ),
        None => eprintln!(
            "{model}: best val {:.4} at iteration {}",
            res.best_val_acc, res.best_iter
        ),
    }
    Ok(())
}

/// Checkpoint plus the dataset and training config it was produced with.
fn load_model_context(
    ckpt: &Path,
    dataset: Option<PathBuf>,
) -> Result<(Checkpoint, Graph, TrainConfig, PathBuf)> {
    let ck = Checkpoint::load(ckpt)?;
    let side = ckpt.parent().unwrap_or(Path::new(".")).join("config.json");
    let recorded: Option<RunConfig> = if side.exists() {
        Some(read_json(&side)?)
    } else {
        None
    };
    let dataset = dataset
        .or_else(|| recorded.as_ref().map(|r| r.dataset.clone()))
        .ok_or_else(|| {
            Error::InvalidArgument(
                "--dataset is required (no config.json next to the checkpoint)".into(),
            )
        })?;
    let cfg = recorded.map(|r| r.train).unwrap_or_default();
    let g = load_dataset(&dataset)?;
    if g.d() != ck.model.dims().input || g.num_classes() != ck.model.dims().classes {
        return Err(Error::Data(format!(
            "checkpoint expects {} features and {} classes; dataset has {} and {}",
            ck.model.dims().input,
            ck.model.dims().classes,
            g.d(),
            g.num_classes()
        )));
    }
    Ok((ck, g, cfg, dataset))
}

fn out_dir_for(out: Option<PathBuf>, ckpt: &Path) -> PathBuf {
    out.unwrap_or_else(|| ckpt.parent().unwrap_or(Path::new(".")).to_path_buf())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let (ck, g, cfg, dataset) = load_model_context(&a.model, a.dataset)?;
    let acc = graphmlp::experiments::evaluate_split(&ck.model, &g, &cfg, a.split)?;
    let out = out_dir_for(a.out, &a.model);
    create_dir(&out)?;
    let report = json!({
        "checkpoint": a.model,
        "dataset": dataset,
        "kind": ck.kind,
        "split": a.split.name(),
        "nodes": g.splits().get(a.split).len(),
        "accuracy": acc,
    });
    write_json(&out.join(format!("eval_{}.json", a.split.name())), &report)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}

fn corrupt_cmd(a: CorruptArgs) -> Result<()> {
    if a.runs == 0 {
        return Err(Error::InvalidArgument("--runs must be at least 1".into()));
    }
    let (ck, g, cfg, dataset) = load_model_context(&a.model, a.dataset)?;
    let x = prepare_features(&g, &cfg);
    let test = &g.splits().test;
    let clean = ck.model.predict_classes(&x, None, test).ok();
    let mut reports = Vec::new();
    for &delta in &a.deltas {
        let mut accs = Vec::with_capacity(a.runs);
        let mut identical = true;
        for k in 0..a.runs {
            let mut rng = Rng::new(graphmlp::experiments::corruption_seed(a.seed, k, delta));
            let (pred, acc) =
                graphmlp::experiments::evaluate_corrupted(&g, &x, &ck.model, delta, &mut rng)?;
            if let Some(c) = &clean {
                identical &= *c == pred;
            }
            accs.push(acc);
        }
        let (mean, std) = graphmlp::experiments::mean_std(&accs);
        reports.push(json!({
            "delta": delta,
            "kind": ck.kind,
            "run_accs": accs,
            "mean": mean,
            "std": std,
            "predictions_identical": matches!(ck.model, Model::GraphMlp(_)).then_some(identical),
        }));
    }
    let out = out_dir_for(a.out, &a.model);
    create_dir(&out)?;
    let body =
        json!({ "checkpoint": a.model, "dataset": dataset, "seed": a.seed, "reports": reports });
    write_json(&out.join("corruption.json"), &body)?;
    println!("{}", serde_json::to_string(&body)?);
    Ok(())
}

fn dataset_label(dir: &Path) -> String {
    dir.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let cfg = a.flags.apply(TrainConfig::default());
    cfg.validate()?;
    create_dir(&a.out)?;
    write_json(
        &a.out.join("config.json"),
        &json!({ "command": "bench", "datasets": a.datasets, "reps": a.reps, "train": cfg }),
    )?;
    let mut reports = Vec::new();
    for dir in &a.datasets {
        let g = load_dataset(dir)?;
        let name = dataset_label(dir);
        let rep = run_timing(&name, &g, &cfg, a.reps)?;
        write_file(
            &a.out.join(format!("{name}_graphmlp_curve.csv")),
            &curve_csv(&rep.graphmlp_curve),
        )?;
        write_file(
            &a.out.join(format!("{name}_gcn_curve.csv")),
            &curve_csv(&rep.gcn_curve),
        )?;
        eprintln!(
            "{name}: graphmlp {:.6} s, gcn {:.6} s ({:.1}x)",
            rep.graphmlp_infer_s, rep.gcn_infer_s, rep.speedup
        );
        reports.push(rep);
    }
    write_json(&a.out.join("timing.json"), &reports)
}

fn sweep_cmd(a: SweepArgs) -> Result<()> {
    let base = a.flags.apply(TrainConfig::default());
    let grid: SweepGrid = match &a.grid {
        Some(p) => read_json(p)?,
        None if a.full_grid => SweepGrid::default(),
        None => SweepGrid::reduced(),
    };
    let threads = worker_count(a.threads);
    let g = load_dataset(&a.dataset)?;
    create_dir(&a.out)?;
    write_json(
        &a.out.join("config.json"),
        &json!({ "command": "sweep", "dataset": a.dataset, "model": a.model, "grid": grid, "seeds": a.seeds, "threads": threads, "train": base }),
    )?;
    let rep = run_sweep(&g, &grid, &base, a.model, a.seeds, threads)?;
    write_json(&a.out.join("sweep.json"), &rep)?;
    let best = &rep.ranked[0];
    eprintln!(
        "best of {} configs: mean val {:.4}, test {:.4} ± {:.4} (lr {}, wd {}, B {}, tau {}, r {}, alpha {})",
        rep.ranked.len(),
        best.mean_val,
        rep.best_test_mean,
        rep.best_test_std,
        best.config.lr,
        best.config.weight_decay,
        best.config.batch_size,
        best.config.tau,
        best.config.r,
        best.config.alpha
    );
    Ok(())
}

fn embed_cmd(a: EmbedArgs) -> Result<()> {
    let (ck, g, cfg, _) = load_model_context(&a.model, a.dataset)?;
    let tsv = export_embeddings(&ck.model, &g, &cfg)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_file(&a.out, &tsv)
}

fn table_cmd(a: TableArgs) -> Result<()> {
    let cfg = a.flags.apply(TrainConfig::default());
    cfg.validate()?;
    let graphs = a
        .datasets
        .iter()
        .map(|d| load_dataset(d))
        .collect::<Result<Vec<_>>>()?;
    let names: Vec<String> = a.datasets.iter().map(|d| dataset_label(d)).collect();
    let pairs: Vec<(&str, &Graph)> = names
        .iter()
        .map(String::as_str)
        .zip(graphs.iter())
        .collect();
    create_dir(&a.out)?;
    write_json(
        &a.out.join("config.json"),
        &json!({ "command": "table", "datasets": a.datasets, "seeds": a.seeds, "train": cfg }),
    )?;
    let rows = run_accuracy_table(&pairs, &cfg, a.seeds)?;
    for r in &rows {
        eprintln!(
            "{:<12} {:<9} {:.2} ± {:.2}",
            r.dataset,
            r.kind.name(),
            100.0 * r.mean,
            100.0 * r.std
        );
    }
    write_json(&a.out.join("accuracy.json"), &rows)
}
