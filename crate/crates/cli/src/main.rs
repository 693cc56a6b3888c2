//! `spin`: precompute, train, cross-validate, WL testing, discriminative-power
//! demos and the edge-independence benchmark.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::fmt;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use spin_core::bench::{bench_edge_independence, BenchConfig};
use spin_core::data::{
    build_features, default_scheme, load_tu_dataset, precompute_dataset, read_bank_cache, stratified_kfold,
    write_bank_cache, DataError, FeatureScheme,
};
use spin_core::graph::edgelist::parse_edge_list;
use spin_core::graph::{Graph, OperatorKind};
use spin_core::kv;
use spin_core::lab::{
    attention_injectivity_probe, l2_norm, regular_readout_demo, single_layer_collision_demo, wl_power_experiment,
    LemmaReport,
};
use spin_core::model::{PrecomputedGraph, Readout, SpinConfig, SpinParams};
use spin_core::nn::{rng_from_seed, Activation};
use spin_core::train::{cross_validate, evaluate, table_grid, train_model, TrainConfig, TrainError};
use spin_core::wl::{wl_distinguish, WlVerdict};

#[derive(Debug, Parser)]
#[command(
    name = "spin",
    version,
    about = "Parallel neighborhood-aggregation graph classification"
)]
struct Cli {
    /// Seed for every random choice (splits, initialization, shuffling, sampling).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run on a single thread; outputs are then byte-identical across runs.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// `key = value` file with model and training settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build features, compute the operator-power banks and write them to a cache file.
    Precompute(PrecomputeArgs),
    /// Train on one stratified split, report test accuracy and save a checkpoint.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation with optional grid selection.
    Cv(CvArgs),
    /// Compare two edge-list graphs with 1-WL refinement.
    WlTest(WlArgs),
    /// Counterexample and injectivity demos for readouts and transforms.
    Lemmas(LemmaArgs),
    /// Compare model separation against 1-WL on random graph pairs.
    Power(PowerArgs),
    /// Time training epochs on sparse and dense synthetic graphs.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Corpus name, e.g. PROTEINS; files are `<NAME>_A.txt` and friends.
    #[arg(long)]
    dataset: String,
    /// Directory holding the corpus files, or a parent with a `<NAME>/` subdirectory.
    #[arg(long, default_value = "data")]
    dir: PathBuf,
    /// Input features: node-label, degree or attributes [default: by corpus].
    #[arg(long)]
    features: Option<FeatureScheme>,
    /// Read banks from this cache instead of the corpus files.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Largest operator power R; the model has R+1 branches.
    #[arg(long = "R", id = "R")]
    r: Option<usize>,
    /// Aggregation operator: adjacency, normalized or normalized-plus-adjacency.
    #[arg(long)]
    operator: Option<OperatorKind>,
    /// Width of the branch MLPs and of the classifier's hidden layers.
    #[arg(long)]
    hidden: Option<usize>,
    /// Attention-weighted branch readout.
    #[arg(long)]
    attention: Option<Toggle>,
    /// Branch readout: sum, mean or max.
    #[arg(long)]
    readout: Option<Readout>,
    /// Dropout rate on branch outputs and on the graph embedding.
    #[arg(long)]
    dropout: Option<f64>,
}

#[derive(Debug, Args)]
struct OptimArgs {
    /// Graphs per minibatch.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Maximum number of epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Epochs without validation progress before stopping.
    #[arg(long)]
    patience: Option<usize>,
    /// L2 penalty on all parameters.
    #[arg(long)]
    l2: Option<f64>,
}

#[derive(Debug, Args)]
struct PrecomputeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Largest operator power to precompute.
    #[arg(long = "R", default_value_t = 3)]
    r: usize,
    /// Aggregation operator: adjacency, normalized or normalized-plus-adjacency.
    #[arg(long, default_value_t = OperatorKind::NormalizedAdjacency)]
    operator: OperatorKind,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// The split is fold 0 of a stratified k-fold plan.
    #[arg(long, default_value_t = 10)]
    folds: usize,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    optim: OptimArgs,
    /// Number of stratified folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Retrainings of the selected configuration per fold.
    #[arg(long)]
    repeats: Option<usize>,
    /// Select hyperparameters per fold from the corpus's published grid.
    #[arg(long)]
    grid: bool,
    /// Also report AUROC (two-class corpora only).
    #[arg(long)]
    auroc: bool,
}

#[derive(Debug, Args)]
struct WlArgs {
    /// First graph: header `N M`, then M lines `u v`, 0-indexed.
    #[arg(long)]
    g1: PathBuf,
    /// Second graph, same format.
    #[arg(long)]
    g2: PathBuf,
    /// Refinement rounds [default: larger node count].
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Debug, Args)]
struct LemmaArgs {
    /// Which demo to run: 1, 2 or 3 [default: all].
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    which: Option<u8>,
    /// Node count of the first circulant graph of demo 3.
    #[arg(long, default_value_t = 6)]
    n1: usize,
    /// Node count of the second circulant graph of demo 3.
    #[arg(long, default_value_t = 3)]
    n2: usize,
    /// Common degree of the circulant graphs of demo 3 (even).
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Random scalar weights for demo 1.
    #[arg(long, default_value_t = 100)]
    weights: usize,
    /// Random trials of the probe in demo 2.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Vector width of the probe in demo 2.
    #[arg(long, default_value_t = 8)]
    dim: usize,
}

#[derive(Debug, Args)]
struct PowerArgs {
    /// WL-distinguished pairs to test.
    #[arg(long, default_value_t = 500)]
    pairs: usize,
    /// Largest graph size sampled (2 to 8).
    #[arg(long, default_value_t = 8)]
    max_nodes: usize,
    /// Embeddings further apart than this (infinity norm) count as separated.
    #[arg(long, default_value_t = 1e-6)]
    tau: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Nodes per synthetic graph.
    #[arg(long, default_value_t = 200)]
    nodes: usize,
    /// Node feature width.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Largest operator power.
    #[arg(long = "R", default_value_t = 3)]
    r: usize,
    /// Comma-separated edge probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.5")]
    densities: Vec<f64>,
    /// Timed epochs per density after one warm-up epoch.
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    /// Graphs per density.
    #[arg(long, default_value_t = 32)]
    graphs: usize,
    /// Hidden width of the model.
    #[arg(long, default_value_t = 16)]
    hidden: usize,
}

enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFiniteLoss { .. } => CliError::Numerical(e.to_string()),
            TrainError::Mismatch { .. } | TrainError::EmptySet => CliError::Data(e.to_string()),
            TrainError::AurocMulticlass(_) | TrainError::InvalidConfig(_) => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn write_output(out: &Path, file: &str, contents: &str) -> CliResult {
    fs::create_dir_all(out).map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
    let path = out.join(file);
    fs::write(&path, contents).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Settings after applying defaults, then the `--config` file, then flags.
struct Settings {
    model: SpinConfig,
    train: TrainConfig,
}

impl Settings {
    fn load(cli: &Cli) -> CliResult<Self> {
        let mut model = SpinConfig::default();
        let mut train = TrainConfig::default();
        if let Some(path) = &cli.config {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            let pairs = kv::parse(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            for (key, value) in pairs {
                let owned = model.set(&key, &value).map_err(|e| CliError::Usage(e.to_string()))?
                    || train.set(&key, &value).map_err(CliError::Usage)?;
                if !owned {
                    return Err(CliError::Usage(format!("unknown config key `{key}`")));
                }
            }
        }
        if let Some(seed) = cli.seed {
            train.seed = seed;
        }
        Ok(Self { model, train })
    }

    fn apply(&mut self, m: &ModelArgs, o: &OptimArgs) {
        let c = &mut self.model;
        if let Some(r) = m.r {
            c.r = r;
        }
        if let Some(op) = m.operator {
            c.operator = op;
        }
        if let Some(h) = m.hidden {
            c.hidden_dim = h;
        }
        if let Some(a) = m.attention {
            c.attention = a == Toggle::On;
        }
        if let Some(ro) = m.readout {
            c.readout = ro;
        }
        if let Some(d) = m.dropout {
            c.dropout = d;
        }
        let t = &mut self.train;
        if let Some(b) = o.batch_size {
            t.batch_size = b;
        }
        if let Some(lr) = o.lr {
            t.learning_rate = lr;
        }
        if let Some(e) = o.epochs {
            t.max_epochs = e;
        }
        if let Some(p) = o.patience {
            t.patience = p;
        }
        if let Some(l2) = o.l2 {
            t.l2 = l2;
        }
    }
}

/// `dir/NAME` when it holds the corpus, otherwise `dir` itself.
fn corpus_dir(dir: &Path, name: &str) -> PathBuf {
    let nested = dir.join(name);
    if nested.join(format!("{name}_A.txt")).is_file() {
        nested
    } else {
        dir.to_path_buf()
    }
}

struct Banks {
    graphs: Vec<PrecomputedGraph>,
    num_classes: usize,
}

fn load_banks(data: &DataArgs, kind: OperatorKind, r: usize) -> CliResult<Banks> {
    if let Some(path) = &data.cache {
        let file = fs::File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
        let graphs = read_bank_cache(BufReader::new(file))?;
        if let Some(g) = graphs.first() {
            if g.bank.max_power() < r {
                return Err(CliError::Data(format!(
                    "cache holds powers up to {}, the model needs {r}",
                    g.bank.max_power()
                )));
            }
        }
        let num_classes = graphs.iter().map(|g| g.label + 1).max().unwrap_or(0);
        return Ok(Banks { graphs, num_classes });
    }
    let ds = load_tu_dataset(&corpus_dir(&data.dir, &data.dataset), &data.dataset)?;
    let scheme = data.features.unwrap_or_else(|| default_scheme(&ds));
    let ds = build_features(ds, scheme)?;
    let graphs = precompute_dataset(&ds, kind, r)?;
    Ok(Banks {
        graphs,
        num_classes: ds.num_classes,
    })
}

fn model_for(settings: &Settings, banks: &Banks) -> CliResult<SpinConfig> {
    let first = banks
        .graphs
        .first()
        .ok_or_else(|| CliError::Data("dataset is empty".into()))?;
    let cfg = SpinConfig {
        input_dim: first.bank.feature_dim(),
        num_classes: banks.num_classes.max(2),
        ..settings.model.clone()
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn labels_of(graphs: &[PrecomputedGraph]) -> Vec<usize> {
    graphs.iter().map(|g| g.label).collect()
}

fn pick(graphs: &[PrecomputedGraph], idx: &[usize]) -> Vec<PrecomputedGraph> {
    idx.iter().map(|&i| graphs[i].clone()).collect()
}

fn run_precompute(cli: &Cli, a: &PrecomputeArgs) -> CliResult {
    let banks = load_banks(&a.data, a.operator, a.r)?;
    let file = format!("{}.r{}.bank", a.data.dataset, a.r);
    fs::create_dir_all(&cli.out).map_err(|e| CliError::Data(e.to_string()))?;
    let path = cli.out.join(&file);
    let f = fs::File::create(&path).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
    write_bank_cache(BufWriter::new(f), &banks.graphs)?;
    let d = banks.graphs.first().map_or(0, |g| g.bank.feature_dim());
    println!(
        "{} graphs, {} classes, feature width {d}, powers 0..={} ({}) -> {}",
        banks.graphs.len(),
        banks.num_classes,
        a.r,
        a.operator,
        path.display()
    );
    Ok(())
}

fn run_train(cli: &Cli, a: &TrainArgs) -> CliResult {
    let mut s = Settings::load(cli)?;
    s.apply(&a.model, &a.optim);
    let banks = load_banks(&a.data, s.model.operator, s.model.r)?;
    let cfg = model_for(&s, &banks)?;
    let plan = stratified_kfold(&labels_of(&banks.graphs), a.folds, s.train.seed)?;
    let fold = &plan.folds[0];
    let (train, val, test) = (
        pick(&banks.graphs, &fold.train),
        pick(&banks.graphs, &fold.validation),
        pick(&banks.graphs, &fold.test),
    );
    let params = SpinParams::init(&cfg, &mut rng_from_seed(s.train.seed));
    let out = train_model(&cfg, params, &train, &val, &s.train)?;
    let metrics = evaluate(&out.params, &cfg, &test, false)?;

    let mut curve = String::from("epoch,train_loss,val_accuracy\n");
    for e in &out.curve {
        curve.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, e.val_accuracy));
    }
    let name = &a.data.dataset;
    write_output(&cli.out, &format!("{name}.curve.csv"), &curve)?;
    let mut ckpt = Vec::new();
    out.params
        .save(&cfg, &mut ckpt)
        .map_err(|e| CliError::Data(format!("checkpoint: {e}")))?;
    fs::write(cli.out.join(format!("{name}.ckpt")), ckpt).map_err(|e| CliError::Data(e.to_string()))?;
    println!(
        "best epoch {} (validation accuracy {:.4}), test accuracy {:.4} on {} graphs",
        out.best_epoch,
        out.best_val_accuracy,
        metrics.accuracy,
        test.len()
    );
    Ok(())
}

fn run_cv(cli: &Cli, a: &CvArgs) -> CliResult {
    let mut s = Settings::load(cli)?;
    s.apply(&a.model, &a.optim);
    if let Some(r) = a.repeats {
        s.train.repeats_per_fold = r;
    }
    let grid = if a.grid {
        let g = table_grid(&a.data.dataset)
            .ok_or_else(|| CliError::Usage(format!("no published grid for {}", a.data.dataset)))?;
        Some(g)
    } else {
        None
    };
    let r_max = grid
        .as_ref()
        .map_or(s.model.r, |g| g.iter().map(|c| c.r).max().unwrap_or(s.model.r));
    let banks = load_banks(&a.data, s.model.operator, r_max)?;
    let cfg = model_for(&s, &banks)?;
    let plan = stratified_kfold(&labels_of(&banks.graphs), a.folds, s.train.seed)?;
    let res = cross_validate(&banks.graphs, &plan, &cfg, &s.train, grid.as_deref(), a.auroc)?;
    let name = &a.data.dataset;
    let csv = res.to_csv();
    write_output(&cli.out, &format!("{name}.cv.csv"), &csv)?;
    write_output(&cli.out, &format!("{name}.curves.csv"), &res.curves_csv())?;
    write_output(&cli.out, &format!("{name}.folds.json"), &plan.to_json())?;
    print!("{csv}");
    println!("{}", res.summary());
    Ok(())
}

fn read_graph(path: &Path) -> CliResult<Graph> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_edge_list(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn run_wl(a: &WlArgs) -> CliResult {
    let g1 = read_graph(&a.g1)?;
    let g2 = read_graph(&a.g2)?;
    match wl_distinguish(&g1, &g2, a.max_iters, false) {
        WlVerdict::Distinguished(t) => println!("distinguished at iteration {t}"),
        WlVerdict::PossiblyIsomorphic => println!("possibly isomorphic"),
    }
    Ok(())
}

fn report(out: &Path, file: &str, reports: &[LemmaReport]) -> CliResult {
    let mut csv = String::new();
    for (i, r) in reports.iter().enumerate() {
        let body = r.to_csv();
        csv.push_str(if i == 0 {
            &body
        } else {
            body.split_once('\n').map_or("", |x| x.1)
        });
        let case = match &r.witnesses[..] {
            [only] => format!(" [{}]", only.case),
            _ => String::new(),
        };
        println!("{}{case}{}", r.summary(), if r.passed() { "" } else { " (FAILED)" });
    }
    write_output(out, file, &csv)
}

fn run_lemmas(cli: &Cli, a: &LemmaArgs) -> CliResult {
    let seed = cli.seed.unwrap_or(0);
    let runs = |n: u8| a.which.is_none_or(|w| w == n);
    if runs(1) {
        let mut rng = rng_from_seed(seed);
        let ws: Vec<Vec<f64>> = (0..a.weights).map(|_| vec![rng.gen_range(-10.0..10.0)]).collect();
        let reps = [
            single_layer_collision_demo(&ws, Activation::Relu),
            single_layer_collision_demo(&ws, Activation::LeakyRelu(0.01)),
        ];
        println!("lemma 1: weighted ReLU and LeakyReLU sums of {{2,1,4}} and {{6,4}} collide");
        report(&cli.out, "lemma1.csv", &reps)?;
    }
    if runs(2) {
        if a.trials == 0 || a.dim == 0 {
            return Err(CliError::Usage("--trials and --dim must be positive".into()));
        }
        println!("lemma 2: attention-weighted node outputs stay distinct");
        report(
            &cli.out,
            "lemma2.csv",
            &[attention_injectivity_probe(a.trials, a.dim, seed)],
        )?;
    }
    if runs(3) {
        let demo = |ro| regular_readout_demo(a.n1, a.n2, a.k, ro, seed).map_err(|e| CliError::Usage(e.to_string()));
        let reps = [demo(Readout::Mean)?, demo(Readout::Max)?, demo(Readout::Sum)?];
        println!(
            "lemma 3: {}-regular graphs on {} and {} nodes collide under mean and max, separate under sum",
            a.k, a.n1, a.n2
        );
        let sum = &reps[2].witnesses[0];
        println!(
            "sum readout embedding-norm ratio {:.12}",
            l2_norm(&sum.left) / l2_norm(&sum.right)
        );
        report(&cli.out, "lemma3.csv", &reps)?;
    }
    Ok(())
}

fn run_power(cli: &Cli, a: &PowerArgs) -> CliResult {
    let rep = wl_power_experiment(a.pairs, a.max_nodes, a.tau, cli.seed.unwrap_or(0))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let csv = rep.to_csv();
    write_output(&cli.out, "power.csv", &csv)?;
    print!("{csv}");
    println!("{}", rep.summary());
    Ok(())
}

fn run_bench(cli: &Cli, a: &BenchArgs) -> CliResult {
    if a.densities.is_empty() || a.densities.iter().any(|d| !(0.0..=1.0).contains(d)) {
        return Err(CliError::Usage("densities must lie in [0, 1]".into()));
    }
    if a.nodes == 0 || a.dim == 0 || a.graphs == 0 || a.epochs == 0 {
        return Err(CliError::Usage(
            "--nodes, --dim, --graphs and --epochs must be positive".into(),
        ));
    }
    let bc = BenchConfig {
        nodes: a.nodes,
        feature_dim: a.dim,
        r: a.r,
        densities: a.densities.clone(),
        epochs: a.epochs,
        graphs_per_set: a.graphs,
        hidden_dim: a.hidden,
        seed: cli.seed.unwrap_or(0),
        ..BenchConfig::default()
    };
    let rep = bench_edge_independence(&bc);
    let csv = rep.to_csv();
    write_output(&cli.out, "bench.csv", &csv)?;
    print!("{csv}");
    println!("{}", rep.summary());
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    let threads = if cli.deterministic { Some(1) } else { cli.threads };
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Precompute(a) => run_precompute(cli, a),
        Command::Train(a) => run_train(cli, a),
        Command::Cv(a) => run_cv(cli, a),
        Command::WlTest(a) => run_wl(a),
        Command::Lemmas(a) => run_lemmas(cli, a),
        Command::Power(a) => run_power(cli, a),
        Command::Bench(a) => run_bench(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
