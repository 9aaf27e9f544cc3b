mod layout;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use lvp::harness::{self, Protocol, RunState, Setting, Variant};
use lvp::it_trainer::ITTrainConfig;
use lvp::linear_head::{self, HeadTrainConfig, LinearClassifier};
use lvp::pool_builder::{self, MergePolicy};
use lvp::similarity::{self, SimilarityKind, SoftmaxConfig};
use lvp::storage::{self, EmbeddingSet};
use lvp::synth::{self, DomainSpec, SynthSpec};
use lvp::{EvalReport, LvpError, Modality, Pool, Record, TaskSpec};

use layout::Layout;

#[derive(Parser, Debug)]
#[command(
    name = "lvp",
    version,
    about = "Label vector pools for continual learning on frozen embeddings",
    arg_required_else_help = true
)]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads. Changes wall time only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Similarity for search (l1, l2, cosine). Defaults to l1 for image
    /// pools and cosine for pools with text.
    #[arg(long, global = true)]
    similarity: Option<SimilarityKind>,
    /// Softmax inverse temperature for reported probabilities.
    #[arg(long, global = true, default_value_t = 1.0, allow_negative_numbers = true)]
    tau: f64,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset: train.lvpe, test.lvpe and text.lvpp.
    Synth(SynthArgs),
    /// Build a pool (and mixing parameters or head) stage by stage.
    Build(BuildArgs),
    /// Evaluate built pools or heads, one stage per file, on test files.
    Eval(EvalArgs),
    /// Build and evaluate after every stage in one go.
    Run(RunArgs),
    /// Summarize a pool file.
    Info(InfoArgs),
    /// Merge pool files built separately.
    Merge(MergeArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value = "synth")]
    namespace: String,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    mean_scale: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 20)]
    train_per_class: usize,
    #[arg(long, default_value_t = 10)]
    test_per_class: usize,
    /// Number of domains; records then carry domain ids 0..N.
    #[arg(long)]
    domains: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    offset_scale: f64,
    /// Standard deviation of the pseudo-text noise.
    #[arg(long, default_value_t = 0.05)]
    text_noise: f64,
    /// Skip the text pool.
    #[arg(long)]
    no_text: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VariantArg {
    I,
    It,
    C,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::I => Variant::I,
            VariantArg::It => Variant::It,
            VariantArg::C => Variant::C,
        }
    }
}

#[derive(Args, Debug)]
struct StreamArgs {
    /// Training embedding files; each is split into tasks on its own.
    #[arg(long = "train", required = true, num_args = 1..)]
    train: Vec<PathBuf>,
    /// Text pool, required for the it variant.
    #[arg(long)]
    text: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "i")]
    variant: VariantArg,
    /// Task layout: N, AxB (A tasks of B classes) or domain.
    #[arg(long, default_value = "1")]
    tasks: Layout,
    /// Shuffle the concatenated task stream with the seed.
    #[arg(long)]
    shuffle_tasks: bool,
    /// Learning rate for the mixing vectors.
    #[arg(long, default_value_t = 1e-4)]
    it_lr: f64,
    #[arg(long, default_value_t = 10)]
    it_epochs: usize,
    #[arg(long, default_value_t = 256)]
    it_batch_size: usize,
    /// Inverse temperature of the mixing-vector loss.
    #[arg(long, default_value_t = 100.0)]
    it_tau: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha_init: f64,
    #[arg(long, default_value_t = 1.0)]
    beta_init: f64,
    #[arg(long, default_value_t = 0.01)]
    head_lr: f64,
    #[arg(long, default_value_t = 5000)]
    head_max_steps: usize,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[command(flatten)]
    stream: StreamArgs,
    /// Output pool.
    #[arg(long)]
    out: PathBuf,
    /// Output mixing parameters (it variant, or c with --text).
    #[arg(long)]
    params_out: Option<PathBuf>,
    /// Output head (c variant).
    #[arg(long)]
    head_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    stream: StreamArgs,
    #[arg(long = "test", required = true, num_args = 1..)]
    test: Vec<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also train one head on all training data and print its accuracy.
    #[arg(long)]
    upper_bound: bool,
}

#[derive(Args, Debug)]
#[command(group = clap::ArgGroup::new("model").required(true).args(["pool", "head"]))]
struct EvalArgs {
    /// Pool files, one per stage.
    #[arg(long, num_args = 1..)]
    pool: Vec<PathBuf>,
    /// Head files, one per stage.
    #[arg(long, num_args = 1..)]
    head: Vec<PathBuf>,
    #[arg(long = "test", required = true, num_args = 1..)]
    test: Vec<PathBuf>,
    #[arg(long, default_value = "1")]
    tasks: Layout,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InfoArgs {
    pool: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PolicyArg {
    Append,
    Weighted,
    Error,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[arg(required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "error")]
    policy: PolicyArg,
}

enum Failure {
    Usage(String),
    Data(LvpError),
}

impl From<LvpError> for Failure {
    fn from(e: LvpError) -> Self {
        Failure::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let softmax = SoftmaxConfig::new(cli.tau).map_err(|e| usage(e.to_string()))?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Synth(a) => cmd_synth(cli, a),
        Command::Build(a) => cmd_build(cli, a),
        Command::Eval(a) => cmd_eval(cli, a, softmax),
        Command::Run(a) => cmd_run(cli, a),
        Command::Info(a) => cmd_info(a),
        Command::Merge(a) => cmd_merge(a),
    }
}

fn cmd_synth(cli: &Cli, a: &SynthArgs) -> CliResult<()> {
    let spec = SynthSpec {
        namespace: a.namespace.clone(),
        classes: a.classes,
        dim: a.dim,
        mean_scale: a.mean_scale,
        sigma: a.sigma,
        train_per_class: a.train_per_class,
        test_per_class: a.test_per_class,
        tasks: 1,
        domains: a.domains.map(|count| DomainSpec { count, offset_scale: a.offset_scale }),
        text_noise: (!a.no_text).then_some(a.text_noise),
        seed: cli.seed,
    };
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let data = synth::generate(&spec)?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| LvpError::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    let write_set = |name: &str, tasks: &[TaskSpec]| -> CliResult<()> {
        let mut set = EmbeddingSet::new(spec.namespace.clone(), spec.dim, false);
        set.records = tasks.iter().flat_map(|t| t.records.iter().cloned()).collect();
        storage::write_embeddings(a.out_dir.join(name), &set)?;
        Ok(())
    };
    write_set("train.lvpe", &data.train)?;
    write_set("test.lvpe", &data.test)?;
    if let Some(text) = &data.text {
        let path = a.out_dir.join("text.lvpp");
        storage::write_pool(&path, text)?;
        write_log(&path, text.provenance())?;
    }
    println!("{}", serde_json::to_string_pretty(&spec).expect("spec serializes"));
    Ok(())
}

fn log_path(pool: &Path) -> PathBuf {
    let mut s = pool.as_os_str().to_owned();
    s.push(".log");
    PathBuf::from(s)
}

fn write_log(pool: &Path, lines: &[String]) -> CliResult<()> {
    let mut text = lines.join("\n");
    text.push('\n');
    storage::write_atomic(&log_path(pool), text.as_bytes())?;
    Ok(())
}

fn read_log(pool: &Path) -> Vec<String> {
    std::fs::read_to_string(log_path(pool))
        .map(|s| s.lines().map(str::to_string).collect())
        .unwrap_or_default()
}

fn configs(s: &StreamArgs, seed: u64) -> CliResult<(ITTrainConfig, HeadTrainConfig)> {
    let it = ITTrainConfig {
        learning_rate: s.it_lr,
        epochs: s.it_epochs,
        batch_size: s.it_batch_size,
        inverse_temperature: s.it_tau,
        seed,
        alpha_init: s.alpha_init,
        beta_init: s.beta_init,
    };
    let head = HeadTrainConfig {
        learning_rate: s.head_lr,
        max_steps: s.head_max_steps,
        seed,
        ..HeadTrainConfig::default()
    };
    it.validate().map_err(|e| usage(e.to_string()))?;
    head.validate().map_err(|e| usage(e.to_string()))?;
    Ok((it, head))
}

fn protocol(cli: &Cli, s: &StreamArgs) -> CliResult<Protocol> {
    let variant = Variant::from(s.variant);
    if variant == Variant::It && s.text.is_none() {
        return Err(usage("the it variant needs a text pool: pass --text <FILE>"));
    }
    let (it, head) = configs(s, cli.seed)?;
    let setting = match (s.train.len() > 1, s.tasks) {
        (true, _) => Setting::Ctil,
        (false, Layout::Domain) => Setting::Dil,
        (false, _) => Setting::Cil,
    };
    Ok(Protocol {
        setting,
        variant,
        similarity: cli.similarity.unwrap_or(variant.default_similarity()),
        it,
        head,
        seed: cli.seed,
    })
}

fn load_records(paths: &[PathBuf]) -> CliResult<Vec<(String, Vec<Record>, usize)>> {
    paths
        .iter()
        .map(|p| {
            let set = storage::read_embeddings(p)?;
            info!("{}: {} records, namespace {}, dim {}", p.display(), set.records.len(), set.namespace, set.dim);
            Ok((set.namespace, set.records, set.dim))
        })
        .collect()
}

/// Splits every file with the layout and concatenates the streams.
fn load_stream(paths: &[PathBuf], layout: Layout) -> CliResult<Vec<TaskSpec>> {
    let sets = load_records(paths)?;
    if let Some(first) = sets.first() {
        for (ns, _, dim) in &sets[1..] {
            if *dim != first.2 {
                return Err(LvpError::DimensionMismatch { expected: first.2, found: *dim }.into());
            }
            if *ns == first.0 && layout != Layout::Domain {
                info!("several files share namespace {ns}");
            }
        }
    }
    let mut tasks = Vec::new();
    for (_, records, _) in &sets {
        let next = tasks.len() + 1;
        tasks.extend(layout::split(records, layout, next)?);
    }
    Ok(tasks)
}

fn train_stream(cli: &Cli, s: &StreamArgs) -> CliResult<(Protocol, Vec<TaskSpec>, Option<Pool>)> {
    let protocol = protocol(cli, s)?;
    let mut train = load_stream(&s.train, s.tasks)?;
    if s.shuffle_tasks {
        train = harness::ctil_stream(vec![train], cli.seed);
    }
    let text = s.text.as_ref().map(storage::read_pool).transpose()?;
    Ok((protocol, train, text))
}

fn describe(s: &StreamArgs, protocol: &Protocol) -> String {
    let files: Vec<String> = s.train.iter().map(|p| p.display().to_string()).collect();
    format!(
        "lvp build variant={} similarity={} layout={} seed={} train={}{}",
        protocol.variant,
        protocol.similarity,
        s.tasks,
        protocol.seed,
        files.join(","),
        s.text.as_ref().map_or(String::new(), |t| format!(" text={}", t.display()))
    )
}

fn cmd_build(cli: &Cli, a: &BuildArgs) -> CliResult<()> {
    let variant = Variant::from(a.stream.variant);
    if variant == Variant::C && a.head_out.is_none() {
        return Err(usage("the c variant needs --head-out <FILE>"));
    }
    let (protocol, train, text) = train_stream(cli, &a.stream)?;
    harness::check_stream(&protocol, &train, text.as_ref())?;
    let mut state = RunState::new(protocol.clone(), text);
    for task in &train {
        state.learn(task)?;
        info!("learned task {} ({} records, {} classes)", task.index, task.len(), task.classes().len());
    }
    let pool_i = state.pool_i().ok_or(LvpError::EmptyStream)?;
    let mut out_pool = match variant {
        Variant::I => pool_i.clone(),
        Variant::It => state.pool_it().cloned().ok_or_else(|| {
            LvpError::ProtocolMismatch("no class of the stream has a text vector".into())
        })?,
        Variant::C => linear_head::select_head_inputs(pool_i, state.pool_it()),
    };
    out_pool.log(describe(&a.stream, &protocol));
    storage::write_pool(&a.out, &out_pool)?;
    write_log(&a.out, out_pool.provenance())?;
    if let Some(p) = &a.params_out {
        storage::write_params(p, state.params())?;
    }
    if let (Some(p), Some(head)) = (&a.head_out, state.head()) {
        storage::write_head(p, head)?;
    }
    println!(
        "built {} classes, complexity {}, {} floats -> {}",
        out_pool.num_classes(),
        out_pool.complexity(),
        out_pool.memory_floats(),
        a.out.display()
    );
    Ok(())
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> CliResult<()> {
    let (protocol, train, text) = train_stream(cli, &a.stream)?;
    let test = load_stream(&a.test, a.stream.tasks)?;
    let report = harness::run(&protocol, &train, &test, text.as_ref())?;
    print!("{}", harness::format_table(&report));
    if a.upper_bound {
        let ub = harness::upper_bound(&train, &test, &protocol.head)?;
        println!("upper bound {:.2}%", ub * 100.0);
    }
    if let Some(p) = &a.report {
        storage::write_report_file(p, &report)?;
    }
    Ok(())
}

enum Model {
    Pool(Pool, SimilarityKind),
    Head(LinearClassifier),
}

impl Model {
    fn classes(&self) -> BTreeSet<lvp::ClassId> {
        match self {
            Model::Pool(p, _) => p.class_set(),
            Model::Head(h) => h.class_order.iter().cloned().collect(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Model::Pool(p, _) => p.dim(),
            Model::Head(h) => h.dim,
        }
    }
}

fn cmd_eval(cli: &Cli, a: &EvalArgs, softmax: SoftmaxConfig) -> CliResult<()> {
    if !a.pool.is_empty() && !a.head.is_empty() {
        return Err(usage("pass either --pool or --head, not both"));
    }
    let mut models = Vec::new();
    for p in &a.pool {
        let pool = storage::read_pool(p)?;
        let mixed = pool.vectors().any(|lv| lv.modality != Modality::ImageMean);
        let default = if mixed { SimilarityKind::Cosine } else { SimilarityKind::L1 };
        models.push(Model::Pool(pool, cli.similarity.unwrap_or(default)));
    }
    for p in &a.head {
        models.push(Model::Head(storage::read_head(p)?));
    }
    let test = load_stream(&a.test, a.tasks)?;

    let known: BTreeSet<String> = models.iter().flat_map(|m| m.classes()).map(|c| c.namespace).collect();
    for t in &test {
        if let Some(dim) = t.dim() {
            if dim != models[0].dim() {
                return Err(LvpError::DimensionMismatch { expected: models[0].dim(), found: dim }.into());
            }
        }
        if let Some(ns) = t.classes().into_iter().map(|c| c.namespace).find(|ns| !known.contains(ns)) {
            return Err(LvpError::ProtocolMismatch(format!(
                "test namespace '{ns}' does not occur in any model (known: {})",
                known.into_iter().collect::<Vec<_>>().join(", ")
            ))
            .into());
        }
    }

    let mut rows = Vec::with_capacity(models.len());
    for m in &models {
        let learned = m.classes();
        let mut row = Vec::with_capacity(test.len());
        for t in &test {
            if !t.classes().is_subset(&learned) {
                row.push(None);
                continue;
            }
            let queries: Vec<&[f32]> = t.records.iter().map(|r| r.embedding.as_slice()).collect();
            let predicted = match m {
                Model::Pool(p, kind) => similarity::predict_batch(*kind, p, &queries)?,
                Model::Head(h) => linear_head::predict_batch(h, &queries)?,
            };
            let correct = predicted.iter().zip(&t.records).filter(|(p, r)| **p == r.class).count();
            row.push(Some(correct as f64 / t.len() as f64));
        }
        rows.push(row);
    }
    let mut meta = BTreeMap::new();
    meta.insert("tau".to_string(), softmax.inverse_temperature.to_string());
    meta.insert("layout".to_string(), a.tasks.to_string());
    let models_desc: Vec<String> = a.pool.iter().chain(&a.head).map(|p| p.display().to_string()).collect();
    meta.insert("models".to_string(), models_desc.join(","));
    if let Some(Model::Pool(_, kind)) = models.first() {
        meta.insert("similarity".to_string(), kind.to_string());
    }
    let report = EvalReport::new(rows, test.iter().map(TaskSpec::len).collect(), meta);
    print!("{}", harness::format_table(&report));
    if let Some(p) = &a.report {
        storage::write_report_file(p, &report)?;
    }
    Ok(())
}

fn cmd_info(a: &InfoArgs) -> CliResult<()> {
    let bytes = std::fs::read(&a.pool).map_err(|e| LvpError::Io { path: a.pool.clone(), source: e })?;
    let pool = storage::decode_pool(&bytes)?;
    let mut sizes: BTreeMap<usize, usize> = BTreeMap::new();
    for entries in pool.entries().values() {
        *sizes.entry(entries.len()).or_default() += 1;
    }
    let namespaces: BTreeSet<&str> = pool.classes().map(|c| c.namespace.as_str()).collect();
    println!("classes (K): {}", pool.num_classes());
    println!("dimension (D): {}", pool.dim());
    println!("namespaces: {}", namespaces.into_iter().collect::<Vec<_>>().join(", "));
    let hist: Vec<String> = sizes.iter().map(|(p, n)| format!("P={p}: {n} classes")).collect();
    println!("entries per class: {}", hist.join(", "));
    println!("complexity (O): {}", pool_builder::complexity(&pool));
    println!("memory floats: {}", pool_builder::memory_floats(&pool));
    println!("file bytes: {}", bytes.len());
    println!("named classes: {}", pool.names().len());
    let log = read_log(&a.pool);
    if log.is_empty() {
        println!("provenance: none recorded");
    } else {
        println!("provenance:");
        for line in log {
            println!("  {line}");
        }
    }
    Ok(())
}

fn cmd_merge(a: &MergeArgs) -> CliResult<()> {
    let pools = a.inputs.iter().map(storage::read_pool).collect::<lvp::Result<Vec<_>>>()?;
    let policy = match a.policy {
        PolicyArg::Append => MergePolicy::Append,
        PolicyArg::Weighted => MergePolicy::WeightedMeanMerge,
        PolicyArg::Error => MergePolicy::Error,
    };
    let merged = pool_builder::merge(&pools, policy)?;
    storage::write_pool(&a.out, &merged)?;
    let mut log: Vec<String> = a.inputs.iter().flat_map(|p| read_log(p)).collect();
    let names: Vec<String> = a.inputs.iter().map(|p| p.display().to_string()).collect();
    log.push(format!("lvp merge policy={:?} inputs={}", a.policy, names.join(",")));
    write_log(&a.out, &log)?;
    println!("merged {} pools: {} classes -> {}", pools.len(), merged.num_classes(), a.out.display());
    Ok(())
}
