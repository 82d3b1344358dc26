//! `pscnn`: train, evaluate and inspect PSCNN ensembles from the shell.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 data or file error,
//! 3 training or selection failure, 4 model/data dimension mismatch.

mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pscnn::{
    evaluate, gaussian_clusters, load_csv, load_model, save_model, train_ensemble, write_csv, xor_dataset,
    CombinerKind, CsvOptions, EnsembleConfig, EnsembleModel, Metrics, PscnnError, Schedule, SelectionConfig,
    TrainConfig, TransformKind,
};

use config::ConfigFile;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_TRAINING: u8 = 3;
const EXIT_DIMENSION: u8 = 4;

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new(EXIT_USAGE, message)
    }

    /// Maps a library error to its exit code. `fallback` covers errors that
    /// are neither file, parameter nor dimension problems.
    fn from_lib(err: PscnnError, fallback: u8) -> Self {
        let code = match &err {
            PscnnError::DimensionMismatch { .. } => EXIT_DIMENSION,
            PscnnError::Io { .. }
            | PscnnError::Parse { .. }
            | PscnnError::RaggedRow { .. }
            | PscnnError::EmptyDataset
            | PscnnError::VersionMismatch { .. }
            | PscnnError::CorruptModel(_) => EXIT_DATA,
            PscnnError::InvalidConfig(_) | PscnnError::InvalidParameters(_) | PscnnError::UnknownName { .. } => {
                EXIT_USAGE
            }
            _ => fallback,
        };
        Failure::new(code, err.to_string())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "pscnn", version, about = "Parallel, self-organizing, consensual neural network ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an ensemble on a CSV dataset and save the model.
    Train(TrainArgs),
    /// Report accuracy, abstain rate and confusion matrix on a dataset.
    Eval(EvalArgs),
    /// Classify a single feature vector.
    Predict(PredictArgs),
    /// Dump module transforms, region boundaries and the selection curve.
    Inspect(InspectArgs),
    /// Write a synthetic dataset.
    Gendata(GendataArgs),
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Training data: numeric CSV, integer class label in the last column.
    #[arg(long, required_unless_present = "config")]
    data: Option<PathBuf>,
    /// Where to write the model.
    #[arg(long, required_unless_present = "config")]
    out: Option<PathBuf>,
    /// `key = value` file with defaults for any of these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Candidate modules to train [default: 4].
    #[arg(long)]
    modules: Option<usize>,
    /// Transform family: identity, gray, shuffle, ones, twos [default: gray].
    #[arg(long)]
    transform: Option<TransformKind>,
    /// Quantization bits per feature [default: 1].
    #[arg(long)]
    bits: Option<u32>,
    /// Initial step size [default: 0.9].
    #[arg(long)]
    step: Option<f64>,
    /// Step schedule: const or inv [default: inv].
    #[arg(long)]
    schedule: Option<Schedule>,
    /// Training epochs per module [default: 50].
    #[arg(long)]
    epochs: Option<usize>,
    /// Half-width of the uniform weight initialization [default: 2.5].
    #[arg(long)]
    init: Option<f64>,
    /// Master seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Training threads, 0 for one per core [default: $PSCNN_JOBS or 0].
    #[arg(long)]
    jobs: Option<usize>,
    /// Consensus rule: mean or majority [default: mean].
    #[arg(long)]
    combiner: Option<CombinerKind>,
    /// Most modules the selection may keep [default: --modules].
    #[arg(long)]
    max_modules: Option<usize>,
    /// Stop selecting once this accuracy is reached; fail if it never is.
    #[arg(long)]
    target_acc: Option<f64>,
    /// Smallest accuracy gain worth another module [default: 0].
    #[arg(long)]
    min_gain: Option<f64>,
    /// Quantile trim for the indefinite output bands [default: 0.05].
    #[arg(long)]
    trim: Option<f64>,
    /// Fraction of the data held out for module selection [default: none].
    #[arg(long)]
    holdout: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(clap::Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// Comma-separated feature values, e.g. "0,1".
    #[arg(long, allow_hyphen_values = true)]
    input: String,
}

#[derive(clap::Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
    /// Write the accuracy-vs-module-count curve to this CSV file.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DataKind {
    Xor,
    Clusters,
}

#[derive(clap::Args)]
struct GendataArgs {
    #[arg(long, value_enum)]
    kind: DataKind,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Samples per class.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Standard deviation of the noise around each class centre.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Inspect(args) => cmd_inspect(args),
        Command::Gendata(args) => cmd_gendata(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Flag, then config file, then default.
fn resolve<T>(flag: Option<T>, file: &ConfigFile, key: &str, default: T) -> Result<T, Failure>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key).map_err(Failure::usage)?.unwrap_or(default)),
    }
}

fn resolve_opt<T>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, Failure>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key).map_err(Failure::usage),
    }
}

fn jobs_from_env() -> Result<usize, Failure> {
    match std::env::var("PSCNN_JOBS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Failure::usage(format!("PSCNN_JOBS must be a non-negative integer, got `{v}`"))),
        _ => Ok(0),
    }
}

fn build_config(args: &TrainArgs, file: &ConfigFile) -> Result<EnsembleConfig, Failure> {
    let defaults = EnsembleConfig::default();
    let train_defaults = TrainConfig::default();
    let module_count = resolve(args.modules, file, "modules", defaults.module_count)?;
    let jobs = match resolve_opt(args.jobs, file, "jobs")? {
        Some(j) => j,
        None => jobs_from_env()?,
    };
    Ok(EnsembleConfig {
        module_count,
        transform: resolve(args.transform, file, "transform", defaults.transform)?,
        bits_per_feature: resolve(args.bits, file, "bits", defaults.bits_per_feature)?,
        train: TrainConfig {
            step_size: resolve(args.step, file, "step", train_defaults.step_size)?,
            schedule: resolve(args.schedule, file, "schedule", train_defaults.schedule)?,
            epochs: resolve(args.epochs, file, "epochs", train_defaults.epochs)?,
            init_half_range: resolve(args.init, file, "init", train_defaults.init_half_range)?,
            ..train_defaults
        },
        trim: resolve(args.trim, file, "trim", defaults.trim)?,
        selection: SelectionConfig {
            max_modules: resolve(args.max_modules, file, "max-modules", module_count)?,
            target_accuracy: resolve_opt(args.target_acc, file, "target-acc")?,
            improvement_epsilon: resolve(args.min_gain, file, "min-gain", 0.0)?,
        },
        combiner: resolve(args.combiner, file, "combiner", defaults.combiner)?,
        master_seed: resolve(args.seed, file, "seed", defaults.master_seed)?,
        selection_holdout: resolve_opt(args.holdout, file, "holdout")?,
        worker_count: jobs,
    })
}

fn read_data(path: &Path) -> Result<pscnn::Dataset, Failure> {
    load_csv(path, CsvOptions::default()).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<EnsembleModel, Failure> {
    load_model(path).map_err(|e| Failure::new(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn cmd_train(args: TrainArgs) -> CmdResult {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p).map_err(Failure::usage)?,
        None => ConfigFile::default(),
    };
    let data: PathBuf = resolve_opt(args.data.clone(), &file, "data")?
        .ok_or_else(|| Failure::usage("no training data: pass --data or set `data` in the config file"))?;
    let out: PathBuf = resolve_opt(args.out.clone(), &file, "out")?
        .ok_or_else(|| Failure::usage("no output path: pass --out or set `out` in the config file"))?;
    let config = build_config(&args, &file)?;
    config.validate().map_err(|e| Failure::usage(e.to_string()))?;

    let ds = read_data(&data)?;
    let (model, report) = train_ensemble(&ds, &config).map_err(|e| Failure::from_lib(e, EXIT_TRAINING))?;
    let metrics = evaluate(&model, &ds).map_err(|e| Failure::from_lib(e, EXIT_TRAINING))?;

    print!("{}", selection_text(&model));
    println!();
    print!("{}", metrics_text(&metrics, "training data"));

    if let Some(target) = config.selection.target_accuracy {
        if report.final_accuracy() < target {
            return Err(Failure::new(
                EXIT_TRAINING,
                format!(
                    "target accuracy {target} not reached (best {:.4} with {} module(s)); model not written",
                    report.final_accuracy(),
                    report.selected.len()
                ),
            ));
        }
    }
    save_model(&model, &out).map_err(|e| Failure::from_lib(e, EXIT_DATA))?;
    println!("model written to {}", out.display());
    Ok(())
}

fn selection_text(model: &EnsembleModel) -> String {
    let report = &model.selection;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "selection: {} of {} candidate module(s), {} combiner, stopped: {}",
        report.selected.len(),
        model.candidate_accuracies.len(),
        model.combiner,
        report.stop_reason
    );
    let _ = writeln!(s, "{:>6}  {:>6}  {:<12}  {:>10}  {:>10}", "step", "module", "transform", "standalone", "ensemble");
    for (step, (module, acc)) in model.modules.iter().zip(&report.accuracies).enumerate() {
        let _ = writeln!(
            s,
            "{:>6}  {:>6}  {:<12}  {:>10.4}  {:>10.4}",
            step + 1,
            module.index,
            format!("{} x{}", module.transform, module.applications),
            module.standalone_accuracy,
            acc
        );
    }
    s
}

fn metrics_text(m: &Metrics, what: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "samples:      {} ({what})", m.samples);
    let _ = writeln!(s, "accuracy:     {:.4}", m.accuracy);
    let _ = writeln!(s, "abstain rate: {:.4}", m.abstain_rate);
    s
}

fn confusion_text(m: &Metrics) -> String {
    let classes = m.confusion.len();
    let mut s = String::from("confusion (rows: true class, columns: predicted)\n");
    let _ = write!(s, "{:>8}", "");
    for c in 0..classes {
        let _ = write!(s, "{c:>8}");
    }
    let _ = writeln!(s, "{:>8}", "abstain");
    for (t, row) in m.confusion.iter().enumerate() {
        let _ = write!(s, "{t:>8}");
        for v in row {
            let _ = write!(s, "{v:>8}");
        }
        s.push('\n');
    }
    s
}

/// Long format: metric rows leave the class columns empty; confusion rows
/// carry a count, with `abstain` as the predicted value for abstentions.
fn metrics_csv(m: &Metrics) -> String {
    let mut s = String::from("record,true_class,predicted,value\n");
    let _ = writeln!(s, "samples,,,{}", m.samples);
    let _ = writeln!(s, "accuracy,,,{}", m.accuracy);
    let _ = writeln!(s, "abstain_rate,,,{}", m.abstain_rate);
    let classes = m.confusion.len();
    for (t, row) in m.confusion.iter().enumerate() {
        for (p, v) in row.iter().enumerate() {
            if p == classes {
                let _ = writeln!(s, "confusion,{t},abstain,{v}");
            } else {
                let _ = writeln!(s, "confusion,{t},{p},{v}");
            }
        }
    }
    s
}

fn cmd_eval(args: EvalArgs) -> CmdResult {
    let model = read_model(&args.model)?;
    let ds = read_data(&args.data)?;
    let metrics = evaluate(&model, &ds).map_err(|e| Failure::from_lib(e, EXIT_DATA))?;
    match args.format {
        Format::Text => {
            print!("{}", metrics_text(&metrics, &args.data.display().to_string()));
            print!("{}", confusion_text(&metrics));
            println!("module accuracy");
            for (index, acc) in &metrics.module_accuracies {
                println!("{index:>8}  {acc:.4}");
            }
        }
        Format::Csv => print!("{}", metrics_csv(&metrics)),
    }
    Ok(())
}

fn parse_input(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .enumerate()
        .map(|(i, v)| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Failure::usage(format!("input value {} `{}`: {e}", i + 1, v.trim())))
        })
        .collect()
}

fn cmd_predict(args: PredictArgs) -> CmdResult {
    let x = parse_input(&args.input)?;
    let model = read_model(&args.model)?;
    let decision = model.predict(&x).map_err(|e| Failure::from_lib(e, EXIT_USAGE))?;
    let labels = model.module_region_labels(&x).map_err(|e| Failure::from_lib(e, EXIT_USAGE))?;
    match decision.class {
        Some(c) => println!("class:  {c}"),
        None => println!("class:  abstain"),
    }
    println!("score:  {:.6}", decision.score);
    let scores: Vec<String> = decision.per_class_scores.iter().map(|v| format!("{v:.6}")).collect();
    println!("scores: {}", scores.join(" "));
    for (module, regions) in model.modules.iter().zip(&labels) {
        let names: Vec<&str> = regions.iter().map(|r| r.short_name()).collect();
        println!(
            "module {:>3} ({} x{}): {}",
            module.index,
            module.transform,
            module.applications,
            names.join(" ")
        );
    }
    Ok(())
}

fn write_file_atomically(path: &Path, text: &str) -> Result<(), Failure> {
    let fail = |e: std::io::Error| Failure::new(EXIT_DATA, format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(text.as_bytes()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

fn cmd_inspect(args: InspectArgs) -> CmdResult {
    let model = read_model(&args.model)?;
    println!(
        "model version {}: {} input(s), {} bit(s) per feature, {} class(es), master seed {}",
        model.version,
        model.input_dim(),
        model.quantization.bits_per_feature(),
        model.classes,
        model.seeds.master
    );
    print!("{}", selection_text(&model));
    for module in &model.modules {
        println!();
        println!(
            "module {} ({} x{}), seed {}",
            module.index, module.transform, module.applications, module.seed
        );
        println!(
            "  standalone accuracy {:.4}; {} epochs, mse {:.6} -> {:.6}",
            module.standalone_accuracy, module.trace.epochs, module.trace.initial_mse, module.trace.final_mse
        );
        println!(
            "  {:>6}  {:>10}  {:>10}  {:>10}  {:>10}",
            "neuron", "def0_upper", "ind0_upper", "ind1_lower", "def1_lower"
        );
        for (j, r) in module.regions.iter().enumerate() {
            println!(
                "  {j:>6}  {:>10.6}  {:>10.6}  {:>10.6}  {:>10.6}",
                r.def0_upper, r.ind0_upper, r.ind1_lower, r.def1_lower
            );
        }
    }
    if let Some(path) = &args.curves {
        let mut csv = String::from("modules_used,accuracy\n");
        for (i, acc) in model.selection.accuracies.iter().enumerate() {
            let _ = writeln!(csv, "{},{acc}", i + 1);
        }
        write_file_atomically(path, &csv)?;
        println!();
        println!("curve written to {}", path.display());
    }
    Ok(())
}

fn cmd_gendata(args: GendataArgs) -> CmdResult {
    let ds = match args.kind {
        DataKind::Xor => xor_dataset(),
        DataKind::Clusters => gaussian_clusters(args.classes, args.dim, args.n, args.spread, args.seed)
            .map_err(|e| Failure::from_lib(e, EXIT_USAGE))?,
    };
    write_csv(&ds, &args.out).map_err(|e| Failure::from_lib(e, EXIT_DATA))?;
    println!("{} samples x {} features written to {}", ds.len(), ds.dim(), args.out.display());
    Ok(())
}
