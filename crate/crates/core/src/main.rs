use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use symbolic_pt::experiment::{self, ExperimentConfig, FitSettings, ModelFile, ModelKind};
use symbolic_pt::scenario::{self, GeneratorConfig};
use symbolic_pt::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Symbolic prospect-theoretic choice modeling.
#[derive(Debug, Parser)]
#[command(name = "symbolic-pt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic choice dataset (dataset.csv + dataset.meta.json).
    Generate(GenerateArgs),
    /// Fit one model on a dataset CSV and write <out>/<model>.json.
    Fit(FitArgs),
    /// Score a fitted model JSON on a dataset CSV.
    Evaluate(EvaluateArgs),
    /// Run the full experiment and write the report, table and plot data.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [env: SYMBOLIC_PT_OUT, default: out]
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    model: ModelKind,
    dataset: PathBuf,
    #[arg(long)]
    l2: Option<f64>,
    /// Z-score raw inputs before fitting the black-box model.
    #[arg(long)]
    standardize: bool,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long = "cpt-seed")]
    cpt_seed: Option<u64>,
    #[arg(long = "gamma-max")]
    gamma_max: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    model: PathBuf,
    dataset: PathBuf,
    /// Output directory; metrics go to <out>/<model>.metrics.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "split-seed")]
    split_seed: Option<u64>,
    #[arg(long = "train-frac")]
    train_frac: Option<f64>,
    #[arg(long = "tau-v")]
    tau_v: Option<f64>,
    #[arg(long = "tau-eta")]
    tau_eta: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long = "cpt-seed")]
    cpt_seed: Option<u64>,
    #[arg(long = "gamma-max")]
    gamma_max: Option<f64>,
    /// Screen features on the full dataset rather than the training split.
    #[arg(long = "select-on-full")]
    select_on_full: bool,
    /// Z-score raw inputs of the black-box model.
    #[arg(long)]
    standardize: bool,
    /// Also render SVG plots of the curve data.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Input(_) | Error::Parse { .. } | Error::UndefinedMetric(_) | Error::Io { .. } | Error::Json(_) => {
            EXIT_DATA
        }
        Error::Domain(_) | Error::Numerical(_) | Error::Estimation { .. } => EXIT_NUMERICAL,
    }
}

fn base_config(path: Option<&Path>) -> Result<ExperimentConfig, Error> {
    match path {
        Some(p) => ExperimentConfig::from_json_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    std::fs::write(path, body).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn cmd_generate(args: GenerateArgs) -> Result<(), Error> {
    let cfg = base_config(args.config.as_deref())?;
    let gen = GeneratorConfig {
        n: args.n.unwrap_or(cfg.generator.n),
        seed: args.seed.unwrap_or(cfg.generator.seed),
        true_coeffs: cfg.generator.true_coeffs,
    };
    let dir = args.out.unwrap_or(cfg.output_dir);
    let (csv, meta) = experiment::generate_files(&gen, &dir)?;
    eprintln!("wrote {} and {}", csv.display(), meta.display());
    Ok(())
}

fn cmd_fit(args: FitArgs) -> Result<(), Error> {
    let cfg = base_config(args.config.as_deref())?;
    let data = scenario::read_csv(&args.dataset)?;
    let mut cpt = cfg.cpt.clone();
    cpt.n_restarts = args.restarts.unwrap_or(cpt.n_restarts);
    cpt.rng_seed = args.cpt_seed.unwrap_or(cpt.rng_seed);
    cpt.gamma_max = args.gamma_max.unwrap_or(cpt.gamma_max);
    let l2 = args.l2.unwrap_or(cfg.l2_strength);
    if !(l2 >= 0.0 && l2.is_finite()) {
        return Err(Error::Config(format!("--l2 must be >= 0, got {l2}")));
    }
    let settings = FitSettings {
        l2_strength: l2,
        standardize: args.standardize || cfg.standardize_blackbox,
        cpt: cpt.options(),
    };
    let model = experiment::fit_model(args.model, &data, &settings)?;
    let path = args.out.unwrap_or(cfg.output_dir).join(format!("{}.json", args.model.file_stem()));
    write_json(&path, &model)?;
    print!("{}", model.coefficient_table());
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Error> {
    let model = ModelFile::read(&args.model)?;
    let data = scenario::read_csv(&args.dataset)?;
    let summary = experiment::evaluate(&model, &data)?;
    if summary.auc.is_none() {
        eprintln!("warning: test data has a single class; AUC undefined");
    }
    let stem = args
        .model
        .file_stem()
        .map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
    let dir = args
        .out
        .or_else(|| args.model.parent().map(Path::to_path_buf))
        .unwrap_or_else(experiment::default_output_dir);
    let path = dir.join(format!("{stem}.metrics.json"));
    write_json(&path, &summary)?;
    eprintln!(
        "accuracy {:.4}  auc {}  n {}  -> {}",
        summary.accuracy,
        summary.auc.map_or("null".to_string(), |a| format!("{a:.4}")),
        summary.n_test,
        path.display()
    );
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Error> {
    let mut cfg = base_config(args.config.as_deref())?;
    if let Some(v) = args.n {
        cfg.generator.n = v;
    }
    if let Some(v) = args.seed {
        cfg.generator.seed = v;
    }
    if let Some(v) = args.split_seed {
        cfg.split_seed = v;
    }
    if let Some(v) = args.train_frac {
        cfg.train_frac = v;
    }
    if let Some(v) = args.tau_v {
        cfg.thresholds.tau_v = v;
    }
    if let Some(v) = args.tau_eta {
        cfg.thresholds.tau_eta = v;
    }
    if let Some(v) = args.l2 {
        cfg.l2_strength = v;
    }
    if let Some(v) = args.restarts {
        cfg.cpt.n_restarts = v;
    }
    if let Some(v) = args.cpt_seed {
        cfg.cpt.rng_seed = v;
    }
    if let Some(v) = args.gamma_max {
        cfg.cpt.gamma_max = v;
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }
    cfg.select_on_full |= args.select_on_full;
    cfg.standardize_blackbox |= args.standardize;
    cfg.svg |= args.svg;

    let started = Instant::now();
    let report = experiment::run_experiment(&cfg)?;
    eprintln!("{:<20} {:>9} {:>9}", "model", "accuracy", "auc");
    for m in [
        &report.models.symbolic.metrics,
        &report.models.blackbox.metrics,
        &report.models.cpt.metrics,
    ] {
        let auc = m.auc.map_or("null".to_string(), |a| format!("{a:.4}"));
        eprintln!("{:<20} {:>9.4} {:>9}", m.model_name, m.accuracy, auc);
    }
    eprintln!(
        "wrote {} files to {} in {:.1}s",
        report.manifest.len(),
        cfg.output_dir.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Experiment(a) => cmd_experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
