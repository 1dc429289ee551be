//! `bankruptcy`: generate data, compute ratios, train, predict and evaluate
//! the hybrid bankruptcy model.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error.

mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bankruptcy_core::data::{self, DataError, Dataset};
use bankruptcy_core::ga;
use bankruptcy_core::pipeline::{self, HybridModel, PipelineError};
use bankruptcy_core::ratios::{self, RatioError, RatioId};
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "bankruptcy", version, about = "Hybrid FCM + MARS bankruptcy prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic labelled dataset as CSV.
    GenData {
        #[arg(long, default_value_t = 200)]
        firms: usize,
        #[arg(long, default_value_t = 0.5)]
        bankrupt_frac: f64,
        #[arg(long, default_value_t = 2.0)]
        separation: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute financial ratios for every firm.
    Ratios {
        #[arg(long)]
        data: PathBuf,
        /// Feature set A..E; all ratios when omitted.
        #[arg(long)]
        set: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the hybrid model and write it as JSON.
    Train(TrainArgs),
    /// Score firms with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predictions with known labels and write a JSON report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Flat `key = value` file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// A, B, C, D, E or `ga`.
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    clusters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-generation best and mean fitness (with `--features ga`).
    #[arg(long)]
    ga_history: Option<PathBuf>,
    /// Training firms with their cluster memberships, for plotting.
    #[arg(long)]
    cluster_points: Option<PathBuf>,
    #[arg(long)]
    fuzzifier: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// `soft` or `hard`.
    #[arg(long)]
    routing: Option<String>,
    #[arg(long)]
    max_terms: Option<usize>,
    #[arg(long)]
    population_size: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    cv_folds: Option<usize>,
    #[arg(long)]
    parsimony_weight: Option<f64>,
    #[arg(long)]
    type_i_weight: Option<f64>,
}

impl TrainArgs {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        [
            ("data", path(&self.data)),
            ("features", self.features.clone()),
            ("clusters", self.clusters.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", path(&self.out)),
            ("ga_history", path(&self.ga_history)),
            ("cluster_points", path(&self.cluster_points)),
            ("fuzzifier", self.fuzzifier.map(|v| v.to_string())),
            ("threshold", self.threshold.map(|v| v.to_string())),
            ("routing", self.routing.clone()),
            ("max_terms", self.max_terms.map(|v| v.to_string())),
            ("population_size", self.population_size.map(|v| v.to_string())),
            ("generations", self.generations.map(|v| v.to_string())),
            ("cv_folds", self.cv_folds.map(|v| v.to_string())),
            ("parsimony_weight", self.parsimony_weight.map(|v| v.to_string())),
            ("type_i_weight", self.type_i_weight.map(|v| v.to_string())),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
        .collect()
    }
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Ratio(#[from] RatioError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn write_csv_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), CliError> {
    let mut w = create(path)?;
    f(&mut w).map_err(|message| CliError::Io { path: path.to_path_buf(), message })?;
    w.flush().map_err(io_err(path))
}

fn load_model(path: &Path) -> Result<HybridModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(HybridModel::from_json(&text)?)
}

fn gen_data(firms: usize, frac: f64, separation: f64, seed: u64, out: &Path) -> Result<(), CliError> {
    log::info!("gen-data firms={firms} bankrupt_frac={frac} separation={separation} seed={seed}");
    let ds = data::generate_synthetic(firms, frac, separation, seed)?;
    data::write_csv(&ds, create(out)?)?;
    Ok(())
}

fn ratios_cmd(data_path: &Path, set: Option<&str>, out: &Path) -> Result<(), CliError> {
    let ds = data::parse_csv(data_path)?;
    let members = match set {
        Some(name) => ratios::feature_set_by_name(name)?.members,
        None => RatioId::ALL.to_vec(),
    };
    let rv = ratios::compute_all(&ds);
    for r in &rv {
        for id in r.warnings.iter().filter(|id| members.contains(id)) {
            log::warn!("firm {}: {id} undefined (zero divisor)", r.firm_id);
        }
    }
    write_csv_with(out, |w| ratios::write_ratios_csv(&rv, &members, w).map_err(|e| e.to_string()))
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    value.as_deref().ok_or_else(|| CliError::Usage(format!("train: missing required --{flag}")))
}

fn train_cmd(args: &TrainArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    for (key, value) in args.overrides() {
        cfg.set(key, &value).map_err(|e| CliError::Usage(format!("--{}: {e}", key.replace('_', "-"))))?;
    }
    cfg.resolve()?;
    log::info!("resolved config: {}", serde_json::to_string(&cfg).expect("config serializes"));

    let data_path = required(&cfg.data, "data")?;
    let out = required(&cfg.out, "out")?;
    let ds = data::parse_csv(data_path)?;
    let outcome = pipeline::train(&ds, &cfg.feature_choice(), &cfg.pipeline)?;
    let model = &outcome.model;
    log::info!("features: {:?}", model.feature_set.members);
    if !model.fallback_clusters.is_empty() {
        log::warn!("clusters {:?} use a constant model", model.fallback_clusters);
    }
    write_text(out, &model.to_json().expect("model serializes"))?;

    if let Some(path) = &cfg.ga_history {
        match &outcome.ga {
            Some(result) => {
                write_csv_with(path, |w| ga::write_history_csv(&result.history, w).map_err(|e| e.to_string()))?
            }
            None => log::warn!("--ga-history ignored: features were not selected by the GA"),
        }
    }
    if let Some(path) = &cfg.cluster_points {
        write_csv_with(path, |w| write_cluster_points(model, &ds, w))?;
    }
    let self_eval = pipeline::evaluate(model, &ds)?;
    log::info!("training accuracy {}", self_eval.accuracy);
    Ok(())
}

/// `firm_id,label,cluster,u1..uC,<features>` for every training firm.
fn write_cluster_points<W: Write>(model: &HybridModel, ds: &Dataset, w: &mut W) -> Result<(), String> {
    let c = model.fcm.n_clusters;
    let mut header = vec!["firm_id".to_string(), "label".into(), "cluster".into()];
    header.extend((1..=c).map(|j| format!("u{j}")));
    header.extend(model.feature_set.members.iter().map(|id| id.to_string()));
    writeln!(w, "{}", header.join(",")).map_err(|e| e.to_string())?;
    for s in &ds.statements {
        let Ok(row) = ratios::compute_ratios(s).features(&model.feature_set.members) else { continue };
        let u = model.fcm.membership_of(&row).map_err(|e| e.to_string())?;
        let cluster = bankruptcy_core::fcm::argmax(&u) + 1;
        let mut rec = vec![s.firm_id.clone(), s.label.to_string(), cluster.to_string()];
        rec.extend(u.iter().chain(&row).map(f64::to_string));
        writeln!(w, "{}", rec.join(",")).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn predict_cmd(model_path: &Path, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let ds = data::parse_csv(data_path)?;
    let preds = pipeline::predict(&model, &ds)?;
    for p in &preds {
        if let Err(id) = &p.result {
            log::warn!("firm {}: cannot score, missing ratio {id}", p.firm_id);
        }
    }
    write_csv_with(out, |w| pipeline::write_predictions_csv(&preds, w).map_err(|e| e.to_string()))
}

fn evaluate_cmd(model_path: &Path, data_path: &Path, report_path: &Path) -> Result<(), CliError> {
    let model = load_model(model_path)?;
    let ds = data::parse_csv(data_path)?;
    let report = pipeline::evaluate(&model, &ds)?;
    log::info!("accuracy {} over {} firms", report.accuracy, report.n);
    write_text(report_path, &serde_json::to_string_pretty(&report).expect("report serializes"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { firms, bankrupt_frac, separation, seed, out } => {
            gen_data(firms, bankrupt_frac, separation, seed, &out)
        }
        Command::Ratios { data, set, out } => ratios_cmd(&data, set.as_deref(), &out),
        Command::Train(args) => train_cmd(&args),
        Command::Predict { model, data, out } => predict_cmd(&model, &data, &out),
        Command::Evaluate { model, data, report } => evaluate_cmd(&model, &data, &report),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
