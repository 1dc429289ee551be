//! Run configuration: defaults, a flat `key = value` file, then flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bankruptcy_core::ga::GaConfig;
use bankruptcy_core::pipeline::{seeds, FeatureChoice, PipelineConfig, Routing};
use bankruptcy_core::ratios::{self, FeatureSet, RatioError, RatioId};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("config line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("{0}")]
    Value(String),
}

/// Every tunable of one run. Defaults match the library defaults; stage
/// seeds are derived from `seed` by [`RunConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    /// `A`..`E` or `ga`.
    pub features: String,
    pub pipeline: PipelineConfig,
    pub ga: GaConfig,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub ga_history: Option<PathBuf>,
    pub cluster_points: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            features: "E".into(),
            pipeline: PipelineConfig::default(),
            ga: GaConfig::default(),
            data: None,
            out: None,
            ga_history: None,
            cluster_points: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value `{value}` for `{key}`"))
}

fn optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, String> {
    match value {
        "" | "auto" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

/// A set letter/name or a comma-separated list of ratio names.
fn parse_universe(value: &str) -> Result<Vec<RatioId>, RatioError> {
    if value.eq_ignore_ascii_case("all") {
        return Ok(RatioId::ALL.to_vec());
    }
    if let Ok(fs) = ratios::feature_set_by_name(value) {
        return Ok(fs.members);
    }
    let ids = value.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<RatioId>, _>>()?;
    Ok(FeatureSet::custom(ids).members)
}

impl RunConfig {
    pub const KEYS: [&'static str; 27] = [
        "seed",
        "features",
        "clusters",
        "fuzzifier",
        "fcm_max_iter",
        "fcm_tol",
        "max_terms",
        "max_degree",
        "gcv_penalty",
        "min_rss_improvement",
        "ridge_eps",
        "threshold",
        "routing",
        "population_size",
        "generations",
        "crossover_rate",
        "mutation_rate",
        "tournament_size",
        "elitism_count",
        "parsimony_weight",
        "cv_folds",
        "type_i_weight",
        "ga_universe",
        "data",
        "out",
        "ga_history",
        "cluster_points",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        let p = &mut self.pipeline;
        let g = &mut self.ga;
        match key {
            "seed" => self.seed = parse(key, value)?,
            "features" => {
                if !value.eq_ignore_ascii_case("ga") {
                    ratios::feature_set_by_name(value).map_err(|e| e.to_string())?;
                }
                self.features = value.to_string();
            }
            "clusters" => p.fcm.n_clusters = parse(key, value)?,
            "fuzzifier" => p.fcm.fuzzifier = parse(key, value)?,
            "fcm_max_iter" => p.fcm.max_iter = parse(key, value)?,
            "fcm_tol" => p.fcm.tol = parse(key, value)?,
            "max_terms" => p.mars.max_terms = parse(key, value)?,
            "max_degree" => p.mars.max_degree = parse(key, value)?,
            "gcv_penalty" => p.mars.gcv_penalty = optional(key, value)?,
            "min_rss_improvement" => p.mars.min_rss_improvement = parse(key, value)?,
            "ridge_eps" => p.mars.ridge_eps = parse(key, value)?,
            "threshold" => p.threshold = parse(key, value)?,
            "routing" => {
                p.routing = match value.to_ascii_lowercase().as_str() {
                    "soft" => Routing::Soft,
                    "hard" => Routing::Hard,
                    _ => return Err(format!("routing must be `soft` or `hard`, got `{value}`")),
                }
            }
            "population_size" => g.population_size = parse(key, value)?,
            "generations" => g.generations = parse(key, value)?,
            "crossover_rate" => g.crossover_rate = parse(key, value)?,
            "mutation_rate" => g.mutation_rate = optional(key, value)?,
            "tournament_size" => g.tournament_size = parse(key, value)?,
            "elitism_count" => g.elitism_count = parse(key, value)?,
            "parsimony_weight" => g.parsimony_weight = parse(key, value)?,
            "cv_folds" => g.cv_folds = parse(key, value)?,
            "type_i_weight" => g.type_i_weight = parse(key, value)?,
            "ga_universe" => g.universe = parse_universe(value).map_err(|e| e.to_string())?,
            "data" => self.data = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "ga_history" => self.ga_history = Some(value.into()),
            "cluster_points" => self.cluster_points = Some(value.into()),
            _ => return Err(format!("unknown key `{key}`; known keys: {}", Self::KEYS.join(", "))),
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
            self.set(key.trim(), value).map_err(|message| ConfigError::Line { line: i + 1, message })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        self.apply_text(&text)
    }

    /// Derives stage seeds from the global seed and validates the result.
    pub fn resolve(&mut self) -> Result<(), ConfigError> {
        self.pipeline.seed = self.seed;
        self.pipeline.fcm.seed = seeds::derive(self.seed, seeds::FCM);
        self.ga.seed = seeds::derive(self.seed, seeds::GA);
        self.pipeline.validate().map_err(|e| ConfigError::Value(e.to_string()))?;
        if self.features.eq_ignore_ascii_case("ga") {
            self.ga.validate().map_err(|e| ConfigError::Value(e.to_string()))?;
        }
        Ok(())
    }

    pub fn feature_choice(&self) -> FeatureChoice {
        if self.features.eq_ignore_ascii_case("ga") {
            FeatureChoice::Genetic(self.ga.clone())
        } else {
            FeatureChoice::Fixed(ratios::feature_set_by_name(&self.features).expect("checked in set"))
        }
    }
}
