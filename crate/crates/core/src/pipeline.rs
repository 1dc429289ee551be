//! The hybrid classifier: selected ratios, fuzzy clustering of firms, and
//! one MARS regression per cluster whose clipped outputs are blended by
//! cluster membership.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, Label};
use crate::fcm::{self, FcmConfig, FcmError, FcmModel};
use crate::ga::{self, GaConfig, GaError, GaResult};
use crate::mars::{self, MarsConfig, MarsError, MarsModel};
use crate::matrix::FeatureMatrix;
use crate::ratios::{self, FeatureSet, FeatureSetName, RatioError, RatioId};

pub const MODEL_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training data needs at least one bankrupt and one healthy firm")]
    SingleClassDataset,
    #[error("firm `{0}` is not labelled bankrupt or healthy")]
    UnlabeledFirm(String),
    #[error("firm `{firm_id}` is missing ratio {ratio}")]
    MissingRatio { firm_id: String, ratio: RatioId },
    #[error("model is inconsistent: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Ratio(#[from] RatioError),
    #[error("clustering: {0}")]
    Fcm(#[from] FcmError),
    #[error("regression: {0}")]
    Mars(#[from] MarsError),
    #[error("feature selection: {0}")]
    Ga(Box<GaError>),
}

impl From<GaError> for PipelineError {
    fn from(e: GaError) -> Self {
        PipelineError::Ga(Box::new(e))
    }
}

/// Offsets added to the global seed for each randomised stage.
pub mod seeds {
    pub const FCM: u64 = 1;
    pub const GA: u64 = 2;

    pub fn derive(global: u64, offset: u64) -> u64 {
        global.wrapping_add(offset)
    }
}

/// How cluster outputs are combined at prediction time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Routing {
    /// Membership-weighted average of all cluster models.
    #[default]
    Soft,
    /// Only the model of the highest-membership cluster.
    Hard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Global seed; stage seeds are derived from it by [`PipelineConfig::seeded`].
    pub seed: u64,
    pub fcm: FcmConfig,
    pub mars: MarsConfig,
    pub threshold: f64,
    pub routing: Routing,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::seeded(0)
    }
}

impl PipelineConfig {
    pub fn seeded(seed: u64) -> Self {
        PipelineConfig {
            seed,
            fcm: FcmConfig { seed: seeds::derive(seed, seeds::FCM), ..FcmConfig::default() },
            mars: MarsConfig::default(),
            threshold: 0.5,
            routing: Routing::Soft,
        }
    }

    pub fn with_clusters(mut self, n_clusters: usize) -> Self {
        self.fcm.n_clusters = n_clusters;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(PipelineError::InvalidConfig(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        self.fcm.validate()?;
        self.mars.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Prediction {
    Bankrupt,
    Healthy,
}

impl Prediction {
    pub fn as_str(self) -> &'static str {
        match self {
            Prediction::Bankrupt => "bankrupt",
            Prediction::Healthy => "healthy",
        }
    }
}

/// Fitted clustering plus per-cluster regressions, independent of which
/// ratios feed it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEnsemble {
    pub fcm: FcmModel,
    pub cluster_models: Vec<MarsModel>,
    /// Clusters whose model is a constant fallback.
    pub fallback_clusters: Vec<usize>,
}

/// Score of one feature row: `sum_j u_j * clip(f_j(x), 0, 1)` (soft) or the
/// clipped output of the argmax cluster (hard).
pub fn score_row(fcm: &FcmModel, models: &[MarsModel], routing: Routing, row: &[f64]) -> Result<f64, PipelineError> {
    let u = fcm.membership_of(row)?;
    let score = match routing {
        Routing::Soft => {
            let mut s = 0.0;
            for (uj, model) in u.iter().zip(models) {
                if *uj > 0.0 {
                    s += uj * model.predict_row(row)?.clamp(0.0, 1.0);
                }
            }
            s
        }
        Routing::Hard => models[fcm::argmax(&u)].predict_row(row)?.clamp(0.0, 1.0),
    };
    Ok(score.clamp(0.0, 1.0))
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Clusters `x` and fits one MARS model per cluster. Clusters with fewer
/// than three firms or a single label get a constant model equal to their
/// label mean (the global mean when empty).
pub fn fit_ensemble(x: &FeatureMatrix, y: &[f64], cfg: &PipelineConfig) -> Result<ClusterEnsemble, PipelineError> {
    if x.n_rows() == 0 {
        return Err(PipelineError::EmptyDataset);
    }
    if !(y.iter().any(|&v| v == 1.0) && y.iter().any(|&v| v == 0.0)) {
        return Err(PipelineError::SingleClassDataset);
    }
    let partition = fcm::fit(x, &cfg.fcm)?;
    let assignment = fcm::hard_assign(&partition);
    let global_mean = mean(y.iter().copied()).expect("non-empty");

    let mut cluster_models = Vec::with_capacity(cfg.fcm.n_clusters);
    let mut fallback_clusters = Vec::new();
    for j in 0..cfg.fcm.n_clusters {
        let rows: Vec<usize> = (0..x.n_rows()).filter(|&i| assignment[i] == j).collect();
        let yj: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        let both = yj.iter().any(|&v| v == 1.0) && yj.iter().any(|&v| v == 0.0);
        let fitted = if rows.len() >= 3 && both {
            match mars::fit(&x.select_rows(&rows), &yj, &cfg.mars) {
                Ok(m) => Some(m),
                Err(MarsError::DegenerateDesign) => None,
                Err(e) => return Err(e.into()),
            }
        } else {
            None
        };
        let model = fitted.unwrap_or_else(|| {
            fallback_clusters.push(j);
            let value = mean(yj.iter().copied()).unwrap_or(global_mean);
            let rss = yj.iter().map(|v| (v - value).powi(2)).sum();
            MarsModel::constant(value, x.n_cols(), rss, yj.len(), &cfg.mars)
        });
        cluster_models.push(model);
    }
    Ok(ClusterEnsemble { fcm: partition.model, cluster_models, fallback_clusters })
}

/// Fitted hybrid model; this is the document written to `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridModel {
    pub version: String,
    pub feature_set: FeatureSet,
    pub fcm: FcmModel,
    pub cluster_models: Vec<MarsModel>,
    #[serde(default)]
    pub fallback_clusters: Vec<usize>,
    pub threshold: f64,
    #[serde(default)]
    pub routing: Routing,
    pub seed: u64,
    pub config: PipelineConfig,
}

impl HybridModel {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let p = self.feature_set.len();
        if self.cluster_models.len() != self.fcm.n_clusters || self.fcm.centroids.len() != self.fcm.n_clusters {
            return Err(PipelineError::InvalidModel("cluster count mismatch".into()));
        }
        if self.fcm.standardization.len() != p
            || self.fcm.centroids.iter().any(|c| c.len() != p)
            || self.cluster_models.iter().any(|m| m.n_features != p)
        {
            return Err(PipelineError::InvalidModel(format!("all components must use {p} features")));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(PipelineError::InvalidModel("threshold outside (0, 1)".into()));
        }
        Ok(())
    }

    pub fn score_features(&self, row: &[f64]) -> Result<f64, PipelineError> {
        score_row(&self.fcm, &self.cluster_models, self.routing, row)
    }

    pub fn classify(&self, score: f64) -> Prediction {
        if score >= self.threshold {
            Prediction::Bankrupt
        } else {
            Prediction::Healthy
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> Result<Self, PipelineError> {
        let model: HybridModel =
            serde_json::from_str(s).map_err(|e| PipelineError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Where the training features come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureChoice {
    Fixed(FeatureSet),
    /// Run the genetic search first and train on its best mask.
    Genetic(GaConfig),
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: HybridModel,
    pub ga: Option<GaResult>,
}

/// Names a custom set after the canonical set with the same members.
fn canonical_name(fs: FeatureSet) -> FeatureSet {
    FeatureSetName::CANONICAL
        .into_iter()
        .map(ratios::feature_set)
        .find(|c| c.members == fs.members)
        .unwrap_or(fs)
}

pub fn train(data: &Dataset, features: &FeatureChoice, cfg: &PipelineConfig) -> Result<TrainOutcome, PipelineError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(PipelineError::EmptyDataset);
    }
    let counts = data.label_counts();
    if counts.bankrupt == 0 || counts.healthy == 0 {
        return Err(PipelineError::SingleClassDataset);
    }
    let (feature_set, ga_result) = match features {
        FeatureChoice::Fixed(fs) => (fs.clone(), None),
        FeatureChoice::Genetic(ga_cfg) => {
            let result = ga::evolve(data, ga_cfg, cfg)?;
            (canonical_name(result.best_feature_set()), Some(result))
        }
    };
    if feature_set.is_empty() {
        return Err(PipelineError::InvalidConfig("feature set is empty".into()));
    }
    let projection = ratios::project(data, &feature_set)?;
    let ensemble = fit_ensemble(&projection.x, &projection.y, cfg)?;
    let model = HybridModel {
        version: MODEL_VERSION.to_string(),
        feature_set,
        fcm: ensemble.fcm,
        cluster_models: ensemble.cluster_models,
        fallback_clusters: ensemble.fallback_clusters,
        threshold: cfg.threshold,
        routing: cfg.routing,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    Ok(TrainOutcome { model, ga: ga_result })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub score: f64,
    pub prediction: Prediction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmPrediction {
    pub firm_id: String,
    /// The first missing ratio when the firm cannot be scored.
    pub result: Result<Scored, RatioId>,
}

/// Scores every firm; firms lacking a required ratio are reported
/// individually and do not stop the run.
pub fn predict(model: &HybridModel, data: &Dataset) -> Result<Vec<FirmPrediction>, PipelineError> {
    model.validate()?;
    data.statements
        .iter()
        .map(|s| {
            let r = ratios::compute_ratios(s);
            let result = match r.features(&model.feature_set.members) {
                Ok(row) => {
                    let score = model.score_features(&row)?;
                    Ok(Scored { score, prediction: model.classify(score) })
                }
                Err(id) => Err(id),
            };
            Ok(FirmPrediction { firm_id: s.firm_id.clone(), result })
        })
        .collect()
}

/// `firm_id,score,prediction`; unscorable firms get an empty score and
/// `missing:<RATIO>` as prediction.
pub fn write_predictions_csv<W: Write>(preds: &[FirmPrediction], writer: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["firm_id", "score", "prediction"])?;
    for p in preds {
        match &p.result {
            Ok(s) => wtr.write_record([p.firm_id.as_str(), &s.score.to_string(), s.prediction.as_str()])?,
            Err(id) => wtr.write_record([p.firm_id.as_str(), "", &format!("missing:{id}")])?,
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub bankrupt_as_bankrupt: usize,
    pub bankrupt_as_healthy: usize,
    pub healthy_as_bankrupt: usize,
    pub healthy_as_healthy: usize,
}

impl Confusion {
    pub fn record(&mut self, label: Label, prediction: Prediction) {
        match (label, prediction) {
            (Label::Bankrupt, Prediction::Bankrupt) => self.bankrupt_as_bankrupt += 1,
            (Label::Bankrupt, Prediction::Healthy) => self.bankrupt_as_healthy += 1,
            (Label::Healthy, Prediction::Bankrupt) => self.healthy_as_bankrupt += 1,
            (Label::Healthy, Prediction::Healthy) => self.healthy_as_healthy += 1,
            (Label::Unknown, _) => {}
        }
    }

    pub fn total(&self) -> usize {
        self.bankrupt_as_bankrupt + self.bankrupt_as_healthy + self.healthy_as_bankrupt + self.healthy_as_healthy
    }

    /// Bankrupt firms predicted healthy, over all bankrupt firms.
    pub fn type_i_error(&self) -> Option<f64> {
        let total = self.bankrupt_as_bankrupt + self.bankrupt_as_healthy;
        (total > 0).then(|| self.bankrupt_as_healthy as f64 / total as f64)
    }

    /// Healthy firms predicted bankrupt, over all healthy firms.
    pub fn type_ii_error(&self) -> Option<f64> {
        let total = self.healthy_as_bankrupt + self.healthy_as_healthy;
        (total > 0).then(|| self.healthy_as_bankrupt as f64 / total as f64)
    }

    pub fn accuracy(&self) -> f64 {
        (self.bankrupt_as_bankrupt + self.healthy_as_healthy) as f64 / self.total() as f64
    }

    /// `1 - (2w * missed_bankrupt + 2(1 - w) * false_alarms) / N`; equals
    /// plain accuracy at `w = 0.5`.
    pub fn weighted_accuracy(&self, type_i_weight: f64) -> f64 {
        let cost = 2.0 * type_i_weight * self.bankrupt_as_healthy as f64
            + 2.0 * (1.0 - type_i_weight) * self.healthy_as_bankrupt as f64;
        1.0 - cost / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirmOutcome {
    pub firm_id: String,
    pub score: f64,
    pub prediction: Prediction,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub confusion: Confusion,
    /// Absent when the evaluation set has no bankrupt firm.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub type_i_error: Option<f64>,
    /// Absent when the evaluation set has no healthy firm.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub type_ii_error: Option<f64>,
    pub accuracy: f64,
    pub per_firm: Vec<FirmOutcome>,
}

impl EvaluationReport {
    pub fn from_outcomes(per_firm: Vec<FirmOutcome>) -> Result<Self, PipelineError> {
        if per_firm.is_empty() {
            return Err(PipelineError::EmptyDataset);
        }
        let mut confusion = Confusion::default();
        for f in &per_firm {
            if f.label == Label::Unknown {
                return Err(PipelineError::UnlabeledFirm(f.firm_id.clone()));
            }
            confusion.record(f.label, f.prediction);
        }
        Ok(EvaluationReport {
            n: per_firm.len(),
            confusion,
            type_i_error: confusion.type_i_error(),
            type_ii_error: confusion.type_ii_error(),
            accuracy: confusion.accuracy(),
            per_firm,
        })
    }
}

pub fn evaluate(model: &HybridModel, labeled: &Dataset) -> Result<EvaluationReport, PipelineError> {
    if let Some(s) = labeled.statements.iter().find(|s| s.label == Label::Unknown) {
        return Err(PipelineError::UnlabeledFirm(s.firm_id.clone()));
    }
    let preds = predict(model, labeled)?;
    let outcomes = preds
        .into_iter()
        .zip(&labeled.statements)
        .map(|(p, s)| match p.result {
            Ok(scored) => Ok(FirmOutcome {
                firm_id: p.firm_id,
                score: scored.score,
                prediction: scored.prediction,
                label: s.label,
            }),
            Err(ratio) => Err(PipelineError::MissingRatio { firm_id: p.firm_id, ratio }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    EvaluationReport::from_outcomes(outcomes)
}

/// Fold index per row; each class is shuffled separately and dealt round
/// robin so every fold keeps the label balance.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; y.len()];
    for class in [1.0, 0.0] {
        let mut idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            folds[i] = pos % k;
        }
    }
    folds
}

/// Mean held-out weighted accuracy of the hybrid over `k` stratified folds.
pub fn cross_validate(
    x: &FeatureMatrix,
    y: &[f64],
    cfg: &PipelineConfig,
    k: usize,
    seed: u64,
    type_i_weight: f64,
) -> Result<f64, PipelineError> {
    let folds = stratified_folds(y, k, seed);
    let mut total = 0.0;
    for fold in 0..k {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != fold).collect();
        let test: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == fold).collect();
        let y_train: Vec<f64> = train.iter().map(|&i| y[i]).collect();
        let ens = fit_ensemble(&x.select_rows(&train), &y_train, cfg)?;
        let mut confusion = Confusion::default();
        for &i in &test {
            let score = score_row(&ens.fcm, &ens.cluster_models, cfg.routing, x.row(i))?;
            let prediction = if score >= cfg.threshold { Prediction::Bankrupt } else { Prediction::Healthy };
            let label = if y[i] == 1.0 { Label::Bankrupt } else { Label::Healthy };
            confusion.record(label, prediction);
        }
        total += confusion.weighted_accuracy(type_i_weight);
    }
    Ok(total / k as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_synthetic;
    use crate::fcm::ColumnScale;
    use crate::ratios::feature_set;

    fn outcome(label: Label, prediction: Prediction) -> FirmOutcome {
        FirmOutcome { firm_id: "f".into(), score: 0.0, prediction, label }
    }

    #[test]
    fn confusion_hand_case() {
        use Label::{Bankrupt as B, Healthy as H};
        use Prediction::{Bankrupt as PB, Healthy as PH};
        let report = EvaluationReport::from_outcomes(vec![
            outcome(B, PH),
            outcome(B, PB),
            outcome(H, PH),
            outcome(H, PB),
        ])
        .unwrap();
        assert_eq!(report.type_i_error, Some(0.5));
        assert_eq!(report.type_ii_error, Some(0.5));
        assert_eq!(report.accuracy, 0.5);

        let perfect = EvaluationReport::from_outcomes(vec![outcome(B, PB), outcome(H, PH)]).unwrap();
        assert_eq!((perfect.type_i_error, perfect.type_ii_error, perfect.accuracy), (Some(0.0), Some(0.0), 1.0));

        let no_bankrupt = EvaluationReport::from_outcomes(vec![outcome(H, PH), outcome(H, PB)]).unwrap();
        assert_eq!(no_bankrupt.type_i_error, None);
        let json = serde_json::to_value(&no_bankrupt).unwrap();
        assert!(json.get("type_i_error").is_none());
        assert_eq!(json["type_ii_error"], 0.5);
    }

    #[test]
    fn accuracy_is_prevalence_weighted_error_mix() {
        let c = Confusion { bankrupt_as_bankrupt: 7, bankrupt_as_healthy: 3, healthy_as_bankrupt: 2, healthy_as_healthy: 18 };
        let n = c.total() as f64;
        let mix = 1.0 - (10.0 / n) * c.type_i_error().unwrap() - (20.0 / n) * c.type_ii_error().unwrap();
        assert!((c.accuracy() - mix).abs() < 1e-12);
        assert_eq!(c.weighted_accuracy(0.5), c.accuracy());
    }

    #[test]
    fn single_class_rejected() {
        let mut ds = generate_synthetic(20, 0.5, 2.0, 1).unwrap();
        ds.statements.iter_mut().for_each(|s| s.label = Label::Healthy);
        let err = train(&ds, &FeatureChoice::Fixed(feature_set(FeatureSetName::Union)), &PipelineConfig::default());
        assert!(matches!(err, Err(PipelineError::SingleClassDataset)));
        let empty = ds.subset(&[]);
        let err = train(&empty, &FeatureChoice::Fixed(feature_set(FeatureSetName::Union)), &PipelineConfig::default());
        assert!(matches!(err, Err(PipelineError::EmptyDataset)));
    }

    fn constant_model(value: f64) -> HybridModel {
        let fs = feature_set(FeatureSetName::Shumway);
        let cfg = PipelineConfig::default().with_clusters(2);
        HybridModel {
            version: MODEL_VERSION.into(),
            feature_set: fs,
            fcm: FcmModel {
                n_clusters: 2,
                m: 2.0,
                centroids: vec![vec![-1.0, 0.0], vec![1.0, 0.0]],
                standardization: vec![ColumnScale { mean: 0.0, std: 1.0 }; 2],
            },
            cluster_models: vec![MarsModel::constant(value, 2, 0.0, 3, &cfg.mars); 2],
            fallback_clusters: vec![0, 1],
            threshold: 0.5,
            routing: Routing::Soft,
            seed: 0,
            config: cfg,
        }
    }

    #[test]
    fn zero_models_predict_healthy() {
        let model = constant_model(0.0);
        let ds = generate_synthetic(10, 0.5, 2.0, 3).unwrap();
        for p in predict(&model, &ds).unwrap() {
            let s = p.result.unwrap();
            assert_eq!(s.score, 0.0);
            assert_eq!(s.prediction, Prediction::Healthy);
        }
    }

    #[test]
    fn centroid_point_uses_its_cluster_only() {
        let mut model = constant_model(0.0);
        model.cluster_models[1] = MarsModel::constant(1.7, 2, 0.0, 3, &model.config.mars);
        assert_eq!(model.score_features(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(model.score_features(&[-1.0, 0.0]).unwrap(), 0.0);
        let mid = model.score_features(&[0.0, 0.0]).unwrap();
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_ratio_is_reported_per_firm() {
        let model = constant_model(0.2);
        let mut ds = generate_synthetic(6, 0.5, 2.0, 3).unwrap();
        ds.statements[1].total_liabilities = 0.0;
        let preds = predict(&model, &ds).unwrap();
        assert_eq!(preds[1].result, Err(RatioId::NITL));
        assert!(preds[0].result.is_ok());
        let mut out = Vec::new();
        write_predictions_csv(&preds, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(2).unwrap().ends_with(",,missing:NITL"));
        assert!(matches!(evaluate(&model, &ds), Err(PipelineError::MissingRatio { .. })));
    }

    #[test]
    fn evaluate_rejects_unlabelled() {
        let model = constant_model(0.2);
        let mut ds = generate_synthetic(6, 0.5, 2.0, 3).unwrap();
        ds.statements[2].label = Label::Unknown;
        assert!(matches!(evaluate(&model, &ds), Err(PipelineError::UnlabeledFirm(_))));
    }

    #[test]
    fn folds_are_stratified() {
        let y: Vec<f64> = (0..30).map(|i| if i % 3 == 0 { 1.0 } else { 0.0 }).collect();
        let folds = stratified_folds(&y, 3, 5);
        for f in 0..3 {
            let pos = (0..30).filter(|&i| folds[i] == f && y[i] == 1.0).count();
            let neg = (0..30).filter(|&i| folds[i] == f && y[i] == 0.0).count();
            assert_eq!((pos, neg), (10 / 3 + usize::from(f < 10 % 3), 20 / 3 + usize::from(f < 20 % 3)));
        }
        assert_eq!(folds, stratified_folds(&y, 3, 5));
    }

    #[test]
    fn model_json_round_trip() {
        let ds = generate_synthetic(60, 0.5, 3.0, 4).unwrap();
        let out = train(&ds, &FeatureChoice::Fixed(feature_set(FeatureSetName::Zmijewski)), &PipelineConfig::seeded(4)).unwrap();
        let json = out.model.to_json().unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["version", "feature_set", "fcm", "cluster_models", "threshold", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert!(v["fcm"].get("C").is_some() && v["fcm"].get("m").is_some());
        assert_eq!(HybridModel::from_json(&json).unwrap(), out.model);

        let mut broken = out.model.clone();
        broken.cluster_models.pop();
        assert!(matches!(HybridModel::from_json(&broken.to_json().unwrap()), Err(PipelineError::InvalidModel(_))));
    }
}
