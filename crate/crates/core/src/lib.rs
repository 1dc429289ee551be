//! Bankruptcy prediction from financial ratios: ratio computation,
//! fuzzy c-means clustering, MARS regression, genetic ratio selection and
//! the hybrid pipeline that ties them together.

pub mod data;
pub mod fcm;
pub mod ga;
pub mod mars;
pub mod matrix;
pub mod pipeline;
pub mod ratios;

pub use data::{Dataset, FinancialStatement, Label, SyntheticConfig};
pub use fcm::{FcmConfig, FcmModel, FuzzyPartition};
pub use ga::{Chromosome, GaConfig, GaResult};
pub use mars::{MarsConfig, MarsModel};
pub use matrix::FeatureMatrix;
pub use pipeline::{EvaluationReport, FeatureChoice, HybridModel, PipelineConfig, Routing};
pub use ratios::{FeatureSet, FeatureSetName, RatioId, RatioVector};
