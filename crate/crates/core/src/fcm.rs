//! Fuzzy c-means clustering.
//!
//! Minimises `J = sum_i sum_j u_ij^m * |x_i - c_j|^2` subject to each row of
//! `U` summing to one, by alternating the centroid update
//! `c_j = sum_i u_ij^m x_i / sum_i u_ij^m` and the membership update
//! `u_ij = 1 / sum_k (|x_i - c_j| / |x_i - c_k|)^(2/(m-1))`.
//!
//! Inputs are z-scored per column first; the scaling is kept in the fitted
//! model so new points are transformed the same way.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::FeatureMatrix;

/// Distances below this are treated as coincidence with a centroid.
pub const COINCIDENCE_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum FcmError {
    #[error("need at least as many points as clusters ({n_points} points, {n_clusters} clusters)")]
    TooFewPoints { n_points: usize, n_clusters: usize },
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmConfig {
    pub n_clusters: usize,
    pub fuzzifier: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for FcmConfig {
    fn default() -> Self {
        FcmConfig { n_clusters: 3, fuzzifier: 2.0, max_iter: 300, tol: 1e-6, seed: 0 }
    }
}

impl FcmConfig {
    pub fn validate(&self) -> Result<(), FcmError> {
        if self.n_clusters == 0 {
            return Err(FcmError::InvalidConfig("n_clusters must be >= 1".into()));
        }
        if !(self.fuzzifier > 1.0 && self.fuzzifier.is_finite()) {
            return Err(FcmError::InvalidConfig(format!("fuzzifier must be > 1, got {}", self.fuzzifier)));
        }
        if !(self.tol > 0.0) {
            return Err(FcmError::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Per-column z-score parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub mean: f64,
    pub std: f64,
}

impl ColumnScale {
    fn fit(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count().max(1) as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        // Constant columns are only centred.
        let std = if std > 1e-12 * mean.abs().max(1.0) { std } else { 1.0 };
        ColumnScale { mean, std }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }
}

/// The persistent part of a fit: everything needed to compute memberships
/// of new points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmModel {
    #[serde(rename = "C")]
    pub n_clusters: usize,
    pub m: f64,
    /// Centroids in standardized coordinates.
    pub centroids: Vec<Vec<f64>>,
    pub standardization: Vec<ColumnScale>,
}

impl FcmModel {
    pub fn n_features(&self) -> usize {
        self.standardization.len()
    }

    pub fn standardize(&self, x: &[f64]) -> Result<Vec<f64>, FcmError> {
        if x.len() != self.n_features() {
            return Err(FcmError::DimensionMismatch { expected: self.n_features(), got: x.len() });
        }
        Ok(x.iter().zip(&self.standardization).map(|(&v, s)| s.apply(v)).collect())
    }

    /// Membership vector of a raw (unstandardized) feature row against the
    /// frozen centroids.
    pub fn membership_of(&self, x: &[f64]) -> Result<Vec<f64>, FcmError> {
        let z = self.standardize(x)?;
        let mut out = vec![0.0; self.n_clusters];
        memberships_into(&z, &self.centroids, self.m, &mut out);
        Ok(out)
    }
}

/// Result of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyPartition {
    pub model: FcmModel,
    /// N x C membership matrix, one row per input point.
    pub memberships: Vec<Vec<f64>>,
    pub objective: f64,
    /// Objective after initialisation and after every iteration.
    pub objective_history: Vec<f64>,
    pub n_iter: usize,
    pub converged: bool,
}

impl FuzzyPartition {
    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.model.centroids
    }

    pub fn membership_of(&self, x: &[f64]) -> Result<Vec<f64>, FcmError> {
        self.model.membership_of(x)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Writes the membership row of point `z` into `out`.
fn memberships_into(z: &[f64], centroids: &[Vec<f64>], m: f64, out: &mut [f64]) {
    let d2: Vec<f64> = centroids.iter().map(|c| squared_distance(z, c)).collect();
    if let Some(hit) = d2.iter().position(|&d| d < COINCIDENCE_EPS * COINCIDENCE_EPS) {
        out.iter_mut().enumerate().for_each(|(j, u)| *u = if j == hit { 1.0 } else { 0.0 });
        return;
    }
    // (d_j / d_k)^(2/(m-1)) == (d2_j / d2_k)^(1/(m-1)); normalising by the
    // nearest centroid keeps every weight in (0, 1].
    let exponent = 1.0 / (m - 1.0);
    let d_min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let mut total = 0.0;
    for (u, &d) in out.iter_mut().zip(&d2) {
        *u = (d_min / d).powf(exponent);
        total += *u;
    }
    out.iter_mut().for_each(|u| *u /= total);
}

fn update_centroids(z: &[Vec<f64>], u: &[Vec<f64>], m: f64, n_clusters: usize) -> Vec<Vec<f64>> {
    let p = z.first().map_or(0, Vec::len);
    let mut num = vec![vec![0.0; p]; n_clusters];
    let mut den = vec![0.0; n_clusters];
    for (x, row) in z.iter().zip(u) {
        for j in 0..n_clusters {
            let w = row[j].powf(m);
            den[j] += w;
            for (acc, &v) in num[j].iter_mut().zip(x) {
                *acc += w * v;
            }
        }
    }
    num.into_iter()
        .zip(den)
        .map(|(c, d)| if d > 0.0 { c.into_iter().map(|v| v / d).collect() } else { c })
        .collect()
}

/// `sum_i sum_j u_ij^m |x_i - c_j|^2`.
pub fn objective(z: &[Vec<f64>], u: &[Vec<f64>], centroids: &[Vec<f64>], m: f64) -> f64 {
    z.iter()
        .zip(u)
        .map(|(x, row)| row.iter().zip(centroids).map(|(&uij, c)| uij.powf(m) * squared_distance(x, c)).sum::<f64>())
        .sum()
}

fn standardize(x: &FeatureMatrix) -> (Vec<ColumnScale>, Vec<Vec<f64>>) {
    let scales: Vec<ColumnScale> =
        (0..x.n_cols()).map(|j| ColumnScale::fit((0..x.n_rows()).map(move |i| x.get(i, j)))).collect();
    let z = x.rows().map(|r| r.iter().zip(&scales).map(|(&v, s)| s.apply(v)).collect()).collect();
    (scales, z)
}

fn random_memberships(n: usize, c: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            // Shifted away from zero so no cluster starts with zero mass.
            let row: Vec<f64> = (0..c).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn check_input(x: &FeatureMatrix, cfg: &FcmConfig) -> Result<(), FcmError> {
    cfg.validate()?;
    if x.n_rows() < cfg.n_clusters || x.n_rows() == 0 {
        return Err(FcmError::TooFewPoints { n_points: x.n_rows(), n_clusters: cfg.n_clusters });
    }
    if !x.is_finite() {
        return Err(FcmError::NonFiniteInput);
    }
    Ok(())
}

/// Fits with a seeded random row-stochastic initial membership matrix.
pub fn fit(x: &FeatureMatrix, cfg: &FcmConfig) -> Result<FuzzyPartition, FcmError> {
    check_input(x, cfg)?;
    let init = random_memberships(x.n_rows(), cfg.n_clusters, cfg.seed);
    fit_with_init(x, cfg, init)
}

/// Fits from an explicit initial membership matrix (rows are renormalised).
pub fn fit_with_init(x: &FeatureMatrix, cfg: &FcmConfig, init: Vec<Vec<f64>>) -> Result<FuzzyPartition, FcmError> {
    check_input(x, cfg)?;
    if init.len() != x.n_rows() || init.iter().any(|r| r.len() != cfg.n_clusters) {
        return Err(FcmError::InvalidConfig("initial memberships must be N x C".into()));
    }
    let m = cfg.fuzzifier;
    let c = cfg.n_clusters;
    let (scales, z) = standardize(x);

    let mut u: Vec<Vec<f64>> = init
        .into_iter()
        .map(|row| {
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect();
    let mut centroids = update_centroids(&z, &u, m, c);
    let mut history = vec![objective(&z, &u, &centroids, m)];
    let mut next = vec![vec![0.0; c]; z.len()];
    let mut n_iter = 0;
    let mut converged = false;

    while n_iter < cfg.max_iter {
        n_iter += 1;
        let mut max_delta: f64 = 0.0;
        for ((point, new_row), old_row) in z.iter().zip(next.iter_mut()).zip(&u) {
            memberships_into(point, &centroids, m, new_row);
            for (a, b) in new_row.iter().zip(old_row) {
                max_delta = max_delta.max((a - b).abs());
            }
        }
        std::mem::swap(&mut u, &mut next);
        centroids = update_centroids(&z, &u, m, c);
        history.push(objective(&z, &u, &centroids, m));
        if max_delta < cfg.tol {
            converged = true;
            break;
        }
    }

    Ok(FuzzyPartition {
        model: FcmModel { n_clusters: c, m, centroids, standardization: scales },
        objective: *history.last().expect("non-empty history"),
        objective_history: history,
        memberships: u,
        n_iter,
        converged,
    })
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = j;
        }
    }
    best
}

/// Crisp cluster per point from the membership matrix.
pub fn hard_assign(part: &FuzzyPartition) -> Vec<usize> {
    part.memberships.iter().map(|r| argmax(r)).collect()
}
