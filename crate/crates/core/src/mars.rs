//! Multivariate adaptive regression splines with piecewise-linear hinges.
//!
//! The forward pass greedily adds reflected hinge pairs
//! `parent * max(0, x_v - t)` and `parent * max(0, t - x_v)`; the backward
//! pass deletes one term at a time and keeps the subset with the lowest
//! generalized cross-validation score `RSS * N / (N - C(M))^2`, where
//! `C(M) = M + d * (M - 1) / 2` and `M` counts coefficients including the
//! intercept.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::FeatureMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum MarsError {
    #[error("need at least 3 observations, got {0}")]
    TooFewPoints(usize),
    #[error("all rows of the design are identical")]
    DegenerateDesign,
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("target has {got} values for {expected} rows")]
    TargetLength { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `max(0, x - t)`
    Plus,
    /// `max(0, t - x)`
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub var: usize,
    pub knot: f64,
    pub dir: Direction,
}

impl Hinge {
    pub fn eval(&self, x: f64) -> f64 {
        match self.dir {
            Direction::Plus => (x - self.knot).max(0.0),
            Direction::Minus => (self.knot - x).max(0.0),
        }
    }
}

/// Product of hinges over distinct variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BasisTerm {
    pub factors: Vec<Hinge>,
}

impl BasisTerm {
    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn uses(&self, var: usize) -> bool {
        self.factors.iter().any(|h| h.var == var)
    }

    pub fn eval(&self, row: &[f64]) -> f64 {
        self.factors.iter().map(|h| h.eval(row[h.var])).product()
    }

    fn with(&self, hinge: Hinge) -> BasisTerm {
        let mut factors = self.factors.clone();
        factors.push(hinge);
        BasisTerm { factors }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(flatten)]
    pub basis: BasisTerm,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsConfig {
    /// Upper bound on coefficients, intercept included.
    pub max_terms: usize,
    pub max_degree: usize,
    /// GCV cost per knot; `None` means 3 for interaction models, else 2.
    pub gcv_penalty: Option<f64>,
    /// Forward pass stops when the best pair improves RSS by less than this
    /// fraction of the total sum of squares.
    pub min_rss_improvement: f64,
    pub ridge_eps: f64,
}

impl Default for MarsConfig {
    fn default() -> Self {
        MarsConfig { max_terms: 21, max_degree: 1, gcv_penalty: None, min_rss_improvement: 1e-8, ridge_eps: 1e-10 }
    }
}

impl MarsConfig {
    pub fn penalty(&self) -> f64 {
        self.gcv_penalty.unwrap_or(if self.max_degree > 1 { 3.0 } else { 2.0 })
    }

    /// Copy with the penalty default made explicit.
    pub fn resolved(&self) -> MarsConfig {
        MarsConfig { gcv_penalty: Some(self.penalty()), ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), MarsError> {
        if self.max_terms == 0 {
            return Err(MarsError::InvalidConfig("max_terms must be >= 1".into()));
        }
        if self.max_degree == 0 {
            return Err(MarsError::InvalidConfig("max_degree must be >= 1".into()));
        }
        if !(self.penalty() >= 0.0) {
            return Err(MarsError::InvalidConfig("gcv_penalty must be >= 0".into()));
        }
        if !(self.ridge_eps >= 0.0 && self.min_rss_improvement >= 0.0) {
            return Err(MarsError::InvalidConfig("ridge_eps and min_rss_improvement must be >= 0".into()));
        }
        Ok(())
    }
}

/// Effective parameter count `C(M)`.
pub fn effective_parameters(n_coefs: usize, penalty: f64) -> f64 {
    n_coefs as f64 + penalty * (n_coefs as f64 - 1.0) / 2.0
}

/// `RSS * N / (N - C(M))^2`, infinite once `C(M) >= N`.
pub fn gcv(rss: f64, n: usize, n_coefs: usize, penalty: f64) -> f64 {
    let denom = n as f64 - effective_parameters(n_coefs, penalty);
    if denom <= 0.0 {
        f64::INFINITY
    } else {
        rss * n as f64 / (denom * denom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarsModel {
    pub intercept: f64,
    pub terms: Vec<Term>,
    pub gcv: f64,
    pub training_rss: f64,
    pub n_samples: usize,
    pub n_features: usize,
    pub config: MarsConfig,
}

impl MarsModel {
    /// Intercept-only model.
    pub fn constant(value: f64, n_features: usize, rss: f64, n_samples: usize, config: &MarsConfig) -> Self {
        let config = config.resolved();
        let gcv = if n_samples > 1 { gcv(rss, n_samples, 1, config.penalty()) } else { 0.0 };
        MarsModel { intercept: value, terms: Vec::new(), gcv, training_rss: rss, n_samples, n_features, config }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<f64, MarsError> {
        if row.len() != self.n_features {
            return Err(MarsError::DimensionMismatch { expected: self.n_features, got: row.len() });
        }
        Ok(self.intercept + self.terms.iter().map(|t| t.coef * t.basis.eval(row)).sum::<f64>())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>, MarsError> {
        if x.n_cols() != self.n_features {
            return Err(MarsError::DimensionMismatch { expected: self.n_features, got: x.n_cols() });
        }
        x.rows().map(|r| self.predict_row(r)).collect()
    }

    /// Design columns (intercept first) of this model's basis on `x`.
    pub fn basis_columns(&self, x: &FeatureMatrix) -> Vec<Vec<f64>> {
        let mut cols = vec![vec![1.0; x.n_rows()]];
        cols.extend(self.terms.iter().map(|t| x.rows().map(|r| t.basis.eval(r)).collect()));
        cols
    }

    pub fn knots(&self) -> impl Iterator<Item = &Hinge> + '_ {
        self.terms.iter().flat_map(|t| t.basis.factors.iter())
    }
}

/// Ridge-stabilised least squares on the normal equations:
/// `(B'B + eps I) beta = B'y`, leaving the first (intercept) column
/// unpenalised. Returns coefficients and residual sum of
/// squares.
pub fn least_squares(columns: &[Vec<f64>], y: &[f64], ridge_eps: f64) -> (Vec<f64>, f64) {
    let k = columns.len();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&columns[i], &columns[j]));
    let rhs = DVector::from_fn(k, |i, _| dot(&columns[i], y));
    let beta = solve_spd(gram, rhs, ridge_eps);
    let rss = residual_ss(columns, &beta, y);
    (beta, rss)
}

fn solve_spd(gram: DMatrix<f64>, rhs: DVector<f64>, ridge_eps: f64) -> Vec<f64> {
    let k = gram.nrows();
    let mut eps = ridge_eps;
    loop {
        let mut a = gram.clone();
        for i in 1..k {
            a[(i, i)] += eps;
        }
        if let Some(chol) = a.cholesky() {
            return chol.solve(&rhs).iter().copied().collect();
        }
        // Only reachable when the Gram matrix is numerically indefinite.
        eps = if eps > 0.0 { eps * 10.0 } else { 1e-12 };
        if k == 1 {
            return vec![0.0];
        }
    }
}

fn residual_ss(columns: &[Vec<f64>], beta: &[f64], y: &[f64]) -> f64 {
    (0..y.len())
        .map(|i| {
            let fit: f64 = columns.iter().zip(beta).map(|(c, b)| c[i] * b).sum();
            (y[i] - fit).powi(2)
        })
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Forward-pass trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardPass {
    /// Terms in the order added (intercept excluded).
    pub terms: Vec<BasisTerm>,
    /// Training RSS after the intercept and after each accepted pair.
    pub rss_path: Vec<f64>,
    /// `(parent, var, knot)` of each accepted pair; parent 0 is the intercept.
    pub selections: Vec<(usize, usize, f64)>,
}

/// Full fit result, including diagnostics from both passes.
#[derive(Debug, Clone, PartialEq)]
pub struct MarsFit {
    pub model: MarsModel,
    pub forward: ForwardPass,
    /// GCV of the unpruned forward-pass model.
    pub full_gcv: f64,
    /// GCV after each deletion, starting with the full model.
    pub pruning_gcv: Vec<f64>,
}

fn check_input(x: &FeatureMatrix, y: &[f64], cfg: &MarsConfig) -> Result<(), MarsError> {
    cfg.validate()?;
    if y.len() != x.n_rows() {
        return Err(MarsError::TargetLength { expected: x.n_rows(), got: y.len() });
    }
    if x.n_rows() < 3 {
        return Err(MarsError::TooFewPoints(x.n_rows()));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(MarsError::NonFiniteInput);
    }
    let first = x.row(0);
    if x.rows().all(|r| r == first) {
        return Err(MarsError::DegenerateDesign);
    }
    Ok(())
}

pub fn fit(x: &FeatureMatrix, y: &[f64], cfg: &MarsConfig) -> Result<MarsModel, MarsError> {
    fit_detailed(x, y, cfg).map(|f| f.model)
}

pub fn fit_detailed(x: &FeatureMatrix, y: &[f64], cfg: &MarsConfig) -> Result<MarsFit, MarsError> {
    check_input(x, y, cfg)?;
    let forward = forward_pass(x, y, cfg);
    let n = x.n_rows();
    let penalty = cfg.penalty();

    let mut columns = vec![vec![1.0; n]];
    columns.extend(forward.terms.iter().map(|t| x.rows().map(|r| t.eval(r)).collect::<Vec<f64>>()));

    // Backward elimination over term indices 1.. (0 is the intercept).
    let mut active: Vec<usize> = (1..columns.len()).collect();
    let subset = |idx: &[usize]| -> Vec<Vec<f64>> {
        std::iter::once(0).chain(idx.iter().copied()).map(|i| columns[i].clone()).collect()
    };
    let (full_beta, full_rss) = least_squares(&subset(&active), y, cfg.ridge_eps);
    let full_gcv = gcv(full_rss, n, active.len() + 1, penalty);
    let mut best = (full_gcv, active.clone(), full_beta, full_rss);
    let mut pruning_gcv = vec![full_gcv];

    while !active.is_empty() {
        let mut step: Option<(f64, usize, Vec<f64>)> = None;
        for pos in 0..active.len() {
            let mut trial = active.clone();
            trial.remove(pos);
            let (beta, rss) = least_squares(&subset(&trial), y, cfg.ridge_eps);
            if step.as_ref().map_or(true, |(best_rss, _, _)| rss < *best_rss) {
                step = Some((rss, pos, beta));
            }
        }
        let (rss, pos, beta) = step.expect("active is non-empty");
        active.remove(pos);
        let score = gcv(rss, n, active.len() + 1, penalty);
        pruning_gcv.push(score);
        // Ties favour the smaller model.
        if score <= best.0 {
            best = (score, active.clone(), beta, rss);
        }
    }

    let (best_gcv, kept, beta, rss) = best;
    let terms = kept
        .iter()
        .zip(&beta[1..])
        .map(|(&i, &coef)| Term { basis: forward.terms[i - 1].clone(), coef })
        .collect();
    let model = MarsModel {
        intercept: beta[0],
        terms,
        gcv: best_gcv,
        training_rss: rss,
        n_samples: n,
        n_features: x.n_cols(),
        config: cfg.resolved(),
    };
    Ok(MarsFit { model, forward, full_gcv, pruning_gcv })
}

/// Squared norm reduction of `r` from adding columns `b1`, `b2` to the span
/// of the orthonormal basis `q` (`r` must already be orthogonal to `q`).
fn pair_reduction(q: &[Vec<f64>], r: &[f64], b1: &[f64], b2: &[f64]) -> f64 {
    let residualize = |b: &[f64]| -> (Vec<f64>, bool) {
        let norm2 = dot(b, b);
        let mut e = b.to_vec();
        for qk in q {
            let d = dot(qk, &e);
            axpy(-d, qk, &mut e);
        }
        let ok = norm2 > 0.0 && dot(&e, &e) > 1e-10 * norm2;
        (e, ok)
    };
    let (e1, ok1) = residualize(b1);
    let (e2, ok2) = residualize(b2);
    let single = |e: &[f64]| dot(e, r).powi(2) / dot(e, e);
    match (ok1, ok2) {
        (false, false) => 0.0,
        (true, false) => single(&e1),
        (false, true) => single(&e2),
        (true, true) => {
            let (a, c, d) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
            let (g1, g2) = (dot(&e1, r), dot(&e2, r));
            let det = a * d - c * c;
            if det <= 1e-10 * a * d {
                single(&e1).max(single(&e2))
            } else {
                (d * g1 * g1 - 2.0 * c * g1 * g2 + a * g2 * g2) / det
            }
        }
    }
}

/// Appends `col` to the orthonormal basis (Gram-Schmidt, twice) and removes
/// its component from the residual. Near-dependent columns are skipped.
fn extend_basis(q: &mut Vec<Vec<f64>>, r: &mut [f64], col: &[f64]) {
    let norm2 = dot(col, col);
    if norm2 == 0.0 {
        return;
    }
    let mut e = col.to_vec();
    for _ in 0..2 {
        for qk in q.iter() {
            let d = dot(qk, &e);
            axpy(-d, qk, &mut e);
        }
    }
    let en = dot(&e, &e);
    if en <= 1e-10 * norm2 {
        return;
    }
    let scale = 1.0 / en.sqrt();
    e.iter_mut().for_each(|v| *v *= scale);
    let d = dot(&e, r);
    axpy(-d, &e, r);
    q.push(e);
}

/// Sorted distinct values of each column.
fn candidate_knots(x: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..x.n_cols())
        .map(|j| {
            let mut v = x.column(j);
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect()
}

/// Greedy forward pass. Candidates are scanned by parent, then variable,
/// then ascending knot; a later candidate replaces the incumbent only if it
/// lowers RSS by more than a relative tie tolerance.
pub fn forward_pass(x: &FeatureMatrix, y: &[f64], cfg: &MarsConfig) -> ForwardPass {
    let n = x.n_rows();
    let knots = candidate_knots(x);
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut r: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let mut q = vec![vec![1.0 / (n as f64).sqrt(); n]];
    let mut rss = dot(&r, &r);
    let tss = rss;
    let tie_tol = 1e-9 * tss;

    // Parents: (term, column). Index 0 is the intercept.
    let mut parents: Vec<(BasisTerm, Vec<f64>)> = vec![(BasisTerm::default(), vec![1.0; n])];
    let mut pass = ForwardPass { terms: Vec::new(), rss_path: vec![rss], selections: Vec::new() };
    let mut bp = vec![0.0; n];
    let mut bm = vec![0.0; n];

    while parents.len() + 2 <= cfg.max_terms {
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for (pi, (term, pcol)) in parents.iter().enumerate() {
            if term.degree() >= cfg.max_degree {
                continue;
            }
            for (v, ks) in knots.iter().enumerate() {
                if term.uses(v) {
                    continue;
                }
                for &t in ks {
                    for i in 0..n {
                        let xv = x.get(i, v);
                        bp[i] = pcol[i] * (xv - t).max(0.0);
                        bm[i] = pcol[i] * (t - xv).max(0.0);
                    }
                    let cand = rss - pair_reduction(&q, &r, &bp, &bm);
                    if best.map_or(true, |(b, ..)| cand < b - tie_tol) {
                        best = Some((cand, pi, v, t));
                    }
                }
            }
        }
        let Some((cand_rss, pi, v, t)) = best else { break };
        if !(rss - cand_rss > cfg.min_rss_improvement * tss) {
            break;
        }
        let (parent_term, pcol) = parents[pi].clone();
        for dir in [Direction::Plus, Direction::Minus] {
            let hinge = Hinge { var: v, knot: t, dir };
            let col: Vec<f64> = (0..n).map(|i| pcol[i] * hinge.eval(x.get(i, v))).collect();
            if col.iter().all(|&c| c == 0.0) {
                continue;
            }
            extend_basis(&mut q, &mut r, &col);
            let term = parent_term.with(hinge);
            pass.terms.push(term.clone());
            parents.push((term, col));
        }
        rss = dot(&r, &r);
        pass.rss_path.push(rss);
        pass.selections.push((pi, v, t));
    }
    pass
}
