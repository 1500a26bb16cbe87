//! Shared domain types and the deterministic prediction paths.
//!
//! Everything here is immutable after construction and safe to share
//! read-only across threads; the operations are pure functions.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomeError};

/// Declares the role of every column: non-sensitive features `A`,
/// sensitive features `S`, the outcome `Y`, plus the index subsets of `S`
/// used by the membership model and by the outcome model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub a_names: Vec<String>,
    pub s_names: Vec<String>,
    pub y_name: String,
    /// 0-based indices into `s_names` entering the membership model.
    pub mem_indices: Vec<usize>,
    /// 0-based indices into `s_names` entering the outcome design.
    pub out_indices: Vec<usize>,
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.a_names.is_empty() {
            return Err(RomeError::InvalidConfig(
                "at least one non-sensitive feature is required".into(),
            ));
        }
        if self.a_names.iter().any(|a| self.s_names.contains(a)) {
            return Err(RomeError::InvalidConfig(
                "sensitive and non-sensitive column names overlap".into(),
            ));
        }
        let p_s = self.s_names.len();
        for &i in self.mem_indices.iter().chain(&self.out_indices) {
            if i >= p_s {
                return Err(RomeError::InvalidConfig(format!(
                    "sensitive index {i} out of range (p_S = {p_s})"
                )));
            }
        }
        Ok(())
    }

    pub fn p_a(&self) -> usize {
        self.a_names.len()
    }

    pub fn p_s(&self) -> usize {
        self.s_names.len()
    }

    /// Length of the outcome design vector: intercept + A + S_out.
    pub fn design_dim(&self) -> usize {
        1 + self.p_a() + self.out_indices.len()
    }
}

/// Tabular data split into non-sensitive features, sensitive features and
/// the outcome, with `n` shared rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub a: Array2<f64>,
    pub s: Array2<f64>,
    pub y: Array1<f64>,
    pub spec: FeatureSpec,
}

impl Dataset {
    pub fn new(a: Array2<f64>, s: Array2<f64>, y: Array1<f64>, spec: FeatureSpec) -> Result<Self> {
        spec.validate()?;
        let n = y.len();
        if a.nrows() != n || s.nrows() != n {
            return Err(RomeError::Data(format!(
                "row counts disagree: a {}, s {}, y {}",
                a.nrows(),
                s.nrows(),
                n
            )));
        }
        if a.ncols() != spec.p_a() || s.ncols() != spec.p_s() {
            return Err(RomeError::Data(format!(
                "column counts disagree with spec: a {} (want {}), s {} (want {})",
                a.ncols(),
                spec.p_a(),
                s.ncols(),
                spec.p_s()
            )));
        }
        let finite = a.iter().chain(s.iter()).chain(y.iter()).all(|v| v.is_finite());
        if !finite {
            return Err(RomeError::Data("non-finite entry in dataset".into()));
        }
        Ok(Self { a, s, y, spec })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// The `n x (1 + p_A + |I_out|)` outcome design matrix `[1, A, S_out]`.
    pub fn design_matrix(&self) -> Array2<f64> {
        let n = self.n();
        let d = self.spec.design_dim();
        let mut x = Array2::<f64>::zeros((n, d));
        for i in 0..n {
            x[(i, 0)] = 1.0;
            for (k, v) in self.a.row(i).iter().enumerate() {
                x[(i, 1 + k)] = *v;
            }
            for (k, &j) in self.spec.out_indices.iter().enumerate() {
                x[(i, 1 + self.spec.p_a() + k)] = self.s[(i, j)];
            }
        }
        x
    }

    /// The `n x |I_mem|` matrix of sensitive features entering the
    /// membership model.
    pub fn s_mem_matrix(&self) -> Array2<f64> {
        let n = self.n();
        let m = self.spec.mem_indices.len();
        let mut out = Array2::<f64>::zeros((n, m));
        for i in 0..n {
            for (k, &j) in self.spec.mem_indices.iter().enumerate() {
                out[(i, k)] = self.s[(i, j)];
            }
        }
        out
    }

    /// Restricts the dataset to the given rows (used by split drivers).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            a: self.a.select(Axis(0), rows),
            s: self.s.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            spec: self.spec.clone(),
        }
    }
}

/// An outcome design row `[1, A_i, S_{i,out}]`. The first entry is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub x: Array1<f64>,
}

impl DesignRow {
    pub fn new(x: Array1<f64>) -> Result<Self> {
        if x.is_empty() || x[0] != 1.0 {
            return Err(RomeError::InvalidConfig(
                "design row must start with an intercept entry of 1".into(),
            ));
        }
        Ok(Self { x })
    }
}

/// Fitted mixture parameters: membership rows `gamma_j`, outcome rows
/// `omega_j` and the fixed outcome variance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureParams {
    pub g: usize,
    /// `G x |I_mem|`, one membership row per group.
    pub gamma: Array2<f64>,
    /// `G x (1 + p_A + |I_out|)`, one outcome row per group.
    pub omega: Array2<f64>,
    pub sigma2: f64,
}

impl MixtureParams {
    pub fn validate(&self, spec: &FeatureSpec) -> Result<()> {
        if self.g == 0 {
            return Err(RomeError::InvalidConfig("group count must be >= 1".into()));
        }
        if self.gamma.dim() != (self.g, spec.mem_indices.len()) {
            return Err(RomeError::DimensionMismatch(format!(
                "gamma is {:?}, want ({}, {})",
                self.gamma.dim(),
                self.g,
                spec.mem_indices.len()
            )));
        }
        if self.omega.dim() != (self.g, spec.design_dim()) {
            return Err(RomeError::DimensionMismatch(format!(
                "omega is {:?}, want ({}, {})",
                self.omega.dim(),
                self.g,
                spec.design_dim()
            )));
        }
        if !(self.sigma2 > 0.0) {
            return Err(RomeError::InvalidConfig("sigma2 must be positive".into()));
        }
        Ok(())
    }
}

/// Posterior membership weights, one row per observation.
#[derive(Debug, Clone)]
pub struct Responsibilities {
    pub w: Array2<f64>,
}

impl Responsibilities {
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.w.rows().into_iter().enumerate() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-10 || row.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(RomeError::Numerical(format!(
                    "responsibility row {i} is not a distribution (sum {sum})"
                )));
            }
        }
        Ok(())
    }
}

/// Robust aggregation weights over the groups, with the constraint
/// parameters that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustWeights {
    pub v: Array1<f64>,
    pub v0: Array1<f64>,
    pub c: f64,
    /// Achieved value of `v' Gram v`.
    pub objective: f64,
}

impl RobustWeights {
    pub fn g(&self) -> usize {
        self.v.len()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.v.len() as f64;
        let sum: f64 = self.v.sum();
        if self.v.iter().any(|&x| x < -1e-12) || (sum - 1.0).abs() > 1e-8 {
            return Err(RomeError::Numerical(format!(
                "weights are not on the simplex (sum {sum})"
            )));
        }
        let dist = (&self.v - &self.v0).mapv(|d| d * d).sum().sqrt();
        if dist > self.c * g.sqrt() + 1e-8 {
            return Err(RomeError::Numerical(format!(
                "weights leave the ball: ||v - v0|| = {dist}, radius {}",
                self.c * g.sqrt()
            )));
        }
        Ok(())
    }
}

/// Softmax of the `G` linear membership scores `gamma_j' s_mem`, with
/// max-subtraction for overflow safety.
pub fn membership_probs(gamma: &Array2<f64>, s_mem: ArrayView1<f64>) -> Result<Array1<f64>> {
    let scores = membership_log_probs(gamma, s_mem)?;
    Ok(scores.mapv(f64::exp))
}

/// Log-softmax of the membership scores. Shares the overflow-safe path
/// with [`membership_probs`]; the E-step consumes this form directly.
pub fn membership_log_probs(gamma: &Array2<f64>, s_mem: ArrayView1<f64>) -> Result<Array1<f64>> {
    if gamma.ncols() != s_mem.len() {
        return Err(RomeError::DimensionMismatch(format!(
            "gamma has {} columns, s_mem has length {}",
            gamma.ncols(),
            s_mem.len()
        )));
    }
    let scores = gamma.dot(&s_mem);
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = scores.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    Ok(scores.mapv(|v| v - log_sum))
}

/// Prediction of a single group's linear model: `omega_j' x`.
pub fn group_predict(omega_j: ArrayView1<f64>, x: &DesignRow) -> Result<f64> {
    if omega_j.len() != x.x.len() {
        return Err(RomeError::DimensionMismatch(format!(
            "omega has length {}, design row has length {}",
            omega_j.len(),
            x.x.len()
        )));
    }
    Ok(omega_j.dot(&x.x))
}

/// The robust ensemble prediction `Σ_j v_j omega_j' x`.
pub fn ensemble_predict(params: &MixtureParams, v: &RobustWeights, x: &DesignRow) -> Result<f64> {
    if v.g() != params.g {
        return Err(RomeError::DimensionMismatch(format!(
            "weights cover {} groups, params have {}",
            v.g(),
            params.g
        )));
    }
    let mut out = 0.0;
    for j in 0..params.g {
        out += v.v[j] * group_predict(params.omega.row(j), x)?;
    }
    Ok(out)
}

/// Column z-score statistics learned on a training split and applied to
/// any split of the same schema.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Standardizer {
    pub a_mean: Array1<f64>,
    pub a_sd: Array1<f64>,
    pub s_mean: Array1<f64>,
    pub s_sd: Array1<f64>,
    pub y_mean: f64,
    pub y_sd: f64,
}

fn column_stats(m: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let n = m.nrows().max(1) as f64;
    let mean = m.sum_axis(Axis(0)) / n;
    let mut sd = Array1::<f64>::zeros(m.ncols());
    for j in 0..m.ncols() {
        let var = m.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
        // constant columns pass through unscaled
        sd[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    }
    (mean, sd)
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Standardizer {
        let (a_mean, a_sd) = column_stats(&train.a);
        let (s_mean, s_sd) = column_stats(&train.s);
        let n = train.n().max(1) as f64;
        let y_mean = train.y.sum() / n;
        let y_var = train.y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n;
        let y_sd = if y_var.sqrt() > 1e-12 { y_var.sqrt() } else { 1.0 };
        Standardizer { a_mean, a_sd, s_mean, s_sd, y_mean, y_sd }
    }

    pub fn apply(&self, data: &Dataset) -> Dataset {
        let mut a = data.a.clone();
        let mut s = data.s.clone();
        for j in 0..a.ncols() {
            a.column_mut(j).mapv_inplace(|v| (v - self.a_mean[j]) / self.a_sd[j]);
        }
        for j in 0..s.ncols() {
            s.column_mut(j).mapv_inplace(|v| (v - self.s_mean[j]) / self.s_sd[j]);
        }
        let y = data.y.mapv(|v| (v - self.y_mean) / self.y_sd);
        Dataset { a, s, y, spec: data.spec.clone() }
    }
}
