//! EM estimation of the mixture of linear regressions.
//!
//! The loop alternates posterior responsibilities (E-step) with weighted
//! logistic / weighted least squares updates (M-step), damped by a
//! backtracking line search on the observed-data log-likelihood so the
//! trace is monotone at every accepted step.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RomeError};
use crate::linalg::weighted_least_squares;
use crate::model::{membership_log_probs, Dataset, MixtureParams, Responsibilities};

const LOG_2PI: f64 = 1.837_877_066_409_345_5;

/// Tuning knobs of the EM loop.
#[derive(Debug, Clone)]
pub struct EmConfig {
    pub g: usize,
    pub max_iter: usize,
    /// Total L1 parameter-change tolerance for convergence.
    pub tau1: f64,
    /// Line-search floor: steps below this alpha are rejected outright.
    pub tau2: f64,
    /// Jitter added to every weighted normal matrix.
    pub ridge: f64,
    /// Minimum group size for group-specific (vs pooled) init regression.
    /// `None` resolves to `5 * design_dim`.
    pub min_group_n: Option<usize>,
    pub seed: u64,
}

impl EmConfig {
    pub fn new(g: usize) -> Self {
        EmConfig {
            g,
            max_iter: 100,
            tau1: 1e-3,
            tau2: 5e-3,
            ridge: 1e-8,
            min_group_n: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 || self.max_iter == 0 {
            return Err(RomeError::InvalidConfig(
                "g and max_iter must be at least 1".into(),
            ));
        }
        if !(self.tau1 > 0.0) || !(self.tau2 > 0.0) || self.ridge < 0.0 {
            return Err(RomeError::InvalidConfig(
                "tolerances must be positive and ridge non-negative".into(),
            ));
        }
        Ok(())
    }

    fn resolved_min_group_n(&self, design_dim: usize) -> usize {
        self.min_group_n.unwrap_or(5 * design_dim)
    }
}

/// Result of an EM run.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub params: MixtureParams,
    pub resp: Responsibilities,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Observed-data log-likelihood after each accepted iteration,
    /// starting with the initial parameters.
    pub trace: Vec<f64>,
    /// Groups whose logistic update diverged at least once.
    pub gamma_warnings: Vec<usize>,
}

/// Initial parameters from hard assignments: one-vs-rest logistic rows for
/// `gamma`, per-group (or pooled, when a group is too small) least squares
/// for `omega`.
pub fn initialize(
    data: &Dataset,
    cfg: &EmConfig,
    init_assign: Option<&[usize]>,
) -> Result<MixtureParams> {
    cfg.validate()?;
    let n = data.n();
    if cfg.g > n {
        return Err(RomeError::InvalidConfig(format!(
            "{} groups requested for {} rows",
            cfg.g, n
        )));
    }
    let labels: Vec<usize> = match init_assign {
        Some(z) => {
            if z.len() != n {
                return Err(RomeError::InvalidConfig(format!(
                    "init_assign has {} labels for {} rows",
                    z.len(),
                    n
                )));
            }
            if z.iter().any(|&l| l >= cfg.g) {
                return Err(RomeError::InvalidConfig(
                    "init_assign label out of range".into(),
                ));
            }
            z.to_vec()
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            (0..n).map(|_| rng.gen_range(0..cfg.g)).collect()
        }
    };

    let s_mem = data.s_mem_matrix();
    let m = s_mem.ncols();
    let mut gamma = Array2::<f64>::zeros((cfg.g, m));
    if cfg.g > 1 {
        for j in 0..cfg.g {
            let target: Array1<f64> =
                labels.iter().map(|&z| if z == j { 1.0 } else { 0.0 }).collect();
            let row = irls_logistic(s_mem.view(), target.view(), None, &Array1::zeros(m))
                .unwrap_or_else(|_| Array1::zeros(m));
            gamma.row_mut(j).assign(&row);
        }
    }

    let x = data.design_matrix();
    let d = x.ncols();
    let pooled = weighted_least_squares(x.view(), data.y.view(), None, cfg.ridge)?;
    let min_group_n = cfg.resolved_min_group_n(d);
    let mut omega = Array2::<f64>::zeros((cfg.g, d));
    for j in 0..cfg.g {
        let rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, &z)| (z == j).then_some(i))
            .collect();
        if rows.len() >= min_group_n {
            let xj = x.select(Axis(0), &rows);
            let yj = data.y.select(Axis(0), &rows);
            omega
                .row_mut(j)
                .assign(&weighted_least_squares(xj.view(), yj.view(), None, cfg.ridge)?);
        } else {
            omega.row_mut(j).assign(&pooled);
        }
    }

    let params = MixtureParams { g: cfg.g, gamma, omega, sigma2: 1.0 };
    params.validate(&data.spec)?;
    Ok(params)
}

/// Posterior responsibilities, computed row-wise in log space.
pub fn e_step(data: &Dataset, params: &MixtureParams) -> Result<Responsibilities> {
    params.validate(&data.spec)?;
    let n = data.n();
    let x = data.design_matrix();
    let s_mem = data.s_mem_matrix();
    let mut w = Array2::<f64>::zeros((n, params.g));
    for i in 0..n {
        let log_p = membership_log_probs(&params.gamma, s_mem.row(i))?;
        let mut log_post = Array1::<f64>::zeros(params.g);
        for j in 0..params.g {
            let r = data.y[i] - params.omega.row(j).dot(&x.row(i));
            log_post[j] = log_p[j] - 0.5 * r * r / params.sigma2;
        }
        let max = log_post.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(RomeError::Numerical(format!(
                "responsibility underflow at row {i}"
            )));
        }
        let denom: f64 = log_post.iter().map(|v| (v - max).exp()).sum();
        for j in 0..params.g {
            w[(i, j)] = (log_post[j] - max).exp() / denom;
        }
    }
    Ok(Responsibilities { w })
}

/// One IRLS pass for a binomial logistic regression with fractional
/// targets in [0,1] and optional case weights. No intercept column is
/// added; the membership model scores are bare linear forms.
fn irls_logistic(
    x: ArrayView2<f64>,
    target: ArrayView1<f64>,
    case_weights: Option<ArrayView1<f64>>,
    beta0: &Array1<f64>,
) -> Result<Array1<f64>> {
    const MAX_ITER: usize = 50;
    const W_FLOOR: f64 = 1e-10;
    let n = x.nrows();
    let mut beta = beta0.clone();
    for _ in 0..MAX_ITER {
        let eta = x.dot(&beta);
        let mut irls_w = Array1::<f64>::zeros(n);
        let mut z = Array1::<f64>::zeros(n);
        for i in 0..n {
            let mu = 1.0 / (1.0 + (-eta[i]).exp());
            let var = (mu * (1.0 - mu)).max(W_FLOOR);
            let cw = case_weights.map_or(1.0, |w| w[i]);
            irls_w[i] = cw * var;
            z[i] = eta[i] + (target[i] - mu) / var;
        }
        let new = weighted_least_squares(x, z.view(), Some(irls_w.view()), 1e-10)?;
        if new.iter().any(|v| !v.is_finite()) {
            return Err(RomeError::Numerical("IRLS produced non-finite step".into()));
        }
        let delta = (&new - &beta).mapv(f64::abs).iter().cloned().fold(0.0, f64::max);
        beta = new;
        if delta < 1e-8 {
            break;
        }
    }
    Ok(beta)
}

/// Candidate membership rows: per-group weighted logistic regression of
/// the fractional responsibilities on `S_mem`. A group whose inner solve
/// diverges keeps its old row and is reported in the returned flags.
pub fn m_step_gamma(
    data: &Dataset,
    resp: &Responsibilities,
    gamma_old: &Array2<f64>,
) -> (Array2<f64>, Vec<bool>) {
    let g = gamma_old.nrows();
    let s_mem = data.s_mem_matrix();
    let mut gamma = gamma_old.clone();
    let mut diverged = vec![false; g];
    if g == 1 {
        // softmax over a single score is identically 1; keep the zero row
        return (gamma, diverged);
    }
    for j in 0..g {
        let target = resp.w.column(j);
        match irls_logistic(s_mem.view(), target, None, &gamma_old.row(j).to_owned()) {
            Ok(row) => gamma.row_mut(j).assign(&row),
            Err(_) => diverged[j] = true,
        }
    }
    (gamma, diverged)
}

/// Candidate outcome rows: weighted least squares per group with the
/// responsibilities as diagonal weights. A group with vanishing total
/// responsibility keeps its previous row.
pub fn m_step_omega(
    data: &Dataset,
    resp: &Responsibilities,
    omega_old: &Array2<f64>,
    cfg: &EmConfig,
) -> Result<Array2<f64>> {
    let g = omega_old.nrows();
    let x = data.design_matrix();
    let mut omega = omega_old.clone();
    for j in 0..g {
        let w = resp.w.column(j);
        if w.sum() < 1e-6 {
            continue;
        }
        let row = weighted_least_squares(x.view(), data.y.view(), Some(w), cfg.ridge)?;
        omega.row_mut(j).assign(&row);
    }
    Ok(omega)
}

/// Observed-data log-likelihood with the full Gaussian constant.
pub fn log_likelihood(data: &Dataset, params: &MixtureParams) -> Result<f64> {
    params.validate(&data.spec)?;
    let x = data.design_matrix();
    let s_mem = data.s_mem_matrix();
    let log_norm = -0.5 * (LOG_2PI + params.sigma2.ln());
    let mut total = 0.0;
    for i in 0..data.n() {
        let log_p = membership_log_probs(&params.gamma, s_mem.row(i))?;
        let mut best = f64::NEG_INFINITY;
        let mut terms = Vec::with_capacity(params.g);
        for j in 0..params.g {
            let r = data.y[i] - params.omega.row(j).dot(&x.row(i));
            let t = log_p[j] + log_norm - 0.5 * r * r / params.sigma2;
            best = best.max(t);
            terms.push(t);
        }
        total += best + terms.iter().map(|t| (t - best).exp()).sum::<f64>().ln();
    }
    if !total.is_finite() {
        return Err(RomeError::Numerical("non-finite log-likelihood".into()));
    }
    Ok(total)
}

fn blend(old: &MixtureParams, cand: &MixtureParams, alpha: f64) -> MixtureParams {
    MixtureParams {
        g: old.g,
        gamma: &old.gamma + &((&cand.gamma - &old.gamma) * alpha),
        omega: &old.omega + &((&cand.omega - &old.omega) * alpha),
        sigma2: old.sigma2,
    }
}

/// Backtracking step from `params_old` toward `params_candidate`:
/// tries alpha = 0.5, 0.25, ... and returns the first step that strictly
/// improves the observed-data log-likelihood. If alpha falls below `tau2`
/// without improvement, returns the old parameters with alpha = 0.
pub fn line_search_step(
    data: &Dataset,
    params_old: &MixtureParams,
    params_candidate: &MixtureParams,
    cfg: &EmConfig,
) -> Result<(MixtureParams, f64)> {
    let ll_old = log_likelihood(data, params_old)?;
    let mut alpha = 0.5;
    while alpha >= cfg.tau2 {
        let trial = blend(params_old, params_candidate, alpha);
        if log_likelihood(data, &trial)? > ll_old {
            return Ok((trial, alpha));
        }
        alpha *= 0.5;
    }
    Ok((params_old.clone(), 0.0))
}

fn param_change(a: &MixtureParams, b: &MixtureParams) -> f64 {
    (&a.gamma - &b.gamma).mapv(f64::abs).sum() + (&a.omega - &b.omega).mapv(f64::abs).sum()
}

/// Runs the full EM loop from (optionally misspecified) hard assignments.
pub fn fit(data: &Dataset, cfg: &EmConfig, init_assign: Option<&[usize]>) -> Result<EmFit> {
    cfg.validate()?;
    let mut params = initialize(data, cfg, init_assign)?;
    let mut trace = vec![log_likelihood(data, &params)?];
    let mut gamma_warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iter {
        iterations = iter + 1;
        let resp = e_step(data, &params)
            .map_err(|e| RomeError::Numerical(format!("iteration {iterations}: {e}")))?;
        let (gamma_cand, diverged) = m_step_gamma(data, &resp, &params.gamma);
        for (j, &flag) in diverged.iter().enumerate() {
            if flag && !gamma_warnings.contains(&j) {
                gamma_warnings.push(j);
            }
        }
        let omega_cand = m_step_omega(data, &resp, &params.omega, cfg)
            .map_err(|e| RomeError::Numerical(format!("iteration {iterations}: {e}")))?;
        let candidate = MixtureParams {
            g: params.g,
            gamma: gamma_cand,
            omega: omega_cand,
            sigma2: params.sigma2,
        };
        let (accepted, alpha) = line_search_step(data, &params, &candidate, cfg)?;
        let delta = param_change(&accepted, &params);
        params = accepted;
        if alpha > 0.0 {
            trace.push(log_likelihood(data, &params)?);
        }
        if delta < cfg.tau1 {
            converged = true;
            break;
        }
    }

    let resp = e_step(data, &params)?;
    let loglik = log_likelihood(data, &params)?;
    Ok(EmFit { params, resp, loglik, iterations, converged, trace, gamma_warnings })
}

/// AIC and BIC from the maximized log-likelihood.
pub fn information_criteria(fit: &EmFit, data: &Dataset) -> (f64, f64) {
    let g = fit.params.g as f64;
    let k = g * data.spec.mem_indices.len() as f64 + g * data.spec.design_dim() as f64;
    let aic = 2.0 * k - 2.0 * fit.loglik;
    let bic = k * (data.n() as f64).ln() - 2.0 * fit.loglik;
    (aic, bic)
}
