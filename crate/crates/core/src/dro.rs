//! Robust aggregation weights over the fitted groups.
//!
//! The weights minimize the quadratic form `v' Gram v` over the
//! probability simplex intersected with an L2 ball around a baseline.
//! Group counts are tiny, so projected gradient descent with Dykstra's
//! alternating projections onto the two sets is both simple and easy to
//! certify against a brute-force grid.

use ndarray::{Array1, Array2};

use crate::error::{Result, RomeError};
use crate::linalg::spectral_radius;
use crate::model::{Dataset, MixtureParams, RobustWeights};

/// Empirical second-moment matrix of the group predictions.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub gamma_hat: Array2<f64>,
}

impl GramMatrix {
    pub fn g(&self) -> usize {
        self.gamma_hat.nrows()
    }
}

/// Solver configuration for the constrained quadratic program.
#[derive(Debug, Clone)]
pub struct DroConfig {
    /// Radius constant in [0,1]; the ball radius is `c * sqrt(G)`.
    pub c: f64,
    /// Baseline weights; `None` means uniform.
    pub v0: Option<Array1<f64>>,
    pub max_iter: usize,
    /// Step size; `None` resolves to `1 / (2 lambda_max(Gram))`, the
    /// inverse Lipschitz constant of the objective gradient `2 Gram v`.
    pub step: Option<f64>,
    /// Stop once the iterate stays within this displacement.
    pub tol: f64,
}

impl DroConfig {
    pub fn new(c: f64) -> Self {
        DroConfig { c, v0: None, max_iter: 50_000, step: None, tol: 1e-12 }
    }

    fn baseline(&self, g: usize) -> Result<Array1<f64>> {
        match &self.v0 {
            None => Ok(Array1::from_elem(g, 1.0 / g as f64)),
            Some(v0) => {
                if v0.len() != g {
                    return Err(RomeError::DimensionMismatch(format!(
                        "baseline has length {}, Gram is {}x{}",
                        v0.len(),
                        g,
                        g
                    )));
                }
                let sum: f64 = v0.sum();
                if v0.iter().any(|&x| x < -1e-12) || (sum - 1.0).abs() > 1e-8 {
                    return Err(RomeError::InvalidConfig(
                        "baseline v0 must lie on the simplex".into(),
                    ));
                }
                Ok(v0.clone())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.c) {
            return Err(RomeError::InvalidConfig(format!(
                "radius constant c = {} outside [0,1]",
                self.c
            )));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(RomeError::InvalidConfig(
                "max_iter must be >= 1 and tol positive".into(),
            ));
        }
        Ok(())
    }
}

/// `Gram[j][k] = (1/n) sum_i f_j(X_i) f_k(X_i)` over the supplied rows,
/// symmetrized by averaging with its transpose.
pub fn estimate_gram(params: &MixtureParams, data: &Dataset) -> Result<GramMatrix> {
    params.validate(&data.spec)?;
    let n = data.n();
    if n == 0 {
        return Err(RomeError::Data("empty dataset".into()));
    }
    let x = data.design_matrix();
    // n x G prediction matrix
    let preds = x.dot(&params.omega.t());
    let mut gram = preds.t().dot(&preds) / n as f64;
    let sym = (&gram + &gram.t()) / 2.0;
    gram.assign(&sym);
    Ok(GramMatrix { gamma_hat: gram })
}

/// Euclidean projection onto the probability simplex (sort and threshold).
pub fn project_simplex(u: &Array1<f64>) -> Array1<f64> {
    let mut sorted: Vec<f64> = u.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        // theta comes from the last prefix whose smallest kept entry
        // stays positive after the shift
        if v - t > 0.0 {
            theta = t;
        }
    }
    u.mapv(|v| (v - theta).max(0.0))
}

/// Euclidean projection onto the ball of radius `r` around `v0`.
pub fn project_ball(u: &Array1<f64>, v0: &Array1<f64>, r: f64) -> Array1<f64> {
    let diff = u - v0;
    let norm = diff.dot(&diff).sqrt();
    if norm <= r || norm == 0.0 {
        u.clone()
    } else {
        v0 + &(diff * (r / norm))
    }
}

/// Dykstra's alternating projection onto simplex ∩ ball.
fn project_intersection(
    u: &Array1<f64>,
    v0: &Array1<f64>,
    r: f64,
) -> Result<Array1<f64>> {
    const MAX_INNER: usize = 2000;
    const FEAS_TOL: f64 = 1e-10;
    let mut x = u.clone();
    let mut p = Array1::<f64>::zeros(u.len());
    let mut q = Array1::<f64>::zeros(u.len());
    for _ in 0..MAX_INNER {
        let y = project_simplex(&(&x + &p));
        p = &x + &p - &y;
        let x_next = project_ball(&(&y + &q), v0, r);
        q = &y + &q - &x_next;

        // feasibility alone is not convergence: the cycle must also have
        // reached a fixed point, otherwise the returned point is feasible
        // but not the projection
        let settled = x_next
            .iter()
            .zip(x.iter())
            .chain(x_next.iter().zip(y.iter()))
            .all(|(a, b)| (a - b).abs() <= 1e-13);
        x = x_next;
        let on_simplex = (x.sum() - 1.0).abs() <= FEAS_TOL
            && x.iter().all(|&v| v >= -FEAS_TOL);
        let diff = &x - v0;
        let in_ball = diff.dot(&diff).sqrt() <= r + FEAS_TOL;
        if settled && on_simplex && in_ball {
            return Ok(x);
        }
    }
    Err(RomeError::Infeasible(
        "Dykstra projection did not reach the intersection".into(),
    ))
}

/// Minimizes `v' Gram v` over the simplex ∩ ball by projected gradient
/// descent from the baseline.
pub fn solve_v(gram: &GramMatrix, cfg: &DroConfig) -> Result<RobustWeights> {
    cfg.validate()?;
    let g = gram.g();
    let v0 = cfg.baseline(g)?;
    let r = cfg.c * (g as f64).sqrt();
    let obj = |v: &Array1<f64>| v.dot(&gram.gamma_hat.dot(v));

    // degenerate cases: point-sized ball or all-zero predictors
    let lambda_max = spectral_radius(&gram.gamma_hat, 50);
    if cfg.c == 0.0 || lambda_max <= 0.0 {
        let objective = obj(&v0);
        return Ok(RobustWeights { v: v0.clone(), v0, c: cfg.c, objective });
    }

    // accelerated projected gradient: plain PGD creeps along the
    // constraint boundary when the Gram matrix is near-singular, the
    // momentum sequence restores a usable rate there
    // the gradient is 2*Gram*v, so the descent-safe step is 1/(2 lmax);
    // 1/lmax sits exactly at the 2-cycle boundary of gradient descent
    let step = cfg.step.unwrap_or(0.5 / lambda_max);
    let mut v = v0.clone();
    let mut y = v.clone();
    let mut t_k = 1.0_f64;
    let mut best = v.clone();
    let mut best_obj = obj(&v);
    let mut stagnant = 0usize;
    let mut prev_obj = best_obj;
    for _ in 0..cfg.max_iter {
        let grad = gram.gamma_hat.dot(&y) * 2.0;
        let mut v_next = project_intersection(&(&y - &(grad * step)), &v0, r)?;
        let mut cand_obj = obj(&v_next);
        if cand_obj > prev_obj {
            // adaptive restart: drop the momentum and take a plain
            // projected step from the last iterate
            t_k = 1.0;
            let grad = gram.gamma_hat.dot(&v) * 2.0;
            v_next = project_intersection(&(&v - &(grad * step)), &v0, r)?;
            cand_obj = obj(&v_next);
        }
        let t_next = (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt()) / 2.0;
        // the extrapolation point may leave the feasible set; only the
        // projected iterates are ever returned
        y = &v_next + &((&v_next - &v) * ((t_k - 1.0) / t_next));
        // stop on a persistent fixed point, not on slow objective
        // decrease: flat valleys shrink the per-iteration gain long
        // before the iterate is stationary
        let moved = v_next
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved < cfg.tol {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        if cand_obj < best_obj {
            best = v_next.clone();
            best_obj = cand_obj;
        }
        v = v_next;
        prev_obj = cand_obj;
        t_k = t_next;
        if stagnant >= 10 {
            break;
        }
    }

    let out = RobustWeights { v: best, v0, c: cfg.c, objective: best_obj };
    out.validate()?;
    Ok(out)
}

/// Solves the program for every radius in the grid.
pub fn constraint_sweep(
    gram: &GramMatrix,
    v0: Option<&Array1<f64>>,
    c_grid: &[f64],
) -> Result<Vec<RobustWeights>> {
    c_grid
        .iter()
        .map(|&c| {
            let mut cfg = DroConfig::new(c);
            cfg.v0 = v0.cloned();
            solve_v(gram, &cfg)
        })
        .collect()
}
