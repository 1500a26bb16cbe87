//! Synthetic benchmark generator: four latent groups whose membership is
//! a multinomial logistic function of five sensitive attributes, with
//! group-specific linear outcome models over twenty covariates.
//!
//! The membership and coefficient matrices are fixed constants; the
//! generator only samples covariates, labels and noise.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::dro::{constraint_sweep, estimate_gram};
use crate::em::{fit as em_fit, EmConfig};
use crate::error::{Result, RomeError};
use crate::linalg::weighted_least_squares;
use crate::model::{membership_probs, Dataset, FeatureSpec, RobustWeights};

/// True membership parameter matrix (4 groups x 5 sensitive features).
pub const GAMMA_TRUE: [[f64; 5]; 4] = [
    [2.0, 2.0, 2.0, 2.0, 2.0],
    [-3.0, -2.0, -5.0, 0.1, 0.1],
    [0.1, -10.0, 0.1, 0.1, 0.1],
    [-2.0, -2.0, -2.0, -2.0, -2.0],
];

/// True outcome coefficients, one row per design entry
/// (intercept, A1..A15, S1..S5), one column per group.
pub const BETA_TRUE: [[f64; 4]; 21] = [
    [0.844, 0.090, 0.962, 0.618],
    [-0.423, 0.749, 1.309, 0.307],
    [0.696, -0.545, 0.559, 1.703],
    [-0.449, 1.646, -1.165, 1.361],
    [-0.737, -0.429, 0.255, 1.384],
    [1.144, -1.003, 1.014, -1.377],
    [0.988, 1.666, -1.336, -1.209],
    [-1.702, -1.681, -1.295, 0.745],
    [1.217, 1.800, -1.767, 0.218],
    [-0.922, -1.566, 0.744, -0.287],
    [0.403, -1.523, 0.395, -1.727],
    [1.729, 1.151, 0.292, 0.830],
    [-1.661, 1.461, 1.628, -1.368],
    [-0.217, 1.637, 0.840, -1.781],
    [-0.437, -0.831, -0.509, 1.747],
    [-1.520, -0.487, -0.325, -1.428],
    [-0.372, -0.557, 1.058, 0.414],
    [0.826, -1.509, -0.450, 0.903],
    [-1.453, -0.848, -0.748, 1.429],
    [-0.773, 0.996, 0.765, 1.460],
    [-1.134, -1.441, 0.509, -1.790],
];

/// The constraint radius grid used by the benchmark sweep: 1.0 and 0.6,
/// then 0.5 down to 0.02 (27 values total).
pub fn constraint_grid() -> Vec<f64> {
    let mut grid = vec![1.0, 0.6];
    let mut c = 0.5_f64;
    while c > 0.015 {
        grid.push((c * 100.0).round() / 100.0);
        c -= 0.02;
    }
    grid
}

/// Generator settings. Defaults mirror the benchmark: n = 8000 rows,
/// 4 groups, 15 non-sensitive and 5 sensitive features, unit noise.
#[derive(Debug, Clone)]
pub struct SimSpec {
    pub n: usize,
    pub g: usize,
    pub p_a: usize,
    pub p_s: usize,
    pub gamma_true: Array2<f64>,
    /// `(1 + p_a + p_s) x g`, column j holds group j's coefficients.
    pub beta_true: Array2<f64>,
    pub noise_sd: f64,
    pub misspec_rate: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn benchmark(n: usize, seed: u64) -> SimSpec {
        let gamma = Array2::from_shape_fn((4, 5), |(i, j)| GAMMA_TRUE[i][j]);
        let beta = Array2::from_shape_fn((21, 4), |(i, j)| BETA_TRUE[i][j]);
        SimSpec {
            n,
            g: 4,
            p_a: 15,
            p_s: 5,
            gamma_true: gamma,
            beta_true: beta,
            noise_sd: 1.0,
            misspec_rate: 0.5,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_true.dim() != (self.g, self.p_s) {
            return Err(RomeError::InvalidConfig(format!(
                "gamma_true is {:?}, want ({}, {})",
                self.gamma_true.dim(),
                self.g,
                self.p_s
            )));
        }
        if self.beta_true.dim() != (1 + self.p_a + self.p_s, self.g) {
            return Err(RomeError::InvalidConfig(format!(
                "beta_true is {:?}, want ({}, {})",
                self.beta_true.dim(),
                1 + self.p_a + self.p_s,
                self.g
            )));
        }
        if !(0.0..=1.0).contains(&self.misspec_rate) || !(self.noise_sd > 0.0) {
            return Err(RomeError::InvalidConfig(
                "misspec_rate must be in [0,1] and noise_sd positive".into(),
            ));
        }
        Ok(())
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        FeatureSpec {
            a_names: (1..=self.p_a).map(|k| format!("a{k}")).collect(),
            s_names: (1..=self.p_s).map(|k| format!("s{k}")).collect(),
            y_name: "y".into(),
            mem_indices: (0..self.p_s).collect(),
            out_indices: (0..self.p_s).collect(),
        }
    }
}

/// Draws a dataset and its true group labels.
pub fn generate(spec: &SimSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n;
    let mut a = Array2::<f64>::zeros((n, spec.p_a));
    let mut s = Array2::<f64>::zeros((n, spec.p_s));
    let mut y = Array1::<f64>::zeros(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        for v in a.row_mut(i).iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        for v in s.row_mut(i).iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let probs = membership_probs(&spec.gamma_true, s.row(i))?;
        let u: f64 = rng.gen_range(0.0..1.0);
        let mut cum = 0.0;
        let mut z = spec.g - 1;
        for (j, &p) in probs.iter().enumerate() {
            cum += p;
            if u < cum {
                z = j;
                break;
            }
        }
        labels.push(z);
        let beta = spec.beta_true.column(z);
        let mut mean = beta[0];
        for (k, &v) in a.row(i).iter().enumerate() {
            mean += beta[1 + k] * v;
        }
        for (k, &v) in s.row(i).iter().enumerate() {
            mean += beta[1 + spec.p_a + k] * v;
        }
        let eps: f64 = StandardNormal.sample(&mut rng);
        y[i] = mean + spec.noise_sd * eps;
    }
    let data = Dataset::new(a, s, y, spec.feature_spec())?;
    Ok((data, labels))
}

/// Corrupts a uniformly chosen `floor(rate * n)` subset of the labels,
/// replacing each with a uniformly drawn *wrong* label.
pub fn misspecify_init(true_labels: &[usize], rate: f64, g: usize, seed: u64) -> Vec<usize> {
    assert!((0.0..=1.0).contains(&rate), "rate outside [0,1]");
    let n = true_labels.len();
    let k = (rate * n as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut labels = true_labels.to_vec();
    for &i in indices.iter().take(k) {
        if g < 2 {
            break;
        }
        let offset = rng.gen_range(1..g);
        labels[i] = (true_labels[i] + offset) % g;
    }
    labels
}

/// Per-group and worst-group test MSE of a constant-weight ensemble (or
/// any other predictor evaluated row-wise).
pub fn worst_group_mse(preds: &Array1<f64>, y: &Array1<f64>, labels: &[usize], g: usize) -> (Vec<f64>, f64) {
    let mut sse = vec![0.0; g];
    let mut count = vec![0usize; g];
    for i in 0..y.len() {
        let r = y[i] - preds[i];
        sse[labels[i]] += r * r;
        count[labels[i]] += 1;
    }
    let per_group: Vec<f64> = sse
        .iter()
        .zip(&count)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    let worst = per_group
        .iter()
        .cloned()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    (per_group, worst)
}

/// Best permutation of fitted rows against the true coefficient columns,
/// minimizing the total squared distance. Returns the reordered omega.
pub fn match_groups(omega: &Array2<f64>, beta_true: &Array2<f64>) -> Array2<f64> {
    let g = omega.nrows();
    let mut perm: Vec<usize> = (0..g).collect();
    let mut best_perm = perm.clone();
    let mut best_cost = f64::INFINITY;
    permute(&mut perm, 0, &mut |p| {
        let mut cost = 0.0;
        for (col, &row) in p.iter().enumerate() {
            let d = &omega.row(row) - &beta_true.column(col);
            cost += d.dot(&d);
        }
        if cost < best_cost {
            best_cost = cost;
            best_perm = p.to_vec();
        }
    });
    let mut out = Array2::<f64>::zeros(omega.dim());
    for (col, &row) in best_perm.iter().enumerate() {
        out.row_mut(col).assign(&omega.row(row));
    }
    out
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// One sweep entry of a replication.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub c: f64,
    pub worst_mse: f64,
    pub weights: RobustWeights,
}

/// Everything recorded for a single replication seed.
#[derive(Debug, Clone)]
pub struct Replication {
    pub seed: u64,
    pub pooled_worst_mse: f64,
    pub pooled_per_group: Vec<f64>,
    pub pooled_coefs: Array1<f64>,
    pub sweep: Vec<SweepPoint>,
    pub best_c: f64,
    pub best_worst_mse: f64,
    pub best_per_group: Vec<f64>,
    /// Fitted omega rows reordered to the true group columns.
    pub omega_matched: Array2<f64>,
    pub em_converged: bool,
    pub em_iterations: usize,
}

/// Runs the full replication protocol for every seed: generate train and
/// independent test data, fit the mixture from a misspecified start,
/// sweep the constraint grid and score everything on the true test
/// groups. Replications run in parallel and are returned in seed order.
pub fn replication_run(
    spec: &SimSpec,
    em_cfg: &EmConfig,
    c_grid: &[f64],
    seeds: &[u64],
) -> Result<Vec<Replication>> {
    if seeds.is_empty() {
        return Err(RomeError::InvalidConfig("no replication seeds given".into()));
    }
    let results: Vec<Result<Replication>> = seeds
        .par_iter()
        .map(|&seed| {
            replicate_one(spec, em_cfg, c_grid, seed)
                .map_err(|e| RomeError::Numerical(format!("seed {seed}: {e}")))
        })
        .collect();
    results.into_iter().collect()
}

fn replicate_one(
    spec: &SimSpec,
    em_cfg: &EmConfig,
    c_grid: &[f64],
    seed: u64,
) -> Result<Replication> {
    let mut train_spec = spec.clone();
    train_spec.seed = seed.wrapping_mul(2).wrapping_add(1);
    let mut test_spec = spec.clone();
    test_spec.seed = seed.wrapping_mul(2).wrapping_add(2);
    let (train, train_labels) = generate(&train_spec)?;
    let (test, test_labels) = generate(&test_spec)?;

    let init = misspecify_init(&train_labels, spec.misspec_rate, spec.g, seed ^ 0x5151);
    let mut cfg = em_cfg.clone();
    cfg.g = spec.g;
    cfg.seed = seed;
    let fit = em_fit(&train, &cfg, Some(&init))?;

    // pooled baseline
    let x_train = train.design_matrix();
    let pooled = weighted_least_squares(x_train.view(), train.y.view(), None, cfg.ridge)?;
    let x_test = test.design_matrix();
    let pooled_preds = x_test.dot(&pooled);
    let (pooled_per_group, pooled_worst) =
        worst_group_mse(&pooled_preds, &test.y, &test_labels, spec.g);

    // robust ensemble across the constraint grid; the Gram matrix is
    // estimated on the training rows
    let gram = estimate_gram(&fit.params, &train)?;
    let sweeps = constraint_sweep(&gram, None, c_grid)?;
    let group_preds = x_test.dot(&fit.params.omega.t());
    let mut sweep = Vec::with_capacity(sweeps.len());
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for w in sweeps {
        let preds = group_preds.dot(&w.v);
        let (per_group, worst) = worst_group_mse(&preds, &test.y, &test_labels, spec.g);
        if best.as_ref().is_none_or(|(_, b, _)| worst < *b) {
            best = Some((w.c, worst, per_group));
        }
        sweep.push(SweepPoint { c: w.c, worst_mse: worst, weights: w });
    }
    let (best_c, best_worst_mse, best_per_group) = best.unwrap();

    let truth = mixture_truth(spec);
    let omega_matched = match_groups(&fit.params.omega, &truth);

    Ok(Replication {
        seed,
        pooled_worst_mse: pooled_worst,
        pooled_per_group,
        pooled_coefs: pooled,
        sweep,
        best_c,
        best_worst_mse,
        best_per_group,
        omega_matched,
        em_converged: fit.converged,
        em_iterations: fit.iterations,
    })
}

/// The true coefficient matrix in design order (intercept, A, S_out),
/// one column per group. With the benchmark spec this is `beta_true`.
pub fn mixture_truth(spec: &SimSpec) -> Array2<f64> {
    spec.beta_true.clone()
}

/// Mean parameter matrix across replications (after matching), useful
/// for recovery tables.
pub fn mean_matched_omega(reps: &[Replication]) -> Array2<f64> {
    let mut acc = Array2::<f64>::zeros(reps[0].omega_matched.dim());
    for r in reps {
        acc += &r.omega_matched;
    }
    acc /= reps.len() as f64;
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::Axis;

    #[test]
    fn constraint_grid_has_27_values() {
        let grid = constraint_grid();
        assert_eq!(grid.len(), 27);
        assert_eq!(grid[0], 1.0);
        assert_eq!(grid[1], 0.6);
        assert_eq!(grid[2], 0.5);
        assert_abs_diff_eq!(*grid.last().unwrap(), 0.02, epsilon = 1e-12);
        assert!(grid.iter().all(|&c| (0.0..=1.0).contains(&c)));
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = SimSpec::benchmark(200, 7);
        let (d1, l1) = generate(&spec).unwrap();
        let (d2, l2) = generate(&spec).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(d1.y, d2.y);
        assert_eq!(d1.a, d2.a);
        assert_eq!(d1.s, d2.s);
    }

    #[test]
    fn covariates_are_roughly_isotropic() {
        let spec = SimSpec::benchmark(8000, 1);
        let (data, _) = generate(&spec).unwrap();
        let n = data.n() as f64;
        // spot-check variances and one cross-covariance
        for j in [0usize, 7, 14] {
            let col = data.a.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!((var - 1.0).abs() < 0.1, "var(a{j}) = {var}");
        }
        let c0 = data.a.column(0);
        let c1 = data.a.column(1);
        let cov = c0
            .iter()
            .zip(c1.iter())
            .map(|(x, y)| x * y)
            .sum::<f64>()
            / n;
        assert!(cov.abs() < 0.1);
    }

    #[test]
    fn group_one_dominates_for_large_positive_s() {
        let spec = SimSpec::benchmark(10, 2);
        let s_big = Array1::from_elem(5, 3.0);
        let p = membership_probs(&spec.gamma_true, s_big.view()).unwrap();
        let argmax = p
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, 0);
        assert!(p[0] > 0.99);
    }

    #[test]
    fn no_group_is_degenerate_at_scale() {
        let spec = SimSpec::benchmark(8000, 3);
        let (_, labels) = generate(&spec).unwrap();
        let mut counts = [0usize; 4];
        for &z in &labels {
            counts[z] += 1;
        }
        for (j, &c) in counts.iter().enumerate() {
            assert!(c as f64 / 8000.0 > 0.01, "group {j} share {}", c as f64 / 8000.0);
        }
    }

    #[test]
    fn ols_on_true_partition_recovers_beta() {
        let spec = SimSpec::benchmark(8000, 4);
        let (data, labels) = generate(&spec).unwrap();
        let x = data.design_matrix();
        let rows: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter_map(|(i, &z)| (z == 0).then_some(i))
            .collect();
        let xg = x.select(Axis(0), &rows);
        let yg = data.y.select(Axis(0), &rows);
        let beta = weighted_least_squares(xg.view(), yg.view(), None, 0.0).unwrap();
        let truth = spec.beta_true.column(0);
        let linf = beta
            .iter()
            .zip(truth.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(linf < 0.15, "L-inf error {linf}");
    }

    #[test]
    fn misspecify_rate_zero_and_one() {
        let labels = vec![0usize, 1, 0, 1, 1, 0];
        assert_eq!(misspecify_init(&labels, 0.0, 2, 1), labels);
        let flipped = misspecify_init(&labels, 1.0, 2, 1);
        for (a, b) in labels.iter().zip(flipped.iter()) {
            assert_eq!(*b, 1 - *a);
        }
    }

    #[test]
    fn misspecify_touches_exact_count() {
        let spec = SimSpec::benchmark(501, 5);
        let (_, labels) = generate(&spec).unwrap();
        let corrupted = misspecify_init(&labels, 0.5, 4, 9);
        let moved = labels
            .iter()
            .zip(corrupted.iter())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(moved, 250); // floor(0.5 * 501)
    }

    #[test]
    fn match_groups_identity_and_swap() {
        let truth = Array2::from_shape_fn((3, 2), |(i, j)| (i * 2 + j) as f64);
        let matched = match_groups(&truth.t().to_owned(), &truth);
        assert_eq!(matched, truth.t().to_owned());
        // swap the two fitted rows; matching must undo it
        let fitted = truth.t().to_owned();
        let swapped = ndarray::stack![Axis(0), fitted.row(1), fitted.row(0)];
        let rematched = match_groups(&swapped, &truth);
        assert_eq!(rematched, fitted);
    }

    #[test]
    fn replication_smoke_run() {
        let spec = SimSpec::benchmark(400, 0);
        let cfg = EmConfig::new(4);
        let reps = replication_run(&spec, &cfg, &[0.0, 0.3, 1.0], &[1, 2]).unwrap();
        assert_eq!(reps.len(), 2);
        for r in &reps {
            assert!(r.pooled_worst_mse.is_finite());
            assert!(r.best_worst_mse.is_finite());
            assert_eq!(r.sweep.len(), 3);
            // best-c worst MSE is the sweep minimum by construction
            let min = r
                .sweep
                .iter()
                .map(|p| p.worst_mse)
                .fold(f64::INFINITY, f64::min);
            assert_abs_diff_eq!(r.best_worst_mse, min, epsilon = 1e-12);
        }
    }
}
