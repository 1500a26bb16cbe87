//! Worst-group evaluation: intersectional subgroup partitioning over
//! sensitive attributes, overall/worst MSE and R², seed aggregation and
//! paired significance tests.

use std::collections::BTreeMap;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Result, RomeError};
use crate::stats::student_t_two_sided_p;

/// How a single sensitive attribute is binned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BinRule {
    /// Distinct values become bins (for discrete attributes).
    Categorical,
    /// Two bins split at the reference median.
    Median,
    /// Four bins split at the reference quartiles.
    Quartile,
}

/// One rule per selected sensitive attribute, identified by column index
/// into the S matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupScheme {
    pub attributes: Vec<(usize, BinRule)>,
}

/// Cut points learned on a reference split, reusable on any evaluation
/// set without touching its values.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedScheme {
    pub attributes: Vec<FittedAttribute>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedAttribute {
    pub column: usize,
    pub rule: BinRule,
    /// Strictly increasing interior cut points (empty for categorical).
    pub cuts: Vec<f64>,
    /// Sorted distinct values (categorical only).
    pub levels: Vec<f64>,
}

/// A subgroup id: one bin index per scheme attribute, in scheme order.
pub type SubgroupId = Vec<usize>;

impl SubgroupScheme {
    /// Learns cut points (or category levels) from the reference split.
    pub fn fit(&self, reference: ArrayView2<f64>) -> Result<FittedScheme> {
        if self.attributes.is_empty() {
            return Err(RomeError::InvalidConfig("subgroup scheme selects no attributes".into()));
        }
        let mut fitted = Vec::with_capacity(self.attributes.len());
        for &(col, rule) in &self.attributes {
            if col >= reference.ncols() {
                return Err(RomeError::InvalidConfig(format!(
                    "scheme attribute {col} outside S matrix ({} columns)",
                    reference.ncols()
                )));
            }
            let mut vals: Vec<f64> = reference.column(col).to_vec();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let fa = match rule {
                BinRule::Categorical => {
                    let mut levels = vals;
                    levels.dedup();
                    FittedAttribute { column: col, rule, cuts: vec![], levels }
                }
                BinRule::Median => {
                    let cuts = vec![quantile(&vals, 0.5)];
                    check_cuts(col, &cuts)?;
                    FittedAttribute { column: col, rule, cuts, levels: vec![] }
                }
                BinRule::Quartile => {
                    let cuts = vec![
                        quantile(&vals, 0.25),
                        quantile(&vals, 0.5),
                        quantile(&vals, 0.75),
                    ];
                    check_cuts(col, &cuts)?;
                    FittedAttribute { column: col, rule, cuts, levels: vec![] }
                }
            };
            fitted.push(fa);
        }
        Ok(FittedScheme { attributes: fitted })
    }
}

fn check_cuts(col: usize, cuts: &[f64]) -> Result<()> {
    for w in cuts.windows(2) {
        if !(w[0] < w[1]) {
            return Err(RomeError::InvalidConfig(format!(
                "attribute {col} has degenerate quantiles (tied cut points); \
                 use a categorical rule or drop it"
            )));
        }
    }
    Ok(())
}

/// Linear-interpolation sample quantile over a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < n {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

impl FittedScheme {
    /// Maps every row of `s` to its subgroup id. Cut points are frozen;
    /// nothing is learned from `s`.
    pub fn partition(&self, s: ArrayView2<f64>) -> Result<Vec<SubgroupId>> {
        let mut ids = Vec::with_capacity(s.nrows());
        for row in s.rows() {
            let mut id = Vec::with_capacity(self.attributes.len());
            for fa in &self.attributes {
                if fa.column >= s.ncols() {
                    return Err(RomeError::DimensionMismatch(format!(
                        "scheme attribute {} outside evaluation S matrix",
                        fa.column
                    )));
                }
                let v = row[fa.column];
                let bin = match fa.rule {
                    BinRule::Categorical => {
                        // nearest known level; unseen values join the closest bin
                        fa.levels
                            .iter()
                            .enumerate()
                            .min_by(|a, b| {
                                (a.1 - v).abs().partial_cmp(&(b.1 - v).abs()).unwrap()
                            })
                            .map(|(i, _)| i)
                            .unwrap_or(0)
                    }
                    _ => fa.cuts.iter().filter(|&&c| v > c).count(),
                };
                id.push(bin);
            }
            ids.push(id);
        }
        Ok(ids)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupMetrics {
    pub n: usize,
    pub mse: f64,
    /// `None` when the subgroup outcome has zero variance.
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub overall_mse: f64,
    pub overall_r2: f64,
    pub worst_mse: f64,
    pub worst_r2: Option<f64>,
    pub per_subgroup: BTreeMap<SubgroupId, SubgroupMetrics>,
    pub worst_mse_id: Option<SubgroupId>,
    pub worst_r2_id: Option<SubgroupId>,
    pub min_n: usize,
}

pub const DEFAULT_MIN_N: usize = 30;

fn mse_of(y: &[f64], yhat: &[f64]) -> f64 {
    y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
}

fn r2_of(y: &[f64], yhat: &[f64], center: f64) -> Option<f64> {
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum();
    let sst: f64 = y.iter().map(|a| (a - center).powi(2)).sum();
    (sst > 0.0).then(|| 1.0 - sse / sst)
}

/// Overall and per-subgroup MSE/R². Subgroups smaller than `min_n` are
/// reported but excluded from the worst-group extremum. When
/// `global_center` is set, subgroup R² uses the full-set mean for SST
/// instead of each subgroup's own mean.
pub fn metrics(
    y: ArrayView1<f64>,
    yhat: ArrayView1<f64>,
    subgroups: &[SubgroupId],
    min_n: usize,
    global_center: bool,
) -> Result<MetricReport> {
    let n = y.len();
    if yhat.len() != n || subgroups.len() != n {
        return Err(RomeError::DimensionMismatch(format!(
            "metrics: y {}, yhat {}, subgroups {}",
            n,
            yhat.len(),
            subgroups.len()
        )));
    }
    if n == 0 || min_n == 0 {
        return Err(RomeError::InvalidConfig("metrics needs rows and min_n >= 1".into()));
    }
    let y_mean = y.sum() / n as f64;
    let yv: Vec<f64> = y.to_vec();
    let yhv: Vec<f64> = yhat.to_vec();
    let overall_mse = mse_of(&yv, &yhv);
    let overall_r2 = r2_of(&yv, &yhv, y_mean).unwrap_or(f64::NAN);

    let mut buckets: BTreeMap<SubgroupId, Vec<usize>> = BTreeMap::new();
    for (i, id) in subgroups.iter().enumerate() {
        buckets.entry(id.clone()).or_default().push(i);
    }

    let mut per_subgroup = BTreeMap::new();
    let mut worst_mse = f64::NEG_INFINITY;
    let mut worst_mse_id = None;
    let mut worst_r2: Option<f64> = None;
    let mut worst_r2_id = None;
    for (id, rows) in &buckets {
        let yg: Vec<f64> = rows.iter().map(|&i| yv[i]).collect();
        let yhg: Vec<f64> = rows.iter().map(|&i| yhv[i]).collect();
        let mse = mse_of(&yg, &yhg);
        let center = if global_center {
            y_mean
        } else {
            yg.iter().sum::<f64>() / yg.len() as f64
        };
        let r2 = r2_of(&yg, &yhg, center);
        if rows.len() >= min_n {
            if mse > worst_mse {
                worst_mse = mse;
                worst_mse_id = Some(id.clone());
            }
            if let Some(r) = r2 {
                if worst_r2.is_none_or(|cur| r < cur) {
                    worst_r2 = Some(r);
                    worst_r2_id = Some(id.clone());
                }
            }
        }
        per_subgroup.insert(id.clone(), SubgroupMetrics { n: rows.len(), mse, r2 });
    }
    if worst_mse_id.is_none() {
        // no subgroup qualified; fall back to the overall figures so the
        // report stays usable, flagged by the missing id
        worst_mse = overall_mse;
    }
    Ok(MetricReport {
        overall_mse,
        overall_r2,
        worst_mse,
        worst_r2,
        per_subgroup,
        worst_mse_id,
        worst_r2_id,
        min_n,
    })
}

/// Paired t-test over per-seed values: returns `(t, p_two_sided,
/// mean_diff)` where the differences are `a - b`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<(f64, f64, f64)> {
    if a.len() != b.len() {
        return Err(RomeError::DimensionMismatch(format!(
            "paired_ttest: {} vs {} values",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(RomeError::InvalidConfig("paired_ttest needs at least 2 pairs".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(RomeError::DegenerateTest(
            "paired differences have zero variance".into(),
        ));
    }
    let t = mean / (var.sqrt() / (n as f64).sqrt());
    let p = student_t_two_sided_p(t, (n - 1) as f64);
    Ok((t, p, mean))
}

/// Significance code for a two-sided p-value: `***`, `**`, `*`, or `ns`.
pub fn significance_code(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        "ns"
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub overall_mse: MeanSe,
    pub overall_r2: MeanSe,
    pub worst_mse: MeanSe,
    pub worst_r2: MeanSe,
    pub seeds: usize,
}

fn mean_se(values: &[f64]) -> MeanSe {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let se = if values.len() < 2 {
        0.0
    } else {
        let s2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
        s2.sqrt() / k.sqrt()
    };
    MeanSe { mean, se }
}

/// Mean and standard error of each headline metric across seeds.
/// Reports whose worst R² is undefined are skipped for that metric.
pub fn aggregate_seeds(reports: &[MetricReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(RomeError::InvalidConfig("aggregate_seeds got no reports".into()));
    }
    let worst_r2: Vec<f64> = reports.iter().filter_map(|r| r.worst_r2).collect();
    Ok(AggregateReport {
        overall_mse: mean_se(&reports.iter().map(|r| r.overall_mse).collect::<Vec<_>>()),
        overall_r2: mean_se(&reports.iter().map(|r| r.overall_r2).collect::<Vec<_>>()),
        worst_mse: mean_se(&reports.iter().map(|r| r.worst_mse).collect::<Vec<_>>()),
        worst_r2: if worst_r2.is_empty() { MeanSe { mean: f64::NAN, se: 0.0 } } else { mean_se(&worst_r2) },
        seeds: reports.len(),
    })
}

impl MetricReport {
    /// Stable-order CSV rows: an `overall` line, then one line per
    /// subgroup sorted by id.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subgroup,n,mse,r2,qualifies\n");
        let total: usize = self.per_subgroup.values().map(|m| m.n).sum();
        out.push_str(&format!(
            "overall,{},{:.10},{:.10},yes\n",
            total, self.overall_mse, self.overall_r2
        ));
        for (id, m) in &self.per_subgroup {
            let idstr = id.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("|");
            let r2 = m.r2.map_or("NA".to_string(), |v| format!("{v:.10}"));
            let q = if m.n >= self.min_n { "yes" } else { "no" };
            out.push_str(&format!("{idstr},{},{:.10},{r2},{q}\n", m.n, m.mse));
        }
        out
    }
}

/// Convenience for tests and pipelines: partition rows of `s_eval` using
/// cuts learned on `s_ref`, then score.
pub fn evaluate(
    scheme: &SubgroupScheme,
    s_ref: ArrayView2<f64>,
    s_eval: ArrayView2<f64>,
    y: &Array1<f64>,
    yhat: &Array1<f64>,
    min_n: usize,
) -> Result<MetricReport> {
    let fitted = scheme.fit(s_ref)?;
    let ids = fitted.partition(s_eval)?;
    metrics(y.view(), yhat.view(), &ids, min_n, false)
}

#[allow(unused)]
fn _assert_eval_types_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<MetricReport>();
    check::<FittedScheme>();
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn col(vals: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((vals.len(), 1), vals.to_vec()).unwrap()
    }

    #[test]
    fn binary_attribute_two_subgroups() {
        let s = col(&[0.0, 1.0, 0.0, 1.0, 1.0]);
        let scheme = SubgroupScheme { attributes: vec![(0, BinRule::Categorical)] };
        let ids = scheme.fit(s.view()).unwrap().partition(s.view()).unwrap();
        let distinct: std::collections::BTreeSet<_> = ids.iter().cloned().collect();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn binary_times_quartile_at_most_eight() {
        let n = 40;
        let s = Array2::from_shape_fn((n, 2), |(i, j)| {
            if j == 0 { (i % 2) as f64 } else { i as f64 }
        });
        let scheme = SubgroupScheme {
            attributes: vec![(0, BinRule::Categorical), (1, BinRule::Quartile)],
        };
        let ids = scheme.fit(s.view()).unwrap().partition(s.view()).unwrap();
        let distinct: std::collections::BTreeSet<_> = ids.iter().cloned().collect();
        assert!(distinct.len() <= 8);
        assert!(distinct.len() >= 4);
    }

    #[test]
    fn median_cut_balances_bins() {
        let n = 101;
        let s = col(&(0..n).map(|i| i as f64 / (n - 1) as f64).collect::<Vec<_>>());
        let scheme = SubgroupScheme { attributes: vec![(0, BinRule::Median)] };
        let ids = scheme.fit(s.view()).unwrap().partition(s.view()).unwrap();
        let lo = ids.iter().filter(|id| id[0] == 0).count();
        let hi = n - lo;
        assert!(lo.abs_diff(hi) <= 1, "bins {lo}/{hi}");
    }

    #[test]
    fn constant_continuous_attribute_rejected() {
        let s = col(&[2.0; 50]);
        let scheme = SubgroupScheme { attributes: vec![(0, BinRule::Quartile)] };
        let err = scheme.fit(s.view()).unwrap_err();
        assert!(err.to_string().contains("attribute 0"), "{err}");
    }

    #[test]
    fn cuts_frozen_from_reference() {
        // reference median is 0; evaluation data all positive must land
        // in the upper bin even though its own median differs
        let r = col(&[-2.0, -1.0, 1.0, 2.0]);
        let e = col(&[5.0, 6.0, 7.0]);
        let scheme = SubgroupScheme { attributes: vec![(0, BinRule::Median)] };
        let fitted = scheme.fit(r.view()).unwrap();
        let ids = fitted.partition(e.view()).unwrap();
        assert!(ids.iter().all(|id| id[0] == 1));
    }

    #[test]
    fn metrics_perfect_and_constant_predictions() {
        let y = array![1.0, 2.0, 3.0, 4.0];
        let ids = vec![vec![0usize]; 4];
        let perfect = metrics(y.view(), y.view(), &ids, 1, false).unwrap();
        assert_abs_diff_eq!(perfect.overall_mse, 0.0);
        assert_abs_diff_eq!(perfect.overall_r2, 1.0);
        let yhat = array![2.5, 2.5, 2.5, 2.5];
        let flat = metrics(y.view(), yhat.view(), &ids, 1, false).unwrap();
        assert_abs_diff_eq!(flat.overall_r2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn metrics_hand_example() {
        // y=(0,2), yhat=(1,1): SSE=2, SST=2 -> mse 1, r2 0
        let y = array![0.0, 2.0];
        let yhat = array![1.0, 1.0];
        let ids = vec![vec![0usize]; 2];
        let rep = metrics(y.view(), yhat.view(), &ids, 1, false).unwrap();
        assert_abs_diff_eq!(rep.overall_mse, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rep.overall_r2, 0.0, epsilon = 1e-15);
        let sg = rep.per_subgroup.get(&vec![0]).unwrap();
        assert_abs_diff_eq!(sg.mse, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sg.r2.unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_variance_subgroup_r2_undefined() {
        let y = array![1.0, 1.0, 0.0, 2.0];
        let yhat = array![0.5, 0.5, 0.5, 0.5];
        let ids = vec![vec![0usize], vec![0], vec![1], vec![1]];
        let rep = metrics(y.view(), yhat.view(), &ids, 1, false).unwrap();
        assert!(rep.per_subgroup.get(&vec![0]).unwrap().r2.is_none());
        assert!(rep.per_subgroup.get(&vec![1]).unwrap().r2.is_some());
        // worst r2 only considers the defined one
        assert_eq!(rep.worst_r2_id, Some(vec![1]));
    }

    #[test]
    fn small_subgroups_reported_not_ranked() {
        let mut y = vec![0.0; 35];
        let mut yhat = vec![0.1; 35];
        let mut ids: Vec<SubgroupId> = vec![vec![0]; 35];
        // tiny subgroup with huge error must not become the worst group
        y.extend_from_slice(&[0.0, 10.0]);
        yhat.extend_from_slice(&[10.0, 0.0]);
        ids.extend_from_slice(&[vec![1], vec![1]]);
        let rep = metrics(
            Array1::from(y).view(),
            Array1::from(yhat).view(),
            &ids,
            30,
            false,
        )
        .unwrap();
        assert_eq!(rep.worst_mse_id, Some(vec![0]));
        assert!(rep.per_subgroup.contains_key(&vec![1]));
        assert_abs_diff_eq!(rep.worst_mse, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn ttest_hand_example() {
        // differences (1,1,1,2): mean 1.25, sd 0.5, t = 1.25/(0.5/2) = 5
        let a = [2.0, 3.0, 4.0, 7.0];
        let b = [1.0, 2.0, 3.0, 5.0];
        let (t, p, d) = paired_ttest(&a, &b).unwrap();
        assert_abs_diff_eq!(t, 5.0, epsilon = 1e-10);
        assert_abs_diff_eq!(d, 1.25, epsilon = 1e-15);
        assert!(p > 0.0 && p < 0.05);
    }

    #[test]
    fn ttest_zero_variance_errors() {
        let a = [1.0, 2.0, 3.0];
        assert!(matches!(
            paired_ttest(&a, &a),
            Err(RomeError::DegenerateTest(_))
        ));
    }

    #[test]
    fn ttest_p_monotone_in_t() {
        let b = [0.0, 0.0, 0.0, 0.0, 0.0];
        let mut last_p = 1.0;
        for shift in [0.1, 0.5, 1.0, 2.0] {
            let a: Vec<f64> = [0.9, 1.0, 1.1, 1.05, 0.95]
                .iter()
                .map(|v| v * shift)
                .collect();
            let (_, p, _) = paired_ttest(&a, &b).unwrap();
            assert!(p <= last_p);
            last_p = p;
        }
    }

    #[test]
    fn aggregate_hand_values() {
        let mk = |m: f64| MetricReport {
            overall_mse: m,
            overall_r2: 0.5,
            worst_mse: m + 1.0,
            worst_r2: Some(0.25),
            per_subgroup: BTreeMap::new(),
            worst_mse_id: None,
            worst_r2_id: None,
            min_n: 30,
        };
        let agg = aggregate_seeds(&[mk(1.0), mk(3.0)]).unwrap();
        assert_abs_diff_eq!(agg.overall_mse.mean, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(agg.overall_mse.se, 1.0, epsilon = 1e-12);
        let single = aggregate_seeds(&[mk(5.0)]).unwrap();
        assert_abs_diff_eq!(single.overall_mse.se, 0.0);
    }

    #[test]
    fn significance_codes() {
        assert_eq!(significance_code(0.0001), "***");
        assert_eq!(significance_code(0.005), "**");
        assert_eq!(significance_code(0.03), "*");
        assert_eq!(significance_code(0.2), "ns");
    }

    #[test]
    fn csv_has_stable_order() {
        let y = array![1.0, 2.0, 3.0, 4.0];
        let yhat = array![1.0, 2.0, 2.0, 5.0];
        let ids = vec![vec![1usize], vec![0], vec![1], vec![0]];
        let rep = metrics(y.view(), yhat.view(), &ids, 1, false).unwrap();
        let csv = rep.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("subgroup,"));
        assert!(lines[1].starts_with("overall,4,"));
        assert!(lines[2].starts_with("0,"));
        assert!(lines[3].starts_with("1,"));
        assert_eq!(csv, rep.to_csv());
    }

    proptest! {
        #[test]
        fn worst_at_least_overall(values in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0usize..3), 10..120)) {
            let y = Array1::from(values.iter().map(|v| v.0).collect::<Vec<_>>());
            let yhat = Array1::from(values.iter().map(|v| v.1).collect::<Vec<_>>());
            let ids: Vec<SubgroupId> = values.iter().map(|v| vec![v.2]).collect();
            // min_n = 1 so every subgroup qualifies and coverage is total
            let rep = metrics(y.view(), yhat.view(), &ids, 1, false).unwrap();
            prop_assert!(rep.worst_mse >= rep.overall_mse - 1e-12);
        }

        #[test]
        fn metrics_permutation_invariant(seed in 0u64..500) {
            use rand::seq::SliceRandom;
            use rand_chacha::rand_core::SeedableRng;
            let n = 60;
            let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
            let yhat: Vec<f64> = (0..n).map(|i| (i as f64 * 0.5).cos()).collect();
            let ids: Vec<SubgroupId> = (0..n).map(|i| vec![i % 4]).collect();
            let base = metrics(Array1::from(y.clone()).view(), Array1::from(yhat.clone()).view(), &ids, 5, false).unwrap();
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let yp: Vec<f64> = order.iter().map(|&i| y[i]).collect();
            let yhp: Vec<f64> = order.iter().map(|&i| yhat[i]).collect();
            let idp: Vec<SubgroupId> = order.iter().map(|&i| ids[i].clone()).collect();
            let perm = metrics(Array1::from(yp).view(), Array1::from(yhp).view(), &idp, 5, false).unwrap();
            prop_assert!((base.overall_mse - perm.overall_mse).abs() < 1e-10);
            prop_assert!((base.worst_mse - perm.worst_mse).abs() < 1e-10);
            prop_assert_eq!(base.worst_mse_id, perm.worst_mse_id);
        }
    }
}
