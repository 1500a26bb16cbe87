//! `evaluate`: score checkpointed models on the test split, per subgroup
//! scheme, aggregated over seeds with paired significance tests against
//! the configured baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rome_core::eval::{metrics, paired_ttest, significance_code, MetricReport};
use rome_core::moe::{load_checkpoint, predict, Rows};
use rome_core::{Result, RomeError, Standardizer};

use crate::config::{echo_config, ModelRole, RunConfig};
use crate::ingest::{ingest_csv, split_indices, take_rows};

pub fn cmd_evaluate(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.io.out_dir;
    std::fs::create_dir_all(out).map_err(|e| RomeError::Data(format!("create {}: {e}", out.display())))?;
    echo_config(cfg, out)?;
    let data_path = cfg
        .io
        .data
        .as_ref()
        .ok_or_else(|| RomeError::InvalidConfig("evaluate needs io.data".into()))?;
    let spec = cfg.features.to_spec()?;
    let (data, dropped) = ingest_csv(data_path, &spec)?;
    if dropped > 0 {
        eprintln!("evaluate: dropped {dropped} rows with missing or non-numeric cells");
    }

    let models: Vec<ModelRole> = if cfg.eval.models.is_empty() {
        ModelRole::ALL
            .into_iter()
            .filter(|r| {
                cfg.seeds
                    .iter()
                    .all(|s| out.join(format!("{}_seed{s}.json", r.name())).exists())
            })
            .collect()
    } else {
        cfg.eval.models.iter().map(|n| ModelRole::parse(n)).collect::<Result<_>>()?
    };
    if models.is_empty() {
        return Err(RomeError::InvalidConfig(
            "no evaluable models: run fit-moe first or list eval.models".into(),
        ));
    }
    let baseline = ModelRole::parse(&cfg.eval.baseline)?;

    // reports[scheme][model] = one MetricReport per seed
    let mut reports: BTreeMap<String, BTreeMap<&'static str, Vec<MetricReport>>> = BTreeMap::new();
    for &seed in &cfg.seeds {
        let split = split_indices(data.n(), &cfg.split, seed);
        let train_raw = take_rows(&data, &split.train);
        let scaler = Standardizer::fit(&train_raw);
        let train = scaler.apply(&train_raw);
        let test = scaler.apply(&take_rows(&data, &split.test));
        // cut points learned on the training split only
        let mut partitions = Vec::new();
        for scheme_cfg in &cfg.eval.schemes {
            let scheme = scheme_cfg.to_core(&spec.s_names)?;
            let fitted = scheme.fit(train.s.view())?;
            partitions.push((scheme_cfg.name.clone(), fitted.partition(test.s.view())?));
        }
        for &role in &models {
            let path = out.join(format!("{}_seed{seed}.json", role.name()));
            let ckpt = load_checkpoint(&path)?;
            let expect = role.moe_config(&cfg.moe, seed)?;
            if ckpt.config.g != expect.g
                || ckpt.config.gate_features != expect.gate_features
                || ckpt.config.expert_features != expect.expert_features
            {
                return Err(RomeError::InvalidConfig(format!(
                    "checkpoint {} does not match the configured '{}' role",
                    path.display(),
                    role.name()
                )));
            }
            let rows = Rows { a: test.a.view(), s: test.s.view() };
            let yhat = predict(&ckpt.model, &ckpt.config, &rows)?;
            for (scheme_name, ids) in &partitions {
                let report = metrics(test.y.view(), yhat.view(), ids, cfg.eval.min_n, false)?;
                reports
                    .entry(scheme_name.clone())
                    .or_default()
                    .entry(role.name())
                    .or_default()
                    .push(report);
            }
        }
    }

    let mse_csv = table(&reports, baseline.name(), Metric::Mse)?;
    std::fs::write(out.join("results_mse.csv"), mse_csv)
        .map_err(|e| RomeError::Data(format!("write results_mse.csv: {e}")))?;
    let r2_csv = table(&reports, baseline.name(), Metric::R2)?;
    std::fs::write(out.join("results_r2.csv"), r2_csv)
        .map_err(|e| RomeError::Data(format!("write results_r2.csv: {e}")))?;
    Ok(())
}

enum Metric {
    Mse,
    R2,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let s2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, s2.sqrt() / k.sqrt())
}

fn table(
    reports: &BTreeMap<String, BTreeMap<&'static str, Vec<MetricReport>>>,
    baseline: &str,
    metric: Metric,
) -> Result<String> {
    let mut csv = String::from(
        "scheme,model,overall_mean,overall_se,worst_mean,worst_se,t_vs_baseline,p_vs_baseline,sig\n",
    );
    for (scheme, by_model) in reports {
        let extract = |r: &MetricReport| -> (f64, f64) {
            match metric {
                Metric::Mse => (r.overall_mse, r.worst_mse),
                Metric::R2 => (r.overall_r2, r.worst_r2.unwrap_or(f64::NAN)),
            }
        };
        let base_worst: Option<Vec<f64>> =
            by_model.get(baseline).map(|rs| rs.iter().map(|r| extract(r).1).collect());
        for (model, rs) in by_model {
            let overall: Vec<f64> = rs.iter().map(|r| extract(r).0).collect();
            let worst: Vec<f64> = rs.iter().map(|r| extract(r).1).collect();
            let (om, ose) = mean_se(&overall);
            let (wm, wse) = mean_se(&worst);
            let (t_str, p_str, sig) = match &base_worst {
                Some(base) if base.len() == worst.len() => match paired_ttest(&worst, base) {
                    Ok((t, p, _)) => (format!("{t:.6}"), format!("{p:.6}"), significance_code(p)),
                    Err(RomeError::DegenerateTest(_)) => {
                        ("".into(), "".into(), "identical")
                    }
                    Err(e) => return Err(e),
                },
                _ => ("".into(), "".into(), "na"),
            };
            writeln!(
                csv,
                "{scheme},{model},{om:.10},{ose:.10},{wm:.10},{wse:.10},{t_str},{p_str},{sig}"
            )
            .unwrap();
        }
    }
    Ok(csv)
}
