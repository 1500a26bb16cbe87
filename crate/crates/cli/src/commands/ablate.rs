//! `ablate-alpha`: sweep the average/worst-group trade-off for both
//! robust mixture variants and chart the resulting MSE curves.

use std::fmt::Write as _;

use rayon::prelude::*;
use rome_core::eval::metrics;
use rome_core::moe::{predict, train, Rows};
use rome_core::{Dataset, Result, RomeError, Standardizer};

use crate::config::{echo_config, ModelRole, RunConfig};
use crate::ingest::{ingest_csv, split_indices, take_rows};
use crate::svg;

pub fn cmd_ablate_alpha(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.io.out_dir;
    std::fs::create_dir_all(out).map_err(|e| RomeError::Data(format!("create {}: {e}", out.display())))?;
    echo_config(cfg, out)?;
    let data_path = cfg
        .io
        .data
        .as_ref()
        .ok_or_else(|| RomeError::InvalidConfig("ablate-alpha needs io.data".into()))?;
    let spec = cfg.features.to_spec()?;
    let (data, dropped) = ingest_csv(data_path, &spec)?;
    if dropped > 0 {
        eprintln!("ablate-alpha: dropped {dropped} rows with missing or non-numeric cells");
    }
    if cfg.eval.schemes.is_empty() {
        return Err(RomeError::InvalidConfig("ablate-alpha needs at least one eval scheme".into()));
    }
    let scheme = cfg.eval.schemes[0].to_core(&spec.s_names)?;

    let mut alphas = cfg.ablate.alphas.clone();
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let before = alphas.len();
    alphas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    if alphas.len() != before {
        eprintln!("ablate-alpha: dropped {} duplicate alpha values", before - alphas.len());
    }

    let variants = [ModelRole::RomeMoeS, ModelRole::RomeMoeAs];
    let cells: Vec<(ModelRole, f64, u64)> = variants
        .iter()
        .flat_map(|&v| {
            alphas
                .iter()
                .flat_map(move |&a| cfg.seeds.iter().map(move |&s| (v, a, s)))
                .collect::<Vec<_>>()
        })
        .collect();

    let results: Vec<Result<(ModelRole, f64, u64, f64, f64)>> = cells
        .par_iter()
        .map(|&(variant, alpha, seed)| run_cell(cfg, &data, &scheme, variant, alpha, seed))
        .collect();

    let mut rows = Vec::new();
    for r in results {
        rows.push(r?);
    }

    let mut csv = String::from("variant,alpha,seed,overall_mse,worst_mse\n");
    for (variant, alpha, seed, overall, worst) in &rows {
        writeln!(csv, "{},{alpha},{seed},{overall:.10},{worst:.10}", variant.name()).unwrap();
    }
    std::fs::write(out.join("alpha_sweep.csv"), csv)
        .map_err(|e| RomeError::Data(format!("write alpha_sweep.csv: {e}")))?;

    // per-alpha means, one summary row and one plotted line per variant
    let mut summary = String::from("variant,alpha,overall_mean,worst_mean\n");
    let mut worst_series = Vec::new();
    let mut overall_series = Vec::new();
    for variant in variants {
        let mut worst_pts = Vec::new();
        let mut overall_pts = Vec::new();
        for &alpha in &alphas {
            let cell: Vec<&(ModelRole, f64, u64, f64, f64)> = rows
                .iter()
                .filter(|r| r.0 == variant && (r.1 - alpha).abs() < 1e-12)
                .collect();
            let k = cell.len() as f64;
            let overall = cell.iter().map(|r| r.3).sum::<f64>() / k;
            let worst = cell.iter().map(|r| r.4).sum::<f64>() / k;
            writeln!(summary, "{},{alpha},{overall:.10},{worst:.10}", variant.name()).unwrap();
            worst_pts.push((alpha, worst));
            overall_pts.push((alpha, overall));
        }
        worst_series.push((variant.name().to_string(), worst_pts));
        overall_series.push((variant.name().to_string(), overall_pts));
    }
    std::fs::write(out.join("alpha_summary.csv"), summary)
        .map_err(|e| RomeError::Data(format!("write alpha_summary.csv: {e}")))?;
    std::fs::write(
        out.join("alpha_worst_mse.svg"),
        svg::line_plot("Worst-group MSE vs alpha", "alpha", "worst-group MSE", &worst_series),
    )
    .map_err(|e| RomeError::Data(format!("write svg: {e}")))?;
    std::fs::write(
        out.join("alpha_overall_mse.svg"),
        svg::line_plot("Overall MSE vs alpha", "alpha", "overall MSE", &overall_series),
    )
    .map_err(|e| RomeError::Data(format!("write svg: {e}")))?;
    Ok(())
}

fn run_cell(
    cfg: &RunConfig,
    data: &Dataset,
    scheme: &rome_core::eval::SubgroupScheme,
    variant: ModelRole,
    alpha: f64,
    seed: u64,
) -> Result<(ModelRole, f64, u64, f64, f64)> {
    let split = split_indices(data.n(), &cfg.split, seed);
    let train_raw = take_rows(data, &split.train);
    let scaler = Standardizer::fit(&train_raw);
    let train_std = scaler.apply(&train_raw);
    let test = scaler.apply(&take_rows(data, &split.test));

    let mut moe_cfg = variant.moe_config(&cfg.moe, seed)?;
    moe_cfg.alpha = alpha;
    let trained = train(&train_std, &moe_cfg)
        .map_err(|e| RomeError::Numerical(format!("{} alpha {alpha} seed {seed}: {e}", variant.name())))?;
    let rows = Rows { a: test.a.view(), s: test.s.view() };
    let yhat = predict(&trained.model, &moe_cfg, &rows)?;
    let ids = scheme.fit(train_std.s.view())?.partition(test.s.view())?;
    let report = metrics(test.y.view(), yhat.view(), &ids, cfg.eval.min_n, false)?;
    Ok((variant, alpha, seed, report.overall_mse, report.worst_mse))
}
