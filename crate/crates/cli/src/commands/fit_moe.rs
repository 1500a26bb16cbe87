//! `fit-moe`: train the requested model roles across seeds. Cells fan
//! out to a worker pool; artifact writing stays on the caller's thread.

use std::fmt::Write as _;

use rayon::prelude::*;
use rome_core::moe::{save_checkpoint, train, EpochLoss};
use rome_core::{Dataset, Result, RomeError, Standardizer};

use crate::config::{echo_config, ModelRole, RunConfig};
use crate::ingest::{ingest_csv, split_indices, take_rows};

pub fn cmd_fit_moe(cfg: &RunConfig) -> Result<()> {
    let out = &cfg.io.out_dir;
    std::fs::create_dir_all(out).map_err(|e| RomeError::Data(format!("create {}: {e}", out.display())))?;
    echo_config(cfg, out)?;
    let data_path = cfg
        .io
        .data
        .as_ref()
        .ok_or_else(|| RomeError::InvalidConfig("fit-moe needs io.data".into()))?;
    let spec = cfg.features.to_spec()?;
    let (data, dropped) = ingest_csv(data_path, &spec)?;
    if dropped > 0 {
        eprintln!("fit-moe: dropped {dropped} rows with missing or non-numeric cells");
    }

    let roles: Vec<ModelRole> = cfg
        .moe
        .roles
        .iter()
        .map(|n| ModelRole::parse(n))
        .collect::<Result<_>>()?;
    let cells: Vec<(ModelRole, u64)> = roles
        .iter()
        .flat_map(|&r| cfg.seeds.iter().map(move |&s| (r, s)))
        .collect();

    let results: Vec<Result<(ModelRole, u64, rome_core::moe::MoeConfig, rome_core::moe::TrainedMoe)>> =
        cells
            .par_iter()
            .map(|&(role, seed)| {
                let trained = train_cell(cfg, &data, role, seed)?;
                Ok((role, seed, role.moe_config(&cfg.moe, seed)?, trained))
            })
            .collect();

    for res in results {
        let (role, seed, moe_cfg, trained) = res?;
        let name = format!("{}_seed{seed}", role.name());
        save_checkpoint(&out.join(format!("{name}.json")), &moe_cfg, &trained.model)?;
        std::fs::write(out.join(format!("{name}_trace.csv")), trace_csv(&trained.trace))
            .map_err(|e| RomeError::Data(format!("write trace: {e}")))?;
    }
    Ok(())
}

fn train_cell(
    cfg: &RunConfig,
    data: &Dataset,
    role: ModelRole,
    seed: u64,
) -> Result<rome_core::moe::TrainedMoe> {
    let split = split_indices(data.n(), &cfg.split, seed);
    let train_raw = take_rows(data, &split.train);
    let scaler = Standardizer::fit(&train_raw);
    let train_std = scaler.apply(&train_raw);
    let moe_cfg = role.moe_config(&cfg.moe, seed)?;
    train(&train_std, &moe_cfg)
        .map_err(|e| RomeError::Numerical(format!("{} seed {seed}: {e}", role.name())))
}

fn trace_csv(trace: &[EpochLoss]) -> String {
    let mut out = String::from("epoch,total,avg,worst\n");
    for (i, e) in trace.iter().enumerate() {
        writeln!(out, "{i},{:.10},{:.10},{:.10}", e.total, e.avg, e.worst).unwrap();
    }
    out
}
