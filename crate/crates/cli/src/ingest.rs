//! Dataset CSV ingestion and emission, plus the split protocol shared by
//! every fitting and evaluation subcommand.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rome_core::{Dataset, FeatureSpec, Result, RomeError};

use crate::config::SplitSection;

/// Reads a header CSV, binding columns by the names in `spec`. Rows with
/// a missing or non-numeric value in any selected column are dropped;
/// the second return value counts them.
pub fn ingest_csv(path: &Path, spec: &FeatureSpec) -> Result<(Dataset, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| RomeError::Data(format!("open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| RomeError::Data(format!("read header of {}: {e}", path.display())))?
        .clone();
    let col_index = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| RomeError::Data(format!("column '{name}' missing from {}", path.display())))
    };
    let a_cols: Vec<usize> = spec.a_names.iter().map(|n| col_index(n)).collect::<Result<_>>()?;
    let s_cols: Vec<usize> = spec.s_names.iter().map(|n| col_index(n)).collect::<Result<_>>()?;
    let y_col = col_index(&spec.y_name)?;

    let mut a_rows: Vec<f64> = Vec::new();
    let mut s_rows: Vec<f64> = Vec::new();
    let mut y_rows: Vec<f64> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| RomeError::Data(format!("read {}: {e}", path.display())))?;
        let cell = |c: usize| -> Option<f64> {
            record.get(c).and_then(|v| v.trim().parse::<f64>().ok()).filter(|v| v.is_finite())
        };
        let a: Option<Vec<f64>> = a_cols.iter().map(|&c| cell(c)).collect();
        let s: Option<Vec<f64>> = s_cols.iter().map(|&c| cell(c)).collect();
        match (a, s, cell(y_col)) {
            (Some(a), Some(s), Some(y)) => {
                a_rows.extend(a);
                s_rows.extend(s);
                y_rows.push(y);
            }
            _ => dropped += 1,
        }
    }
    let n = y_rows.len();
    if n == 0 {
        return Err(RomeError::Data(format!("{}: no usable rows", path.display())));
    }
    let a = Array2::from_shape_vec((n, a_cols.len()), a_rows)
        .map_err(|e| RomeError::Data(format!("shape: {e}")))?;
    let s = Array2::from_shape_vec((n, s_cols.len()), s_rows)
        .map_err(|e| RomeError::Data(format!("shape: {e}")))?;
    let data = Dataset::new(a, s, Array1::from(y_rows), spec.clone())?;
    Ok((data, dropped))
}

/// Writes a dataset as a header CSV with 17-significant-digit floats so
/// a read-back reproduces the values exactly.
pub fn write_dataset_csv(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    let spec = &data.spec;
    let mut header: Vec<&str> = spec.a_names.iter().map(String::as_str).collect();
    header.extend(spec.s_names.iter().map(String::as_str));
    header.push(&spec.y_name);
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..data.n() {
        let mut cells: Vec<String> = data.a.row(i).iter().map(|v| format!("{v:.17e}")).collect();
        cells.extend(data.s.row(i).iter().map(|v| format!("{v:.17e}")));
        cells.push(format!("{:.17e}", data.y[i]));
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| RomeError::Data(format!("write {}: {e}", path.display())))
}

/// Row indices of the train/validation/test splits for one seed.
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deterministic shuffled split; the same `(n, fractions, seed)` always
/// yields the same partition.
pub fn split_indices(n: usize, split: &SplitSection, seed: u64) -> SplitIndices {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_5EED_5EED_5EED);
    order.shuffle(&mut rng);
    let n_train = (split.train * n as f64).floor() as usize;
    let n_val = (split.val * n as f64).floor() as usize;
    SplitIndices {
        train: order[..n_train].to_vec(),
        val: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    }
}

pub fn take_rows(data: &Dataset, rows: &[usize]) -> Dataset {
    Dataset {
        a: data.a.select(Axis(0), rows),
        s: data.s.select(Axis(0), rows),
        y: data.y.select(Axis(0), rows),
        spec: data.spec.clone(),
    }
}
