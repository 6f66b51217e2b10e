/*
Copyright 2026 The blockggm Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/


//! Prices to returns, for feeding market data into `fit`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{open, resolve, write_bytes};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    #[default]
    Log,
    Simple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnsConfig {
    /// Price CSV with a header row, one column per asset, rows in time order.
    pub input: PathBuf,
    pub out_x: PathBuf,
    /// Receives the `covariates` columns.
    #[serde(default)]
    pub out_c: Option<PathBuf>,
    /// Drop the first column (dates).
    #[serde(default)]
    pub date_column: bool,
    /// Keep every `step`-th price row before differencing; 2 gives alternating days.
    #[serde(default = "default_step")]
    pub step: usize,
    #[serde(default)]
    pub kind: ReturnKind,
    /// Columns written to `out_c` instead of `out_x`, such as a market index.
    #[serde(default)]
    pub covariates: Vec<String>,
}

fn default_step() -> usize {
    1
}

/// Column names and price rows, dates removed.
pub type Prices = (Vec<String>, Vec<Vec<f64>>);

pub fn read_prices<R: std::io::Read>(reader: R, date_column: bool) -> CliResult<Prices> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let skip = usize::from(date_column);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Runtime(e.to_string()))?
        .iter()
        .skip(skip)
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Runtime(e.to_string()))?;
        let row = rec
            .iter()
            .skip(skip)
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CliError::Runtime(format!("price row {}: {e}", k + 1)))?;
        if row.len() != names.len() {
            return Err(CliError::Runtime(format!("price row {} has {} values", k + 1, row.len())));
        }
        rows.push(row);
    }
    Ok((names, rows))
}

/// Subsamples every `step`-th row and differences consecutive kept rows.
pub fn to_returns(prices: &[Vec<f64>], step: usize, kind: ReturnKind) -> CliResult<Vec<Vec<f64>>> {
    if step == 0 {
        return Err(CliError::Config("step must be positive".into()));
    }
    let kept: Vec<&Vec<f64>> = prices.iter().step_by(step).collect();
    if kept.iter().flat_map(|r| r.iter()).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(CliError::Runtime("prices must be positive and finite".into()));
    }
    Ok(kept
        .windows(2)
        .map(|w| {
            w[0].iter()
                .zip(w[1].iter())
                .map(|(&a, &b)| match kind {
                    ReturnKind::Log => (b / a).ln(),
                    ReturnKind::Simple => b / a - 1.0,
                })
                .collect()
        })
        .collect())
}

fn write_columns(path: &Path, names: &[String], rows: &[Vec<f64>], cols: &[usize]) -> CliResult<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    wtr.write_record(cols.iter().map(|&j| &names[j])).map_err(err)?;
    for r in rows {
        wtr.write_record(cols.iter().map(|&j| format!("{}", r[j]))).map_err(err)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    write_bytes(path, &bytes)
}

pub fn run(cfg: &ReturnsConfig, base: &Path) -> CliResult<()> {
    if cfg.step == 0 {
        return Err(CliError::Config("step must be positive".into()));
    }
    if cfg.covariates.is_empty() != cfg.out_c.is_none() {
        return Err(CliError::Config("covariates and out_c must be given together".into()));
    }
    let (names, prices) = read_prices(open(&resolve(base, &cfg.input))?, cfg.date_column)?;
    let mut cov = Vec::new();
    for c in &cfg.covariates {
        let j = names
            .iter()
            .position(|n| n == c)
            .ok_or_else(|| CliError::Config(format!("covariate column {c:?} not in input")))?;
        cov.push(j);
    }
    let assets: Vec<usize> = (0..names.len()).filter(|j| !cov.contains(j)).collect();
    let rets = to_returns(&prices, cfg.step, cfg.kind)?;
    if rets.is_empty() {
        return Err(CliError::Runtime("fewer than two price rows after subsampling".into()));
    }
    write_columns(&resolve(base, &cfg.out_x), &names, &rets, &assets)?;
    if let Some(out_c) = &cfg.out_c {
        write_columns(&resolve(base, out_c), &names, &rets, &cov)?;
    }
    Ok(())
}
