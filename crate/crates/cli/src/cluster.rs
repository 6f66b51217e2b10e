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


use std::path::{Path, PathBuf};

use blockggm::clustering::{cluster_pipeline, write_labels_csv, ClusterMode, ClusterOutcome, KmeansConfig};
use blockggm::io::read_matrix_csv;
use blockggm::SymMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{open, resolve, write_bytes};
use crate::error::{CliError, CliResult};
use crate::fit::FitResults;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    #[serde(default)]
    pub seed: u64,
    /// A `results.json` from `fit` (its `l_hat` is used) or a square CSV matrix.
    pub input: PathBuf,
    pub out: PathBuf,
    pub m: usize,
    #[serde(default)]
    pub mode: ClusterMode,
    #[serde(default)]
    pub zero_row_tol: Option<f64>,
    #[serde(default)]
    pub kmeans: KmeansConfig,
}

fn read_l(path: &Path) -> CliResult<SymMatrix> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let m = if is_json {
        let res: FitResults =
            serde_json::from_reader(open(path)?).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        res.l_hat.to_matrix()?
    } else {
        read_matrix_csv(open(path)?)?
    };
    Ok(SymMatrix::new(m)?)
}

/// Clusters `L̂` and writes `labels.csv` (`node_id,label`, 0 for excised nodes).
pub fn run(cfg: &ClusterConfig, base: &Path) -> CliResult<ClusterOutcome> {
    if let Some(t) = cfg.zero_row_tol {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(CliError::Config("zero_row_tol must be finite and nonnegative".into()));
        }
    }
    if cfg.m == 0 {
        return Err(CliError::Config("m must be positive".into()));
    }
    let l = read_l(&resolve(base, &cfg.input))?;
    let kmeans = KmeansConfig { seed: cfg.seed, ..cfg.kmeans };
    let out = cluster_pipeline(&l, cfg.m, cfg.mode, cfg.zero_row_tol, &kmeans)?;
    let mut buf = Vec::new();
    write_labels_csv(&mut buf, &out.labels, l.dim())?;
    write_bytes(&resolve(base, &cfg.out), &buf)?;
    Ok(out)
}
