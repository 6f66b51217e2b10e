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

use blockggm::clustering::{cluster_pipeline, ClusterMode, KmeansConfig};
use blockggm::io::{read_matrix_csv, MatrixEnvelope};
use blockggm::metrics::{numerical_rank, DEFAULT_RANK_REL_TOL};
use blockggm::pipeline::{fit_methods, Method, PipelineConfig};
use blockggm::regression::fit_ols;
use blockggm::tuning::CvRow;
use blockggm::{Dataset, Matrix, SignMode, TuningParams};
use serde::{Deserialize, Serialize};

use crate::config::{open, resolve, write_json, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};

/// Optional clustering stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSettings {
    /// Number of communities.
    pub m: usize,
    #[serde(default)]
    pub mode: ClusterMode,
    /// Zero-row tolerance; `1e-6 · max|L̂|` when absent.
    #[serde(default)]
    pub zero_row_tol: Option<f64>,
    #[serde(default)]
    pub kmeans: KmeansConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Drives CV fold assignment and K-means seeding.
    #[serde(default)]
    pub seed: u64,
    pub x: PathBuf,
    #[serde(default)]
    pub c: Option<PathBuf>,
    /// Declared number of covariates, checked against `C.csv`.
    #[serde(default)]
    pub q: Option<usize>,
    pub out: PathBuf,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub sign_mode: SignMode,
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub cluster: Option<ClusterSettings>,
}

fn default_method() -> Method {
    Method::Proposed
}

/// Contents of `results.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResults {
    pub schema_version: u32,
    pub method: Method,
    pub sign_mode: SignMode,
    pub n: usize,
    pub p: usize,
    pub q: usize,
    /// `None` when no covariates were given and `X` was only centered.
    pub b_hat: Option<MatrixEnvelope>,
    pub s_hat: MatrixEnvelope,
    pub l_hat: MatrixEnvelope,
    pub theta_hat: MatrixEnvelope,
    pub params: TuningParams,
    pub rank: usize,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub ht_threshold: Option<f64>,
    /// Per-node community, 0 for excised nodes.
    pub labels: Option<Vec<usize>>,
    pub excised: Option<Vec<usize>>,
    pub cluster_loss: Option<f64>,
    /// Non-finite scores serialize as `null`.
    pub cv_table: Vec<CvRow>,
}

fn read_csv(path: &Path) -> CliResult<Matrix> {
    Ok(read_matrix_csv(open(path)?)?)
}

/// Reads the inputs, checks the declared covariate count and fits.
pub fn run(cfg: &FitConfig, base: &Path) -> CliResult<FitResults> {
    cfg.pipeline.validate().map_err(CliError::invalid)?;
    let x = read_csv(&resolve(base, &cfg.x))?;
    let c = match (&cfg.c, cfg.q) {
        (Some(path), q) => {
            let c = read_csv(&resolve(base, path))?;
            if let Some(q) = q.filter(|&q| q != c.ncols()) {
                return Err(CliError::Config(format!("q = {q} declared but C has {} columns", c.ncols())));
            }
            Some(c)
        }
        (None, Some(q)) if q > 0 => {
            return Err(CliError::Config(format!("q = {q} declared but no C file given")));
        }
        (None, _) => None,
    };
    let results = fit_data(cfg, x, c)?;
    write_json(&resolve(base, &cfg.out), &results)?;
    Ok(results)
}

/// Fits in memory. Without covariates `X` is centered by regressing on an intercept.
pub fn fit_data(cfg: &FitConfig, x: Matrix, c: Option<Matrix>) -> CliResult<FitResults> {
    let has_cov = c.is_some();
    let c = c.unwrap_or_else(|| Matrix::from_element(x.nrows(), 1, 1.0));
    let data = Dataset::new(x, c)?;
    let ols = fit_ols(&data)?;
    let mut pipeline = cfg.pipeline.clone();
    pipeline.grid.seed = cfg.seed;
    if let Some(g) = pipeline.nonapmle_grid.as_mut() {
        g.seed = cfg.seed;
    }
    let fit = fit_methods(&ols.residuals, &[cfg.method], &pipeline, cfg.sign_mode)?
        .pop()
        .ok_or_else(|| CliError::Runtime("no fit produced".into()))?;
    let dec = &fit.decomposition;
    let (labels, excised, cluster_loss) = match &cfg.cluster {
        Some(cs) => {
            let kmeans = KmeansConfig { seed: cfg.seed, ..cs.kmeans };
            let out = cluster_pipeline(&dec.l, cs.m, cs.mode, cs.zero_row_tol, &kmeans)?;
            (Some(out.labels.to_full(dec.dim())), Some(out.excised), Some(out.loss))
        }
        None => (None, None, None),
    };
    Ok(FitResults {
        schema_version: SCHEMA_VERSION,
        method: cfg.method,
        sign_mode: cfg.sign_mode,
        n: data.n(),
        p: data.p(),
        q: if has_cov { data.q() } else { 0 },
        b_hat: has_cov.then(|| (&ols.b_hat).into()),
        s_hat: (&dec.s).into(),
        l_hat: (&dec.l).into(),
        theta_hat: (&dec.theta).into(),
        params: fit.params,
        rank: numerical_rank(&dec.l, DEFAULT_RANK_REL_TOL)?,
        converged: fit.converged,
        iterations: fit.iterations,
        objective: fit.objective,
        ht_threshold: fit.threshold,
        labels,
        excised,
        cluster_loss,
        cv_table: fit.cv_table,
    })
}
