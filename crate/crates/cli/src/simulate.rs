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

use blockggm::io::{write_matrix_csv, MatrixEnvelope};
use blockggm::simulation::{generate, SimSpec};
use blockggm::{Dataset, GroundTruth, SignMode};
use serde::{Deserialize, Serialize};

use crate::config::{resolve, write_bytes, write_json, SimConfig, SCHEMA_VERSION};
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: u64,
    pub out_dir: PathBuf,
    pub sim: SimConfig,
}

/// Contents of `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub schema_version: u32,
    pub spec: SimSpec,
    pub sign_mode: SignMode,
    pub rank: usize,
    pub block_sizes: Vec<usize>,
    /// Community of each node, starting at 1.
    pub labels: Vec<usize>,
    pub s_star: MatrixEnvelope,
    pub l_star: MatrixEnvelope,
    pub theta_star: MatrixEnvelope,
    pub b_star: MatrixEnvelope,
}

impl TruthFile {
    pub fn new(spec: &SimSpec, truth: &GroundTruth) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            spec: spec.clone(),
            sign_mode: truth.sign_mode,
            rank: truth.rank_star,
            block_sizes: truth.block_sizes.clone(),
            labels: truth.labels_star.to_full(truth.p()),
            s_star: (&truth.s_star).into(),
            l_star: (&truth.l_star).into(),
            theta_star: (&truth.theta_star()).into(),
            b_star: (&truth.b_star).into(),
        }
    }
}

fn csv_bytes(m: &blockggm::Matrix, prefix: &str) -> CliResult<Vec<u8>> {
    let header: Vec<String> = (1..=m.ncols()).map(|j| format!("{prefix}{j}")).collect();
    let mut buf = Vec::new();
    write_matrix_csv(&mut buf, m, Some(&header))?;
    Ok(buf)
}

/// Writes `X.csv`, `C.csv` and `truth.json` into `out_dir`.
pub fn write_dataset(out_dir: &Path, spec: &SimSpec, data: &Dataset, truth: &GroundTruth) -> CliResult<()> {
    write_bytes(&out_dir.join("X.csv"), &csv_bytes(data.x(), "x")?)?;
    write_bytes(&out_dir.join("C.csv"), &csv_bytes(data.c(), "c")?)?;
    write_json(&out_dir.join("truth.json"), &TruthFile::new(spec, truth))
}

pub fn run(cfg: &SimulateConfig, base: &Path) -> CliResult<()> {
    let spec = cfg.sim.build(cfg.seed)?;
    let (data, truth) = generate(&spec)?;
    write_dataset(&resolve(base, &cfg.out_dir), &spec, &data, &truth)
}
