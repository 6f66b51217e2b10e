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


//! Config files are TOML. Unknown keys are rejected everywhere, and relative
//! paths resolve against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use blockggm::simulation::SimSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Schema version stamped into every JSON output.
pub const SCHEMA_VERSION: u32 = 1;

/// Parses a TOML config and returns it with the directory used for relative paths.
pub fn load<T: DeserializeOwned>(path: &Path) -> CliResult<(T, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let cfg = parse(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, base))
}

pub fn parse<T: DeserializeOwned>(text: &str) -> CliResult<T> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub(crate) fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Data-generating design, either a named preset or a full [`SimSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimConfig {
    LatentCommunity { n: usize },
    GroupedLatent { n: usize },
    ClusteringUniform { n: usize, a: f64 },
    ClusteringNormal { n: usize },
    Custom { spec: SimSpec },
}

impl SimConfig {
    /// Builds and validates the spec; `seed` replaces any seed in the file.
    pub fn build(&self, seed: u64) -> CliResult<SimSpec> {
        let spec = match self {
            SimConfig::LatentCommunity { n } => SimSpec::latent_community(*n),
            SimConfig::GroupedLatent { n } => SimSpec::grouped_latent(*n),
            SimConfig::ClusteringUniform { n, a } => SimSpec::clustering_uniform(*a, *n),
            SimConfig::ClusteringNormal { n } => SimSpec::clustering_normal(*n),
            SimConfig::Custom { spec } => spec.clone(),
        }
        .with_seed(seed);
        spec.validate().map_err(CliError::invalid)?;
        Ok(spec)
    }
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

pub(crate) fn open(path: &Path) -> CliResult<fs::File> {
    fs::File::open(path).map_err(|e| CliError::io(path, e))
}
