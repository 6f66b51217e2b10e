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


//! Batch driver for `blockggm`: simulate, fit, experiment, cluster and
//! a price-to-returns converter. Every command reads one TOML config.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod returns;
pub mod simulate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "blockggm", version, about = "Sparse plus block low-rank graphical model estimation")]
pub struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's root seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a dataset and write X.csv, C.csv and truth.json.
    Simulate(Common),
    /// Estimate S and L from data and write results.json.
    Fit(Common),
    /// Replicate simulations and write mean (sd) tables.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Overrides the replication count.
        #[arg(long)]
        replications: Option<usize>,
    },
    /// Cluster an estimated L and write labels.csv.
    Cluster(Common),
    /// Convert a price CSV to returns.
    Returns {
        #[arg(long)]
        config: PathBuf,
    },
}

fn configure_pool(jobs: Option<usize>) -> CliResult<()> {
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    configure_pool(cli.jobs)?;
    match cli.command {
        Command::Simulate(c) => {
            let (mut cfg, base): (simulate::SimulateConfig, _) = config::load(&c.config)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            cfg.out_dir = c.out.unwrap_or(cfg.out_dir);
            simulate::run(&cfg, &base)
        }
        Command::Fit(c) => {
            let (mut cfg, base): (fit::FitConfig, _) = config::load(&c.config)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            cfg.out = c.out.unwrap_or(cfg.out);
            fit::run(&cfg, &base).map(|_| ())
        }
        Command::Experiment { common: c, replications } => {
            let (mut cfg, base): (experiment::ExperimentConfig, _) = config::load(&c.config)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            cfg.out_dir = c.out.unwrap_or(cfg.out_dir);
            cfg.replications = replications.unwrap_or(cfg.replications);
            experiment::run(&cfg, &base).map(|_| ())
        }
        Command::Cluster(c) => {
            let (mut cfg, base): (cluster::ClusterConfig, _) = config::load(&c.config)?;
            cfg.seed = c.seed.unwrap_or(cfg.seed);
            cfg.out = c.out.unwrap_or(cfg.out);
            cluster::run(&cfg, &base).map(|_| ())
        }
        Command::Returns { config: path } => {
            let (cfg, base): (returns::ReturnsConfig, _) = config::load(&path)?;
            returns::run(&cfg, &base)
        }
    }
}
