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


//! Replicated simulation experiments and their summary tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use blockggm::clustering::{
    cor_abs_transform, drop_zero_rows, hamming_error_by_node, kmeans, ClusterMode, KmeansConfig,
    DEFAULT_ZERO_ROW_REL_TOL,
};
use blockggm::metrics::{score, ScoreTolerances};
use blockggm::pipeline::{fit_methods, Method, MethodFit, PipelineConfig};
use blockggm::regression::fit_ols;
use blockggm::simulation::{generate, SimSpec};
use blockggm::{LabelVector, SymMatrix, TuningParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{resolve, write_bytes, SimConfig};
use crate::error::{CliError, CliResult};

pub const CRITERIA: [&str; 5] = ["TR_L", "TP_L", "FP_L", "TP_S", "FP_S"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// The five recovery criteria.
    #[default]
    Criteria,
    /// Hamming error of K-means labels, one value per clustering mode.
    Hamming,
}

/// Parameter varied across table rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    SampleSize {
        values: Vec<usize>,
    },
    /// Sets the leading strength of block `k` to `a − k·step`.
    Strength {
        values: Vec<f64>,
        #[serde(default = "default_step")]
        step: f64,
    },
}

fn default_step() -> f64 {
    0.1
}

/// Whose `L̂` decides which zero rows are excised before clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExciseFrom {
    /// The proposed method's estimate, applied to every method.
    /// Falls back to `own` when the proposed method is not run.
    #[default]
    Proposed,
    Own,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HammingSettings {
    pub modes: Vec<ClusterMode>,
    pub zero_row_tol: Option<f64>,
    pub excise_from: ExciseFrom,
    pub kmeans: KmeansConfig,
}

impl Default for HammingSettings {
    fn default() -> Self {
        Self {
            modes: vec![ClusterMode::Rows, ClusterMode::CorAbs],
            zero_row_tol: None,
            excise_from: ExciseFrom::Proposed,
            kmeans: KmeansConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Replication `r` uses seed `seed + r` for data, folds and K-means.
    #[serde(default)]
    pub seed: u64,
    pub replications: usize,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub evaluation: Evaluation,
    pub sim: SimConfig,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub tolerances: ScoreTolerances,
    #[serde(default)]
    pub hamming: HammingSettings,
    /// Largest tolerated fraction of failed replications.
    #[serde(default = "default_failure_rate")]
    pub max_failure_rate: f64,
    pub out_dir: PathBuf,
}

fn default_failure_rate() -> f64 {
    0.2
}

/// One measured value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRow {
    pub setting: String,
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub metric: String,
    pub value: f64,
}

/// Penalties picked for one fit, with solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub setting: String,
    pub replication: usize,
    pub method: Method,
    pub gamma: f64,
    pub delta: f64,
    pub tau: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub setting: String,
    pub replication: usize,
    pub seed: u64,
    pub message: String,
}

/// Mean and sample standard deviation over successful replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub setting: String,
    pub metric: String,
    pub method: Method,
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub evaluation: Evaluation,
    pub sweep_header: String,
    pub settings: Vec<String>,
    pub metrics: Vec<String>,
    pub methods: Vec<Method>,
    pub rows: Vec<RepRow>,
    pub selections: Vec<Selection>,
    pub failures: Vec<Failure>,
    pub summary: Vec<SummaryRow>,
    pub replications: usize,
}

fn mode_label(mode: ClusterMode) -> &'static str {
    match mode {
        ClusterMode::Rows => "L",
        ClusterMode::CorAbs => "Cor(abs(L))",
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        if self.replications == 0 {
            return bad("replications must be positive");
        }
        if self.methods.is_empty() {
            return bad("methods must be nonempty");
        }
        let mut sorted = self.methods.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.methods.len() {
            return bad("methods must not repeat");
        }
        if !(0.0..=1.0).contains(&self.max_failure_rate) {
            return bad("max_failure_rate must lie in [0, 1]");
        }
        if self.evaluation == Evaluation::Hamming {
            if self.hamming.modes.is_empty() {
                return bad("hamming.modes must be nonempty");
            }
            if let Some(t) = self.hamming.zero_row_tol {
                if !(t >= 0.0 && t.is_finite()) {
                    return bad("hamming.zero_row_tol must be finite and nonnegative");
                }
            }
        }
        if !(self.tolerances.rank_rel_tol > 0.0) {
            return bad("tolerances.rank_rel_tol must be positive");
        }
        self.pipeline.validate().map_err(CliError::invalid)?;
        self.settings().map(|_| ())
    }

    /// Row labels, sweep column header and base spec per setting.
    pub fn settings(&self) -> CliResult<(String, Vec<(String, SimSpec)>)> {
        let base = self.sim.build(self.seed)?;
        let out = match &self.sweep {
            None => ("Sample Size".to_string(), vec![(format!("n = {}", base.n), base)]),
            Some(Sweep::SampleSize { values }) => (
                "Sample Size".to_string(),
                values
                    .iter()
                    .map(|&n| (format!("n = {n}"), SimSpec { n, ..base.clone() }))
                    .collect(),
            ),
            Some(Sweep::Strength { values, step }) => {
                let specs = values
                    .iter()
                    .map(|&a| {
                        let mut spec = base.clone();
                        for (k, s) in spec.strengths.iter_mut().enumerate() {
                            s[0] = a - step * k as f64;
                        }
                        (format!("{a}"), spec)
                    })
                    .collect();
                ("a".to_string(), specs)
            }
        };
        if out.1.is_empty() {
            return Err(CliError::Config("sweep values must be nonempty".into()));
        }
        for (_, spec) in &out.1 {
            spec.validate().map_err(CliError::invalid)?;
        }
        Ok(out)
    }

    fn metric_names(&self) -> Vec<String> {
        match self.evaluation {
            Evaluation::Criteria => CRITERIA.iter().map(|s| s.to_string()).collect(),
            Evaluation::Hamming => self.hamming.modes.iter().map(|&m| mode_label(m).to_string()).collect(),
        }
    }
}

fn submatrix(l: &SymMatrix, keep: &[usize]) -> CliResult<SymMatrix> {
    let m = blockggm::Matrix::from_fn(keep.len(), keep.len(), |i, j| l.get(keep[i], keep[j]));
    Ok(SymMatrix::new(m)?)
}

fn zero_row_keep(l: &SymMatrix, tol: Option<f64>) -> CliResult<Vec<usize>> {
    let tol = tol.unwrap_or_else(|| DEFAULT_ZERO_ROW_REL_TOL * l.as_matrix().amax());
    Ok(drop_zero_rows(l, tol)?.1)
}

fn cluster_kept(l: &SymMatrix, keep: &[usize], m: usize, mode: ClusterMode, cfg: &KmeansConfig) -> CliResult<LabelVector> {
    let reduced = submatrix(l, keep)?;
    let points = match mode {
        ClusterMode::Rows => reduced.into_matrix(),
        ClusterMode::CorAbs => cor_abs_transform(&reduced)?.into_matrix(),
    };
    let fit = kmeans(&points, m, cfg)?;
    Ok(LabelVector::with_index_map(fit.labels.labels, m, keep.to_vec())?)
}

fn evaluate(
    cfg: &ExperimentConfig,
    fits: &[MethodFit],
    truth: &blockggm::GroundTruth,
    seed: u64,
) -> CliResult<Vec<(Method, String, f64)>> {
    let mut out = Vec::new();
    match cfg.evaluation {
        Evaluation::Criteria => {
            for fit in fits {
                let rep = score(&fit.decomposition, truth, &cfg.tolerances)?;
                for (name, v) in CRITERIA.iter().zip([rep.tr_l, rep.tp_l, rep.fp_l, rep.tp_s, rep.fp_s]) {
                    out.push((fit.method, name.to_string(), v));
                }
            }
        }
        Evaluation::Hamming => {
            let hs = &cfg.hamming;
            let kcfg = KmeansConfig { seed, ..hs.kmeans };
            let shared = match hs.excise_from {
                ExciseFrom::Proposed => fits
                    .iter()
                    .find(|f| f.method == Method::Proposed)
                    .map(|f| zero_row_keep(&f.decomposition.l, hs.zero_row_tol))
                    .transpose()?,
                ExciseFrom::Own => None,
            };
            let m = truth.labels_star.m;
            for fit in fits {
                let l = &fit.decomposition.l;
                let keep = match &shared {
                    Some(k) => k.clone(),
                    None => zero_row_keep(l, hs.zero_row_tol)?,
                };
                for &mode in &hs.modes {
                    let labels = cluster_kept(l, &keep, m, mode, &kcfg)?;
                    let h = hamming_error_by_node(&labels, &truth.labels_star)?;
                    out.push((fit.method, mode_label(mode).to_string(), h));
                }
            }
        }
    }
    Ok(out)
}

type Measured = (Vec<(Method, String, f64)>, Vec<(Method, TuningParams, bool, usize)>);

fn replicate(cfg: &ExperimentConfig, spec: &SimSpec, seed: u64) -> CliResult<Measured> {
    let spec = spec.clone().with_seed(seed);
    let (data, truth) = generate(&spec)?;
    let ols = fit_ols(&data)?;
    let mut pipeline: PipelineConfig = cfg.pipeline.clone();
    pipeline.grid.seed = seed;
    if let Some(g) = pipeline.nonapmle_grid.as_mut() {
        g.seed = seed;
    }
    let fits = fit_methods(&ols.residuals, &cfg.methods, &pipeline, spec.sign_mode())?;
    let picked = fits.iter().map(|f| (f.method, f.params, f.converged, f.iterations)).collect();
    Ok((evaluate(cfg, &fits, &truth, seed)?, picked))
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

/// Runs every replication of every setting. Failed replications are
/// collected, never propagated; see [`ExperimentOutput::check_failures`].
pub fn execute(cfg: &ExperimentConfig) -> CliResult<ExperimentOutput> {
    cfg.validate()?;
    let (sweep_header, settings) = cfg.settings()?;
    let units: Vec<(usize, usize)> = (0..settings.len())
        .flat_map(|s| (0..cfg.replications).map(move |r| (s, r)))
        .collect();
    let results: Vec<_> = units
        .par_iter()
        .map(|&(s, r)| {
            let seed = cfg.seed.wrapping_add(r as u64);
            (s, r, seed, replicate(cfg, &settings[s].1, seed))
        })
        .collect();
    let mut rows = Vec::new();
    let mut selections = Vec::new();
    let mut failures = Vec::new();
    for (s, r, seed, res) in results {
        let setting = settings[s].0.clone();
        match res {
            Ok((vals, picked)) => {
                rows.extend(vals.into_iter().map(|(method, metric, value)| RepRow {
                    setting: setting.clone(),
                    replication: r,
                    seed,
                    method,
                    metric,
                    value,
                }));
                selections.extend(picked.into_iter().map(|(method, p, converged, iterations)| Selection {
                    setting: setting.clone(),
                    replication: r,
                    method,
                    gamma: p.gamma,
                    delta: p.delta,
                    tau: p.tau,
                    converged,
                    iterations,
                }));
            }
            Err(e) => failures.push(Failure {
                setting,
                replication: r,
                seed,
                message: e.to_string(),
            }),
        }
    }
    let metrics = cfg.metric_names();
    let mut summary = Vec::new();
    for (label, _) in &settings {
        for metric in &metrics {
            for &method in &cfg.methods {
                let vals: Vec<f64> = rows
                    .iter()
                    .filter(|r| &r.setting == label && &r.metric == metric && r.method == method)
                    .map(|r| r.value)
                    .collect();
                let (mean, sd) = if vals.is_empty() { (f64::NAN, f64::NAN) } else { mean_sd(&vals) };
                summary.push(SummaryRow {
                    setting: label.clone(),
                    metric: metric.clone(),
                    method,
                    mean,
                    sd,
                    count: vals.len(),
                });
            }
        }
    }
    Ok(ExperimentOutput {
        evaluation: cfg.evaluation,
        sweep_header,
        settings: settings.into_iter().map(|(l, _)| l).collect(),
        metrics,
        methods: cfg.methods.clone(),
        rows,
        selections,
        failures,
        summary,
        replications: cfg.replications,
    })
}

fn csv_text<I, R>(header: &[&str], records: I) -> CliResult<String>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Runtime(e.to_string());
    wtr.write_record(header).map_err(err)?;
    for rec in records {
        wtr.write_record(rec).map_err(err)?;
    }
    let bytes = wtr.into_inner().map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

impl ExperimentOutput {
    pub fn get(&self, setting: &str, metric: &str, method: Method) -> Option<&SummaryRow> {
        self.summary
            .iter()
            .find(|r| r.setting == setting && r.metric == metric && r.method == method)
    }

    /// Mean for a metric and method in the first setting.
    pub fn mean(&self, metric: &str, method: Method) -> Option<f64> {
        self.get(self.settings.first()?, metric, method).map(|r| r.mean)
    }

    fn cell(&self, setting: &str, metric: &str, method: Method) -> String {
        match self.get(setting, metric, method) {
            Some(r) if r.count > 0 => format!("{:.3} ({:.3})", r.mean, r.sd),
            _ => "NA".to_string(),
        }
    }

    /// `mean (sd)` table. Criteria tables have one row per setting and
    /// criterion; Hamming tables one row per clustering input and setting.
    pub fn table_csv(&self) -> CliResult<String> {
        let names: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let mut records = Vec::new();
        let header: Vec<&str> = match self.evaluation {
            Evaluation::Criteria => {
                for s in &self.settings {
                    for metric in &self.metrics {
                        let mut rec = vec![s.clone(), metric.clone()];
                        rec.extend(self.methods.iter().map(|&m| self.cell(s, metric, m)));
                        records.push(rec);
                    }
                }
                [self.sweep_header.as_str(), "Criteria"].into_iter().chain(names).collect()
            }
            Evaluation::Hamming => {
                for metric in &self.metrics {
                    for s in &self.settings {
                        let mut rec = vec![metric.clone(), s.clone()];
                        rec.extend(self.methods.iter().map(|&m| self.cell(s, metric, m)));
                        records.push(rec);
                    }
                }
                ["Clustering based", self.sweep_header.as_str()]
                    .into_iter()
                    .chain(names)
                    .collect()
            }
        };
        csv_text(&header, records)
    }

    pub fn replications_csv(&self) -> CliResult<String> {
        csv_text(
            &["setting", "replication", "seed", "method", "metric", "value"],
            self.rows.iter().map(|r| {
                [
                    r.setting.clone(),
                    r.replication.to_string(),
                    r.seed.to_string(),
                    r.method.name().to_string(),
                    r.metric.clone(),
                    format!("{}", r.value),
                ]
            }),
        )
    }

    pub fn summary_csv(&self) -> CliResult<String> {
        csv_text(
            &["setting", "metric", "method", "mean", "sd", "count"],
            self.summary.iter().map(|r| {
                [
                    r.setting.clone(),
                    r.metric.clone(),
                    r.method.name().to_string(),
                    format!("{}", r.mean),
                    format!("{}", r.sd),
                    r.count.to_string(),
                ]
            }),
        )
    }

    pub fn selections_csv(&self) -> CliResult<String> {
        csv_text(
            &["setting", "replication", "method", "gamma", "delta", "tau", "converged", "iterations"],
            self.selections.iter().map(|s| {
                [
                    s.setting.clone(),
                    s.replication.to_string(),
                    s.method.name().to_string(),
                    format!("{}", s.gamma),
                    format!("{}", s.delta),
                    format!("{}", s.tau),
                    s.converged.to_string(),
                    s.iterations.to_string(),
                ]
            }),
        )
    }

    pub fn failures_csv(&self) -> CliResult<String> {
        csv_text(
            &["setting", "replication", "seed", "message"],
            self.failures.iter().map(|f| {
                [
                    f.setting.clone(),
                    f.replication.to_string(),
                    f.seed.to_string(),
                    f.message.clone(),
                ]
            }),
        )
    }

    /// Errors when more than `max_rate` of all replications failed.
    pub fn check_failures(&self, max_rate: f64) -> CliResult<()> {
        let total = self.settings.len() * self.replications;
        if self.failures.len() as f64 > max_rate * total as f64 {
            let mut msg = format!("{} of {} replications failed", self.failures.len(), total);
            if let Some(f) = self.failures.first() {
                let _ = write!(msg, "; first: {}", f.message);
            }
            return Err(CliError::Runtime(msg));
        }
        Ok(())
    }
}

/// Runs the experiment and writes `tables.csv`, `replications.csv`,
/// `summary.csv`, `selections.csv` and `failures.csv` into `out_dir`.
pub fn run(cfg: &ExperimentConfig, base: &Path) -> CliResult<ExperimentOutput> {
    let out = execute(cfg)?;
    let dir = resolve(base, &cfg.out_dir);
    write_bytes(&dir.join("tables.csv"), out.table_csv()?.as_bytes())?;
    write_bytes(&dir.join("replications.csv"), out.replications_csv()?.as_bytes())?;
    write_bytes(&dir.join("summary.csv"), out.summary_csv()?.as_bytes())?;
    write_bytes(&dir.join("selections.csv"), out.selections_csv()?.as_bytes())?;
    write_bytes(&dir.join("failures.csv"), out.failures_csv()?.as_bytes())?;
    out.check_failures(cfg.max_failure_rate)?;
    Ok(out)
}
