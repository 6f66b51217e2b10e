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

//! The estimators compared in the benchmarks, run end to end on a residual matrix.

use serde::{Deserialize, Serialize};

use crate::admm::{solve, SolveReport};
use crate::error::{Error, Result};
use crate::regression::empirical_covariance;
use crate::tuning::{
    adaptive_weights, cross_validate, hard_threshold_lvggm, lvggm_initial, CvRow, PenaltyGrid, DEFAULT_WEIGHT_EXPONENT,
};
use crate::types::{Decomposition, Matrix, SignMode, SymMatrix, TuningParams, WeightMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// ℓ1 on `S` plus nuclear norm on `L`.
    Lvggm,
    /// LVGGM with `L` hard-thresholded at `c/√n`.
    HtLvggm,
    /// The full estimator with all-ones weights.
    Nonapmle,
    /// The full estimator with adaptive weights from the LVGGM pilot.
    Proposed,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lvggm, Method::HtLvggm, Method::Nonapmle, Method::Proposed];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lvggm => "LVGGM",
            Method::HtLvggm => "HT-LVGGM",
            Method::Nonapmle => "NonAPMLE",
            Method::Proposed => "Proposed",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// How the LVGGM pilot picks `(γ, δ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PilotSpec {
    Fixed { gamma: f64, delta: f64 },
    /// Cross-validate over the `γ` and `δ` values of the main grid with `τ = 0`.
    Cv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Penalty grid for the proposed method.
    pub grid: PenaltyGrid,
    /// Grid for NonAPMLE; the main grid when absent.
    #[serde(default)]
    pub nonapmle_grid: Option<PenaltyGrid>,
    pub pilot: PilotSpec,
    #[serde(default = "default_exponent")]
    pub weight_exponent: f64,
    #[serde(default = "default_cap")]
    pub weight_cap: f64,
    /// `c` in the HT-LVGGM threshold `c/√n`.
    #[serde(default = "default_ht")]
    pub ht_constant: f64,
    /// `μ`, `ε` and the iteration cap; penalties are ignored.
    #[serde(default)]
    pub solver: TuningParams,
}

fn default_exponent() -> f64 {
    DEFAULT_WEIGHT_EXPONENT
}

fn default_cap() -> f64 {
    WeightMatrix::DEFAULT_CAP
}

fn default_ht() -> f64 {
    1.0
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if let Some(g) = &self.nonapmle_grid {
            g.validate()?;
        }
        if let PilotSpec::Fixed { gamma, delta } = self.pilot {
            TuningParams::penalties(gamma, delta, 0.0).validate()?;
        }
        if !(self.weight_exponent > 0.0 && self.weight_exponent.is_finite()) {
            return Err(Error::InvalidParameter("weight_exponent must be positive".into()));
        }
        if !(self.weight_cap > 0.0 && self.weight_cap.is_finite()) {
            return Err(Error::InvalidParameter("weight_cap must be positive".into()));
        }
        if !(self.ht_constant >= 0.0 && self.ht_constant.is_finite()) {
            return Err(Error::InvalidParameter("ht_constant must be nonnegative".into()));
        }
        self.solver.validate()
    }
}

/// One fitted method.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodFit {
    pub method: Method,
    pub decomposition: Decomposition,
    /// Penalties used for the reported fit.
    pub params: TuningParams,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub cv_table: Vec<CvRow>,
    /// HT-LVGGM threshold.
    pub threshold: Option<f64>,
}

impl MethodFit {
    fn from_report(method: Method, rep: SolveReport, params: TuningParams, cv_table: Vec<CvRow>) -> Self {
        Self {
            method,
            decomposition: rep.decomposition,
            params,
            converged: rep.converged,
            iterations: rep.iterations,
            objective: rep.objective,
            cv_table,
            threshold: None,
        }
    }
}

struct Pilot {
    report: SolveReport,
    params: TuningParams,
    cv_table: Vec<CvRow>,
}

fn run_pilot(residuals: &Matrix, sigma: &SymMatrix, cfg: &PipelineConfig, sign_mode: SignMode) -> Result<Pilot> {
    let (gamma, delta, cv_table) = match cfg.pilot {
        PilotSpec::Fixed { gamma, delta } => (gamma, delta, Vec::new()),
        PilotSpec::Cv => {
            let grid = PenaltyGrid {
                tau_values: vec![0.0],
                ..cfg.grid.clone()
            };
            let out = cross_validate(residuals, &grid, &WeightMatrix::ones(sigma.dim()), &cfg.solver, sign_mode)?;
            (out.best.gamma, out.best.delta, out.table)
        }
    };
    let report = lvggm_initial(sigma, gamma, delta, &cfg.solver, sign_mode)?;
    Ok(Pilot {
        report,
        params: TuningParams {
            gamma,
            delta,
            tau: 0.0,
            ..cfg.solver
        },
        cv_table,
    })
}

fn tuned_fit(
    method: Method,
    residuals: &Matrix,
    sigma: &SymMatrix,
    grid: &PenaltyGrid,
    weights: &WeightMatrix,
    cfg: &PipelineConfig,
    sign_mode: SignMode,
) -> Result<MethodFit> {
    let cv = cross_validate(residuals, grid, weights, &cfg.solver, sign_mode)?;
    let rep = solve(sigma, &cv.best, weights, sign_mode)?;
    Ok(MethodFit::from_report(method, rep, cv.best, cv.table))
}

/// Fits each requested method on the residuals (rows are observations).
///
/// Results come back in the order of `methods`. The LVGGM pilot is computed
/// once and shared.
pub fn fit_methods(
    residuals: &Matrix,
    methods: &[Method],
    cfg: &PipelineConfig,
    sign_mode: SignMode,
) -> Result<Vec<MethodFit>> {
    cfg.validate()?;
    let sigma = empirical_covariance(residuals)?;
    let needs_pilot = methods
        .iter()
        .any(|m| matches!(m, Method::Lvggm | Method::HtLvggm | Method::Proposed));
    let pilot = if needs_pilot {
        Some(run_pilot(residuals, &sigma, cfg, sign_mode)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(methods.len());
    for &method in methods {
        let fit = match method {
            Method::Lvggm => {
                let p = pilot.as_ref().expect("pilot computed");
                MethodFit::from_report(method, p.report.clone(), p.params, p.cv_table.clone())
            }
            Method::HtLvggm => {
                let p = pilot.as_ref().expect("pilot computed");
                let ht = hard_threshold_lvggm(&p.report.decomposition.l, residuals.nrows(), cfg.ht_constant)?;
                let decomposition = Decomposition::new(p.report.decomposition.s.clone(), ht.l, sign_mode)?;
                let mut fit = MethodFit::from_report(method, p.report.clone(), p.params, p.cv_table.clone());
                fit.decomposition = decomposition;
                fit.threshold = Some(ht.threshold);
                fit
            }
            Method::Nonapmle => {
                let grid = cfg.nonapmle_grid.as_ref().unwrap_or(&cfg.grid);
                tuned_fit(method, residuals, &sigma, grid, &WeightMatrix::ones(sigma.dim()), cfg, sign_mode)?
            }
            Method::Proposed => {
                let p = pilot.as_ref().expect("pilot computed");
                let w = adaptive_weights(&p.report.decomposition.l, cfg.weight_exponent, cfg.weight_cap)?;
                tuned_fit(method, residuals, &sigma, &cfg.grid, &w, cfg, sign_mode)?
            }
        };
        out.push(fit);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    fn cfg() -> PipelineConfig {
        PipelineConfig {
            grid: PenaltyGrid::single(0.05, 0.1, 0.01),
            nonapmle_grid: None,
            pilot: PilotSpec::Fixed { gamma: 0.05, delta: 0.1 },
            weight_exponent: 1.0,
            weight_cap: 1e6,
            ht_constant: 1.0,
            solver: TuningParams {
                eps: 1e-10,
                ..TuningParams::default()
            },
        }
    }

    fn residuals() -> Matrix {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        Matrix::from_fn(50, 4, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    #[test]
    fn methods_come_back_in_order() {
        let fits = fit_methods(&residuals(), &Method::ALL, &cfg(), SignMode::Plus).unwrap();
        let names: Vec<Method> = fits.iter().map(|f| f.method).collect();
        assert_eq!(names, Method::ALL.to_vec());
        // HT-LVGGM shares S with LVGGM
        assert_eq!(fits[0].decomposition.s, fits[1].decomposition.s);
        assert_eq!(fits[1].threshold, Some(1.0 / 50f64.sqrt()));
    }

    #[test]
    fn lvggm_matches_direct_pilot() {
        let r = residuals();
        let fits = fit_methods(&r, &[Method::Lvggm], &cfg(), SignMode::Plus).unwrap();
        let sigma = empirical_covariance(&r).unwrap();
        let direct = lvggm_initial(&sigma, 0.05, 0.1, &cfg().solver, SignMode::Plus).unwrap();
        assert_eq!(fits[0].decomposition, direct.decomposition);
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = cfg();
        let text = serde_json::to_string(&c).unwrap();
        let back: PipelineConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<PipelineConfig>(&text.replace("\"pilot\"", "\"pilott\"")).is_err());
    }
}
