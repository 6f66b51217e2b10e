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

//! Pilot fits, adaptive weights, hard thresholding and cross-validation.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{neg_log_likelihood, solve, SolveReport};
use crate::error::{Error, Result};
use crate::regression::empirical_covariance;
use crate::types::{Matrix, SignMode, SymMatrix, TuningParams, WeightMatrix};

/// Default exponent in `w = 1/|l̄|^a`.
pub const DEFAULT_WEIGHT_EXPONENT: f64 = 1.0;

/// Candidate penalties and fold layout for [`cross_validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyGrid {
    pub gamma_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

impl PenaltyGrid {
    pub fn single(gamma: f64, delta: f64, tau: f64) -> Self {
        Self {
            gamma_values: vec![gamma],
            delta_values: vec![delta],
            tau_values: vec![tau],
            folds: 2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, vals) in [
            ("gamma_values", &self.gamma_values),
            ("delta_values", &self.delta_values),
            ("tau_values", &self.tau_values),
        ] {
            if vals.is_empty() {
                return Err(Error::InvalidParameter(format!("{name} is empty")));
            }
            if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidParameter(format!("{name} must hold finite nonnegative values")));
            }
            if vals.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter(format!("{name} must be strictly increasing")));
            }
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 folds, got {}", self.folds)));
        }
        Ok(())
    }

    /// Every `(γ, δ, τ)` in lexicographic order.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &g in &self.gamma_values {
            for &d in &self.delta_values {
                for &t in &self.tau_values {
                    out.push((g, d, t));
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.gamma_values.len() * self.delta_values.len() * self.tau_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The pilot fit: ℓ1 on `S` plus nuclear norm on `L`, no weighted term.
pub fn lvggm_initial(
    sigma_hat: &SymMatrix,
    gamma: f64,
    delta: f64,
    base: &TuningParams,
    sign_mode: SignMode,
) -> Result<SolveReport> {
    let params = TuningParams {
        gamma,
        delta,
        tau: 0.0,
        ..*base
    };
    solve(sigma_hat, &params, &WeightMatrix::ones(sigma_hat.dim()), sign_mode)
}

/// `w_ij = min(1/|l̄_ij|^a, cap)`.
pub fn adaptive_weights(l_bar: &SymMatrix, a: f64, cap: f64) -> Result<WeightMatrix> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight exponent must be positive, got {a}")));
    }
    if !(cap > 0.0 && cap.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight cap must be positive, got {cap}")));
    }
    let w = l_bar.as_matrix().map(|l| {
        let base = l.abs().powf(a);
        if base > 0.0 {
            (1.0 / base).min(cap)
        } else {
            cap
        }
    });
    WeightMatrix::new(SymMatrix::symmetrize(w).into_matrix(), cap)
}

/// Result of [`hard_threshold_lvggm`].
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded {
    pub l: SymMatrix,
    pub threshold: f64,
}

/// Zeroes entries with `|l̄_ij| ≤ c/√n`.
pub fn hard_threshold_lvggm(l_bar: &SymMatrix, n: usize, c: f64) -> Result<Thresholded> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("threshold constant must be nonnegative, got {c}")));
    }
    let threshold = c / (n as f64).sqrt();
    let l = l_bar.as_matrix().map(|v| if v.abs() > threshold { v } else { 0.0 });
    Ok(Thresholded {
        l: SymMatrix::symmetrize(l),
        threshold,
    })
}

/// Splits `0..n` into `folds` segments after a seeded shuffle. Sizes differ by at most one.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidParameter(format!("cannot split {n} rows into {folds} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for t in 0..folds {
        let len = base + usize::from(t < extra);
        let mut seg = idx[start..start + len].to_vec();
        seg.sort_unstable();
        out.push(seg);
        start += len;
    }
    Ok(out)
}

/// One row of the CV table. `fold = None` marks the aggregate over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub gamma: f64,
    pub delta: f64,
    pub tau: f64,
    pub fold: Option<usize>,
    pub score: f64,
}

/// Outcome of [`cross_validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub best: TuningParams,
    pub best_score: f64,
    /// Per-fold rows in grid order, then one aggregate row per grid point.
    pub table: Vec<CvRow>,
}

fn rows_of(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Held-out score `tr(Σ̂ᵗΘ) − log det Θ`, `+∞` when `Θ` is not positive definite.
pub fn heldout_score(theta: &SymMatrix, sigma_test: &SymMatrix) -> f64 {
    neg_log_likelihood(theta, sigma_test)
}

/// Grid search by `T`-fold cross-validation of the predictive negative log-likelihood.
///
/// `base` supplies `μ`, `ε` and the iteration cap. Fits that fail or give a
/// non-positive-definite `Θ̂` score `+∞`.
pub fn cross_validate(
    residuals: &Matrix,
    grid: &PenaltyGrid,
    weights: &WeightMatrix,
    base: &TuningParams,
    sign_mode: SignMode,
) -> Result<CvOutcome> {
    grid.validate()?;
    let n = residuals.nrows();
    if grid.folds > n {
        return Err(Error::InvalidParameter(format!("{} folds exceed {n} rows", grid.folds)));
    }
    let segments = fold_partition(n, grid.folds, grid.seed)?;
    let covs: Vec<(SymMatrix, SymMatrix)> = segments
        .iter()
        .map(|test| {
            let train: Vec<usize> = (0..n).filter(|i| test.binary_search(i).is_err()).collect();
            Ok((
                empirical_covariance(&rows_of(residuals, &train))?,
                empirical_covariance(&rows_of(residuals, test))?,
            ))
        })
        .collect::<Result<_>>()?;

    let points = grid.points();
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..grid.folds).map(move |t| (g, t)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, t)| {
            let (gamma, delta, tau) = points[g];
            let params = TuningParams { gamma, delta, tau, ..*base };
            let (train, test) = &covs[t];
            match solve(train, &params, weights, sign_mode) {
                Ok(rep) => heldout_score(&rep.decomposition.theta, test),
                Err(_) => f64::INFINITY,
            }
        })
        .collect();

    let mut table = Vec::with_capacity(jobs.len() + points.len());
    for (&(g, t), &score) in jobs.iter().zip(&scores) {
        let (gamma, delta, tau) = points[g];
        table.push(CvRow { gamma, delta, tau, fold: Some(t), score });
    }
    let mut best: Option<(usize, f64)> = None;
    let mut first_bad_fold = None;
    for (g, &(gamma, delta, tau)) in points.iter().enumerate() {
        let fold_scores = &scores[g * grid.folds..(g + 1) * grid.folds];
        if first_bad_fold.is_none() {
            first_bad_fold = fold_scores.iter().position(|s| !s.is_finite());
        }
        let total: f64 = if fold_scores.iter().all(|s| s.is_finite()) {
            fold_scores.iter().sum()
        } else {
            f64::INFINITY
        };
        table.push(CvRow { gamma, delta, tau, fold: None, score: total });
        // points are ascending, so `<=` keeps the largest tied triple
        if total.is_finite() && best.is_none_or(|(_, b)| total <= b) {
            best = Some((g, total));
        }
    }
    let (g, best_score) = best.ok_or(Error::InfeasibleFold {
        fold: first_bad_fold.unwrap_or(0),
    })?;
    let (gamma, delta, tau) = points[g];
    Ok(CvOutcome {
        best: TuningParams { gamma, delta, tau, ..*base },
        best_score,
        table,
    })
}

/// Writes the CV table as CSV with columns `gamma,delta,tau,fold,score`; aggregate rows carry `fold = all`.
pub fn write_cv_table<W: Write>(w: W, table: &[CvRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let io = |e: csv::Error| Error::Parse(e.to_string());
    wtr.write_record(["gamma", "delta", "tau", "fold", "score"]).map_err(io)?;
    for r in table {
        let fold = r.fold.map_or_else(|| "all".to_string(), |f| f.to_string());
        wtr.write_record([
            r.gamma.to_string(),
            r.delta.to_string(),
            r.tau.to_string(),
            fold,
            r.score.to_string(),
        ])
        .map_err(io)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}
