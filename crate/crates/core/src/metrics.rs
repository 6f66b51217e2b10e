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

//! Structure-recovery criteria for estimated decompositions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prox::EigenSystem;
use crate::types::{Decomposition, GroundTruth, SymMatrix};

pub const DEFAULT_RANK_REL_TOL: f64 = 1e-4;
pub const DEFAULT_SUPPORT_REL_TOL: f64 = 1e-6;

/// Number of eigenvalues above `rel_tol · max(λ_max, 1e-300)`.
pub fn numerical_rank(l: &SymMatrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidParameter(format!("rank tolerance must be positive, got {rel_tol}")));
    }
    let eig = EigenSystem::new(l)?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(1e-300);
    Ok(eig.values.iter().filter(|&&v| v > rel_tol * top).count())
}

/// `1e-6 · max(max|m_ij|, 1)`.
pub fn default_support_tol(m: &SymMatrix) -> f64 {
    DEFAULT_SUPPORT_REL_TOL * m.as_matrix().amax().max(1.0)
}

/// Entrywise `|m_ij| > abs_tol`.
pub fn support(m: &SymMatrix, abs_tol: f64) -> DMatrix<bool> {
    m.as_matrix().map(|v| v.abs() > abs_tol)
}

/// Thresholds used by [`score`]. `None` selects the default for that matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreTolerances {
    pub rank_rel_tol: f64,
    pub l_abs_tol: Option<f64>,
    pub s_abs_tol: Option<f64>,
}

impl Default for ScoreTolerances {
    fn default() -> Self {
        Self {
            rank_rel_tol: DEFAULT_RANK_REL_TOL,
            l_abs_tol: None,
            s_abs_tol: None,
        }
    }
}

/// The five recovery criteria for one estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaReport {
    /// 1 when `rank(L̂) = rank(L*)`.
    pub tr_l: f64,
    pub tp_l: f64,
    pub fp_l: f64,
    pub tp_s: f64,
    pub fp_s: f64,
    pub rank_est: usize,
    pub l_abs_tol: f64,
    pub s_abs_tol: f64,
    pub rank_rel_tol: f64,
    /// Names of rates whose denominator was empty (TP set to 1, FP to 0).
    pub vacuous: Vec<String>,
}

struct Rate {
    hit: usize,
    total: usize,
}

impl Rate {
    fn value(&self, vacuous: f64) -> f64 {
        if self.total == 0 {
            vacuous
        } else {
            self.hit as f64 / self.total as f64
        }
    }
}

/// Counts pairs `(k, l)` with `k ≤ l` (or `k < l` when `strict`) where the truth is
/// nonzero / zero and the estimate is nonzero.
fn rates(est: &DMatrix<bool>, truth: &DMatrix<bool>, strict: bool) -> (Rate, Rate) {
    let p = est.nrows();
    let mut tp = Rate { hit: 0, total: 0 };
    let mut fp = Rate { hit: 0, total: 0 };
    for k in 0..p {
        let from = if strict { k + 1 } else { k };
        for l in from..p {
            let bucket = if truth[(k, l)] { &mut tp } else { &mut fp };
            bucket.total += 1;
            if est[(k, l)] {
                bucket.hit += 1;
            }
        }
    }
    (tp, fp)
}

/// Scores an estimate against the truth. Truth supports are exact
/// (any nonzero entry counts); estimate supports use the given tolerances.
pub fn score(est: &Decomposition, truth: &GroundTruth, tol: &ScoreTolerances) -> Result<CriteriaReport> {
    if est.dim() != truth.p() {
        return Err(Error::DimensionMismatch(format!(
            "estimate is {0}x{0}, truth is {1}x{1}",
            est.dim(),
            truth.p()
        )));
    }
    let l_tol = tol.l_abs_tol.unwrap_or_else(|| default_support_tol(&est.l));
    let s_tol = tol.s_abs_tol.unwrap_or_else(|| default_support_tol(&est.s));
    let rank_est = numerical_rank(&est.l, tol.rank_rel_tol)?;

    let (tp_l, fp_l) = rates(&support(&est.l, l_tol), &support(&truth.l_star, 0.0), false);
    let (tp_s, fp_s) = rates(&support(&est.s, s_tol), &support(&truth.s_star, 0.0), true);

    let mut vacuous = Vec::new();
    for (name, r) in [("tp_l", &tp_l), ("fp_l", &fp_l), ("tp_s", &tp_s), ("fp_s", &fp_s)] {
        if r.total == 0 {
            vacuous.push(name.to_string());
        }
    }
    Ok(CriteriaReport {
        tr_l: if rank_est == truth.rank_star { 1.0 } else { 0.0 },
        tp_l: tp_l.value(1.0),
        fp_l: fp_l.value(0.0),
        tp_s: tp_s.value(1.0),
        fp_s: fp_s.value(0.0),
        rank_est,
        l_abs_tol: l_tol,
        s_abs_tol: s_tol,
        rank_rel_tol: tol.rank_rel_tol,
        vacuous,
    })
}
