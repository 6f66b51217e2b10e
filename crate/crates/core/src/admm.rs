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

//! Consensus ADMM for the penalized estimator
//!
//! ```text
//! minimize  −log det Θ + tr(Σ̂Θ) + γ‖S‖_off,1 + δ‖L‖_* + τ Σ w_ij |L_ij|
//! s.t.      Θ = S ± L,  Θ ≻ 0,  L ⪰ 0
//! ```
//!
//! The problem is split into `Y1 = (Θ, S, L1, L2)`, handled block by block
//! with proximal maps, and its copy `Y2`, which is projected onto the
//! affine set `{Θ = S ± L1, L1 = L2}`. `Γ` holds the scaled duals.
//!
//! `L1` carries the weighted ℓ1 term and `L2` the nuclear norm together with
//! the PSD constraint.

use std::ops::{Add, Sub};

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::prox::{prox_logdet, prox_nuclear_psd, weighted_soft_threshold, EigenSystem};
use crate::types::{Decomposition, Matrix, SignMode, SymMatrix, TuningParams, WeightMatrix};

/// Four p×p blocks ordered `(Θ, S, L1, L2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub theta: Matrix,
    pub s: Matrix,
    pub l1: Matrix,
    pub l2: Matrix,
}

impl Blocks {
    pub fn zeros(p: usize) -> Self {
        let z = Matrix::zeros(p, p);
        Self {
            theta: z.clone(),
            s: z.clone(),
            l1: z.clone(),
            l2: z,
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn norm_squared(&self) -> f64 {
        self.theta.norm_squared() + self.s.norm_squared() + self.l1.norm_squared() + self.l2.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Matrix> {
        [&self.theta, &self.s, &self.l1, &self.l2].into_iter()
    }

    /// Largest violation of `Θ = S ± L1` and `L1 = L2`.
    pub fn consensus_violation(&self, sign_mode: SignMode) -> f64 {
        let sg = sign_mode.sign();
        let a = (&self.theta - &self.s - &self.l1 * sg).amax();
        let b = (&self.l1 - &self.l2).amax();
        a.max(b)
    }

    fn is_finite(&self) -> bool {
        self.iter().all(|m| m.iter().all(|v| v.is_finite()))
    }
}

impl<'a> Add<&'a Blocks> for &'a Blocks {
    type Output = Blocks;
    fn add(self, o: &'a Blocks) -> Blocks {
        Blocks {
            theta: &self.theta + &o.theta,
            s: &self.s + &o.s,
            l1: &self.l1 + &o.l1,
            l2: &self.l2 + &o.l2,
        }
    }
}

impl<'a> Sub<&'a Blocks> for &'a Blocks {
    type Output = Blocks;
    fn sub(self, o: &'a Blocks) -> Blocks {
        Blocks {
            theta: &self.theta - &o.theta,
            s: &self.s - &o.s,
            l1: &self.l1 - &o.l1,
            l2: &self.l2 - &o.l2,
        }
    }
}

/// Euclidean projection of `t` onto `{Θ = S ± L1, L1 = L2}` in closed form.
pub fn consensus_project(t: &Blocks, sign_mode: SignMode) -> Blocks {
    let (a, b, c, d) = (&t.theta, &t.s, &t.l1, &t.l2);
    let cd = c + d;
    match sign_mode {
        SignMode::Plus => {
            let theta = (a * 3.0 + b * 2.0 + &cd) / 5.0;
            let s = (a * 2.0 + b * 3.0 - &cd) / 5.0;
            let l = (a - b + &cd * 2.0) / 5.0;
            Blocks {
                theta,
                s,
                l1: l.clone(),
                l2: l,
            }
        }
        SignMode::Minus => {
            let theta = (a * 3.0 + b * 2.0 - &cd) / 5.0;
            let s = (a * 2.0 + b * 3.0 + &cd) / 5.0;
            let l = (b - a + &cd * 2.0) / 5.0;
            Blocks {
                theta,
                s,
                l1: l.clone(),
                l2: l,
            }
        }
    }
}

/// Iterates of the consensus ADMM.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub y1: Blocks,
    pub y2: Blocks,
    pub gamma: Blocks,
    pub iter: usize,
    pub rel_change: f64,
}

impl AdmmState {
    /// `S = L1 = L2 = I`, `Θ = S ± L1`, zero duals.
    pub fn initial(p: usize, sign_mode: SignMode) -> Self {
        let eye = Matrix::identity(p, p);
        let theta = &eye + &eye * sign_mode.sign();
        let y1 = Blocks {
            theta,
            s: eye.clone(),
            l1: eye.clone(),
            l2: eye,
        };
        Self {
            y2: y1.clone(),
            y1,
            gamma: Blocks::zeros(p),
            iter: 0,
            rel_change: f64::INFINITY,
        }
    }

    pub fn dim(&self) -> usize {
        self.y1.dim()
    }
}

fn check_inputs(sigma_hat: &SymMatrix, params: &TuningParams, weights: &WeightMatrix) -> Result<()> {
    params.validate()?;
    if weights.dim() != sigma_hat.dim() {
        return Err(Error::DimensionMismatch(format!(
            "weights are {0}x{0} but the covariance is {1}x{1}",
            weights.dim(),
            sigma_hat.dim()
        )));
    }
    if sigma_hat.as_matrix().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// One full sweep: proximal updates of `Y1`, consensus projection for `Y2`, dual update.
pub fn admm_step(
    state: &AdmmState,
    sigma_hat: &SymMatrix,
    params: &TuningParams,
    weights: &WeightMatrix,
    sign_mode: SignMode,
) -> Result<AdmmState> {
    let mu = params.mu;
    let AdmmState { y1, y2, gamma, .. } = state;

    let theta = prox_logdet(&SymMatrix::symmetrize(&y2.theta - &gamma.theta), mu, sigma_hat)?.into_matrix();

    // the diagonal of S is left unpenalized
    let mut s = &y2.s - &gamma.s;
    let level = mu * params.gamma;
    for j in 0..s.ncols() {
        for i in 0..s.nrows() {
            if i != j {
                let v = s[(i, j)];
                s[(i, j)] = v.signum() * (v.abs() - level).max(0.0);
            }
        }
    }

    // L ⪰ 0 is enforced through L2; L1 = L2 at consensus
    let l1 = weighted_soft_threshold(&(&y2.l1 - &gamma.l1), mu * params.tau, weights);

    let l2 = prox_nuclear_psd(&SymMatrix::symmetrize(&y2.l2 - &gamma.l2), mu * params.delta)?.into_matrix();

    let y1_next = Blocks { theta, s, l1, l2 };
    let t = &y1_next + gamma;
    let y2_next = consensus_project(&t, sign_mode);
    let gamma_next = &t - &y2_next;

    if !y1_next.is_finite() || !y2_next.is_finite() {
        return Err(Error::EigenFailure("ADMM iterates became non-finite".into()));
    }

    let denom = y1.norm_squared();
    let diff = (&y1_next - y1).norm_squared();
    let rel_change = if denom > 0.0 { diff / denom } else { diff };

    Ok(AdmmState {
        y1: y1_next,
        y2: y2_next,
        gamma: gamma_next,
        iter: state.iter + 1,
        rel_change,
    })
}

/// Outcome of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `S` from the S block, `L` from the nuclear-prox block, `Θ = S ± L`.
    pub decomposition: Decomposition,
    pub iterations: usize,
    pub converged: bool,
    pub final_rel_change: f64,
    /// Penalized objective at the returned point.
    pub objective: f64,
    /// `‖Θ_block − (S ± L)‖_F` at the last iterate.
    pub theta_discrepancy: f64,
    /// `‖Y1 − Y2‖_F` at the last iterate.
    pub primal_residual: f64,
    /// `‖Y2ᵏ⁺¹ − Y2ᵏ‖_F / μ` at the last iterate.
    pub dual_residual: f64,
    /// Final iterates, reusable as a warm start.
    pub state: AdmmState,
}

impl SolveReport {
    /// The weighted-ℓ1 block `L1`, which carries exact zeros.
    pub fn l1_block(&self) -> &Matrix {
        &self.state.y1.l1
    }
}

/// Runs the ADMM from the standard initialization.
pub fn solve(
    sigma_hat: &SymMatrix,
    params: &TuningParams,
    weights: &WeightMatrix,
    sign_mode: SignMode,
) -> Result<SolveReport> {
    solve_from(sigma_hat, params, weights, sign_mode, None)
}

/// Runs the ADMM, optionally warm-started from previous iterates.
pub fn solve_from(
    sigma_hat: &SymMatrix,
    params: &TuningParams,
    weights: &WeightMatrix,
    sign_mode: SignMode,
    warm: Option<&AdmmState>,
) -> Result<SolveReport> {
    check_inputs(sigma_hat, params, weights)?;
    let p = sigma_hat.dim();
    let mut state = match warm {
        Some(w) if w.dim() == p => AdmmState {
            iter: 0,
            rel_change: f64::INFINITY,
            ..w.clone()
        },
        Some(w) => {
            return Err(Error::DimensionMismatch(format!(
                "warm start is {0}x{0}, problem is {1}x{1}",
                w.dim(),
                p
            )))
        }
        None => AdmmState::initial(p, sign_mode),
    };
    let mut converged = false;
    let mut dual_residual = f64::INFINITY;
    while state.iter < params.max_iter {
        let next = admm_step(&state, sigma_hat, params, weights, sign_mode)?;
        dual_residual = (&next.y2 - &state.y2).norm() / params.mu;
        state = next;
        if state.rel_change <= params.eps
            && (&state.y1 - &state.y2).norm_squared() <= params.eps * state.y1.norm_squared()
        {
            converged = true;
            break;
        }
    }
    Ok(finish(state, converged, dual_residual, sigma_hat, params, weights, sign_mode))
}

fn finish(
    state: AdmmState,
    converged: bool,
    dual_residual: f64,
    sigma_hat: &SymMatrix,
    params: &TuningParams,
    weights: &WeightMatrix,
    sign_mode: SignMode,
) -> SolveReport {
    let s = SymMatrix::symmetrize(state.y1.s.clone());
    let l = SymMatrix::symmetrize(state.y1.l2.clone());
    let decomposition = Decomposition {
        theta: Decomposition::combine(&s, &l, sign_mode),
        s,
        l,
        sign_mode,
    };
    let objective = penalized_objective(&decomposition, sigma_hat, params, weights);
    let theta_discrepancy = (&state.y1.theta - decomposition.theta.as_matrix()).norm();
    let primal_residual = (&state.y1 - &state.y2).norm();
    SolveReport {
        decomposition,
        iterations: state.iter,
        converged,
        final_rel_change: state.rel_change,
        objective,
        theta_discrepancy,
        primal_residual,
        dual_residual,
        state,
    }
}

/// `−log det Θ + tr(Σ̂Θ)`, or `+∞` when `Θ` is not positive definite.
pub fn neg_log_likelihood(theta: &SymMatrix, sigma_hat: &SymMatrix) -> f64 {
    match Cholesky::new(theta.as_matrix().clone()) {
        Some(chol) => {
            let logdet: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            -logdet + theta.as_matrix().dot(sigma_hat.as_matrix())
        }
        None => f64::INFINITY,
    }
}

/// Gradient of [`neg_log_likelihood`]: `Σ̂ − Θ⁻¹`.
pub fn neg_log_likelihood_gradient(theta: &SymMatrix, sigma_hat: &SymMatrix) -> Result<Matrix> {
    let inv = Cholesky::new(theta.as_matrix().clone())
        .ok_or_else(|| Error::InvalidParameter("theta is not positive definite".into()))?
        .inverse();
    Ok(sigma_hat.as_matrix() - inv)
}

/// `γ‖S‖_off,1 + δ‖L‖_* + τ Σ w_ij |L_ij|`.
pub fn penalty(s: &SymMatrix, l: &SymMatrix, params: &TuningParams, weights: &WeightMatrix) -> f64 {
    let p = s.dim();
    let mut off = 0.0;
    for j in 0..p {
        for i in 0..p {
            if i != j {
                off += s.get(i, j).abs();
            }
        }
    }
    let nuclear: f64 = EigenSystem::new(l)
        .map(|e| e.values.iter().map(|v| v.abs()).sum())
        .unwrap_or(f64::INFINITY);
    let weighted: f64 = l
        .as_matrix()
        .iter()
        .zip(weights.as_matrix().iter())
        .map(|(v, w)| w * v.abs())
        .sum();
    params.gamma * off + params.delta * nuclear + params.tau * weighted
}

/// Likelihood loss plus penalty at a decomposition; `+∞` outside the feasible set.
pub fn penalized_objective(
    d: &Decomposition,
    sigma_hat: &SymMatrix,
    params: &TuningParams,
    weights: &WeightMatrix,
) -> f64 {
    neg_log_likelihood(&d.theta, sigma_hat) + penalty(&d.s, &d.l, params, weights)
}
