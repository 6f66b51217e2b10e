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

//! Reference solvers used to cross-check the production code on small
//! problems. Not tuned for speed.

use nalgebra::{Cholesky, SMatrix, SVector};

use crate::admm::{penalized_objective, AdmmState, Blocks, SolveReport};
use crate::error::{Error, Result};
use crate::prox::{project_psd, weighted_soft_threshold};
use crate::types::{Decomposition, Matrix, SignMode, SymMatrix, TuningParams, WeightMatrix};

/// Largest dimension accepted by [`reference_solve`].
pub const MAX_DIM: usize = 8;

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 200_000;

/// Projection onto `{Θ = S ± L1, L1 = L2}` by solving the Lagrangian system
/// `(Y − T) + Aᵀψ = 0, A·Y = 0` entrywise with a dense LU factorization.
pub fn consensus_kkt_solve(t: &Blocks, sign_mode: SignMode) -> Blocks {
    let sg = sign_mode.sign();
    // unknowns (θ, s, l1, l2, ψ1, ψ2); constraints θ − s − sg·l1 = 0 and l1 − l2 = 0
    #[rustfmt::skip]
    let kkt = SMatrix::<f64, 6, 6>::from_row_slice(&[
        1.0, 0.0, 0.0, 0.0,  1.0, 0.0,
        0.0, 1.0, 0.0, 0.0, -1.0, 0.0,
        0.0, 0.0, 1.0, 0.0,  -sg, 1.0,
        0.0, 0.0, 0.0, 1.0,  0.0, -1.0,
        1.0, -1.0, -sg, 0.0, 0.0, 0.0,
        0.0, 0.0, 1.0, -1.0, 0.0, 0.0,
    ]);
    let lu = kkt.lu();
    let p = t.dim();
    let mut out = Blocks::zeros(p);
    for j in 0..p {
        for i in 0..p {
            let rhs = SVector::<f64, 6>::from_column_slice(&[
                t.theta[(i, j)],
                t.s[(i, j)],
                t.l1[(i, j)],
                t.l2[(i, j)],
                0.0,
                0.0,
            ]);
            let x = lu.solve(&rhs).expect("KKT matrix is nonsingular");
            out.theta[(i, j)] = x[0];
            out.s[(i, j)] = x[1];
            out.l1[(i, j)] = x[2];
            out.l2[(i, j)] = x[3];
        }
    }
    out
}

/// Gradient `Σ̂ − Θ⁻¹` of the likelihood loss, `None` when `Θ = S ± L` is not PD.
fn loss_gradient(s: &Matrix, l: &Matrix, sign: f64, sigma_hat: &Matrix) -> Option<Matrix> {
    let chol = Cholesky::new(s + l * sign)?;
    Some(sigma_hat - chol.inverse())
}

fn prox_s(z: &Matrix, level: f64) -> Matrix {
    let mut out = z.clone();
    for j in 0..z.ncols() {
        for i in 0..z.nrows() {
            if i != j {
                let v = z[(i, j)];
                out[(i, j)] = v.signum() * (v.abs() - level).max(0.0);
            }
        }
    }
    out
}

/// Prox of `t·(δ tr L + τ Σ w|L_ij|)` restricted to `L ⪰ 0`, by the
/// Dykstra-like splitting between the weighted ℓ1 prox and the PSD projection.
fn prox_l(z: &Matrix, step: f64, params: &TuningParams, weights: &WeightMatrix) -> Result<Matrix> {
    let p = z.nrows();
    let shifted = z - Matrix::identity(p, p) * (step * params.delta);
    if params.tau == 0.0 {
        return Ok(project_psd(&SymMatrix::symmetrize(shifted))?.into_matrix());
    }
    let level = step * params.tau;
    let mut x = shifted;
    let mut pp = Matrix::zeros(p, p);
    let mut qq = Matrix::zeros(p, p);
    for _ in 0..50_000 {
        let y = project_psd(&SymMatrix::symmetrize(&x + &pp))?.into_matrix();
        pp = &x + &pp - &y;
        let x_next = weighted_soft_threshold(&(&y + &qq), level, weights);
        qq = &y + &qq - &x_next;
        let change = (&x_next - &x).amax();
        x = x_next;
        if change <= 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    // the limit point lies in the PSD cone; clear round-off from the last ℓ1 step
    Ok(project_psd(&SymMatrix::symmetrize(x))?.into_matrix())
}

/// Solves the penalized problem by accelerated proximal gradient on `(S, L)`
/// with backtracking, keeping `Θ = S ± L` positive definite.
pub fn reference_solve(
    sigma_hat: &SymMatrix,
    params: &TuningParams,
    weights: &WeightMatrix,
    sign_mode: SignMode,
) -> Result<SolveReport> {
    let p = sigma_hat.dim();
    if p > MAX_DIM {
        return Err(Error::InvalidParameter(format!("reference solver supports p <= {MAX_DIM}, got {p}")));
    }
    params.validate()?;
    let sg = sign_mode.sign();
    let sig = sigma_hat.as_matrix();
    let mut s = Matrix::from_fn(p, p, |i, j| if i == j { 1.0 / sig[(i, i)].max(1e-8) } else { 0.0 });
    let mut l = Matrix::zeros(p, p);
    let mut s_prev = s.clone();
    let mut l_prev = l.clone();
    let mut momentum = 1.0_f64;
    let mut step = 1.0_f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITER {
        iterations += 1;
        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / next_momentum;
        let mut ys = &s + (&s - &s_prev) * beta;
        let mut yl = &l + (&l - &l_prev) * beta;
        let gy = match loss_gradient(&ys, &yl, sg, sig) {
            Some(v) => v,
            None => {
                ys = s.clone();
                yl = l.clone();
                loss_gradient(&ys, &yl, sg, sig).ok_or(Error::NotConverged(iterations))?
            }
        };
        step *= 2.0;
        let (s_new, l_new) = loop {
            let s_try = prox_s(&(&ys - &gy * step), step * params.gamma);
            let l_try = prox_l(&(&yl - &gy * (sg * step)), step, params, weights)?;
            // descent test through gradients: for convex f,
            // f(x) − f(y) − ⟨∇f(y), x − y⟩ ≤ ⟨∇f(x) − ∇f(y), x − y⟩
            if let Some(g_try) = loss_gradient(&s_try, &l_try, sg, sig) {
                let ds = &s_try - &ys;
                let dl = &l_try - &yl;
                let curvature = (&g_try - &gy).dot(&(&ds + &dl * sg));
                if curvature <= (ds.norm_squared() + dl.norm_squared()) / (2.0 * step) {
                    break (s_try, l_try);
                }
            }
            step *= 0.5;
            if step < 1e-20 {
                return Err(Error::NotConverged(iterations));
            }
        };
        // gradient mapping at the extrapolated point; flat directions of
        // (S, L) at zero penalties keep iterates moving without changing Θ
        let mapping = ((&s_new - &ys).norm_squared() + (&l_new - &yl).norm_squared()).sqrt() / step;
        let scale = (s.norm_squared() + l.norm_squared()).sqrt().max(1.0);
        // gradient-based adaptive restart
        let restart = (&ys - &s_new).dot(&(&s_new - &s)) + (&yl - &l_new).dot(&(&l_new - &l)) > 0.0;
        s_prev = std::mem::replace(&mut s, s_new);
        l_prev = std::mem::replace(&mut l, l_new);
        momentum = if restart { 1.0 } else { next_momentum };
        if mapping <= TOL * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged(iterations));
    }

    let s_sym = SymMatrix::symmetrize(s);
    let l_sym = SymMatrix::symmetrize(l);
    let decomposition = Decomposition::new(s_sym, l_sym, sign_mode)?;
    let objective = penalized_objective(&decomposition, sigma_hat, params, weights);
    let y = Blocks {
        theta: decomposition.theta.as_matrix().clone(),
        s: decomposition.s.as_matrix().clone(),
        l1: decomposition.l.as_matrix().clone(),
        l2: decomposition.l.as_matrix().clone(),
    };
    Ok(SolveReport {
        decomposition,
        iterations,
        converged,
        final_rel_change: 0.0,
        objective,
        theta_discrepancy: 0.0,
        primal_residual: 0.0,
        dual_residual: 0.0,
        state: AdmmState {
            y2: y.clone(),
            y1: y,
            gamma: Blocks::zeros(p),
            iter: iterations,
            rel_change: 0.0,
        },
    })
}
