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

//! Proximal and projection maps used by the ADMM sweep.
//!
//! Spectral maps (nuclear-norm prox, PSD projection, log-det prox) act on
//! eigenvalues only, so the result does not depend on how an eigenbasis is
//! chosen inside repeated eigenvalues.

use nalgebra::DVector;

use crate::eigen::sym_eigen;
use crate::error::{Error, Result};
use crate::types::{Matrix, SymMatrix, WeightMatrix};


/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: Matrix,
}

impl EigenSystem {
    pub fn new(z: &SymMatrix) -> Result<Self> {
        let p = z.dim();
        if p == 0 {
            return Ok(Self {
                values: Vec::new(),
                vectors: Matrix::zeros(0, 0),
            });
        }
        let (vals, vecs) =
            sym_eigen(z.as_matrix()).ok_or_else(|| Error::EigenFailure(format!("no convergence for {p}x{p} matrix")))?;
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        let values = order.iter().map(|&k| vals[k]).collect();
        let vectors = Matrix::from_fn(p, p, |i, k| vecs[(i, order[k])]);
        Ok(Self { values, vectors })
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mapped = DVector::from_iterator(self.values.len(), self.values.iter().map(|&v| f(v)));
        let mut scaled = self.vectors.clone();
        for (k, mut col) in scaled.column_iter_mut().enumerate() {
            col *= mapped[k];
        }
        SymMatrix::symmetrize(scaled * self.vectors.transpose())
    }
}

#[inline]
fn shrink(z: f64, lambda: f64) -> f64 {
    z.signum() * (z.abs() - lambda).max(0.0)
}

/// Entrywise `sign(z)·max(|z| − λ, 0)`.
pub fn soft_threshold(z: &Matrix, lambda: f64) -> Matrix {
    z.map(|v| shrink(v, lambda))
}

/// Entrywise soft threshold at level `λ·w_ij`.
pub fn weighted_soft_threshold(z: &Matrix, lambda: f64, weights: &WeightMatrix) -> Matrix {
    let w = weights.as_matrix();
    Matrix::from_fn(z.nrows(), z.ncols(), |i, j| shrink(z[(i, j)], lambda * w[(i, j)]))
}

/// `argmin_{X ⪰ 0} λ‖X‖_* + ½‖X − Z‖_F²`: shrink eigenvalues by `λ`, clip at zero.
pub fn prox_nuclear_psd(z: &SymMatrix, lambda: f64) -> Result<SymMatrix> {
    let eig = EigenSystem::new(z)?;
    Ok(eig.reconstruct_with(|v| (v - lambda).max(0.0)))
}

/// Nearest PSD matrix in Frobenius norm.
pub fn project_psd(z: &SymMatrix) -> Result<SymMatrix> {
    let eig = EigenSystem::new(z)?;
    if eig.values.last().is_none_or(|&v| v >= 0.0) {
        return Ok(z.clone());
    }
    Ok(eig.reconstruct_with(|v| v.max(0.0)))
}

/// Minimizer of `−log det Θ + tr(Σ̂Θ) + ‖Θ − M‖_F²/(2μ)`.
///
/// With `M − μΣ̂ = U diag(σ) Uᵀ` the solution is `U diag(ξ) Uᵀ` where
/// `ξ = (σ + √(σ² + 4μ))/2` is the positive root of `ξ² − σξ − μ = 0`.
pub fn prox_logdet(m: &SymMatrix, mu: f64, sigma_hat: &SymMatrix) -> Result<SymMatrix> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    let shifted = SymMatrix::symmetrize(m.as_matrix() - sigma_hat.as_matrix() * mu);
    let eig = EigenSystem::new(&shifted)?;
    Ok(eig.reconstruct_with(|s| logdet_root(s, mu)))
}

/// Positive root of `ξ² − σξ − μ = 0`, evaluated without cancellation for σ ≪ 0.
pub(crate) fn logdet_root(sigma: f64, mu: f64) -> f64 {
    let disc = (sigma * sigma + 4.0 * mu).sqrt();
    if sigma >= 0.0 {
        0.5 * (sigma + disc)
    } else {
        2.0 * mu / (disc - sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn random_sym(rng: &mut ChaCha20Rng, p: usize, scale: f64) -> SymMatrix {
        let m = Matrix::from_fn(p, p, |_, _| rng.random_range(-scale..scale));
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn eigen_system_reconstructs() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let z = random_sym(&mut rng, 6, 2.0);
        let e = EigenSystem::new(&z).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = e.reconstruct_with(|v| v);
        assert!((back.as_matrix() - z.as_matrix()).norm() <= 1e-8 * (1.0 + z.as_matrix().norm()));
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - Matrix::identity(6, 6)).amax() <= 1e-10);
    }

    #[test]
    fn soft_threshold_examples() {
        let z = Matrix::from_row_slice(2, 2, &[2.0, -1.0, 0.3, 0.0]);
        let out = soft_threshold(&z, 0.5);
        assert_eq!(out, Matrix::from_row_slice(2, 2, &[1.5, -0.5, 0.0, 0.0]));
        assert_eq!(soft_threshold(&z, 0.0), z);
        assert_eq!(soft_threshold(&z, 2.0), Matrix::zeros(2, 2));
    }

    #[test]
    fn weighted_soft_threshold_examples() {
        let z = Matrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 0.4]);
        assert_eq!(
            weighted_soft_threshold(&z, 0.5, &WeightMatrix::ones(2)),
            soft_threshold(&z, 0.5)
        );
        let capped = WeightMatrix::new(Matrix::from_element(2, 2, 10.0), 10.0).unwrap();
        assert_eq!(weighted_soft_threshold(&z, 0.2, &capped), Matrix::zeros(2, 2));

        let w = WeightMatrix::new(Matrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 0.5]), 10.0).unwrap();
        let out = weighted_soft_threshold(&z, 0.4, &w);
        // per-entry scalar prox: argmin_x λw|x| + ½(x − z)², solved on a fine grid
        for i in 0..2 {
            for j in 0..2 {
                let level = 0.4 * w.get(i, j);
                let zz = z[(i, j)];
                let best = (-40_000..=40_000)
                    .map(|k| k as f64 * 1e-4)
                    .min_by(|a, b| {
                        let fa = level * a.abs() + 0.5 * (a - zz).powi(2);
                        let fb = level * b.abs() + 0.5 * (b - zz).powi(2);
                        fa.total_cmp(&fb)
                    })
                    .unwrap();
                assert_abs_diff_eq!(out[(i, j)], best, epsilon = 1e-4);
            }
        }
    }

    #[test]
    fn nuclear_prox_examples() {
        let z = SymMatrix::from_diagonal(&[3.0, 1.0]);
        let out = prox_nuclear_psd(&z, 2.0).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.get(1, 1), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.get(0, 1), 0.0, epsilon = 1e-14);

        let b = Matrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.7, 0.1]);
        let psd = SymMatrix::new(&b * b.transpose()).unwrap();
        let same = prox_nuclear_psd(&psd, 0.0).unwrap();
        assert!((same.as_matrix() - psd.as_matrix()).amax() < 1e-12);
    }

    /// Projected gradient on `λ tr X + ½‖X − Z‖²` over the PSD cone, step 1/2.
    fn nuclear_prox_by_projected_gradient(z: &SymMatrix, lambda: f64) -> SymMatrix {
        let p = z.dim();
        let mut x = SymMatrix::zeros(p);
        for _ in 0..200 {
            let grad = Matrix::identity(p, p) * lambda + x.as_matrix() - z.as_matrix();
            let step = SymMatrix::new(x.as_matrix() - grad * 0.5).unwrap();
            x = project_psd(&step).unwrap();
        }
        x
    }

    #[test]
    fn nuclear_prox_matches_definition() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..10 {
            let z = random_sym(&mut rng, 4, 3.0);
            let lambda = rng.random_range(0.0..1.5);
            let fast = prox_nuclear_psd(&z, lambda).unwrap();
            let slow = nuclear_prox_by_projected_gradient(&z, lambda);
            assert!((fast.as_matrix() - slow.as_matrix()).amax() <= 1e-6);
        }
    }

    #[test]
    fn psd_projection_examples() {
        let out = project_psd(&SymMatrix::from_diagonal(&[2.0, -1.0])).unwrap();
        assert_abs_diff_eq!(out.get(0, 0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.get(1, 1), 0.0, epsilon = 1e-14);
        let psd = SymMatrix::from_diagonal(&[2.0, 0.5]);
        assert_eq!(project_psd(&psd).unwrap(), psd);
    }

    #[test]
    fn psd_projection_beats_random_psd_matrices() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let z = random_sym(&mut rng, 3, 2.0);
        let proj = project_psd(&z).unwrap();
        let best = (proj.as_matrix() - z.as_matrix()).norm();
        for _ in 0..10_000 {
            let b = Matrix::from_fn(3, 3, |_, _| rng.random_range(-1.5..1.5));
            let cand = &b * b.transpose();
            assert!(best <= (cand - z.as_matrix()).norm() + 1e-12);
        }
    }

    #[test]
    fn logdet_prox_zero_spectrum() {
        let sigma = SymMatrix::from_diagonal(&[0.5, 2.0, 1.0]);
        let m = SymMatrix::new(sigma.as_matrix().clone()).unwrap();
        let out = prox_logdet(&m, 1.0, &sigma).unwrap();
        assert!((out.as_matrix() - Matrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn logdet_root_identity() {
        for &(s, mu) in &[(0.0, 1.0), (3.0, 0.5), (-7.0, 2.0), (-1e8, 1.0), (1e-3, 1e-6)] {
            let xi = logdet_root(s, mu);
            assert!(xi > 0.0);
            assert!((xi * xi - s * xi - mu).abs() <= 1e-10 * (1.0 + xi * xi + mu));
        }
    }

    #[test]
    fn logdet_prox_stationarity() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let b = Matrix::from_fn(8, 5, |_, _| rng.random_range(-1.0..1.0));
        let sigma = SymMatrix::new(b.transpose() * &b / 8.0).unwrap();
        let m = random_sym(&mut rng, 5, 2.0);
        let mu = 0.7;
        let theta = prox_logdet(&m, mu, &sigma).unwrap();
        let inv = theta.as_matrix().clone().try_inverse().unwrap();
        let resid = -inv + sigma.as_matrix() + (theta.as_matrix() - m.as_matrix()) / mu;
        assert!(resid.amax() <= 1e-8);
    }
}
