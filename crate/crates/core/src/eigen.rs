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


//! Symmetric eigendecomposition with a Jacobi fallback.
//!
//! nalgebra's implicit QR can return NaN on finite input whose tridiagonal
//! form has off-diagonal entries decaying into the subnormal range, which
//! happens for soft-thresholded matrices with many empty rows.

use nalgebra::{DVector, SymmetricEigen};

use crate::types::Matrix;

const QR_EPS: f64 = 1e-15;
const QR_MAX_ITER: usize = 10_000;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Unsorted eigenvalues and eigenvectors (as columns) of a symmetric matrix.
pub(crate) fn sym_eigen(m: &Matrix) -> Option<(DVector<f64>, Matrix)> {
    if let Some(e) = SymmetricEigen::try_new(m.clone(), QR_EPS, QR_MAX_ITER) {
        if e.eigenvalues.iter().chain(e.eigenvectors.iter()).all(|v| v.is_finite()) {
            return Some((e.eigenvalues, e.eigenvectors));
        }
    }
    jacobi(m)
}

/// Cyclic Jacobi rotations until the off-diagonal mass is at rounding level.
pub(crate) fn jacobi(m: &Matrix) -> Option<(DVector<f64>, Matrix)> {
    let n = m.nrows();
    if m.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut a = m.clone();
    let mut v = Matrix::identity(n, n);
    let target = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum();
        if off <= target {
            return Some((a.diagonal(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * x - s * y;
                    a[(k, q)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * x - s * y;
                    a[(q, k)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * x - s * y;
                    v[(k, q)] = s * x + c * y;
                }
            }
        }
    }
    None
}
