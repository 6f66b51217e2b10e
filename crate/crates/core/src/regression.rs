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

//! Least-squares removal of covariate effects.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::error::{Error, Result};
use crate::types::{Dataset, Matrix, SymMatrix};

/// Largest admissible condition number of `CᵀC`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    /// Coefficients, q×p.
    pub b_hat: Matrix,
    /// Residuals `(I − C(CᵀC)⁻¹Cᵀ)X`, n×p.
    pub residuals: Matrix,
    pub sigma_hat: SymMatrix,
}

/// Ordinary least squares of every column of `X` on `C`.
pub fn fit_ols(data: &Dataset) -> Result<RegressionFit> {
    let c = data.c();
    let x = data.x();
    let gram = c.transpose() * c;
    let ev = SymmetricEigen::new(gram.clone()).eigenvalues;
    let lo = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= MAX_CONDITION) {
        return Err(Error::SingularDesign(cond));
    }
    let chol = Cholesky::new(gram).ok_or(Error::SingularDesign(cond))?;
    let b_hat = chol.solve(&(c.transpose() * x));
    let residuals = x - c * &b_hat;
    let sigma_hat = empirical_covariance(&residuals)?;
    Ok(RegressionFit {
        b_hat,
        residuals,
        sigma_hat,
    })
}

/// `RᵀR / n` (divisor n, not n − 1).
pub fn empirical_covariance(residuals: &Matrix) -> Result<SymMatrix> {
    let n = residuals.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("covariance of zero rows".into()));
    }
    let mut s = residuals.tr_mul(residuals);
    s /= n as f64;
    SymMatrix::new(s)
}
