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

//! Shared domain types.
//!
//! Symbols used throughout the crate map onto these fields:
//! observations `X` and covariates `C` live in [`Dataset`], the sparse part
//! `S`, the community part `L` and the precision matrix `Θ` live in
//! [`Decomposition`], the penalty triple `(γ, δ, τ)` together with the ADMM
//! settings lives in [`TuningParams`], and the adaptive weights `w_ij` live
//! in [`WeightMatrix`].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::sym_eigen;
use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Relative tolerance for the PSD check on `L`.
pub const PSD_REL_TOL: f64 = 1e-8;

fn all_finite(m: &Matrix) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Observations `X` (n×p) with row-aligned covariates `C` (n×q).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    c: Matrix,
}

impl Dataset {
    pub fn new(x: Matrix, c: Matrix) -> Result<Self> {
        if x.nrows() != c.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but C has {}",
                x.nrows(),
                c.nrows()
            )));
        }
        if x.nrows() == 0 || x.ncols() == 0 || c.ncols() == 0 {
            return Err(Error::EmptyInput("dataset needs n, p, q > 0".into()));
        }
        if x.nrows() <= c.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "need n > q, got n = {} and q = {}",
                x.nrows(),
                c.ncols()
            )));
        }
        if !all_finite(&x) || !all_finite(&c) {
            return Err(Error::NonFinite);
        }
        Ok(Self { x, c })
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn q(&self) -> usize {
        self.c.ncols()
    }
}

/// Dense symmetric matrix. The stored matrix is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Matrix);

impl SymMatrix {
    /// Symmetrizes `m` as `(m + mᵀ)/2`.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self::symmetrize(m))
    }

    pub(crate) fn symmetrize(mut m: Matrix) -> Self {
        let p = m.nrows();
        for i in 0..p {
            for j in (i + 1)..p {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix(Matrix::identity(p, p))
    }

    pub fn zeros(p: usize) -> Self {
        SymMatrix(Matrix::zeros(p, p))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        SymMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Eigenvalues in ascending order; all NaN if no method converges.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = match sym_eigen(&self.0) {
            Some((vals, _)) => vals.iter().copied().collect(),
            None => vec![f64::NAN; self.dim()],
        };
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// `λ_min ≥ −rel_tol·max(λ_max, 0)`.
    pub fn is_psd(&self, rel_tol: f64) -> bool {
        let ev = self.eigenvalues();
        match (ev.first(), ev.last()) {
            (Some(lo), Some(hi)) => *lo >= -rel_tol * hi.max(0.0),
            _ => true,
        }
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    /// Simultaneous row/column permutation: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = self.dim();
        SymMatrix(Matrix::from_fn(p, p, |i, j| self.0[(perm[i], perm[j])]))
    }

    pub fn is_exactly_symmetric(&self) -> bool {
        let p = self.dim();
        (0..p).all(|i| (0..i).all(|j| self.0[(i, j)] == self.0[(j, i)]))
    }
}

impl From<SymMatrix> for Matrix {
    fn from(s: SymMatrix) -> Self {
        s.0
    }
}

/// Whether the precision matrix is `S + L` or `S − L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignMode {
    #[default]
    Plus,
    Minus,
}

impl SignMode {
    pub fn sign(self) -> f64 {
        match self {
            SignMode::Plus => 1.0,
            SignMode::Minus => -1.0,
        }
    }
}

/// Sparse part `S`, PSD community part `L` and `Θ = S ± L`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub s: SymMatrix,
    pub l: SymMatrix,
    pub theta: SymMatrix,
    pub sign_mode: SignMode,
}

impl Decomposition {
    /// Builds the decomposition, forming `theta` from `s` and `l`.
    pub fn new(s: SymMatrix, l: SymMatrix, sign_mode: SignMode) -> Result<Self> {
        if s.dim() != l.dim() {
            return Err(Error::DimensionMismatch(format!(
                "S is {0}x{0} but L is {1}x{1}",
                s.dim(),
                l.dim()
            )));
        }
        let theta = Self::combine(&s, &l, sign_mode);
        Ok(Self { s, l, theta, sign_mode })
    }

    pub(crate) fn combine(s: &SymMatrix, l: &SymMatrix, sign_mode: SignMode) -> SymMatrix {
        let m = match sign_mode {
            SignMode::Plus => s.as_matrix() + l.as_matrix(),
            SignMode::Minus => s.as_matrix() - l.as_matrix(),
        };
        SymMatrix(m)
    }

    pub fn dim(&self) -> usize {
        self.s.dim()
    }

    /// Checks `L ⪰ 0` (relative tolerance) and `Θ ≻ 0`.
    pub fn validate(&self) -> Result<()> {
        if !self.l.is_psd(PSD_REL_TOL) {
            return Err(Error::InvalidParameter("L is not positive semidefinite".into()));
        }
        if !self.theta.is_positive_definite() {
            return Err(Error::InvalidParameter("theta is not positive definite".into()));
        }
        Ok(())
    }

    pub fn theta_is_consistent(&self) -> bool {
        Self::combine(&self.s, &self.l, self.sign_mode) == self.theta
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            s: self.s.permuted(perm),
            l: self.l.permuted(perm),
            theta: self.theta.permuted(perm),
            sign_mode: self.sign_mode,
        }
    }
}

/// Penalty triple `(γ, δ, τ)` plus ADMM settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuningParams {
    /// Off-diagonal ℓ1 weight on `S`.
    pub gamma: f64,
    /// Nuclear-norm weight on `L`.
    pub delta: f64,
    /// Weighted ℓ1 weight on `L`.
    pub tau: f64,
    pub mu: f64,
    /// Bound on both the relative change and the squared relative gap `‖Y1 − Y2‖² / ‖Y1‖²`.
    pub eps: f64,
    pub max_iter: usize,
}

impl Default for TuningParams {
    fn default() -> Self {
        Self {
            gamma: 0.0,
            delta: 0.0,
            tau: 0.0,
            mu: 1.0,
            eps: 1e-8,
            max_iter: 10_000,
        }
    }
}

impl TuningParams {
    pub fn penalties(gamma: f64, delta: f64, tau: f64) -> Self {
        Self {
            gamma,
            delta,
            tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma", self.gamma), ("delta", self.delta), ("tau", self.tau)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be a finite nonnegative number, got {v}")));
            }
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Per-entry weights `w_ij` for the ℓ1 penalty on `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    w: Matrix,
    cap: f64,
}

impl WeightMatrix {
    pub const DEFAULT_CAP: f64 = 1e6;

    pub fn new(w: Matrix, cap: f64) -> Result<Self> {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(Error::InvalidParameter(format!("weight cap must be positive, got {cap}")));
        }
        if !w.is_square() {
            return Err(Error::DimensionMismatch("weight matrix must be square".into()));
        }
        if w.iter().any(|&v| !(v > 0.0 && v <= cap)) {
            return Err(Error::InvalidParameter(format!("weights must lie in (0, {cap}]")));
        }
        let p = w.nrows();
        if (0..p).any(|i| (0..i).any(|j| w[(i, j)] != w[(j, i)])) {
            return Err(Error::InvalidParameter("weight matrix must be symmetric".into()));
        }
        Ok(Self { w, cap })
    }

    /// Uniform weights `1 1ᵀ`.
    pub fn ones(p: usize) -> Self {
        Self {
            w: Matrix::from_element(p, p, 1.0),
            cap: Self::DEFAULT_CAP,
        }
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.w
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = self.dim();
        Self {
            w: Matrix::from_fn(p, p, |i, j| self.w[(perm[i], perm[j])]),
            cap: self.cap,
        }
    }
}

/// Community labels for the retained nodes.
///
/// `labels[k]` is the community (1-based) of original node `index_map[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    pub labels: Vec<usize>,
    pub m: usize,
    pub index_map: Vec<usize>,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, m: usize) -> Result<Self> {
        let index_map = (0..labels.len()).collect();
        Self::with_index_map(labels, m, index_map)
    }

    pub fn with_index_map(labels: Vec<usize>, m: usize, index_map: Vec<usize>) -> Result<Self> {
        if labels.len() != index_map.len() {
            return Err(Error::LengthMismatch(labels.len(), index_map.len()));
        }
        if m == 0 || m > labels.len().max(1) {
            return Err(Error::InvalidParameter(format!(
                "number of communities {m} invalid for {} nodes",
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l == 0 || l > m) {
            return Err(Error::InvalidParameter(format!("label {bad} outside 1..={m}")));
        }
        Ok(Self { labels, m, index_map })
    }

    /// Labels from consecutive block sizes: the first `d_1` nodes get 1, and so on.
    pub fn from_block_sizes(block_sizes: &[usize]) -> Self {
        let labels: Vec<usize> = block_sizes
            .iter()
            .enumerate()
            .flat_map(|(k, &d)| std::iter::repeat_n(k + 1, d))
            .collect();
        let index_map = (0..labels.len()).collect();
        Self {
            labels,
            m: block_sizes.len(),
            index_map,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels over `p` original nodes, with 0 for excised nodes.
    pub fn to_full(&self, p: usize) -> Vec<usize> {
        let mut out = vec![0; p];
        for (&node, &label) in self.index_map.iter().zip(&self.labels) {
            out[node] = label;
        }
        out
    }

    /// Keeps only the entries whose original node appears in `nodes`, in that order.
    pub fn restrict(&self, nodes: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(nodes.len());
        for node in nodes {
            let k = self
                .index_map
                .iter()
                .position(|i| i == node)
                .ok_or_else(|| Error::InvalidParameter(format!("node {node} has no label")))?;
            labels.push(self.labels[k]);
        }
        Ok(Self {
            labels,
            m: self.m,
            index_map: nodes.to_vec(),
        })
    }
}

/// Ground truth carried by the simulators.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub s_star: SymMatrix,
    pub l_star: SymMatrix,
    pub b_star: Matrix,
    pub labels_star: LabelVector,
    pub rank_star: usize,
    pub block_sizes: Vec<usize>,
    pub sign_mode: SignMode,
}

impl GroundTruth {
    pub fn theta_star(&self) -> SymMatrix {
        Decomposition::combine(&self.s_star, &self.l_star, self.sign_mode)
    }

    pub fn p(&self) -> usize {
        self.s_star.dim()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetrization_is_exact() {
        let m = Matrix::from_row_slice(3, 3, &[1.0, 0.1, 0.3, 0.7, 2.0, -1.0, 0.2, 0.5, 3.0]);
        let s = SymMatrix::new(m).unwrap();
        assert!(s.is_exactly_symmetric());
        assert_eq!(s.get(0, 1), 0.5 * (0.1 + 0.7));
    }

    #[test]
    fn theta_matches_parts() {
        let s = SymMatrix::from_diagonal(&[5.0, 5.0]);
        let l = SymMatrix::new(Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0])).unwrap();
        for mode in [SignMode::Plus, SignMode::Minus] {
            let d = Decomposition::new(s.clone(), l.clone(), mode).unwrap();
            assert!(d.theta_is_consistent());
            d.validate().unwrap();
        }
    }

    #[test]
    fn rejects_misaligned_dataset() {
        let x = Matrix::zeros(5, 3);
        let c = Matrix::zeros(4, 1);
        assert!(matches!(Dataset::new(x, c), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn weights_validate_range() {
        let w = Matrix::from_element(2, 2, 2.0);
        assert!(WeightMatrix::new(w.clone(), 1.0).is_err());
        assert!(WeightMatrix::new(w, 2.0).is_ok());
        let zero = Matrix::zeros(2, 2);
        assert!(WeightMatrix::new(zero, 1.0).is_err());
    }

    #[test]
    fn labels_from_blocks() {
        let l = LabelVector::from_block_sizes(&[2, 3]);
        assert_eq!(l.labels, vec![1, 1, 2, 2, 2]);
        assert_eq!(l.m, 2);
        assert!(LabelVector::new(vec![1, 3], 2).is_err());
    }
}
