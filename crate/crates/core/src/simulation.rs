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

//! Synthetic designs with known sparse and block low-rank structure.
//!
//! Two families are supported. In the latent-community family the precision
//! matrix is `S* + L*` with `L* = A Aᵀ` block diagonal. In the
//! grouped-latent family the joint precision of observed and latent
//! variables is marginalized, giving `Θ = Θ_O − Θ_OH Θ_H⁻¹ Θ_OHᵀ`, i.e.
//! `S* − L*`.

use nalgebra::Cholesky;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Dataset, GroundTruth, LabelVector, Matrix, SignMode, SymMatrix};

/// Attempts at drawing a positive-definite truth before giving up.
pub const RETRY_BUDGET: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    LatentCommunity,
    GroupedLatent,
}

/// How loading directions `u` are drawn. Every direction is scaled to unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum LoadingDist {
    /// Orthonormal directions per block from the QR factor of a Gaussian matrix.
    UnitOrthogonal,
    /// Entries i.i.d. `Uniform(low, high)`.
    Uniform { low: f64, high: f64 },
    /// Entries i.i.d. `Normal(means[block], sd)`.
    Normal { means: Vec<f64>, sd: f64 },
}

/// Lag edges `s_{i,i+lag}` for `i` in `start..end` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub start: usize,
    pub end: usize,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub family: Family,
    pub n: usize,
    pub q: usize,
    pub block_sizes: Vec<usize>,
    /// Factor strengths per block, one per latent direction.
    pub strengths: Vec<Vec<f64>>,
    pub loadings: LoadingDist,
    /// Probability of a sparse edge between two nodes of different blocks.
    pub edge_prob: f64,
    /// Magnitude range of sparse edges; signs are symmetric.
    pub edge_range: (f64, f64),
    pub chain: Option<ChainSpec>,
    /// Diagonal of `S*` (or `Θ_O`).
    pub sparse_diag: f64,
    /// Diagonal of `Θ_H` for the grouped-latent family.
    pub latent_diag: f64,
    /// Range of the regression coefficients `B_ij`.
    pub coef_range: (f64, f64),
    pub seed: u64,
}

impl SimSpec {
    /// Two communities on 25 + 20 nodes with ranks 2 and 1.
    pub fn latent_community(n: usize) -> Self {
        Self {
            family: Family::LatentCommunity,
            n,
            q: 2,
            block_sizes: vec![25, 20],
            strengths: vec![vec![3.0, 2.5], vec![2.0]],
            loadings: LoadingDist::UnitOrthogonal,
            edge_prob: 0.01,
            edge_range: (1.5, 2.0),
            chain: Some(ChainSpec {
                start: 25,
                end: 35,
                lag: 2,
            }),
            sparse_diag: 5.0,
            latent_diag: 3.0,
            coef_range: (0.5, 1.0),
            seed: 0,
        }
    }

    /// Three groups of 15 nodes, one latent variable each, with positive
    /// `Uniform(1, 2)` loading directions.
    pub fn grouped_latent(n: usize) -> Self {
        Self {
            family: Family::GroupedLatent,
            n,
            q: 2,
            block_sizes: vec![15, 15, 15],
            strengths: vec![vec![3.5], vec![3.0], vec![2.5]],
            loadings: LoadingDist::Uniform { low: 1.0, high: 2.0 },
            edge_prob: 0.0,
            edge_range: (1.5, 2.0),
            // lag-2 edges inside the first group; i + 2 must stay in the group
            chain: Some(ChainSpec {
                start: 0,
                end: 13,
                lag: 2,
            }),
            sparse_diag: 5.0,
            latent_diag: 3.0,
            coef_range: (0.5, 1.0),
            seed: 0,
        }
    }

    /// Clustering scenario with strengths `(a, a − 0.1, a − 0.2)` and
    /// positive `Uniform(1, 2)` loadings.
    pub fn clustering_uniform(a: f64, n: usize) -> Self {
        Self {
            strengths: vec![vec![a], vec![a - 0.1], vec![a - 0.2]],
            loadings: LoadingDist::Uniform { low: 1.0, high: 2.0 },
            ..Self::grouped_latent(n)
        }
    }

    /// Clustering scenario with strengths `(3.6, 3.3, 3.0)` and
    /// `Normal(1, 1)`, `Normal(2, 1)`, `Normal(−1, 1)` loadings.
    pub fn clustering_normal(n: usize) -> Self {
        Self {
            strengths: vec![vec![3.6], vec![3.3], vec![3.0]],
            loadings: LoadingDist::Normal {
                means: vec![1.0, 2.0, -1.0],
                sd: 1.0,
            },
            ..Self::grouped_latent(n)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn p(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn rank(&self) -> usize {
        self.strengths.iter().map(Vec::len).sum()
    }

    pub fn sign_mode(&self) -> SignMode {
        match self.family {
            Family::LatentCommunity => SignMode::Plus,
            Family::GroupedLatent => SignMode::Minus,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.block_sizes.is_empty() || self.block_sizes.contains(&0) {
            return bad("block sizes must be nonempty and positive".into());
        }
        if self.strengths.len() != self.block_sizes.len() {
            return bad(format!(
                "{} strength lists for {} blocks",
                self.strengths.len(),
                self.block_sizes.len()
            ));
        }
        for (k, (st, &d)) in self.strengths.iter().zip(&self.block_sizes).enumerate() {
            if st.is_empty() || st.len() > d {
                return bad(format!("block {k} needs between 1 and {d} latent directions"));
            }
            if st.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return bad(format!("block {k} strengths must be positive"));
            }
        }
        if self.q == 0 || self.n <= self.q {
            return bad(format!("need n > q > 0, got n = {} and q = {}", self.n, self.q));
        }
        if !(0.0..=1.0).contains(&self.edge_prob) {
            return bad("edge_prob must lie in [0, 1]".into());
        }
        if !(self.edge_range.0 > 0.0 && self.edge_range.0 <= self.edge_range.1) {
            return bad("edge_range must satisfy 0 < low <= high".into());
        }
        if !(self.coef_range.0 <= self.coef_range.1) {
            return bad("coef_range must satisfy low <= high".into());
        }
        if !(self.sparse_diag > 0.0 && self.latent_diag > 0.0) {
            return bad("diagonals must be positive".into());
        }
        if let Some(c) = self.chain {
            if c.lag == 0 || c.start > c.end || c.end + c.lag > self.p() {
                return bad("chain indices out of range".into());
            }
        }
        match &self.loadings {
            LoadingDist::Uniform { low, high } if !(low < high) => bad("uniform loadings need low < high".into()),
            LoadingDist::Normal { means, sd } if means.len() != self.block_sizes.len() || !(*sd >= 0.0) => {
                bad("normal loadings need one mean per block and sd >= 0".into())
            }
            _ => Ok(()),
        }
    }
}

fn block_offsets(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .scan(0, |acc, &d| {
            let start = *acc;
            *acc += d;
            Some(start)
        })
        .collect()
}

fn signed_magnitude(rng: &mut ChaCha20Rng, range: (f64, f64)) -> f64 {
    let mag = if range.0 < range.1 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    };
    if rng.random_bool(0.5) {
        mag
    } else {
        -mag
    }
}

/// Unit loading directions for block `k` (columns of a d×count matrix).
fn draw_directions(rng: &mut ChaCha20Rng, dist: &LoadingDist, k: usize, d: usize, count: usize) -> Matrix {
    let mut u = match dist {
        LoadingDist::UnitOrthogonal => {
            let g = Matrix::from_fn(d, count, |_, _| StandardNormal.sample(rng));
            g.qr().q()
        }
        LoadingDist::Uniform { low, high } => {
            let uni = Uniform::new(*low, *high).expect("validated range");
            Matrix::from_fn(d, count, |_, _| uni.sample(rng))
        }
        LoadingDist::Normal { means, sd } => {
            let nd = Normal::new(means[k], *sd).expect("validated sd");
            Matrix::from_fn(d, count, |_, _| nd.sample(rng))
        }
    };
    for mut col in u.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    u
}

struct Truth {
    s: Matrix,
    l: Matrix,
}

fn draw_truth(spec: &SimSpec, rng: &mut ChaCha20Rng) -> Truth {
    let p = spec.p();
    let offsets = block_offsets(&spec.block_sizes);
    let mut block_of = vec![0; p];
    for (k, (&o, &d)) in offsets.iter().zip(&spec.block_sizes).enumerate() {
        block_of[o..o + d].fill(k);
    }

    let mut l = Matrix::zeros(p, p);
    for (k, (&o, &d)) in offsets.iter().zip(&spec.block_sizes).enumerate() {
        let strengths = &spec.strengths[k];
        let u = draw_directions(rng, &spec.loadings, k, d, strengths.len());
        let scale = match spec.family {
            Family::LatentCommunity => 1.0,
            Family::GroupedLatent => 1.0 / spec.latent_diag,
        };
        for (j, &c) in strengths.iter().enumerate() {
            let v = u.column(j) * c;
            let outer = &v * v.transpose() * scale;
            let mut view = l.view_mut((o, o), (d, d));
            view += outer;
        }
    }

    let mut s = Matrix::identity(p, p) * spec.sparse_diag;
    if spec.edge_prob > 0.0 {
        for i in 0..p {
            for j in (i + 1)..p {
                if block_of[i] != block_of[j] && rng.random_bool(spec.edge_prob) {
                    let v = signed_magnitude(rng, spec.edge_range);
                    s[(i, j)] = v;
                    s[(j, i)] = v;
                }
            }
        }
    }
    if let Some(c) = spec.chain {
        for i in c.start..c.end {
            let v = signed_magnitude(rng, spec.edge_range);
            s[(i, i + c.lag)] = v;
            s[(i + c.lag, i)] = v;
        }
    }
    Truth { s, l }
}

/// Draws a truth and `n` observations. Regenerates the truth (continuing the
/// same random stream) until `Θ*` is positive definite.
pub fn generate(spec: &SimSpec) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let sign_mode = spec.sign_mode();
    let p = spec.p();

    let mut found = None;
    for _ in 0..RETRY_BUDGET {
        let t = draw_truth(spec, &mut rng);
        let theta = SymMatrix::symmetrize(&t.s + &t.l * sign_mode.sign());
        if theta.min_eigenvalue() > 0.0 {
            found = Some((t, theta));
            break;
        }
    }
    let (truth, theta) = found.ok_or(Error::InfeasibleTruth(RETRY_BUDGET))?;

    let coef = if spec.coef_range.0 < spec.coef_range.1 {
        Uniform::new(spec.coef_range.0, spec.coef_range.1).expect("validated range")
    } else {
        Uniform::new_inclusive(spec.coef_range.0, spec.coef_range.1).expect("validated range")
    };
    let b = Matrix::from_fn(spec.q, p, |_, _| coef.sample(&mut rng));
    let c = Matrix::from_fn(spec.n, spec.q, |_, _| StandardNormal.sample(&mut rng));

    let cov = Cholesky::new(theta.as_matrix().clone())
        .ok_or(Error::InfeasibleTruth(RETRY_BUDGET))?
        .inverse();
    let factor = Cholesky::new(SymMatrix::symmetrize(cov).into_matrix())
        .ok_or(Error::InfeasibleTruth(RETRY_BUDGET))?
        .l();
    let z = Matrix::from_fn(spec.n, p, |_, _| StandardNormal.sample(&mut rng));
    let residuals = z * factor.transpose();
    let x = &c * &b + residuals;

    let data = Dataset::new(x, c)?;
    let truth = GroundTruth {
        s_star: SymMatrix::symmetrize(truth.s),
        l_star: SymMatrix::symmetrize(truth.l),
        b_star: b,
        labels_star: LabelVector::from_block_sizes(&spec.block_sizes),
        rank_star: spec.rank(),
        block_sizes: spec.block_sizes.clone(),
        sign_mode,
    };
    Ok((data, truth))
}
