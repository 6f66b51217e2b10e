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

//! Community recovery from an estimated low-rank part.

use itertools::Itertools;
use pathfinding::kuhn_munkres::kuhn_munkres;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LabelVector, Matrix, SymMatrix};

/// Relative zero-row tolerance used by [`cluster_pipeline`] when none is given.
pub const DEFAULT_ZERO_ROW_REL_TOL: f64 = 1e-6;

/// Largest label count for which [`hamming_error`] enumerates permutations.
pub const EXHAUSTIVE_MAX: usize = 8;

/// What K-means sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMode {
    /// Rows of `L̂`.
    #[default]
    Rows,
    /// Rows of `Cor(|L̂|)`.
    CorAbs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KmeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        Self {
            restarts: 20,
            max_iter: 300,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: LabelVector,
    /// One center per row.
    pub centers: Matrix,
    /// Within-cluster sum of squares.
    pub loss: f64,
    pub restarts_used: usize,
}

/// Removes nodes whose row has `‖·‖_∞ ≤ tol`, with the matching columns.
///
/// Returns the reduced matrix and the surviving original indices.
pub fn drop_zero_rows(l_hat: &SymMatrix, tol: f64) -> Result<(SymMatrix, Vec<usize>)> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be nonnegative, got {tol}")));
    }
    let m = l_hat.as_matrix();
    let keep: Vec<usize> = (0..m.nrows()).filter(|&i| m.row(i).amax() > tol).collect();
    if keep.is_empty() {
        return Err(Error::AllRowsZero(tol));
    }
    let reduced = Matrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]);
    Ok((SymMatrix::symmetrize(reduced), keep))
}

/// Pearson correlations between the absolute-value rows of `L̂`.
///
/// A row whose absolute values are constant correlates 0 with every other row.
pub fn cor_abs_transform(l_hat: &SymMatrix) -> Result<SymMatrix> {
    let a = l_hat.as_matrix().abs();
    let (p, d) = a.shape();
    if d < 2 {
        return Err(Error::InvalidParameter("need at least two columns".into()));
    }
    let centered: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let row: Vec<f64> = a.row(i).iter().copied().collect();
            let mean = row.iter().sum::<f64>() / d as f64;
            row.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).collect();
    let mut out = Matrix::identity(p, p);
    for i in 0..p {
        for j in i + 1..p {
            let c = if norms[i] > 0.0 && norms[j] > 0.0 {
                let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(x, y)| x * y).sum();
                (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0)
            } else {
                0.0
            };
            out[(i, j)] = c;
            out[(j, i)] = c;
        }
    }
    Ok(SymMatrix::symmetrize(out))
}

fn sq_dist(points: &Matrix, i: usize, centers: &Matrix, k: usize) -> f64 {
    points
        .row(i)
        .iter()
        .zip(centers.row(k).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn nearest(points: &Matrix, i: usize, centers: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for k in 0..centers.nrows() {
        let d = sq_dist(points, i, centers, k);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus_seed(points: &Matrix, m: usize, rng: &mut ChaCha20Rng) -> Matrix {
    let n = points.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points, i, points, chosen[0])).collect();
    while chosen.len() < m {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 {
                    if target < d {
                        pick = i;
                        break;
                    }
                    target -= d;
                    pick = i;
                }
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, points, next));
        }
    }
    Matrix::from_fn(m, points.ncols(), |k, j| points[(chosen[k], j)])
}

fn update_centers(points: &Matrix, assign: &[usize], m: usize) -> (Matrix, Vec<usize>) {
    let mut centers = Matrix::zeros(m, points.ncols());
    let mut counts = vec![0usize; m];
    for (i, &k) in assign.iter().enumerate() {
        counts[k] += 1;
        let mut row = centers.row_mut(k);
        row += points.row(i);
    }
    for (k, &c) in counts.iter().enumerate() {
        if c > 0 {
            let mut row = centers.row_mut(k);
            row /= c as f64;
        }
    }
    (centers, counts)
}

fn wcss(points: &Matrix, assign: &[usize], centers: &Matrix) -> f64 {
    assign.iter().enumerate().map(|(i, &k)| sq_dist(points, i, centers, k)).sum()
}

struct Run {
    assign: Vec<usize>,
    centers: Matrix,
    loss: f64,
    history: Vec<f64>,
}

fn lloyd(points: &Matrix, m: usize, max_iter: usize, rng: &mut ChaCha20Rng) -> Run {
    let n = points.nrows();
    let mut centers = plus_plus_seed(points, m, rng);
    let mut assign: Vec<usize> = (0..n).map(|i| nearest(points, i, &centers).0).collect();
    let mut history = Vec::new();
    for _ in 0..max_iter {
        let (mut c, mut counts) = update_centers(points, &assign, m);
        // repair empty clusters with the point farthest from its own center
        while let Some(empty) = counts.iter().position(|&c| c == 0) {
            let far = (0..n)
                .filter(|&i| counts[assign[i]] > 1)
                .map(|i| (i, sq_dist(points, i, &c, assign[i])))
                .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
                .0;
            assign[far] = empty;
            (c, counts) = update_centers(points, &assign, m);
        }
        centers = c;
        history.push(wcss(points, &assign, &centers));
        let next: Vec<usize> = (0..n).map(|i| nearest(points, i, &centers).0).collect();
        let stable = next == assign;
        // keep the incumbent label on ties so the loss cannot rise
        for i in 0..n {
            if sq_dist(points, i, &centers, next[i]) < sq_dist(points, i, &centers, assign[i]) {
                assign[i] = next[i];
            }
        }
        if stable {
            break;
        }
    }
    let (c, _) = update_centers(points, &assign, m);
    let loss = wcss(points, &assign, &c);
    history.push(loss);
    Run {
        assign,
        centers: c,
        loss,
        history,
    }
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Best-of-`restarts` Lloyd iterations with k-means++ seeding.
///
/// Labels are renumbered by first appearance, so equal partitions give equal output.
pub fn kmeans(points: &Matrix, m: usize, cfg: &KmeansConfig) -> Result<KmeansResult> {
    kmeans_with_history(points, m, cfg).map(|(r, _)| r)
}

/// As [`kmeans`], also returning the loss after each Lloyd step of the winning restart.
pub fn kmeans_with_history(points: &Matrix, m: usize, cfg: &KmeansConfig) -> Result<(KmeansResult, Vec<f64>)> {
    let n = points.nrows();
    if m == 0 || m > n {
        return Err(Error::InvalidK { k: m, n });
    }
    if cfg.restarts == 0 || cfg.max_iter == 0 {
        return Err(Error::InvalidParameter("restarts and max_iter must be positive".into()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let runs: Vec<Run> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| lloyd(points, m, cfg.max_iter, &mut restart_rng(cfg.seed, r)))
        .collect();
    let best = runs
        .into_iter()
        .reduce(|a, b| if b.loss < a.loss { b } else { a })
        .expect("at least one restart");

    let mut order = vec![usize::MAX; m];
    let mut next = 0;
    for &k in &best.assign {
        if order[k] == usize::MAX {
            order[k] = next;
            next += 1;
        }
    }
    let labels: Vec<usize> = best.assign.iter().map(|&k| order[k] + 1).collect();
    let mut centers = Matrix::zeros(m, points.ncols());
    for (k, &row) in order.iter().enumerate() {
        centers.set_row(row, &best.centers.row(k));
    }
    Ok((
        KmeansResult {
            labels: LabelVector::new(labels, m)?,
            centers,
            loss: best.loss,
            restarts_used: cfg.restarts,
        },
        best.history,
    ))
}

/// Confusion counts `c[a][b]` of estimated label `a` against true label `b`, padded square.
/// Label 0 (unassigned) never matches.
fn confusion(est: &[usize], truth: &[usize]) -> Vec<Vec<i64>> {
    let k = est.iter().chain(truth).copied().max().unwrap_or(0).max(1);
    let mut c = vec![vec![0i64; k]; k];
    for (&a, &b) in est.iter().zip(truth) {
        if a > 0 && b > 0 {
            c[a - 1][b - 1] += 1;
        }
    }
    c
}

/// Hamming error by enumerating every label permutation.
pub fn hamming_exhaustive(est: &[usize], truth: &[usize]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch(est.len(), truth.len()));
    }
    if est.is_empty() {
        return Ok(0.0);
    }
    let c = confusion(est, truth);
    let k = c.len();
    let best = (0..k)
        .permutations(k)
        .map(|perm| perm.iter().enumerate().map(|(a, &b)| c[a][b]).sum::<i64>())
        .max()
        .unwrap_or(0);
    Ok(1.0 - best as f64 / est.len() as f64)
}

/// Hamming error by optimal assignment on the confusion matrix.
pub fn hamming_assignment(est: &[usize], truth: &[usize]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch(est.len(), truth.len()));
    }
    if est.is_empty() {
        return Ok(0.0);
    }
    let c = confusion(est, truth);
    let weights = pathfinding::matrix::Matrix::from_rows(c).map_err(|e| Error::Parse(e.to_string()))?;
    let (best, _) = kuhn_munkres(&weights);
    Ok(1.0 - best as f64 / est.len() as f64)
}

/// Fraction of mis-clustered nodes under the best relabeling, position by position.
pub fn hamming_error(est: &LabelVector, truth: &LabelVector) -> Result<f64> {
    hamming_labels(&est.labels, &truth.labels)
}

fn hamming_labels(est: &[usize], truth: &[usize]) -> Result<f64> {
    let k = est.iter().chain(truth).copied().max().unwrap_or(0);
    if k <= EXHAUSTIVE_MAX {
        hamming_exhaustive(est, truth)
    } else {
        hamming_assignment(est, truth)
    }
}

/// Hamming error over the truth's nodes, matching by original node id.
/// Nodes missing from `est` (excised) count as mis-clustered.
pub fn hamming_error_by_node(est: &LabelVector, truth: &LabelVector) -> Result<f64> {
    let p = est
        .index_map
        .iter()
        .chain(&truth.index_map)
        .copied()
        .max()
        .map_or(0, |v| v + 1);
    let full = est.to_full(p);
    let aligned: Vec<usize> = truth.index_map.iter().map(|&i| full[i]).collect();
    hamming_labels(&aligned, &truth.labels)
}

/// Output of [`cluster_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterOutcome {
    /// Labels of retained nodes; `index_map` holds their original ids.
    pub labels: LabelVector,
    pub excised: Vec<usize>,
    pub zero_row_tol: f64,
    pub loss: f64,
}

/// Excises zero rows, optionally applies [`cor_abs_transform`], and runs [`kmeans`].
///
/// `tol = None` uses `1e-6 · max|L̂|`.
pub fn cluster_pipeline(
    l_hat: &SymMatrix,
    m: usize,
    mode: ClusterMode,
    tol: Option<f64>,
    cfg: &KmeansConfig,
) -> Result<ClusterOutcome> {
    let tol = tol.unwrap_or_else(|| DEFAULT_ZERO_ROW_REL_TOL * l_hat.as_matrix().amax());
    let (reduced, keep) = drop_zero_rows(l_hat, tol)?;
    let points = match mode {
        ClusterMode::Rows => reduced.into_matrix(),
        ClusterMode::CorAbs => cor_abs_transform(&reduced)?.into_matrix(),
    };
    let fit = kmeans(&points, m, cfg)?;
    let excised = (0..l_hat.dim()).filter(|i| keep.binary_search(i).is_err()).collect();
    Ok(ClusterOutcome {
        labels: LabelVector::with_index_map(fit.labels.labels, m, keep)?,
        excised,
        zero_row_tol: tol,
        loss: fit.loss,
    })
}

/// Writes `node_id,label` rows over all `p` nodes; excised nodes get label 0.
pub fn write_labels_csv<W: std::io::Write>(w: W, labels: &LabelVector, p: usize) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Parse(e.to_string());
    wtr.write_record(["node_id", "label"]).map_err(err)?;
    for (i, l) in labels.to_full(p).iter().enumerate() {
        wtr.write_record([i.to_string(), l.to_string()]).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::StandardNormal;

    fn cfg(seed: u64) -> KmeansConfig {
        KmeansConfig {
            seed,
            ..KmeansConfig::default()
        }
    }

    #[test]
    fn zero_rows() {
        let l = SymMatrix::new(Matrix::from_row_slice(3, 3, &[1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 2.0])).unwrap();
        let (r, map) = drop_zero_rows(&l, 0.0).unwrap();
        assert_eq!(map, vec![0, 2]);
        assert_eq!(r.as_matrix(), &Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]));
        let full = SymMatrix::identity(3);
        assert_eq!(drop_zero_rows(&full, 0.0).unwrap().1, vec![0, 1, 2]);
        let tiny = SymMatrix::from_diagonal(&[1.0, 1e-9]);
        assert_eq!(drop_zero_rows(&tiny, 1e-8).unwrap().1, vec![0]);
        assert!(matches!(drop_zero_rows(&SymMatrix::zeros(2), 0.0), Err(Error::AllRowsZero(_))));
    }

    #[test]
    fn cor_abs_examples() {
        // |row 1| = 2 |row 0|
        let l = SymMatrix::new(Matrix::from_row_slice(
            3,
            3,
            &[1.0, -2.0, 3.0, -2.0, 4.0, 6.0, 3.0, 6.0, 3.0],
        ))
        .unwrap();
        let c = cor_abs_transform(&l).unwrap();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert_eq!(c.get(i, i), 1.0);
        }

        let flat = SymMatrix::new(Matrix::from_row_slice(3, 3, &[2.0, -2.0, 2.0, -2.0, 1.0, 5.0, 2.0, 5.0, 9.0])).unwrap();
        let c = cor_abs_transform(&flat).unwrap();
        assert_eq!(c.get(0, 1), 0.0);
        assert_eq!(c.get(0, 2), 0.0);
    }

    #[test]
    fn cor_abs_is_scale_invariant_per_row() {
        let v = [1.0, 2.0, 3.0, 0.5];
        let m = Matrix::from_fn(4, 4, |i, j| v[i] * v[j]);
        let c = cor_abs_transform(&SymMatrix::new(m).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!((c.get(i, j) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cor_abs_matches_two_pass_formula() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let g = Matrix::from_fn(4, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let l = SymMatrix::new(&g + g.transpose()).unwrap();
        let c = cor_abs_transform(&l).unwrap();
        let a = l.as_matrix().abs();
        for i in 0..4 {
            for j in 0..4 {
                let (xi, xj) = (a.row(i), a.row(j));
                let mi = xi.mean();
                let mj = xj.mean();
                let mut sxy = 0.0;
                let mut sxx = 0.0;
                let mut syy = 0.0;
                for k in 0..4 {
                    sxy += (xi[k] - mi) * (xj[k] - mj);
                    sxx += (xi[k] - mi).powi(2);
                    syy += (xj[k] - mj).powi(2);
                }
                let expect = if i == j { 1.0 } else { sxy / (sxx * syy).sqrt() };
                assert!((c.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn separated_points() {
        let pts = Matrix::from_column_slice(4, 1, &[0.0, 10.0, 0.1, 10.1]);
        let r = kmeans(&pts, 2, &cfg(1)).unwrap();
        assert_eq!(r.labels.labels, vec![1, 2, 1, 2]);
        assert!((r.loss - 0.01).abs() < 1e-12);
    }

    #[test]
    fn k_equals_n() {
        let pts = Matrix::from_column_slice(3, 2, &[0.0, 1.0, 5.0, 2.0, 2.0, 7.0]);
        let r = kmeans(&pts, 3, &cfg(2)).unwrap();
        assert_eq!(r.loss, 0.0);
        assert_eq!(r.labels.labels, vec![1, 2, 3]);
        assert!(matches!(kmeans(&pts, 4, &cfg(2)), Err(Error::InvalidK { k: 4, n: 3 })));
    }

    #[test]
    fn kmeans_is_deterministic_and_loss_is_consistent() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let pts = Matrix::from_fn(60, 3, |i, _| (i % 3) as f64 * 2.0 + rng.sample::<f64, _>(StandardNormal));
        let a = kmeans(&pts, 3, &cfg(5)).unwrap();
        let b = kmeans(&pts, 3, &cfg(5)).unwrap();
        assert_eq!(a, b);
        let recomputed: f64 = (0..60)
            .map(|i| {
                let k = a.labels.labels[i] - 1;
                (pts.row(i) - a.centers.row(k)).norm_squared()
            })
            .sum();
        assert!((recomputed - a.loss).abs() < 1e-10);
        let (_, hist) = kmeans_with_history(&pts, 3, &cfg(5)).unwrap();
        assert!(hist.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn hamming_examples() {
        let t = LabelVector::new(vec![1, 1, 2, 2], 2).unwrap();
        assert_eq!(hamming_error(&t, &t).unwrap(), 0.0);
        let swapped = LabelVector::new(vec![2, 2, 1, 1], 2).unwrap();
        assert_eq!(hamming_error(&swapped, &t).unwrap(), 0.0);
        let one_off = LabelVector::new(vec![1, 2, 2, 2], 2).unwrap();
        assert_eq!(hamming_error(&one_off, &t).unwrap(), 0.25);
        let short = LabelVector::new(vec![1, 2], 2).unwrap();
        assert!(matches!(hamming_error(&short, &t), Err(Error::LengthMismatch(2, 4))));
    }

    #[test]
    fn exhaustive_and_assignment_agree() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for _ in 0..50 {
            let m = rng.random_range(1..=6);
            let n = rng.random_range(1..30);
            let a: Vec<usize> = (0..n).map(|_| rng.random_range(1..=m)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.random_range(1..=m)).collect();
            let x = hamming_exhaustive(&a, &b).unwrap();
            let y = hamming_assignment(&a, &b).unwrap();
            assert_eq!(x, y);
            assert_eq!(x, hamming_exhaustive(&b, &a).unwrap());
        }
    }

    #[test]
    fn excised_nodes_count_as_errors() {
        let truth = LabelVector::from_block_sizes(&[2, 2]);
        let est = LabelVector::with_index_map(vec![1, 2, 2], 2, vec![0, 2, 3]).unwrap();
        assert_eq!(hamming_error_by_node(&est, &truth).unwrap(), 0.25);
    }

    fn block_l(scales: &[(usize, f64)]) -> SymMatrix {
        let p: usize = scales.iter().map(|s| s.0).sum();
        let mut m = Matrix::zeros(p, p);
        let mut start = 0;
        for &(d, c) in scales {
            for i in start..start + d {
                for j in start..start + d {
                    m[(i, j)] = c;
                }
            }
            start += d;
        }
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn pipeline_recovers_blocks() {
        let l = block_l(&[(5, 1.0), (4, 2.0), (6, 0.5)]);
        let truth = LabelVector::from_block_sizes(&[5, 4, 6]);
        for mode in [ClusterMode::Rows, ClusterMode::CorAbs] {
            let out = cluster_pipeline(&l, 3, mode, None, &cfg(0)).unwrap();
            assert_eq!(hamming_error_by_node(&out.labels, &truth).unwrap(), 0.0);
            assert!(out.excised.is_empty());
        }
    }

    #[test]
    fn pipeline_rank_one_blocks_cor_abs() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let sizes = [6, 5, 7];
        let p: usize = sizes.iter().sum();
        let mut m = Matrix::zeros(p, p);
        let mut start = 0;
        for &d in &sizes {
            let u: Vec<f64> = (0..d).map(|_| rng.random_range(1.0..2.0)).collect();
            for i in 0..d {
                for j in 0..d {
                    m[(start + i, start + j)] = u[i] * u[j];
                }
            }
            start += d;
        }
        let l = SymMatrix::new(m).unwrap();
        let truth = LabelVector::from_block_sizes(&sizes);
        let out = cluster_pipeline(&l, 3, ClusterMode::CorAbs, None, &cfg(1)).unwrap();
        assert_eq!(hamming_error_by_node(&out.labels, &truth).unwrap(), 0.0);
        let scaled = SymMatrix::new(l.as_matrix() * 7.5).unwrap();
        let again = cluster_pipeline(&scaled, 3, ClusterMode::CorAbs, None, &cfg(1)).unwrap();
        assert_eq!(again.labels, out.labels);
    }

    #[test]
    fn pipeline_marks_excised_nodes() {
        let mut l = block_l(&[(3, 1.0), (3, 2.0)]).into_matrix();
        for k in 0..6 {
            l[(2, k)] = 0.0;
            l[(k, 2)] = 0.0;
        }
        let out = cluster_pipeline(&SymMatrix::new(l).unwrap(), 2, ClusterMode::Rows, None, &cfg(0)).unwrap();
        assert_eq!(out.excised, vec![2]);
        assert_eq!(out.labels.to_full(6)[2], 0);
        let mut buf = Vec::new();
        write_labels_csv(&mut buf, &out.labels, 6).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("node_id,label\n0,1\n1,1\n2,0\n"));
    }
}
