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


//! Acceptance suite. Every test writes one `PASS`/`FAIL` line to stderr.
//!
//! The recovery and clustering runs replicate each design 20 times with a
//! cross-validated penalty grid of at most 27 points; they take a while.

use std::fs;
use std::io::Write;
use std::process::Command;

use blockggm::admm::{
    admm_step, consensus_project, neg_log_likelihood, neg_log_likelihood_gradient, solve, AdmmState, Blocks,
};
use blockggm::clustering::{hamming_assignment, hamming_error, hamming_exhaustive};
use blockggm::metrics::{score, ScoreTolerances};
use blockggm::oracle::{consensus_kkt_solve, reference_solve};
use blockggm::pipeline::Method;
use blockggm::prox::{project_psd, prox_logdet, prox_nuclear_psd, soft_threshold, weighted_soft_threshold};
use blockggm::{Decomposition, GroundTruth, LabelVector, Matrix, SignMode, SymMatrix, TuningParams, WeightMatrix};
use blockggm_cli::config::parse;
use blockggm_cli::experiment::{execute, ExperimentConfig, ExperimentOutput};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use tempfile::TempDir;

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[{id:>2}] {verdict} {name}: {detail}\n");
    // bypasses libtest output capture so the line lands in the log
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "{}", line.trim_end());
}

fn run(toml: &str) -> ExperimentOutput {
    let cfg: ExperimentConfig = parse(toml).unwrap();
    let out = execute(&cfg).unwrap();
    out.check_failures(0.0).unwrap();
    out
}

fn mean(out: &ExperimentOutput, setting: &str, metric: &str, method: Method) -> f64 {
    out.get(setting, metric, method).unwrap().mean
}

const SOLVER: &str = "
[pipeline.solver]
mu = 1.5
eps = 1e-16
max_iter = 20000
";

#[test]
fn grouped_latent_recovery() {
    let out = run(&format!(
        r#"
seed = 2026
replications = 20
methods = ["proposed"]
out_dir = "unused"
[sim]
preset = "grouped_latent"
n = 4000
[pipeline]
pilot = {{ kind = "fixed", gamma = 0.02, delta = 0.08 }}
weight_exponent = 1.5
[pipeline.grid]
gamma_values = [0.02, 0.025]
delta_values = [0.105, 0.11]
tau_values = [1e-5, 1.4e-5]
folds = 5
{SOLVER}"#
    ));
    let s = &out.settings[0];
    let m = |k| mean(&out, s, k, Method::Proposed);
    let (tr, tp, fp, tps, fps) = (m("TR_L"), m("TP_L"), m("FP_L"), m("TP_S"), m("FP_S"));
    let pass = tr >= 0.85 && tp >= 0.90 && fp <= 0.15 && tps >= 0.99 && fps <= 0.01;
    report(
        1,
        "grouped-latent recovery, n = 4000",
        pass,
        &format!("TR_L {tr:.3} TP_L {tp:.3} FP_L {fp:.3} TP_S {tps:.3} FP_S {fps:.3}"),
    );
}

fn latent_community() -> &'static ExperimentOutput {
    static OUT: std::sync::OnceLock<ExperimentOutput> = std::sync::OnceLock::new();
    OUT.get_or_init(|| {
        run(&format!(
            r#"
seed = 2026
replications = 20
methods = ["lvggm", "proposed"]
out_dir = "unused"
[sim]
preset = "latent_community"
n = 2000
[pipeline]
pilot = {{ kind = "fixed", gamma = 0.02, delta = 0.06 }}
weight_exponent = 0.5
[pipeline.grid]
gamma_values = [0.025, 0.03]
delta_values = [0.06, 0.07]
tau_values = [5e-4, 6e-4]
folds = 5
{SOLVER}"#
        ))
    })
}

#[test]
fn latent_community_recovery() {
    let out = latent_community();
    let s = &out.settings[0];
    let m = |k| mean(out, s, k, Method::Proposed);
    let (tr, fp, fps) = (m("TR_L"), m("FP_L"), m("FP_S"));
    report(
        2,
        "latent-community recovery, n = 2000",
        tr >= 0.9 && fp <= 0.10 && fps <= 0.05,
        &format!("TR_L {tr:.3} FP_L {fp:.3} FP_S {fps:.3}"),
    );
}

#[test]
fn lvggm_misses_block_structure() {
    let out = latent_community();
    let s = &out.settings[0];
    let lv = mean(out, s, "FP_L", Method::Lvggm);
    let pr = mean(out, s, "FP_L", Method::Proposed);
    report(
        3,
        "LVGGM contrast on the latent-community runs",
        lv >= 0.9 && pr <= 0.10,
        &format!("FP_L LVGGM {lv:.3} proposed {pr:.3}"),
    );
}

const CLUSTER_PIPELINE: &str = r#"
[pipeline]
pilot = { kind = "fixed", gamma = 0.03, delta = 0.12 }
weight_exponent = 0.5
[pipeline.grid]
gamma_values = [0.02, 0.025]
delta_values = [0.06, 0.07]
tau_values = [1e-5, 2e-5]
folds = 5
"#;

#[test]
fn clustering_uniform_loadings() {
    let out = run(&format!(
        r#"
seed = 2026
replications = 20
methods = ["proposed"]
evaluation = "hamming"
out_dir = "unused"
[sim]
preset = "clustering_uniform"
n = 1000
a = 3.5
[sweep]
kind = "strength"
values = [3.5, 3.0]
{CLUSTER_PIPELINE}{SOLVER}"#
    ));
    let h = |s, k| mean(&out, s, k, Method::Proposed);
    let (r35, c35, r30, c30) = (h("3.5", "L"), h("3.5", "Cor(abs(L))"), h("3", "L"), h("3", "Cor(abs(L))"));
    report(
        4,
        "clustering, uniform loadings, n = 1000",
        r35 == 0.0 && c35 == 0.0 && r30 <= 0.05 && c30 <= 0.05,
        &format!("a=3.5 rows {r35:.3} cor {c35:.3}; a=3.0 rows {r30:.3} cor {c30:.3}"),
    );
}

#[test]
fn clustering_normal_loadings() {
    let out = run(&format!(
        r#"
seed = 2026
replications = 20
methods = ["proposed"]
evaluation = "hamming"
out_dir = "unused"
[sim]
preset = "clustering_normal"
n = 4000
[hamming]
modes = ["cor_abs"]
{CLUSTER_PIPELINE}{SOLVER}"#
    ));
    let h = mean(&out, &out.settings[0], "Cor(abs(L))", Method::Proposed);
    report(5, "clustering, normal loadings, n = 4000", h <= 0.10, &format!("cor {h:.3}"));
}

fn random_covariance(rng: &mut ChaCha20Rng, p: usize) -> SymMatrix {
    let n = 3 * p;
    let x = Matrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    SymMatrix::new(x.transpose() * &x / n as f64 + Matrix::identity(p, p) * 0.05).unwrap()
}

fn random_sym(rng: &mut ChaCha20Rng, p: usize, scale: f64) -> SymMatrix {
    SymMatrix::new(Matrix::from_fn(p, p, |_, _| rng.random_range(-scale..scale))).unwrap()
}

fn random_weights(rng: &mut ChaCha20Rng, p: usize) -> WeightMatrix {
    WeightMatrix::new(random_sym(rng, p, 1.0).as_matrix().map(|v| 1.0 + v.abs()), 10.0).unwrap()
}

#[test]
fn solver_matches_reference() {
    let mut rng = ChaCha20Rng::seed_from_u64(606);
    let mut worst_obj = 0.0_f64;
    let mut worst_consensus = 0.0_f64;
    for k in 0..50 {
        let p = rng.random_range(3..=6);
        let sm = if k % 2 == 0 { SignMode::Plus } else { SignMode::Minus };
        let sigma = random_covariance(&mut rng, p);
        let w = random_weights(&mut rng, p);
        let params = TuningParams {
            gamma: rng.random_range(0.01..0.2),
            delta: rng.random_range(0.01..0.3),
            tau: rng.random_range(0.0..0.1),
            mu: 1.0,
            eps: 1e-20,
            max_iter: 100_000,
        };
        let mut state = AdmmState::initial(p, sm);
        while state.iter < params.max_iter {
            let next = admm_step(&state, &sigma, &params, &w, sm).unwrap();
            worst_consensus = worst_consensus.max(next.y2.consensus_violation(sm));
            let done = next.rel_change <= params.eps && (&next.y1 - &next.y2).norm_squared() <= params.eps * next.y1.norm_squared();
            state = next;
            if done {
                break;
            }
        }
        let admm = solve(&sigma, &params, &w, sm).unwrap();
        let refr = reference_solve(&sigma, &params, &w, sm).unwrap();
        worst_obj = worst_obj.max((admm.objective - refr.objective).abs() / refr.objective.abs().max(1.0));
    }
    let mut worst_kkt = 0.0_f64;
    for k in 0..100 {
        let p = rng.random_range(1..=6);
        let sm = if k % 2 == 0 { SignMode::Plus } else { SignMode::Minus };
        let mut gen = || Matrix::from_fn(p, p, |_, _| rng.random_range(-5.0..5.0));
        let t = Blocks { theta: gen(), s: gen(), l1: gen(), l2: gen() };
        worst_kkt = worst_kkt.max((&consensus_project(&t, sm) - &consensus_kkt_solve(&t, sm)).iter().map(|m| m.amax()).fold(0.0, f64::max));
    }
    report(
        6,
        "ADMM against the reference solver",
        worst_obj <= 1e-5 && worst_consensus <= 1e-10 && worst_kkt <= 1e-12,
        &format!("objective rel {worst_obj:.1e}, consensus {worst_consensus:.1e}, projection {worst_kkt:.1e}"),
    );
}

fn nuclear_psd_by_projected_gradient(z: &SymMatrix, lambda: f64) -> SymMatrix {
    let p = z.dim();
    let mut x = SymMatrix::zeros(p);
    for _ in 0..500 {
        let step = x.as_matrix() - (Matrix::identity(p, p) * lambda + x.as_matrix() - z.as_matrix()) * 0.5;
        x = project_psd(&SymMatrix::new(step).unwrap()).unwrap();
    }
    x
}

#[test]
fn prox_suite() {
    let mut rng = ChaCha20Rng::seed_from_u64(707);
    let mut worst_ratio = 0.0_f64;
    for op in 0..5 {
        for _ in 0..100 {
            let p = rng.random_range(1..=6);
            let (x, y) = (random_sym(&mut rng, p, 3.0), random_sym(&mut rng, p, 3.0));
            let lambda = rng.random_range(0.0..2.0);
            let sigma = random_covariance(&mut rng, p);
            let w = random_weights(&mut rng, p);
            let f = |z: &SymMatrix| -> Matrix {
                match op {
                    0 => soft_threshold(z.as_matrix(), lambda),
                    1 => weighted_soft_threshold(z.as_matrix(), lambda, &w),
                    2 => prox_nuclear_psd(z, lambda).unwrap().into_matrix(),
                    3 => project_psd(z).unwrap().into_matrix(),
                    _ => prox_logdet(z, lambda + 0.05, &sigma).unwrap().into_matrix(),
                }
            };
            let d = (x.as_matrix() - y.as_matrix()).norm();
            worst_ratio = worst_ratio.max((f(&x) - f(&y)).norm() / d);
        }
    }
    let mut worst_stationarity = 0.0_f64;
    let mut worst_nuclear = 0.0_f64;
    for _ in 0..100 {
        let p = rng.random_range(1..=6);
        let m = random_sym(&mut rng, p, 3.0);
        let sigma = random_covariance(&mut rng, p);
        let mu = rng.random_range(0.1..3.0);
        let x = prox_logdet(&m, mu, &sigma).unwrap();
        let inv = x.as_matrix().clone().try_inverse().unwrap();
        let resid = sigma.as_matrix() - inv + (x.as_matrix() - m.as_matrix()) / mu;
        worst_stationarity = worst_stationarity.max(resid.amax());
        let lambda = rng.random_range(0.0..1.5);
        let fast = prox_nuclear_psd(&m, lambda).unwrap();
        let slow = nuclear_psd_by_projected_gradient(&m, lambda);
        worst_nuclear = worst_nuclear.max((fast.as_matrix() - slow.as_matrix()).amax());
    }
    report(
        7,
        "proximal operators",
        worst_ratio <= 1.0 + 1e-12 && worst_stationarity <= 1e-8 && worst_nuclear <= 1e-6,
        &format!("Lipschitz ratio {worst_ratio:.6}, log-det residual {worst_stationarity:.1e}, nuclear gap {worst_nuclear:.1e}"),
    );
}

#[test]
fn likelihood_gradient() {
    let mut rng = ChaCha20Rng::seed_from_u64(808);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let p = rng.random_range(2..=6);
        let theta = random_covariance(&mut rng, p);
        let sigma = random_covariance(&mut rng, p);
        let g = neg_log_likelihood_gradient(&theta, &sigma).unwrap();
        let h = 1e-5;
        let fd = Matrix::from_fn(p, p, |i, j| {
            let mut e = Matrix::zeros(p, p);
            e[(i, j)] = h;
            // symmetrizing splits the step over (i, j) and (j, i), so the quotient is still ∂/∂θ_ij
            let at = |m: Matrix| neg_log_likelihood(&SymMatrix::new(m).unwrap(), &sigma);
            (at(theta.as_matrix() + &e) - at(theta.as_matrix() - &e)) / (2.0 * h)
        });
        worst = worst.max((&g - &fd).norm() / g.norm());
    }
    report(8, "likelihood gradient by central differences", worst <= 1e-6, &format!("relative error {worst:.1e}"));
}

#[test]
fn hamming_suite() {
    let truth = [1, 1, 2, 2, 3, 3, 1, 2];
    let identity = hamming_exhaustive(&truth, &truth).unwrap();
    let relabeled: Vec<usize> = truth.iter().map(|&l| [3, 1, 2][l - 1]).collect();
    let renamed = hamming_exhaustive(&relabeled, &truth).unwrap();
    let forced = hamming_error(
        &LabelVector::new(vec![1, 1, 2, 2], 2).unwrap(),
        &LabelVector::new(vec![1, 1, 1, 2], 2).unwrap(),
    )
    .unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(909);
    let mut disagreements = 0;
    for _ in 0..100 {
        let m = rng.random_range(1..=6);
        let n = rng.random_range(1..=40);
        let a: Vec<usize> = (0..n).map(|_| rng.random_range(1..=m)).collect();
        let mut b: Vec<usize> = (0..n).map(|_| rng.random_range(1..=m)).collect();
        b.shuffle(&mut rng);
        if (hamming_exhaustive(&a, &b).unwrap() - hamming_assignment(&a, &b).unwrap()).abs() > 1e-15 {
            disagreements += 1;
        }
    }
    report(
        9,
        "Hamming error and label matching",
        identity == 0.0 && renamed == 0.0 && forced == 0.25 && disagreements == 0,
        &format!("identity {identity}, relabeled {renamed}, fixture {forced}, disagreements {disagreements}/100"),
    );
}

fn block_truth() -> GroundTruth {
    let sizes = [2, 3];
    let mut l = Matrix::zeros(5, 5);
    for (start, k) in [(0, 2), (2, 3)] {
        for i in start..start + k {
            for j in start..start + k {
                l[(i, j)] = 0.4;
            }
        }
    }
    let mut s = Matrix::identity(5, 5) * 3.0;
    s[(0, 4)] = 0.2;
    s[(4, 0)] = 0.2;
    GroundTruth {
        s_star: SymMatrix::new(s).unwrap(),
        l_star: SymMatrix::new(l).unwrap(),
        b_star: Matrix::zeros(0, 5),
        labels_star: LabelVector::from_block_sizes(&sizes),
        rank_star: 2,
        block_sizes: sizes.to_vec(),
        sign_mode: SignMode::Plus,
    }
}

/// Direct count over the upper triangle; diagonal included for `L`, excluded for `S`.
fn enumerate(est: &Matrix, truth: &Matrix, strict: bool) -> (f64, f64) {
    let (mut tp, mut np, mut fp, mut nn) = (0, 0, 0, 0);
    for i in 0..5 {
        for j in i + usize::from(strict)..5 {
            let e = est[(i, j)] != 0.0;
            if truth[(i, j)] != 0.0 {
                np += 1;
                tp += usize::from(e);
            } else {
                nn += 1;
                fp += usize::from(e);
            }
        }
    }
    let rate = |a: usize, b: usize, v: f64| if b == 0 { v } else { a as f64 / b as f64 };
    (rate(tp, np, 1.0), rate(fp, nn, 0.0))
}

#[test]
fn metrics_suite() {
    let truth = block_truth();
    let exact = ScoreTolerances { l_abs_tol: Some(0.0), s_abs_tol: Some(0.0), ..ScoreTolerances::default() };
    let perfect = score(&Decomposition::new(truth.s_star.clone(), truth.l_star.clone(), SignMode::Plus).unwrap(), &truth, &exact).unwrap();
    let perfect_ok = (perfect.tr_l, perfect.tp_l, perfect.fp_l, perfect.tp_s, perfect.fp_s) == (1.0, 1.0, 0.0, 1.0, 0.0);
    let dense = SymMatrix::new(Matrix::from_element(5, 5, 0.3)).unwrap();
    let dense_fp = score(&Decomposition::new(truth.s_star.clone(), dense, SignMode::Plus).unwrap(), &truth, &exact).unwrap().fp_l;

    let mut rng = ChaCha20Rng::seed_from_u64(1010);
    let mut mismatches = 0;
    for _ in 0..50 {
        let mut pattern = |density: f64| {
            let m = Matrix::from_fn(5, 5, |_, _| if rng.random_bool(density) { rng.random_range(0.1..1.0) } else { 0.0 });
            SymMatrix::new(m).unwrap()
        };
        let t = GroundTruth { s_star: pattern(0.4), l_star: pattern(0.5), ..block_truth() };
        let est = Decomposition::new(pattern(0.4), pattern(0.5), SignMode::Plus).unwrap();
        let r = score(&est, &t, &exact).unwrap();
        let (tp_l, fp_l) = enumerate(est.l.as_matrix(), t.l_star.as_matrix(), false);
        let (tp_s, fp_s) = enumerate(est.s.as_matrix(), t.s_star.as_matrix(), true);
        if (r.tp_l, r.fp_l, r.tp_s, r.fp_s) != (tp_l, fp_l, tp_s, fp_s) {
            mismatches += 1;
        }
    }
    report(
        10,
        "recovery metrics",
        perfect_ok && dense_fp == 1.0 && mismatches == 0,
        &format!(
            "perfect ({}, {}, {}, {}, {}), dense FP_L {dense_fp}, enumeration mismatches {mismatches}/50",
            perfect.tr_l, perfect.tp_l, perfect.fp_l, perfect.tp_s, perfect.fp_s
        ),
    );
}

#[test]
fn experiment_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("exp.toml");
    fs::write(
        &cfg,
        r#"
seed = 5
replications = 3
methods = ["lvggm", "ht-lvggm", "nonapmle", "proposed"]
out_dir = "first"
[sim]
preset = "latent_community"
n = 300
[pipeline]
pilot = { kind = "cv" }
[pipeline.grid]
gamma_values = [0.05, 0.1]
delta_values = [0.1, 0.2]
tau_values = [0.001]
folds = 2
"#,
    )
    .unwrap();
    let exp = |out: &str| {
        let status = Command::new(env!("CARGO_BIN_EXE_blockggm"))
            .args(["experiment", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join(out).to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        fs::read(tmp.path().join(out).join("tables.csv")).unwrap()
    };
    let (a, b) = (exp("first"), exp("second"));
    report(11, "experiment determinism", a == b && !a.is_empty(), &format!("{} bytes, identical: {}", a.len(), a == b));
}
