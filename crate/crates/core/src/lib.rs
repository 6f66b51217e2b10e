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

//! Estimation of Gaussian graphical models whose precision matrix splits
//! into a sparse part plus low-rank diagonal blocks (non-overlapping
//! communities).
//!
//! The pipeline has three stages:
//!
//! 1. [`regression::fit_ols`] removes covariate effects and forms the
//!    residual covariance `Σ̂`.
//! 2. [`admm::solve`] fits `Θ = S ± L` under an off-diagonal ℓ1 penalty on
//!    `S` and nuclear plus adaptively weighted ℓ1 penalties on `L`. The
//!    weights come from a pilot fit ([`tuning::lvggm_initial`],
//!    [`tuning::adaptive_weights`]) and the penalties from
//!    [`tuning::cross_validate`].
//! 3. [`clustering::cluster_pipeline`] runs K-means on the rows of `L̂`
//!    (or on their absolute-value correlations) to label communities.
//!
//! [`simulation`] and [`metrics`] reproduce the synthetic benchmarks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod admm;
pub mod clustering;
mod eigen;
pub mod error;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod prox;
pub mod regression;
pub mod simulation;
pub mod tuning;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Dataset, Decomposition, GroundTruth, LabelVector, Matrix, SignMode, SymMatrix, TuningParams, WeightMatrix,
};
