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

use thiserror::Error;

/// Errors raised by the estimation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("design matrix is numerically singular (condition number {0:.3e})")]
    SingularDesign(f64),
    #[error("eigendecomposition failed: {0}")]
    EigenFailure(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("fold {fold} produced a non positive-definite estimate")]
    InfeasibleFold { fold: usize },
    #[error("could not generate a positive-definite truth after {0} attempts")]
    InfeasibleTruth(usize),
    #[error("all rows are zero below tolerance {0:e}")]
    AllRowsZero(f64),
    #[error("cannot form {k} clusters from {n} points")]
    InvalidK { k: usize, n: usize },
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
