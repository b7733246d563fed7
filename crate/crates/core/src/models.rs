//! Closed-form benchmark functions for sensitivity analysis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probability::{Marginal, RandomVector, Variable};

/// `sin x1 + a sin^2 x2 + b x3^4 sin x1`.
pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

/// Sobol' g-function `prod (|4 x_i - 2| + a_i) / (1 + a_i)`.
pub fn sobol_g(x: &[f64], a: &[f64]) -> f64 {
    x.iter()
        .zip(a)
        .map(|(&xi, &ai)| ((4.0 * xi - 2.0).abs() + ai) / (1.0 + ai))
        .product()
}

/// Built-in analytic models with their input distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnalyticModel {
    /// Three uniforms on `[-pi, pi]`.
    Ishigami { a: f64, b: f64 },
    /// One uniform on `[0, 1]` per coefficient.
    GFunction { a: Vec<f64> },
}

impl AnalyticModel {
    pub fn ishigami_default() -> Self {
        AnalyticModel::Ishigami { a: 7.0, b: 0.1 }
    }

    pub fn g_function_default() -> Self {
        AnalyticModel::GFunction {
            a: vec![0.0, 1.0, 4.5, 9.0, 99.0, 99.0, 99.0, 99.0],
        }
    }

    pub fn random_vector(&self) -> Result<RandomVector> {
        match self {
            AnalyticModel::Ishigami { .. } => RandomVector::iid(3, Marginal::uniform(-PI, PI)?),
            AnalyticModel::GFunction { a } => {
                if a.is_empty() {
                    return Err(Error::EmptyRandomVector);
                }
                RandomVector::new(
                    (0..a.len())
                        .map(|i| Variable {
                            name: format!("x{}", i + 1),
                            marginal: Marginal::uniform(0.0, 1.0).expect("valid bounds"),
                        })
                        .collect(),
                )
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnalyticModel::Ishigami { .. } => 3,
            AnalyticModel::GFunction { a } => a.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            AnalyticModel::Ishigami { a, b } => ishigami(x, *a, *b),
            AnalyticModel::GFunction { a } => sobol_g(x, a),
        })
    }
}
