//! Dense monomial-basis polynomials with the residual normalization `P(0) = 1`.
//!
//! Polynomials here exist for cross-validation (expected-error integrals,
//! optimality oracles, matrix-polynomial checks). Solvers never materialize
//! them.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-12;

/// Polynomial `c₀ + c₁λ + … + c_tλ^t` with `c₀ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualPolynomial {
    coeffs: Vec<f64>,
}

impl ResidualPolynomial {
    /// Wraps monomial coefficients, checking `|c₀ − 1| ≤ 1e−12`. The stored
    /// constant term is set to exactly one.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        let c0 = coeffs.first().copied().unwrap_or(0.0);
        if !((c0 - 1.0).abs() <= RESIDUAL_TOL) {
            return Err(Error::NotResidual(c0));
        }
        coeffs[0] = 1.0;
        Ok(Self { coeffs })
    }

    /// The constant polynomial `1`.
    pub fn one() -> Self {
        Self { coeffs: vec![1.0] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// `P(A)·v` by Horner's rule on matrix-vector products.
    pub fn apply_matrix(&self, a: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut acc = v * *self.coeffs.last().unwrap();
        for &c in self.coeffs.iter().rev().skip(1) {
            acc = a * acc + v * c;
        }
        acc
    }

    /// Discrete objective `Σ wᵢ |P(λᵢ)|²`.
    pub fn weighted_norm_sq(&self, samples: &[(Complex64, f64)]) -> f64 {
        samples
            .iter()
            .map(|&(z, w)| w * self.eval_complex(z).norm_sqr())
            .sum()
    }
}

/// Coefficient-vector helpers shared by the recurrence expansions.
pub(crate) fn poly_add_scaled(acc: &mut Vec<f64>, p: &[f64], scale: f64) {
    if acc.len() < p.len() {
        acc.resize(p.len(), 0.0);
    }
    for (a, &c) in acc.iter_mut().zip(p) {
        *a += scale * c;
    }
}

/// `(α + βλ)·p`.
pub(crate) fn poly_mul_linear(p: &[f64], alpha: f64, beta: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &c) in p.iter().enumerate() {
        out[k] += alpha * c;
        out[k + 1] += beta * c;
    }
    out
}
