//! Per-iteration coefficients of the optimal methods, plus the residual
//! polynomials they realize.
//!
//! * [`mp_coefficients`]: step sizes and momenta of Hamiltonian gradient
//!   descent with momentum when `M·Mᵀ` follows the Marchenko–Pastur law.
//! * [`disk_recurrence`] / [`disk_weights`]: inner recurrence and averaging
//!   weights for circularly symmetric laws on the disk `D(C, R)`.
//! * [`optimal_polynomial_from_recurrence`] and
//!   [`brute_force_optimal_polynomial`]: two independent routes to the
//!   residual polynomial minimizing `∫|P|² dμ`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::polynomial::{poly_add_scaled, poly_mul_linear, ResidualPolynomial};
use crate::spectra::mp_edges;

/// Coefficients `h_t = −δ_t/(σ²√r)`, `m_t = 1 + ρδ_t` with
/// `δ_t = 1/(−ρ − δ_{t−1})`, `δ₀ = 0`, `ρ = (1 + r)/√r`.
///
/// Used as `x_{t+1} = x_t − h_{t+1}·g_t + m_{t+1}·(x_{t−1} − x_t)`. The
/// momenta are nonpositive and tend to `−r`, i.e. a heavy-ball step of size
/// `r` along `x_t − x_{t−1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpCoefficients {
    pub sigma2: f64,
    pub r: f64,
    pub rho: f64,
    pub delta: Vec<f64>,
    pub h: Vec<f64>,
    pub m: Vec<f64>,
}

impl MpCoefficients {
    /// Largest `t` for which `h_t`, `m_t` are available.
    pub fn horizon(&self) -> usize {
        self.h.len() - 1
    }

    /// Limits `(h_∞, m_∞) = (1/σ², −r)`.
    pub fn limits(&self) -> (f64, f64) {
        (1.0 / self.sigma2, -self.r)
    }

    /// Residual polynomials `Q_t` in the variable of `AᵀA` realized by the
    /// scheme, for `t = 0..=horizon`.
    pub fn residual_polynomials(&self) -> Vec<ResidualPolynomial> {
        let mut out = vec![ResidualPolynomial::one()];
        let mut prev = vec![1.0];
        let mut cur = vec![1.0];
        for t in 1..=self.horizon() {
            // Q_t = (1 − m_t − h_t λ) Q_{t−1} + m_t Q_{t−2}
            let mut next = poly_mul_linear(&cur, 1.0 - self.m[t], -self.h[t]);
            poly_add_scaled(&mut next, &prev, self.m[t]);
            prev = std::mem::replace(&mut cur, next);
            out.push(ResidualPolynomial::new(cur.clone()).expect("recurrence preserves Q(0) = 1"));
        }
        out
    }

    /// CSV with columns `t,delta,h,m`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "delta", "h", "m"])?;
        for t in 0..=self.horizon() {
            wr.write_record([
                t.to_string(),
                fmt_f64(self.delta[t]),
                fmt_f64(self.h[t]),
                fmt_f64(self.m[t]),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub fn mp_coefficients(sigma2: f64, r: f64, horizon: usize) -> Result<MpCoefficients> {
    if r > 1.0 {
        return Err(invalid(
            "r",
            format!("ratio d1/d2 = {r} exceeds 1; order the players so that d1 <= d2"),
        ));
    }
    mp_edges(sigma2, r)?;
    if horizon == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let sr = r.sqrt();
    let rho = (1.0 + r) / sr;
    let mut delta = Vec::with_capacity(horizon + 1);
    delta.push(0.0);
    for t in 1..=horizon {
        let prev = delta[t - 1];
        delta.push(1.0 / (-rho - prev));
    }
    // `0.0 - d` rather than `-d` so that h₀ is +0, not −0.
    let h = delta.iter().map(|&d| (0.0 - d) / (sigma2 * sr)).collect();
    let m = delta.iter().map(|&d| 1.0 + rho * d).collect();
    Ok(MpCoefficients {
        sigma2,
        r,
        rho,
        delta,
        h,
        m,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Coefficients {
    Constant { a: f64, b: f64 },
    Table { a: Vec<f64>, b: Vec<f64> },
}

/// Residual orthogonal polynomials generated by
/// `ψ_t = (a_t + b_t λ)ψ_{t−1} + (1 − a_t)ψ_{t−2}`, `ψ₋₁ = 0`, `ψ₀ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeTermRecurrence {
    coeffs: Coefficients,
}

impl ThreeTermRecurrence {
    pub fn constant(a: f64, b: f64) -> Self {
        Self {
            coeffs: Coefficients::Constant { a, b },
        }
    }

    /// Tabulated coefficients; index 0 is unused (kept for alignment with `t`).
    pub fn from_table(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(invalid("a/b", "coefficient tables must be nonempty and of equal length"));
        }
        Ok(Self {
            coeffs: Coefficients::Table { a, b },
        })
    }

    /// `None` when the recurrence is defined for every `t`.
    pub fn horizon(&self) -> Option<usize> {
        match &self.coeffs {
            Coefficients::Constant { .. } => None,
            Coefficients::Table { a, .. } => Some(a.len() - 1),
        }
    }

    pub fn a(&self, t: usize) -> f64 {
        match &self.coeffs {
            Coefficients::Constant { a, .. } => *a,
            Coefficients::Table { a, .. } => a[t],
        }
    }

    pub fn b(&self, t: usize) -> f64 {
        match &self.coeffs {
            Coefficients::Constant { b, .. } => *b,
            Coefficients::Table { b, .. } => b[t],
        }
    }

    pub(crate) fn check_horizon(&self, t: usize) -> Result<()> {
        match self.horizon() {
            Some(h) if h < t => Err(Error::HorizonExceeded {
                horizon: h,
                requested: t,
            }),
            _ => Ok(()),
        }
    }

    /// `ψ_0 … ψ_t` as monomial coefficient vectors.
    pub fn residual_polynomials(&self, t: usize) -> Result<Vec<Vec<f64>>> {
        self.check_horizon(t)?;
        let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 1..=t {
            let (a, b) = (self.a(k), self.b(k));
            let mut next = poly_mul_linear(&out[k - 1], a, b);
            if k >= 2 {
                poly_add_scaled(&mut next, &out[k - 2], 1.0 - a);
            }
            out.push(next);
        }
        Ok(out)
    }
}

/// Recurrence of the disk law centered at `C`: `a_t = 1`, `b_t = −1/C`, so
/// `ψ_t(λ) = (1 − λ/C)^t`.
pub fn disk_recurrence(center: f64) -> Result<ThreeTermRecurrence> {
    if !(center.is_finite() && center > 0.0) {
        return Err(invalid("center", format!("must be positive, got {center}")));
    }
    Ok(ThreeTermRecurrence::constant(1.0, -1.0 / center))
}

/// Averaging weights `β_t = φ_t(0)²` and `B_t = Σ_{k<t} β_k`.
///
/// Stored as logarithms: for the disk, `β_t` grows like `(C/R)^{2t}` and
/// leaves double range after a few hundred iterations, while the quantities
/// the solvers need (`β_t/(B_t + β_t)`) stay well scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragingWeights {
    ln_beta: Vec<f64>,
    ln_big_b: Vec<f64>,
}

impl AveragingWeights {
    /// From `ln β_0 … ln β_T`; `B` is accumulated up to `B_{T+1}`.
    pub fn from_ln_beta(ln_beta: Vec<f64>) -> Result<Self> {
        if ln_beta.is_empty() {
            return Err(invalid("beta", "at least β₀ is required"));
        }
        if let Some(bad) = ln_beta.iter().find(|v| !v.is_finite()) {
            return Err(invalid("beta", format!("weights must be positive and finite (ln β = {bad})")));
        }
        let mut ln_big_b = Vec::with_capacity(ln_beta.len() + 1);
        ln_big_b.push(f64::NEG_INFINITY);
        for &lb in &ln_beta {
            let prev = *ln_big_b.last().unwrap();
            ln_big_b.push(log_add_exp(prev, lb));
        }
        Ok(Self { ln_beta, ln_big_b })
    }

    pub fn from_beta(beta: &[f64]) -> Result<Self> {
        if let Some(bad) = beta.iter().find(|&&b| !(b > 0.0)) {
            return Err(invalid("beta", format!("weights must be positive, got {bad}")));
        }
        Self::from_ln_beta(beta.iter().map(|b| b.ln()).collect())
    }

    /// Largest `t` with `β_t` available.
    pub fn horizon(&self) -> usize {
        self.ln_beta.len() - 1
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.ln_beta[t].exp()
    }

    /// `B_t` for `t = 0..=horizon+1`.
    pub fn big_b(&self, t: usize) -> f64 {
        self.ln_big_b[t].exp()
    }

    pub fn ln_beta(&self, t: usize) -> f64 {
        self.ln_beta[t]
    }

    pub fn ln_big_b(&self, t: usize) -> f64 {
        self.ln_big_b[t]
    }

    /// `β_t/(B_t + β_t)`, the weight given to the new inner iterate.
    pub fn averaging_fraction(&self, t: usize) -> f64 {
        (self.ln_beta[t] - self.ln_big_b[t + 1]).exp()
    }

    /// `1/B_{t+1}`: optimal expected error after `t` steps, in units of the
    /// initial squared distance.
    pub fn optimal_value(&self, t: usize) -> f64 {
        (-self.ln_big_b[t + 1]).exp()
    }

    /// CSV with columns `t,a,b,beta,big_b`.
    pub fn write_csv<W: Write>(&self, rec: &ThreeTermRecurrence, w: W) -> Result<()> {
        let horizon = match rec.horizon() {
            Some(h) => h.min(self.horizon()),
            None => self.horizon(),
        };
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "a", "b", "beta", "big_b"])?;
        for t in 0..=horizon {
            wr.write_record([
                t.to_string(),
                fmt_f64(rec.a(t)),
                fmt_f64(rec.b(t)),
                fmt_f64(self.beta(t)),
                fmt_f64(self.big_b(t)),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `β_t = C^{2t}/K²_{t,R} = (C/R)^{2t}(t + 1)` for the uniform disk.
pub fn disk_weights(center: f64, radius: f64, horizon: usize) -> Result<AveragingWeights> {
    let dist = crate::spectra::DiskDistribution::uniform(center, radius)?;
    let ln_beta = (0..=horizon as u32)
        .map(|t| 2.0 * t as f64 * center.ln() - 2.0 * crate::spectra::ln_disk_moment(&dist, t))
        .collect();
    AveragingWeights::from_ln_beta(ln_beta)
}

/// `P*_t = Σ_{k≤t} β_k ψ_k / Σ_{k≤t} β_k`.
pub fn optimal_polynomial_from_recurrence(
    rec: &ThreeTermRecurrence,
    weights: &AveragingWeights,
    t: usize,
) -> Result<ResidualPolynomial> {
    if t > weights.horizon() {
        return Err(Error::HorizonExceeded {
            horizon: weights.horizon(),
            requested: t,
        });
    }
    let psi = rec.residual_polynomials(t)?;
    let ln_total = weights.ln_big_b(t + 1);
    let mut acc = vec![0.0; t + 1];
    for (k, p) in psi.iter().enumerate() {
        poly_add_scaled(&mut acc, p, (weights.ln_beta(k) - ln_total).exp());
    }
    acc[0] = 1.0;
    ResidualPolynomial::new(acc)
}

/// Minimizes `Σ wᵢ |P(λᵢ)|²` over real residual polynomials of degree `≤ t`.
///
/// With `c₀ = 1` substituted, the unknowns `c₁ … c_t` solve the weighted
/// least-squares problem `min ‖V c + 1‖` whose rows are the real and imaginary
/// parts of `√wᵢ·(λᵢ, λᵢ², …, λᵢ^t)`. The system is solved by Householder QR
/// after column equilibration; monomial Vandermonde matrices are too
/// ill-conditioned for the normal equations beyond degree ~6.
pub fn brute_force_optimal_polynomial(samples: &[(Complex64, f64)], t: usize) -> Result<ResidualPolynomial> {
    if t == 0 {
        return Ok(ResidualPolynomial::one());
    }
    let samples: Vec<_> = samples.iter().filter(|s| s.1 > 0.0).collect();
    let n = samples.len();
    if n == 0 {
        return Err(Error::RankDeficient { rank: 0, unknowns: t });
    }
    let mut v = DMatrix::<f64>::zeros(2 * n, t);
    let mut rhs = DVector::<f64>::zeros(2 * n);
    for (i, &&(z, w)) in samples.iter().enumerate() {
        let sw = w.sqrt();
        let mut p = z;
        for j in 0..t {
            v[(i, j)] = sw * p.re;
            v[(n + i, j)] = sw * p.im;
            p *= z;
        }
        rhs[i] = -sw;
    }
    let scales: Vec<f64> = (0..t).map(|j| v.column(j).norm()).collect();
    for (j, &s) in scales.iter().enumerate() {
        if s == 0.0 {
            return Err(Error::RankDeficient { rank: j, unknowns: t });
        }
        v.column_mut(j).scale_mut(1.0 / s);
    }
    let qr = v.qr();
    let r = qr.r();
    let rmax = (0..t).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    let rank = (0..t).filter(|&j| r[(j, j)].abs() > 1e-13 * rmax).count();
    if rank < t {
        return Err(Error::RankDeficient { rank, unknowns: t });
    }
    let qtb = qr.q().transpose() * rhs;
    let sol = r
        .solve_upper_triangular(&qtb)
        .ok_or(Error::RankDeficient { rank, unknowns: t })?;
    let mut coeffs = Vec::with_capacity(t + 1);
    coeffs.push(1.0);
    coeffs.extend(sol.iter().zip(&scales).map(|(c, s)| c / s));
    ResidualPolynomial::new(coeffs)
}

pub(crate) fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
