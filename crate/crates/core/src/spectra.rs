//! Closed-form spectral laws and expected-error integrals.
//!
//! For a normal operator with expected spectral distribution `μ` and
//! `E[(x₀ − x*)(x₀ − x*)ᵀ] = (s²/d)·I`, a method with residual polynomial
//! `P_t` has expected squared distance `s²·∫|P_t|² dμ` (the integral taken
//! away from the origin). This module evaluates that integral for the
//! Marchenko–Pastur law, its pushforward onto the imaginary axis (bilinear
//! games), and circularly symmetric disk laws.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{invalid, Error, Result};
use crate::polynomial::ResidualPolynomial;
use crate::quadrature::{gauss_legendre_on, integrate_adaptive};

/// Relative accuracy requested from the adaptive integrator.
pub const QUADRATURE_RTOL: f64 = 1e-10;
/// Polar product rule used for disk integrals (radial × angular nodes).
pub const DISK_RULE: (usize, usize) = (64, 64);

/// `(ℓ, L) = (σ²(1−√r)², σ²(1+√r)²)`.
pub fn mp_edges(sigma2: f64, r: f64) -> Result<(f64, f64)> {
    if !(sigma2.is_finite() && sigma2 > 0.0) {
        return Err(invalid("sigma2", format!("must be positive, got {sigma2}")));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(invalid("r", format!("must lie in (0, 1], got {r}")));
    }
    let sr = r.sqrt();
    Ok((sigma2 * (1.0 - sr).powi(2), sigma2 * (1.0 + sr).powi(2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchenkoPastur {
    pub sigma2: f64,
    pub r: f64,
    pub edge_low: f64,
    pub edge_high: f64,
}

impl MarchenkoPastur {
    pub fn new(sigma2: f64, r: f64) -> Result<Self> {
        let (edge_low, edge_high) = mp_edges(sigma2, r)?;
        Ok(Self {
            sigma2,
            r,
            edge_low,
            edge_high,
        })
    }

    /// Density on `(ℓ, L)`, zero elsewhere (including both edges).
    pub fn density(&self, lambda: f64) -> f64 {
        if lambda <= self.edge_low || lambda >= self.edge_high || lambda <= 0.0 {
            return 0.0;
        }
        ((self.edge_high - lambda) * (lambda - self.edge_low)).sqrt() / (2.0 * PI * self.sigma2 * self.r * lambda)
    }

    /// `∫ f dμ_MP` by adaptive Gauss–Kronrod after `λ = ℓ + (L−ℓ)·sin²u`,
    /// which turns the square-root edges (and the `1/λ` pole when `r = 1`)
    /// into a smooth integrand on `u ∈ [0, π/2]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        integrate_adaptive(|u| self.substituted(&f, u), 0.0, FRAC_PI_2, QUADRATURE_RTOL, 1e-300)
    }

    fn substituted<F: Fn(f64) -> f64>(&self, f: &F, u: f64) -> f64 {
        let (s, c) = u.sin_cos();
        let width = self.edge_high - self.edge_low;
        let lambda = self.edge_low + width * s * s;
        if lambda <= 0.0 {
            return 0.0;
        }
        // density·dλ = (L−ℓ)²·2s²c² / (2πσ²rλ) du
        f(lambda) * width * width * s * s * c * c / (PI * self.sigma2 * self.r * lambda)
    }

    /// Gauss–Legendre discretization of the law in the substituted variable:
    /// `(λᵢ, wᵢ)` with `Σ wᵢ = 1` up to quadrature error.
    pub fn quadrature_nodes(&self, n: usize) -> Vec<(f64, f64)> {
        let width = self.edge_high - self.edge_low;
        gauss_legendre_on(n, 0.0, FRAC_PI_2)
            .into_iter()
            .map(|(u, w)| {
                let s = u.sin();
                (self.edge_low + width * s * s, w * self.substituted(&|_| 1.0, u))
            })
            .collect()
    }

    /// Nodes for the imaginary-axis law of a bilinear operator whose `M·Mᵀ`
    /// follows this law: each `(λ, w)` becomes `(±i√λ, w/2)`.
    pub fn pushforward_nodes(&self, n: usize) -> Vec<(Complex64, f64)> {
        self.quadrature_nodes(n)
            .into_iter()
            .flat_map(|(l, w)| {
                let s = l.sqrt();
                [(Complex64::new(0.0, s), 0.5 * w), (Complex64::new(0.0, -s), 0.5 * w)]
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialLaw {
    /// `dμ_R(r) = 2r/R² dr`: the uniform law on the disk.
    UniformDisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskDistribution {
    pub center: f64,
    pub radius: f64,
    pub radial_law: RadialLaw,
}

impl DiskDistribution {
    pub fn uniform(center: f64, radius: f64) -> Result<Self> {
        if !(center.is_finite() && center > 0.0) {
            return Err(invalid("center", "must be finite and positive"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(invalid("radius", "must be finite and positive"));
        }
        if radius >= center {
            return Err(invalid(
                "radius",
                format!("R < C is required, got R = {radius} and C = {center}"),
            ));
        }
        Ok(Self {
            center,
            radius,
            radial_law: RadialLaw::UniformDisk,
        })
    }

    /// Radial density of `μ_R` on `[0, R]`.
    pub fn radial_density(&self, r: f64) -> f64 {
        match self.radial_law {
            RadialLaw::UniformDisk => {
                if (0.0..=self.radius).contains(&r) {
                    2.0 * r / (self.radius * self.radius)
                } else {
                    0.0
                }
            }
        }
    }

    /// Tensor polar rule: Gauss–Legendre in the radius (weighted by `μ_R`),
    /// equispaced in the angle.
    pub fn quadrature_nodes(&self, n_radial: usize, n_angular: usize) -> Vec<(Complex64, f64)> {
        let radial = gauss_legendre_on(n_radial, 0.0, self.radius);
        let mut out = Vec::with_capacity(n_radial * n_angular);
        for (r, w) in radial {
            let wr = w * self.radial_density(r) / n_angular as f64;
            for j in 0..n_angular {
                let theta = 2.0 * PI * j as f64 / n_angular as f64;
                out.push((Complex64::new(self.center, 0.0) + Complex64::from_polar(r, theta), wr));
            }
        }
        out
    }
}

/// `K_{t,R} = √(∫₀^R r^{2t} dμ_R(r))`; `R^t/√(t+1)` for the uniform disk.
pub fn disk_moment(dist: &DiskDistribution, t: u32) -> f64 {
    match dist.radial_law {
        RadialLaw::UniformDisk => dist.radius.powi(t as i32) / ((t + 1) as f64).sqrt(),
    }
}

/// `ln K_{t,R}`, usable where `K_{t,R}` itself under- or overflows.
pub fn ln_disk_moment(dist: &DiskDistribution, t: u32) -> f64 {
    match dist.radial_law {
        RadialLaw::UniformDisk => t as f64 * dist.radius.ln() - 0.5 * ((t + 1) as f64).ln(),
    }
}

/// Eigenvalues with uniform weights `1/d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSpectrum {
    pub eigenvalues: Vec<Complex64>,
}

impl EmpiricalSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.eigenvalues.len() as f64
    }

    /// Whether every non-real eigenvalue has its conjugate in the multiset.
    pub fn is_conjugate_closed(&self, tol: f64) -> bool {
        let mut used = vec![false; self.eigenvalues.len()];
        for i in 0..self.eigenvalues.len() {
            if used[i] {
                continue;
            }
            let z = self.eigenvalues[i];
            if z.im.abs() <= tol {
                used[i] = true;
                continue;
            }
            let partner = (0..self.eigenvalues.len())
                .filter(|&j| j != i && !used[j])
                .find(|&j| (self.eigenvalues[j] - z.conj()).norm() <= tol);
            match partner {
                Some(j) => {
                    used[i] = true;
                    used[j] = true;
                }
                None => return false,
            }
        }
        true
    }
}

/// Predicted spectrum of `A = [[0, M], [−Mᵀ, 0]]` from the eigenvalues of
/// `M·Mᵀ` (`d₁ ≤ d₂`): `{±i√λⱼ}` together with `d₂ − d₁` zeros.
pub fn pushforward_bilinear(mmt_eigenvalues: &[f64], d1: usize, d2: usize) -> Result<EmpiricalSpectrum> {
    if d1 == 0 {
        return Err(invalid("d1", "must be at least 1"));
    }
    if d1 > d2 {
        return Err(invalid("d1", format!("players must be ordered so that d1 <= d2, got {d1} > {d2}")));
    }
    if mmt_eigenvalues.len() != d1 {
        return Err(Error::DimensionMismatch {
            expected: d1,
            got: mmt_eigenvalues.len(),
        });
    }
    let mut eigenvalues = Vec::with_capacity(d1 + d2);
    for &l in mmt_eigenvalues {
        if !(l.is_finite() && l >= -1e-12) {
            return Err(invalid("mmt_eigenvalues", format!("expected nonnegative values, got {l}")));
        }
        let s = l.max(0.0).sqrt();
        eigenvalues.push(Complex64::new(0.0, s));
        eigenvalues.push(Complex64::new(0.0, -s));
    }
    eigenvalues.extend(std::iter::repeat_n(Complex64::new(0.0, 0.0), d2 - d1));
    Ok(EmpiricalSpectrum { eigenvalues })
}

/// Expected spectral law against which an expected error is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpectralModel {
    /// Real law on `[ℓ, L]`; polynomials are evaluated at `λ`.
    MarchenkoPastur(MarchenkoPastur),
    /// Imaginary-axis law of a bilinear operator: polynomials are evaluated
    /// at `±i√λ` with `λ` following the wrapped law.
    BilinearPushforward(MarchenkoPastur),
    Disk(DiskDistribution),
}

/// `init_scale² · ∫ |P(λ)|² dμ(λ)`.
pub fn expected_error_quadrature(poly: &ResidualPolynomial, model: &SpectralModel, init_scale: f64) -> Result<f64> {
    if (poly.coeffs()[0] - 1.0).abs() > 1e-12 {
        return Err(Error::NotResidual(poly.coeffs()[0]));
    }
    let integral = match model {
        SpectralModel::MarchenkoPastur(mp) => mp.integrate(|l| poly.eval(l).powi(2)),
        SpectralModel::BilinearPushforward(mp) => mp.integrate(|l| {
            let s = l.sqrt();
            0.5 * (poly.eval_complex(Complex64::new(0.0, s)).norm_sqr()
                + poly.eval_complex(Complex64::new(0.0, -s)).norm_sqr())
        }),
        SpectralModel::Disk(disk) => {
            let (nr, nt) = DISK_RULE;
            poly.weighted_norm_sq(&disk.quadrature_nodes(nr, nt))
        }
    };
    Ok(init_scale * init_scale * integral)
}
