//! Random problem instances `F(x) = A(x − x*)` and the quantities measured on
//! them.
//!
//! Two ensembles are provided:
//!
//! * bilinear zero-sum games, where `A = [[0, M], [−Mᵀ, 0]]` and `M` has iid
//!   Gaussian entries of variance `σ²/d₂` (so `M·Mᵀ` follows the
//!   Marchenko–Pastur law with parameters `(σ², d₁/d₂)`);
//! * disk ensembles, either real normal matrices with a prescribed spectrum
//!   sampled uniformly from the disk `|λ − C| ≤ R`, or the (non-normal)
//!   circular-law matrix `C·I + (R/√d)·G`.
//!
//! The distance to the solution set is the squared norm of `x − x*` with its
//! kernel component removed: `‖(I − Π)(x − x*)‖²`, where `Π` is the orthogonal
//! projector onto `ker A`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, invalid, Result};

/// Relative singular-value threshold below which a direction is treated as
/// belonging to the kernel.
pub const KERNEL_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearGameSpec {
    pub d1: usize,
    pub d2: usize,
    pub sigma2: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl BilinearGameSpec {
    pub fn ratio(&self) -> f64 {
        self.d1 as f64 / self.d2 as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 {
            return Err(invalid("d1", "must be at least 1"));
        }
        if self.d2 == 0 {
            return Err(invalid("d2", "must be at least 1"));
        }
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(invalid("sigma2", format!("must be finite and positive, got {}", self.sigma2)));
        }
        check_init_scale(self.init_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DiskMode {
    /// Real normal matrix with eigenvalues drawn uniformly from the disk.
    NormalPrescribed,
    /// `C·I + (R/√d)·G`, `G` iid standard Gaussian. Not normal.
    IidGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskEnsembleSpec {
    pub d: usize,
    pub center: f64,
    pub radius: f64,
    pub mode: DiskMode,
    pub init_scale: f64,
    pub seed: u64,
}

impl DiskEnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || !self.d.is_multiple_of(2) {
            return Err(invalid("d", format!("must be a positive even integer, got {}", self.d)));
        }
        if !(self.center.is_finite() && self.center > 0.0) {
            return Err(invalid("center", "must be finite and positive"));
        }
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(invalid("radius", "must be finite and positive"));
        }
        if self.radius >= self.center {
            return Err(invalid(
                "radius",
                format!("R < C is required, got R = {} and C = {}", self.radius, self.center),
            ));
        }
        check_init_scale(self.init_scale)
    }
}

fn check_init_scale(s: f64) -> Result<()> {
    if s.is_finite() && s > 0.0 {
        Ok(())
    } else {
        Err(invalid("init_scale", format!("must be finite and positive, got {s}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InstanceKind {
    Bilinear { d1: usize, d2: usize },
    Disk { mode: DiskMode },
    Custom,
}

/// A concrete affine root-finding problem.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    matrix: DMatrix<f64>,
    x_star: DVector<f64>,
    x0: DVector<f64>,
    kernel_projector: DMatrix<f64>,
    operator_norm: f64,
    init_scale: f64,
    kind: InstanceKind,
    sampled_spectrum: Option<Vec<Complex64>>,
}

impl ProblemInstance {
    /// Builds an instance from explicit data; the kernel projector is computed
    /// from an SVD of `matrix`.
    pub fn new(matrix: DMatrix<f64>, x_star: DVector<f64>, x0: DVector<f64>, init_scale: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("matrix", "must be square"));
        }
        let d = matrix.nrows();
        ensure_dim(d, x_star.len())?;
        ensure_dim(d, x0.len())?;
        check_init_scale(init_scale)?;
        let (kernel_projector, operator_norm) = kernel_and_norm(&matrix);
        Ok(Self {
            matrix,
            x_star,
            x0,
            kernel_projector,
            operator_norm,
            init_scale,
            kind: InstanceKind::Custom,
            sampled_spectrum: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn x_star(&self) -> &DVector<f64> {
        &self.x_star
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn kernel_projector(&self) -> &DMatrix<f64> {
        &self.kernel_projector
    }

    /// Largest singular value `‖A‖₂`.
    pub fn operator_norm(&self) -> f64 {
        self.operator_norm
    }

    pub fn init_scale(&self) -> f64 {
        self.init_scale
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    /// Eigenvalues drawn during construction (both members of every conjugate
    /// pair), for prescribed-spectrum ensembles only.
    pub fn sampled_spectrum(&self) -> Option<&[Complex64]> {
        self.sampled_spectrum.as_deref()
    }

    /// Same operator and kernel, different anchor points.
    pub fn with_points(&self, x_star: DVector<f64>, x0: DVector<f64>) -> Result<Self> {
        ensure_dim(self.dim(), x_star.len())?;
        ensure_dim(self.dim(), x0.len())?;
        Ok(Self {
            x_star,
            x0,
            ..self.clone()
        })
    }

    /// `F(x) = A(x − x*)`.
    pub fn field(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim(self.dim(), x.len())?;
        Ok(self.field_unchecked(x))
    }

    pub(crate) fn field_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * (x - &self.x_star)
    }

    /// `F(x − F(x)) − F(x)`, the gradient of `½‖F(x)‖²` for affine `F` and
    /// skew-symmetric `A`; costs two field evaluations.
    pub fn hamiltonian_field(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_dim(self.dim(), x.len())?;
        Ok(self.hamiltonian_field_unchecked(x))
    }

    pub(crate) fn hamiltonian_field_unchecked(&self, x: &DVector<f64>) -> DVector<f64> {
        let fx = self.field_unchecked(x);
        let shifted = x - &fx;
        self.field_unchecked(&shifted) - fx
    }

    /// `½‖F(x)‖²`.
    pub fn hamiltonian_value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(0.5 * self.field(x)?.norm_squared())
    }

    /// Squared distance `‖(I − Π)(x − x*)‖²` to the solution set.
    pub fn distance_to_solution(&self, x: &DVector<f64>) -> Result<f64> {
        ensure_dim(self.dim(), x.len())?;
        Ok(self.distance_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: &DVector<f64>) -> f64 {
        let e = x - &self.x_star;
        let r = &e - &self.kernel_projector * &e;
        r.norm_squared()
    }

    /// `max |A + Aᵀ|`.
    pub fn skew_defect(&self) -> f64 {
        (&self.matrix + self.matrix.transpose()).amax()
    }
}

/// Orthogonal projector onto the numerical kernel of `a`.
pub fn kernel_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    kernel_and_norm(a).0
}

fn kernel_and_norm(a: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let d = a.ncols();
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smax = svd.singular_values.max();
    let cutoff = KERNEL_RTOL * smax;
    let mut proj = DMatrix::zeros(d, d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if smax == 0.0 || s <= cutoff {
            let v = v_t.row(i).transpose();
            proj += &v * v.transpose();
        }
    }
    (proj, smax)
}

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(d, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    // Column-major fill order; fixed so that seeds are reproducible.
    DMatrix::from_fn(rows, cols, |_, _| scale * rng.sample::<f64, _>(StandardNormal))
}

/// Draws `x*` (standard Gaussian) and `x₀ = x* + e` with `e ~ N(0, s²/d · I)`.
fn sample_points(rng: &mut ChaCha8Rng, d: usize, init_scale: f64) -> (DVector<f64>, DVector<f64>) {
    let x_star = gaussian_vector(rng, d, 1.0);
    let offset = gaussian_vector(rng, d, init_scale / (d as f64).sqrt());
    let x0 = &x_star + offset;
    (x_star, x0)
}

/// Bilinear game instance with `M ∈ ℝ^{d₁×d₂}`, entries `N(0, σ²/d₂)`.
pub fn make_bilinear_instance(spec: &BilinearGameSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (d1, d2) = (spec.d1, spec.d2);
    let m = gaussian_matrix(&mut rng, d1, d2, (spec.sigma2 / d2 as f64).sqrt());
    let d = d1 + d2;
    let mut a = DMatrix::zeros(d, d);
    a.view_mut((0, d1), (d1, d2)).copy_from(&m);
    a.view_mut((d1, 0), (d2, d1)).copy_from(&(-m.transpose()));
    let (x_star, x0) = sample_points(&mut rng, d, spec.init_scale);
    let mut inst = ProblemInstance::new(a, x_star, x0, spec.init_scale)?;
    inst.kind = InstanceKind::Bilinear { d1, d2 };
    Ok(inst)
}

/// Disk-ensemble instance; see [`DiskMode`].
pub fn make_disk_instance(spec: &DiskEnsembleSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.d;
    let (a, spectrum) = match spec.mode {
        DiskMode::NormalPrescribed => {
            let half = d / 2;
            let mut eig = Vec::with_capacity(d);
            let mut blocks = DMatrix::zeros(d, d);
            for k in 0..half {
                let rad = spec.radius * rng.gen::<f64>().sqrt();
                let theta = std::f64::consts::PI * rng.gen::<f64>();
                let re = spec.center + rad * theta.cos();
                let im = rad * theta.sin();
                let i = 2 * k;
                blocks[(i, i)] = re;
                blocks[(i, i + 1)] = im;
                blocks[(i + 1, i)] = -im;
                blocks[(i + 1, i + 1)] = re;
                eig.push(Complex64::new(re, im));
                eig.push(Complex64::new(re, -im));
            }
            let q = haar_orthogonal(&mut rng, d);
            let a = &q * blocks * q.transpose();
            (a, Some(eig))
        }
        DiskMode::IidGaussian => {
            let g = gaussian_matrix(&mut rng, d, d, spec.radius / (d as f64).sqrt());
            let a = DMatrix::identity(d, d) * spec.center + g;
            (a, None)
        }
    };
    let (x_star, x0) = sample_points(&mut rng, d, spec.init_scale);
    let mut inst = ProblemInstance::new(a, x_star, x0, spec.init_scale)?;
    inst.kind = InstanceKind::Disk { mode: spec.mode };
    inst.sampled_spectrum = spectrum;
    Ok(inst)
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the signs
/// of `R`'s diagonal folded into `Q`.
fn haar_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, d, d, 1.0);
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn bilinear(d1: usize, d2: usize, seed: u64) -> ProblemInstance {
        make_bilinear_instance(&BilinearGameSpec {
            d1,
            d2,
            sigma2: 1.0,
            init_scale: 1.0,
            seed,
        })
        .unwrap()
    }

    fn identity_instance() -> ProblemInstance {
        ProblemInstance::new(
            DMatrix::identity(3, 3),
            DVector::zeros(3),
            DVector::from_vec(vec![1.0, 0.0, 0.0]),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn bilinear_block_is_exactly_skew() {
        let inst = bilinear(2, 3, 7);
        assert_eq!(inst.dim(), 5);
        assert_eq!(inst.matrix().transpose(), -inst.matrix().clone());
        assert_eq!(inst.skew_defect(), 0.0);
    }

    #[test]
    fn bilinear_kernel_dimension() {
        let inst = bilinear(40, 60, 3);
        let svd = inst.matrix().clone().svd(false, false);
        let smax = svd.singular_values.max();
        let zeros = svd.singular_values.iter().filter(|&&s| s <= 1e-8 * smax).count();
        assert_eq!(zeros, 20);
        let trace: f64 = inst.kernel_projector().trace();
        assert!((trace - 20.0).abs() < 1e-9);
    }

    #[test]
    fn bilinear_gram_spectrum_within_mp_edge() {
        let inst = bilinear(100, 100, 11);
        let m = inst.matrix().view((0, 100), (100, 100)).clone_owned();
        let eig = (&m * m.transpose()).symmetric_eigenvalues();
        assert!(eig.iter().all(|&l| (-1e-10..=4.8).contains(&l)), "{eig:?}");
    }

    #[test]
    fn rejects_bad_specs() {
        let mut spec = BilinearGameSpec {
            d1: 0,
            d2: 3,
            sigma2: 1.0,
            init_scale: 1.0,
            seed: 0,
        };
        assert!(make_bilinear_instance(&spec).is_err());
        spec.d1 = 2;
        spec.d2 = 0;
        assert!(make_bilinear_instance(&spec).is_err());
        spec.d2 = 3;
        spec.sigma2 = f64::NAN;
        assert!(make_bilinear_instance(&spec).is_err());

        let mut disk = DiskEnsembleSpec {
            d: 7,
            center: 2.0,
            radius: 1.0,
            mode: DiskMode::NormalPrescribed,
            init_scale: 1.0,
            seed: 0,
        };
        assert!(make_disk_instance(&disk).is_err());
        disk.d = 8;
        disk.radius = 2.0;
        let err = make_disk_instance(&disk).unwrap_err();
        assert!(err.to_string().contains("R < C"));
    }

    #[test]
    fn normal_prescribed_is_normal_and_in_disk() {
        let spec = DiskEnsembleSpec {
            d: 16,
            center: 2.0,
            radius: 1.0,
            mode: DiskMode::NormalPrescribed,
            init_scale: 1.0,
            seed: 5,
        };
        let inst = make_disk_instance(&spec).unwrap();
        let a = inst.matrix();
        let comm = (a * a.transpose() - a.transpose() * a).amax();
        assert!(comm <= 1e-10 * a.amax().powi(2));
        for l in a.complex_eigenvalues().iter() {
            assert!((l - Complex64::new(2.0, 0.0)).norm() <= 1.0 + 1e-10);
        }
        assert_eq!(inst.sampled_spectrum().unwrap().len(), 16);
    }

    #[test]
    fn iid_disk_concentrates_on_circle() {
        let spec = DiskEnsembleSpec {
            d: 500,
            center: 2.0,
            radius: 1.0,
            mode: DiskMode::IidGaussian,
            init_scale: 1.0,
            seed: 1,
        };
        let inst = make_disk_instance(&spec).unwrap();
        let eig = inst.matrix().complex_eigenvalues();
        let outside = eig
            .iter()
            .filter(|l| (*l - Complex64::new(2.0, 0.0)).norm() > 1.1)
            .count();
        assert!(outside as f64 <= 0.02 * 500.0, "{outside} eigenvalues outside");
    }

    #[test]
    fn field_basics() {
        let inst = identity_instance();
        let e1 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(inst.field(&e1).unwrap(), e1);
        assert_eq!(inst.hamiltonian_value(&e1).unwrap(), 0.5);
        assert_eq!(inst.field(inst.x_star()).unwrap(), DVector::zeros(3));
        assert_eq!(inst.distance_to_solution(inst.x_star()).unwrap(), 0.0);
        assert!(matches!(
            inst.field(&DVector::zeros(2)),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
        assert!(inst.hamiltonian_field(&DVector::zeros(4)).is_err());
        assert!(inst.distance_to_solution(&DVector::zeros(4)).is_err());
        assert!(inst.hamiltonian_value(&DVector::zeros(1)).is_err());
    }

    #[test]
    fn field_matches_dense_product() {
        let inst = bilinear(3, 5, 9);
        let x = DVector::from_fn(8, |i, _| (i as f64).sin());
        let got = inst.field(&x).unwrap();
        let a = inst.matrix();
        for i in 0..8 {
            let mut s = 0.0;
            for j in 0..8 {
                s += a[(i, j)] * (x[j] - inst.x_star()[j]);
            }
            assert!((got[i] - s).abs() <= 1e-14);
        }
        let h: f64 = 0.5 * got.iter().map(|v| v * v).sum::<f64>();
        assert!((inst.hamiltonian_value(&x).unwrap() - h).abs() <= 1e-14);
    }

    #[test]
    fn hamiltonian_field_matches_gram_and_finite_differences() {
        let inst = bilinear(4, 6, 21);
        let x = DVector::from_fn(10, |i, _| (0.3 * i as f64).cos());
        let g = inst.hamiltonian_field(&x).unwrap();
        let a = inst.matrix();
        let gram = a.transpose() * a * (&x - inst.x_star());
        assert!((&g - &gram).amax() <= 1e-10);
        let h = 1e-5;
        for i in 0..10 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (inst.hamiltonian_value(&xp).unwrap() - inst.hamiltonian_value(&xm).unwrap()) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-6, "coordinate {i}: {fd} vs {}", g[i]);
        }
        assert_eq!(inst.hamiltonian_field(inst.x_star()).unwrap(), DVector::zeros(10));
    }

    #[test]
    fn distance_matches_least_squares_over_kernel() {
        let inst = bilinear(3, 5, 4);
        let pi = inst.kernel_projector();
        let x = DVector::from_fn(8, |i, _| 1.0 + i as f64);
        let e = &x - inst.x_star();
        // min_w ‖e − Π w‖² through an independent least-squares solve.
        let w = pi.clone().svd(true, true).solve(&e, 1e-12).unwrap();
        let best = (&e - pi * w).norm_squared();
        let got = inst.distance_to_solution(&x).unwrap();
        assert!((got - best).abs() <= 1e-10 * best.max(1.0));
        // Shifting along the kernel keeps the distance.
        let shifted = &x + pi * DVector::from_element(8, 3.0);
        assert!((inst.distance_to_solution(&shifted).unwrap() - got).abs() <= 1e-10);
    }

    #[test]
    fn operator_norm_is_top_singular_value() {
        let inst = make_bilinear_instance(&BilinearGameSpec {
            d1: 7,
            d2: 11,
            sigma2: 2.0,
            init_scale: 1.0,
            seed: 4,
        })
        .unwrap();
        let m = inst.matrix().view((0, 7), (7, 11)).into_owned();
        let top = (&m * m.transpose()).symmetric_eigen().eigenvalues.max();
        assert!((inst.operator_norm().powi(2) - top).abs() <= 1e-12 * top);
    }

    #[test]
    fn full_rank_distance_is_plain_norm() {
        let spec = DiskEnsembleSpec {
            d: 8,
            center: 2.0,
            radius: 1.0,
            mode: DiskMode::NormalPrescribed,
            init_scale: 1.0,
            seed: 3,
        };
        let inst = make_disk_instance(&spec).unwrap();
        assert_eq!(inst.kernel_projector().amax(), 0.0);
        let d = (inst.x0() - inst.x_star()).norm_squared();
        assert!((inst.distance_to_solution(inst.x0()).unwrap() - d).abs() <= 1e-12);
    }

    #[test]
    fn seeded_construction_is_reproducible() {
        let a = bilinear(5, 7, 99);
        let b = bilinear(5, 7, 99);
        assert_eq!(a.matrix(), b.matrix());
        assert_eq!(a.x0(), b.x0());
        assert_eq!(a.x_star(), b.x_star());
        let c = bilinear(5, 7, 100);
        assert_ne!(a.matrix(), c.matrix());
    }
}
