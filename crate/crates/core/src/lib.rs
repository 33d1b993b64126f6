//! Average-case optimal first-order methods for affine operators
//! `F(x) = A(x − x*)` with non-symmetric `A`.
//!
//! The crate covers two families:
//!
//! * bilinear zero-sum games, solved by Hamiltonian gradient descent with
//!   momentum whose coefficients are optimal when `M·Mᵀ` follows the
//!   Marchenko–Pastur law, plus its constant-coefficient (Polyak) limit;
//! * normal operators whose spectrum is circularly symmetric on a disk,
//!   solved by a running weighted average of gradient-descent iterates.
//!
//! Alongside the methods it provides the random ensembles, closed-form rate
//! predictions, independent optimality oracles, and the benchmark harness
//! behind the `avgopt` command-line tool.

pub mod bench;
pub mod error;
pub mod polynomial;
pub mod problem;
pub mod quadrature;
pub mod rates;
pub mod recurrence;
pub mod solvers;
pub mod spectra;

pub use error::{Error, Result};
pub use polynomial::ResidualPolynomial;
pub use problem::{
    make_bilinear_instance, make_disk_instance, BilinearGameSpec, DiskEnsembleSpec, DiskMode, ProblemInstance,
};
pub use recurrence::{AveragingWeights, MpCoefficients, ThreeTermRecurrence};
pub use solvers::{FieldKind, MethodSpec, Trajectory};
pub use spectra::{DiskDistribution, EmpiricalSpectrum, MarchenkoPastur, SpectralModel};

pub use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64;
