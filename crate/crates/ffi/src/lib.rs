//! C ABI over `avgopt`.
//!
//! Conventions: every fallible call returns an [`AvgoptStatus`]; on failure
//! a message is available from [`avgopt_last_error_message`] on the same
//! thread. Instances are opaque handles released with
//! [`avgopt_instance_free`]. Arrays are caller-owned `(pointer, length)`
//! pairs; matrices are column-major. No call retains a caller pointer.
//! Enum-valued parameters are passed as `uint32_t` and validated, so an
//! out-of-range value is an error rather than undefined behaviour.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use avgopt::problem::{
    make_bilinear_instance, make_disk_instance, BilinearGameSpec, DiskEnsembleSpec, DiskMode, ProblemInstance,
};
use avgopt::recurrence::{disk_recurrence, disk_weights, mp_coefficients};
use avgopt::solvers::{FieldKind, MethodSpec, Trajectory};
use avgopt::{rates, DVector, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgoptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    BufferTooSmall = 4,
    HorizonExceeded = 5,
    Numerical = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgoptDiskMode {
    NormalPrescribed = 0,
    IidGaussian = 1,
}

/// Opaque problem instance.
pub struct AvgoptInstance {
    inner: ProblemInstance,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: AvgoptStatus, msg: impl Into<String>) -> AvgoptStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> AvgoptStatus {
    match err {
        Error::DimensionMismatch { .. } => AvgoptStatus::DimensionMismatch,
        Error::HorizonExceeded { .. } => AvgoptStatus::HorizonExceeded,
        Error::NotResidual(_) | Error::NotSkewSymmetric(_) | Error::RankDeficient { .. } => AvgoptStatus::Numerical,
        Error::InvalidParameter { .. } | Error::Config(_) => AvgoptStatus::InvalidArgument,
        _ => AvgoptStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), AvgoptStatus>>(f: F) -> AvgoptStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AvgoptStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(AvgoptStatus::Internal, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, AvgoptStatus>;
}

impl<T> OrStatus<T> for avgopt::Result<T> {
    fn or_status(self) -> Result<T, AvgoptStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn instance<'a>(p: *const AvgoptInstance) -> Result<&'a ProblemInstance, AvgoptStatus> {
    p.as_ref()
        .map(|h| &h.inner)
        .ok_or_else(|| fail(AvgoptStatus::NullPointer, "instance handle is null"))
}

unsafe fn input<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], AvgoptStatus> {
    if p.is_null() {
        return Err(fail(AvgoptStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, need: usize, name: &str) -> Result<&'a mut [f64], AvgoptStatus> {
    if p.is_null() {
        return Err(fail(AvgoptStatus::NullPointer, format!("{name} is null")));
    }
    if len < need {
        return Err(fail(
            AvgoptStatus::BufferTooSmall,
            format!("{name} holds {len} values, {need} required"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_dim(inst: &ProblemInstance, len: usize) -> Result<(), AvgoptStatus> {
    if len != inst.dim() {
        return Err(fail(
            AvgoptStatus::DimensionMismatch,
            format!("expected length {}, got {len}", inst.dim()),
        ));
    }
    Ok(())
}

unsafe fn store_handle(out: *mut *mut AvgoptInstance, inner: ProblemInstance) {
    *out = Box::into_raw(Box::new(AvgoptInstance { inner }));
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn avgopt_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of an [`AvgoptStatus`] value.
#[no_mangle]
pub extern "C" fn avgopt_status_string(status: u32) -> *const c_char {
    use AvgoptStatus::*;
    let s: &'static [u8] = match status {
        x if x == Ok as u32 => b"ok\0",
        x if x == NullPointer as u32 => b"null pointer\0",
        x if x == InvalidArgument as u32 => b"invalid argument\0",
        x if x == DimensionMismatch as u32 => b"dimension mismatch\0",
        x if x == BufferTooSmall as u32 => b"buffer too small\0",
        x if x == HorizonExceeded as u32 => b"horizon exceeded\0",
        x if x == Numerical as u32 => b"numerical failure\0",
        x if x == Internal as u32 => b"internal error\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Random bilinear game `A = [[0, M], [−Mᵀ, 0]]`, `M` of size `d1 × d2`.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn avgopt_bilinear_instance_new(
    d1: usize,
    d2: usize,
    sigma2: f64,
    init_scale: f64,
    seed: u64,
    out: *mut *mut AvgoptInstance,
) -> AvgoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AvgoptStatus::NullPointer, "out is null"));
        }
        let inst = make_bilinear_instance(&BilinearGameSpec {
            d1,
            d2,
            sigma2,
            init_scale,
            seed,
        })
        .or_status()?;
        store_handle(out, inst);
        Ok(())
    })
}

/// Random operator with spectrum on the disk of centre `center`, radius
/// `radius`; `mode` is an [`AvgoptDiskMode`] value.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn avgopt_disk_instance_new(
    d: usize,
    center: f64,
    radius: f64,
    mode: u32,
    init_scale: f64,
    seed: u64,
    out: *mut *mut AvgoptInstance,
) -> AvgoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AvgoptStatus::NullPointer, "out is null"));
        }
        let mode = match mode {
            m if m == AvgoptDiskMode::NormalPrescribed as u32 => DiskMode::NormalPrescribed,
            m if m == AvgoptDiskMode::IidGaussian as u32 => DiskMode::IidGaussian,
            m => return Err(fail(AvgoptStatus::InvalidArgument, format!("unknown disk mode {m}"))),
        };
        let inst = make_disk_instance(&DiskEnsembleSpec {
            d,
            center,
            radius,
            mode,
            init_scale,
            seed,
        })
        .or_status()?;
        store_handle(out, inst);
        Ok(())
    })
}

/// Instance from explicit data: `matrix` is `d × d` column-major.
///
/// # Safety
/// `matrix` must hold `d*d` values, `x_star` and `x0` `d` values each, and
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn avgopt_instance_from_data(
    d: usize,
    matrix: *const f64,
    x_star: *const f64,
    x0: *const f64,
    out: *mut *mut AvgoptInstance,
) -> AvgoptStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(AvgoptStatus::NullPointer, "out is null"));
        }
        let n = d
            .checked_mul(d)
            .ok_or_else(|| fail(AvgoptStatus::InvalidArgument, "d*d overflows"))?;
        let a = avgopt::DMatrix::from_column_slice(d, d, input(matrix, n, "matrix")?);
        let xs = DVector::from_column_slice(input(x_star, d, "x_star")?);
        let x0 = DVector::from_column_slice(input(x0, d, "x0")?);
        let inst = ProblemInstance::new(a, xs, x0, 1.0).or_status()?;
        store_handle(out, inst);
        Ok(())
    })
}

/// Releases an instance. NULL is ignored.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn avgopt_instance_free(handle: *mut AvgoptInstance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Dimension of the instance, 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live instance.
#[no_mangle]
pub unsafe extern "C" fn avgopt_instance_dim(handle: *const AvgoptInstance) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.dim())
}

/// Copies the solution `x*` into `out` (`len ≥ dim`).
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_instance_x_star(handle: *const AvgoptInstance, out: *mut f64, len: usize) -> AvgoptStatus {
    guard(|| {
        let inst = instance(handle)?;
        let dst = output(out, len, inst.dim(), "out")?;
        dst[..inst.dim()].copy_from_slice(inst.x_star().as_slice());
        Ok(())
    })
}

/// Copies the initial point `x₀` into `out` (`len ≥ dim`).
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_instance_x0(handle: *const AvgoptInstance, out: *mut f64, len: usize) -> AvgoptStatus {
    guard(|| {
        let inst = instance(handle)?;
        let dst = output(out, len, inst.dim(), "out")?;
        dst[..inst.dim()].copy_from_slice(inst.x0().as_slice());
        Ok(())
    })
}

/// Copies `A` column-major into `out` (`len ≥ dim²`).
///
/// # Safety
/// `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_instance_matrix(handle: *const AvgoptInstance, out: *mut f64, len: usize) -> AvgoptStatus {
    guard(|| {
        let inst = instance(handle)?;
        let n = inst.dim() * inst.dim();
        let dst = output(out, len, n, "out")?;
        dst[..n].copy_from_slice(inst.matrix().as_slice());
        Ok(())
    })
}

unsafe fn map_vector(
    handle: *const AvgoptInstance,
    x: *const f64,
    len: usize,
    out: *mut f64,
    f: impl FnOnce(&ProblemInstance, &DVector<f64>) -> avgopt::Result<DVector<f64>>,
) -> AvgoptStatus {
    guard(|| {
        let inst = instance(handle)?;
        check_dim(inst, len)?;
        let x = DVector::from_column_slice(input(x, len, "x")?);
        let y = f(inst, &x).or_status()?;
        output(out, len, len, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// `out = F(x) = A(x − x*)`; `x` and `out` have length `len = dim`.
///
/// # Safety
/// `x` and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_field(handle: *const AvgoptInstance, x: *const f64, len: usize, out: *mut f64) -> AvgoptStatus {
    map_vector(handle, x, len, out, |i, x| i.field(x))
}

/// `out = F(x − F(x)) − F(x) = AᵀA(x − x*)` for skew-symmetric `A`.
///
/// # Safety
/// `x` and `out` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_hamiltonian_field(
    handle: *const AvgoptInstance,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> AvgoptStatus {
    map_vector(handle, x, len, out, |i, x| i.hamiltonian_field(x))
}

/// Squared distance from `x` to the solution set.
///
/// # Safety
/// `x` must hold `len` values and `out` be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn avgopt_distance(
    handle: *const AvgoptInstance,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> AvgoptStatus {
    guard(|| {
        let inst = instance(handle)?;
        check_dim(inst, len)?;
        let x = DVector::from_column_slice(input(x, len, "x")?);
        let d = inst.distance_to_solution(&x).or_status()?;
        *output(out, 1, 1, "out")?.first_mut().expect("len 1") = d;
        Ok(())
    })
}

/// Method selector for [`avgopt_run`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgoptMethod {
    /// `p0 = σ²`, `p1 = r = d₁/d₂`.
    AvgOptBilinear = 0,
    /// `p0 = ℓ`, `p1 = L`.
    AsympBilinearPolyak = 1,
    /// `p0 = C`, `p1 = R`.
    AvgOptDisk = 2,
    /// `p0 = C`, `p1 = R`.
    AsympDisk = 3,
    /// `p0 = step`.
    GradientDescent = 4,
    /// `p0 = step`, on the Hamiltonian field.
    HamiltonianGradientDescent = 5,
    /// `p0 = step`.
    Extragradient = 6,
}

impl AvgoptMethod {
    fn from_raw(v: u32) -> Option<Self> {
        use AvgoptMethod::*;
        [
            AvgOptBilinear,
            AsympBilinearPolyak,
            AvgOptDisk,
            AsympDisk,
            GradientDescent,
            HamiltonianGradientDescent,
            Extragradient,
        ]
        .into_iter()
        .find(|m| *m as u32 == v)
    }
}

fn method_spec(method: AvgoptMethod, p0: f64, p1: f64, iters: usize) -> avgopt::Result<MethodSpec> {
    Ok(match method {
        AvgoptMethod::AvgOptBilinear => MethodSpec::AvgOptBilinear(mp_coefficients(p0, p1, iters.max(1))?),
        AvgoptMethod::AsympBilinearPolyak => MethodSpec::AsympBilinearPolyak {
            edge_low: p0,
            edge_high: p1,
        },
        AvgoptMethod::AvgOptDisk => MethodSpec::AvgOptGeneric {
            recurrence: disk_recurrence(p0)?,
            weights: disk_weights(p0, p1, iters)?,
        },
        AvgoptMethod::AsympDisk => MethodSpec::AsympDisk { center: p0, radius: p1 },
        AvgoptMethod::GradientDescent => MethodSpec::GradientDescent {
            step: p0,
            field: FieldKind::Operator,
        },
        AvgoptMethod::HamiltonianGradientDescent => MethodSpec::GradientDescent {
            step: p0,
            field: FieldKind::Hamiltonian,
        },
        AvgoptMethod::Extragradient => MethodSpec::Extragradient { step: p0 },
    })
}

/// Runs the [`AvgoptMethod`] `method` for `iters` iterations from the
/// instance's `x₀` and writes `dist(x_t)`
/// for `t = 0..` into `dist` (`dist_len ≥ iters + 1`). A diverged run stops
/// early: `*written` tells how many values were stored and `*diverged` is
/// set. `evals_per_iteration` (optional) receives the operator evaluations
/// per iteration.
///
/// # Safety
/// `dist` must hold `dist_len` values; `written` and `diverged` must be
/// valid for writes; `evals_per_iteration` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn avgopt_run(
    handle: *const AvgoptInstance,
    method: u32,
    p0: f64,
    p1: f64,
    iters: usize,
    dist: *mut f64,
    dist_len: usize,
    written: *mut usize,
    diverged: *mut bool,
    evals_per_iteration: *mut u64,
) -> AvgoptStatus {
    guard(|| {
        let inst = instance(handle)?;
        if written.is_null() || diverged.is_null() {
            return Err(fail(AvgoptStatus::NullPointer, "written/diverged is null"));
        }
        let need = iters
            .checked_add(1)
            .ok_or_else(|| fail(AvgoptStatus::InvalidArgument, "iters overflows"))?;
        let dst = output(dist, dist_len, need, "dist")?;
        let method = AvgoptMethod::from_raw(method)
            .ok_or_else(|| fail(AvgoptStatus::InvalidArgument, format!("unknown method {method}")))?;
        let spec = method_spec(method, p0, p1, iters).or_status()?;
        let tr: Trajectory = spec.run(inst, iters).or_status()?;
        dst[..tr.dist.len()].copy_from_slice(&tr.dist);
        *written = tr.dist.len();
        *diverged = tr.diverged;
        if !evals_per_iteration.is_null() {
            *evals_per_iteration = spec.evals_per_iteration();
        }
        Ok(())
    })
}

/// Rate selector for [`avgopt_disk_rate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvgoptRate {
    Optimal = 0,
    Asymptotic = 1,
    GradientDescent = 2,
}

/// Expected `dist(x_t)` (unit initial scale) of a disk method; `rate` is an
/// [`AvgoptRate`] value.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn avgopt_disk_rate(
    rate: u32,
    center: f64,
    radius: f64,
    t: usize,
    out: *mut f64,
) -> AvgoptStatus {
    guard(|| {
        let v = match rate {
            r if r == AvgoptRate::Optimal as u32 => rates::xi_opt(center, radius, t),
            r if r == AvgoptRate::Asymptotic as u32 => rates::xi_asymp(center, radius, t),
            r if r == AvgoptRate::GradientDescent as u32 => rates::xi_gd(center, radius, t),
            r => return Err(fail(AvgoptStatus::InvalidArgument, format!("unknown rate {r}"))),
        }
        .or_status()?;
        *output(out, 1, 1, "out")?.first_mut().expect("len 1") = v;
        Ok(())
    })
}

/// `1 − R²/C²`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn avgopt_limiting_ratio(center: f64, radius: f64, out: *mut f64) -> AvgoptStatus {
    guard(|| {
        let v = rates::limiting_ratio(center, radius).or_status()?;
        *output(out, 1, 1, "out")?.first_mut().expect("len 1") = v;
        Ok(())
    })
}

/// Step sizes `h_t` and momenta `m_t`, `t = 0..=horizon`, of the
/// Marchenko–Pastur method (`len ≥ horizon + 1`).
///
/// # Safety
/// `h` and `m` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_mp_coefficients(
    sigma2: f64,
    r: f64,
    horizon: usize,
    h: *mut f64,
    m: *mut f64,
    len: usize,
) -> AvgoptStatus {
    guard(|| {
        let c = mp_coefficients(sigma2, r, horizon).or_status()?;
        let n = c.h.len();
        output(h, len, n, "h")?[..n].copy_from_slice(&c.h);
        output(m, len, n, "m")?[..n].copy_from_slice(&c.m);
        Ok(())
    })
}

/// Averaging weights `β_t` and `B_t`, `t = 0..=horizon`, of the disk method
/// (`len ≥ horizon + 1`). Large `t` may overflow to `inf`.
///
/// # Safety
/// `beta` and `big_b` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn avgopt_disk_weights(
    center: f64,
    radius: f64,
    horizon: usize,
    beta: *mut f64,
    big_b: *mut f64,
    len: usize,
) -> AvgoptStatus {
    guard(|| {
        let w = disk_weights(center, radius, horizon).or_status()?;
        let n = horizon + 1;
        let b = output(beta, len, n, "beta")?;
        let bb = output(big_b, len, n, "big_b")?;
        for t in 0..n {
            b[t] = w.beta(t);
            bb[t] = w.big_b(t);
        }
        Ok(())
    })
}
