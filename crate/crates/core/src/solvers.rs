//! Iterative methods and the distance trajectories they produce.
//!
//! Every method is a first-order method: after `t` outer iterations
//! `x_t − x* = P_t(A)(x₀ − x*)` for a residual polynomial `P_t`. Trajectories
//! record `dist(x_t, X*)` for `t = 0..=T` together with the cumulative number
//! of operator evaluations.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::problem::ProblemInstance;
use crate::recurrence::{AveragingWeights, MpCoefficients, ThreeTermRecurrence};

/// A run is cut short once its distance exceeds this multiple of `dist[0]`
/// (or turns non-finite; a run started at the solution only has the latter).
pub const DIVERGENCE_FACTOR: f64 = 1e12;

fn blew_up(d: f64, d0: f64) -> bool {
    !d.is_finite() || (d0 > 0.0 && d > DIVERGENCE_FACTOR * d0)
}

/// Vector field a gradient-type baseline follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    /// `F(x)` itself.
    Operator,
    /// `F(x − F(x)) − F(x)`, the gradient of the Hamiltonian `½‖F‖²`.
    Hamiltonian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MethodSpec {
    /// Hamiltonian gradient descent with the Marchenko–Pastur optimal
    /// step sizes and momenta.
    AvgOptBilinear(MpCoefficients),
    /// Constant-coefficient (Polyak) limit of [`MethodSpec::AvgOptBilinear`].
    AsympBilinearPolyak { edge_low: f64, edge_high: f64 },
    /// Averaged three-term recurrence.
    AvgOptGeneric {
        recurrence: ThreeTermRecurrence,
        weights: AveragingWeights,
    },
    /// Constant averaging `(R/C)²` over gradient descent with step `1/C`.
    AsympDisk { center: f64, radius: f64 },
    GradientDescent { step: f64, field: FieldKind },
    Extragradient { step: f64 },
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::AvgOptBilinear(_) => "avg-opt-bilinear",
            MethodSpec::AsympBilinearPolyak { .. } => "asymp-bilinear-polyak",
            MethodSpec::AvgOptGeneric { .. } => "avg-opt-generic",
            MethodSpec::AsympDisk { .. } => "asymp-disk",
            MethodSpec::GradientDescent {
                field: FieldKind::Operator,
                ..
            } => "gd",
            MethodSpec::GradientDescent {
                field: FieldKind::Hamiltonian,
                ..
            } => "hamiltonian-gd",
            MethodSpec::Extragradient { .. } => "extragradient",
        }
    }

    /// Operator evaluations per outer iteration.
    pub fn evals_per_iteration(&self) -> u64 {
        match self {
            MethodSpec::AvgOptBilinear(_)
            | MethodSpec::AsympBilinearPolyak { .. }
            | MethodSpec::Extragradient { .. }
            | MethodSpec::GradientDescent {
                field: FieldKind::Hamiltonian,
                ..
            } => 2,
            _ => 1,
        }
    }

    pub fn run(&self, instance: &ProblemInstance, iters: usize) -> Result<Trajectory> {
        self.run_observed(instance, iters, |_, _| {})
    }

    /// Like [`MethodSpec::run`], also handing every iterate `x_t` to `observer`.
    pub fn run_observed<O>(&self, instance: &ProblemInstance, iters: usize, observer: O) -> Result<Trajectory>
    where
        O: FnMut(usize, &DVector<f64>),
    {
        match self {
            MethodSpec::AvgOptBilinear(c) => drive(instance, AvgOptBilinear::new(instance, c, iters)?, iters, observer),
            MethodSpec::AsympBilinearPolyak { edge_low, edge_high } => {
                drive(instance, Polyak::new(instance, *edge_low, *edge_high)?, iters, observer)
            }
            MethodSpec::AvgOptGeneric { recurrence, weights } => drive(
                instance,
                GenericAvgOpt::new(instance, recurrence, weights, iters)?,
                iters,
                observer,
            ),
            MethodSpec::AsympDisk { center, radius } => {
                drive(instance, AsympDisk::new(instance, *center, *radius)?, iters, observer)
            }
            MethodSpec::GradientDescent { step, field } => {
                drive(instance, GradientDescent::new(instance, *step, *field)?, iters, observer)
            }
            MethodSpec::Extragradient { step } => {
                drive(instance, Extragradient::new(instance, *step)?, iters, observer)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub method: String,
    pub dist: Vec<f64>,
    pub field_evals: Vec<u64>,
    /// Set when the run was truncated by the divergence guard; `dist` then
    /// ends at the first offending iterate.
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_dist(&self) -> f64 {
        *self.dist.last().unwrap()
    }
}

trait Iteration {
    fn name(&self) -> &'static str;
    fn evals_per_step(&self) -> u64;
    fn current(&self) -> &DVector<f64>;
    /// Advances from `x_{t−1}` to `x_t`.
    fn step(&mut self, instance: &ProblemInstance, t: usize);
}

fn drive<I, O>(instance: &ProblemInstance, mut it: I, iters: usize, mut observer: O) -> Result<Trajectory>
where
    I: Iteration,
    O: FnMut(usize, &DVector<f64>),
{
    let d0 = instance.distance_unchecked(it.current());
    observer(0, it.current());
    let mut dist = Vec::with_capacity(iters + 1);
    let mut field_evals = Vec::with_capacity(iters + 1);
    dist.push(d0);
    field_evals.push(0);
    let mut diverged = false;
    for t in 1..=iters {
        it.step(instance, t);
        let d = instance.distance_unchecked(it.current());
        observer(t, it.current());
        dist.push(d);
        field_evals.push(t as u64 * it.evals_per_step());
        if blew_up(d, d0) {
            diverged = true;
            break;
        }
    }
    Ok(Trajectory {
        method: it.name().to_string(),
        dist,
        field_evals,
        diverged,
    })
}

fn require_skew(instance: &ProblemInstance) -> Result<()> {
    let defect = instance.skew_defect();
    if defect > 1e-12 * instance.matrix().amax().max(1.0) {
        Err(Error::NotSkewSymmetric(defect))
    } else {
        Ok(())
    }
}

fn require_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(invalid("step", format!("must be finite and positive, got {step}")))
    }
}

fn require_disk(center: f64, radius: f64) -> Result<()> {
    if !(center.is_finite() && center > 0.0 && radius.is_finite() && radius >= 0.0) {
        return Err(invalid("center/radius", "must be finite with C > 0 and R >= 0"));
    }
    if radius >= center {
        return Err(invalid("radius", format!("R < C is required, got R = {radius} and C = {center}")));
    }
    Ok(())
}

/// `x_{t+1} = x_t − h_{t+1} g_t + m_{t+1}(x_{t−1} − x_t)`, `g_t` the
/// Hamiltonian field, `x_{−1} = x₀`.
struct AvgOptBilinear<'a> {
    coeffs: &'a MpCoefficients,
    prev: DVector<f64>,
    cur: DVector<f64>,
}

impl<'a> AvgOptBilinear<'a> {
    fn new(instance: &ProblemInstance, coeffs: &'a MpCoefficients, iters: usize) -> Result<Self> {
        require_skew(instance)?;
        if coeffs.horizon() < iters {
            return Err(Error::HorizonExceeded {
                horizon: coeffs.horizon(),
                requested: iters,
            });
        }
        Ok(Self {
            coeffs,
            prev: instance.x0().clone(),
            cur: instance.x0().clone(),
        })
    }
}

impl Iteration for AvgOptBilinear<'_> {
    fn name(&self) -> &'static str {
        "avg-opt-bilinear"
    }
    fn evals_per_step(&self) -> u64 {
        2
    }
    fn current(&self) -> &DVector<f64> {
        &self.cur
    }
    fn step(&mut self, instance: &ProblemInstance, t: usize) {
        let g = instance.hamiltonian_field_unchecked(&self.cur);
        let (h, m) = (self.coeffs.h[t], self.coeffs.m[t]);
        let next = &self.cur - g * h + (&self.prev - &self.cur) * m;
        self.prev = std::mem::replace(&mut self.cur, next);
    }
}

/// Heavy ball on the Hamiltonian field:
/// `x_{t+1} = x_t + μ(x_t − x_{t−1}) − η g_t` with
/// `μ = ((√L − √ℓ)/(√L + √ℓ))²`, `η = (2/(√L + √ℓ))²`.
struct Polyak {
    momentum: f64,
    step: f64,
    prev: DVector<f64>,
    cur: DVector<f64>,
}

/// `(momentum, step)` of the constant-coefficient bilinear method.
pub fn polyak_coefficients(edge_low: f64, edge_high: f64) -> Result<(f64, f64)> {
    if !(edge_low >= 0.0 && edge_high.is_finite() && edge_low < edge_high) {
        return Err(invalid(
            "edge_low/edge_high",
            format!("need 0 <= ℓ < L, got ℓ = {edge_low}, L = {edge_high}"),
        ));
    }
    let (sl, sh) = (edge_low.sqrt(), edge_high.sqrt());
    Ok((((sh - sl) / (sh + sl)).powi(2), (2.0 / (sh + sl)).powi(2)))
}

impl Polyak {
    fn new(instance: &ProblemInstance, edge_low: f64, edge_high: f64) -> Result<Self> {
        let (momentum, step) = polyak_coefficients(edge_low, edge_high)?;
        Ok(Self {
            momentum,
            step,
            prev: instance.x0().clone(),
            cur: instance.x0().clone(),
        })
    }
}

impl Iteration for Polyak {
    fn name(&self) -> &'static str {
        "asymp-bilinear-polyak"
    }
    fn evals_per_step(&self) -> u64 {
        2
    }
    fn current(&self) -> &DVector<f64> {
        &self.cur
    }
    fn step(&mut self, instance: &ProblemInstance, _t: usize) {
        let g = instance.hamiltonian_field_unchecked(&self.cur);
        let next = &self.cur + (&self.cur - &self.prev) * self.momentum - g * self.step;
        self.prev = std::mem::replace(&mut self.cur, next);
    }
}

/// `y_t = a_t y_{t−1} + (1 − a_t) y_{t−2} + b_t F(y_{t−1})`,
/// `x_t = (B_t x_{t−1} + β_t y_t)/(B_t + β_t)`.
struct GenericAvgOpt<'a> {
    rec: &'a ThreeTermRecurrence,
    weights: &'a AveragingWeights,
    y_prev: DVector<f64>,
    y: DVector<f64>,
    x: DVector<f64>,
}

impl<'a> GenericAvgOpt<'a> {
    fn new(
        instance: &ProblemInstance,
        rec: &'a ThreeTermRecurrence,
        weights: &'a AveragingWeights,
        iters: usize,
    ) -> Result<Self> {
        rec.check_horizon(iters)?;
        if weights.horizon() < iters {
            return Err(Error::HorizonExceeded {
                horizon: weights.horizon(),
                requested: iters,
            });
        }
        Ok(Self {
            rec,
            weights,
            y_prev: instance.x0().clone(),
            y: instance.x0().clone(),
            x: instance.x0().clone(),
        })
    }
}

impl Iteration for GenericAvgOpt<'_> {
    fn name(&self) -> &'static str {
        "avg-opt-generic"
    }
    fn evals_per_step(&self) -> u64 {
        1
    }
    fn current(&self) -> &DVector<f64> {
        &self.x
    }
    fn step(&mut self, instance: &ProblemInstance, t: usize) {
        let f = instance.field_unchecked(&self.y);
        let (a, b) = (self.rec.a(t), self.rec.b(t));
        let next = DVector::from_fn(self.y.len(), |i, _| (a * self.y[i] + (1.0 - a) * self.y_prev[i]) + b * f[i]);
        self.y_prev = std::mem::replace(&mut self.y, next);
        let frac = self.weights.averaging_fraction(t);
        if !(frac.is_finite() && frac > 0.0) {
            // β_t > 0 guarantees B_t + β_t > 0; a NaN here means corrupted weights.
            self.x.fill(f64::NAN);
            return;
        }
        self.x = &self.x * (1.0 - frac) + &self.y * frac;
    }
}

/// `y_t = y_{t−1} − F(y_{t−1})/C`, `x_t = (R/C)² x_{t−1} + (1 − (R/C)²) y_t`.
struct AsympDisk {
    inv_center: f64,
    keep: f64,
    y: DVector<f64>,
    x: DVector<f64>,
}

impl AsympDisk {
    fn new(instance: &ProblemInstance, center: f64, radius: f64) -> Result<Self> {
        require_disk(center, radius)?;
        Ok(Self {
            inv_center: 1.0 / center,
            keep: (radius / center).powi(2),
            y: instance.x0().clone(),
            x: instance.x0().clone(),
        })
    }
}

impl Iteration for AsympDisk {
    fn name(&self) -> &'static str {
        "asymp-disk"
    }
    fn evals_per_step(&self) -> u64 {
        1
    }
    fn current(&self) -> &DVector<f64> {
        &self.x
    }
    fn step(&mut self, instance: &ProblemInstance, _t: usize) {
        let f = instance.field_unchecked(&self.y);
        self.y.axpy(-self.inv_center, &f, 1.0);
        self.x = &self.x * self.keep + &self.y * (1.0 - self.keep);
    }
}

struct GradientDescent {
    step: f64,
    field: FieldKind,
    x: DVector<f64>,
}

impl GradientDescent {
    fn new(instance: &ProblemInstance, step: f64, field: FieldKind) -> Result<Self> {
        require_step(step)?;
        Ok(Self {
            step,
            field,
            x: instance.x0().clone(),
        })
    }
}

impl Iteration for GradientDescent {
    fn name(&self) -> &'static str {
        match self.field {
            FieldKind::Operator => "gd",
            FieldKind::Hamiltonian => "hamiltonian-gd",
        }
    }
    fn evals_per_step(&self) -> u64 {
        match self.field {
            FieldKind::Operator => 1,
            FieldKind::Hamiltonian => 2,
        }
    }
    fn current(&self) -> &DVector<f64> {
        &self.x
    }
    fn step(&mut self, instance: &ProblemInstance, _t: usize) {
        let g = match self.field {
            FieldKind::Operator => instance.field_unchecked(&self.x),
            FieldKind::Hamiltonian => instance.hamiltonian_field_unchecked(&self.x),
        };
        let eta = self.step;
        self.x.iter_mut().zip(g.iter()).for_each(|(x, g)| *x -= eta * g);
    }
}

struct Extragradient {
    step: f64,
    x: DVector<f64>,
}

impl Extragradient {
    fn new(instance: &ProblemInstance, step: f64) -> Result<Self> {
        require_step(step)?;
        Ok(Self {
            step,
            x: instance.x0().clone(),
        })
    }
}

impl Iteration for Extragradient {
    fn name(&self) -> &'static str {
        "extragradient"
    }
    fn evals_per_step(&self) -> u64 {
        2
    }
    fn current(&self) -> &DVector<f64> {
        &self.x
    }
    fn step(&mut self, instance: &ProblemInstance, _t: usize) {
        let half = &self.x - instance.field_unchecked(&self.x) * self.step;
        let f = instance.field_unchecked(&half);
        self.x.axpy(-self.step, &f, 1.0);
    }
}

pub fn run_avg_opt_bilinear(instance: &ProblemInstance, coeffs: &MpCoefficients, iters: usize) -> Result<Trajectory> {
    drive(instance, AvgOptBilinear::new(instance, coeffs, iters)?, iters, |_, _| {})
}

pub fn run_asymp_bilinear(instance: &ProblemInstance, edge_low: f64, edge_high: f64, iters: usize) -> Result<Trajectory> {
    drive(instance, Polyak::new(instance, edge_low, edge_high)?, iters, |_, _| {})
}

pub fn run_generic_avg_opt(
    instance: &ProblemInstance,
    rec: &ThreeTermRecurrence,
    weights: &AveragingWeights,
    iters: usize,
) -> Result<Trajectory> {
    drive(instance, GenericAvgOpt::new(instance, rec, weights, iters)?, iters, |_, _| {})
}

/// Runs the averaged method and also reports the distances of its inner
/// iterates `y_t`. Returns `(averaged, inner)`.
pub fn run_generic_avg_opt_with_inner(
    instance: &ProblemInstance,
    rec: &ThreeTermRecurrence,
    weights: &AveragingWeights,
    iters: usize,
) -> Result<(Trajectory, Trajectory)> {
    let mut it = GenericAvgOpt::new(instance, rec, weights, iters)?;
    let mut inner = Trajectory {
        method: "avg-opt-generic:inner".to_string(),
        dist: vec![instance.distance_unchecked(&it.y)],
        field_evals: vec![0],
        diverged: false,
    };
    let mut averaged = Trajectory {
        method: it.name().to_string(),
        dist: vec![instance.distance_unchecked(&it.x)],
        field_evals: vec![0],
        diverged: false,
    };
    let d0 = averaged.dist[0];
    for t in 1..=iters {
        it.step(instance, t);
        let dx = instance.distance_unchecked(&it.x);
        let dy = instance.distance_unchecked(&it.y);
        averaged.dist.push(dx);
        averaged.field_evals.push(t as u64);
        inner.dist.push(dy);
        inner.field_evals.push(t as u64);
        if blew_up(dx, d0) || blew_up(dy, d0) {
            averaged.diverged = true;
            inner.diverged = true;
            break;
        }
    }
    Ok((averaged, inner))
}

pub fn run_asymp_disk(instance: &ProblemInstance, center: f64, radius: f64, iters: usize) -> Result<Trajectory> {
    drive(instance, AsympDisk::new(instance, center, radius)?, iters, |_, _| {})
}

/// Plain gradient descent on `F`.
pub fn run_gradient_descent(instance: &ProblemInstance, step: f64, iters: usize) -> Result<Trajectory> {
    drive(
        instance,
        GradientDescent::new(instance, step, FieldKind::Operator)?,
        iters,
        |_, _| {},
    )
}

/// Gradient descent on the Hamiltonian `½‖F‖²`, the bilinear baseline.
pub fn run_hamiltonian_gradient_descent(instance: &ProblemInstance, step: f64, iters: usize) -> Result<Trajectory> {
    drive(
        instance,
        GradientDescent::new(instance, step, FieldKind::Hamiltonian)?,
        iters,
        |_, _| {},
    )
}

pub fn run_extragradient(instance: &ProblemInstance, step: f64, iters: usize) -> Result<Trajectory> {
    drive(instance, Extragradient::new(instance, step)?, iters, |_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{make_bilinear_instance, make_disk_instance, BilinearGameSpec, DiskEnsembleSpec, DiskMode};
    use crate::recurrence::{disk_recurrence, disk_weights, mp_coefficients};
    use nalgebra::DMatrix;

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

    fn disk(d: usize, seed: u64) -> ProblemInstance {
        make_disk_instance(&DiskEnsembleSpec {
            d,
            center: 2.0,
            radius: 1.0,
            mode: DiskMode::NormalPrescribed,
            init_scale: 1.0,
            seed,
        })
        .unwrap()
    }

    fn all_methods(inst: &ProblemInstance) -> Vec<MethodSpec> {
        let bil = matches!(inst.kind(), crate::problem::InstanceKind::Bilinear { .. });
        let mut out = vec![
            MethodSpec::AsympDisk {
                center: 2.0,
                radius: 1.0,
            },
            MethodSpec::AvgOptGeneric {
                recurrence: disk_recurrence(2.0).unwrap(),
                weights: disk_weights(2.0, 1.0, 40).unwrap(),
            },
            MethodSpec::GradientDescent {
                step: 0.5,
                field: FieldKind::Operator,
            },
            MethodSpec::GradientDescent {
                step: 0.5,
                field: FieldKind::Hamiltonian,
            },
            MethodSpec::Extragradient { step: 0.5 },
            MethodSpec::AsympBilinearPolyak {
                edge_low: 0.25,
                edge_high: 2.25,
            },
        ];
        if bil {
            out.push(MethodSpec::AvgOptBilinear(mp_coefficients(1.0, 1.0, 40).unwrap()));
        }
        out
    }

    #[test]
    fn fixed_point_stays_put() {
        for inst in [bilinear(3, 5, 1), disk(8, 2)] {
            let at_solution = inst.with_points(inst.x_star().clone(), inst.x_star().clone()).unwrap();
            for m in all_methods(&inst) {
                let tr = m.run(&at_solution, 20).unwrap();
                let scale = inst.x_star().norm_squared();
                assert!(tr.dist.iter().all(|&d| d <= 1e-28 * scale), "{} {:?}", m.name(), tr.dist);
                assert!(!tr.diverged);
            }
        }
    }

    #[test]
    fn field_eval_accounting() {
        let inst = bilinear(4, 4, 3);
        for m in all_methods(&inst) {
            let tr = m.run(&inst, 10).unwrap();
            assert_eq!(tr.dist.len(), 11);
            assert_eq!(tr.method, m.name());
            assert_eq!(tr.dist[0], inst.distance_to_solution(inst.x0()).unwrap());
            for t in 0..=10 {
                assert_eq!(tr.field_evals[t], t as u64 * m.evals_per_iteration());
            }
        }
    }

    #[test]
    fn affine_equivariance() {
        for inst in [bilinear(4, 6, 5), disk(10, 6)] {
            let c = DVector::from_element(inst.dim(), 3.25);
            let moved = inst.with_points(inst.x_star() + &c, inst.x0() + &c).unwrap();
            for m in all_methods(&inst) {
                let a = m.run(&inst, 15).unwrap();
                let b = m.run(&moved, 15).unwrap();
                for (x, y) in a.dist.iter().zip(&b.dist) {
                    assert!((x - y).abs() <= 1e-10 * x.max(a.dist[0]), "{} {x} {y}", m.name());
                }
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let inst = bilinear(6, 6, 8);
        for m in all_methods(&inst) {
            assert_eq!(m.run(&inst, 12).unwrap(), m.run(&inst, 12).unwrap());
        }
    }

    #[test]
    fn guards() {
        let inst = disk(8, 1);
        let coeffs = mp_coefficients(1.0, 1.0, 5).unwrap();
        assert!(matches!(
            run_avg_opt_bilinear(&inst, &coeffs, 3),
            Err(Error::NotSkewSymmetric(_))
        ));
        let bil = bilinear(3, 3, 1);
        assert!(matches!(
            run_avg_opt_bilinear(&bil, &coeffs, 6),
            Err(Error::HorizonExceeded { .. })
        ));
        assert!(run_asymp_bilinear(&bil, 1.0, 1.0, 3).is_err());
        let rec = disk_recurrence(2.0).unwrap();
        let w = disk_weights(2.0, 1.0, 3).unwrap();
        assert!(run_generic_avg_opt(&inst, &rec, &w, 4).is_err());
        assert!(run_asymp_disk(&inst, 1.0, 1.0, 3).is_err());
        assert!(run_gradient_descent(&inst, 0.0, 3).is_err());
        assert!(run_extragradient(&inst, -1.0, 3).is_err());
    }

    #[test]
    fn generic_with_only_initial_weight() {
        let inst = disk(6, 4);
        let rec = disk_recurrence(2.0).unwrap();
        let w = AveragingWeights::from_beta(&[1.0]).unwrap();
        let tr = run_generic_avg_opt(&inst, &rec, &w, 0).unwrap();
        assert_eq!(tr.dist, vec![inst.distance_to_solution(inst.x0()).unwrap()]);
    }

    #[test]
    fn gd_identity_converges_in_one_step() {
        let inst = ProblemInstance::new(
            DMatrix::identity(3, 3),
            DVector::zeros(3),
            DVector::from_vec(vec![1.0, -2.0, 0.5]),
            1.0,
        )
        .unwrap();
        let tr = run_gradient_descent(&inst, 1.0, 3).unwrap();
        assert_eq!(&tr.dist[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn plain_gd_on_skew_field_never_improves() {
        let inst = bilinear(4, 4, 2);
        for &eta in &[0.01, 0.5, 3.0] {
            let tr = run_gradient_descent(&inst, eta, 200).unwrap();
            for w in tr.dist.windows(2) {
                assert!(w[1] >= w[0] * (1.0 - 1e-12));
            }
        }
        let tr = run_gradient_descent(&inst, 3.0, 500).unwrap();
        assert!(tr.diverged);
        assert!(tr.dist.len() < 501);
    }

    #[test]
    fn polyak_hand_coefficients() {
        let (m, s) = polyak_coefficients(0.25, 2.25).unwrap();
        assert!((m - 0.25).abs() < 1e-15);
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extragradient_matches_two_step_reference() {
        let inst = bilinear(3, 5, 13);
        let eta = 0.4;
        let tr = run_extragradient(&inst, eta, 25).unwrap();
        let a = inst.matrix();
        let mut x: Vec<f64> = inst.x0().iter().copied().collect();
        let xs: Vec<f64> = inst.x_star().iter().copied().collect();
        let apply = |v: &[f64]| -> Vec<f64> {
            (0..8)
                .map(|i| (0..8).map(|j| a[(i, j)] * (v[j] - xs[j])).sum())
                .collect()
        };
        for t in 1..=25 {
            let f = apply(&x);
            let half: Vec<f64> = x.iter().zip(&f).map(|(x, f)| x - eta * f).collect();
            let f2 = apply(&half);
            x.iter_mut().zip(&f2).for_each(|(x, f)| *x -= eta * f);
            let xv = DVector::from_vec(x.clone());
            let d = inst.distance_to_solution(&xv).unwrap();
            assert!((d - tr.dist[t]).abs() <= 1e-14 * tr.dist[0].max(1.0));
        }
    }

    #[test]
    fn extragradient_monotone_on_small_bilinear() {
        let inst = bilinear(4, 4, 17);
        let (_, hi) = crate::spectra::mp_edges(1.0, 1.0).unwrap();
        let tr = run_extragradient(&inst, 1.0 / hi.sqrt(), 100).unwrap();
        for w in tr.dist.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn inner_iterates_equal_gradient_descent_bitwise() {
        let inst = disk(12, 9);
        let rec = disk_recurrence(2.0).unwrap();
        let w = disk_weights(2.0, 1.0, 30).unwrap();
        let (_, inner) = run_generic_avg_opt_with_inner(&inst, &rec, &w, 30).unwrap();
        let gd = run_gradient_descent(&inst, 1.0 / 2.0, 30).unwrap();
        assert_eq!(inner.dist, gd.dist);
    }

    #[test]
    fn bilinear_even_iterates_follow_scheme_polynomials() {
        let inst = bilinear(4, 4, 23);
        let coeffs = mp_coefficients(1.0, 1.0, 6).unwrap();
        let polys = coeffs.residual_polynomials();
        let a = inst.matrix();
        let gram = a.transpose() * a;
        let e0 = inst.x0() - inst.x_star();
        let mut iterates = Vec::new();
        MethodSpec::AvgOptBilinear(coeffs.clone())
            .run_observed(&inst, 6, |_, x| iterates.push(x - inst.x_star()))
            .unwrap();
        for t in 0..=6 {
            let expect = polys[t].apply_matrix(&gram, &e0);
            let err = (&iterates[t] - &expect).norm() / expect.norm();
            assert!(err <= 1e-8, "t={t}: {err:e}");
        }
    }
}
