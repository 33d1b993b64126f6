use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{BenchmarkConfig, EdgeSource, Experiment, MethodName, DEFAULT_RATIOS};
use crate::error::{Error, Result};
use crate::problem::{make_bilinear_instance, make_disk_instance, BilinearGameSpec, DiskEnsembleSpec, DiskMode, ProblemInstance};
use crate::rates::predictions;
use crate::recurrence::{disk_recurrence, disk_weights, mp_coefficients};
use crate::solvers::{FieldKind, MethodSpec, Trajectory};
use crate::spectra::mp_edges;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "BENCH_THREADS";

/// Extragradient step multipliers of `1/√L` tried by the grid search.
pub const EG_GRID: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// One `(run, t)` sample. A diverged run ends with a single row whose
/// `diverged` flag is set and whose `dist` is `+∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub method: String,
    pub seed: u64,
    pub t: usize,
    pub dist: f64,
    pub field_evals: u64,
    pub predicted: Option<f64>,
    pub diverged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOutput {
    pub rows: Vec<ResultRow>,
    /// Extragradient step as a multiple of `1/√L`, per experiment id (absent
    /// when an absolute step was configured).
    pub eg_steps: BTreeMap<String, f64>,
}

impl BenchmarkOutput {
    pub fn any_diverged(&self) -> bool {
        self.rows.iter().any(|r| r.diverged)
    }
}

enum Planned {
    Fixed(MethodSpec),
    /// Bilinear method whose coefficients depend on the instance's edges.
    Bilinear(MethodName),
    /// Extragradient with step `c/√L`, `c` picked afterwards from [`EG_GRID`].
    EgGrid,
}

struct Point {
    experiment: String,
    bilinear: Option<(BilinearGameSpec, EdgeSource)>,
    disk: Option<DiskEnsembleSpec>,
    plan: Vec<Planned>,
    /// Per-method `init²·ξ(t)`, only where a closed form applies.
    predicted: BTreeMap<&'static str, Vec<f64>>,
}

impl Point {
    fn instance(&self, seed: u64) -> Result<ProblemInstance> {
        match (&self.bilinear, &self.disk) {
            (Some((b, _)), _) => make_bilinear_instance(&BilinearGameSpec { seed, ..*b }),
            (_, Some(d)) => make_disk_instance(&DiskEnsembleSpec { seed, ..*d }),
            _ => unreachable!("every point has an ensemble"),
        }
    }
}

fn worker_count() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV}: expected a positive integer, got {v:?}"))),
        },
    }
}

/// `σ²` the bilinear methods are tuned for on this instance.
fn effective_sigma2(spec: &BilinearGameSpec, source: EdgeSource, inst: &ProblemInstance) -> f64 {
    match source {
        EdgeSource::Model => spec.sigma2,
        EdgeSource::Empirical => inst.operator_norm().powi(2) / (1.0 + spec.ratio().sqrt()).powi(2),
    }
}

fn bilinear_method(name: MethodName, cfg: &BenchmarkConfig, sigma2: f64, r: f64) -> Result<MethodSpec> {
    let (lo, hi) = mp_edges(sigma2, r)?;
    Ok(match name {
        MethodName::AvgOptBilinear => MethodSpec::AvgOptBilinear(mp_coefficients(sigma2, r, cfg.iters)?),
        MethodName::AsympBilinearPolyak => MethodSpec::AsympBilinearPolyak {
            edge_low: lo,
            edge_high: hi,
        },
        MethodName::Extragradient => MethodSpec::Extragradient {
            step: cfg.eg_step.unwrap_or(1.0 / hi.sqrt()),
        },
        MethodName::HamiltonianGd => MethodSpec::GradientDescent {
            step: 2.0 / (lo + hi),
            field: FieldKind::Hamiltonian,
        },
        other => unreachable!("{} rejected by validation", other.as_str()),
    })
}

fn plan_bilinear(cfg: &BenchmarkConfig) -> Result<Vec<Point>> {
    let d2 = cfg.d2.expect("validated");
    let sigma2 = cfg.sigma2.expect("validated");
    let source = cfg.edge_source.unwrap_or_default();
    let shapes: Vec<(String, usize)> = match &cfg.ratios {
        Some(ratios) => ratios
            .iter()
            .map(|&r| (format!("bilinear-r{r}"), ((r * d2 as f64).round() as usize).clamp(1, d2)))
            .collect(),
        None => vec![("bilinear".to_string(), cfg.d1.expect("validated"))],
    };
    shapes
        .into_iter()
        .map(|(experiment, d1)| {
            let spec = BilinearGameSpec {
                d1,
                d2,
                sigma2,
                init_scale: cfg.init_scale,
                seed: 0,
            };
            spec.validate()?;
            let plan = cfg
                .methods
                .iter()
                .map(|&m| match m {
                    MethodName::Extragradient if cfg.eg_grid => Planned::EgGrid,
                    m => Planned::Bilinear(m),
                })
                .collect();
            Ok(Point {
                experiment,
                bilinear: Some((spec, source)),
                disk: None,
                plan,
                predicted: BTreeMap::new(),
            })
        })
        .collect()
}

fn plan_disk(cfg: &BenchmarkConfig) -> Result<Vec<Point>> {
    let (c, r) = (cfg.center.expect("validated"), cfg.radius.expect("validated"));
    let mode = cfg.mode.expect("validated");
    let spec = DiskEnsembleSpec {
        d: cfg.d.expect("validated"),
        center: c,
        radius: r,
        mode,
        init_scale: cfg.init_scale,
        seed: 0,
    };
    spec.validate()?;
    let mut plan = Vec::new();
    for m in &cfg.methods {
        plan.push(Planned::Fixed(match m {
            MethodName::AvgOptGeneric => MethodSpec::AvgOptGeneric {
                recurrence: disk_recurrence(c)?,
                weights: disk_weights(c, r, cfg.iters)?,
            },
            MethodName::AsympDisk => MethodSpec::AsympDisk { center: c, radius: r },
            MethodName::Gd => MethodSpec::GradientDescent {
                step: 1.0 / c,
                field: FieldKind::Operator,
            },
            other => unreachable!("{} rejected by validation", other.as_str()),
        }));
    }
    // The closed forms describe the uniform-disk spectrum; the iid ensemble
    // only approaches it.
    let mut predicted = BTreeMap::new();
    if mode == DiskMode::NormalPrescribed {
        let s2 = cfg.init_scale * cfg.init_scale;
        let preds = predictions(c, r, cfg.iters)?;
        predicted.insert("avg-opt-generic", preds.iter().map(|p| s2 * p.xi_opt).collect());
        predicted.insert("asymp-disk", preds.iter().map(|p| s2 * p.xi_asymp).collect());
        predicted.insert("gd", preds.iter().map(|p| s2 * p.xi_gd).collect());
    }
    Ok(vec![Point {
        experiment: "disk".to_string(),
        bilinear: None,
        disk: Some(spec),
        plan,
        predicted,
    }])
}

fn run_point(point: &Point, cfg: &BenchmarkConfig) -> Result<(Vec<Trajectory>, Vec<u64>, Option<f64>)> {
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|i| cfg.base_seed.wrapping_add(i)).collect();
    // results[seed][planned][candidate]
    let results: Vec<Vec<Vec<Trajectory>>> = seeds
        .par_iter()
        .map(|&seed| {
            let inst = point.instance(seed)?;
            let sigma2 = point.bilinear.as_ref().map(|(spec, src)| (effective_sigma2(spec, *src, &inst), spec.ratio()));
            point
                .plan
                .iter()
                .map(|p| match p {
                    Planned::Fixed(spec) => Ok(vec![spec.run(&inst, cfg.iters)?]),
                    Planned::Bilinear(name) => {
                        let (s2, r) = sigma2.expect("bilinear point");
                        Ok(vec![bilinear_method(*name, cfg, s2, r)?.run(&inst, cfg.iters)?])
                    }
                    Planned::EgGrid => {
                        let (s2, r) = sigma2.expect("bilinear point");
                        let hi = mp_edges(s2, r)?.1;
                        EG_GRID
                            .iter()
                            .map(|c| MethodSpec::Extragradient { step: c / hi.sqrt() }.run(&inst, cfg.iters))
                            .collect()
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut chosen_eg = None;
    let mut trajectories = Vec::new();
    let mut owners = Vec::new();
    for (k, p) in point.plan.iter().enumerate() {
        let pick = match p {
            Planned::Bilinear(MethodName::Extragradient) if cfg.eg_step.is_none() => {
                chosen_eg = Some(1.0);
                0
            }
            Planned::Fixed(_) | Planned::Bilinear(_) => 0,
            Planned::EgGrid => {
                let score = |j: usize| -> f64 {
                    let mut total = 0.0;
                    for per_seed in &results {
                        let tr = &per_seed[k][j];
                        total += if tr.diverged { f64::INFINITY } else { tr.final_dist() };
                    }
                    total
                };
                let best = (0..EG_GRID.len())
                    .min_by(|&a, &b| score(a).total_cmp(&score(b)))
                    .expect("grid is non-empty");
                chosen_eg = Some(EG_GRID[best]);
                best
            }
        };
        for (seed, per_seed) in seeds.iter().zip(&results) {
            trajectories.push(per_seed[k][pick].clone());
            owners.push(*seed);
        }
    }
    Ok((trajectories, owners, chosen_eg))
}

fn rows_from(point: &Point, tr: &Trajectory, seed: u64) -> Vec<ResultRow> {
    let predicted = point.predicted.get(tr.method.as_str());
    let last = tr.dist.len() - 1;
    tr.dist
        .iter()
        .zip(&tr.field_evals)
        .enumerate()
        .map(|(t, (&dist, &evals))| {
            let diverged = tr.diverged && t == last;
            ResultRow {
                experiment: point.experiment.clone(),
                method: tr.method.clone(),
                seed,
                t,
                dist: if diverged { f64::INFINITY } else { dist },
                field_evals: evals,
                predicted: predicted.and_then(|p| p.get(t).copied()),
                diverged,
            }
        })
        .collect()
}

/// Runs every configured method on `n_seeds` instances (seeds
/// `base_seed + i`). Rows are sorted by `(experiment, method, seed, t)`, so
/// the output does not depend on the number of workers.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkOutput> {
    cfg.validate()?;
    let points = match cfg.experiment {
        Experiment::Bilinear => plan_bilinear(cfg)?,
        Experiment::Disk => plan_disk(cfg)?,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("{THREADS_ENV}: {e}")))?;

    let mut rows = Vec::new();
    let mut eg_steps = BTreeMap::new();
    for point in &points {
        let (trajectories, owners, eg) = pool.install(|| run_point(point, cfg))?;
        if let Some(step) = eg {
            eg_steps.insert(point.experiment.clone(), step);
        }
        for (tr, seed) in trajectories.iter().zip(owners) {
            rows.extend(rows_from(point, tr, seed));
        }
    }
    rows.sort_by(|a, b| {
        (&a.experiment, &a.method, a.seed, a.t).cmp(&(&b.experiment, &b.method, b.seed, b.t))
    });
    Ok(BenchmarkOutput { rows, eg_steps })
}

/// Convenience for the `--sweep` flag.
pub fn sweep_ratios() -> Vec<f64> {
    DEFAULT_RATIOS.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub experiment: String,
    pub method: String,
    pub t: usize,
    /// Runs that contributed (diverged runs are excluded entirely).
    pub runs: usize,
    pub mean: Option<f64>,
    /// Sample standard deviation over `√runs`; needs at least two runs.
    pub std_error: Option<f64>,
    pub predicted: Option<f64>,
}

/// Mean and standard error of `dist` per `(experiment, method, t)`.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let diverged: BTreeSet<(&str, &str, u64)> = rows
        .iter()
        .filter(|r| r.diverged)
        .map(|r| (r.experiment.as_str(), r.method.as_str(), r.seed))
        .collect();
    let mut groups: BTreeMap<(&str, &str, usize), (Vec<f64>, Option<f64>)> = BTreeMap::new();
    for r in rows {
        let g = groups
            .entry((r.experiment.as_str(), r.method.as_str(), r.t))
            .or_insert_with(|| (Vec::new(), None));
        if g.1.is_none() {
            g.1 = r.predicted;
        }
        if !diverged.contains(&(r.experiment.as_str(), r.method.as_str(), r.seed)) {
            g.0.push(r.dist);
        }
    }
    groups
        .into_iter()
        .map(|((experiment, method, t), (xs, predicted))| {
            let n = xs.len();
            let mean = (n > 0).then(|| xs.iter().sum::<f64>() / n as f64);
            let std_error = match mean {
                Some(m) if n >= 2 => {
                    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
                    Some((var / n as f64).sqrt())
                }
                _ => None,
            };
            AggregateRow {
                experiment: experiment.to_string(),
                method: method.to_string(),
                t,
                runs: n,
                mean,
                std_error,
                predicted,
            }
        })
        .collect()
}
