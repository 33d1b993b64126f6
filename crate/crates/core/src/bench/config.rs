use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::DiskMode;

/// Ratios `d₁/d₂` swept by `bench bilinear --sweep`.
pub const DEFAULT_RATIOS: [f64; 4] = [0.25, 0.5, 0.9, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Bilinear,
    Disk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    AvgOptBilinear,
    AsympBilinearPolyak,
    Extragradient,
    HamiltonianGd,
    AvgOptGeneric,
    AsympDisk,
    Gd,
}

impl MethodName {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodName::AvgOptBilinear => "avg-opt-bilinear",
            MethodName::AsympBilinearPolyak => "asymp-bilinear-polyak",
            MethodName::Extragradient => "extragradient",
            MethodName::HamiltonianGd => "hamiltonian-gd",
            MethodName::AvgOptGeneric => "avg-opt-generic",
            MethodName::AsympDisk => "asymp-disk",
            MethodName::Gd => "gd",
        }
    }

    fn experiment(self) -> Experiment {
        match self {
            MethodName::AvgOptBilinear
            | MethodName::AsympBilinearPolyak
            | MethodName::Extragradient
            | MethodName::HamiltonianGd => Experiment::Bilinear,
            MethodName::AvgOptGeneric | MethodName::AsympDisk | MethodName::Gd => Experiment::Disk,
        }
    }
}

/// Where the bilinear methods take the Marchenko–Pastur edges from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeSource {
    /// Limiting edges of the ensemble, `σ²(1 ± √r)²`.
    Model,
    /// `σ²` rescaled per instance so the top edge equals `‖A‖₂²`. A finite
    /// instance regularly has eigenvalues just past the limiting edge, where
    /// the tuned polynomials grow geometrically.
    #[default]
    Empirical,
}

pub fn default_methods(experiment: Experiment) -> Vec<MethodName> {
    match experiment {
        Experiment::Bilinear => vec![
            MethodName::AvgOptBilinear,
            MethodName::AsympBilinearPolyak,
            MethodName::Extragradient,
            MethodName::HamiltonianGd,
        ],
        Experiment::Disk => vec![MethodName::AvgOptGeneric, MethodName::AsympDisk, MethodName::Gd],
    }
}

/// One experiment, as a flat JSON object. Fields that do not apply to the
/// experiment must be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    /// Bilinear only: sweep these `d₁/d₂` ratios at fixed `d₂` instead of a
    /// single `(d₁, d₂)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<DiskMode>,
    #[serde(default = "one")]
    pub init_scale: f64,
    pub iters: usize,
    pub n_seeds: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub methods: Vec<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_source: Option<EdgeSource>,
    /// Extragradient step override (bilinear); defaults to `1/√L`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eg_step: Option<f64>,
    /// Pick the extragradient step from `{0.1, …, 1.0}/√L` by final mean
    /// distance.
    #[serde(default)]
    pub eg_grid: bool,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub emit_svg: bool,
}

fn one() -> f64 {
    1.0
}

fn default_output() -> String {
    "bench".to_string()
}

/// Values given on the command line; each `Some` replaces the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    pub sigma2: Option<f64>,
    pub ratios: Option<Vec<f64>>,
    pub d: Option<usize>,
    pub center: Option<f64>,
    pub radius: Option<f64>,
    pub mode: Option<DiskMode>,
    pub edge_source: Option<EdgeSource>,
    pub init_scale: Option<f64>,
    pub iters: Option<usize>,
    pub n_seeds: Option<usize>,
    pub base_seed: Option<u64>,
    pub methods: Option<Vec<MethodName>>,
    pub eg_step: Option<f64>,
    pub eg_grid: Option<bool>,
    pub output: Option<String>,
    pub emit_svg: Option<bool>,
}

impl BenchmarkConfig {
    /// Defaults for `experiment` before any file or flag is applied.
    pub fn defaults(experiment: Experiment) -> Self {
        let mut cfg = Self {
            experiment,
            d1: None,
            d2: None,
            sigma2: None,
            ratios: None,
            d: None,
            center: None,
            radius: None,
            mode: None,
            edge_source: None,
            init_scale: 1.0,
            iters: 100,
            n_seeds: 10,
            base_seed: 0,
            methods: Vec::new(),
            eg_step: None,
            eg_grid: false,
            output: default_output(),
            emit_svg: false,
        };
        cfg.fill_defaults();
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn fill_defaults(&mut self) {
        match self.experiment {
            Experiment::Bilinear => {
                self.d1.get_or_insert(200);
                self.d2.get_or_insert(200);
                self.sigma2.get_or_insert(1.0);
                self.edge_source.get_or_insert_with(EdgeSource::default);
            }
            Experiment::Disk => {
                self.d.get_or_insert(100);
                self.center.get_or_insert(2.0);
                self.radius.get_or_insert(1.0);
                self.mode.get_or_insert(DiskMode::NormalPrescribed);
            }
        }
        if self.methods.is_empty() {
            self.methods = default_methods(self.experiment);
        }
    }

    fn apply(&mut self, o: ConfigOverrides) {
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if o.$f.is_some() { self.$f = o.$f; } )* };
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f { self.$f = v; } )* };
        }
        set_opt!(d1, d2, sigma2, ratios, d, center, radius, mode, edge_source, eg_step);
        set!(init_scale, iters, n_seeds, base_seed, methods, eg_grid, output, emit_svg);
    }

    /// Field-level validation.
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| Err(Error::Config(format!("{field}: {msg}")));
        if self.iters < 1 {
            return fail("iters", "must be at least 1".into());
        }
        if self.n_seeds < 1 {
            return fail("n_seeds", "must be at least 1".into());
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return fail("init_scale", format!("must be positive, got {}", self.init_scale));
        }
        if self.methods.is_empty() {
            return fail("methods", "at least one method is required".into());
        }
        for m in &self.methods {
            if m.experiment() != self.experiment {
                return fail(
                    "methods",
                    format!("`{}` does not apply to the {:?} experiment", m.as_str(), self.experiment),
                );
            }
        }
        let stray = |field: &str, present: bool| -> Result<()> {
            if present {
                fail(field, format!("not a {:?} experiment parameter", self.experiment))
            } else {
                Ok(())
            }
        };
        match self.experiment {
            Experiment::Bilinear => {
                stray("d", self.d.is_some())?;
                stray("center", self.center.is_some())?;
                stray("radius", self.radius.is_some())?;
                stray("mode", self.mode.is_some())?;
                let d1 = self.d1.unwrap_or(0);
                let d2 = self.d2.unwrap_or(0);
                if d2 == 0 {
                    return fail("d2", "must be at least 1".into());
                }
                if let Some(ratios) = &self.ratios {
                    if ratios.is_empty() {
                        return fail("ratios", "must not be empty".into());
                    }
                    for &r in ratios {
                        if !(r > 0.0 && r <= 1.0) || ((r * d2 as f64).round() as usize) < 1 {
                            return fail("ratios", format!("each ratio must give 1 <= d1 <= d2, got {r}"));
                        }
                    }
                } else {
                    if d1 == 0 {
                        return fail("d1", "must be at least 1".into());
                    }
                    if d1 > d2 {
                        return fail("d1", format!("players must be ordered so that d1 <= d2 (got {d1} > {d2})"));
                    }
                }
                let s2 = self.sigma2.unwrap_or(f64::NAN);
                if !(s2.is_finite() && s2 > 0.0) {
                    return fail("sigma2", format!("must be finite and positive, got {s2}"));
                }
                if let Some(eta) = self.eg_step {
                    if !(eta.is_finite() && eta > 0.0) {
                        return fail("eg_step", format!("must be positive, got {eta}"));
                    }
                }
            }
            Experiment::Disk => {
                stray("d1", self.d1.is_some())?;
                stray("d2", self.d2.is_some())?;
                stray("sigma2", self.sigma2.is_some())?;
                stray("ratios", self.ratios.is_some())?;
                stray("edge_source", self.edge_source.is_some())?;
                stray("eg_step", self.eg_step.is_some())?;
                stray("eg_grid", self.eg_grid)?;
                let d = self.d.unwrap_or(0);
                if d == 0 || !d.is_multiple_of(2) {
                    return fail("d", format!("must be a positive even integer, got {d}"));
                }
                let c = self.center.unwrap_or(f64::NAN);
                let r = self.radius.unwrap_or(f64::NAN);
                if !(c.is_finite() && c > 0.0) {
                    return fail("center", format!("must be positive, got {c}"));
                }
                if !(r.is_finite() && r > 0.0) {
                    return fail("radius", format!("must be positive, got {r}"));
                }
                if r >= c {
                    return fail("radius", format!("R < C is required, got R = {r} and C = {c}"));
                }
            }
        }
        Ok(())
    }
}

/// Loads an optional JSON file, applies CLI overrides on top, fills defaults
/// and validates.
pub fn parse_config(experiment: Experiment, path: Option<&Path>, overrides: ConfigOverrides) -> Result<BenchmarkConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            let cfg = BenchmarkConfig::from_json(&text)?;
            if cfg.experiment != experiment {
                return Err(Error::Config(format!(
                    "experiment: file describes {:?}, command asked for {:?}",
                    cfg.experiment, experiment
                )));
            }
            cfg
        }
        None => BenchmarkConfig {
            methods: Vec::new(),
            ..BenchmarkConfig::defaults(experiment)
        },
    };
    cfg.apply(overrides);
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_flags_fill_defaults() {
        let cfg = parse_config(
            Experiment::Bilinear,
            None,
            ConfigOverrides {
                d1: Some(200),
                d2: Some(200),
                iters: Some(100),
                n_seeds: Some(10),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.sigma2, Some(1.0));
        assert_eq!(cfg.edge_source, Some(EdgeSource::Empirical));
        assert_eq!(cfg.methods, default_methods(Experiment::Bilinear));
        assert_eq!(cfg.init_scale, 1.0);
        assert_eq!(cfg.output, "bench");
    }

    #[test]
    fn radius_not_below_center_is_rejected() {
        let err = parse_config(
            Experiment::Disk,
            None,
            ConfigOverrides {
                center: Some(1.0),
                radius: Some(1.5),
                ..Default::default()
            },
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("radius") && msg.contains("R < C"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let err = BenchmarkConfig::from_json(r#"{"experiment":"disk","iters":5,"n_seeds":1,"colour":"red"}"#);
        assert!(err.unwrap_err().to_string().contains("colour"));
    }

    #[test]
    fn stray_and_mismatched_fields() {
        let cfg = BenchmarkConfig::from_json(r#"{"experiment":"disk","iters":5,"n_seeds":1,"d1":3}"#).unwrap();
        let mut cfg = cfg;
        cfg.fill_defaults();
        assert!(cfg.validate().unwrap_err().to_string().starts_with("configuration error: d1"));

        let mut cfg = BenchmarkConfig::defaults(Experiment::Disk);
        cfg.methods = vec![MethodName::Extragradient];
        assert!(cfg.validate().is_err());

        let mut cfg = BenchmarkConfig::defaults(Experiment::Bilinear);
        cfg.d1 = Some(300);
        assert!(cfg.validate().unwrap_err().to_string().contains("d1 <= d2"));
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"experiment":"disk","d":20,"iters":7,"n_seeds":3,"mode":"iid-gaussian"}"#).unwrap();
        let cfg = parse_config(
            Experiment::Disk,
            Some(&path),
            ConfigOverrides {
                iters: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.d, Some(20));
        assert_eq!(cfg.iters, 9);
        assert_eq!(cfg.mode, Some(DiskMode::IidGaussian));
        assert!(parse_config(Experiment::Bilinear, Some(&path), Default::default()).is_err());
    }

    fn arb_config() -> impl Strategy<Value = BenchmarkConfig> {
        (
            any::<bool>(),
            1usize..50,
            0usize..50,
            1usize..500,
            1usize..30,
            any::<u64>(),
            0.1f64..10.0,
            any::<bool>(),
        )
            .prop_map(|(bil, a, b, iters, seeds, base, x, svg)| {
                let mut cfg = if bil {
                    let mut c = BenchmarkConfig::defaults(Experiment::Bilinear);
                    c.d1 = Some(a);
                    c.d2 = Some(a + b);
                    c.sigma2 = Some(x);
                    c
                } else {
                    let mut c = BenchmarkConfig::defaults(Experiment::Disk);
                    c.d = Some(2 * a);
                    c.center = Some(x + 1.0);
                    c.radius = Some(x);
                    c
                };
                cfg.iters = iters;
                cfg.n_seeds = seeds;
                cfg.base_seed = base;
                cfg.emit_svg = svg;
                cfg
            })
    }

    proptest! {
        #[test]
        fn json_round_trip(cfg in arb_config()) {
            prop_assert!(cfg.validate().is_ok());
            let text = cfg.to_json().unwrap();
            let back = BenchmarkConfig::from_json(&text).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
