use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semigroup_core::linalg::{c, CVector};
use semigroup_core::models::{diagonal_rapid_frequencies, random_vector, ModelKind};
use semigroup_core::quadrature::GridSpec;
use semigroup_core::spectral::ContourSpec;
use semigroup_core::{AssumptionParams, GeneratorModel, ModelDescriptor};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Spectral gap: shifted-line contour, Dolgopyat scan, ledger, `e^{−ℓt}` decay.
    #[default]
    Exponential,
    /// Rapid mixing: curved contour, rapid scan, `t^{−p}` decay.
    Rapid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelDescriptor,
    pub params: AssumptionParams,
    #[serde(default)]
    pub pipeline: Pipeline,
    /// Defaults to the shifted line at `−ℓ` (exponential) or the curved
    /// contour built from `epsilon`, `c12`, `beta` (rapid).
    #[serde(default)]
    pub contour: Option<ContourSpec>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default = "default_probes")]
    pub probes: Vec<ProbeSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub rapid: RapidSettings,
    #[serde(default)]
    pub reconstruct: ReconstructSettings,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_probes() -> Vec<ProbeSpec> {
    vec![ProbeSpec::Random { seed: None }; 3]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Times for `C1`; default linear `[0, 50]`, 501 points.
    #[serde(default)]
    pub c1: Option<GridSpec>,
    /// Times for `C2`; default log `[1e−4, 50]`, 200 points.
    #[serde(default)]
    pub c2: Option<GridSpec>,
    /// Frequencies for the resolvent scans; default log `[β, 10³]`, 200 points.
    #[serde(default)]
    pub b: Option<GridSpec>,
    /// Times for decay checks; default log `[0.1, 50]`, 60 points.
    #[serde(default)]
    pub decay: Option<GridSpec>,
}

impl Grids {
    pub fn c1(&self) -> GridSpec {
        self.c1.unwrap_or(GridSpec::linear(0.0, 50.0, 501))
    }

    pub fn c2(&self) -> GridSpec {
        self.c2.unwrap_or(GridSpec::log(1e-4, 50.0, 200))
    }

    pub fn b(&self, beta: f64) -> GridSpec {
        self.b.unwrap_or(GridSpec::log(beta, 1e3, 200))
    }

    pub fn decay(&self) -> GridSpec {
        self.decay.unwrap_or(GridSpec::log(0.1, 50.0, 60))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeSpec {
    Explicit {
        re: Vec<f64>,
        #[serde(default)]
        im: Option<Vec<f64>>,
    },
    /// Standard complex normal components; `seed` defaults to the run seed
    /// plus the probe index.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
    /// Unit right eigenvector for the `index`-th eigenvalue.
    Eigvec { index: usize },
    /// Component `i` weighted by `|f_i|^{−exponent}`, where `f_i` is the
    /// frequency of a diagonal-rapid mode and `i + 1` otherwise.
    PowerLaw { exponent: f64 },
}

impl ProbeSpec {
    pub fn build(&self, model: &GeneratorModel, run_seed: u64, index: usize) -> Result<CVector, CliError> {
        let n = model.dim();
        match self {
            Self::Explicit { re, im } => {
                if re.len() != n || im.as_ref().is_some_and(|v| v.len() != n) {
                    return Err(CliError::Config(format!(
                        "probes[{index}]: expected {n} components"
                    )));
                }
                Ok(CVector::from_fn(n, |i, _| {
                    c(re[i], im.as_ref().map_or(0.0, |v| v[i]))
                }))
            }
            Self::Random { seed } => Ok(random_vector(
                n,
                seed.unwrap_or(run_seed.wrapping_add(index as u64)),
            )),
            Self::Eigvec { index: k } => {
                let eig = model.eigen().map_err(|e| CliError::Config(e.to_string()))?;
                if *k >= n {
                    return Err(CliError::Config(format!(
                        "probes[{index}]: eigenvector index {k} out of range for dimension {n}"
                    )));
                }
                Ok(eig.vectors.column(*k).into_owned())
            }
            Self::PowerLaw { exponent } => {
                let weights: Vec<f64> = match model.kind() {
                    ModelKind::DiagonalRapid { k_max, .. } => diagonal_rapid_frequencies(k_max)
                        .into_iter()
                        .map(|k| (k.unsigned_abs() as f64).powf(-exponent))
                        .collect(),
                    _ => (1..=n).map(|i| (i as f64).powf(-exponent)).collect(),
                };
                Ok(CVector::from_fn(n, |i, _| c(weights[i], 0.0)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "tol_projector")]
    pub projector: f64,
    #[serde(default = "tol_trace")]
    pub trace: f64,
    #[serde(default = "tol_path")]
    pub path_agreement: f64,
    #[serde(default = "tol_reconstruction")]
    pub reconstruction: f64,
    #[serde(default = "tol_bromwich")]
    pub bromwich: f64,
}

fn tol_projector() -> f64 {
    1e-8
}
fn tol_trace() -> f64 {
    1e-6
}
fn tol_path() -> f64 {
    1e-6
}
fn tol_reconstruction() -> f64 {
    1e-8
}
fn tol_bromwich() -> f64 {
    1e-3
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            projector: tol_projector(),
            trace: tol_trace(),
            path_agreement: tol_path(),
            reconstruction: tol_reconstruction(),
            bromwich: tol_bromwich(),
        }
    }
}

impl Tolerances {
    fn values(&self) -> [f64; 5] {
        [
            self.projector,
            self.trace,
            self.path_agreement,
            self.reconstruction,
            self.bromwich,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RapidSettings {
    #[serde(default = "default_p")]
    pub p: u32,
    /// Defaults to the smallest integer above `C11 + p(C12 + 1)`.
    #[serde(default)]
    pub q: Option<u32>,
    #[serde(default = "default_c13_order")]
    pub c13_order: u32,
}

fn default_p() -> u32 {
    2
}
fn default_c13_order() -> u32 {
    2
}

impl Default for RapidSettings {
    fn default() -> Self {
        Self {
            p: default_p(),
            q: None,
            c13_order: default_c13_order(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructSettings {
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Real part of the inversion line. Defaults to `max(0, s(Z)) + 1/t`
    /// per time, which keeps the `e^{at}` amplification of the truncation
    /// error bounded.
    #[serde(default)]
    pub bromwich_a: Option<f64>,
    #[serde(default)]
    pub b_cut: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

fn default_times() -> Vec<f64> {
    vec![1.0, 5.0, 10.0]
}

impl Default for ReconstructSettings {
    fn default() -> Self {
        Self {
            times: default_times(),
            bromwich_a: None,
            b_cut: None,
            step: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.tolerances.values().iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::Config("tolerances must be > 0".into()));
        }
        let grids = [
            ("grids.c1", self.grids.c1()),
            ("grids.c2", self.grids.c2()),
            ("grids.b", self.grids.b(self.params.beta)),
            ("grids.decay", self.grids.decay()),
        ];
        for (name, grid) in grids {
            grid.validate()
                .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        }
        if self.grids.decay().min <= 0.0 {
            return Err(CliError::Config("grids.decay: times must be > 0".into()));
        }
        let params = match self.pipeline {
            Pipeline::Exponential => self.params.check_exponential(),
            Pipeline::Rapid => self.params.check_rapid(),
        };
        params.map_err(|e| CliError::Config(format!("params: {e}")))?;
        if self.reconstruct.times.is_empty() || self.reconstruct.times.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::Config(
                "reconstruct.times must be a non-empty list of positive times".into(),
            ));
        }
        if self.reconstruct.bromwich_a.is_some_and(|a| !(a > 0.0)) {
            return Err(CliError::Config("reconstruct.bromwich_a must be > 0".into()));
        }
        for (name, v) in [("b_cut", self.reconstruct.b_cut), ("step", self.reconstruct.step)] {
            if v.is_some_and(|v| !(v > 0.0)) {
                return Err(CliError::Config(format!("reconstruct.{name} must be > 0")));
            }
        }
        if self.probes.is_empty() {
            return Err(CliError::Config("probes must not be empty".into()));
        }
        if self.rapid.p == 0 {
            return Err(CliError::Config("rapid.p must be positive".into()));
        }
        Ok(())
    }

    pub fn contour(&self) -> ContourSpec {
        self.contour.unwrap_or_else(|| match self.pipeline {
            Pipeline::Exponential => ContourSpec::shifted(self.params.ell),
            Pipeline::Rapid => {
                ContourSpec::curved(self.params.epsilon, self.params.c12, self.params.beta)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "model": {"kind": "ctmc", "rates": [[-1, 1], [1, -1]]},
        "params": {"lambda": 1.5, "alpha": 1, "beta": 2, "gamma": 0.8, "ell": 1}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.pipeline, Pipeline::Exponential);
        assert_eq!(cfg.probes.len(), 3);
        assert_eq!(cfg.contour(), ContourSpec::shifted(1.0));
        assert_eq!(cfg.grids.b(2.0).min, 2.0);
    }

    #[test]
    fn negative_tolerance_is_rejected() {
        let text = MINIMAL.replace(
            "\"params\"",
            "\"tolerances\": {\"projector\": -1e-8}, \"params\"",
        );
        match RunConfig::parse(&text) {
            Err(CliError::Config(msg)) => assert_eq!(msg, "tolerances must be > 0"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_are_named() {
        let text = MINIMAL.replace("\"params\"", "\"colour\": 1, \"params\"");
        match RunConfig::parse(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("colour"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn grid_counts_are_checked() {
        let text = MINIMAL.replace(
            "\"params\"",
            "\"grids\": {\"decay\": {\"min\": 0.1, \"max\": 5, \"count\": 1, \"spacing\": \"log\"}}, \"params\"",
        );
        match RunConfig::parse(&text) {
            Err(CliError::Config(msg)) => assert!(msg.contains("grids.decay"), "{msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn probe_construction() {
        let model = semigroup_core::build_model(&ModelDescriptor::DiagonalRapid { c: 0.5, k_max: 3 }).unwrap();
        let mu = ProbeSpec::PowerLaw { exponent: 3.0 }.build(&model, 0, 0).unwrap();
        assert_eq!(mu[0].re, 1.0 / 27.0);
        assert_eq!(mu[3].re, 1.0);
        let a = ProbeSpec::Random { seed: None }.build(&model, 7, 1).unwrap();
        let b = ProbeSpec::Random { seed: Some(8) }.build(&model, 0, 0).unwrap();
        assert_eq!(a, b);
        assert!(ProbeSpec::Eigvec { index: 6 }.build(&model, 0, 0).is_err());
    }
}
