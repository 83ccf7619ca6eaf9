//! Run configuration files.
//!
//! A config is a TOML document. Every section except `[model]` is optional.
//!
//! ```toml
//! schema-version = 1
//! seed = 42
//! out = "runs/reference"      # output directory, default "out"
//!
//! [model]
//! n_neurons = 100
//! lambda = 1.0
//! m = 1.0
//! k_max = 2.0
//!
//! [rate]                      # default: family = "linear", slope = 1
//! family = "linear"           # linear | log1p | expm1 | table
//! slope = 1.0                 # linear only
//! # path = "f.csv"            # table only; two columns x, f(x), relative to this file
//!
//! [kernel]                    # default: epanechnikov, radius 1
//! family = "epanechnikov"     # epanechnikov | trunc_gaussian | uniform | { high_order = k }
//! radius = 1.0
//!
//! [estimation]
//! beta = 1.0                  # smoothness; the kernel must cancel floor(beta) moments
//! d = 0.05                    # exclusion radius around 0, m and K
//!
//! [simulate]
//! horizon = 200.0
//! initial = "equilibrium"     # equilibrium | zero | ceiling | uniform | { explicit = [...] }
//!
//! [study]
//! horizons = [50.0, 100.0, 200.0, 400.0]
//! replications = 50
//! points = [0.5]
//! initial = "equilibrium"
//!
//! [study.options]             # any StudyOptions field, e.g.
//! bandwidth_exponent = 0.45
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::Deserialize;
use spikerate::experiments::{KernelSpec, StudyConfig, StudyKind, StudyOptions};
use spikerate::model::{EstimationRegion, HolderClass, ModelParams, PiecewiseLinear, RateFunction};
use spikerate::simulator::InitialState;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "schema-version")]
    pub schema_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub model: ModelParams,
    #[serde(default)]
    pub rate: RateSection,
    #[serde(default)]
    pub kernel: KernelSpec,
    #[serde(default)]
    pub estimation: EstimationSection,
    pub simulate: Option<SimulateSection>,
    pub study: Option<StudySection>,
    /// Directory the config was read from; table paths resolve against it.
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateSection {
    Linear {
        #[serde(default = "one")]
        slope: f64,
    },
    Log1p,
    Expm1,
    Table {
        path: PathBuf,
    },
}

impl Default for RateSection {
    fn default() -> Self {
        RateSection::Linear { slope: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimationSection {
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_d")]
    pub d: f64,
}

fn default_d() -> f64 {
    0.05
}

impl Default for EstimationSection {
    fn default() -> Self {
        Self { beta: 1.0, d: default_d() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub horizon: f64,
    #[serde(default)]
    pub initial: InitialState,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub horizons: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub points: Vec<f64>,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub options: StudyOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate().with_context(|| format!("invalid config {}", path.display()))?;
        Ok(cfg)
    }

    /// Checks the schema version, the kernel against `β`, the simulation
    /// horizon and every study evaluation point.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.schema_version == SCHEMA_VERSION, "unsupported schema-version {} (expected {SCHEMA_VERSION})", self.schema_version);
        let beta = self.estimation.beta;
        ensure!(beta > 0.0 && beta.is_finite(), "beta must be positive, got {beta}");
        self.kernel.build(beta).with_context(|| format!("kernel {} does not fit beta = {beta}", self.kernel.family))?;
        let rate = self.rate()?;
        if let Some(sim) = &self.simulate {
            ensure!(sim.horizon > 0.0 && sim.horizon.is_finite(), "simulate.horizon must be positive, got {}", sim.horizon);
        }
        if let Some(study) = &self.study {
            let region = self.region();
            if !study.points.is_empty() {
                ensure!(
                    region.radius_admissible(),
                    "d = {} must exceed (floor(beta) + 2)/N = {}",
                    region.d,
                    (beta.floor() + 2.0) / self.model.n_neurons() as f64
                );
            }
            for &a in &study.points {
                ensure!(
                    spikerate::model::region_check(a, &self.model, rate.holder(), self.estimation.d),
                    "evaluation point {a} is outside S_(d, beta) for d = {}, beta = {beta}",
                    self.estimation.d
                );
            }
        }
        Ok(())
    }

    pub fn region(&self) -> EstimationRegion {
        EstimationRegion::new(&self.model, self.estimation.beta, self.estimation.d)
    }

    /// The rate function, with its class smoothness set to the configured `β`.
    pub fn rate(&self) -> Result<RateFunction> {
        let k = self.model.k_max();
        let beta = self.estimation.beta;
        let f = match &self.rate {
            RateSection::Linear { slope } => RateFunction::linear(*slope, k)?,
            RateSection::Log1p => RateFunction::log1p(k)?,
            RateSection::Expm1 => RateFunction::expm1(k)?,
            RateSection::Table { path } => {
                if beta > 1.0 {
                    bail!("a piecewise-linear table rate is not smoother than beta = 1, got beta = {beta}");
                }
                let full = self.base.join(path);
                let file = fs::File::open(&full).with_context(|| format!("opening rate table {}", full.display()))?;
                RateFunction::table(PiecewiseLinear::from_csv(file)?)?
            }
        };
        let holder = HolderClass { beta, ..*f.holder() };
        Ok(f.with_holder(holder)?)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn study_config(&self, kind: StudyKind) -> Result<StudyConfig> {
        let Some(study) = &self.study else {
            bail!("config has no [study] section");
        };
        let cfg = StudyConfig {
            kind,
            params: self.model,
            rate: self.rate()?,
            kernel: self.kernel,
            beta: self.estimation.beta,
            d: self.estimation.d,
            horizons: study.horizons.clone(),
            replications: study.replications,
            points: study.points.clone(),
            seed: self.seed,
            initial: study.initial.clone(),
            options: study.options.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    const MODEL: &str = "schema-version = 1\n[model]\nn_neurons = 100\nlambda = 1.0\nm = 1.0\nk_max = 2.0\n";

    #[test]
    fn minimal_config_defaults() {
        let cfg = parse(MODEL).unwrap();
        assert_eq!(cfg.kernel, KernelSpec::default());
        assert_eq!(cfg.estimation.beta, 1.0);
        assert!(matches!(cfg.rate, RateSection::Linear { slope } if slope == 1.0));
    }

    #[test]
    fn rejects_wrong_schema_version() {
        assert!(parse(&MODEL.replace("schema-version = 1", "schema-version = 2")).is_err());
    }

    #[test]
    fn rejects_kernel_too_low_for_beta() {
        let text = format!("{MODEL}[estimation]\nbeta = 2.5\n");
        assert!(parse(&text).is_err());
        let text = format!("{MODEL}[estimation]\nbeta = 2.5\n[kernel]\nfamily = {{ high_order = 2 }}\n");
        assert!(parse(&text).is_ok());
    }

    #[test]
    fn rejects_points_outside_region() {
        let study = "[study]\nhorizons = [10.0]\nreplications = 1\n";
        assert!(parse(&format!("{MODEL}{study}points = [0.5]\n")).is_ok());
        assert!(parse(&format!("{MODEL}{study}points = [1.0]\n")).is_err());
        assert!(parse(&format!("{MODEL}{study}points = [2.5]\n")).is_err());
    }

    #[test]
    fn rejects_zero_horizon() {
        assert!(parse(&format!("{MODEL}[simulate]\nhorizon = 0.0\n")).is_err());
    }
}
