//! Monte Carlo studies.
//!
//! Every study is a pure function of its [`StudyConfig`]: replication `k`
//! draws from stream `k` of the master seed, results are gathered in
//! replication order, and the same config always produces the same tables.
//! Each study returns typed results that convert into CSV tables plus a JSON
//! summary via [`StudyOutput`].

mod clt;
mod density;
mod ergodic;
mod exchange;
mod jumpchain;
mod likelihood;
mod rate;
mod scv;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use clt::{clt_study, CltPoint, CltStudy};
pub use density::{invariant_density_study, DensityRow, DensityStudy, Zone};
pub use ergodic::{ergodic_study, ErgodicRow, ErgodicStudy};
pub use exchange::{exchange_study, ExchangeStudy};
pub use jumpchain::{jump_chain_study, JumpChainRow, JumpChainStudy};
pub use likelihood::{likelihood_study, LikelihoodRow, LikelihoodStudy};
pub use rate::{rate_study, RateRow, RateStudy};
pub use scv::{scv_study, ScvRep, ScvStudy};

use crate::error::{Error, Result};
use crate::estimator::{EstimateOptions, Threshold};
use crate::kernel::{kernel_make, Kernel, KernelFamily};
use crate::model::{region_check, Bump, EstimationRegion, ModelParams, RateFunction};
use crate::simulator::{simulate, EventLog, InitialState, SimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Rate,
    Clt,
    Ergodic,
    Exchange,
    #[serde(rename = "jumpchain")]
    JumpChain,
    Density,
    Likelihood,
    Scv,
}

impl StudyKind {
    pub const ALL: [StudyKind; 8] = [
        StudyKind::Rate,
        StudyKind::Clt,
        StudyKind::Ergodic,
        StudyKind::Exchange,
        StudyKind::JumpChain,
        StudyKind::Density,
        StudyKind::Likelihood,
        StudyKind::Scv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Rate => "rate",
            StudyKind::Clt => "clt",
            StudyKind::Ergodic => "ergodic",
            StudyKind::Exchange => "exchange",
            StudyKind::JumpChain => "jumpchain",
            StudyKind::Density => "density",
            StudyKind::Likelihood => "likelihood",
            StudyKind::Scv => "scv",
        }
    }

    /// Whether the study estimates at `points`, which must then lie in `S_{d,β}`.
    fn uses_points(self) -> bool {
        matches!(self, StudyKind::Rate | StudyKind::Clt | StudyKind::Likelihood | StudyKind::Scv)
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| Error::Config(format!("unknown study kind `{s}`")))
    }
}

/// Kernel family and support radius; the order follows from `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    #[serde(default = "default_radius")]
    pub radius: f64,
}

fn default_radius() -> f64 {
    1.0
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { family: KernelFamily::Epanechnikov, radius: 1.0 }
    }
}

impl KernelSpec {
    /// Builds the kernel with `⌊β⌋` vanishing moments; fails when the family
    /// cannot provide them.
    pub fn build(&self, beta: f64) -> Result<Kernel> {
        kernel_make(self.family, self.radius, beta.floor() as u32)
    }
}

/// Knobs used by some studies only; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyOptions {
    pub threshold: Threshold,
    /// Bandwidth `t^{-exponent}`; `None` means `1/(2β+1)`.
    pub bandwidth_exponent: Option<f64>,
    /// Fixed bandwidth overriding the exponent.
    pub bandwidth: Option<f64>,
    pub level: f64,
    pub tol: f64,
    /// Histogram cells on `[0, K]` for the ergodicity probe.
    pub bins: usize,
    /// Observation times for the ergodicity probe.
    pub times: Vec<f64>,
    pub starts: [InitialState; 2],
    /// Monomial degrees `p` of the test functions `g(x) = (x¹)^p`.
    pub powers: Vec<u32>,
    pub batches: usize,
    pub amplitude: f64,
    pub bump: Bump,
    /// Evaluation grid size for the density study.
    pub grid_points: usize,
    /// Candidate bandwidths for the SCV study.
    pub scv_grid_size: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            threshold: Threshold::default(),
            bandwidth_exponent: None,
            bandwidth: None,
            level: 0.95,
            tol: crate::estimator::DEFAULT_TOL,
            bins: 64,
            times: (0..=80).map(|k| f64::from(k) / 4.0).collect(),
            starts: [InitialState::Zero, InitialState::Ceiling],
            powers: vec![1, 2],
            batches: 20,
            amplitude: 0.1,
            bump: Bump::Biweight,
            grid_points: 441,
            scv_grid_size: crate::bandwidth::ScvConfig::DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub params: ModelParams,
    pub rate: RateFunction,
    #[serde(default)]
    pub kernel: KernelSpec,
    /// Smoothness used for bandwidths and kernel order; an input, not inferred.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Distance from `0`, `m` and `K` defining the region `S_{d,β}`.
    pub d: f64,
    pub horizons: Vec<f64>,
    pub replications: usize,
    #[serde(default)]
    pub points: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default)]
    pub options: StudyOptions,
}

fn default_beta() -> f64 {
    1.0
}

impl StudyConfig {
    /// A config with the reference network `N = 100, λ = 1, m = 1, K = 2`,
    /// `f = Id`, `β = 1`, `d = 0.05` and evaluation point `a = 0.5`.
    pub fn reference(kind: StudyKind) -> Self {
        let params = ModelParams::reference();
        Self {
            kind,
            params,
            rate: RateFunction::identity(params.k_max()).expect("identity rate is valid"),
            kernel: KernelSpec::default(),
            beta: 1.0,
            d: 0.05,
            horizons: vec![200.0],
            replications: 50,
            points: vec![0.5],
            seed: 1,
            initial: InitialState::default(),
            options: StudyOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if self.horizons.is_empty() || self.horizons.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::Config("horizons must be a nonempty list of positive times".into()));
        }
        if !(self.beta > 0.0) {
            return Err(Error::Config(format!("β must be positive, got {}", self.beta)));
        }
        self.kernel.build(self.beta)?;
        if self.kind.uses_points() {
            if self.points.is_empty() {
                return Err(Error::Config(format!("{} study needs at least one evaluation point", self.kind)));
            }
            let region = EstimationRegion::new(&self.params, self.beta, self.d);
            if !region.radius_admissible() {
                return Err(Error::Config(format!(
                    "d = {} must exceed (⌊β⌋ + 2)/N = {}",
                    self.d,
                    (self.beta.floor() + 2.0) / self.params.n_neurons() as f64
                )));
            }
            for &a in &self.points {
                if !region_check(a, &self.params, self.rate.holder(), self.d) || !region.contains(a) {
                    return Err(Error::Config(format!("evaluation point {a} is outside S_(d, β)")));
                }
            }
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> f64 {
        self.horizons.iter().copied().fold(0.0, f64::max)
    }

    fn kernel(&self) -> Result<Kernel> {
        self.kernel.build(self.beta)
    }

    /// Bandwidth used at horizon `t`.
    pub fn bandwidth_at(&self, t: f64) -> f64 {
        if let Some(h) = self.options.bandwidth {
            return h;
        }
        let exponent = self.options.bandwidth_exponent.unwrap_or(1.0 / (2.0 * self.beta + 1.0));
        t.powf(-exponent)
    }

    fn estimate_options(&self) -> EstimateOptions {
        EstimateOptions { threshold: self.options.threshold, level: self.options.level, tol: self.options.tol }
    }

    fn sim_config(&self, horizon: f64, rep: usize) -> SimConfig {
        SimConfig::new(horizon, self.seed).with_stream(rep as u64).with_initial(self.initial.clone())
    }

    /// Simulates replication `rep` on `[0, horizon]`.
    pub fn replicate(&self, horizon: f64, rep: usize) -> Result<EventLog> {
        simulate(&self.params, &self.rate, &self.sim_config(horizon, rep))
    }

    /// Runs `job` over every replication in parallel, keeping replication order.
    fn map_replications<T, F>(&self, job: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize) -> Result<T> + Sync + Send,
    {
        (0..self.replications).into_par_iter().map(job).collect()
    }
}

/// A plain table with string cells.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Formats a row of displayable cells.
#[macro_export]
#[doc(hidden)]
macro_rules! row {
    ($($cell:expr),* $(,)?) => { vec![$($cell.to_string()),*] };
}

/// Tables and JSON summary of one study run.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub kind: StudyKind,
    /// `(file stem, table)` pairs.
    pub tables: Vec<(String, Table)>,
    pub summary: serde_json::Value,
}

impl StudyOutput {
    /// Paths the output would be written to under `dir`.
    pub fn paths(&self, dir: &Path) -> Vec<std::path::PathBuf> {
        let mut paths: Vec<_> = self.tables.iter().map(|(stem, _)| dir.join(format!("{stem}.csv"))).collect();
        paths.push(dir.join(format!("{}_summary.json", self.kind)));
        paths
    }

    /// Writes every table and the summary; with `no_clobber`, refuses when any
    /// target already exists.
    pub fn write(&self, dir: &Path, no_clobber: bool) -> Result<Vec<std::path::PathBuf>> {
        let paths = self.paths(dir);
        if no_clobber {
            if let Some(p) = paths.iter().find(|p| p.exists()) {
                return Err(Error::Config(format!("{} exists and --no-clobber is set", p.display())));
            }
        }
        fs::create_dir_all(dir)?;
        for ((_, table), path) in self.tables.iter().zip(&paths) {
            fs::write(path, table.to_csv()?)?;
        }
        let summary = serde_json::to_string_pretty(&self.summary).map_err(|e| Error::Format(e.to_string()))?;
        fs::write(paths.last().expect("summary path"), summary + "\n")?;
        Ok(paths)
    }
}

/// Typed study results that can be rendered as tables and a summary.
pub trait Study {
    fn kind(&self) -> StudyKind;
    fn tables(&self) -> Vec<(String, Table)>;
    fn summary(&self) -> serde_json::Value;

    fn output(&self) -> StudyOutput {
        StudyOutput { kind: self.kind(), tables: self.tables(), summary: self.summary() }
    }
}

/// Runs the study named in `cfg.kind`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyOutput> {
    Ok(match cfg.kind {
        StudyKind::Rate => rate_study(cfg)?.output(),
        StudyKind::Clt => clt_study(cfg)?.output(),
        StudyKind::Ergodic => ergodic_study(cfg)?.output(),
        StudyKind::Exchange => exchange_study(cfg)?.output(),
        StudyKind::JumpChain => jump_chain_study(cfg)?.output(),
        StudyKind::Density => invariant_density_study(cfg)?.output(),
        StudyKind::Likelihood => likelihood_study(cfg)?.output(),
        StudyKind::Scv => scv_study(cfg)?.output(),
    })
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("study summaries serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in StudyKind::ALL {
            assert_eq!(k.name().parse::<StudyKind>().unwrap(), k);
        }
        assert!("bogus".parse::<StudyKind>().is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = StudyConfig::reference(StudyKind::Rate);
        assert!(cfg.validate().is_ok());
        cfg.replications = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::reference(StudyKind::Rate);
        cfg.points = vec![1.0];
        assert!(cfg.validate().is_err());
        cfg.points = vec![0.5];
        cfg.d = 0.01;
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::reference(StudyKind::Rate);
        cfg.beta = 2.0;
        assert!(cfg.validate().is_err(), "Epanechnikov cannot serve ⌊β⌋ = 2");
        cfg.kernel.family = KernelFamily::HighOrder(2);
        let holder = crate::model::HolderClass { beta: 2.0, ..*cfg.rate.holder() };
        cfg.rate = cfg.rate.with_holder(holder).unwrap();
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["a", "b"]);
        t.push(row![1.5, "x"]);
        assert_eq!(t.to_csv().unwrap(), "a,b\n1.5,x\n");
    }

    #[test]
    fn config_serde_round_trip() {
        let cfg = StudyConfig::reference(StudyKind::Ergodic);
        let json = serde_json::to_string(&cfg).unwrap();
        let back: StudyConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }
}
