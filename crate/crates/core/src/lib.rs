//! Simulation and nonparametric estimation for a mean-field network of
//! spiking neurons with leaky deterministic dynamics and state-dependent
//! spiking rate `f`.
//!
//! Between spikes each potential relaxes to the equilibrium `m` at rate `λ`.
//! Neuron `i` spikes at rate `f(X^i)`; its potential resets to `0` and every
//! other neuron is kicked up by a soft-capped `1/N`, so the state stays in
//! `[0, K]^N`. From an observed path the crate estimates `f` by a
//! Nadaraya–Watson ratio of kernel-smoothed spike counts to kernel-smoothed
//! occupation time.
//!
//! ```
//! use spikerate::prelude::*;
//!
//! let params = ModelParams::new(10, 1.0, 1.0, 2.0)?;
//! let f = RateFunction::identity(params.k_max())?;
//! let log = simulate(&params, &f, &SimConfig::new(50.0, 7))?;
//! let q = kernel_make(KernelFamily::Epanechnikov, 1.0, 1)?;
//! let report = estimate_at(&log, 0.5, 0.3, &q, 0.0)?;
//! assert!(report.f_hat > 0.0);
//! # Ok::<(), spikerate::Error>(())
//! ```

pub mod bandwidth;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod flow;
pub mod kernel;
pub mod likelihood;
pub mod logio;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::bandwidth::{scv_select, ScvConfig};
    pub use crate::error::{Error, Result};
    pub use crate::estimator::{default_bandwidth, estimate_at, estimate_with, EstimateOptions, EstimateReport, Threshold};
    pub use crate::experiments::{run_study, KernelSpec, StudyConfig, StudyKind, StudyOptions, StudyOutput};
    pub use crate::kernel::{kernel_for_beta, kernel_make, Kernel, KernelFamily};
    pub use crate::likelihood::{log_likelihood_ratio, perturb, PerturbationSpec};
    pub use crate::logio::{read_log, write_log};
    pub use crate::model::{region_check, Bump, EstimationRegion, HolderClass, LowerEnvelope, ModelParams, RateFunction, RateShape};
    pub use crate::simulator::{simulate, state_at, EventLog, InitialState, SimConfig};
}
