//! Shared fixtures for the benchmarks.

use spikerate::prelude::*;

/// Reference network `N = 100, λ = 1, m = 1, K = 2` with `f = Id`.
pub fn reference() -> (ModelParams, RateFunction) {
    let params = ModelParams::reference();
    let f = RateFunction::identity(params.k_max()).expect("identity rate");
    (params, f)
}

/// One trajectory of the reference network on `[0, horizon]`.
pub fn reference_log(horizon: f64, seed: u64) -> EventLog {
    let (params, f) = reference();
    simulate(&params, &f, &SimConfig::new(horizon, seed)).expect("simulation")
}

/// Epanechnikov kernel on `[-1, 1]`.
pub fn epanechnikov() -> Kernel {
    kernel_make(KernelFamily::Epanechnikov, 1.0, 1).expect("kernel")
}
