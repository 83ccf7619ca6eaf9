//! Log-likelihood ratios between rate functions on an observed path, and the
//! local perturbations used to compare nearby rates.
//!
//! For a log observed on `[0, t]`,
//!
//! `log L^{f1/f0} = Σ_n (ln f1 - ln f0)(Z_n^{I_n}) - Σ_i ∫_0^t (f1 - f0)(X^i_s) ds`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{default_bandwidth, occupation_integral};
use crate::model::{holder_audit, Bump, RateFunction, RateShape};
use crate::simulator::EventLog;

pub fn log_likelihood_ratio(log: &EventLog, f1: &RateFunction, f0: &RateFunction, tol: f64) -> Result<f64> {
    if f1 == f0 {
        return Ok(0.0);
    }
    let mut jumps = 0.0;
    for jump in log.iter() {
        let y = jump.spiking_potential();
        let (v1, v0) = (f1.eval(y), f0.eval(y));
        if v0 == 0.0 && v1 > 0.0 {
            return Err(Error::Singular { y, f1: v1 });
        }
        if v0 == v1 {
            continue;
        }
        // a difference of logs, not ln(v1 / v0), keeps the ratio exactly
        // antisymmetric in (f1, f0)
        jumps += v1.ln() - v0.ln();
    }
    let window = f1.difference_support(f0).unwrap_or((0.0, log.params().k_max()));
    let scale = f1.holder().f_sup + f0.holder().f_sup;
    let occupation = occupation_integral(log, |x| f1.eval(x) - f0.eval(x), window, scale, tol, f64::INFINITY)?;
    Ok(jumps - occupation)
}

/// Local bump `f_t = f0 + b h^{β+1} χ_h(· - a)` with `χ_h(x) = χ(x/h)/h` and
/// `h = t^{-1/(2β+1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub base: RateFunction,
    pub center: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub bump: Bump,
    pub horizon: f64,
}

impl PerturbationSpec {
    /// Half-width of the bump, `h_t`.
    pub fn bandwidth(&self) -> f64 {
        default_bandwidth(self.horizon, self.base.holder().beta)
    }

    /// `f_t(a) - f0(a) = b h_t^β`.
    pub fn height(&self) -> f64 {
        self.amplitude * self.bandwidth().powf(self.base.holder().beta)
    }
}

/// Builds the perturbed rate, auditing both the base and the result against
/// the base's smoothness class on `[0, k_max]`.
pub fn perturb(spec: &PerturbationSpec, k_max: f64) -> Result<RateFunction> {
    if !(spec.amplitude > 0.0 && spec.amplitude.is_finite()) {
        return Err(Error::Amplitude { amplitude: spec.amplitude, reason: "amplitude must be positive".into() });
    }
    if !(spec.horizon > 0.0) {
        return Err(Error::Config(format!("horizon must be positive, got {}", spec.horizon)));
    }
    let h = spec.bandwidth();
    let (a, b) = (spec.center, spec.amplitude);
    if a - h <= 0.0 || a + h >= k_max {
        return Err(Error::Amplitude { amplitude: b, reason: format!("bump [{}, {}] must lie inside (0, {k_max})", a - h, a + h) });
    }
    let step = (h / 50.0).min(k_max / 1000.0);
    let base_audit = holder_audit(&spec.base, k_max, step)?;
    if !base_audit.passed() {
        let names: Vec<&str> = base_audit.failures().map(|c| c.name.as_str()).collect();
        return Err(Error::InvalidRate(format!("base rate fails its own class: {}", names.join(", "))));
    }
    let shape =
        RateShape::Perturbed { base: Box::new(spec.base.shape().clone()), center: a, width: h, height: spec.height(), bump: spec.bump };
    let ft = RateFunction::new(shape, *spec.base.holder())?;
    let audit = holder_audit(&ft, k_max, step)?;
    if !audit.passed() {
        let reason = audit.failures().map(|c| format!("{} ({} > {})", c.name, c.worst, c.bound)).collect::<Vec<_>>().join("; ");
        return Err(Error::Amplitude { amplitude: b, reason });
    }
    Ok(ft)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::simulator::{compensator, simulate, SimConfig};

    fn setup() -> (ModelParams, RateFunction) {
        (ModelParams::new(3, 1.0, 1.0, 2.0).unwrap(), RateFunction::identity(2.0).unwrap())
    }

    fn spec(base: RateFunction, horizon: f64, amplitude: f64) -> PerturbationSpec {
        PerturbationSpec { base, center: 0.5, amplitude, bump: Bump::Biweight, horizon }
    }

    #[test]
    fn perturbation_examples() {
        let (_, f0) = setup();
        let ft = perturb(&spec(f0.clone(), 1000.0, 0.1), 2.0).unwrap();
        assert!((ft.eval(0.5) - 0.5 - 0.01).abs() < 1e-15);
        for x in [0.0, 0.39, 0.61, 1.0, 2.0] {
            assert_eq!(ft.eval(x), f0.eval(x));
        }
        assert!((0..=200).all(|k| {
            let x = k as f64 / 100.0;
            ft.eval(x) >= f0.eval(x)
        }));
        let (lo, hi) = ft.difference_support(&f0).unwrap();
        assert!((lo - 0.4).abs() < 1e-15 && (hi - 0.6).abs() < 1e-15);
    }

    #[test]
    fn oversized_amplitude_is_rejected() {
        let (_, f0) = setup();
        let err = perturb(&spec(f0.clone(), 1000.0, 50.0), 2.0).unwrap_err();
        assert!(matches!(err, Error::Amplitude { .. }), "{err}");
        assert!(perturb(&spec(f0, 1000.0, -1.0), 2.0).is_err());
    }

    #[test]
    fn identical_rates_give_zero() {
        let (p, f0) = setup();
        let log = simulate(&p, &f0, &SimConfig::new(20.0, 1)).unwrap();
        assert_eq!(log_likelihood_ratio(&log, &f0, &f0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn scaled_rate_closed_form() {
        let (p, f0) = setup();
        let log = simulate(&p, &f0, &SimConfig::new(30.0, 6)).unwrap();
        let c = 1.7;
        let f1 = f0.scaled(c).unwrap();
        let llr = log_likelihood_ratio(&log, &f1, &f0, 1e-10).unwrap();
        let comp = compensator(&log, &f0, 1e-10).unwrap();
        let want = log.len() as f64 * c.ln() - (c - 1.0) * comp;
        assert!((llr - want).abs() < 1e-8, "{llr} vs {want}");
    }

    #[test]
    fn exact_antisymmetry() {
        let (p, f0) = setup();
        let log = simulate(&p, &f0, &SimConfig::new(40.0, 3)).unwrap();
        let ft = perturb(&spec(f0.clone(), 40.0, 0.3), 2.0).unwrap();
        let forward = log_likelihood_ratio(&log, &ft, &f0, 1e-10).unwrap();
        let backward = log_likelihood_ratio(&log, &f0, &ft, 1e-10).unwrap();
        assert_eq!(forward, -backward);
        assert!(forward != 0.0);
        let f1 = f0.scaled(1.3).unwrap();
        assert_eq!(log_likelihood_ratio(&log, &f1, &f0, 1e-10).unwrap(), -log_likelihood_ratio(&log, &f0, &f1, 1e-10).unwrap());
    }

    #[test]
    fn jump_where_f0_vanishes_is_singular() {
        use crate::flow::flow_map;
        use crate::simulator::SeedRecord;
        let (p, f1) = setup();
        // slope · y underflows to 0 at the spiking potential y ≈ 1e-14
        let f0 = RateFunction::linear(1e-310, 2.0).unwrap();
        let t = 1e-14;
        let z = vec![flow_map(0.0, t, &p), 1.0, 1.0];
        assert!(z[0] > 0.0 && f0.eval(z[0]) == 0.0);
        let seed = SeedRecord { seed: 0, stream: 0, candidates: 0, words: 0 };
        let log = EventLog::from_parts(p, "x".into(), vec![0.0, 1.0, 1.0], 1.0, vec![(t, 0, z)], seed).unwrap();
        let err = log_likelihood_ratio(&log, &f1, &f0, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }
}
