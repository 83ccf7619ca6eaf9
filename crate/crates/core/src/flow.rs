//! Closed-form inter-spike dynamics and quadrature along the flow.
//!
//! Between spikes each potential follows `γ_t(x) = m + (x - m) e^{-λ t}`.
//! Integrals of functions of the potential along a segment are computed in
//! the time variable, never through the change of variables `dz = -b(z) dt`,
//! which is singular at `z = m`.

use crate::error::{Error, Result};
use crate::model::{ModelParams, NetworkState};
use crate::quadrature;

/// Drift `b(x) = λ (x - m)`; the flow solves `dγ = -b(γ) dt`.
#[inline]
pub fn drift(x: f64, params: &ModelParams) -> f64 {
    params.lambda() * (x - params.m())
}

/// Potential after relaxing for `dt` from `x`, given the decay factor `e^{-λ dt}`.
#[inline]
pub fn relax(x: f64, m: f64, decay: f64) -> f64 {
    let y = m + (x - m) * decay;
    // stays between x and m
    if x >= m {
        y.clamp(m, x)
    } else {
        y.clamp(x, m)
    }
}

/// `γ_dt(x)`.
#[inline]
pub fn flow_map(x: f64, dt: f64, params: &ModelParams) -> f64 {
    if dt == 0.0 {
        return x;
    }
    relax(x, params.m(), (-params.lambda() * dt).exp())
}

/// Time needed by the flow started at `y` to reach `z`.
///
/// `z` must lie in the half-open interval from `y` (inclusive) toward `m`
/// (exclusive); any other target is never reached.
pub fn flow_inverse(y: f64, z: f64, params: &ModelParams) -> Result<f64> {
    if z == y {
        return Ok(0.0);
    }
    let m = params.m();
    let ratio = (y - m) / (z - m);
    if !(ratio > 1.0) || !ratio.is_finite() {
        return Err(Error::Domain(format!("flow from {y} never reaches {z} (equilibrium {m})")));
    }
    Ok(ratio.ln() / params.lambda())
}

/// Sub-interval of `[0, duration]` during which the flow started at `x0`
/// stays inside `[lo, hi]`, or `None` when it never enters.
pub fn transit_window(x0: f64, lo: f64, hi: f64, duration: f64, params: &ModelParams) -> Option<(f64, f64)> {
    let m = params.m();
    let x1 = flow_map(x0, duration, params);
    let (min, max) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    if max < lo || min > hi || duration <= 0.0 {
        return None;
    }
    if x0 == m {
        return Some((0.0, duration));
    }
    let hit = |z: f64| ((x0 - m) / (z - m)).ln() / params.lambda();
    let (enter, exit) = if x0 > m {
        let enter = if x0 > hi { hit(hi) } else { 0.0 };
        let exit = if lo > m { hit(lo) } else { duration };
        (enter, exit)
    } else {
        let enter = if x0 < lo { hit(lo) } else { 0.0 };
        let exit = if hi < m { hit(hi) } else { duration };
        (enter, exit)
    };
    let (enter, exit) = (enter.clamp(0.0, duration), exit.clamp(0.0, duration));
    (exit > enter).then_some((enter, exit))
}

/// A function of one potential, optionally declaring where it can be nonzero.
pub trait Integrand {
    fn value(&self, x: f64) -> f64;

    fn support(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<F: Fn(f64) -> f64> Integrand for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

/// Wraps a function that vanishes outside `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct Windowed<F> {
    pub f: F,
    pub lo: f64,
    pub hi: f64,
}

impl<F: Fn(f64) -> f64> Integrand for Windowed<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn support(&self) -> Option<(f64, f64)> {
        Some((self.lo, self.hi))
    }
}

/// Piece of a trajectory with no spike: the state at its start and its length.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSegment {
    pub start: NetworkState,
    pub duration: f64,
}

impl FlowSegment {
    pub fn new(start: NetworkState, duration: f64) -> Result<Self> {
        if !(duration >= 0.0) {
            return Err(Error::Domain(format!("segment duration must be >= 0, got {duration}")));
        }
        Ok(Self { start, duration })
    }
}

/// `∫_0^duration g(γ_u(x0)) du` for a single potential.
pub fn integrate_along<G: Integrand + ?Sized>(g: &G, x0: f64, duration: f64, params: &ModelParams, tol: f64) -> Result<f64> {
    let (t0, t1) = match g.support() {
        Some((lo, hi)) => match transit_window(x0, lo, hi, duration, params) {
            Some(w) => w,
            None => return Ok(0.0),
        },
        None => (0.0, duration),
    };
    if t1 <= t0 {
        return Ok(0.0);
    }
    let m = params.m();
    let lambda = params.lambda();
    quadrature::integrate(|u| g.value(relax(x0, m, (-lambda * u).exp())), t0, t1, tol)
}

/// `∫_0^duration g(X^neuron_u) du` along `seg`.
pub fn segment_integral<G: Integrand + ?Sized>(g: &G, seg: &FlowSegment, neuron: usize, params: &ModelParams, tol: f64) -> Result<f64> {
    let n = seg.start.potentials.len();
    let x0 = *seg.start.potentials.get(neuron).ok_or(Error::IndexOutOfRange { index: neuron, n })?;
    integrate_along(g, x0, seg.duration, params, tol)
}

/// `∫_0^duration φ(γ_u(x)) du` for a function of the whole state.
pub fn integrate_state_along<F>(phi: F, start: &[f64], duration: f64, params: &ModelParams, tol: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let m = params.m();
    let lambda = params.lambda();
    let mut buf = start.to_vec();
    quadrature::integrate(
        |u| {
            let decay = (-lambda * u).exp();
            for (b, &x) in buf.iter_mut().zip(start) {
                *b = relax(x, m, decay);
            }
            phi(&buf)
        },
        0.0,
        duration,
        tol,
    )
}
