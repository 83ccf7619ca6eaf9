//! Exact simulation by thinning.
//!
//! Candidate spike times come from a homogeneous Poisson stream of rate
//! `N f(K)`, which dominates the total intensity because `f` is
//! non-decreasing and potentials never exceed `K`. At each candidate the
//! state is advanced along the flow and one uniform `u` decides both
//! acceptance (`u N f(K) < Σ_i f(x_i)`) and, on acceptance, the spiking
//! neuron (the first `i` whose partial sum `Σ_{j≤i} f(x_j)` exceeds
//! `u N f(K)`), which picks `i` with probability `f(x_i) / Σ_j f(x_j)`.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{self, integrate_along, relax};
use crate::model::{apply_jump, ModelParams, NetworkState, RateFunction};
use crate::rng::{stream_rng, StreamRng};

/// Where the trajectory starts.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Every potential at the equilibrium `m`.
    #[default]
    Equilibrium,
    Zero,
    /// Every potential at the ceiling `K`.
    Ceiling,
    /// Every potential drawn uniformly on `[0, K]` from the replication stream.
    Uniform,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    /// Stream index within the master seed (one per replication).
    #[serde(default)]
    pub stream: u64,
    #[serde(default)]
    pub initial: InitialState,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        Self { horizon, seed, stream: 0, initial: InitialState::default() }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_initial(mut self, initial: InitialState) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// Seed provenance and how much of the stream the run consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub stream: u64,
    /// Candidate times drawn from the dominating stream (accepted or not).
    pub candidates: u64,
    /// 32-bit words consumed from the generator.
    pub words: u64,
}

/// One accepted spike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump<'a> {
    pub time: f64,
    pub index: usize,
    /// Full state just before the spike, `X_{T-}`.
    pub pre_state: &'a [f64],
}

impl Jump<'_> {
    /// Potential of the spiking neuron just before it fired.
    pub fn spiking_potential(&self) -> f64 {
        self.pre_state[self.index]
    }
}

/// Complete record of one trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    params: ModelParams,
    rate_id: String,
    x0: Vec<f64>,
    horizon: f64,
    times: Vec<f64>,
    indices: Vec<u32>,
    pre_states: Vec<f64>,
    seed: SeedRecord,
}

/// Tolerance for checking that logged pre-jump states replay from the flow.
pub const REPLAY_TOL: f64 = 1e-9;

impl EventLog {
    /// Assembles a log, checking its structural invariants.
    pub fn from_parts(
        params: ModelParams,
        rate_id: String,
        x0: Vec<f64>,
        horizon: f64,
        jumps: Vec<(f64, usize, Vec<f64>)>,
        seed: SeedRecord,
    ) -> Result<Self> {
        let n = params.n_neurons();
        NetworkState::new(x0.clone(), 0.0).validate(&params)?;
        if !(horizon > 0.0) {
            return Err(Error::Format(format!("horizon must be positive, got {horizon}")));
        }
        let mut times = Vec::with_capacity(jumps.len());
        let mut indices = Vec::with_capacity(jumps.len());
        let mut pre_states = Vec::with_capacity(jumps.len() * n);
        let mut last = 0.0;
        for (k, (t, i, z)) in jumps.into_iter().enumerate() {
            if !(t > last && t <= horizon) {
                return Err(Error::Format(format!("jump {k}: time {t} not in ({last}, {horizon}]")));
            }
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if z.len() != n {
                return Err(Error::Format(format!("jump {k}: {} potentials, expected {n}", z.len())));
            }
            last = t;
            times.push(t);
            indices.push(i as u32);
            pre_states.extend_from_slice(&z);
        }
        let log = Self { params, rate_id, x0, horizon, times, indices, pre_states, seed };
        log.check_replay(REPLAY_TOL)?;
        Ok(log)
    }

    /// Verifies each pre-jump state is the flow of the previous post-jump state.
    pub fn check_replay(&self, tol: f64) -> Result<()> {
        let mut state = self.x0.clone();
        let mut t = 0.0;
        for (k, jump) in self.iter().enumerate() {
            let decay = (-self.params.lambda() * (jump.time - t)).exp();
            for (x, &z) in state.iter().zip(jump.pre_state) {
                let expected = relax(*x, self.params.m(), decay);
                if (expected - z).abs() > tol {
                    return Err(Error::Format(format!("jump {k}: pre-jump potential {z} does not replay (expected {expected})")));
                }
            }
            state.copy_from_slice(jump.pre_state);
            apply_jump(&mut state, jump.index, self.params.cap());
            t = jump.time;
        }
        Ok(())
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn rate_id(&self) -> &str {
        &self.rate_id
    }
    pub fn x0(&self) -> &[f64] {
        &self.x0
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn seed(&self) -> &SeedRecord {
        &self.seed
    }
    pub fn n_neurons(&self) -> usize {
        self.params.n_neurons()
    }
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// The `k`-th jump, 0-based.
    pub fn jump(&self, k: usize) -> Jump<'_> {
        let n = self.n_neurons();
        Jump { time: self.times[k], index: self.indices[k] as usize, pre_state: &self.pre_states[k * n..(k + 1) * n] }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Jump<'_>> + '_ {
        (0..self.len()).map(move |k| self.jump(k))
    }

    /// Pre-jump state vectors, flattened row-major (`len() × N`).
    pub fn pre_states(&self) -> &[f64] {
        &self.pre_states
    }

    /// Walks the spike-free segments covering `[0, min(until, horizon)]`,
    /// calling `visit(start_time, start_state, duration)` for each.
    pub fn for_each_segment<F>(&self, until: f64, mut visit: F) -> Result<()>
    where
        F: FnMut(f64, &[f64], f64) -> Result<()>,
    {
        let end = until.min(self.horizon);
        let mut state = self.x0.clone();
        let mut t = 0.0;
        for jump in self.iter() {
            if jump.time > end {
                break;
            }
            visit(t, &state, jump.time - t)?;
            state.copy_from_slice(jump.pre_state);
            apply_jump(&mut state, jump.index, self.params.cap());
            t = jump.time;
        }
        if end > t {
            visit(t, &state, end - t)?;
        }
        Ok(())
    }

    /// The same trajectory observed on `[0, t]` only.
    pub fn truncated(&self, t: f64) -> Result<EventLog> {
        if !(t > 0.0 && t <= self.horizon) {
            return Err(Error::Domain(format!("cannot truncate a log on [0, {}] at {t}", self.horizon)));
        }
        let k = self.count_until(t);
        let n = self.n_neurons();
        Ok(EventLog {
            params: self.params,
            rate_id: self.rate_id.clone(),
            x0: self.x0.clone(),
            horizon: t,
            times: self.times[..k].to_vec(),
            indices: self.indices[..k].to_vec(),
            pre_states: self.pre_states[..k * n].to_vec(),
            seed: self.seed,
        })
    }

    /// Number of jumps in `[0, t]`.
    pub fn count_until(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t)
    }
}

/// Simulates the network on `[0, cfg.horizon]`.
pub fn simulate(params: &ModelParams, f: &RateFunction, cfg: &SimConfig) -> Result<EventLog> {
    cfg.validate()?;
    let n = params.n_neurons();
    let k_max = params.k_max();
    let envelope = n as f64 * f.eval(k_max);
    if !(envelope > 0.0 && envelope.is_finite()) {
        return Err(Error::Config(format!("f(K) = {} gives no dominating rate", f.eval(k_max))));
    }
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let x0 = initial_state(params, &cfg.initial, &mut rng)?;

    let (m, lambda, cap) = (params.m(), params.lambda(), *params.cap());
    let mut x = x0.clone();
    let mut t = 0.0;
    let mut candidates = 0u64;
    let mut times = Vec::new();
    let mut indices = Vec::new();
    let mut pre_states = Vec::new();
    loop {
        let e: f64 = rng.sample(Exp1);
        let dt = e / envelope;
        candidates += 1;
        if t + dt > cfg.horizon {
            break;
        }
        t += dt;
        let decay = (-lambda * dt).exp();
        for xi in x.iter_mut() {
            *xi = relax(*xi, m, decay);
        }
        let u: f64 = rng.random();
        let threshold = u * envelope;
        let mut acc = 0.0;
        let mut chosen = None;
        for (i, &xi) in x.iter().enumerate() {
            acc += f.eval(xi);
            if threshold < acc {
                chosen = Some(i);
                break;
            }
        }
        if let Some(i) = chosen {
            times.push(t);
            indices.push(i as u32);
            pre_states.extend_from_slice(&x);
            apply_jump(&mut x, i, &cap);
        }
    }
    let seed = SeedRecord { seed: cfg.seed, stream: cfg.stream, candidates, words: rng.get_word_pos() as u64 };
    Ok(EventLog { params: *params, rate_id: f.descriptor(), x0, horizon: cfg.horizon, times, indices, pre_states, seed })
}

fn initial_state(params: &ModelParams, initial: &InitialState, rng: &mut StreamRng) -> Result<Vec<f64>> {
    let n = params.n_neurons();
    let x0 = match initial {
        InitialState::Equilibrium => vec![params.m(); n],
        InitialState::Zero => vec![0.0; n],
        InitialState::Ceiling => vec![params.k_max(); n],
        InitialState::Uniform => (0..n).map(|_| rng.random::<f64>() * params.k_max()).collect(),
        InitialState::Explicit(v) => v.clone(),
    };
    NetworkState::new(x0.clone(), 0.0).validate(params)?;
    Ok(x0)
}

/// Reconstructs `X_t` from the log (right-continuous at jump times).
pub fn state_at(log: &EventLog, t: f64) -> Result<NetworkState> {
    if !(t >= 0.0 && t <= log.horizon()) {
        return Err(Error::Domain(format!("time {t} outside [0, {}]", log.horizon())));
    }
    let k = log.count_until(t);
    let params = log.params();
    let (mut x, t0) = if k == 0 {
        (log.x0().to_vec(), 0.0)
    } else {
        let jump = log.jump(k - 1);
        let mut x = jump.pre_state.to_vec();
        apply_jump(&mut x, jump.index, params.cap());
        (x, jump.time)
    };
    if t > t0 {
        let decay = (-params.lambda() * (t - t0)).exp();
        for xi in x.iter_mut() {
            *xi = relax(*xi, params.m(), decay);
        }
    }
    Ok(NetworkState::new(x, t))
}

/// `Σ_i ∫_0^t f(X^i_s) ds`, the compensator of the spike count.
pub fn compensator(log: &EventLog, f: &RateFunction, tol: f64) -> Result<f64> {
    let params = *log.params();
    let n_segments = (log.len() + 1) * log.n_neurons();
    let seg_tol = tol / n_segments as f64;
    let g = |x: f64| f.eval(x);
    let mut total = 0.0;
    log.for_each_segment(f64::INFINITY, |_, state, duration| {
        for &x in state {
            total += integrate_along(&g, x, duration, &params, seg_tol)?;
        }
        Ok(())
    })?;
    Ok(total)
}

/// Settings for the regeneration-set probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegenProbeConfig {
    pub epsilon: f64,
    pub delta_star: f64,
    /// Consecutive windows of length `t* = N ε` probed per replication.
    pub windows: usize,
}

impl RegenProbeConfig {
    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !(self.epsilon > 0.0 && self.delta_star > 0.0 && self.windows > 0) {
            return Err(Error::Config("regeneration probe needs ε, δ* > 0 and at least one window".into()));
        }
        let n = params.n_neurons() as f64;
        if !(params.k_max() > 1.0 + 1.0 / n) {
            return Err(Error::Config(format!("regeneration probe needs K > 1 + 1/N, got K = {}", params.k_max())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegenProbeReport {
    pub u_star: Vec<f64>,
    pub t_star: f64,
    pub trials: usize,
    /// Empirical frequency of `A_ε ∩ S` and its standard error.
    pub event_freq: f64,
    pub event_se: f64,
    /// Empirical frequency of `X_{t*} ∈ B_{δ*}(u*)` and its standard error.
    pub ball_freq: f64,
    pub ball_se: f64,
    /// `((ε/4) f_min((1 - e^{-3λε/4}) m) e^{-t* N F})^N`.
    pub analytic_bound: f64,
}

/// The staircase configuration `((N-1)/N, ..., 1/N, 0)`.
pub fn u_star(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (n - i) as f64 / n as f64).collect()
}

/// Lower bound on `P_v(A_ε ∩ S)` valid for every start `v`.
pub fn regen_lower_bound(params: &ModelParams, f: &RateFunction, epsilon: f64) -> f64 {
    let n = params.n_neurons() as f64;
    let class = f.holder();
    let t_star = n * epsilon;
    let arg = (1.0 - (-0.75 * params.lambda() * epsilon).exp()) * params.m();
    (0.25 * epsilon * class.f_min.eval(arg) * (-t_star * n * class.f_sup).exp()).powf(n)
}

/// Monte Carlo probe of the controllability event behind the regeneration set.
///
/// Each replication starts from a uniform random state and is cut into
/// `windows` consecutive windows of length `t*`; every window is one trial
/// started from wherever the process is.
pub fn regen_probe(
    params: &ModelParams,
    f: &RateFunction,
    cfg: &RegenProbeConfig,
    replications: usize,
    seed: u64,
) -> Result<RegenProbeReport> {
    use rayon::prelude::*;
    cfg.validate(params)?;
    let n = params.n_neurons();
    let eps = cfg.epsilon;
    let t_star = n as f64 * eps;
    let target = u_star(n);
    let per_rep: Vec<(usize, usize)> = (0..replications)
        .into_par_iter()
        .map(|rep| -> Result<(usize, usize)> {
            let sim = SimConfig::new(t_star * cfg.windows as f64, seed).with_stream(rep as u64).with_initial(InitialState::Uniform);
            let log = simulate(params, f, &sim)?;
            let (mut hits, mut balls) = (0, 0);
            for w in 0..cfg.windows {
                let start = w as f64 * t_star;
                let first = log.count_until(start);
                let ok = (0..n).all(|i| {
                    log.times().get(first + i).is_some_and(|&t| {
                        let rel = t - start;
                        let lo = (i + 1) as f64 * eps - 0.25 * eps;
                        let hi = (i + 1) as f64 * eps;
                        rel > lo && rel < hi && log.jump(first + i).index == i
                    })
                });
                hits += ok as usize;
                let end = state_at(&log, (start + t_star).min(log.horizon()))?;
                let dist: f64 = end.potentials.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                balls += (dist < cfg.delta_star) as usize;
            }
            Ok((hits, balls))
        })
        .collect::<Result<_>>()?;
    let trials = replications * cfg.windows;
    let (hits, balls) = per_rep.iter().fold((0, 0), |(a, b), (h, c)| (a + h, b + c));
    let freq = |k: usize| k as f64 / trials as f64;
    let se = |p: f64| (p * (1.0 - p) / trials as f64).sqrt();
    let (event_freq, ball_freq) = (freq(hits), freq(balls));
    Ok(RegenProbeReport {
        u_star: target,
        t_star,
        trials,
        event_freq,
        event_se: se(event_freq),
        ball_freq,
        ball_se: se(ball_freq),
        analytic_bound: regen_lower_bound(params, f, eps),
    })
}

/// Convenience for tests and harnesses: flow the whole state forward by `dt`.
pub fn advance(state: &mut [f64], dt: f64, params: &ModelParams) {
    for x in state.iter_mut() {
        *x = flow::flow_map(*x, dt, params);
    }
}
