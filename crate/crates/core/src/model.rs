//! Network parameters, spiking-rate functions and the jump map.
//!
//! A network of `N` neurons has potentials in `[0, K]`. Between spikes every
//! potential relaxes exponentially toward the equilibrium `m` at speed
//! `lambda`. When neuron `i` spikes its potential is reset to `0` and every
//! other neuron `j` receives the kick `a_K(x_j)`, which equals `1/N` away from
//! the ceiling and shrinks smoothly to `0` at `K`.

use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smooth kick function `a_K: [0, K] -> [0, 1/N]`.
///
/// `a_K(x) = σ(u) / N` with `u = N (K - x) / 2` clamped to `[0, 1]` and the
/// smoothstep `σ(u) = u² (3 - 2u)`. Since `σ(u) < 2u` on `(0, 1]`, a kicked
/// potential never leaves `[0, K]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftCap {
    n_neurons: usize,
    k_max: f64,
}

impl SoftCap {
    pub fn new(n_neurons: usize, k_max: f64) -> Self {
        Self { n_neurons, k_max }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.n_neurons as f64;
        let u = (0.5 * n * (self.k_max - x)).clamp(0.0, 1.0);
        u * u * (3.0 - 2.0 * u) / n
    }

    /// Potential after receiving one kick, kept inside `[0, K]`.
    #[inline]
    pub fn kick(&self, x: f64) -> f64 {
        (x + self.eval(x)).min(self.k_max)
    }
}

/// Physical constants of the network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    n_neurons: usize,
    lambda: f64,
    m: f64,
    k_max: f64,
    cap: SoftCap,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n_neurons: usize,
    lambda: f64,
    m: f64,
    k_max: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.n_neurons, raw.lambda, raw.m, raw.k_max)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { n_neurons: p.n_neurons, lambda: p.lambda, m: p.m, k_max: p.k_max }
    }
}

impl ModelParams {
    pub fn new(n_neurons: usize, lambda: f64, m: f64, k_max: f64) -> Result<Self> {
        if n_neurons == 0 {
            return Err(Error::InvalidParams("network needs at least one neuron".into()));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        if !(k_max.is_finite() && m > 0.0 && m < k_max) {
            return Err(Error::InvalidParams(format!("need 0 < m < K, got m = {m}, K = {k_max}")));
        }
        if k_max < 2.0 / n_neurons as f64 {
            return Err(Error::InvalidParams(format!("need K >= 2/N, got K = {k_max} with N = {n_neurons}")));
        }
        Ok(Self { n_neurons, lambda, m, k_max, cap: SoftCap::new(n_neurons, k_max) })
    }

    /// The setting used throughout the simulation section: N=100, λ=1, m=1, K=2.
    pub fn reference() -> Self {
        Self::new(100, 1.0, 1.0, 2.0).expect("reference parameters are valid")
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn k_max(&self) -> f64 {
        self.k_max
    }
    pub fn cap(&self) -> &SoftCap {
        &self.cap
    }

    /// Same network with a different relaxation speed.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.n_neurons, lambda, self.m, self.k_max)
    }
}

/// Snapshot of all potentials at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub potentials: Vec<f64>,
    pub clock: f64,
}

impl NetworkState {
    pub fn new(potentials: Vec<f64>, clock: f64) -> Self {
        Self { potentials, clock }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if self.potentials.len() != params.n_neurons() {
            return Err(Error::InvalidState(format!("expected {} potentials, got {}", params.n_neurons(), self.potentials.len())));
        }
        if let Some(x) = self.potentials.iter().find(|x| !(**x >= 0.0 && **x <= params.k_max())) {
            return Err(Error::InvalidState(format!("potential {x} outside [0, {}]", params.k_max())));
        }
        if !(self.clock >= 0.0) {
            return Err(Error::InvalidState(format!("negative clock {}", self.clock)));
        }
        Ok(())
    }
}

/// Applies the jump map in place: neuron `i` resets, the others are kicked.
#[inline]
pub fn apply_jump(potentials: &mut [f64], i: usize, cap: &SoftCap) {
    for (j, x) in potentials.iter_mut().enumerate() {
        *x = if j == i { 0.0 } else { cap.kick(*x) };
    }
}

/// Post-spike state when neuron `i` (0-based) fires from `state`.
pub fn delta_jump(state: &NetworkState, i: usize, params: &ModelParams) -> Result<NetworkState> {
    if i >= state.potentials.len() {
        return Err(Error::IndexOutOfRange { index: i, n: state.potentials.len() });
    }
    state.validate(params)?;
    let mut out = state.clone();
    apply_jump(&mut out.potentials, i, params.cap());
    Ok(out)
}

/// Total spiking intensity `Σ_i f(x_i)`.
pub fn rate_bar(potentials: &[f64], f: &RateFunction) -> f64 {
    potentials.iter().map(|&x| f.eval(x)).sum()
}

/// Non-decreasing lower envelope `f_min`, positive away from zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerEnvelope {
    /// `coef * x`
    Linear { coef: f64 },
    /// `coef * x^exponent`
    Power { coef: f64, exponent: f64 },
}

impl LowerEnvelope {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            LowerEnvelope::Linear { coef } => coef * x.max(0.0),
            LowerEnvelope::Power { coef, exponent } => coef * x.max(0.0).powf(exponent),
        }
    }
}

/// Smoothness class `H(β, F, L, f_min)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderClass {
    /// Smoothness `β = k + α`.
    pub beta: f64,
    /// Bound `F` on `f` and its first `⌊β⌋` derivatives.
    pub f_sup: f64,
    /// Hölder constant `L` of the `⌊β⌋`-th derivative.
    pub lipschitz: f64,
    pub f_min: LowerEnvelope,
}

impl HolderClass {
    pub fn new(beta: f64, f_sup: f64, lipschitz: f64, f_min: LowerEnvelope) -> Result<Self> {
        let class = Self { beta, f_sup, lipschitz, f_min };
        class.validate()?;
        Ok(class)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.f_sup > 0.0 && self.lipschitz > 0.0) {
            return Err(Error::InvalidRate(format!(
                "Hölder class needs β, F, L > 0 (got {}, {}, {})",
                self.beta, self.f_sup, self.lipschitz
            )));
        }
        if !(self.f_min.eval(1e-3) > 0.0) {
            return Err(Error::InvalidRate("f_min must be positive for x > 0".into()));
        }
        Ok(())
    }

    /// `k = ⌊β⌋`.
    pub fn order(&self) -> u32 {
        self.beta.floor() as u32
    }

    /// `α = β - ⌊β⌋`.
    pub fn alpha(&self) -> f64 {
        self.beta - self.beta.floor()
    }
}

/// Piecewise-linear rate read from `(x, f(x))` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl PiecewiseLinear {
    /// Knots must start at `(0, 0)`, have strictly increasing `x`,
    /// non-decreasing `f`, and `f > 0` after the first knot.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::InvalidRate("table needs at least two (x, f) pairs".into()));
        }
        if xs[0] != 0.0 || ys[0] != 0.0 {
            return Err(Error::InvalidRate("table must start at (0, 0)".into()));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidRate("table contains non-finite values".into()));
        }
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidRate(format!("table x not increasing at {}", w[1])));
            }
        }
        for (k, w) in ys.windows(2).enumerate() {
            if w[1] < w[0] {
                return Err(Error::InvalidRate(format!("table f decreases between x = {} and x = {}", xs[k], xs[k + 1])));
            }
        }
        if !(ys[1] > 0.0) {
            return Err(Error::InvalidRate("table must be positive for x > 0".into()));
        }
        Ok(Self { xs, ys })
    }

    /// Reads a two-column CSV `x,f`; a non-numeric first row is treated as a header.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() < 2 {
                return Err(Error::InvalidRate(format!("row {} has fewer than two columns", line + 1)));
            }
            match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if line == 0 => continue,
                _ => return Err(Error::InvalidRate(format!("row {} is not numeric", line + 1))),
            }
        }
        Self::new(xs, ys)
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Linear interpolation, constant beyond the last knot.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let last = self.xs.len() - 1;
        if x >= self.xs[last] {
            return self.ys[last];
        }
        let k = self.xs.partition_point(|&v| v <= x) - 1;
        let w = (x - self.xs[k]) / (self.xs[k + 1] - self.xs[k]);
        self.ys[k] + w * (self.ys[k + 1] - self.ys[k])
    }
}

/// Compactly supported bump used to perturb a rate function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bump {
    /// `(1 - u²)²` on `[-1, 1]`.
    #[default]
    Biweight,
    /// `(1 - u²)³` on `[-1, 1]`.
    Triweight,
}

impl Bump {
    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u.abs() >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - u * u;
        match self {
            Bump::Biweight => s * s,
            Bump::Triweight => s * s * s,
        }
    }
}

/// Family tag of a rate function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateFamily {
    Linear,
    Log1p,
    ExpM1,
    UserTable,
}

/// Functional form of a rate `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum RateShape {
    /// `slope * x`
    Linear {
        slope: f64,
    },
    /// `ln(1 + x)`
    Log1p,
    /// `e^x - 1`
    ExpM1,
    Table(PiecewiseLinear),
    /// `factor * inner(x)`
    Scaled {
        factor: f64,
        inner: Box<RateShape>,
    },
    /// `base(x) + height * bump((x - center) / width)`
    Perturbed {
        base: Box<RateShape>,
        center: f64,
        width: f64,
        height: f64,
        bump: Bump,
    },
}

impl RateShape {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            RateShape::Linear { slope } => slope * x,
            RateShape::Log1p => x.ln_1p(),
            RateShape::ExpM1 => x.exp_m1(),
            RateShape::Table(t) => t.eval(x),
            RateShape::Scaled { factor, inner } => factor * inner.eval(x),
            RateShape::Perturbed { base, center, width, height, bump } => base.eval(x) + height * bump.eval((x - center) / width),
        }
    }

    fn family(&self) -> RateFamily {
        match self {
            RateShape::Linear { .. } => RateFamily::Linear,
            RateShape::Log1p => RateFamily::Log1p,
            RateShape::ExpM1 => RateFamily::ExpM1,
            RateShape::Table(_) => RateFamily::UserTable,
            RateShape::Scaled { inner, .. } => inner.family(),
            RateShape::Perturbed { base, .. } => base.family(),
        }
    }
}

impl fmt::Display for RateShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateShape::Linear { slope } => write!(f, "linear({slope})"),
            RateShape::Log1p => write!(f, "log1p"),
            RateShape::ExpM1 => write!(f, "expm1"),
            RateShape::Table(t) => write!(f, "table({} knots)", t.xs.len()),
            RateShape::Scaled { factor, inner } => write!(f, "{factor}*{inner}"),
            RateShape::Perturbed { base, center, width, height, bump } => {
                write!(f, "{base}+{height}*{bump:?}((x-{center})/{width})")
            }
        }
    }
}

/// An intensity `f: [0, K] -> [0, ∞)` together with its smoothness class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFunction {
    shape: RateShape,
    holder: HolderClass,
}

impl RateFunction {
    /// Checks `f(0) = 0`, positivity and finiteness of the parameters.
    pub fn new(shape: RateShape, holder: HolderClass) -> Result<Self> {
        holder.validate()?;
        Self::check_shape(&shape)?;
        let f0 = shape.eval(0.0);
        if f0.abs() > 1e-12 {
            return Err(Error::InvalidRate(format!("f(0) must be 0, got {f0}")));
        }
        Ok(Self { shape, holder })
    }

    fn check_shape(shape: &RateShape) -> Result<()> {
        match shape {
            RateShape::Linear { slope } if !(*slope > 0.0 && slope.is_finite()) => {
                Err(Error::InvalidRate(format!("linear slope must be positive, got {slope}")))
            }
            RateShape::Scaled { factor, inner } => {
                if !(*factor > 0.0 && factor.is_finite()) {
                    return Err(Error::InvalidRate(format!("scale factor must be positive, got {factor}")));
                }
                Self::check_shape(inner)
            }
            RateShape::Perturbed { base, width, height, .. } => {
                if !(*width > 0.0 && *height >= 0.0) {
                    return Err(Error::InvalidRate("perturbation needs width > 0, height >= 0".into()));
                }
                Self::check_shape(base)
            }
            _ => Ok(()),
        }
    }

    /// `f(x) = slope * x` with class `H(1, 1.5·slope·max(K,1), slope, slope/2 · x)`.
    pub fn linear(slope: f64, k_max: f64) -> Result<Self> {
        let holder = HolderClass::new(1.0, 1.5 * slope * k_max.max(1.0), slope, LowerEnvelope::Linear { coef: 0.5 * slope })?;
        Self::new(RateShape::Linear { slope }, holder)
    }

    /// `f(x) = x`.
    pub fn identity(k_max: f64) -> Result<Self> {
        Self::linear(1.0, k_max)
    }

    /// `f(x) = ln(1 + x)`.
    pub fn log1p(k_max: f64) -> Result<Self> {
        let holder = HolderClass::new(1.0, 1.5 * k_max.ln_1p().max(1.0), 1.0, LowerEnvelope::Linear { coef: 0.5 * k_max.ln_1p() / k_max })?;
        Self::new(RateShape::Log1p, holder)
    }

    /// `f(x) = e^x - 1`.
    pub fn expm1(k_max: f64) -> Result<Self> {
        let holder = HolderClass::new(1.0, 1.5 * k_max.exp(), k_max.exp(), LowerEnvelope::Linear { coef: 1.0 })?;
        Self::new(RateShape::ExpM1, holder)
    }

    /// Piecewise-linear table with a class derived from its slopes.
    pub fn table(table: PiecewiseLinear) -> Result<Self> {
        let slopes: Vec<f64> = table.xs.windows(2).zip(table.ys.windows(2)).map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0])).collect();
        let max_slope = slopes.iter().copied().fold(0.0, f64::max);
        let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let y_max = *table.ys.last().unwrap();
        let ratio = table.knots().skip(1).map(|(x, y)| y / x).fold(f64::INFINITY, f64::min);
        let holder = HolderClass::new(
            1.0,
            1.5 * y_max.max(max_slope),
            (max_slope - min_slope).max(1e-9),
            LowerEnvelope::Linear { coef: 0.5 * ratio },
        )?;
        Self::new(RateShape::Table(table), holder)
    }

    /// `c · f` with the class scaled accordingly.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let holder = HolderClass {
            f_sup: self.holder.f_sup * factor,
            lipschitz: self.holder.lipschitz * factor,
            f_min: match self.holder.f_min {
                LowerEnvelope::Linear { coef } => LowerEnvelope::Linear { coef: coef * factor },
                LowerEnvelope::Power { coef, exponent } => LowerEnvelope::Power { coef: coef * factor, exponent },
            },
            ..self.holder
        };
        let shape = match &self.shape {
            RateShape::Linear { slope } => RateShape::Linear { slope: slope * factor },
            other => RateShape::Scaled { factor, inner: Box::new(other.clone()) },
        };
        Self::new(shape, holder)
    }

    pub fn with_holder(mut self, holder: HolderClass) -> Result<Self> {
        holder.validate()?;
        self.holder = holder;
        Ok(self)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.shape.eval(x)
    }

    pub fn shape(&self) -> &RateShape {
        &self.shape
    }

    pub fn holder(&self) -> &HolderClass {
        &self.holder
    }

    pub fn family(&self) -> RateFamily {
        self.shape.family()
    }

    /// Short text identifier stored alongside event logs.
    pub fn descriptor(&self) -> String {
        self.shape.to_string()
    }

    /// Interval outside of which `self` and `other` coincide, when known.
    pub fn difference_support(&self, other: &RateFunction) -> Option<(f64, f64)> {
        fn window(a: &RateShape, b: &RateShape) -> Option<(f64, f64)> {
            match a {
                RateShape::Perturbed { base, center, width, .. } if base.as_ref() == b => Some((center - width, center + width)),
                _ => None,
            }
        }
        window(&self.shape, &other.shape).or_else(|| window(&other.shape, &self.shape))
    }
}

/// One numeric membership check of [`holder_audit`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: String,
    /// Worst observed value of the audited quantity.
    pub worst: f64,
    /// The bound it is compared against.
    pub bound: f64,
    /// Where the worst value occurred.
    pub at: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderAudit {
    pub checks: Vec<AuditCheck>,
}

impl HolderAudit {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Relative slack for grid comparisons.
const AUDIT_SLACK: f64 = 1e-9;

/// Numerically checks `f ∈ H(β, F, L, f_min)` on a grid of `[0, K]`.
///
/// Derivatives are central finite differences of the grid values; the
/// Hölder quotient of the `⌊β⌋`-th derivative is checked over all grid
/// pairs (its oscillation when `α = 0`).
pub fn holder_audit(f: &RateFunction, k_max: f64, grid_step: f64) -> Result<HolderAudit> {
    if !(grid_step > 0.0 && grid_step < k_max) {
        return Err(Error::Domain(format!("grid step must lie in (0, K), got {grid_step}")));
    }
    let class = f.holder();
    let n = (k_max / grid_step).ceil() as usize;
    let step = k_max / n as f64;
    let xs: Vec<f64> = (0..=n).map(|k| (k as f64 * step).min(k_max)).collect();
    let values: Vec<f64> = xs.iter().map(|&x| f.eval(x)).collect();
    let mut checks = Vec::new();
    let within = |worst: f64, bound: f64| worst <= bound + AUDIT_SLACK * bound.abs().max(1.0);

    checks.push(AuditCheck { name: "f(0) = 0".into(), worst: values[0].abs(), bound: 0.0, at: 0.0, passed: values[0].abs() <= 1e-12 });

    let (drop, drop_at) =
        values
            .windows(2)
            .zip(xs.iter())
            .map(|(w, &x)| (w[0] - w[1], x))
            .fold((f64::NEG_INFINITY, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
    checks.push(AuditCheck { name: "non-decreasing".into(), worst: drop.max(0.0), bound: 0.0, at: drop_at, passed: drop <= 0.0 });

    let (gap, gap_at) = xs
        .iter()
        .zip(values.iter())
        .map(|(&x, &v)| (class.f_min.eval(x) - v, x))
        .fold((f64::NEG_INFINITY, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
    checks.push(AuditCheck { name: "f >= f_min".into(), worst: gap.max(0.0), bound: 0.0, at: gap_at, passed: gap <= 1e-12 });

    let k = class.order() as usize;
    let mut derivative = values.clone();
    for l in 0..=k {
        if l > 0 {
            derivative = finite_difference(&derivative, step);
        }
        let (worst, at) = argmax_abs(&derivative, &xs);
        checks.push(AuditCheck { name: format!("|f^({l})| <= F"), worst, bound: class.f_sup, at, passed: within(worst, class.f_sup) });
    }

    let alpha = class.alpha();
    let (quotient, at) = if alpha == 0.0 {
        let (lo, hi) = derivative.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let at = xs[derivative.iter().position(|&v| v == hi).unwrap_or(0)];
        (hi - lo, at)
    } else {
        let mut best = (0.0, 0.0);
        for i in 0..derivative.len() {
            for j in (i + 1)..derivative.len() {
                let q = (derivative[i] - derivative[j]).abs() / (xs[j] - xs[i]).powf(alpha);
                if q > best.0 {
                    best = (q, xs[i]);
                }
            }
        }
        best
    };
    checks.push(AuditCheck {
        name: format!("Hölder quotient of f^({k})"),
        worst: quotient,
        bound: class.lipschitz,
        at,
        passed: within(quotient, class.lipschitz),
    });

    Ok(HolderAudit { checks })
}

fn finite_difference(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| match i {
            0 => (values[1] - values[0]) / step,
            _ if i == n - 1 => (values[n - 1] - values[n - 2]) / step,
            _ => (values[i + 1] - values[i - 1]) / (2.0 * step),
        })
        .collect()
}

fn argmax_abs(values: &[f64], xs: &[f64]) -> (f64, f64) {
    values.iter().zip(xs).map(|(v, &x)| (v.abs(), x)).fold((0.0, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc })
}

/// The open set `S_{d,β}` where the invariant density is controlled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationRegion {
    pub d: f64,
    pub beta: f64,
    pub n_neurons: usize,
    pub m: f64,
    pub k_max: f64,
}

impl EstimationRegion {
    pub fn new(params: &ModelParams, beta: f64, d: f64) -> Self {
        Self { d, beta, n_neurons: params.n_neurons(), m: params.m(), k_max: params.k_max() }
    }

    /// `d > (⌊β⌋ + 2) / N`.
    pub fn radius_admissible(&self) -> bool {
        self.d > (self.beta.floor() + 2.0) / self.n_neurons as f64
    }

    pub fn contains(&self, a: f64) -> bool {
        let margin = self.beta.floor() / self.n_neurons as f64;
        margin < a && a < self.k_max - margin && (a - self.m).abs() > self.d
    }
}

/// True iff `a ∈ S_{d,β}` and the exclusion radius `d` is admissible.
pub fn region_check(a: f64, params: &ModelParams, holder: &HolderClass, d: f64) -> bool {
    let region = EstimationRegion::new(params, holder.beta, d);
    region.radius_admissible() && region.contains(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: usize) -> ModelParams {
        ModelParams::new(n, 1.0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 1.0, 1.0, 2.0).is_err());
        assert!(ModelParams::new(2, 0.0, 1.0, 2.0).is_err());
        assert!(ModelParams::new(2, 1.0, 2.0, 2.0).is_err());
        assert!(ModelParams::new(2, 1.0, 0.0, 2.0).is_err());
        // K >= 2/N
        assert!(ModelParams::new(4, 1.0, 0.1, 0.4).is_err());
        assert!(ModelParams::new(4, 1.0, 0.1, 0.5).is_ok());
    }

    #[test]
    fn delta_jump_examples() {
        let p = params(2);
        let s = NetworkState::new(vec![0.5, 0.5], 0.0);
        assert_eq!(delta_jump(&s, 0, &p).unwrap().potentials, vec![0.0, 1.0]);
        let s = NetworkState::new(vec![0.0, 0.0], 0.0);
        assert_eq!(delta_jump(&s, 1, &p).unwrap().potentials, vec![0.5, 0.0]);
        assert!(matches!(delta_jump(&s, 2, &p), Err(Error::IndexOutOfRange { index: 2, n: 2 })));
    }

    #[test]
    fn delta_jump_near_ceiling() {
        let p = params(4);
        let s = NetworkState::new(vec![1.9, 0.1, 0.1, 0.1], 0.0);
        let out = delta_jump(&s, 1, &p).unwrap().potentials;
        // u = 4 (2 - 1.9) / 2 = 0.2, σ = 0.04 (3 - 0.4) = 0.104, a_K = 0.026
        let u: f64 = 0.2;
        let expected = 1.9 + u * u * (3.0 - 2.0 * u) / 4.0;
        assert!((out[0] - expected).abs() < 1e-15);
        assert!((out[0] - 1.926).abs() < 1e-12);
        assert!(out[0] < 2.0);
        assert_eq!(out[1], 0.0);
        assert!((out[2] - 0.35).abs() < 1e-15);
        assert!((out[3] - 0.35).abs() < 1e-15);
    }

    #[test]
    fn soft_cap_contract_on_grid() {
        for n in [1usize, 2, 5, 100] {
            let k = 2.0;
            let cap = SoftCap::new(n, k);
            let inv = 1.0 / n as f64;
            let mut prev = f64::INFINITY;
            for i in 0..=20_000 {
                let x = k * i as f64 / 20_000.0;
                let a = cap.eval(x);
                if x < k - 2.0 * inv {
                    assert_eq!(a, inv, "x = {x}");
                }
                assert!(a <= prev + 1e-15, "not non-increasing at {x}");
                assert!(x + a <= k, "overflow at {x}");
                if x >= k - 2.0 * inv && x < k {
                    assert!(a < k - x, "a_K(x) >= K - x at {x}");
                }
                prev = a;
            }
            assert_eq!(cap.eval(k), 0.0);
        }
    }

    #[test]
    fn rate_bar_examples() {
        let id = RateFunction::identity(2.0).unwrap();
        assert_eq!(rate_bar(&[1.0, 1.0], &id), 2.0);
        let e = RateFunction::expm1(2.0).unwrap();
        assert_eq!(rate_bar(&[0.0; 3], &e), 0.0);
        let v = rate_bar(&[0.5; 3], &e);
        assert!((v - 3.0 * (0.5f64.exp() - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn audit_identity_passes() {
        let f = RateFunction::new(
            RateShape::Linear { slope: 1.0 },
            HolderClass::new(1.0, 2.0, 1.0, LowerEnvelope::Linear { coef: 0.5 }).unwrap(),
        )
        .unwrap();
        let audit = holder_audit(&f, 2.0, 0.01).unwrap();
        assert!(audit.passed(), "{audit:?}");
    }

    #[test]
    fn audit_identity_fails_sup_bound() {
        let f = RateFunction::new(
            RateShape::Linear { slope: 1.0 },
            HolderClass::new(1.0, 0.5, 1.0, LowerEnvelope::Linear { coef: 0.5 }).unwrap(),
        )
        .unwrap();
        let audit = holder_audit(&f, 2.0, 0.01).unwrap();
        assert!(!audit.passed());
        let fail = audit.failures().next().unwrap();
        assert_eq!(fail.name, "|f^(0)| <= F");
        assert_eq!(fail.worst, 2.0);
    }

    #[test]
    fn audit_expm1() {
        let e2 = 2f64.exp();
        // β < 1: only the sup bound and the α-Hölder quotient of f itself apply.
        let class = HolderClass::new(0.5, e2 - 1.0, e2, LowerEnvelope::Linear { coef: 1.0 }).unwrap();
        let f = RateFunction::new(RateShape::ExpM1, class).unwrap();
        assert!(holder_audit(&f, 2.0, 0.01).unwrap().passed());
        // With β = 1 the derivative bound |f'| = e^x <= e² - 1 fails at x = 2.
        let class = HolderClass { beta: 1.0, ..class };
        let f = RateFunction::new(RateShape::ExpM1, class).unwrap();
        let audit = holder_audit(&f, 2.0, 0.01).unwrap();
        assert!(!audit.passed());
        assert_eq!(audit.failures().next().unwrap().name, "|f^(1)| <= F");
    }

    #[test]
    fn audit_detects_non_monotone_and_envelope() {
        let t = PiecewiseLinear::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.1, 2.0]).unwrap();
        let f = RateFunction::table(t).unwrap();
        let strict = f.clone().with_holder(HolderClass { f_min: LowerEnvelope::Linear { coef: 1.0 }, ..*f.holder() }).unwrap();
        let audit = holder_audit(&strict, 2.0, 0.01).unwrap();
        assert!(audit.failures().any(|c| c.name == "f >= f_min"));
    }

    #[test]
    fn table_validation_and_eval() {
        assert!(PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0]).is_err());
        assert!(PiecewiseLinear::new(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        let t = PiecewiseLinear::from_csv("x,f\n0,0\n1,2\n2,3\n".as_bytes()).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(3.0), 3.0);
        assert!(PiecewiseLinear::from_csv("0,0\n1,x\n".as_bytes()).is_err());
    }

    #[test]
    fn rate_validation() {
        let class = HolderClass::new(1.0, 2.0, 1.0, LowerEnvelope::Linear { coef: 0.5 }).unwrap();
        assert!(RateFunction::new(RateShape::Linear { slope: 0.0 }, class).is_err());
        assert!(HolderClass::new(0.0, 1.0, 1.0, LowerEnvelope::Linear { coef: 1.0 }).is_err());
        assert!(HolderClass::new(1.0, 1.0, 1.0, LowerEnvelope::Linear { coef: 0.0 }).is_err());
    }

    #[test]
    fn region_examples() {
        let p = ModelParams::reference();
        let class = *RateFunction::identity(2.0).unwrap().holder();
        assert!(region_check(0.5, &p, &class, 0.05));
        assert!(!region_check(1.0, &p, &class, 0.05));
        assert!(!region_check(2.0, &p, &class, 0.05));
        // d must exceed (⌊β⌋ + 2)/N = 0.03
        assert!(!region_check(0.5, &p, &class, 0.03));
        assert!(!region_check(0.01, &p, &class, 0.05));
    }

    #[test]
    fn scaled_linear_stays_linear() {
        let f = RateFunction::identity(2.0).unwrap().scaled(2.0).unwrap();
        assert_eq!(f.shape(), &RateShape::Linear { slope: 2.0 });
        let g = RateFunction::log1p(2.0).unwrap().scaled(3.0).unwrap();
        assert!((g.eval(1.0) - 3.0 * 2f64.ln()).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn jump_keeps_state_in_box(
            xs in prop::collection::vec(0.0f64..=2.0, 1..12),
            pick in 0usize..12,
        ) {
            let n = xs.len();
            let p = ModelParams::new(n, 1.0, 1.0, 2.0f64.max(2.0 / n as f64)).unwrap();
            let i = pick % n;
            let out = delta_jump(&NetworkState::new(xs, 0.0), i, &p).unwrap();
            prop_assert!(out.potentials.iter().all(|&x| (0.0..=2.0).contains(&x)));
            prop_assert_eq!(out.potentials[i], 0.0);
        }

        #[test]
        fn rate_bar_permutation_invariant(mut xs in prop::collection::vec(0.0f64..=2.0, 1..20), seed in any::<u64>()) {
            let f = RateFunction::expm1(2.0).unwrap();
            let before = rate_bar(&xs, &f);
            // deterministic shuffle
            let n = xs.len();
            let mut s = seed;
            for i in (1..n).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                xs.swap(i, (s >> 33) as usize % (i + 1));
            }
            let after = rate_bar(&xs, &f);
            prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
            prop_assert!(after <= n as f64 * f.eval(2.0) + 1e-12);
        }
    }
}
