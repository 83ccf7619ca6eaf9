//! Nadaraya–Watson estimation of the spiking rate.
//!
//! `f̂(a) = Σ_n Q_h(Z_n^{I_n} - a) / Σ_i ∫_0^t Q_h(X^i_s - a) ds`, the kernel
//! smoothed spike count at potential `a` divided by the kernel smoothed
//! occupation time, with `0/0 := 0`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::flow::{relax, transit_window};
use crate::kernel::Kernel;
use crate::quadrature;
use crate::simulator::EventLog;

/// Default absolute tolerance for occupation integrals over a whole log.
pub const DEFAULT_TOL: f64 = 1e-8;

/// `Σ_i ∫_0^T g(X^i_s) ds` with `T = min(until, horizon)`, for `g` vanishing
/// outside `[lo, hi]` and bounded by `scale`.
///
/// The tolerance budget is split across segments in proportion to the time
/// each spends inside `[lo, hi]`, so the total error stays below `tol` up to a
/// round-off floor of a few ulps of `scale` per unit time.
pub fn occupation_integral<G>(log: &EventLog, g: G, (lo, hi): (f64, f64), scale: f64, tol: f64, until: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let params = *log.params();
    let (m, lambda) = (params.m(), params.lambda());
    let budget = until.min(log.horizon()) * log.n_neurons() as f64;
    let mut total = 0.0;
    log.for_each_segment(until, |_, state, duration| {
        for &x0 in state {
            let Some((t0, t1)) = transit_window(x0, lo, hi, duration, &params) else {
                continue;
            };
            let w = t1 - t0;
            let seg_tol = tol * w / budget + 4.0 * f64::EPSILON * scale * w;
            total += quadrature::integrate(|u| g(relax(x0, m, (-lambda * u).exp())), t0, t1, seg_tol)?;
        }
        Ok(())
    })?;
    Ok(total)
}

/// `Σ_n Q_h(Z_n^{I_n} - a)` over jumps up to `until`.
pub fn numerator_until(log: &EventLog, a: f64, h: f64, q: &Kernel, until: f64) -> f64 {
    let k = log.count_until(until);
    log.iter().take(k).map(|j| q.eval_h(j.spiking_potential() - a, h)).sum()
}

pub fn numerator(log: &EventLog, a: f64, h: f64, q: &Kernel) -> f64 {
    numerator_until(log, a, h, q, f64::INFINITY)
}

pub fn denominator_until(log: &EventLog, a: f64, h: f64, q: &Kernel, tol: f64, until: f64) -> Result<f64> {
    Ok(denominators_until(log, &[a], h, q, tol, until)?[0])
}

/// `Σ_i ∫_0^t Q_h(X^i_s - a) ds`.
pub fn denominator(log: &EventLog, a: f64, h: f64, q: &Kernel, tol: f64) -> Result<f64> {
    denominator_until(log, a, h, q, tol, f64::INFINITY)
}

/// Denominators at several points in one pass over the log, each to `tol`.
pub fn denominators(log: &EventLog, points: &[f64], h: f64, q: &Kernel, tol: f64) -> Result<Vec<f64>> {
    denominators_until(log, points, h, q, tol, f64::INFINITY)
}

/// Per-segment pieces shared by every evaluation point.
///
/// For a polynomial kernel and a flow piece lying wholly inside the support
/// around `a`, `∫ Q_h(x_u - a) du = (1/h) Σ_k ν_k Q^{(k)}(δ)/k!` with
/// `δ = (x_0 - a)/h`, `ν_k = s^k ∫_0^w E_u^k du`, `s = (m - x_0)/h` and
/// `E_u = 1 - e^{-λu}`. The integrals of `E^k` have closed forms, so interior
/// pieces are exact up to rounding and only pieces crossing the support edge
/// need quadrature.
struct Moments {
    /// `taylor[k]` holds the coefficients of `Q^{(k)}/k!`.
    taylor: Vec<Vec<f64>>,
    nu: Vec<f64>,
}

impl Moments {
    fn new(q: &Kernel) -> Option<Self> {
        let c = q.polynomial_coeffs()?;
        let taylor = (0..c.len()).map(|k| (k..c.len()).map(|j| c[j] * binomial(j, k)).collect()).collect();
        Some(Self { taylor, nu: vec![0.0; c.len()] })
    }

    /// Fills `ν_k` for the flow from `x0` over `[0, w]`.
    fn prepare(&mut self, x0: f64, w: f64, h: f64, m: f64, lambda: f64) {
        let degree = self.nu.len() - 1;
        let e = -(-lambda * w).exp_m1();
        // J_k = ∫_0^E e^k / (1 - e) de, so that ∫_0^w E_u^k du = J_k / λ
        let j = &mut self.nu;
        if e <= 0.5 {
            // series for the top index, then the stable downward recurrence
            // J_{k-1} = J_k + E^k / k
            let mut term = e.powi(degree as i32 + 1);
            let mut sum = 0.0;
            let mut i = degree + 1;
            while term / i as f64 > f64::EPSILON * 1e-3 * sum || sum == 0.0 {
                sum += term / i as f64;
                term *= e;
                i += 1;
                if term == 0.0 {
                    break;
                }
            }
            j[degree] = sum;
            for k in (1..=degree).rev() {
                j[k - 1] = j[k] + e.powi(k as i32) / k as f64;
            }
            // J_0 = λw exactly
            j[0] = lambda * w;
        } else {
            j[0] = lambda * w;
            for k in 1..=degree {
                j[k] = j[k - 1] - e.powi(k as i32) / k as f64;
            }
        }
        let s = (m - x0) / h;
        let mut sk = 1.0 / lambda;
        for v in j.iter_mut() {
            *v *= sk;
            sk *= s;
        }
    }

    /// `∫ Q_h(x_u - a) du` for an interior piece, given `δ = (x_0 - a)/h`.
    fn eval(&self, delta: f64, h: f64) -> f64 {
        let mut total = 0.0;
        for (coeffs, &nu) in self.taylor.iter().zip(&self.nu) {
            if nu == 0.0 {
                continue;
            }
            total += nu * coeffs.iter().rev().fold(0.0, |acc, &c| acc * delta + c);
        }
        total / h
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn denominators_until(log: &EventLog, points: &[f64], h: f64, q: &Kernel, tol: f64, until: f64) -> Result<Vec<f64>> {
    check_h(h)?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| points[i].total_cmp(&points[j]));
    let sorted: Vec<f64> = order.iter().map(|&i| points[i]).collect();
    let params = *log.params();
    let (m, lambda) = (params.m(), params.lambda());
    let r = q.radius() * h;
    let scale = q.sup_norm() / h;
    let budget = until.min(log.horizon()) * log.n_neurons() as f64;
    let mut moments = Moments::new(q);
    let mut acc = vec![0.0; sorted.len()];
    log.for_each_segment(until, |_, state, duration| {
        for &x0 in state {
            let x1 = relax(x0, m, (-lambda * duration).exp());
            let (lo, hi) = (x0.min(x1), x0.max(x1));
            let first = sorted.partition_point(|&a| a + r < lo);
            let last = sorted.partition_point(|&a| a - r <= hi);
            if first >= last {
                continue;
            }
            let mut prepared = false;
            for (k, &a) in sorted.iter().enumerate().take(last).skip(first) {
                if let Some(mom) = moments.as_mut().filter(|_| a - r <= lo && hi <= a + r) {
                    if !prepared {
                        mom.prepare(x0, duration, h, m, lambda);
                        prepared = true;
                    }
                    acc[k] += mom.eval((x0 - a) / h, h);
                    continue;
                }
                let Some((t0, t1)) = transit_window(x0, a - r, a + r, duration, &params) else {
                    continue;
                };
                let w = t1 - t0;
                let seg_tol = tol * w / budget + 4.0 * f64::EPSILON * scale * w;
                acc[k] += quadrature::integrate(|u| q.eval_h(relax(x0, m, (-lambda * u).exp()) - a, h), t0, t1, seg_tol)?;
            }
        }
        Ok(())
    })?;
    let mut out = vec![0.0; points.len()];
    for (k, &i) in order.iter().enumerate() {
        out[i] = acc[k];
    }
    Ok(out)
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("bandwidth must be positive, got {h}")));
    }
    Ok(())
}

/// `h_t = t^{-1/(2β+1)}`.
pub fn default_bandwidth(t: f64, beta: f64) -> f64 {
    t.powf(-1.0 / (2.0 * beta + 1.0))
}

/// Ratio with the `0/0 := 0` convention.
#[inline]
pub fn nw_ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    }
}

/// Threshold `r` of the admissibility event `A_{t,r} = {π̂₁(a) ≥ r}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Threshold {
    Fixed(f64),
    /// `factor ×` the occupation density estimated on the first `fraction` of
    /// the log.
    Pilot {
        fraction: f64,
        factor: f64,
    },
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Pilot { fraction: 0.2, factor: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateOptions {
    pub threshold: Threshold,
    /// Confidence level of the reported interval.
    pub level: f64,
    pub tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self { threshold: Threshold::default(), level: 0.95, tol: DEFAULT_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub a: f64,
    pub h: f64,
    pub t: f64,
    pub n_neurons: usize,
    pub numerator: f64,
    pub denominator: f64,
    pub f_hat: f64,
    pub pi1_hat: f64,
    pub r: f64,
    pub a_tr: bool,
    pub level: f64,
    pub ci_halfwidth: f64,
    /// `∫ Q²`, kept for the plug-in variance.
    pub int_q2: f64,
}

impl EstimateReport {
    pub const CSV_HEADER: &'static str = "a,h,t,numerator,denominator,f_hat,pi1_hat,a_tr,ci_low,ci_high";

    pub fn ci_low(&self) -> f64 {
        self.f_hat - self.ci_halfwidth
    }

    pub fn ci_high(&self) -> f64 {
        self.f_hat + self.ci_halfwidth
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.a,
            self.h,
            self.t,
            self.numerator,
            self.denominator,
            self.f_hat,
            self.pi1_hat,
            self.a_tr,
            self.ci_low(),
            self.ci_high()
        )
    }

    /// Plug-in asymptotic variance `Σ̂(a) = f̂ ∫Q² / (N π̂₁)`.
    pub fn sigma_hat(&self) -> f64 {
        if self.pi1_hat > 0.0 {
            self.f_hat.max(0.0) * self.int_q2 / (self.n_neurons as f64 * self.pi1_hat)
        } else {
            f64::NAN
        }
    }

    /// `√(t h) (f̂ - f(a)) / √Σ̂(a)`, or `None` when the plug-in variance is
    /// degenerate.
    pub fn standardized_error(&self, f_true: f64) -> Option<f64> {
        let s = self.sigma_hat();
        (s > 0.0 && s.is_finite()).then(|| (self.t * self.h).sqrt() * (self.f_hat - f_true) / s.sqrt())
    }
}

/// Two-sided normal quantile `z_{1-α/2}` for confidence `level`.
pub fn normal_quantile(level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + 0.5 * level)
}

/// `0.5 ×` (by default) the occupation density at `a` over an early prefix.
pub fn pilot_threshold(log: &EventLog, a: f64, h: f64, q: &Kernel, fraction: f64, factor: f64, tol: f64) -> Result<f64> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("pilot fraction must be in (0, 1], got {fraction}")));
    }
    let t = fraction * log.horizon();
    let d = denominator_until(log, a, h, q, tol, t)?;
    Ok(factor * d / (log.n_neurons() as f64 * t))
}

/// Estimate with a fixed threshold `r`, 95% interval and default tolerance.
pub fn estimate_at(log: &EventLog, a: f64, h: f64, q: &Kernel, r: f64) -> Result<EstimateReport> {
    estimate_with(log, a, h, q, &EstimateOptions { threshold: Threshold::Fixed(r), ..Default::default() })
}

pub fn estimate_with(log: &EventLog, a: f64, h: f64, q: &Kernel, opts: &EstimateOptions) -> Result<EstimateReport> {
    let k_max = log.params().k_max();
    if !(0.0..=k_max).contains(&a) {
        return Err(Error::Domain(format!("evaluation point {a} outside [0, {k_max}]")));
    }
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::Config(format!("confidence level must be in (0, 1), got {}", opts.level)));
    }
    let r = match opts.threshold {
        Threshold::Fixed(r) if r >= 0.0 => r,
        Threshold::Fixed(r) => return Err(Error::Config(format!("threshold r must be >= 0, got {r}"))),
        Threshold::Pilot { fraction, factor } => pilot_threshold(log, a, h, q, fraction, factor, opts.tol)?,
    };
    let num = numerator(log, a, h, q);
    let den = denominator(log, a, h, q, opts.tol)?;
    let t = log.horizon();
    let n = log.n_neurons();
    let f_hat = nw_ratio(num, den);
    let pi1_hat = den / (n as f64 * t);
    let ci_halfwidth = if pi1_hat > 0.0 {
        normal_quantile(opts.level) * (f_hat.max(0.0) * q.integral_q2() / (n as f64 * pi1_hat * t * h)).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(EstimateReport {
        a,
        h,
        t,
        n_neurons: n,
        numerator: num,
        denominator: den,
        f_hat,
        pi1_hat,
        r,
        a_tr: pi1_hat >= r,
        level: opts.level,
        ci_halfwidth,
        int_q2: q.integral_q2(),
    })
}
