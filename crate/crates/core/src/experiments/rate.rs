use serde::Serialize;

use super::{to_json, Study, StudyConfig, StudyKind, Table};
use crate::error::Result;
use crate::estimator::estimate_with;
use crate::row;
use crate::stats::{linear_fit, mean_se, LinearFit};

/// Minimum number of horizons for a slope fit.
pub const MIN_FIT_HORIZONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub t: f64,
    pub a: f64,
    pub h: f64,
    /// Replications on `A_{t,r}`.
    pub kept: usize,
    pub discard_rate: f64,
    pub bias: f64,
    pub bias_se: f64,
    pub rmse: f64,
    /// Delta-method standard error of the RMSE.
    pub rmse_se: f64,
    pub mean_jumps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub a: f64,
    /// `None` when fewer than three horizons are usable.
    pub fit: Option<LinearFit>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateStudy {
    pub rows: Vec<RateRow>,
    pub fits: Vec<RateFit>,
    pub theoretical_slope: f64,
}

/// RMSE of `f̂_{t,h_t}(a)` on `A_{t,r}` per horizon and point, and the slope
/// of `log RMSE` against `log t`.
///
/// Each replication is simulated once to the largest horizon and observed on
/// the nested windows `[0, t]`.
pub fn rate_study(cfg: &StudyConfig) -> Result<RateStudy> {
    cfg.validate()?;
    let q = cfg.kernel()?;
    let opts = cfg.estimate_options();
    let t_max = cfg.max_horizon();
    // errors[rep][horizon][point] = Some(f̂ - f(a)) on A_{t,r}
    let per_rep = cfg.map_replications(|rep| {
        let full = cfg.replicate(t_max, rep)?;
        let mut out = Vec::with_capacity(cfg.horizons.len());
        for &t in &cfg.horizons {
            let log = if t < t_max { full.truncated(t)? } else { full.clone() };
            let h = cfg.bandwidth_at(t);
            let mut errs = Vec::with_capacity(cfg.points.len());
            for &a in &cfg.points {
                let rep = estimate_with(&log, a, h, &q, &opts)?;
                errs.push(rep.a_tr.then(|| rep.f_hat - cfg.rate.eval(a)));
            }
            out.push((log.len(), errs));
        }
        Ok(out)
    })?;

    let mut rows = Vec::new();
    for (hi, &t) in cfg.horizons.iter().enumerate() {
        let jumps: Vec<f64> = per_rep.iter().map(|r| r[hi].0 as f64).collect();
        let mean_jumps = mean_se(&jumps).0;
        for (pi, &a) in cfg.points.iter().enumerate() {
            let errs: Vec<f64> = per_rep.iter().filter_map(|r| r[hi].1[pi]).collect();
            let sq: Vec<f64> = errs.iter().map(|e| e * e).collect();
            let (bias, bias_se) = mean_se(&errs);
            let (mse, mse_se) = mean_se(&sq);
            let rmse = mse.sqrt();
            rows.push(RateRow {
                t,
                a,
                h: cfg.bandwidth_at(t),
                kept: errs.len(),
                discard_rate: 1.0 - errs.len() as f64 / cfg.replications as f64,
                bias,
                bias_se,
                rmse,
                rmse_se: if rmse > 0.0 { mse_se / (2.0 * rmse) } else { f64::NAN },
                mean_jumps,
            });
        }
    }

    let fits = cfg
        .points
        .iter()
        .map(|&a| {
            let sel: Vec<&RateRow> = rows.iter().filter(|r| r.a == a).collect();
            if sel.len() < MIN_FIT_HORIZONS {
                return RateFit { a, fit: None, note: Some(format!("fewer than {MIN_FIT_HORIZONS} horizons")) };
            }
            if let Some(bad) = sel.iter().find(|r| r.kept == 0 || !(r.rmse > 0.0)) {
                return RateFit { a, fit: None, note: Some(format!("no replication on A_(t,r) at t = {}", bad.t)) };
            }
            let xs: Vec<f64> = sel.iter().map(|r| r.t.ln()).collect();
            let ys: Vec<f64> = sel.iter().map(|r| r.rmse.ln()).collect();
            RateFit { a, fit: linear_fit(&xs, &ys), note: None }
        })
        .collect();

    Ok(RateStudy { rows, fits, theoretical_slope: -cfg.beta / (2.0 * cfg.beta + 1.0) })
}

impl Study for RateStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Rate
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["t", "a", "h", "kept", "discard_rate", "bias", "bias_se", "rmse", "rmse_se", "mean_jumps"]);
        for r in &self.rows {
            t.push(row![r.t, r.a, r.h, r.kept, r.discard_rate, r.bias, r.bias_se, r.rmse, r.rmse_se, r.mean_jumps]);
        }
        vec![("rate".into(), t)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "study": "rate",
            "theoretical_slope": self.theoretical_slope,
            "fits": to_json(&self.fits),
            "discard_rates": self.rows.iter().map(|r| (r.t, r.a, r.discard_rate)).collect::<Vec<_>>(),
        })
    }
}
