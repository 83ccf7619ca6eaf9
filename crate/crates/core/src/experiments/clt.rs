use serde::Serialize;

use super::{to_json, Study, StudyConfig, StudyKind, Table};
use crate::error::{Error, Result};
use crate::estimator::estimate_with;
use crate::row;
use crate::stats::{ks_standard_normal, mean_se, KsResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltPoint {
    pub t: f64,
    pub a: f64,
    pub h: f64,
    /// `√(t h) (f̂ - f(a)) / √Σ̂(a)` per kept replication, in replication order.
    pub standardized: Vec<f64>,
    /// Replications dropped for a degenerate plug-in variance.
    pub dropped: usize,
    pub mean: f64,
    pub mean_se: f64,
    pub ks: KsResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltStudy {
    pub exponent: f64,
    pub points: Vec<CltPoint>,
}

/// Standardized errors of the undersmoothed estimator, tested against the
/// standard normal by Kolmogorov–Smirnov.
pub fn clt_study(cfg: &StudyConfig) -> Result<CltStudy> {
    cfg.validate()?;
    let optimal = 1.0 / (2.0 * cfg.beta + 1.0);
    let exponent = cfg.options.bandwidth_exponent.unwrap_or(0.45);
    if cfg.options.bandwidth.is_some() || !(exponent > optimal) {
        return Err(Error::Config(format!("the CLT study needs an undersmoothing exponent above 1/(2β+1) = {optimal}, got {exponent}")));
    }
    let q = cfg.kernel()?;
    let opts = cfg.estimate_options();
    let t_max = cfg.max_horizon();
    let h_at = |t: f64| t.powf(-exponent);
    let per_rep = cfg.map_replications(|rep| {
        let full = cfg.replicate(t_max, rep)?;
        let mut out = Vec::new();
        for &t in &cfg.horizons {
            let log = if t < t_max { full.truncated(t)? } else { full.clone() };
            for &a in &cfg.points {
                let report = estimate_with(&log, a, h_at(t), &q, &opts)?;
                out.push(report.standardized_error(cfg.rate.eval(a)));
            }
        }
        Ok(out)
    })?;

    let mut points = Vec::new();
    let mut k = 0;
    for &t in &cfg.horizons {
        for &a in &cfg.points {
            let standardized: Vec<f64> = per_rep.iter().filter_map(|r| r[k]).collect();
            let dropped = cfg.replications - standardized.len();
            let (mean, se) = mean_se(&standardized);
            let ks = ks_standard_normal(&standardized);
            points.push(CltPoint { t, a, h: h_at(t), standardized, dropped, mean, mean_se: se, ks });
            k += 1;
        }
    }
    Ok(CltStudy { exponent, points })
}

impl Study for CltStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Clt
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut errors = Table::new(&["t", "a", "h", "replication", "standardized_error"]);
        let mut tests = Table::new(&["t", "a", "h", "kept", "dropped", "mean", "mean_se", "ks_statistic", "ks_p_value"]);
        for p in &self.points {
            for (i, z) in p.standardized.iter().enumerate() {
                errors.push(row![p.t, p.a, p.h, i, z]);
            }
            tests.push(row![p.t, p.a, p.h, p.standardized.len(), p.dropped, p.mean, p.mean_se, p.ks.statistic, p.ks.p_value]);
        }
        vec![("clt_errors".into(), errors), ("clt".into(), tests)]
    }

    fn summary(&self) -> serde_json::Value {
        let tests: Vec<_> = self
            .points
            .iter()
            .map(|p| serde_json::json!({"t": p.t, "a": p.a, "h": p.h, "dropped": p.dropped, "ks": to_json(&p.ks)}))
            .collect();
        serde_json::json!({"study": "clt", "bandwidth_exponent": self.exponent, "tests": tests})
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_undersmoothing_exponent() {
        let mut cfg = StudyConfig::reference(StudyKind::Clt);
        cfg.options.bandwidth_exponent = Some(1.0 / 3.0);
        assert!(clt_study(&cfg).is_err());
        cfg.options.bandwidth_exponent = Some(0.3);
        assert!(clt_study(&cfg).is_err());
    }
}
