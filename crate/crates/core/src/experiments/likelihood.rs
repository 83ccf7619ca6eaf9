use serde::Serialize;

use super::{Study, StudyConfig, StudyKind, Table};
use crate::error::Result;
use crate::likelihood::{log_likelihood_ratio, perturb, PerturbationSpec};
use crate::row;
use crate::stats::{linear_fit, mean_se, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodRow {
    pub t: f64,
    /// Bump half-width `h_t`.
    pub h: f64,
    /// `E_{f0}[exp log L]`, which is 1 for a true likelihood ratio.
    pub mean_exp: f64,
    pub mean_exp_se: f64,
    pub mean_abs: f64,
    pub mean_abs_se: f64,
    pub mean_llr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodStudy {
    pub center: f64,
    pub amplitude: f64,
    pub rows: Vec<LikelihoodRow>,
    /// Slope of `ln E|log L|` against `ln t`; `0` when bounded in `t`.
    pub abs_fit: Option<LinearFit>,
}

/// Log-likelihood ratios of the local perturbation `f_t` against the
/// simulating rate `f0`, per horizon.
///
/// The alternative changes with `t`, so each horizon observes a fresh bump on
/// the same trajectories truncated to `[0, t]`.
pub fn likelihood_study(cfg: &StudyConfig) -> Result<LikelihoodStudy> {
    cfg.validate()?;
    let center = cfg.points[0];
    let k_max = cfg.params.k_max();
    let alternatives: Vec<_> = cfg
        .horizons
        .iter()
        .map(|&t| {
            let spec =
                PerturbationSpec { base: cfg.rate.clone(), center, amplitude: cfg.options.amplitude, bump: cfg.options.bump, horizon: t };
            Ok((spec.bandwidth(), perturb(&spec, k_max)?))
        })
        .collect::<Result<_>>()?;
    let t_max = cfg.max_horizon();
    let per_rep = cfg.map_replications(|rep| {
        let full = cfg.replicate(t_max, rep)?;
        cfg.horizons
            .iter()
            .zip(&alternatives)
            .map(|(&t, (_, ft))| {
                let log = if t < t_max { full.truncated(t)? } else { full.clone() };
                log_likelihood_ratio(&log, ft, &cfg.rate, cfg.options.tol)
            })
            .collect::<Result<Vec<f64>>>()
    })?;

    let rows: Vec<LikelihoodRow> = cfg
        .horizons
        .iter()
        .zip(&alternatives)
        .enumerate()
        .map(|(k, (&t, (h, _)))| {
            let llr: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            let exps: Vec<f64> = llr.iter().map(|l| l.exp()).collect();
            let abs: Vec<f64> = llr.iter().map(|l| l.abs()).collect();
            let (mean_exp, mean_exp_se) = mean_se(&exps);
            let (mean_abs, mean_abs_se) = mean_se(&abs);
            LikelihoodRow { t, h: *h, mean_exp, mean_exp_se, mean_abs, mean_abs_se, mean_llr: mean_se(&llr).0 }
        })
        .collect();
    let abs_fit = if rows.len() >= 2 && rows.iter().all(|r| r.mean_abs > 0.0) {
        let xs: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.mean_abs.ln()).collect();
        linear_fit(&xs, &ys)
    } else {
        None
    };
    Ok(LikelihoodStudy { center, amplitude: cfg.options.amplitude, rows, abs_fit })
}

impl Study for LikelihoodStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Likelihood
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["t", "h", "mean_exp", "mean_exp_se", "mean_abs", "mean_abs_se", "mean_llr"]);
        for r in &self.rows {
            t.push(row![r.t, r.h, r.mean_exp, r.mean_exp_se, r.mean_abs, r.mean_abs_se, r.mean_llr]);
        }
        vec![("likelihood".into(), t)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "study": "likelihood",
            "center": self.center,
            "amplitude": self.amplitude,
            "abs_fit": self.abs_fit,
            "rows": self.rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn small_run() {
        let mut cfg = StudyConfig::reference(StudyKind::Likelihood);
        cfg.params = ModelParams::new(5, 1.0, 1.0, 2.0).unwrap();
        cfg.d = 0.65;
        cfg.points = vec![0.3];
        cfg.horizons = vec![100.0, 200.0];
        cfg.replications = 10;
        let s = likelihood_study(&cfg).unwrap();
        assert_eq!(s.rows.len(), 2);
        for r in &s.rows {
            assert!(r.mean_exp > 0.0 && r.mean_abs > 0.0);
        }
        assert!(s.abs_fit.is_some());
    }
}
