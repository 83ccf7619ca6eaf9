use serde::Serialize;

use super::{Study, StudyConfig, StudyKind, Table};
use crate::bandwidth::{is_interior, log_grid, scv_select, ScvConfig};
use crate::error::Result;
use crate::estimator::{denominator, numerator, nw_ratio};
use crate::row;
use crate::stats::mean_se;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScvRep {
    pub replication: usize,
    pub jumps: usize,
    pub h_hat: f64,
    pub interior: bool,
    /// `f̂(a) - f(a)` with `ĥ`.
    pub error_scv: f64,
    /// `f̂(a) - f(a)` with the rate-optimal `h_t`.
    pub error_default: f64,
    /// `f̂(a) - f(a)` at every grid bandwidth, for the oracle.
    pub error_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScvStudy {
    pub t: f64,
    pub a: f64,
    /// Bandwidth grid of the first replication; grids differ only through
    /// the horizon, which is shared.
    pub grid: Vec<f64>,
    pub reps: Vec<ScvRep>,
    pub interior_fraction: f64,
    pub rmse_scv: f64,
    pub rmse_default: f64,
    /// RMSE per grid bandwidth.
    pub rmse_grid: Vec<f64>,
    /// Grid bandwidth with the smallest RMSE over the replications.
    pub h_oracle: f64,
    pub rmse_oracle: f64,
}

/// SCV bandwidth choice per replication, and the RMSE it yields at the first
/// evaluation point against the best fixed grid bandwidth on the same logs.
pub fn scv_study(cfg: &StudyConfig) -> Result<ScvStudy> {
    cfg.validate()?;
    let q = cfg.kernel()?;
    let t = cfg.max_horizon();
    let a = cfg.points[0];
    let f_a = cfg.rate.eval(a);
    let tol = cfg.options.tol;
    let grid = log_grid(t.powf(-0.5), t.powf(-0.125), cfg.options.scv_grid_size);
    let err = |log: &crate::simulator::EventLog, h: f64| -> Result<f64> {
        Ok(nw_ratio(numerator(log, a, h, &q), denominator(log, a, h, &q, tol)?) - f_a)
    };
    let reps = cfg.map_replications(|rep| {
        let log = cfg.replicate(t, rep)?;
        let scv_cfg = ScvConfig { grid: grid.clone(), ..ScvConfig::for_log(&log) };
        let (h_hat, curve) = scv_select(&log, &scv_cfg, &q)?;
        let error_grid = grid.iter().map(|&h| err(&log, h)).collect::<Result<Vec<_>>>()?;
        Ok(ScvRep {
            replication: rep,
            jumps: log.len(),
            h_hat,
            interior: is_interior(h_hat, &curve),
            error_scv: err(&log, h_hat)?,
            error_default: err(&log, cfg.bandwidth_at(t))?,
            error_grid,
        })
    })?;

    let rmse = |errs: &mut dyn Iterator<Item = f64>| {
        let sq: Vec<f64> = errs.map(|e| e * e).collect();
        mean_se(&sq).0.sqrt()
    };
    let rmse_grid: Vec<f64> = (0..grid.len()).map(|k| rmse(&mut reps.iter().map(|r| r.error_grid[k]))).collect();
    let (best, rmse_oracle) = rmse_grid.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    Ok(ScvStudy {
        t,
        a,
        interior_fraction: reps.iter().filter(|r| r.interior).count() as f64 / reps.len() as f64,
        rmse_scv: rmse(&mut reps.iter().map(|r| r.error_scv)),
        rmse_default: rmse(&mut reps.iter().map(|r| r.error_default)),
        h_oracle: grid[best],
        rmse_oracle,
        rmse_grid,
        grid,
        reps,
    })
}

impl ScvStudy {
    /// `rmse_scv / rmse_oracle`.
    pub fn rmse_ratio(&self) -> f64 {
        self.rmse_scv / self.rmse_oracle
    }
}

impl Study for ScvStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Scv
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut reps = Table::new(&["replication", "jumps", "h_hat", "interior", "error_scv", "error_default"]);
        for r in &self.reps {
            reps.push(row![r.replication, r.jumps, r.h_hat, r.interior, r.error_scv, r.error_default]);
        }
        let mut grid = Table::new(&["h", "rmse"]);
        for (h, e) in self.grid.iter().zip(&self.rmse_grid) {
            grid.push(row![h, e]);
        }
        vec![("scv".into(), reps), ("scv_oracle".into(), grid)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "study": "scv",
            "t": self.t,
            "a": self.a,
            "interior_fraction": self.interior_fraction,
            "rmse_scv": self.rmse_scv,
            "rmse_default": self.rmse_default,
            "h_oracle": self.h_oracle,
            "rmse_oracle": self.rmse_oracle,
            "rmse_ratio": self.rmse_ratio(),
        })
    }
}
