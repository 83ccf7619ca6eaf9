use serde::{Deserialize, Serialize};

use super::{Study, StudyConfig, StudyKind, Table};
use crate::error::{Error, Result};
use crate::estimator::denominators;
use crate::model::EstimationRegion;
use crate::row;
use crate::stats::mean_se;

/// Where a grid point sits relative to the regularity region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// Below `0`: kernel spill-over only.
    Outside,
    /// Within `d` of the reset potential `0`.
    NearZero,
    NearM,
    NearK,
    /// Inside `S_{d,β}`.
    Region,
    /// In `[0, K]` but neither near a singular point nor in `S_{d,β}`.
    Margin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityRow {
    pub x: f64,
    pub zone: Zone,
    /// Mean of `π̂₁(x)` over replications.
    pub pi1_hat: f64,
    pub se: f64,
    /// Smallest replication value.
    pub min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityStudy {
    pub horizon: f64,
    pub h: f64,
    pub rows: Vec<DensityRow>,
    /// Trapezoid mass of the mean curve over the whole grid.
    pub mass: f64,
    /// Trapezoid mass over `[0, K]` only.
    pub mass_in_range: f64,
    /// Every replication is positive at every grid point of `S_{d,β}`.
    pub positive_on_region: bool,
    /// Mean `π̂₁` over the `[0, d]` zone and over `S_{d,β}`.
    pub mean_near_zero: f64,
    pub mean_on_region: f64,
    /// Largest mean `π̂₁` and where it occurs.
    pub peak: (f64, f64),
}

/// Occupation density `denominator / (N t)` on a grid of `[-hR, K + hR]`,
/// the support of the smoothed occupation measure.
pub fn invariant_density_study(cfg: &StudyConfig) -> Result<DensityStudy> {
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let count = cfg.options.grid_points;
    if count < 3 {
        return Err(Error::Config("density grid needs at least 3 points".into()));
    }
    let q = cfg.kernel()?;
    let horizon = cfg.max_horizon();
    let h = cfg.bandwidth_at(horizon);
    let k_max = cfg.params.k_max();
    let reach = h * q.radius();
    let grid: Vec<f64> = (0..count).map(|i| -reach + (k_max + 2.0 * reach) * i as f64 / (count - 1) as f64).collect();
    let norm = cfg.params.n_neurons() as f64 * horizon;
    let per_rep = cfg.map_replications(|rep| {
        let log = cfg.replicate(horizon, rep)?;
        Ok(denominators(&log, &grid, h, &q, cfg.options.tol)?.into_iter().map(|d| d / norm).collect::<Vec<_>>())
    })?;

    let region = EstimationRegion::new(&cfg.params, cfg.beta, cfg.d);
    let zone = |x: f64| {
        if x < 0.0 || x > k_max {
            Zone::Outside
        } else if x < cfg.d {
            Zone::NearZero
        } else if (x - cfg.params.m()).abs() <= cfg.d {
            Zone::NearM
        } else if x > k_max - cfg.d {
            Zone::NearK
        } else if region.contains(x) {
            Zone::Region
        } else {
            Zone::Margin
        }
    };
    let rows: Vec<DensityRow> = grid
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let vals: Vec<f64> = per_rep.iter().map(|r| r[i]).collect();
            let (pi1_hat, se) = mean_se(&vals);
            DensityRow { x, zone: zone(x), pi1_hat, se, min: vals.iter().copied().fold(f64::INFINITY, f64::min) }
        })
        .collect();

    let trapezoid = |keep: &dyn Fn(f64) -> bool| {
        rows.windows(2)
            .filter(|w| keep(w[0].x) && keep(w[1].x))
            .map(|w| 0.5 * (w[1].x - w[0].x) * (w[0].pi1_hat + w[1].pi1_hat))
            .sum::<f64>()
    };
    let mass = trapezoid(&|_| true);
    let mass_in_range = trapezoid(&|x| (0.0..=k_max).contains(&x));
    let zone_mean = |z: Zone| {
        let v: Vec<f64> = rows.iter().filter(|r| r.zone == z).map(|r| r.pi1_hat).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let positive_on_region = rows.iter().filter(|r| r.zone == Zone::Region).all(|r| r.min > 0.0);
    let peak = rows.iter().fold((f64::NAN, f64::NEG_INFINITY), |acc, r| if r.pi1_hat > acc.1 { (r.x, r.pi1_hat) } else { acc });
    Ok(DensityStudy {
        horizon,
        h,
        mass,
        mass_in_range,
        positive_on_region,
        mean_near_zero: zone_mean(Zone::NearZero),
        mean_on_region: zone_mean(Zone::Region),
        peak,
        rows,
    })
}

impl Study for DensityStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Density
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["x", "zone", "pi1_hat", "se", "min"]);
        for r in &self.rows {
            let zone = serde_json::to_value(r.zone).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
            t.push(row![r.x, zone, r.pi1_hat, r.se, r.min]);
        }
        vec![("density".into(), t)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "study": "density",
            "horizon": self.horizon,
            "h": self.h,
            "mass": self.mass,
            "mass_in_range": self.mass_in_range,
            "positive_on_region": self.positive_on_region,
            "mean_near_zero": self.mean_near_zero,
            "mean_on_region": self.mean_on_region,
            "peak_x": self.peak.0,
            "peak_value": self.peak.1,
        })
    }
}
