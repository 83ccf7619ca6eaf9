use serde::Serialize;

use super::{Study, StudyConfig, StudyKind, Table};
use crate::error::{Error, Result};
use crate::row;
use crate::simulator::{simulate, state_at, SimConfig};
use crate::stats::{histogram, linear_fit, total_variation, LinearFit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicRow {
    pub time: f64,
    /// Histogram TV proxy between the two starts.
    pub tv: f64,
    /// Expected TV between two independent samples of the same law at this
    /// sample size, from split halves of each start.
    pub noise_floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicStudy {
    pub bins: usize,
    pub samples_per_start: usize,
    pub rows: Vec<ErgodicRow>,
    /// Fit of `ln TV` against time on the points above twice the noise floor.
    pub fit: Option<LinearFit>,
    pub fit_points: usize,
    /// `exp(-slope)`, the fitted per-unit-time contraction factor.
    pub kappa_hat: Option<f64>,
    /// TV never rises by more than twice the noise floor between grid times.
    pub monotone: bool,
    /// One bin makes the proxy identically zero.
    pub degenerate: bool,
}

/// Decay of the single-neuron marginal TV distance between two starts.
///
/// Every neuron of every replication contributes one sample, so the histograms
/// estimate the common marginal law that exchangeability guarantees. The two
/// starts use disjoint replication streams.
pub fn ergodic_study(cfg: &StudyConfig) -> Result<ErgodicStudy> {
    let opts = &cfg.options;
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    if opts.bins == 0 {
        return Err(Error::Config("bins must be at least 1".into()));
    }
    if opts.times.is_empty() || opts.times.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
        return Err(Error::Config("ergodic study needs nonnegative observation times".into()));
    }
    let mut times = opts.times.clone();
    times.sort_by(f64::total_cmp);
    let horizon = times.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let k_max = cfg.params.k_max();
    let reps = cfg.replications;

    let sample_start = |which: usize| -> Result<Vec<Vec<Vec<f64>>>> {
        cfg.map_replications(|rep| {
            let sim = SimConfig::new(horizon, cfg.seed).with_stream((which * reps + rep) as u64).with_initial(opts.starts[which].clone());
            let log = simulate(&cfg.params, &cfg.rate, &sim)?;
            times.iter().map(|&t| Ok(state_at(&log, t)?.potentials)).collect()
        })
    };
    // samples[start][rep][time] = potentials
    let samples = [sample_start(0)?, sample_start(1)?];

    let hist = |start: usize, reps: std::ops::Range<usize>, ti: usize| {
        histogram(samples[start][reps].iter().flat_map(|r| r[ti].iter().copied()), opts.bins, 0.0, k_max)
    };
    let half = reps / 2;
    let rows: Vec<ErgodicRow> = times
        .iter()
        .enumerate()
        .map(|(ti, &time)| {
            let tv = total_variation(&hist(0, 0..reps, ti), &hist(1, 0..reps, ti));
            // halves carry half the samples, so their TV noise is √2 larger
            let noise_floor = if half > 0 {
                let split = |s| total_variation(&hist(s, 0..half, ti), &hist(s, half..2 * half, ti));
                0.5 * (split(0) + split(1)) / std::f64::consts::SQRT_2
            } else {
                f64::NAN
            };
            ErgodicRow { time, tv, noise_floor }
        })
        .collect();

    let above: Vec<&ErgodicRow> = rows.iter().filter(|r| r.tv > 2.0 * r.noise_floor && r.tv > 0.0).collect();
    let fit = if above.len() >= 3 {
        let xs: Vec<f64> = above.iter().map(|r| r.time).collect();
        let ys: Vec<f64> = above.iter().map(|r| r.tv.ln()).collect();
        linear_fit(&xs, &ys)
    } else {
        None
    };
    let monotone = rows.windows(2).all(|w| w[1].tv <= w[0].tv + 2.0 * w[1].noise_floor.max(w[0].noise_floor));
    Ok(ErgodicStudy {
        bins: opts.bins,
        samples_per_start: reps * cfg.params.n_neurons(),
        kappa_hat: fit.map(|f| (-f.slope).exp()),
        fit_points: above.len(),
        fit,
        monotone,
        degenerate: opts.bins == 1,
        rows,
    })
}

impl ErgodicStudy {
    /// First grid time with TV below `threshold`.
    pub fn first_time_below(&self, threshold: f64) -> Option<f64> {
        self.rows.iter().find(|r| r.tv < threshold).map(|r| r.time)
    }
}

impl Study for ErgodicStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Ergodic
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["time", "tv", "noise_floor"]);
        for r in &self.rows {
            t.push(row![r.time, r.tv, r.noise_floor]);
        }
        vec![("ergodic".into(), t)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "study": "ergodic",
            "bins": self.bins,
            "samples_per_start": self.samples_per_start,
            "fit": self.fit,
            "fit_points": self.fit_points,
            "kappa_hat": self.kappa_hat,
            "monotone": self.monotone,
            "degenerate": self.degenerate,
            "first_time_below_0.05": self.first_time_below(0.05),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;
    use crate::simulator::InitialState;

    fn small() -> StudyConfig {
        let mut cfg = StudyConfig::reference(StudyKind::Ergodic);
        cfg.params = ModelParams::new(5, 1.0, 1.0, 2.0).unwrap();
        cfg.replications = 40;
        cfg.options.times = vec![0.0, 1.0, 2.0];
        cfg
    }

    #[test]
    fn identical_starts_sit_at_the_noise_floor() {
        let mut cfg = small();
        cfg.options.starts = [InitialState::Zero, InitialState::Zero];
        let s = ergodic_study(&cfg).unwrap();
        assert_eq!(s.rows[0].tv, 0.0, "both starts are the same point mass");
        for r in &s.rows[1..] {
            assert!(r.tv < 4.0 * r.noise_floor + 0.05, "{r:?}");
        }
    }

    #[test]
    fn extreme_starts_are_far_apart_at_time_zero() {
        let s = ergodic_study(&small()).unwrap();
        assert_eq!(s.rows[0].tv, 1.0);
        assert!(s.rows[2].tv < 1.0);
    }

    #[test]
    fn single_bin_is_degenerate() {
        let mut cfg = small();
        cfg.options.bins = 1;
        let s = ergodic_study(&cfg).unwrap();
        assert!(s.degenerate);
        assert!(s.rows.iter().all(|r| r.tv == 0.0));
        assert!(s.fit.is_none());
    }
}
