use serde::Serialize;

use super::{Study, StudyConfig, StudyKind, Table};
use crate::error::{Error, Result};
use crate::flow::integrate_state_along;
use crate::model::rate_bar;
use crate::row;
use crate::simulator::{advance, EventLog};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpChainRow {
    /// Degree `p` of `g(x) = (x¹)^p`; `0` is `g ≡ 1`.
    pub power: u32,
    /// `(1/n) Σ_k g(Z_k)`.
    pub chain_mean: f64,
    /// `∫ f̄ g(X_s) ds / ∫ f̄(X_s) ds`.
    pub weighted_time_mean: f64,
    pub gap: f64,
    /// Batch-means standard error of the gap.
    pub gap_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JumpChainStudy {
    pub horizon: f64,
    pub jumps: usize,
    pub batches: usize,
    pub rows: Vec<JumpChainRow>,
}

/// Compares jump-chain averages with `f̄`-weighted time averages along one
/// trajectory (replication 0 at the largest horizon).
pub fn jump_chain_study(cfg: &StudyConfig) -> Result<JumpChainStudy> {
    let horizon = cfg.max_horizon();
    let log = cfg.replicate(horizon, 0)?;
    let mut powers = vec![0];
    powers.extend(cfg.options.powers.iter().copied().filter(|&p| p > 0));
    let rows = powers
        .iter()
        .map(|&p| {
            compare(&log, cfg, |x| x.powi(p as i32)).map(|(c, w, g, se)| JumpChainRow {
                power: p,
                chain_mean: c,
                weighted_time_mean: w,
                gap: g,
                gap_se: se,
            })
        })
        .collect::<Result<_>>()?;
    Ok(JumpChainStudy { horizon, jumps: log.len(), batches: cfg.options.batches, rows })
}

/// Returns `(chain mean, weighted time mean, gap, gap se)` for `g` applied to
/// the first coordinate.
///
/// With `c` the weighted time mean, `Σ_k (g(Z_k) - c) - ∫ f̄ (g - c)` is a
/// martingale evaluated at `t`, so its increments over disjoint time windows
/// are uncorrelated and their spread gives the standard error of the gap.
fn compare(log: &EventLog, cfg: &StudyConfig, g: impl Fn(f64) -> f64) -> Result<(f64, f64, f64, f64)> {
    let n = log.len();
    if n == 0 {
        return Err(Error::InsufficientJumps { needed: 1, available: 0 });
    }
    let batches = cfg.options.batches.max(1);
    let t = log.horizon();
    let width = t / batches as f64;
    let params = log.params();
    let f = &cfg.rate;
    let tol = cfg.options.tol;

    // per window: Σ g(Z_k), jump count, ∫ f̄ g, ∫ f̄
    let mut win = vec![[0.0f64; 4]; batches];
    let window_of = |s: f64| ((s / width) as usize).min(batches - 1);
    for jump in log.iter() {
        let w = &mut win[window_of(jump.time)];
        w[0] += g(jump.pre_state[0]);
        w[1] += 1.0;
    }
    let mut buf = Vec::new();
    log.for_each_segment(t, |t0, state, dur| {
        let mut s = t0;
        let end = t0 + dur;
        while s < end {
            let b = window_of(s);
            let e = if b + 1 == batches { end } else { end.min((b + 1) as f64 * width) };
            buf.clear();
            buf.extend_from_slice(state);
            advance(&mut buf, s - t0, params);
            let piece_tol = tol * (e - s) / t;
            win[b][2] += integrate_state_along(|x| rate_bar(x, f) * g(x[0]), &buf, e - s, params, piece_tol)?;
            win[b][3] += integrate_state_along(|x| rate_bar(x, f), &buf, e - s, params, piece_tol)?;
            s = e;
        }
        Ok(())
    })?;

    let total = |k: usize| win.iter().map(|w| w[k]).sum::<f64>();
    let chain_mean = total(0) / n as f64;
    let weighted = total(2) / total(3);
    let gap = chain_mean - weighted;
    let incs: Vec<f64> = win.iter().map(|w| (w[0] - weighted * w[1]) - (w[2] - weighted * w[3])).collect();
    let gap_se = if batches > 1 { (batches as f64 * crate::stats::variance(&incs)).sqrt() / n as f64 } else { f64::NAN };
    Ok((chain_mean, weighted, gap, gap_se))
}

impl Study for JumpChainStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::JumpChain
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["power", "chain_mean", "weighted_time_mean", "gap", "gap_se"]);
        for r in &self.rows {
            t.push(row![r.power, r.chain_mean, r.weighted_time_mean, r.gap, r.gap_se]);
        }
        vec![("jumpchain".into(), t)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({
            "study": "jumpchain",
            "horizon": self.horizon,
            "jumps": self.jumps,
            "batches": self.batches,
            "rows": self.rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn small() -> StudyConfig {
        let mut cfg = StudyConfig::reference(StudyKind::JumpChain);
        cfg.params = ModelParams::new(5, 1.0, 1.0, 2.0).unwrap();
        cfg.horizons = vec![60.0];
        cfg
    }

    #[test]
    fn constant_test_function_matches_exactly() {
        let s = jump_chain_study(&small()).unwrap();
        let one = &s.rows[0];
        assert_eq!(one.power, 0);
        assert_eq!(one.chain_mean, 1.0);
        assert_eq!(one.weighted_time_mean, 1.0);
        assert_eq!(one.gap, 0.0);
    }

    #[test]
    fn null_set_indicator_gives_zero() {
        let cfg = small();
        let log = cfg.replicate(60.0, 0).unwrap();
        let (c, w, gap, _) = compare(&log, &cfg, |x| if x == 0.123456789 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!((c, w, gap), (0.0, 0.0, 0.0));
    }

    #[test]
    fn windowing_does_not_change_the_means() {
        let mut cfg = small();
        let log = cfg.replicate(60.0, 0).unwrap();
        cfg.options.batches = 1;
        let (c1, w1, _, se1) = compare(&log, &cfg, |x| x * x).unwrap();
        cfg.options.batches = 7;
        let (c7, w7, _, se7) = compare(&log, &cfg, |x| x * x).unwrap();
        assert!((c1 - c7).abs() < 1e-12);
        assert!((w1 - w7).abs() < 1e-9 * w1, "{w1} vs {w7}");
        assert!(se1.is_nan() && se7.is_finite() && se7 > 0.0);
    }
}
