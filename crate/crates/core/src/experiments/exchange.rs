use serde::Serialize;

use super::{Study, StudyConfig, StudyKind, Table};
use crate::error::{Error, Result};
use crate::row;
use crate::stats::{chi_square_uniform, ChiSquareResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExchangeStudy {
    pub horizon: f64,
    /// Spikes per neuron, summed over replications.
    pub counts: Vec<u64>,
    pub chi_square: ChiSquareResult,
}

/// Spike counts per neuron pooled over replications, tested for equal
/// shares. From an exchangeable start every neuron has the same law, so a
/// small p-value points at an index bias in the simulator.
pub fn exchange_study(cfg: &StudyConfig) -> Result<ExchangeStudy> {
    if cfg.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let horizon = cfg.max_horizon();
    let n = cfg.params.n_neurons();
    let per_rep = cfg.map_replications(|rep| {
        let log = cfg.replicate(horizon, rep)?;
        let mut counts = vec![0u64; n];
        for jump in log.iter() {
            counts[jump.index] += 1;
        }
        Ok(counts)
    })?;
    let mut counts = vec![0u64; n];
    for rep in &per_rep {
        for (c, r) in counts.iter_mut().zip(rep) {
            *c += r;
        }
    }
    let as_f: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(ExchangeStudy { horizon, chi_square: chi_square_uniform(&as_f), counts })
}

impl Study for ExchangeStudy {
    fn kind(&self) -> StudyKind {
        StudyKind::Exchange
    }

    fn tables(&self) -> Vec<(String, Table)> {
        let mut t = Table::new(&["neuron", "spikes"]);
        for (i, c) in self.counts.iter().enumerate() {
            t.push(row![i, c]);
        }
        vec![("exchange".into(), t)]
    }

    fn summary(&self) -> serde_json::Value {
        serde_json::json!({"study": "exchange", "horizon": self.horizon, "chi_square": self.chi_square})
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    #[test]
    fn counts_add_up() {
        let mut cfg = StudyConfig::reference(StudyKind::Exchange);
        cfg.params = ModelParams::new(4, 1.0, 1.0, 2.0).unwrap();
        cfg.horizons = vec![10.0];
        cfg.replications = 3;
        let s = exchange_study(&cfg).unwrap();
        let total: u64 = (0..3).map(|rep| cfg.replicate(10.0, rep).unwrap().len() as u64).sum();
        assert_eq!(s.counts.iter().sum::<u64>(), total);
        assert_eq!(s.chi_square.dof, 3);
    }
}
