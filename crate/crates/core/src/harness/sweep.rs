use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::run::{run_on_graph, RunMetrics, RunOptions};
use crate::dynamics::{DependencyProtocol, RegionalProtocol};
use crate::error::{Error, Result};
use crate::objectbase::generate_database;
use crate::policy::PolicyKind;

/// One cell of an H sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub protocol: RegionalProtocol,
    pub dependency: DependencyProtocol,
    pub policy: PolicyKind,
    pub h: f64,
    pub seed: u64,
    pub txns: u64,
    pub metrics: RunMetrics,
}

/// Runs every (policy, h, seed) cell on one shared database. All policies
/// at a given (h, seed) see the same root stream. Rows come back sorted by
/// policy, then h, then seed, independent of scheduling.
pub fn sweep_h(
    config: &ExperimentConfig,
    h_values: &[f64],
    policies: &[PolicyKind],
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if h_values.is_empty() {
        return Err(Error::config("sweep.h_values", "must not be empty"));
    }
    if policies.is_empty() {
        return Err(Error::config("sweep.policies", "must not be empty"));
    }
    let seeds = if config.sweep.seeds.is_empty() {
        vec![config.seed]
    } else {
        config.sweep.seeds.clone()
    };
    let mut cells = Vec::new();
    for &policy in policies {
        for &h in h_values {
            for &seed in &seeds {
                let mut cfg = config.clone();
                cfg.policy.kind = policy;
                cfg.regional.h = h;
                cfg.seed = seed;
                cfg.validate()?;
                cells.push(cfg);
            }
        }
    }
    let graph = generate_database(&config.db)?;
    let mut rows = cells
        .par_iter()
        .map(|cfg| {
            let out = run_on_graph(cfg, &graph, RunOptions::default())?;
            Ok(SweepRow {
                protocol: cfg.regional.protocol,
                dependency: cfg.dependency.protocol,
                policy: cfg.policy.kind,
                h: cfg.regional.h,
                seed: cfg.seed,
                txns: cfg.num_transactions,
                metrics: out.metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.policy
            .cmp(&b.policy)
            .then(a.h.total_cmp(&b.h))
            .then(a.seed.cmp(&b.seed))
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_complete() {
        let mut c = ExperimentConfig::default();
        c.db.num_objects = 3_000;
        c.storage.buffer_bytes = 32 * 4096;
        c.regional.hr_size = 0.02;
        c.num_transactions = 300;
        c.sweep.seeds = vec![3, 1];
        let rows = sweep_h(&c, &[1.0, 0.0], &[PolicyKind::Gp, PolicyKind::NoClustering]).unwrap();
        assert_eq!(rows.len(), 8);
        let keys: Vec<_> = rows.iter().map(|r| (r.policy, r.h, r.seed)).collect();
        assert_eq!(keys[0], (PolicyKind::NoClustering, 0.0, 1));
        assert_eq!(keys[7], (PolicyKind::Gp, 1.0, 3));
        assert!(rows
            .iter()
            .all(|r| r.txns == 300 && r.metrics.seed == r.seed));
    }

    #[test]
    fn rejects_out_of_range_h() {
        let c = ExperimentConfig::default();
        assert!(sweep_h(&c, &[1.5], &[PolicyKind::Gp])
            .unwrap_err()
            .is_config());
        assert!(sweep_h(&c, &[], &[PolicyKind::Gp]).unwrap_err().is_config());
    }
}
