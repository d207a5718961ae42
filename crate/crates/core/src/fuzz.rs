//! Randomized convergence testing with witness minimization.
//!
//! Each run draws a scenario (replica count, per-site operation budget,
//! weighted operation mix, schedule seed), executes it to quiescence and
//! checks convergence. A diverging scenario is first concretized: the
//! randomly sampled operations become an explicit script, so the witness no
//! longer depends on sampling, and then greedily shrunk while the
//! divergence persists.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sim::{
    run_scenario, EventKind, OpWeights, Policy, RandomSpec, RunReport, Scenario, SimError, Step,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub runs: u64,
    pub base_seed: u64,
    pub sites_min: u64,
    pub sites_max: u64,
    pub ops_min: u64,
    pub ops_max: u64,
    #[serde(default)]
    pub weights: OpWeights,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            runs: 1000,
            base_seed: 0,
            sites_min: 3,
            sites_max: 5,
            ops_min: 5,
            ops_max: 15,
            weights: OpWeights::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FuzzFailure {
    pub scenario: Scenario,
    pub detail: String,
    /// Locally minimal scenario still exhibiting the divergence, when the
    /// concretized witness reproduced it.
    pub minimized: Option<Scenario>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct FuzzSummary {
    pub runs: u64,
    pub converged: u64,
    pub failures: Vec<FuzzFailure>,
}

impl FuzzSummary {
    pub fn ok(&self) -> bool {
        self.failures.is_empty() && self.converged == self.runs
    }
}

/// The scenario for the i-th fuzz run; exposed so failures are reproducible
/// from `(config, index)` alone.
pub fn scenario_for_run(config: &FuzzConfig, index: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(config.base_seed.wrapping_add(index));
    Scenario {
        seed: rng.gen(),
        sites: rng.gen_range(config.sites_min..=config.sites_max.max(config.sites_min)),
        script: Vec::new(),
        random: Some(RandomSpec {
            min_ops: config.ops_min,
            max_ops: config.ops_max.max(config.ops_min),
            weights: config.weights.clone(),
        }),
        policy: Policy::Random,
    }
}

pub fn fuzz(config: &FuzzConfig) -> FuzzSummary {
    let mut summary = FuzzSummary {
        runs: config.runs,
        ..FuzzSummary::default()
    };
    for i in 0..config.runs {
        let scenario = scenario_for_run(config, i);
        match run_scenario(&scenario) {
            Ok(report) if report.ok() => summary.converged += 1,
            Ok(report) => {
                let detail = report
                    .divergence
                    .clone()
                    .or_else(|| report.order_divergences.first().cloned())
                    .unwrap_or_else(|| "run did not quiesce".to_string());
                let minimized = shrink(&scenario, &report);
                summary.failures.push(FuzzFailure {
                    scenario,
                    detail,
                    minimized,
                });
            }
            Err(err) => summary.failures.push(FuzzFailure {
                scenario,
                detail: format!("harness error: {err}"),
                minimized: None,
            }),
        }
    }
    summary
}

/// Rewrites a randomized scenario into an explicit script: the operations
/// that were actually sampled, in issue order.
pub fn concretize(scenario: &Scenario, report: &RunReport) -> Scenario {
    let script: Vec<Step> = report
        .trace
        .iter()
        .filter(|ev| ev.kind == EventKind::Local)
        .filter_map(|ev| {
            ev.script_op
                .clone()
                .map(|op| Step::Op { site: ev.site, op })
        })
        .collect();
    Scenario {
        seed: scenario.seed,
        sites: scenario.sites,
        script,
        random: None,
        policy: Policy::Random,
    }
}

fn diverges(scenario: &Scenario) -> bool {
    match run_scenario(scenario) {
        Ok(report) => !report.ok(),
        // A shrink step that makes some later op non-generable is not a
        // divergence witness.
        Err(SimError::NotGenerable { .. }) => false,
        Err(_) => true,
    }
}

/// Greedy delta-debugging: drop one script step at a time while the
/// divergence persists, then drop trailing silent sites.
pub fn shrink(scenario: &Scenario, report: &RunReport) -> Option<Scenario> {
    let concrete = concretize(scenario, report);
    shrink_with(concrete, &diverges)
}

/// Minimizes a scripted scenario against an arbitrary failure oracle.
/// Returns `None` when the starting point does not fail under the oracle.
pub fn shrink_with(start: Scenario, fails: &dyn Fn(&Scenario) -> bool) -> Option<Scenario> {
    if !fails(&start) {
        return None;
    }
    let mut current = start;
    loop {
        let mut improved = false;
        let mut i = 0;
        while i < current.script.len() {
            let mut candidate = current.clone();
            candidate.script.remove(i);
            if fails(&candidate) {
                current = candidate;
                improved = true;
            } else {
                i += 1;
            }
        }
        while current.sites > 1
            && !current.script.iter().any(|s| match s {
                Step::Op { site, .. } => *site == current.sites,
                Step::Sync { .. } => false,
            })
        {
            let mut candidate = current.clone();
            candidate.sites -= 1;
            if fails(&candidate) {
                current = candidate;
                improved = true;
            } else {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Some(current)
}
