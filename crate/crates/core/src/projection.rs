//! Trace projections and the standalone replay oracle.
//!
//! A composed run interleaves tree and word transitions. Projecting the run
//! onto the tree side (and onto each word instance) must yield a legal run
//! of the corresponding sub-algorithm that reproduces, step for step, the
//! sub-states embedded in the composed run. This module extracts the
//! projections and replays them through fresh single-sided replicas,
//! comparing canonical states at every transition.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::compose::ComposedOp;
use crate::sim::{EventKind, RequestId, RunReport, TraceEvent};
use crate::translate::{bit_set, Bits, HistEntry, Peel, Translator};
use crate::tree::{Identifier, WellFormedTree};
use crate::word::WordState;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ProjectionCheck {
    pub tree_events: u64,
    pub word_events: u64,
    pub skipped_dead_word_events: u64,
    pub mismatches: Vec<String>,
}

impl ProjectionCheck {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// The tree-side projection of a run: its tree transitions, in order.
pub fn project_tree(report: &RunReport) -> Vec<&TraceEvent> {
    report
        .trace
        .iter()
        .filter(|ev| matches!(ev.request.op, ComposedOp::Tree { .. }))
        .collect()
}

/// The word-side projections, keyed by word instance.
pub fn project_words(report: &RunReport) -> BTreeMap<Identifier, Vec<&TraceEvent>> {
    let mut out: BTreeMap<Identifier, Vec<&TraceEvent>> = BTreeMap::new();
    for ev in &report.trace {
        if let ComposedOp::Word { id, .. } = &ev.request.op {
            out.entry(*id).or_default().push(ev);
        }
    }
    out
}

struct TreeReplay {
    state: WellFormedTree,
    /// Original ops + causal pasts over the replayed tree-only history;
    /// the same translator the simulator uses runs on this view.
    hist: Vec<HistEntry>,
    ids: Vec<RequestId>,
    executed_ids: BTreeSet<RequestId>,
}

impl TreeReplay {
    fn new() -> Self {
        TreeReplay {
            state: WellFormedTree::new(),
            hist: Vec::new(),
            ids: Vec::new(),
            executed_ids: BTreeSet::new(),
        }
    }

    /// Restricts a full-graph causal past to this replica's executed
    /// history, as index bits.
    fn local_past(&self, past: &BTreeSet<RequestId>) -> Bits {
        let mut bits = Bits::new();
        for (i, id) in self.ids.iter().enumerate() {
            if past.contains(id) {
                bit_set(&mut bits, i);
            }
        }
        bits
    }
}

/// Replays the projections of a run through standalone replicas and checks
/// that every projected transition reproduces the recorded sub-state.
pub fn check_projections(report: &RunReport) -> ProjectionCheck {
    let mut check = ProjectionCheck::default();

    // Causal pasts over the full request graph; the projections inherit the
    // causality relation restricted to their own operations.
    let mut dep_graph: BTreeMap<RequestId, BTreeSet<RequestId>> = BTreeMap::new();
    for ev in &report.trace {
        dep_graph
            .entry(ev.request.id)
            .or_insert_with(|| ev.request.deps.clone());
    }
    let mut pasts: BTreeMap<RequestId, BTreeSet<RequestId>> = BTreeMap::new();
    fn past_of(
        id: RequestId,
        graph: &BTreeMap<RequestId, BTreeSet<RequestId>>,
        memo: &mut BTreeMap<RequestId, BTreeSet<RequestId>>,
    ) -> BTreeSet<RequestId> {
        if let Some(p) = memo.get(&id) {
            return p.clone();
        }
        let mut acc = BTreeSet::new();
        if let Some(deps) = graph.get(&id) {
            for d in deps {
                acc.insert(*d);
                acc.extend(past_of(*d, graph, memo));
            }
        }
        memo.insert(id, acc.clone());
        acc
    }

    let tree_requests: BTreeSet<RequestId> = report
        .trace
        .iter()
        .filter(|ev| matches!(ev.request.op, ComposedOp::Tree { .. }))
        .map(|ev| ev.request.id)
        .collect();

    let mut tree_replicas: BTreeMap<u64, TreeReplay> = BTreeMap::new();
    let mut word_replicas: BTreeMap<(u64, Identifier), WordState> = BTreeMap::new();

    for ev in &report.trace {
        match &ev.request.op {
            ComposedOp::Tree { op } => {
                check.tree_events += 1;
                let past = past_of(ev.request.id, &dep_graph, &mut pasts);
                let replica = tree_replicas.entry(ev.site).or_insert_with(TreeReplay::new);

                // Causal legality of the projection: every tree request in
                // the causal past must already have executed here.
                for p in past.iter().filter(|p| tree_requests.contains(p)) {
                    if !replica.executed_ids.contains(p) {
                        check.mismatches.push(format!(
                            "site {}: projected run executes {} before its past {p}",
                            ev.site, ev.request.id
                        ));
                    }
                }

                let local_past = replica.local_past(&past);
                let integrated = match ev.kind {
                    EventKind::Local => op.clone(),
                    EventKind::External => {
                        Translator::new(&replica.hist, Peel::HighestKey).integrate(op, &local_past)
                    }
                };
                replica.state = replica.state.apply(&integrated);
                replica.hist.push(HistEntry {
                    tree_op: Some(op.clone()),
                    past: local_past,
                    order_key: (ev.request.id.site, ev.request.id.opnb),
                });
                replica.ids.push(ev.request.id);
                replica.executed_ids.insert(ev.request.id);

                let replayed = replica.state.canonical_serialize();
                match &ev.tree_state {
                    Some(recorded) if *recorded == replayed => {}
                    Some(recorded) => check.mismatches.push(format!(
                        "site {} seq {}: tree replay diverges:\n  recorded {}\n  replayed {}",
                        ev.site, ev.seq, recorded, replayed
                    )),
                    None => check.mismatches.push(format!(
                        "site {} seq {}: tree event lacks a recorded state",
                        ev.site, ev.seq
                    )),
                }
            }
            ComposedOp::Word { id, op } => {
                check.word_events += 1;
                match &ev.word_state {
                    None => {
                        // The instance was dead in the composed run; the
                        // projection maps this step to the null process.
                        check.skipped_dead_word_events += 1;
                    }
                    Some(recorded) => {
                        let replica = word_replicas.entry((ev.site, *id)).or_default();
                        replica.apply(op);
                        let replayed = replica.canonical_serialize();
                        if *recorded != replayed {
                            check.mismatches.push(format!(
                                "site {} seq {} word {}: replay diverges:\n  recorded {}\n  replayed {}",
                                ev.site, ev.seq, id, recorded, replayed
                            ));
                        }
                    }
                }
            }
        }
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario, Policy, Scenario, ScriptOp, Step};
    use crate::tree::Label;

    fn op_step(site: u64, op: ScriptOp) -> Step {
        Step::Op { site, op }
    }

    fn gid(site: u64, opnb: u64) -> Identifier {
        Identifier::gen(site, opnb)
    }

    #[test]
    fn tree_only_run_has_empty_word_projections() {
        let scenario = Scenario {
            seed: 1,
            sites: 2,
            script: vec![
                op_step(
                    1,
                    ScriptOp::Add {
                        parent: Identifier::Data,
                    },
                ),
                op_step(
                    1,
                    ScriptOp::Ren {
                        target: gid(1, 1),
                        label: Label::text("a"),
                    },
                ),
            ],
            random: None,
            policy: Policy::Scripted,
        };
        let report = run_scenario(&scenario).unwrap();
        assert!(project_words(&report).is_empty());
        assert_eq!(project_tree(&report).len(), report.trace.len());
        let check = check_projections(&report);
        assert!(check.ok(), "{:?}", check.mismatches);
        assert_eq!(check.word_events, 0);
    }

    #[test]
    fn mixed_run_projections_replay_exactly() {
        let scenario = Scenario {
            seed: 2,
            sites: 3,
            script: vec![
                op_step(
                    1,
                    ScriptOp::Add {
                        parent: Identifier::Data,
                    },
                ),
                Step::Sync { sync: true },
                op_step(
                    1,
                    ScriptOp::Ins {
                        id: gid(1, 1),
                        pos: 0,
                        ch: 'h',
                    },
                ),
                op_step(
                    2,
                    ScriptOp::Ins {
                        id: gid(1, 1),
                        pos: 0,
                        ch: 'i',
                    },
                ),
                op_step(
                    3,
                    ScriptOp::Ren {
                        target: gid(1, 1),
                        label: Label::text("t"),
                    },
                ),
                Step::Sync { sync: true },
                op_step(2, ScriptOp::Del { target: gid(1, 1) }),
                op_step(
                    1,
                    ScriptOp::Ins {
                        id: gid(1, 1),
                        pos: 0,
                        ch: '!',
                    },
                ),
            ],
            random: None,
            policy: Policy::Scripted,
        };
        let report = run_scenario(&scenario).unwrap();
        assert!(report.ok(), "{:?}", report.divergence);
        let check = check_projections(&report);
        assert!(check.ok(), "{:?}", check.mismatches);
        assert!(check.tree_events > 0 && check.word_events > 0);
        // The insert racing the delete is dropped wherever the node is
        // already gone.
        assert!(check.skipped_dead_word_events > 0);
    }
}
