//! Deterministic multi-replica simulator.
//!
//! Replicas exchange requests over lossless per-pair FIFO channels. A
//! request carries its operation plus the minimal dependency set: the
//! antichain of requests immediately preceding it in the causality order.
//! A request executes at a replica only once its whole causal past has;
//! tree-side operations are then translated into the replica's context
//! (transformed through the locally executed concurrent operations, see
//! [`crate::translate`]), word-side operations commute and apply as-is.
//!
//! Every run is a closed-world discrete-event loop driven by a seeded RNG:
//! identical scenarios produce byte-identical reports, and quiescence is
//! simply an empty event set.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::compose::{ComposedOp, DocState};
use crate::translate::{
    bit_get, bit_or, bit_set, concurrent_tree_count, Bits, HistEntry, Peel, Translator,
};
use crate::tree::{Identifier, Label, TreeOp};
use crate::word::PositionalOp;

/// Global identity of a request: issuing site and its per-site sequence
/// number (shared by tree and word requests so each site has one history).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RequestId {
    pub site: u64,
    pub opnb: u64,
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.site, self.opnb)
    }
}

/// What travels between replicas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub op: ComposedOp,
    /// Minimal dependencies: the maximal elements of the issuer's causal
    /// past at emission. Their downward closure is the whole past.
    pub deps: BTreeSet<RequestId>,
}

/// User-level scripted operation; identifiers of earlier additions are the
/// `(site, opnb)` of the request that created them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScriptOp {
    Add {
        parent: Identifier,
    },
    Del {
        target: Identifier,
    },
    Mv {
        target: Identifier,
        parent: Identifier,
    },
    Ren {
        target: Identifier,
        label: Label,
    },
    Nop,
    Ins {
        id: Identifier,
        pos: usize,
        ch: char,
    },
    DelCh {
        id: Identifier,
        pos: usize,
    },
}

/// One step of a scenario script: an operation issued by a site, or a sync
/// barrier that delivers every outstanding message before continuing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Step {
    Sync { sync: bool },
    Op { site: u64, op: ScriptOp },
}

/// Mix weights for randomly generated operations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpWeights {
    pub add: u32,
    pub del: u32,
    pub mv: u32,
    pub ren: u32,
    pub nop: u32,
    pub ins: u32,
    pub del_ch: u32,
}

impl Default for OpWeights {
    fn default() -> Self {
        OpWeights {
            add: 4,
            del: 2,
            mv: 3,
            ren: 3,
            nop: 1,
            ins: 3,
            del_ch: 2,
        }
    }
}

/// Randomized load: every site issues between `min_ops` and `max_ops`
/// operations drawn from the weighted mix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomSpec {
    pub min_ops: u64,
    pub max_ops: u64,
    #[serde(default)]
    pub weights: OpWeights,
}

/// How local issuance interleaves with delivery.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Follow the script order exactly; deliveries happen only at sync
    /// barriers and after the script ends.
    #[default]
    Scripted,
    /// Seeded random choice among enabled events (issues and deliveries).
    Random,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    pub sites: u64,
    #[serde(default)]
    pub script: Vec<Step>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomSpec>,
    #[serde(default)]
    pub policy: Policy,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("site {site} step {step}: operation not generable: {detail}")]
    NotGenerable {
        site: u64,
        step: usize,
        detail: String,
    },
    #[error("scenario references site {0} but only {1} sites exist")]
    UnknownSite(u64, u64),
    #[error("scheduler deadlock: undeliverable requests remain")]
    Deadlock,
    #[error("scenario needs at least one site")]
    NoSites,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Local,
    External,
}

/// One executed transition, with enough recorded state for the projection
/// replay oracle to re-derive and re-check it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    pub site: u64,
    pub kind: EventKind,
    pub request: Request,
    /// The form actually applied (tree ops after integration).
    pub integrated: ComposedOp,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub script_op: Option<ScriptOp>,
    /// Canonical tree state of the acting replica after a tree transition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree_state: Option<String>,
    /// Canonical state of the touched word instance after a word
    /// transition; absent when the instance was already dead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_state: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub requests: u64,
    pub deliveries: u64,
    pub order_checks: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaReport {
    pub site: u64,
    pub state: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: Scenario,
    pub quiesced: bool,
    pub converged: bool,
    /// Integration results that changed under the canonical re-ordering;
    /// must stay empty.
    pub order_divergences: Vec<String>,
    pub divergence: Option<String>,
    pub replicas: Vec<ReplicaReport>,
    pub stats: RunStats,
    pub trace: Vec<TraceEvent>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.quiesced && self.converged && self.order_divergences.is_empty()
    }
}

/// One site's environment: its counter, current state, executed history in
/// execution order, and the frontier from which new dependencies are drawn.
#[derive(Clone, Debug)]
pub struct Replica {
    site: u64,
    op_counter: u64,
    state: DocState,
    index: BTreeMap<RequestId, usize>,
    /// hist[i]: original op + causal-past bitset of the i-th executed
    /// request, the view the context translator works on.
    hist: Vec<HistEntry>,
    frontier: BTreeSet<RequestId>,
}

impl Replica {
    pub fn new(site: u64) -> Self {
        Replica {
            site,
            op_counter: 0,
            state: DocState::new(),
            index: BTreeMap::new(),
            hist: Vec::new(),
            frontier: BTreeSet::new(),
        }
    }

    pub fn site(&self) -> u64 {
        self.site
    }

    pub fn state(&self) -> &DocState {
        &self.state
    }

    pub fn executed_len(&self) -> usize {
        self.hist.len()
    }

    pub fn frontier(&self) -> &BTreeSet<RequestId> {
        &self.frontier
    }

    /// Causal past of a set of direct dependencies, as a bitset over this
    /// replica's executed history. All dependencies must be executed here.
    fn closure(&self, deps: &BTreeSet<RequestId>) -> Bits {
        let mut past = Bits::new();
        for d in deps {
            let i = self.index[d];
            bit_set(&mut past, i);
            bit_or(&mut past, &self.hist[i].past);
        }
        past
    }

    /// True once every dependency (and hence the whole causal past) has
    /// been executed here; dependencies of dependencies were checked when
    /// those executed, so the direct check suffices by induction.
    pub fn ready(&self, req: &Request) -> bool {
        req.deps.iter().all(|d| self.index.contains_key(d))
    }

    fn record(&mut self, request: &Request, past: Bits) {
        let idx = self.hist.len();
        self.frontier.retain(|f| !bit_get(&past, self.index[f]));
        self.frontier.insert(request.id);
        self.index.insert(request.id, idx);
        self.hist.push(HistEntry {
            tree_op: match &request.op {
                ComposedOp::Tree { op } => Some(op.clone()),
                ComposedOp::Word { .. } => None,
            },
            past,
            order_key: (request.id.site, request.id.opnb),
        });
    }

    /// Generates and executes a local operation, returning the request to
    /// broadcast. The operation must be generable in the current state.
    pub fn local_step(&mut self, op: &ScriptOp) -> Result<Request, String> {
        let opnb = self.op_counter + 1;
        let composed = self.concretize(op, opnb)?;
        self.op_counter = opnb;

        let id = RequestId {
            site: self.site,
            opnb,
        };
        let deps = self.frontier.clone();
        let request = Request {
            id,
            op: composed.clone(),
            deps,
        };

        // Everything executed so far is below a new local request.
        let mut past = Bits::new();
        for i in 0..self.hist.len() {
            bit_set(&mut past, i);
        }
        self.state = self.state.apply(&composed);
        self.record(&request, past);
        Ok(request)
    }

    /// Turns a user-level operation into its wire form, enforcing the
    /// generation guards.
    fn concretize(&self, op: &ScriptOp, opnb: u64) -> Result<ComposedOp, String> {
        let tree = self.state.tree();
        let exists = |id: &Identifier| match id {
            Identifier::Data | Identifier::Mem => true,
            other => tree.contains(*other),
        };
        match op {
            ScriptOp::Add { parent } => {
                if !exists(parent) {
                    return Err(format!("add: parent {parent} does not exist"));
                }
                Ok(ComposedOp::Tree {
                    op: TreeOp::Add {
                        parent: *parent,
                        new: Identifier::gen(self.site, opnb),
                    },
                })
            }
            ScriptOp::Del { target } => {
                if !target.is_gen() || !exists(target) {
                    return Err(format!("del: target {target} does not exist"));
                }
                Ok(ComposedOp::Tree {
                    op: TreeOp::Del { target: *target },
                })
            }
            ScriptOp::Mv { target, parent } => {
                if !target.is_gen() || !exists(target) {
                    return Err(format!("mv: target {target} does not exist"));
                }
                if !exists(parent) {
                    return Err(format!("mv: parent {parent} does not exist"));
                }
                if target == parent {
                    return Err("mv: target equals parent".to_string());
                }
                Ok(ComposedOp::Tree {
                    op: TreeOp::Mv {
                        target: *target,
                        parent: *parent,
                        site: self.site,
                    },
                })
            }
            ScriptOp::Ren { target, label } => {
                if !target.is_gen() || !exists(target) {
                    return Err(format!("ren: target {target} does not exist"));
                }
                Ok(ComposedOp::Tree {
                    op: TreeOp::Ren {
                        target: *target,
                        label: label.clone(),
                        site: self.site,
                    },
                })
            }
            ScriptOp::Nop => Ok(ComposedOp::Tree { op: TreeOp::Nop }),
            ScriptOp::Ins { id, pos, ch } => self
                .state
                .normalize_word(
                    *id,
                    &PositionalOp::InsCh { pos: *pos, ch: *ch },
                    self.site,
                    opnb,
                )
                .map_err(|e| e.to_string()),
            ScriptOp::DelCh { id, pos } => self
                .state
                .normalize_word(*id, &PositionalOp::DelCh { pos: *pos }, self.site, opnb)
                .map_err(|e| e.to_string()),
        }
    }

    /// Integrates and executes an external request. Returns the applied
    /// form and, when the context translation could have been
    /// order-sensitive, a witness of any mismatch between the two peel
    /// policies (there must never be one).
    pub fn external_step(&mut self, req: &Request) -> (ComposedOp, Option<String>, bool) {
        debug_assert!(self.ready(req));
        let past = self.closure(&req.deps);

        let mut order_witness = None;
        let mut order_checked = false;
        let integrated = match &req.op {
            ComposedOp::Word { .. } => req.op.clone(),
            ComposedOp::Tree { op } => {
                let form = Translator::new(&self.hist, Peel::HighestKey).integrate(op, &past);
                // Order-independence cross-check: the recursion must not
                // depend on which maximal concurrent element is peeled
                // first. Contexts with fewer than two concurrent tree
                // operations are trivially insensitive.
                if concurrent_tree_count(&self.hist, &past) >= 2 {
                    order_checked = true;
                    let other = Translator::new(&self.hist, Peel::LowestKey).integrate(op, &past);
                    if other != form {
                        order_witness = Some(format!(
                            "request {}: peel-order sensitivity: {} != {}",
                            req.id,
                            form.pretty(),
                            other.pretty()
                        ));
                    }
                }
                ComposedOp::Tree { op: form }
            }
        };

        self.state = self.state.apply(&integrated);
        self.record(req, past);
        (integrated, order_witness, order_checked)
    }
}

/// Lossless per-ordered-pair FIFO channels.
#[derive(Clone, Debug, Default)]
struct Network {
    queues: BTreeMap<(u64, u64), VecDeque<Request>>,
}

impl Network {
    fn broadcast(&mut self, from: u64, sites: u64, req: &Request) {
        for to in 1..=sites {
            if to != from {
                self.queues
                    .entry((from, to))
                    .or_default()
                    .push_back(req.clone());
            }
        }
    }

    fn is_empty(&self) -> bool {
        self.queues.values().all(VecDeque::is_empty)
    }
}

struct SiteScript {
    steps: VecDeque<ScriptOp>,
    random_remaining: u64,
}

/// The discrete-event loop.
pub struct Simulation {
    scenario: Scenario,
    replicas: BTreeMap<u64, Replica>,
    net: Network,
    rng: ChaCha8Rng,
    trace: Vec<TraceEvent>,
    stats: RunStats,
    order_divergences: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Event {
    Issue(u64),
    Deliver(u64, u64),
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        if scenario.sites == 0 {
            return Err(SimError::NoSites);
        }
        for step in &scenario.script {
            if let Step::Op { site, .. } = step {
                if *site == 0 || *site > scenario.sites {
                    return Err(SimError::UnknownSite(*site, scenario.sites));
                }
            }
        }
        let replicas = (1..=scenario.sites).map(|s| (s, Replica::new(s))).collect();
        let rng = ChaCha8Rng::seed_from_u64(scenario.seed);
        Ok(Simulation {
            scenario,
            replicas,
            net: Network::default(),
            rng,
            trace: Vec::new(),
            stats: RunStats::default(),
            order_divergences: Vec::new(),
        })
    }

    pub fn run(mut self) -> Result<RunReport, SimError> {
        match self.scenario.policy {
            Policy::Scripted => self.run_scripted()?,
            Policy::Random => self.run_random()?,
        }
        Ok(self.finish())
    }

    fn run_scripted(&mut self) -> Result<(), SimError> {
        let script = self.scenario.script.clone();
        for (i, step) in script.iter().enumerate() {
            match step {
                Step::Sync { .. } => self.flush()?,
                Step::Op { site, op } => self.issue(*site, op, i)?,
            }
        }
        self.flush()
    }

    fn run_random(&mut self) -> Result<(), SimError> {
        let mut scripts: BTreeMap<u64, SiteScript> = (1..=self.scenario.sites)
            .map(|s| {
                (
                    s,
                    SiteScript {
                        steps: VecDeque::new(),
                        random_remaining: 0,
                    },
                )
            })
            .collect();
        for step in &self.scenario.script {
            match step {
                Step::Op { site, op } => scripts.get_mut(site).unwrap().steps.push_back(op.clone()),
                // Sync barriers have no meaning under random scheduling.
                Step::Sync { .. } => {}
            }
        }
        if let Some(spec) = self.scenario.random.clone() {
            for s in 1..=self.scenario.sites {
                let n = self
                    .rng
                    .gen_range(spec.min_ops..=spec.max_ops.max(spec.min_ops));
                scripts.get_mut(&s).unwrap().random_remaining = n;
            }
        }

        let mut step_no = 0usize;
        loop {
            let mut events = Vec::new();
            for (s, sc) in &scripts {
                if !sc.steps.is_empty() || sc.random_remaining > 0 {
                    events.push(Event::Issue(*s));
                }
            }
            for ((from, to), q) in &self.net.queues {
                if let Some(head) = q.front() {
                    if self.replicas[to].ready(head) {
                        events.push(Event::Deliver(*from, *to));
                    }
                }
            }
            if events.is_empty() {
                if !self.net.is_empty() {
                    return Err(SimError::Deadlock);
                }
                return Ok(());
            }
            let ev = events[self.rng.gen_range(0..events.len())];
            match ev {
                Event::Issue(site) => {
                    let sc = scripts.get_mut(&site).unwrap();
                    let op = match sc.steps.pop_front() {
                        Some(op) => op,
                        None => {
                            sc.random_remaining -= 1;
                            let weights = self
                                .scenario
                                .random
                                .as_ref()
                                .map(|r| r.weights.clone())
                                .unwrap_or_default();
                            match sample_op(&self.replicas[&site], &weights, &mut self.rng) {
                                Some(op) => op,
                                None => continue,
                            }
                        }
                    };
                    step_no += 1;
                    self.issue(site, &op, step_no)?;
                }
                Event::Deliver(from, to) => self.deliver(from, to),
            }
        }
    }

    /// Delivers every outstanding message, in seeded-random order among the
    /// currently deliverable ones.
    fn flush(&mut self) -> Result<(), SimError> {
        loop {
            let mut events = Vec::new();
            for ((from, to), q) in &self.net.queues {
                if let Some(head) = q.front() {
                    if self.replicas[to].ready(head) {
                        events.push((*from, *to));
                    }
                }
            }
            if events.is_empty() {
                if !self.net.is_empty() {
                    return Err(SimError::Deadlock);
                }
                return Ok(());
            }
            let (from, to) = events[self.rng.gen_range(0..events.len())];
            self.deliver(from, to);
        }
    }

    fn issue(&mut self, site: u64, op: &ScriptOp, step: usize) -> Result<(), SimError> {
        let replica = self.replicas.get_mut(&site).unwrap();
        let request = replica
            .local_step(op)
            .map_err(|detail| SimError::NotGenerable { site, step, detail })?;
        self.stats.requests += 1;
        self.push_trace(
            site,
            EventKind::Local,
            &request,
            &request.op.clone(),
            Some(op.clone()),
        );
        self.net.broadcast(site, self.scenario.sites, &request);
        Ok(())
    }

    fn deliver(&mut self, from: u64, to: u64) {
        let req = self
            .net
            .queues
            .get_mut(&(from, to))
            .and_then(VecDeque::pop_front)
            .expect("deliver called on empty queue");
        let replica = self.replicas.get_mut(&to).unwrap();
        let (integrated, witness, checked) = replica.external_step(&req);
        self.stats.deliveries += 1;
        if checked {
            self.stats.order_checks += 1;
        }
        if let Some(w) = witness {
            self.order_divergences.push(format!("site {to}: {w}"));
        }
        self.push_trace(to, EventKind::External, &req, &integrated, None);
    }

    fn push_trace(
        &mut self,
        site: u64,
        kind: EventKind,
        request: &Request,
        integrated: &ComposedOp,
        script_op: Option<ScriptOp>,
    ) {
        let replica = &self.replicas[&site];
        let (tree_state, word_state) = match integrated {
            ComposedOp::Tree { .. } => (Some(replica.state().tree().canonical_serialize()), None),
            ComposedOp::Word { id, .. } => (
                None,
                replica.state().word(*id).map(|w| w.canonical_serialize()),
            ),
        };
        self.trace.push(TraceEvent {
            seq: self.trace.len() as u64,
            site,
            kind,
            request: request.clone(),
            integrated: integrated.clone(),
            script_op,
            tree_state,
            word_state,
        });
    }

    fn finish(self) -> RunReport {
        let replicas: Vec<ReplicaReport> = self
            .replicas
            .values()
            .map(|r| ReplicaReport {
                site: r.site(),
                state: r.state().canonical_serialize(),
            })
            .collect();
        let mut divergence = None;
        for pair in replicas.windows(2) {
            if pair[0].state != pair[1].state {
                divergence = Some(format!(
                    "site {} and site {} disagree:\n  {}\n  {}",
                    pair[0].site, pair[1].site, pair[0].state, pair[1].state
                ));
                break;
            }
        }
        // A word instance still buffering means causal delivery was broken.
        let mut quiesced = self.net.is_empty();
        for r in self.replicas.values() {
            for id in r.state().word_ids() {
                if r.state().word(*id).is_some_and(|w| w.pending_len() > 0) {
                    quiesced = false;
                }
            }
        }
        RunReport {
            scenario: self.scenario,
            quiesced,
            converged: divergence.is_none(),
            order_divergences: self.order_divergences,
            divergence,
            replicas,
            stats: self.stats,
            trace: self.trace,
        }
    }
}

/// Runs one scenario to quiescence.
pub fn run_scenario(scenario: &Scenario) -> Result<RunReport, SimError> {
    Simulation::new(scenario.clone())?.run()
}

/// Samples a generable operation for the replica's current state, or `None`
/// when even `Add` is somehow infeasible (it never is).
fn sample_op(replica: &Replica, weights: &OpWeights, rng: &mut ChaCha8Rng) -> Option<ScriptOp> {
    let state = replica.state();
    let ids = state.tree().gen_ids();
    let mut parents = vec![Identifier::Data, Identifier::Mem];
    parents.extend(ids.iter().copied());

    let word_targets: Vec<Identifier> = ids
        .iter()
        .filter(|id| state.word(**id).is_some())
        .copied()
        .collect();
    let erasable: Vec<Identifier> = word_targets
        .iter()
        .filter(|id| {
            state
                .word(**id)
                .is_some_and(|w| !w.visible_text().is_empty())
        })
        .copied()
        .collect();

    let mut feasible: Vec<(u32, u8)> = Vec::new();
    feasible.push((weights.add, 0));
    if !ids.is_empty() {
        feasible.push((weights.del, 1));
        feasible.push((weights.mv, 2));
        feasible.push((weights.ren, 3));
    }
    feasible.push((weights.nop, 4));
    if !word_targets.is_empty() {
        feasible.push((weights.ins, 5));
    }
    if !erasable.is_empty() {
        feasible.push((weights.del_ch, 6));
    }
    feasible.retain(|(w, _)| *w > 0);
    let total: u64 = feasible.iter().map(|(w, _)| *w as u64).sum();
    if total == 0 {
        return Some(ScriptOp::Nop);
    }
    let mut roll = rng.gen_range(0..total);
    let mut kind = feasible[0].1;
    for (w, k) in &feasible {
        if roll < *w as u64 {
            kind = *k;
            break;
        }
        roll -= *w as u64;
    }

    let pick = |rng: &mut ChaCha8Rng, xs: &[Identifier]| xs[rng.gen_range(0..xs.len())];
    let labels = ["a", "b", "c"];
    let chars = ['x', 'y', 'z', 'w'];
    Some(match kind {
        0 => ScriptOp::Add {
            parent: pick(rng, &parents),
        },
        1 => ScriptOp::Del {
            target: pick(rng, &ids),
        },
        2 => {
            let target = pick(rng, &ids);
            let choices: Vec<Identifier> =
                parents.iter().filter(|p| **p != target).copied().collect();
            ScriptOp::Mv {
                target,
                parent: pick(rng, &choices),
            }
        }
        3 => ScriptOp::Ren {
            target: pick(rng, &ids),
            label: Label::text(labels[rng.gen_range(0..labels.len())]),
        },
        4 => ScriptOp::Nop,
        5 => {
            let id = pick(rng, &word_targets);
            let len = state
                .word(id)
                .map_or(0, |w| w.visible_text().chars().count());
            ScriptOp::Ins {
                id,
                pos: rng.gen_range(0..=len),
                ch: chars[rng.gen_range(0..chars.len())],
            }
        }
        _ => {
            let id = pick(rng, &erasable);
            let len = state
                .word(id)
                .map_or(1, |w| w.visible_text().chars().count());
            ScriptOp::DelCh {
                id,
                pos: rng.gen_range(0..len),
            }
        }
    })
}
