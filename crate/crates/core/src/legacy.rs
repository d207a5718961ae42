//! Path-addressed trees with name-unique siblings, two flavors of deletion,
//! and the machinery around them: an integration transformation for the
//! strong deletion `Del2` (with exhaustive TP1/TP2 checks), and a bounded
//! falsifier demonstrating that no integration transformation exists once
//! deletion promotes children (`Del1`).
//!
//! Edges are addressed by the path of names leading to them, which is what
//! dooms `Del1`: promoting children shifts every path beneath the deleted
//! edge one level up, and the shifted path of a concurrent addition cannot
//! be expressed from the parameters of the two operations alone.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Unordered tree whose sibling edges carry distinct names.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct NameTree {
    edges: BTreeMap<String, NameTree>,
}

impl NameTree {
    pub fn empty() -> Self {
        NameTree::default()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn leaf(name: &str) -> Self {
        let mut t = NameTree::empty();
        t.edges.insert(name.to_string(), NameTree::empty());
        t
    }

    pub fn with_child(mut self, name: &str, child: NameTree) -> Self {
        self.edges.insert(name.to_string(), child);
        self
    }

    pub fn child(&self, name: &str) -> Option<&NameTree> {
        self.edges.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.edges.keys()
    }

    pub fn node_count(&self) -> usize {
        self.edges.len() + self.edges.values().map(NameTree::node_count).sum::<usize>()
    }

    /// All node positions, i.e. the empty path plus the path of every edge.
    pub fn positions(&self) -> Vec<Path> {
        let mut out = vec![Path::root()];
        self.collect_positions(&Path::root(), &mut out);
        out
    }

    fn collect_positions(&self, prefix: &Path, out: &mut Vec<Path>) {
        for (name, child) in &self.edges {
            let here = prefix.join(name);
            out.push(here.clone());
            child.collect_positions(&here, out);
        }
    }

    /// Deterministic textual form; sibling edges appear in name order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        if out.is_empty() {
            out.push_str("{}");
        }
        out
    }

    fn write(&self, out: &mut String) {
        for (name, child) in &self.edges {
            out.push_str(name);
            out.push('[');
            child.write(out);
            out.push(']');
        }
    }

    /// Promotion merge used by `Del1`: the children of a deleted edge join
    /// its former siblings. On a name clash the already-present sibling edge
    /// is kept and the promoted duplicate dissolves into it by merging the
    /// two child sets recursively. Any deterministic clash rule would do;
    /// this one is isolated here so it can be swapped.
    fn merge_promoted(mut self, promoted: NameTree) -> NameTree {
        for (name, sub) in promoted.edges {
            match self.edges.remove(&name) {
                None => {
                    self.edges.insert(name, sub);
                }
                Some(existing) => {
                    self.edges.insert(name, existing.merge_promoted(sub));
                }
            }
        }
        self
    }
}

/// A sequence of edge names; the empty path addresses the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Path(Vec<String>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Path(names.into_iter().map(Into::into).collect())
    }

    pub fn join(&self, name: &str) -> Path {
        let mut names = self.0.clone();
        names.push(name.to_string());
        Path(names)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn split_head(&self) -> Option<(&str, Path)> {
        self.0
            .split_first()
            .map(|(head, rest)| (head.as_str(), Path(rest.to_vec())))
    }

    /// Prefix relation: `self` is an initial segment of `other`
    /// (reflexively).
    pub fn is_prefix_of(&self, other: &Path) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "ε")
        } else {
            write!(f, "{}", self.0.join("."))
        }
    }
}

/// Path-addressed editing operations. `Del1` replaces an edge by its
/// children; `Del2` removes the whole subtree.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathOp {
    AddP { path: Path, name: String },
    Del1 { path: Path, name: String },
    Del2 { path: Path, name: String },
    NopP,
}

impl fmt::Display for PathOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathOp::AddP { path, name } => write!(f, "Add({path},{name})"),
            PathOp::Del1 { path, name } => write!(f, "Del1({path},{name})"),
            PathOp::Del2 { path, name } => write!(f, "Del2({path},{name})"),
            PathOp::NopP => write!(f, "Nop()"),
        }
    }
}

/// Applies a path operation. Total: unmatched paths leave the tree
/// untouched, and `Add` creates every missing edge along its path.
pub fn apply_path(t: &NameTree, op: &PathOp) -> NameTree {
    match op {
        PathOp::AddP { path, name } => add(t, path, name),
        PathOp::Del1 { path, name } => del1(t, path, name),
        PathOp::Del2 { path, name } => del2(t, path, name),
        PathOp::NopP => t.clone(),
    }
}

fn add(t: &NameTree, path: &Path, name: &str) -> NameTree {
    match path.split_head() {
        None => {
            if t.edges.contains_key(name) {
                t.clone()
            } else {
                let mut out = t.clone();
                out.edges.insert(name.to_string(), NameTree::empty());
                out
            }
        }
        Some((head, rest)) => {
            let mut out = t.clone();
            match t.edges.get(head) {
                Some(child) => {
                    out.edges.insert(head.to_string(), add(child, &rest, name));
                }
                None => {
                    // Path-creating clause: grow the missing spine.
                    out.edges
                        .insert(head.to_string(), add(&NameTree::empty(), &rest, name));
                }
            }
            out
        }
    }
}

fn del1(t: &NameTree, path: &Path, name: &str) -> NameTree {
    match path.split_head() {
        None => match t.edges.get(name) {
            None => t.clone(),
            Some(promoted) => {
                let mut out = t.clone();
                let promoted = promoted.clone();
                out.edges.remove(name);
                out.merge_promoted(promoted)
            }
        },
        Some((head, rest)) => match t.edges.get(head) {
            None => t.clone(),
            Some(child) => {
                let mut out = t.clone();
                out.edges.insert(head.to_string(), del1(child, &rest, name));
                out
            }
        },
    }
}

fn del2(t: &NameTree, path: &Path, name: &str) -> NameTree {
    match path.split_head() {
        None => {
            if !t.edges.contains_key(name) {
                t.clone()
            } else {
                let mut out = t.clone();
                out.edges.remove(name);
                out
            }
        }
        Some((head, rest)) => match t.edges.get(head) {
            None => t.clone(),
            Some(child) => {
                let mut out = t.clone();
                out.edges.insert(head.to_string(), del2(child, &rest, name));
                out
            }
        },
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LegacyError {
    #[error("integration is only defined for {{Nop, Add, Del2}}, got {0}")]
    Del1NotIntegrable(PathOp),
}

/// The integration transformation for `{Nop, Add, Del2}`.
///
/// An addition is nullified when it targets exactly the deleted edge or any
/// position beneath it; nested or equal deletions likewise collapse to
/// `Nop`. `Del1` operations are rejected: no such table exists for them.
pub fn it_del2(op1: &PathOp, op2: &PathOp) -> Result<PathOp, LegacyError> {
    use PathOp::*;
    if matches!(op1, Del1 { .. }) {
        return Err(LegacyError::Del1NotIntegrable(op1.clone()));
    }
    if matches!(op2, Del1 { .. }) {
        return Err(LegacyError::Del1NotIntegrable(op2.clone()));
    }
    Ok(match (op1, op2) {
        (_, NopP) => op1.clone(),
        (NopP, _) => NopP,
        (AddP { .. }, AddP { .. }) => op1.clone(),
        (AddP { path, name }, Del2 { path: dp, name: dn }) => {
            let same_edge = path == dp && name == dn;
            if same_edge || dp.join(dn).is_prefix_of(path) {
                NopP
            } else {
                op1.clone()
            }
        }
        (Del2 { .. }, AddP { .. }) => op1.clone(),
        (Del2 { path, name }, Del2 { path: dp, name: dn }) => {
            let same_edge = path == dp && name == dn;
            if same_edge || dp.join(dn).is_prefix_of(path) {
                NopP
            } else {
                op1.clone()
            }
        }
        (Del1 { .. }, _) | (_, Del1 { .. }) => unreachable!("rejected above"),
    })
}

/// Bounds for the `Del2` TP1/TP2 sweep.
#[derive(Clone, Debug)]
pub struct LegacySweepConfig {
    pub max_nodes: usize,
    pub alphabet: Vec<String>,
}

impl Default for LegacySweepConfig {
    fn default() -> Self {
        LegacySweepConfig {
            max_nodes: 4,
            alphabet: vec!["a".into(), "b".into(), "c".into()],
        }
    }
}

#[derive(Clone, Debug)]
pub struct LegacyViolation {
    pub tree: String,
    pub ops: Vec<PathOp>,
    pub detail: String,
}

impl fmt::Display for LegacyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ops: Vec<String> = self.ops.iter().map(|o| o.to_string()).collect();
        write!(f, "on {}: [{}]: {}", self.tree, ops.join(", "), self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct LegacySweepReport {
    pub trees: u64,
    pub tp1_checked: u64,
    pub tp2_checked: u64,
    pub violations: Vec<LegacyViolation>,
}

impl LegacySweepReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Every tree with at most `max_nodes` edges over the alphabet.
pub fn enumerate_name_trees(max_nodes: usize, alphabet: &[String]) -> Vec<NameTree> {
    fn go(budget: usize, alphabet: &[String]) -> Vec<NameTree> {
        // All trees with at most `budget` edges: choose a subset of names at
        // the top, distribute the remaining budget over their subtrees.
        let mut out = vec![NameTree::empty()];
        if budget == 0 {
            return out;
        }
        // Iterate over nonempty subsets of the alphabet.
        let n = alphabet.len();
        for mask in 1u32..(1 << n) {
            let chosen: Vec<&String> = (0..n)
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &alphabet[i])
                .collect();
            if chosen.len() > budget {
                continue;
            }
            let left = budget - chosen.len();
            // Distribute `left` among children in every way.
            let mut stack: Vec<(usize, Vec<NameTree>, usize)> = vec![(0, Vec::new(), left)];
            while let Some((i, acc, rem)) = stack.pop() {
                if i == chosen.len() {
                    let mut t = NameTree::empty();
                    for (name, child) in chosen.iter().zip(&acc) {
                        t.edges.insert((*name).clone(), child.clone());
                    }
                    out.push(t);
                    continue;
                }
                for sub in go(rem, alphabet) {
                    let used = sub.node_count();
                    let mut acc2 = acc.clone();
                    acc2.push(sub);
                    stack.push((i + 1, acc2, rem - used));
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }
    go(max_nodes, alphabet)
}

/// Operations a user could issue on `t`: additions at every existing
/// position with every alphabet name, strong deletions of every existing
/// edge, and `Nop`.
pub fn generable_path_ops(t: &NameTree, alphabet: &[String]) -> Vec<PathOp> {
    let mut ops = vec![PathOp::NopP];
    for pos in t.positions() {
        for name in alphabet {
            ops.push(PathOp::AddP {
                path: pos.clone(),
                name: name.clone(),
            });
        }
    }
    for pos in t.positions() {
        if let Some((parent, name)) = split_last(&pos) {
            ops.push(PathOp::Del2 {
                path: parent,
                name: name.to_string(),
            });
        }
    }
    ops
}

fn split_last(p: &Path) -> Option<(Path, &str)> {
    p.0.split_last()
        .map(|(last, rest)| (Path(rest.to_vec()), last.as_str()))
}

/// Exhaustive TP1/TP2 verification for `{Nop, Add, Del2}` within the bound.
pub fn sweep_del2(cfg: &LegacySweepConfig) -> LegacySweepReport {
    let trees = enumerate_name_trees(cfg.max_nodes, &cfg.alphabet);
    let mut rep = LegacySweepReport {
        trees: trees.len() as u64,
        ..LegacySweepReport::default()
    };
    for t in &trees {
        let ops = generable_path_ops(t, &cfg.alphabet);
        for op1 in &ops {
            for op2 in &ops {
                rep.tp1_checked += 1;
                let left = apply_path(&apply_path(t, op1), &it_del2(op2, op1).unwrap());
                let right = apply_path(&apply_path(t, op2), &it_del2(op1, op2).unwrap());
                if left != right {
                    rep.violations.push(LegacyViolation {
                        tree: t.render(),
                        ops: vec![op1.clone(), op2.clone()],
                        detail: format!("TP1: {} != {}", left.render(), right.render()),
                    });
                }
            }
        }
        for op in &ops {
            for op1 in &ops {
                for op2 in &ops {
                    rep.tp2_checked += 1;
                    let left =
                        it_del2(&it_del2(op, op1).unwrap(), &it_del2(op2, op1).unwrap()).unwrap();
                    let right =
                        it_del2(&it_del2(op, op2).unwrap(), &it_del2(op1, op2).unwrap()).unwrap();
                    if left != right {
                        rep.violations.push(LegacyViolation {
                            tree: t.render(),
                            ops: vec![op.clone(), op1.clone(), op2.clone()],
                            detail: format!("TP2: {left} != {right}"),
                        });
                    }
                }
            }
        }
    }
    rep
}

/// The fixed counterexample scenario for the impossibility of integrating
/// `{Nop, Add, Del1}`: the smallest tree on names n, m, r where a
/// concurrent addition lands strictly below a child-promoting deletion.
///
/// - `t = {n({r, m})}`
/// - `op1 = Add(n.r, m)`: add an edge two levels under the doomed edge
/// - `op2 = Del1(ε, n)`: delete `n`, promoting `r` and `m` to the top
///
/// Reconciling the two sides would require re-adding `m` at the *promoted*
/// position `r`, a path obtainable only by stripping the deleted prefix
/// off `op1`'s path, which the operation grammar cannot express.
pub fn impossibility_scenario() -> FalsifyScenario {
    let t = NameTree::empty().with_child(
        "n",
        NameTree::empty()
            .with_child("r", NameTree::empty())
            .with_child("m", NameTree::empty()),
    );
    FalsifyScenario {
        tree: t,
        op1: PathOp::AddP {
            path: Path::new(["n", "r"]),
            name: "m".to_string(),
        },
        op2: PathOp::Del1 {
            path: Path::root(),
            name: "n".to_string(),
        },
        fresh_name: "f".to_string(),
    }
}

#[derive(Clone, Debug)]
pub struct FalsifyScenario {
    pub tree: NameTree,
    pub op1: PathOp,
    pub op2: PathOp,
    pub fresh_name: String,
}

/// Proof-style classification of a candidate pair by the shape of the
/// transformed `op2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CandidateClass {
    Nop,
    Add,
    Del,
}

impl fmt::Display for CandidateClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateClass::Nop => write!(f, "Nop"),
            CandidateClass::Add => write!(f, "Add"),
            CandidateClass::Del => write!(f, "Del"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FalsifyReport {
    pub candidate_paths: Vec<Path>,
    pub candidate_names: Vec<String>,
    pub candidates_per_side: u64,
    pub pairs_examined: u64,
    pub pairs_failed: u64,
    /// TP1-satisfying pairs; must be empty, or the impossibility claim
    /// fails within this bounded space.
    pub satisfying: Vec<(PathOp, PathOp)>,
    pub failures_by_class: BTreeMap<String, u64>,
    /// One divergence witness per class of transformed-`op2` candidates.
    pub sample_witnesses: Vec<String>,
    pub exhausted: bool,
}

impl FalsifyReport {
    pub fn ok(&self) -> bool {
        self.satisfying.is_empty() && self.exhausted
    }

    pub fn summary_line(&self) -> String {
        format!(
            "falsify-del1: pairs={} failed={} satisfying={} exhausted={}",
            self.pairs_examined,
            self.pairs_failed,
            self.satisfying.len(),
            self.exhausted
        )
    }
}

/// Enumerates every candidate pair `(op1', op2')` over the bounded space and
/// checks that TP1's state equality fails for all of them.
///
/// Candidate arguments follow the operation-definition grammar: paths are
/// the positions of the scenario tree together with every
/// single-step extension `param_path.param_name` of the two operations'
/// parameters; names come from the scenario tree plus one fresh name. A
/// conditional definition evaluates to one branch on the fixed scenario
/// state, so plain operation values subsume if/then/else candidates here.
pub fn falsify_del1(scenario: &FalsifyScenario, max_depth: usize) -> FalsifyReport {
    let t = &scenario.tree;
    let t1 = apply_path(t, &scenario.op1);
    let t2 = apply_path(t, &scenario.op2);

    let (paths, names) = candidate_space(scenario, max_depth);
    let mut candidates = vec![PathOp::NopP];
    for p in &paths {
        for n in &names {
            candidates.push(PathOp::AddP {
                path: p.clone(),
                name: n.clone(),
            });
            candidates.push(PathOp::Del1 {
                path: p.clone(),
                name: n.clone(),
            });
        }
    }

    let mut report = FalsifyReport {
        candidate_paths: paths,
        candidate_names: names,
        candidates_per_side: candidates.len() as u64,
        pairs_examined: 0,
        pairs_failed: 0,
        satisfying: Vec::new(),
        failures_by_class: BTreeMap::new(),
        sample_witnesses: Vec::new(),
        exhausted: false,
    };

    let mut seen_class = std::collections::BTreeSet::new();
    for op2p in &candidates {
        let left = apply_path(&t1, op2p); // site that executed op1, then op2'
        let class = class_of(op2p);
        for op1p in &candidates {
            let right = apply_path(&t2, op1p); // site that executed op2, then op1'
            report.pairs_examined += 1;
            if left == right {
                report.satisfying.push((op1p.clone(), op2p.clone()));
            } else {
                report.pairs_failed += 1;
                *report
                    .failures_by_class
                    .entry(class.to_string())
                    .or_default() += 1;
                if seen_class.insert(class) {
                    report.sample_witnesses.push(format!(
                        "case op2'={class}: op2'={op2p} op1'={op1p}: {} != {}",
                        left.render(),
                        right.render()
                    ));
                }
            }
        }
    }
    report.exhausted = report.pairs_examined
        == report.candidates_per_side * report.candidates_per_side
        && report.pairs_examined == report.pairs_failed + report.satisfying.len() as u64;
    report
}

fn class_of(op: &PathOp) -> CandidateClass {
    match op {
        PathOp::NopP => CandidateClass::Nop,
        PathOp::AddP { .. } => CandidateClass::Add,
        PathOp::Del1 { .. } | PathOp::Del2 { .. } => CandidateClass::Del,
    }
}

fn candidate_space(scenario: &FalsifyScenario, max_depth: usize) -> (Vec<Path>, Vec<String>) {
    let mut names: Vec<String> = scenario
        .tree
        .positions()
        .iter()
        .filter_map(|p| p.0.last().cloned())
        .collect();
    for op in [&scenario.op1, &scenario.op2] {
        if let PathOp::AddP { name, .. } | PathOp::Del1 { name, .. } | PathOp::Del2 { name, .. } =
            op
        {
            names.push(name.clone());
        }
    }
    names.push(scenario.fresh_name.clone());
    names.sort();
    names.dedup();

    let mut paths = scenario.tree.positions();
    for op in [&scenario.op1, &scenario.op2] {
        if let PathOp::AddP { path, name }
        | PathOp::Del1 { path, name }
        | PathOp::Del2 { path, name } = op
        {
            paths.push(path.clone());
            paths.push(path.join(name));
            // Single-step concatenations of the op parameters, as the
            // definition grammar allows.
            for other in [&scenario.op1, &scenario.op2] {
                if let PathOp::AddP { name: n2, .. }
                | PathOp::Del1 { name: n2, .. }
                | PathOp::Del2 { name: n2, .. } = other
                {
                    paths.push(path.join(n2));
                }
            }
        }
    }
    paths.retain(|p| p.depth() <= max_depth);
    paths.sort();
    paths.dedup();
    (paths, names)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The name-tree phone book used by the path examples.
    fn phone_book() -> NameTree {
        let home = NameTree::empty().with_child("0491543545", NameTree::empty());
        let cellular = NameTree::empty().with_child("0691543545", NameTree::empty());
        let phone = NameTree::empty()
            .with_child("Home", home)
            .with_child("Cellular", cellular);
        let pat = NameTree::empty().with_child("Phone", phone);
        let address = NameTree::empty().with_child("45 Emile Caplant Street", NameTree::empty());
        let henri = NameTree::empty().with_child("Address", address);
        NameTree::empty()
            .with_child("Pat", pat)
            .with_child("Henri", henri)
    }

    #[test]
    fn add_creates_missing_branch() {
        let t = phone_book();
        let t2 = apply_path(
            &t,
            &PathOp::AddP {
                path: Path::new(["Henri", "Phone"]),
                name: "0491835469".to_string(),
            },
        );
        let added = t2
            .child("Henri")
            .and_then(|h| h.child("Phone"))
            .and_then(|p| p.child("0491835469"));
        assert!(added.is_some(), "a new Phone branch appears under Henri");

        // Adding Phone under Henri is now idempotent: it already exists.
        let t3 = apply_path(
            &t2,
            &PathOp::AddP {
                path: Path::new(["Henri"]),
                name: "Phone".to_string(),
            },
        );
        assert_eq!(t2, t3);
    }

    #[test]
    fn del2_on_empty_is_identity() {
        let out = apply_path(
            &NameTree::empty(),
            &PathOp::Del2 {
                path: Path::root(),
                name: "x".to_string(),
            },
        );
        assert!(out.is_empty());
    }

    #[test]
    fn del1_promotes_del2_removes() {
        // {a({b({c})})}: deleting a with Del1 promotes b; Del2 wipes it all.
        let t = NameTree::empty().with_child(
            "a",
            NameTree::empty().with_child("b", NameTree::empty().with_child("c", NameTree::empty())),
        );
        let d1 = apply_path(
            &t,
            &PathOp::Del1 {
                path: Path::root(),
                name: "a".to_string(),
            },
        );
        assert_eq!(
            d1,
            NameTree::empty().with_child("b", NameTree::empty().with_child("c", NameTree::empty()))
        );
        let d2 = apply_path(
            &t,
            &PathOp::Del2 {
                path: Path::root(),
                name: "a".to_string(),
            },
        );
        assert!(d2.is_empty());
    }

    #[test]
    fn del1_merges_clashing_promotion() {
        // {a({b({x})}), b({y})}: deleting a promotes its b, which dissolves
        // into the existing sibling b.
        let t = NameTree::empty()
            .with_child(
                "a",
                NameTree::empty()
                    .with_child("b", NameTree::empty().with_child("x", NameTree::empty())),
            )
            .with_child("b", NameTree::empty().with_child("y", NameTree::empty()));
        let out = apply_path(
            &t,
            &PathOp::Del1 {
                path: Path::root(),
                name: "a".to_string(),
            },
        );
        let b = out.child("b").unwrap();
        assert!(b.child("x").is_some() && b.child("y").is_some());
    }

    #[test]
    fn it_del2_table() {
        let add = PathOp::AddP {
            path: Path::new(["p"]),
            name: "n".to_string(),
        };
        let del_same = PathOp::Del2 {
            path: Path::new(["p"]),
            name: "n".to_string(),
        };
        assert_eq!(it_del2(&add, &del_same).unwrap(), PathOp::NopP);

        // The added edge lies under the deleted subtree.
        let deep_add = PathOp::AddP {
            path: Path::new(["p", "n", "q"]),
            name: "m".to_string(),
        };
        let del_above = PathOp::Del2 {
            path: Path::new(["p"]),
            name: "n".to_string(),
        };
        assert_eq!(it_del2(&deep_add, &del_above).unwrap(), PathOp::NopP);

        assert_eq!(it_del2(&add, &PathOp::NopP).unwrap(), add);

        let d1 = PathOp::Del1 {
            path: Path::root(),
            name: "x".to_string(),
        };
        assert!(it_del2(&d1, &PathOp::NopP).is_err());
        assert!(it_del2(&PathOp::NopP, &d1).is_err());
    }

    #[test]
    fn del2_sweep_tiny_is_clean() {
        let cfg = LegacySweepConfig {
            max_nodes: 3,
            alphabet: vec!["a".into(), "b".into()],
        };
        let rep = sweep_del2(&cfg);
        assert!(rep.ok(), "{}", rep.violations[0]);
        assert!(rep.tp1_checked > 0 && rep.tp2_checked > 0);
    }

    #[test]
    fn add_idempotence_everywhere() {
        for t in enumerate_name_trees(3, &["a".into(), "b".into()]) {
            for op in generable_path_ops(&t, &["a".into(), "b".into()]) {
                if matches!(op, PathOp::AddP { .. }) {
                    let once = apply_path(&t, &op);
                    assert_eq!(apply_path(&once, &op), once);
                }
            }
        }
    }

    #[test]
    fn sibling_uniqueness_structural() {
        // NameTree is keyed by name, so every operation output preserves
        // sibling uniqueness by construction; spot-check node counts.
        let t = phone_book();
        assert_eq!(t.node_count(), 9);
    }

    #[test]
    fn falsifier_finds_no_satisfying_candidate() {
        let report = falsify_del1(&impossibility_scenario(), 2);
        assert!(report.exhausted);
        assert!(
            report.satisfying.is_empty(),
            "unexpected TP1-satisfying candidates: {:?}",
            report.satisfying
        );
        assert_eq!(report.pairs_failed, report.pairs_examined);
        // All three proof case labels show up.
        for class in ["Nop", "Add", "Del"] {
            assert!(report.failures_by_class.contains_key(class));
        }
    }

    #[test]
    fn falsifier_nop_nop_fails_because_states_differ() {
        let sc = impossibility_scenario();
        let t1 = apply_path(&sc.tree, &sc.op1);
        let t2 = apply_path(&sc.tree, &sc.op2);
        assert_ne!(t1, t2);
    }
}
