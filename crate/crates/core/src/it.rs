//! The integration transformation for tree operations, its extension to sets
//! of concurrent operations, and executable TP1/TP2 checkers.
//!
//! `it(op1, op2)` rewrites `op1`, issued concurrently with `op2`, into the
//! operation a replica that has already executed `op2` must run instead.
//! TP1 (state equality of the two transformed execution orders) and TP2
//! (operation identity across double transformations) together guarantee
//! convergence; the sweeps in this module re-verify both properties by
//! exhausting every operation pair/triple generable from every small tree.

use std::fmt;

use crate::tree::{Identifier, Label, TreeOp, WellFormedTree};

/// The transformation table. Total on `TreeOp x TreeOp`.
///
/// Same-identifier `Ren`/`Mv` duels are decided by site priority: the op
/// from the higher site loses and becomes `Nop`. Two concurrent operations
/// can never come from the same site, so the comparison is never a tie;
/// asserted in debug builds.
pub fn it(op1: &TreeOp, op2: &TreeOp) -> TreeOp {
    use TreeOp::*;
    match (op1, op2) {
        // Fall-through clauses first: they are unconditional.
        (_, Nop) => op1.clone(),
        (Nop, _) => Nop,

        (Add { .. }, Add { .. }) => op1.clone(),
        (Add { parent, new }, Del { target }) => {
            if new == target {
                Nop
            } else if parent == target {
                Add {
                    parent: Identifier::Mem,
                    new: *new,
                }
            } else {
                op1.clone()
            }
        }
        (Del { .. }, Add { .. }) => op1.clone(),
        (Del { .. }, Del { .. }) => op1.clone(),

        (
            Ren {
                target: id1,
                site: s1,
                ..
            },
            Ren {
                target: id2,
                site: s2,
                ..
            },
        ) => {
            if id1 == id2 {
                debug_assert_ne!(s1, s2, "concurrent ops cannot share a site");
                if s2 < s1 {
                    Nop
                } else {
                    op1.clone()
                }
            } else {
                op1.clone()
            }
        }
        (Ren { .. }, _) => op1.clone(),
        (_, Ren { .. }) => op1.clone(),

        (
            Mv {
                target: id1,
                site: s1,
                ..
            },
            Mv {
                target: id2,
                site: s2,
                ..
            },
        ) => {
            if id1 == id2 {
                debug_assert_ne!(s1, s2, "concurrent ops cannot share a site");
                if s2 < s1 {
                    Nop
                } else {
                    op1.clone()
                }
            } else {
                op1.clone()
            }
        }
        (
            Mv {
                target: id1,
                parent,
                site,
            },
            Del { target: id2 },
        ) => {
            if parent == id2 {
                Mv {
                    target: *id1,
                    parent: Identifier::Mem,
                    site: *site,
                }
            } else if id1 == id2 {
                Nop
            } else {
                op1.clone()
            }
        }
        (Mv { .. }, _) => op1.clone(),
        (_, Mv { .. }) => op1.clone(),
    }
}

/// Integrates `op` against a set of pairwise-concurrent operations:
/// `it_star(op, [c1..cn]) = it(it_star(op, [c1..c_{n-1}]),
/// it_star(cn, [c1..c_{n-1}]))`, with `it_star(op, []) = op`.
///
/// Given TP2, the result does not depend on the order of `ctx`.
pub fn it_star(op: &TreeOp, ctx: &[TreeOp]) -> TreeOp {
    match ctx.split_last() {
        None => op.clone(),
        Some((last, rest)) => it(&it_star(op, rest), &it_star(last, rest)),
    }
}

/// Outcome of a single TP1 check, with divergence witnesses on failure.
#[derive(Clone, Debug)]
pub struct Tp1Outcome {
    pub holds: bool,
    pub left: String,
    pub right: String,
}

/// TP1: `[op1; it(op2,op1)](t) = [op2; it(op1,op2)](t)`, compared on
/// canonical serializations.
pub fn check_tp1(t: &WellFormedTree, op1: &TreeOp, op2: &TreeOp) -> Tp1Outcome {
    let left = t.apply(op1).apply(&it(op2, op1)).canonical_serialize();
    let right = t.apply(op2).apply(&it(op1, op2)).canonical_serialize();
    Tp1Outcome {
        holds: left == right,
        left,
        right,
    }
}

/// Outcome of a single TP2 check, with the two double transformations.
#[derive(Clone, Debug)]
pub struct Tp2Outcome {
    pub holds: bool,
    pub left: TreeOp,
    pub right: TreeOp,
}

/// TP2: `it(it(op,op1), it(op2,op1)) = it(it(op,op2), it(op1,op2))` as
/// operation values (structural equality).
pub fn check_tp2(op: &TreeOp, op1: &TreeOp, op2: &TreeOp) -> Tp2Outcome {
    let left = it(&it(op, op1), &it(op2, op1));
    let right = it(&it(op, op2), &it(op1, op2));
    Tp2Outcome {
        holds: left == right,
        left,
        right,
    }
}

/// A TP1 violation found by the sweep.
#[derive(Clone, Debug)]
pub struct Tp1Violation {
    pub tree: String,
    pub op1: TreeOp,
    pub op2: TreeOp,
    pub left: String,
    pub right: String,
}

impl fmt::Display for Tp1Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP1 violated on {} by {} / {}: {} != {}",
            self.tree,
            self.op1.pretty(),
            self.op2.pretty(),
            self.left,
            self.right
        )
    }
}

/// A TP2 violation found by the sweep.
#[derive(Clone, Debug)]
pub struct Tp2Violation {
    pub op: TreeOp,
    pub op1: TreeOp,
    pub op2: TreeOp,
    pub left: TreeOp,
    pub right: TreeOp,
}

impl fmt::Display for Tp2Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "TP2 violated by {} / {} / {}: {} != {}",
            self.op.pretty(),
            self.op1.pretty(),
            self.op2.pretty(),
            self.left.pretty(),
            self.right.pretty()
        )
    }
}

/// Bounds for the exhaustive sweeps. `tree_labels` drive tree enumeration,
/// `ren_labels` the targets of enumerated `Ren` operations.
#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub max_ids: usize,
    pub tree_labels: Vec<Label>,
    pub ren_labels: Vec<Label>,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_ids: 4,
            tree_labels: vec![Label::text("a"), Label::text("b")],
            ren_labels: vec![Label::NoValue, Label::text("a"), Label::text("b")],
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Aggregate result of a sweep.
#[derive(Clone, Debug)]
pub struct SweepReport<V> {
    pub checked: u64,
    pub violations: Vec<V>,
}

impl<V> Default for SweepReport<V> {
    fn default() -> Self {
        SweepReport {
            checked: 0,
            violations: Vec::new(),
        }
    }
}

impl<V> SweepReport<V> {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Identifier pool used by the enumerators: a mix of sites and op numbers.
pub fn id_pool() -> [Identifier; 4] {
    [
        Identifier::gen(1, 1),
        Identifier::gen(1, 2),
        Identifier::gen(2, 1),
        Identifier::gen(3, 1),
    ]
}

/// Enumerates every well-formed tree over the first `k <= max_ids`
/// identifiers of the pool, for every acyclic parent assignment (parents
/// range over `data`, `mem` and the other identifiers) and every labeling.
pub fn enumerate_trees(max_ids: usize, labels: &[Label]) -> Vec<WellFormedTree> {
    let pool = id_pool();
    assert!(max_ids <= pool.len());
    let mut out = Vec::new();
    for k in 0..=max_ids {
        let ids = &pool[..k];
        let mut parents = vec![0usize; k];
        enumerate_parent_vectors(ids, &mut parents, 0, &mut |parents| {
            let mut label_choice = vec![0usize; k];
            enumerate_labelings(labels.len(), &mut label_choice, 0, &mut |choice| {
                out.push(build_tree(ids, parents, choice, labels));
            });
        });
    }
    out
}

/// Parent codes: 0 = data, 1 = mem, 2 + j = ids[j].
fn enumerate_parent_vectors(
    ids: &[Identifier],
    parents: &mut [usize],
    i: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if i == ids.len() {
        if parents_acyclic(parents) {
            f(parents);
        }
        return;
    }
    for code in 0..ids.len() + 2 {
        if code >= 2 && code - 2 == i {
            continue; // no self-parenting
        }
        parents[i] = code;
        enumerate_parent_vectors(ids, parents, i + 1, f);
    }
}

fn parents_acyclic(parents: &[usize]) -> bool {
    'outer: for start in 0..parents.len() {
        let mut cur = start;
        for _ in 0..=parents.len() {
            match parents[cur] {
                0 | 1 => continue 'outer,
                code => cur = code - 2,
            }
        }
        return false;
    }
    true
}

fn enumerate_labelings(
    n_labels: usize,
    choice: &mut [usize],
    i: usize,
    f: &mut impl FnMut(&[usize]),
) {
    if i == choice.len() {
        f(choice);
        return;
    }
    for l in 0..n_labels.max(1) {
        choice[i] = l;
        enumerate_labelings(n_labels, choice, i + 1, f);
    }
}

fn build_tree(
    ids: &[Identifier],
    parents: &[usize],
    label_choice: &[usize],
    labels: &[Label],
) -> WellFormedTree {
    fn subtree(
        node: usize,
        ids: &[Identifier],
        parents: &[usize],
        label_choice: &[usize],
        labels: &[Label],
    ) -> crate::tree::IdTree {
        let mut t = crate::tree::IdTree::empty();
        for (j, p) in parents.iter().enumerate() {
            if *p == node + 2 {
                let child = subtree(j, ids, parents, label_choice, labels);
                let label = labels
                    .get(label_choice[j])
                    .cloned()
                    .unwrap_or(Label::NoValue);
                t.insert_edge(label, ids[j], child);
            }
        }
        t
    }

    let mut data = crate::tree::IdTree::empty();
    let mut mem = crate::tree::IdTree::empty();
    for (j, p) in parents.iter().enumerate() {
        let part = match p {
            0 => &mut data,
            1 => &mut mem,
            _ => continue,
        };
        let child = subtree(j, ids, parents, label_choice, labels);
        let label = labels
            .get(label_choice[j])
            .cloned()
            .unwrap_or(Label::NoValue);
        part.insert_edge(label, ids[j], child);
    }
    WellFormedTree::from_parts(data, mem)
}

/// Every operation a given site can issue from state `t`, mirroring the
/// generation guards: `Add` needs an existing parent and a fresh identifier,
/// `Del`/`Mv`/`Ren` an existing non-reserved target, and `Mv` a destination
/// distinct from its target.
pub fn generable_ops(
    t: &WellFormedTree,
    site: u64,
    fresh_opnb: u64,
    ren_labels: &[Label],
) -> Vec<TreeOp> {
    let ids = t.gen_ids();
    let mut parents = vec![Identifier::Data, Identifier::Mem];
    parents.extend(ids.iter().copied());

    let mut ops = vec![TreeOp::Nop];
    for p in &parents {
        ops.push(TreeOp::Add {
            parent: *p,
            new: Identifier::gen(site, fresh_opnb),
        });
    }
    for id in &ids {
        ops.push(TreeOp::Del { target: *id });
        for p in &parents {
            if p != id {
                ops.push(TreeOp::Mv {
                    target: *id,
                    parent: *p,
                    site,
                });
            }
        }
        for l in ren_labels {
            ops.push(TreeOp::Ren {
                target: *id,
                label: l.clone(),
                site,
            });
        }
    }
    ops
}

/// Exhaustive TP1 sweep: all trees within the bounds, all generable ordered
/// pairs (op1 issued by site 1, op2 by site 2). TP1 is symmetric under
/// swapping the pair, so the fixed site assignment covers both duels.
pub fn sweep_tp1(cfg: &SweepConfig) -> SweepReport<Tp1Violation> {
    let trees = enumerate_trees(cfg.max_ids, &cfg.tree_labels);
    let chunks = partition(&trees, cfg.workers);
    let reports: Vec<SweepReport<Tp1Violation>> = std::thread::scope(|s| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| {
                let ren_labels = cfg.ren_labels.clone();
                s.spawn(move || {
                    let mut rep = SweepReport::default();
                    for t in chunk {
                        let ops1 = generable_ops(t, 1, 99, &ren_labels);
                        let ops2 = generable_ops(t, 2, 99, &ren_labels);
                        for op1 in &ops1 {
                            for op2 in &ops2 {
                                rep.checked += 1;
                                let out = check_tp1(t, op1, op2);
                                if !out.holds {
                                    rep.violations.push(Tp1Violation {
                                        tree: t.canonical_serialize(),
                                        op1: op1.clone(),
                                        op2: op2.clone(),
                                        left: out.left,
                                        right: out.right,
                                    });
                                }
                            }
                        }
                    }
                    rep
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    merge(reports)
}

/// Exhaustive TP2 sweep. The space of generable operations depends only on
/// the set of identifiers present in the tree (generation guards are
/// existence checks), so each identifier count is swept once rather than
/// once per tree shape. Triples take all six assignments of sites 1..3.
pub fn sweep_tp2(cfg: &SweepConfig) -> SweepReport<Tp2Violation> {
    let pool = id_pool();
    let mut reports = Vec::new();
    for k in 0..=cfg.max_ids.min(pool.len()) {
        // A flat tree exposing exactly k identifiers.
        let mut data = crate::tree::IdTree::empty();
        for id in &pool[..k] {
            data.insert_edge(Label::NoValue, *id, crate::tree::IdTree::empty());
        }
        let t = WellFormedTree::from_parts(data, crate::tree::IdTree::empty());

        let site_ops: Vec<Vec<TreeOp>> = (1..=3)
            .map(|site| generable_ops(&t, site, 99, &cfg.ren_labels))
            .collect();

        let assignments = [
            (0, 1, 2),
            (0, 2, 1),
            (1, 0, 2),
            (1, 2, 0),
            (2, 0, 1),
            (2, 1, 0),
        ];
        let chunks: Vec<_> = assignments
            .chunks(assignments.len().div_ceil(cfg.workers.max(1)))
            .collect();
        let level: Vec<SweepReport<Tp2Violation>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunks
                .into_iter()
                .map(|assigned| {
                    let site_ops = &site_ops;
                    s.spawn(move || {
                        let mut rep = SweepReport::default();
                        for (a, b, c) in assigned {
                            for op in &site_ops[*a] {
                                for op1 in &site_ops[*b] {
                                    for op2 in &site_ops[*c] {
                                        rep.checked += 1;
                                        let out = check_tp2(op, op1, op2);
                                        if !out.holds {
                                            rep.violations.push(Tp2Violation {
                                                op: op.clone(),
                                                op1: op1.clone(),
                                                op2: op2.clone(),
                                                left: out.left,
                                                right: out.right,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                        rep
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        reports.extend(level);
    }
    merge(reports)
}

fn partition<T>(items: &[T], workers: usize) -> Vec<&[T]> {
    let n = workers.max(1);
    let chunk = items.len().div_ceil(n).max(1);
    items.chunks(chunk).collect()
}

fn merge<V>(reports: Vec<SweepReport<V>>) -> SweepReport<V> {
    let mut out = SweepReport::default();
    for mut r in reports {
        out.checked += r.checked;
        out.violations.append(&mut r.violations);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::IdTree;

    fn gid(site: u64, opnb: u64) -> Identifier {
        Identifier::gen(site, opnb)
    }

    fn add(parent: Identifier, new: Identifier) -> TreeOp {
        TreeOp::Add { parent, new }
    }

    fn del(target: Identifier) -> TreeOp {
        TreeOp::Del { target }
    }

    fn ren(target: Identifier, label: &str, site: u64) -> TreeOp {
        TreeOp::Ren {
            target,
            label: Label::text(label),
            site,
        }
    }

    #[test]
    fn add_against_del_of_same_new_id_cancels() {
        let op = it(&add(gid(1, 1), gid(2, 5)), &del(gid(2, 5)));
        assert_eq!(op, TreeOp::Nop);
    }

    #[test]
    fn add_against_del_of_parent_rescues_into_memory() {
        let op = it(&add(gid(1, 1), gid(2, 5)), &del(gid(1, 1)));
        assert_eq!(op, add(Identifier::Mem, gid(2, 5)));
    }

    #[test]
    fn nop_clauses() {
        let t = WellFormedTree::new();
        let ops = generable_ops(&t, 1, 1, &[Label::text("a")]);
        for op in &ops {
            assert_eq!(&it(op, &TreeOp::Nop), op, "it(op, nop) must be op");
            assert_eq!(it(&TreeOp::Nop, op), TreeOp::Nop, "it(nop, op) must be nop");
        }
    }

    #[test]
    fn ren_duel_resolved_by_site_priority() {
        let x = gid(1, 1);
        // Higher site transformed against a lower-site rename: loses.
        assert_eq!(it(&ren(x, "l", 2), &ren(x, "m", 1)), TreeOp::Nop);
        // Lower site keeps its rename.
        assert_eq!(it(&ren(x, "m", 1), &ren(x, "l", 2)), ren(x, "m", 1));
    }

    #[test]
    fn mv_duel_resolved_by_site_priority() {
        let x = gid(1, 1);
        let mv = |parent, site| TreeOp::Mv {
            target: x,
            parent,
            site,
        };
        assert_eq!(
            it(&mv(Identifier::Data, 2), &mv(Identifier::Mem, 1)),
            TreeOp::Nop
        );
        assert_eq!(
            it(&mv(Identifier::Data, 1), &mv(Identifier::Mem, 2)),
            mv(Identifier::Data, 1)
        );
    }

    #[test]
    fn mv_against_del_clauses() {
        let (a, b) = (gid(1, 1), gid(2, 1));
        let mv = TreeOp::Mv {
            target: a,
            parent: b,
            site: 1,
        };
        assert_eq!(
            it(&mv, &del(b)),
            TreeOp::Mv {
                target: a,
                parent: Identifier::Mem,
                site: 1
            }
        );
        assert_eq!(it(&mv, &del(a)), TreeOp::Nop);
        assert_eq!(it(&mv, &del(gid(9, 9))), mv);
    }

    #[test]
    fn it_star_base_cases() {
        let op = add(Identifier::Data, gid(4, 1));
        assert_eq!(it_star(&op, &[]), op);
        let c = del(gid(1, 1));
        assert_eq!(it_star(&op, std::slice::from_ref(&c)), it(&op, &c));
    }

    #[test]
    fn it_star_permutation_invariance_small() {
        // All six orders of a three-op concurrent context agree.
        let op = ren(gid(1, 1), "z", 4);
        let ctx = [
            del(gid(2, 1)),
            ren(gid(1, 1), "y", 2),
            TreeOp::Mv {
                target: gid(1, 1),
                parent: gid(2, 1),
                site: 3,
            },
        ];
        let perms = [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ];
        let baseline = it_star(&op, &ctx);
        for p in perms {
            let view: Vec<TreeOp> = p.iter().map(|&i| ctx[i].clone()).collect();
            assert_eq!(it_star(&op, &view), baseline);
        }
    }

    #[test]
    fn tp1_holds_for_nop_pair_and_ren_del_conflict() {
        let t = WellFormedTree::new();
        assert!(check_tp1(&t, &TreeOp::Nop, &TreeOp::Nop).holds);

        // A rename racing the deletion of its target: the rename side ends
        // up renaming an absent identifier, which is the identity, so both
        // orders agree on the state where the label change never shows.
        let mut data = IdTree::empty();
        data.insert_edge(Label::NoValue, gid(2, 1), IdTree::empty());
        let t = WellFormedTree::from_parts(data, IdTree::empty());
        let out = check_tp1(&t, &ren(gid(2, 1), "x", 1), &del(gid(2, 1)));
        assert!(out.holds, "{} != {}", out.left, out.right);
        assert!(!out.left.contains('x'), "the rename must never surface");
    }

    #[test]
    fn tp2_add_triple_example() {
        // All identifiers distinct: both double transformations come out as
        // the same Add.
        let op = add(gid(1, 1), gid(1, 9));
        let op1 = add(gid(2, 1), gid(2, 9));
        let op2 = del(gid(3, 1));
        assert!(check_tp2(&op, &op1, &op2).holds);
    }

    #[test]
    fn transformed_ops_stay_legal() {
        // Closure: targets of transformed ops are never reserved; data/mem
        // appear only as Add/Mv destinations.
        let mut data = IdTree::empty();
        data.insert_edge(Label::text("a"), gid(1, 1), IdTree::empty());
        data.insert_edge(Label::text("b"), gid(2, 1), IdTree::empty());
        let t = WellFormedTree::from_parts(data, IdTree::empty());
        let ops1 = generable_ops(&t, 1, 99, &[Label::text("a")]);
        let ops2 = generable_ops(&t, 2, 99, &[Label::text("a")]);
        for op1 in &ops1 {
            for op2 in &ops2 {
                let out = it(op1, op2);
                match out {
                    TreeOp::Add { new, .. } => assert!(new.is_gen()),
                    TreeOp::Del { target } => assert!(target.is_gen()),
                    TreeOp::Mv { target, .. } => assert!(target.is_gen()),
                    TreeOp::Ren { target, .. } => assert!(target.is_gen()),
                    TreeOp::Nop => {}
                }
            }
        }
    }

    #[test]
    fn small_sweeps_are_clean() {
        let cfg = SweepConfig {
            max_ids: 2,
            ..SweepConfig::default()
        };
        let tp1 = sweep_tp1(&cfg);
        assert!(tp1.ok(), "{}", tp1.violations[0]);
        assert!(tp1.checked > 0);
        let tp2 = sweep_tp2(&cfg);
        assert!(tp2.ok(), "{}", tp2.violations[0]);
    }

    #[test]
    fn serialization_injective_over_enumerated_trees() {
        // Distinct documents must serialize to distinct bytes; check every
        // pair of enumerated two-identifier trees.
        let trees = enumerate_trees(2, &[Label::text("a"), Label::text("b")]);
        let mut seen = std::collections::BTreeMap::new();
        for t in &trees {
            if let Some(prev) = seen.insert(t.canonical_serialize(), t.clone()) {
                assert_eq!(&prev, t, "two distinct trees share a serialization");
            }
        }
        assert_eq!(seen.len(), trees.len());
    }
}
