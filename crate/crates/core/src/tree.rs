//! Identifier-labeled unordered unranked trees and their editing operations.
//!
//! Every edge carries a label and a globally unique identifier. A document is
//! a *well-formed tree*: a root with exactly two top-level edges, `data`
//! (the visible document) and `mem` (a memory holding material displaced by
//! deletions and moves). All editing operations are total functions on
//! well-formed trees: an absent identifier makes an operation degrade to the
//! identity (or to a deterministic drop for `add_tree`), never to an error.
//! Totality is what lets transformed operations be applied unconditionally.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Edge identity: one of the two reserved roots, or a `(site, opnb)` pair
/// minted by the site that created the edge.
///
/// The derived order is `Data < Mem < Gen`, with `Gen` values ordered
/// lexicographically by `(site, opnb)`. This total order is what the
/// canonical serialization sorts by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Identifier {
    Data,
    Mem,
    Gen { site: u64, opnb: u64 },
}

impl Identifier {
    pub fn gen(site: u64, opnb: u64) -> Self {
        Identifier::Gen { site, opnb }
    }

    /// True for identifiers that operations may target (never the roots).
    pub fn is_gen(&self) -> bool {
        matches!(self, Identifier::Gen { .. })
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identifier::Data => write!(f, "data"),
            Identifier::Mem => write!(f, "mem"),
            Identifier::Gen { site, opnb } => write!(f, "{site};{opnb}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid identifier `{0}`: expected `data`, `mem` or `site;opnb`")]
pub struct ParseIdentifierError(String);

impl FromStr for Identifier {
    type Err = ParseIdentifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "data" => Ok(Identifier::Data),
            "mem" => Ok(Identifier::Mem),
            _ => {
                let (site, opnb) = s
                    .split_once(';')
                    .ok_or_else(|| ParseIdentifierError(s.to_string()))?;
                let site = site
                    .parse()
                    .map_err(|_| ParseIdentifierError(s.to_string()))?;
                let opnb = opnb
                    .parse()
                    .map_err(|_| ParseIdentifierError(s.to_string()))?;
                Ok(Identifier::Gen { site, opnb })
            }
        }
    }
}

impl Serialize for Identifier {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Identifier {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Edge label. Freshly added edges carry `NoValue` until renamed.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    #[default]
    NoValue,
    Text(String),
}

impl Label {
    pub fn text(s: impl Into<String>) -> Self {
        Label::Text(s.into())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::NoValue => write!(f, "_"),
            Label::Text(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
        }
    }
}

/// Unordered unranked tree whose edges carry `(label, identifier)` pairs.
///
/// Edges are keyed by identifier, so sibling enumeration order can never leak
/// into equality, and the per-level uniqueness of identifiers is structural.
/// Whole-tree uniqueness is an invariant of well-formed trees, checked by
/// [`WellFormedTree::check`].
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdTree {
    edges: BTreeMap<Identifier, Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub label: Label,
    pub child: IdTree,
}

impl IdTree {
    pub fn empty() -> Self {
        IdTree::default()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Singleton tree `{(label, id)(child)}`.
    pub fn singleton(label: Label, id: Identifier, child: IdTree) -> Self {
        let mut edges = BTreeMap::new();
        edges.insert(id, Edge { label, child });
        IdTree { edges }
    }

    /// Inserts a top-level edge. Panics if the identifier is already a
    /// sibling here; builders are expected to keep identifiers unique.
    pub fn insert_edge(&mut self, label: Label, id: Identifier, child: IdTree) {
        let prev = self.edges.insert(id, Edge { label, child });
        assert!(prev.is_none(), "duplicate identifier {id} among siblings");
    }

    pub fn top_edges(&self) -> impl Iterator<Item = (&Identifier, &Edge)> {
        self.edges.iter()
    }

    /// Multiset union of two trees. Only ever called on trees with disjoint
    /// identifier sets, which keeps the result a set.
    fn union(mut self, other: IdTree) -> IdTree {
        for (id, edge) in other.edges {
            self.edges.insert(id, edge);
        }
        self
    }

    pub fn contains(&self, id: Identifier) -> bool {
        self.edges.contains_key(&id) || self.edges.values().any(|e| e.child.contains(id))
    }

    /// First projection: the child tree of the unique edge carrying `id`,
    /// or the empty tree when `id` is absent.
    pub fn proj_children(&self, id: Identifier) -> IdTree {
        match self.edges.get(&id) {
            Some(edge) => edge.child.clone(),
            None => self
                .edges
                .values()
                .map(|e| e.child.proj_children(id))
                .fold(IdTree::empty(), IdTree::union),
        }
    }

    /// Second projection: the singleton tree `{(l, id)(child)}` for the
    /// unique edge carrying `id`, or the empty tree when `id` is absent.
    pub fn proj_edge(&self, id: Identifier) -> IdTree {
        match self.edges.get(&id) {
            Some(edge) => IdTree::singleton(edge.label.clone(), id, edge.child.clone()),
            None => self
                .edges
                .values()
                .map(|e| e.child.proj_edge(id))
                .fold(IdTree::empty(), IdTree::union),
        }
    }

    /// Removes the edge carrying `id` together with its whole subtree;
    /// identity when `id` is absent.
    pub fn erase(&self, id: Identifier) -> IdTree {
        let mut edges = BTreeMap::new();
        for (eid, edge) in &self.edges {
            if *eid == id {
                continue;
            }
            edges.insert(
                *eid,
                Edge {
                    label: edge.label.clone(),
                    child: edge.child.erase(id),
                },
            );
        }
        IdTree { edges }
    }

    /// Unions `sub` into the child of the edge carrying `id`. When `id` is
    /// absent the tree is returned unchanged and `sub` is discarded; this
    /// deterministic drop is what makes transformed operations total.
    pub fn add_tree(&self, id: Identifier, sub: &IdTree) -> IdTree {
        let mut edges = BTreeMap::new();
        for (eid, edge) in &self.edges {
            let child = if *eid == id {
                edge.child.clone().union(sub.clone())
            } else {
                edge.child.add_tree(id, sub)
            };
            edges.insert(
                *eid,
                Edge {
                    label: edge.label.clone(),
                    child,
                },
            );
        }
        IdTree { edges }
    }

    /// Deterministic textual encoding. Sibling edges appear in identifier
    /// order (`data < mem < site;opnb`), so any two equal trees produce
    /// identical bytes and unequal trees differ.
    ///
    /// Grammar: the empty tree is `{}`; otherwise a sequence of edges
    /// `(label,id)[children]` where `label` is `_` for `NoValue` or a
    /// quoted, backslash-escaped string, and `children` is the (possibly
    /// empty) sequence of child edges.
    pub fn canonical_serialize(&self) -> String {
        if self.is_empty() {
            return "{}".to_string();
        }
        let mut out = String::new();
        self.write_edges(&mut out);
        out
    }

    fn write_edges(&self, out: &mut String) {
        use fmt::Write;
        for (id, edge) in &self.edges {
            write!(out, "({},{})[", edge.label, id).unwrap();
            edge.child.write_edges(out);
            out.push(']');
        }
    }
}

/// A document: the `data` part holds the visible tree, the `mem` part the
/// material displaced by deletions and moves.
///
/// The state is a node store (each living identifier maps to its label and
/// parent pointer) and the trees are views: whatever is reachable from
/// `data` or `mem` by child edges. Operations are pointwise updates of the
/// store, which is what makes concurrent operations on distinct identifiers
/// commute outright. Concurrent moves can close a parent cycle; the nodes of
/// such a cycle (and nodes added below a deleted parent) become unreachable
/// from both roots, dropped from the document, but their records survive,
/// identically on every replica, and a later move can pull them back in.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WellFormedTree {
    nodes: BTreeMap<Identifier, Node>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Node {
    label: Label,
    parent: Identifier,
}

/// Violations reported by [`WellFormedTree::check`].
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeDefect {
    #[error("reserved identifier {0} used as a node")]
    ReservedNode(Identifier),
    #[error("identifier {0} occurs more than once")]
    DuplicateIdentifier(Identifier),
}

impl WellFormedTree {
    /// The initial document: empty `data` and `mem` parts.
    pub fn new() -> Self {
        WellFormedTree::default()
    }

    /// Builds a document from explicit `data` and `mem` parts. Panics if
    /// the parts repeat an identifier.
    pub fn from_parts(data: IdTree, mem: IdTree) -> Self {
        let mut tree = WellFormedTree::new();
        tree.absorb(&data, Identifier::Data);
        tree.absorb(&mem, Identifier::Mem);
        tree
    }

    fn absorb(&mut self, part: &IdTree, parent: Identifier) {
        for (id, edge) in part.top_edges() {
            let prev = self.nodes.insert(
                *id,
                Node {
                    label: edge.label.clone(),
                    parent,
                },
            );
            assert!(prev.is_none(), "duplicate identifier {id}");
            self.absorb(&edge.child, *id);
        }
    }

    /// The visible document part, as a tree value.
    pub fn data(&self) -> IdTree {
        self.view(Identifier::Data)
    }

    /// The memory part, as a tree value.
    pub fn mem(&self) -> IdTree {
        self.view(Identifier::Mem)
    }

    /// The whole root: `{(⊥, data)(…), (⊥, mem)(…)}`.
    pub fn root_view(&self) -> IdTree {
        let mut root = IdTree::empty();
        root.insert_edge(Label::NoValue, Identifier::Data, self.data());
        root.insert_edge(Label::NoValue, Identifier::Mem, self.mem());
        root
    }

    fn view(&self, root: Identifier) -> IdTree {
        let mut t = IdTree::empty();
        for (id, node) in &self.nodes {
            if node.parent == root {
                t.insert_edge(node.label.clone(), *id, self.view(*id));
            }
        }
        t
    }

    /// Label and parent of a living node.
    pub fn node(&self, id: Identifier) -> Option<(&Label, Identifier)> {
        self.nodes.get(&id).map(|n| (&n.label, n.parent))
    }

    pub fn contains(&self, id: Identifier) -> bool {
        match id {
            Identifier::Data | Identifier::Mem => true,
            other => self.nodes.contains_key(&other),
        }
    }

    /// Every living `Gen` identifier, reachable or not.
    pub fn gen_ids(&self) -> Vec<Identifier> {
        self.nodes.keys().copied().collect()
    }

    /// Identifiers reachable from the two roots.
    fn reachable(&self) -> std::collections::BTreeSet<Identifier> {
        let mut out = std::collections::BTreeSet::new();
        let mut frontier = vec![Identifier::Data, Identifier::Mem];
        while let Some(at) = frontier.pop() {
            for (id, node) in &self.nodes {
                if node.parent == at && out.insert(*id) {
                    frontier.push(*id);
                }
            }
        }
        out
    }

    /// Nodes not reachable from either root (members of move cycles, or
    /// additions below since-deleted parents), sorted by identifier.
    pub fn garbage(&self) -> Vec<(Identifier, Label, Identifier)> {
        let live = self.reachable();
        self.nodes
            .iter()
            .filter(|(id, _)| !live.contains(id))
            .map(|(id, n)| (*id, n.label.clone(), n.parent))
            .collect()
    }

    /// Verifies the store invariants.
    pub fn check(&self) -> Result<(), TreeDefect> {
        for id in self.nodes.keys() {
            if !id.is_gen() {
                return Err(TreeDefect::ReservedNode(*id));
            }
        }
        Ok(())
    }

    /// Applies an operation. Total: absent targets degrade to the identity,
    /// and every outcome is deterministic in the state alone.
    pub fn apply(&self, op: &TreeOp) -> WellFormedTree {
        let mut nodes = self.nodes.clone();
        match op {
            TreeOp::Add { parent, new } => {
                // A fresh identifier is created exactly once; re-delivery is
                // impossible under causal broadcast, so keep the first write.
                nodes.entry(*new).or_insert(Node {
                    label: Label::NoValue,
                    parent: *parent,
                });
            }
            TreeOp::Del { target } => {
                if nodes.remove(target).is_some() {
                    // The node is gone for good; its children (whatever they
                    // are right now) are parked in memory.
                    for node in nodes.values_mut() {
                        if node.parent == *target {
                            node.parent = Identifier::Mem;
                        }
                    }
                }
            }
            TreeOp::Mv { target, parent, .. } => {
                if let Some(node) = nodes.get_mut(target) {
                    node.parent = *parent;
                }
            }
            TreeOp::Ren { target, label, .. } => {
                if let Some(node) = nodes.get_mut(target) {
                    node.label = label.clone();
                }
            }
            TreeOp::Nop => {}
        }
        WellFormedTree { nodes }
    }

    /// Deterministic full-state encoding: the reachable `data` and `mem`
    /// trees in the edge grammar, followed by one `{id:label->parent}` token
    /// per unreachable node. Equal documents produce equal bytes.
    pub fn canonical_serialize(&self) -> String {
        use fmt::Write;
        let mut out = String::new();
        write!(out, "(_,data)[").unwrap();
        self.data().write_edges(&mut out);
        write!(out, "](_,mem)[").unwrap();
        self.mem().write_edges(&mut out);
        out.push(']');
        for (id, label, parent) in self.garbage() {
            write!(out, "{{{id}:{label}->{parent}}}").unwrap();
        }
        out
    }
}

/// Editing operations over well-formed trees.
///
/// `Mv` and `Ren` embed the issuing site number: the integration
/// transformation resolves same-identifier duels by site priority, and must
/// remain a pure function of its two operation arguments.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeOp {
    Add {
        parent: Identifier,
        new: Identifier,
    },
    Del {
        target: Identifier,
    },
    Mv {
        target: Identifier,
        parent: Identifier,
        site: u64,
    },
    Ren {
        target: Identifier,
        label: Label,
        site: u64,
    },
    Nop,
}

impl TreeOp {
    /// Short one-line form used in reports and failure witnesses.
    pub fn pretty(&self) -> String {
        match self {
            TreeOp::Add { parent, new } => format!("Op{{add,{new} under {parent}}}"),
            TreeOp::Del { target } => format!("Op{{del,{target}}}"),
            TreeOp::Mv {
                target,
                parent,
                site,
            } => format!("Op{{mv,{target} under {parent},site {site}}}"),
            TreeOp::Ren {
                target,
                label,
                site,
            } => format!("Op{{ren,{target} to {label},site {site}}}"),
            TreeOp::Nop => "Op{nop}".to_string(),
        }
    }
}

impl fmt::Display for TreeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}
