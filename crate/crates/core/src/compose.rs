//! The composed document object: a well-formed identifier tree whose nodes
//! each carry a replicated word.
//!
//! The composition is a product: tree operations touch only the tree side,
//! word operations touch only the word instance of their node, and requests
//! carry exactly one side. Because each side is convergent on its own, the
//! product converges; the projection helpers extract the per-side runs a
//! replay oracle can check independently.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tree::{Identifier, TreeOp, WellFormedTree};
use crate::word::{PositionalOp, WordOp, WordState};

/// Document state: the tree plus one word state per living identifier.
///
/// The word map is kept defined exactly on the living `Gen` identifiers,
/// the memory part and detached nodes included, so material displaced by a
/// deletion or a concurrent move keeps its text and survives a restoring
/// move. A deleted identifier can never return (identifiers are
/// single-use), so dropping its entry equals resetting it to the default
/// empty word.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DocState {
    tree: WellFormedTree,
    words: BTreeMap<Identifier, WordState>,
}

/// One side of the product: a tree operation, or a word operation addressed
/// to the word instance of one identifier.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "side", rename_all = "snake_case")]
pub enum ComposedOp {
    Tree { op: TreeOp },
    Word { id: Identifier, op: WordOp },
}

impl fmt::Display for ComposedOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComposedOp::Tree { op } => write!(f, "tree:{}", op.pretty()),
            ComposedOp::Word { id, op } => write!(f, "word[{id}]:{op:?}"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ComposeError {
    #[error("no word instance for identifier {0} at generation")]
    NoInstance(Identifier),
    #[error(transparent)]
    Word(#[from] crate::word::WordError),
}

impl DocState {
    pub fn new() -> Self {
        DocState {
            tree: WellFormedTree::new(),
            words: BTreeMap::new(),
        }
    }

    pub fn tree(&self) -> &WellFormedTree {
        &self.tree
    }

    pub fn word(&self, id: Identifier) -> Option<&WordState> {
        self.words.get(&id)
    }

    pub fn word_ids(&self) -> impl Iterator<Item = &Identifier> {
        self.words.keys()
    }

    /// Applies one composed operation. A tree operation updates the tree and
    /// re-synchronizes the word domain; a word operation updates exactly one
    /// word instance. Word operations for identifiers no longer in the tree
    /// are dropped: the identifier can never reappear, so every replica ends
    /// up dropping the same operations.
    pub fn apply(&self, op: &ComposedOp) -> DocState {
        match op {
            ComposedOp::Tree { op } => {
                let tree = self.tree.apply(op);
                let mut words = self.words.clone();
                let live: std::collections::BTreeSet<Identifier> =
                    tree.gen_ids().into_iter().collect();
                words.retain(|id, _| live.contains(id));
                for id in &live {
                    words.entry(*id).or_default();
                }
                DocState { tree, words }
            }
            ComposedOp::Word { id, op } => {
                let mut out = self.clone();
                if let Some(w) = out.words.get_mut(id) {
                    w.apply(op);
                }
                out
            }
        }
    }

    /// Resolves a positional word operation against the word instance of
    /// `id`, for a request that will carry identity `(site, opnb)`.
    pub fn normalize_word(
        &self,
        id: Identifier,
        op: &PositionalOp,
        site: u64,
        opnb: u64,
    ) -> Result<ComposedOp, ComposeError> {
        let word = self.words.get(&id).ok_or(ComposeError::NoInstance(id))?;
        let wire = word.normalize(op, crate::word::ElemId { site, opnb })?;
        Ok(ComposedOp::Word { id, op: wire })
    }

    /// Combined canonical form: the tree serialization with every `Gen`
    /// identifier annotated inline by its word state.
    pub fn canonical_serialize(&self) -> String {
        fn walk(
            t: &crate::tree::IdTree,
            words: &BTreeMap<Identifier, WordState>,
            out: &mut String,
        ) {
            for (id, edge) in t.top_edges() {
                let annot = words
                    .get(id)
                    .map(|w| format!("<{}>", w.canonical_serialize()))
                    .unwrap_or_default();
                out.push_str(&format!("({},{}{})[", edge.label, id, annot));
                walk(&edge.child, words, out);
                out.push(']');
            }
        }
        let mut out = String::from("(_,data)[");
        walk(&self.tree.data(), &self.words, &mut out);
        out.push_str("](_,mem)[");
        walk(&self.tree.mem(), &self.words, &mut out);
        out.push(']');
        for (id, label, parent) in self.tree.garbage() {
            let annot = self
                .words
                .get(&id)
                .map(|w| format!("<{}>", w.canonical_serialize()))
                .unwrap_or_default();
            out.push_str(&format!("{{{id}{annot}:{label}->{parent}}}"));
        }
        out
    }
}

/// Which side of the product a composed operation belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Tree,
    Word(Identifier),
}

pub fn side_of(op: &ComposedOp) -> Side {
    match op {
        ComposedOp::Tree { .. } => Side::Tree,
        ComposedOp::Word { id, .. } => Side::Word(*id),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::{Anchor, ElemId};

    fn gid(site: u64, opnb: u64) -> Identifier {
        Identifier::gen(site, opnb)
    }

    fn add(parent: Identifier, new: Identifier) -> ComposedOp {
        ComposedOp::Tree {
            op: TreeOp::Add { parent, new },
        }
    }

    fn ins(id: Identifier, elem: ElemId, ch: char) -> ComposedOp {
        ComposedOp::Word {
            id,
            op: WordOp::Insert {
                id: elem,
                ch,
                anchor: Anchor::Head,
            },
        }
    }

    #[test]
    fn tree_nop_is_identity() {
        let s = DocState::new();
        assert_eq!(s.apply(&ComposedOp::Tree { op: TreeOp::Nop }), s);
    }

    #[test]
    fn word_op_touches_only_its_instance() {
        let s = DocState::new()
            .apply(&add(Identifier::Data, gid(1, 1)))
            .apply(&add(Identifier::Data, gid(1, 2)));
        let before_tree = s.tree().canonical_serialize();

        let s2 = s.apply(&ins(gid(1, 1), ElemId { site: 1, opnb: 3 }, 'a'));
        assert_eq!(s2.tree().canonical_serialize(), before_tree);
        assert_eq!(s2.word(gid(1, 1)).unwrap().visible_text(), "a");
        assert_eq!(s2.word(gid(1, 2)).unwrap().visible_text(), "");
    }

    #[test]
    fn add_creates_default_word_instance() {
        let s = DocState::new().apply(&add(Identifier::Data, gid(1, 1)));
        assert!(s.word(gid(1, 1)).unwrap().is_pristine());
    }

    #[test]
    fn del_keeps_words_of_surviving_children() {
        // x(y): delete x; y survives under mem with its text, x's word goes.
        let s = DocState::new()
            .apply(&add(Identifier::Data, gid(1, 1)))
            .apply(&add(gid(1, 1), gid(1, 2)))
            .apply(&ins(gid(1, 2), ElemId { site: 1, opnb: 3 }, 'k'))
            .apply(&ins(gid(1, 1), ElemId { site: 1, opnb: 4 }, 'x'));

        let s2 = s.apply(&ComposedOp::Tree {
            op: TreeOp::Del { target: gid(1, 1) },
        });
        assert!(s2.word(gid(1, 1)).is_none(), "deleted id loses its word");
        assert_eq!(s2.word(gid(1, 2)).unwrap().visible_text(), "k");
        assert!(s2.tree().mem().contains(gid(1, 2)));
    }

    #[test]
    fn word_op_for_dead_identifier_is_dropped_everywhere() {
        let s = DocState::new().apply(&add(Identifier::Data, gid(1, 1)));
        let dead = s.apply(&ComposedOp::Tree {
            op: TreeOp::Del { target: gid(1, 1) },
        });
        let after = dead.apply(&ins(gid(1, 1), ElemId { site: 2, opnb: 1 }, 'z'));
        assert_eq!(after, dead);
    }

    #[test]
    fn mv_restore_is_lossless_for_text() {
        // Delete a parent, child parks under mem with text intact, move it
        // back under data.
        let s = DocState::new()
            .apply(&add(Identifier::Data, gid(1, 1)))
            .apply(&add(gid(1, 1), gid(1, 2)))
            .apply(&ins(gid(1, 2), ElemId { site: 1, opnb: 3 }, 'q'))
            .apply(&ComposedOp::Tree {
                op: TreeOp::Del { target: gid(1, 1) },
            })
            .apply(&ComposedOp::Tree {
                op: TreeOp::Mv {
                    target: gid(1, 2),
                    parent: Identifier::Data,
                    site: 1,
                },
            });
        assert!(s.tree().data().contains(gid(1, 2)));
        assert_eq!(s.word(gid(1, 2)).unwrap().visible_text(), "q");
    }

    #[test]
    fn combined_serialization_annotates_words() {
        let s = DocState::new()
            .apply(&add(Identifier::Data, gid(1, 1)))
            .apply(&ins(gid(1, 1), ElemId { site: 1, opnb: 2 }, 'h'));
        let canon = s.canonical_serialize();
        assert!(canon.contains("1;1<{1;2:h:+}>"), "got {canon}");
    }

    #[test]
    fn normalize_word_rejects_dead_instance() {
        let s = DocState::new();
        let err = s.normalize_word(gid(9, 9), &PositionalOp::InsCh { pos: 0, ch: 'a' }, 1, 1);
        assert_eq!(err, Err(ComposeError::NoInstance(gid(9, 9))));
    }
}
