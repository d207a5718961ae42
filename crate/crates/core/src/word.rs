//! A convergent replicated word (character sequence).
//!
//! Published position-transforming word algorithms fail the convergence
//! properties, so the word side of a document does not use an integration
//! transformation at all. Instead every character is an immutable element
//! with a unique identity, inserts are anchored to the element to their left
//! at generation time, and deletion only hides. Concurrent operations then
//! commute outright, which makes the word object convergent on its own.
//!
//! Positional user operations are resolved against the issuing replica's
//! state by [`WordState::normalize`]; everything that travels between
//! replicas is anchored.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of one inserted element: the `(site, opnb)` of its request.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ElemId {
    pub site: u64,
    pub opnb: u64,
}

impl fmt::Display for ElemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.site, self.opnb)
    }
}

/// Insertion anchor: the sequence head, or the element the new one follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum Anchor {
    Head,
    After { elem: ElemId },
}

/// Anchored word operation, the wire form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WordOp {
    Insert {
        id: ElemId,
        ch: char,
        anchor: Anchor,
    },
    Hide {
        target: ElemId,
    },
}

impl WordOp {
    pub fn elem(&self) -> ElemId {
        match self {
            WordOp::Insert { id, .. } => *id,
            WordOp::Hide { target } => *target,
        }
    }
}

/// Positional user-level operation, resolved at generation time.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PositionalOp {
    InsCh { pos: usize, ch: char },
    DelCh { pos: usize },
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum WordError {
    #[error("insert position {pos} exceeds visible length {len}")]
    InsertOutOfRange { pos: usize, len: usize },
    #[error("delete position {pos} exceeds visible length {len}")]
    DeleteOutOfRange { pos: usize, len: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct Elem {
    ch: char,
    anchor: Anchor,
    visible: bool,
}

/// Replicated word state. Elements are never removed; `visible` only ever
/// flips to false. Operations whose anchor has not arrived yet are buffered
/// and drained as soon as it does (causal delivery makes this transient).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordState {
    elems: BTreeMap<ElemId, Elem>,
    pending: Vec<WordOp>,
}

impl WordState {
    pub fn new() -> Self {
        WordState::default()
    }

    pub fn is_pristine(&self) -> bool {
        self.elems.is_empty() && self.pending.is_empty()
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Applies one anchored operation; buffers it when its anchor or target
    /// is unknown.
    pub fn apply(&mut self, op: &WordOp) {
        if !self.try_apply(op) {
            self.pending.push(op.clone());
            return;
        }
        self.drain_pending();
    }

    fn try_apply(&mut self, op: &WordOp) -> bool {
        match op {
            WordOp::Insert { id, ch, anchor } => {
                if let Anchor::After { elem } = anchor {
                    if !self.elems.contains_key(elem) {
                        return false;
                    }
                }
                // Duplicate delivery cannot happen under the simulator; keep
                // the first write if it ever does.
                self.elems.entry(*id).or_insert(Elem {
                    ch: *ch,
                    anchor: *anchor,
                    visible: true,
                });
                true
            }
            WordOp::Hide { target } => match self.elems.get_mut(target) {
                Some(e) => {
                    e.visible = false;
                    true
                }
                None => false,
            },
        }
    }

    fn drain_pending(&mut self) {
        loop {
            let mut progressed = false;
            let mut rest = Vec::new();
            for op in std::mem::take(&mut self.pending) {
                if self.try_apply(&op) {
                    progressed = true;
                } else {
                    rest.push(op);
                }
            }
            self.pending = rest;
            if !progressed || self.pending.is_empty() {
                break;
            }
        }
    }

    /// Elements in document order: children of one anchor are ordered by
    /// descending id, and each element precedes its own followers.
    fn linearize(&self) -> Vec<ElemId> {
        let mut children: BTreeMap<Anchor, Vec<ElemId>> = BTreeMap::new();
        for (id, elem) in &self.elems {
            children.entry(elem.anchor).or_default().push(*id);
        }
        for ids in children.values_mut() {
            ids.sort_by(|a, b| b.cmp(a));
        }
        let mut out = Vec::with_capacity(self.elems.len());
        let mut stack: Vec<ElemId> = children.remove(&Anchor::Head).unwrap_or_default();
        stack.reverse();
        while let Some(id) = stack.pop() {
            out.push(id);
            if let Some(mut follow) = children.remove(&Anchor::After { elem: id }) {
                follow.reverse();
                stack.append(&mut follow);
            }
        }
        out
    }

    /// The user-visible text.
    pub fn visible_text(&self) -> String {
        self.linearize()
            .into_iter()
            .filter_map(|id| {
                let e = &self.elems[&id];
                e.visible.then_some(e.ch)
            })
            .collect()
    }

    /// Full-state canonical form: every element in document order with its
    /// id and visibility. Two states with equal canonical forms are equal.
    pub fn canonical_serialize(&self) -> String {
        let mut out = String::new();
        for id in self.linearize() {
            let e = &self.elems[&id];
            out.push('{');
            out.push_str(&id.to_string());
            out.push(':');
            out.push(e.ch);
            out.push(':');
            out.push(if e.visible { '+' } else { '-' });
            out.push('}');
        }
        for op in &self.pending {
            out.push_str(&format!("pending({})", op.elem()));
        }
        out
    }

    /// Resolves a positional operation against the current visible word
    /// into its anchored form. `id` is the identity the insert will carry.
    pub fn normalize(&self, op: &PositionalOp, id: ElemId) -> Result<WordOp, WordError> {
        let visible: Vec<ElemId> = self
            .linearize()
            .into_iter()
            .filter(|eid| self.elems[eid].visible)
            .collect();
        match op {
            PositionalOp::InsCh { pos, ch } => {
                if *pos > visible.len() {
                    return Err(WordError::InsertOutOfRange {
                        pos: *pos,
                        len: visible.len(),
                    });
                }
                let anchor = if *pos == 0 {
                    Anchor::Head
                } else {
                    Anchor::After {
                        elem: visible[*pos - 1],
                    }
                };
                Ok(WordOp::Insert {
                    id,
                    ch: *ch,
                    anchor,
                })
            }
            PositionalOp::DelCh { pos } => {
                if *pos >= visible.len() {
                    return Err(WordError::DeleteOutOfRange {
                        pos: *pos,
                        len: visible.len(),
                    });
                }
                Ok(WordOp::Hide {
                    target: visible[*pos],
                })
            }
        }
    }
}
