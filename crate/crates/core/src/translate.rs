//! Context translation of tree operations over a partially ordered history.
//!
//! An operation is defined against the state reached by its causal past. To
//! execute it on a replica whose history also contains concurrent requests,
//! it must be translated into that context: `form(x, C)` is `x`'s operation
//! transformed to apply after the downward-closed request set `C ⊇ past(x)`.
//! Peeling one causally-maximal concurrent element `e` off the context gives
//! the recursion
//!
//! ```text
//! form(x, C) = it( form(x, C \ {e}),  form(e, C \ {e}) )
//! ```
//!
//! with `form(x, past(x))` the original operation. On a pairwise-concurrent
//! context this is exactly the inductive extension of the transformation to
//! concurrent sets; the recursion generalizes it to contexts whose elements
//! are causally related among themselves, which is what replica histories
//! look like. Given TP1 and TP2 the result does not depend on which maximal
//! element is peeled first; callers cross-check that by running the
//! recursion under both peel policies.
//!
//! Word-side requests participate in the causal order but never transform
//! tree operations, so they stay inert in the context.

use std::collections::BTreeMap;

use crate::it::it;
use crate::tree::TreeOp;

/// Bitset over history indices.
pub type Bits = Vec<u64>;

pub fn bit_get(b: &Bits, i: usize) -> bool {
    b.get(i / 64).is_some_and(|w| w & (1 << (i % 64)) != 0)
}

pub fn bit_set(b: &mut Bits, i: usize) {
    if b.len() <= i / 64 {
        b.resize(i / 64 + 1, 0);
    }
    b[i / 64] |= 1 << (i % 64);
}

pub fn bit_or(a: &mut Bits, other: &Bits) {
    if a.len() < other.len() {
        a.resize(other.len(), 0);
    }
    for (w, o) in a.iter_mut().zip(other) {
        *w |= o;
    }
}

/// One request of the history, in execution order.
#[derive(Clone, Debug)]
pub struct HistEntry {
    /// The original (untransformed) operation; `None` for word-side
    /// requests, which never interact with tree integration.
    pub tree_op: Option<TreeOp>,
    /// Causal past of this request, as indices into the same history.
    pub past: Bits,
    /// `(site, opnb)` used to pick maximal elements deterministically.
    pub order_key: (u64, u64),
}

/// Which causally-maximal context element the recursion peels first. Both
/// policies must agree; disagreement falsifies order-independence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Peel {
    HighestKey,
    LowestKey,
}

pub struct Translator<'a> {
    entries: &'a [HistEntry],
    peel: Peel,
    memo: BTreeMap<(usize, Bits), TreeOp>,
}

impl<'a> Translator<'a> {
    pub fn new(entries: &'a [HistEntry], peel: Peel) -> Self {
        Translator {
            entries,
            peel,
            memo: BTreeMap::new(),
        }
    }

    /// Translates the incoming operation `op` (with causal past `op_past`)
    /// to the context of the entire history.
    pub fn integrate(&mut self, op: &TreeOp, op_past: &Bits) -> TreeOp {
        let mut full = Bits::new();
        for i in 0..self.entries.len() {
            bit_set(&mut full, i);
        }
        self.form_incoming(op, op_past, full)
    }

    fn form_incoming(&mut self, op: &TreeOp, op_past: &Bits, ctx: Bits) -> TreeOp {
        match self.peel_candidate(op_past, &ctx) {
            None => op.clone(),
            Some(e) => {
                let mut smaller = ctx.clone();
                smaller[e / 64] &= !(1 << (e % 64));
                let op_form = self.form_incoming(op, op_past, smaller.clone());
                let e_form = self.form_entry(e, smaller);
                it(&op_form, &e_form)
            }
        }
    }

    /// `form(entries[x], ctx)` with memoization; `ctx` must be downward
    /// closed and contain `past(x)` but not `x`.
    fn form_entry(&mut self, x: usize, ctx: Bits) -> TreeOp {
        if let Some(hit) = self.memo.get(&(x, ctx.clone())) {
            return hit.clone();
        }
        let op = self.entries[x]
            .tree_op
            .clone()
            .expect("only tree entries are translated");
        let past = self.entries[x].past.clone();
        let out = match self.peel_candidate(&past, &ctx) {
            None => op,
            Some(e) => {
                let mut smaller = ctx.clone();
                smaller[e / 64] &= !(1 << (e % 64));
                let x_form = self.form_entry(x, smaller.clone());
                let e_form = self.form_entry(e, smaller);
                it(&x_form, &e_form)
            }
        };
        self.memo.insert((x, ctx), out.clone());
        out
    }

    /// Picks the tree-side element of `ctx \ past` to peel: causally
    /// maximal within the concurrent tree extras, tie-broken by the peel
    /// policy. Word entries are spectators: they only shape the causal
    /// pasts (which are fully transitive), so they neither get peeled nor
    /// block a tree entry from being peeled.
    fn peel_candidate(&self, past: &Bits, ctx: &Bits) -> Option<usize> {
        let mut best: Option<usize> = None;
        for i in 0..self.entries.len() {
            if !bit_get(ctx, i) || bit_get(past, i) || self.entries[i].tree_op.is_none() {
                continue;
            }
            // Maximal: no other tree element of the context has i in its past.
            let covered = (0..self.entries.len()).any(|j| {
                j != i
                    && bit_get(ctx, j)
                    && !bit_get(past, j)
                    && self.entries[j].tree_op.is_some()
                    && bit_get(&self.entries[j].past, i)
            });
            if covered {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => match self.peel {
                    Peel::HighestKey => self.entries[i].order_key > self.entries[b].order_key,
                    Peel::LowestKey => self.entries[i].order_key < self.entries[b].order_key,
                },
            };
            if better {
                best = Some(i);
            }
        }
        best
    }
}

/// Number of tree-side elements concurrent with the incoming request; the
/// recursion is trivially order-independent below two.
pub fn concurrent_tree_count(entries: &[HistEntry], op_past: &Bits) -> usize {
    entries
        .iter()
        .enumerate()
        .filter(|(i, e)| e.tree_op.is_some() && !bit_get(op_past, *i))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Identifier, Label};

    fn gid(site: u64, opnb: u64) -> Identifier {
        Identifier::gen(site, opnb)
    }

    fn entry(op: TreeOp, past: &[usize], key: (u64, u64)) -> HistEntry {
        let mut bits = Bits::new();
        for &i in past {
            bit_set(&mut bits, i);
        }
        HistEntry {
            tree_op: Some(op),
            past: bits,
            order_key: key,
        }
    }

    #[test]
    fn empty_context_returns_original() {
        let entries: Vec<HistEntry> = Vec::new();
        let op = TreeOp::Del { target: gid(1, 1) };
        let mut tr = Translator::new(&entries, Peel::HighestKey);
        assert_eq!(tr.integrate(&op, &Bits::new()), op);
    }

    #[test]
    fn pairwise_concurrent_context_matches_it_star() {
        // Three pairwise concurrent ops against an incoming one: the
        // recursion must agree with the inductive set extension.
        let ctx_ops = [
            TreeOp::Del { target: gid(1, 1) },
            TreeOp::Ren {
                target: gid(1, 1),
                label: Label::text("y"),
                site: 2,
            },
            TreeOp::Mv {
                target: gid(2, 1),
                parent: Identifier::Mem,
                site: 3,
            },
        ];
        let entries: Vec<HistEntry> = ctx_ops
            .iter()
            .enumerate()
            .map(|(i, op)| entry(op.clone(), &[], (i as u64 + 1, 1)))
            .collect();
        let incoming = TreeOp::Ren {
            target: gid(1, 1),
            label: Label::text("z"),
            site: 4,
        };
        let mut tr = Translator::new(&entries, Peel::HighestKey);
        let via_translate = tr.integrate(&incoming, &Bits::new());
        let via_it_star = crate::it::it_star(&incoming, &ctx_ops);
        assert_eq!(via_translate, via_it_star);

        let mut tr2 = Translator::new(&entries, Peel::LowestKey);
        assert_eq!(tr2.integrate(&incoming, &Bits::new()), via_translate);
    }

    #[test]
    fn chained_concurrent_context_is_peel_invariant() {
        // Two chains from different sites, all concurrent with the incoming
        // op: entry 1 depends on entry 0, entry 3 on entry 2.
        let entries = vec![
            entry(
                TreeOp::Add {
                    parent: Identifier::Data,
                    new: gid(1, 1),
                },
                &[],
                (1, 1),
            ),
            entry(
                TreeOp::Ren {
                    target: gid(1, 1),
                    label: Label::text("a"),
                    site: 1,
                },
                &[0],
                (1, 2),
            ),
            entry(
                TreeOp::Add {
                    parent: Identifier::Data,
                    new: gid(2, 1),
                },
                &[],
                (2, 1),
            ),
            entry(TreeOp::Del { target: gid(2, 1) }, &[2], (2, 2)),
        ];
        let incoming = TreeOp::Mv {
            target: gid(3, 1),
            parent: gid(2, 1),
            site: 3,
        };
        let mut hi = Translator::new(&entries, Peel::HighestKey);
        let mut lo = Translator::new(&entries, Peel::LowestKey);
        let a = hi.integrate(&incoming, &Bits::new());
        let b = lo.integrate(&incoming, &Bits::new());
        assert_eq!(a, b);
        // The destination was deleted concurrently: rescued into memory.
        assert_eq!(
            a,
            TreeOp::Mv {
                target: gid(3, 1),
                parent: Identifier::Mem,
                site: 3
            }
        );
    }

    #[test]
    fn causally_later_entries_transform_through_their_own_context() {
        // Entry 1 (site 2) was issued after seeing entry 0 (site 1), both
        // concurrent with the incoming op from site 3. The incoming delete
        // must survive both, and the rename chain must not resurrect it.
        let entries = vec![
            entry(
                TreeOp::Ren {
                    target: gid(9, 9),
                    label: Label::text("m"),
                    site: 1,
                },
                &[],
                (1, 1),
            ),
            entry(
                TreeOp::Ren {
                    target: gid(9, 9),
                    label: Label::text("n"),
                    site: 2,
                },
                &[0],
                (2, 1),
            ),
        ];
        let incoming = TreeOp::Del { target: gid(9, 9) };
        let mut tr = Translator::new(&entries, Peel::HighestKey);
        assert_eq!(tr.integrate(&incoming, &Bits::new()), incoming);
    }
}
