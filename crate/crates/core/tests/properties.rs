//! Property tests over randomized operation histories.

use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use otree_core::it::{generable_ops, it};
use otree_core::tree::{Identifier, Label, TreeOp, WellFormedTree};
use otree_core::word::{Anchor, ElemId, WordOp, WordState};

fn ren_labels() -> Vec<Label> {
    vec![Label::NoValue, Label::text("a"), Label::text("b")]
}

/// Drives a replica through `steps` randomly chosen generable operations.
fn random_history(seed: u64, steps: usize) -> (WellFormedTree, Vec<TreeOp>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = WellFormedTree::new();
    let mut applied = Vec::new();
    for i in 0..steps {
        let ops = generable_ops(&t, 1 + (i as u64 % 3), 100 + i as u64, &ren_labels());
        let op = ops[rng.gen_range(0..ops.len())].clone();
        t = t.apply(&op);
        applied.push(op);
    }
    (t, applied)
}

proptest! {
    /// Applying any generable operation keeps the store invariants and
    /// never duplicates or invents identifiers beyond the added one.
    #[test]
    fn tree_ops_preserve_invariants(seed in any::<u64>(), steps in 1usize..25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = WellFormedTree::new();
        for i in 0..steps {
            let before: Vec<Identifier> = t.gen_ids();
            let ops = generable_ops(&t, 1 + (i as u64 % 3), 100 + i as u64, &ren_labels());
            let op = ops[rng.gen_range(0..ops.len())].clone();
            let next = t.apply(&op);
            prop_assert_eq!(next.check(), Ok(()));
            let after = next.gen_ids();
            for id in &after {
                let fresh = matches!(&op, TreeOp::Add { new, .. } if *new == *id);
                prop_assert!(
                    before.contains(id) || fresh,
                    "{} appeared out of nowhere via {}",
                    id,
                    op
                );
            }
            t = next;
        }
    }

    /// Canonical serialization separates states exactly.
    #[test]
    fn serialization_reflects_state_equality(a in any::<u64>(), b in any::<u64>(), steps in 0usize..12) {
        let (ta, _) = random_history(a, steps);
        let (tb, _) = random_history(b, steps);
        prop_assert_eq!(
            ta == tb,
            ta.canonical_serialize() == tb.canonical_serialize()
        );
    }

    /// The transformation is closed over the operation set: it yields legal
    /// operations and honors the identity clauses.
    #[test]
    fn it_is_closed_and_respects_nop(seed in any::<u64>()) {
        let (t, _) = random_history(seed, 6);
        let ops1 = generable_ops(&t, 1, 901, &ren_labels());
        let ops2 = generable_ops(&t, 2, 902, &ren_labels());
        for op1 in &ops1 {
            prop_assert_eq!(&it(op1, &TreeOp::Nop), op1);
            prop_assert_eq!(it(&TreeOp::Nop, op1), TreeOp::Nop);
            for op2 in &ops2 {
                match it(op1, op2) {
                    TreeOp::Add { new, .. } => prop_assert!(new.is_gen()),
                    TreeOp::Del { target }
                    | TreeOp::Mv { target, .. }
                    | TreeOp::Ren { target, .. } => prop_assert!(target.is_gen()),
                    TreeOp::Nop => {}
                }
            }
        }
    }

    /// Any two operations with distinct identities commute on word states.
    #[test]
    fn word_ops_commute(seed in any::<u64>(), prefix in 0usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut base = WordState::new();
        let mut ids = vec![];
        for i in 0..prefix {
            let id = ElemId { site: 1, opnb: i as u64 + 1 };
            let anchor = if ids.is_empty() || rng.gen_bool(0.3) {
                Anchor::Head
            } else {
                Anchor::After { elem: ids[rng.gen_range(0..ids.len())] }
            };
            base.apply(&WordOp::Insert { id, ch: (b'a' + (i as u8 % 26)) as char, anchor });
            ids.push(id);
        }
        let sample = |rng: &mut ChaCha8Rng, site: u64| -> WordOp {
            if ids.is_empty() || rng.gen_bool(0.6) {
                let anchor = if ids.is_empty() || rng.gen_bool(0.4) {
                    Anchor::Head
                } else {
                    Anchor::After { elem: ids[rng.gen_range(0..ids.len())] }
                };
                WordOp::Insert { id: ElemId { site, opnb: 50 }, ch: 'z', anchor }
            } else {
                WordOp::Hide { target: ids[rng.gen_range(0..ids.len())] }
            }
        };
        let o1 = sample(&mut rng, 2);
        let o2 = sample(&mut rng, 3);

        let mut ab = base.clone();
        ab.apply(&o1);
        ab.apply(&o2);
        let mut ba = base.clone();
        ba.apply(&o2);
        ba.apply(&o1);
        prop_assert_eq!(ab.canonical_serialize(), ba.canonical_serialize());
    }
}
