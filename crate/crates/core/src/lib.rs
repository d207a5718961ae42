//! Collaborative editing on identifier-labeled unordered trees.
//!
//! An optimistic peer-to-peer editing engine: every replica applies local
//! operations immediately, broadcasts them with minimal causal
//! dependencies, and integrates remote operations through a transformation
//! that reconciles concurrent edits. The crate bundles:
//!
//! - [`tree`]: the identifier-tree document model with total operation
//!   semantics (`Add`/`Del`/`Mv`/`Ren`/`Nop`) over a document+memory root;
//! - [`it`]: the integration transformation, its extension to concurrent
//!   sets, and exhaustive TP1/TP2 sweeps;
//! - [`legacy`]: path-addressed trees, where integration is possible for
//!   subtree deletion but provably impossible once deletion promotes
//!   children; a bounded falsifier demonstrates the impossibility;
//! - [`word`]: a convergent replicated word based on anchored, tombstoned
//!   elements (commuting operations instead of a transformation);
//! - [`compose`]: the product of trees and words: XML-like documents;
//! - [`sim`]: a deterministic multi-replica simulator with causal delivery
//!   and convergence checking;
//! - [`fuzz`]: randomized convergence testing with witness shrinking;
//! - [`projection`]: per-side trace projections and the standalone replay
//!   oracle validating the composition.

pub mod compose;
pub mod fuzz;
pub mod it;
pub mod legacy;
pub mod projection;
pub mod sim;
pub mod translate;
pub mod tree;
pub mod word;

pub use compose::{ComposedOp, DocState};
pub use it::{check_tp1, check_tp2, it, it_star, SweepConfig};
pub use legacy::{
    apply_path, falsify_del1, impossibility_scenario, it_del2, NameTree, Path, PathOp,
};
pub use sim::{run_scenario, Policy, RunReport, Scenario, ScriptOp, Step};
pub use tree::{IdTree, Identifier, Label, TreeOp, WellFormedTree};
pub use word::{Anchor, ElemId, PositionalOp, WordOp, WordState};
