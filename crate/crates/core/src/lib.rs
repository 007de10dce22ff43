//! Dynamic tree databases for storing sets of planning states.
//!
//! A tree database maps variable-length word sequences to stable integer
//! indices by splitting each sequence into a perfectly balanced binary tree
//! whose nodes are hash-consed across all stored sequences. Two variants are
//! provided: [`treedb::Variant::Stable`] keeps node ids fixed by indexing
//! them through a flat hash table, and [`treedb::Variant::HashId`] uses the
//! node's hash-table slot as its id and relocates every tree on resize.
//!
//! Around the core structure the crate provides the pieces needed to measure
//! it on explicit state-space search:
//!
//! * [`flat_table`]: open-addressing tables with 7-bit control-byte
//!   fingerprints, and the two indexed-set flavors built from them.
//! * [`encoding`]: packed FDR, sparse propositional and dense numeric state
//!   representations, plus five interchangeable state-set backends.
//! * [`ordering`]: affinity-driven variable ordering by greedy bin packing.
//! * [`task`]: a small grounded task model, its text format and generators.
//! * [`search`]: blind uniform-cost search over any backend.
//! * [`metrics`]: compression ratio, memory score and run records.

pub mod encoding;
pub mod error;
pub mod flat_table;
pub mod metrics;
pub mod ordering;
pub mod search;
pub mod task;
pub mod treedb;

pub use error::{Error, Result};
