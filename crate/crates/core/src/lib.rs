//! Multi-modal trip planning core: graph model, auxiliary node scores,
//! personalized cost, temporal-logic constraints and constrained search.
//!
//! The crate is `no_std` and only needs an allocator.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod auxmetrics;
pub mod geodata;
pub mod ltl;
pub mod mode;
pub mod pcf;
pub mod search;

pub use mode::{Mode, ModeSet};
