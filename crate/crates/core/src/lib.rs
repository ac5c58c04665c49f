//! Algorithm selection with comb operators.
//!
//! The crate covers the selection primitives ([`comb`], [`tree`]), threshold
//! learning from runtime data ([`threshold`]), online selectors with regret
//! accounting ([`online`]), a small suite of real problems with paired
//! systematic/randomized solvers ([`suite`]) and the harness that runs and
//! analyzes the benchmark matrix ([`harness`]).

pub mod cli;
pub mod comb;
pub mod error;
pub mod harness;
pub mod online;
pub mod rng;
pub mod stats;
pub mod suite;
pub mod threshold;
pub mod tree;

pub use error::{Error, Result};
