//! Online selectors and regret accounting.
//!
//! Everything here is loss-oriented: selectors minimize, losses live in
//! `[0, 1]` unless a cost term is added explicitly.

mod fpl;
mod ledger;
mod ucb;
mod window;

pub mod env;
pub mod sim;

pub use fpl::{fpl_choose, fpl_update, FplState, LossVector};
pub use ledger::{LedgerRow, RegretLedger};
pub use ucb::{cascade_choose, ucb1_choose, ucb_tree_route, TreeRoute, UcbArm, UcbTree};
pub use window::{adaptive_window_run, fpl_run, AdaptiveWindow};

/// Index of the smallest value; ties go to the lowest index.
pub(crate) fn argmin(values: impl IntoIterator<Item = f64>) -> usize {
    let mut iter = values.into_iter().enumerate();
    let Some((_, first)) = iter.next() else {
        return 0;
    };
    let (mut best, mut best_value) = (0, first);
    for (i, v) in iter {
        if v < best_value {
            best = i;
            best_value = v;
        }
    }
    best
}
