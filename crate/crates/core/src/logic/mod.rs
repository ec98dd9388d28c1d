//! Formulas and their satisfaction relation over full and partial models.

mod eval;
mod formula;

pub use eval::{evaluate, evaluate_partial, explain, resolve, sat_set, Explanation, LogicError, Witness};
pub use formula::{ident, Formula};
