//! Causal reasoning over component-based system models: models with
//! influence rules and interventions, a modal logic with intervention and
//! separation operators, actual causes and causal chains, an export to
//! structural-equation models with an independent checker, and bisimulation
//! under intervention.

pub mod bisim;
pub mod causality;
pub mod dot;
pub mod dsl;
pub mod fixtures;
pub mod hp;
pub mod logic;
pub mod model;
pub mod query;
