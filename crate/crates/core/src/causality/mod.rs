//! Actual causes between configurations, causal chains, and how an
//! intervention affects a chain.

mod cause;
mod chain;

use thiserror::Error;

use crate::model::{CompId, ModelError};

pub use cause::{
    check_cause, clamp_intervention, find_causes, replay_certificate, Ac1Evidence, Ac1Mode, Ac2Evidence, Ac3Evidence,
    CauseCertificate, CauseQuery, DeviationCheck,
};
pub use chain::{
    causal_projection, classify_intervention_effect, find_causal_chains, CausalChain, CausalProjection, ChainLink,
    ChainQuery, EffectClass, InterventionEffect,
};

#[derive(Debug, Error)]
pub enum CausalityError {
    #[error("cause set must not be empty")]
    EmptyCause,
    #[error("component index {0} out of range")]
    UnknownComponent(CompId),
    #[error("a chain holds at least two configurations")]
    ZeroLength,
    #[error("not a causal chain of the model")]
    NotAChain,
    #[error(transparent)]
    Model(#[from] ModelError),
}
