//! Goal-oriented POMDPs: model tables, exact Bayes filtering, simulation.
//!
//! Cost is one per step outside the goal set and zero inside it; goal states
//! are sinks. Beliefs are exact and sparse.

mod belief;
mod io;
mod model;
mod sim;

use thiserror::Error;

pub use belief::{
    belief_query, belief_update, belief_update_seq, condition, likelihood_of_prediction,
    observation_likelihood, predict, Belief,
};
pub use io::{model_from_json, model_to_json, ModelDoc};
pub use model::{sym, Column, FunctionDef, GPomdp, GPomdpBuilder, Key, Term, Vocabulary};
pub use sim::{rollout, rollout_light, step_simulate, Step, TrajectoryRecord};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PomdpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("observation '{observation}' is impossible after '{action}' from this belief")]
    ImpossibleObservation { action: String, observation: String },
    #[error("action index {0} out of range")]
    InvalidAction(usize),
    #[error("observation index {0} out of range")]
    InvalidObservation(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model document: {0}")]
    Parse(String),
}
