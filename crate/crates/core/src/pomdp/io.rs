//! JSON model documents.
//!
//! ```json
//! {
//!   "name": "...", "horizon": 12,
//!   "states": ["..."], "actions": ["..."], "observations": ["..."],
//!   "transitions": [[s, a, s_next, p], ...],
//!   "observation_fn": [[s_next, a, o, p], ...],
//!   "goals": [s, ...],
//!   "initial_belief": [[s, p], ...],
//!   "vocabulary": { "sorts": {...}, "functions": {...}, "columns": [...] }
//! }
//! ```
//! States, actions and observations are referenced by index. Table entries
//! that are absent are zero.

use serde::{Deserialize, Serialize};

use super::model::{GPomdp, GPomdpBuilder, Vocabulary};
use super::PomdpError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDoc {
    pub name: String,
    pub horizon: usize,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub transitions: Vec<(usize, usize, usize, f64)>,
    pub observation_fn: Vec<(usize, usize, usize, f64)>,
    pub goals: Vec<usize>,
    pub initial_belief: Vec<(usize, f64)>,
    #[serde(default)]
    pub vocabulary: Vocabulary,
}

impl ModelDoc {
    pub fn from_model<T: Scalar>(m: &GPomdp<T>) -> Self {
        let (ns, na) = (m.n_states(), m.n_actions());
        let mut transitions = Vec::new();
        for s in 0..ns {
            for a in 0..na {
                for &(n, p) in m.transition_row(s, a) {
                    transitions.push((s, a, n, p.as_f64()));
                }
            }
        }
        let mut observation_fn = Vec::new();
        for n in 0..ns {
            for a in 0..na {
                for (o, p) in m.observation_row(n, a).iter().enumerate() {
                    if *p > T::zero() {
                        observation_fn.push((n, a, o, p.as_f64()));
                    }
                }
            }
        }
        Self {
            name: m.name.clone(),
            horizon: m.horizon,
            states: m.states.clone(),
            actions: m.actions.clone(),
            observations: m.observations.clone(),
            transitions,
            observation_fn,
            goals: (0..ns).filter(|&s| m.is_goal(s)).collect(),
            initial_belief: m
                .initial_belief()
                .support()
                .iter()
                .map(|&(s, p)| (s, p.as_f64()))
                .collect(),
            vocabulary: m.vocab.clone(),
        }
    }

    pub fn into_model<T: Scalar>(self) -> Result<GPomdp<T>, PomdpError> {
        let (ns, na, no) = (
            self.states.len(),
            self.actions.len(),
            self.observations.len(),
        );
        let mut b =
            GPomdpBuilder::<T>::new(&self.name, self.states, self.actions, self.observations);
        b.horizon = self.horizon;
        for (s, a, n, p) in self.transitions {
            if s >= ns || a >= na || n >= ns {
                return Err(PomdpError::InvalidModel(format!(
                    "transition entry ({s},{a},{n}) out of range"
                )));
            }
            b.add_transition(s, a, n, T::of(p));
        }
        for (n, a, o, p) in self.observation_fn {
            if n >= ns || a >= na || o >= no {
                return Err(PomdpError::InvalidModel(format!(
                    "observation entry ({n},{a},{o}) out of range"
                )));
            }
            b.set_observation(n, a, o, T::of(p));
        }
        for g in self.goals {
            if g >= ns {
                return Err(PomdpError::InvalidModel(format!("goal {g} out of range")));
            }
            b.goal[g] = true;
        }
        b.init = self
            .initial_belief
            .into_iter()
            .map(|(s, p)| (s, T::of(p)))
            .collect();
        b.vocab = self.vocabulary;
        b.build()
    }
}

pub fn model_to_json<T: Scalar>(m: &GPomdp<T>) -> String {
    serde_json::to_string_pretty(&ModelDoc::from_model(m))
        .expect("model documents always serialize")
}

pub fn model_from_json<T: Scalar>(text: &str) -> Result<GPomdp<T>, PomdpError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|e| PomdpError::Parse(e.to_string()))?;
    doc.into_model()
}
