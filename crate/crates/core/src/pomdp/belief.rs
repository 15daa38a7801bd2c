use serde::{Deserialize, Serialize};

use super::model::GPomdp;
use super::PomdpError;
use crate::scalar::Scalar;

/// Exact distribution over states, stored sparsely as `(state, prob)` pairs
/// sorted by state index with strictly positive mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Belief<T> {
    n_states: usize,
    entries: Vec<(usize, T)>,
}

impl<T: Scalar> Belief<T> {
    /// Normalizes and validates raw `(state, weight)` pairs. Duplicate states
    /// are summed.
    pub fn from_entries(n_states: usize, mut raw: Vec<(usize, T)>) -> Result<Self, PomdpError> {
        if let Some(&(s, _)) = raw.iter().find(|(s, _)| *s >= n_states) {
            return Err(PomdpError::InvalidBelief(format!("state {s} out of range")));
        }
        if raw.iter().any(|(_, p)| *p < T::zero() || !p.is_finite()) {
            return Err(PomdpError::InvalidBelief(
                "negative or non-finite mass".into(),
            ));
        }
        raw.sort_by_key(|e| e.0);
        let mut entries: Vec<(usize, T)> = Vec::with_capacity(raw.len());
        for (s, p) in raw {
            match entries.last_mut() {
                Some(last) if last.0 == s => last.1 = last.1 + p,
                _ => entries.push((s, p)),
            }
        }
        entries.retain(|e| e.1 > T::zero());
        let total: T = entries.iter().map(|e| e.1).sum();
        if !(total > T::zero()) {
            return Err(PomdpError::InvalidBelief("belief has no mass".into()));
        }
        for e in &mut entries {
            e.1 = e.1 / total;
        }
        Ok(Self { n_states, entries })
    }

    pub fn from_dense(probs: &[T]) -> Result<Self, PomdpError> {
        let raw = probs
            .iter()
            .copied()
            .enumerate()
            .filter(|e| e.1 != T::zero())
            .collect();
        Self::from_entries(probs.len(), raw)
    }

    pub fn point(n_states: usize, s: usize) -> Self {
        assert!(s < n_states);
        Self {
            n_states,
            entries: vec![(s, T::one())],
        }
    }

    pub fn uniform(n_states: usize, support: &[usize]) -> Result<Self, PomdpError> {
        Self::from_entries(n_states, support.iter().map(|&s| (s, T::one())).collect())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn support(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn prob(&self, s: usize) -> T {
        self.entries
            .binary_search_by_key(&s, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or_else(|_| T::zero())
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut v = vec![T::zero(); self.n_states];
        for &(s, p) in &self.entries {
            v[s] = p;
        }
        v
    }

    /// Mass of the states for which `mask` is true.
    #[inline]
    pub fn mass(&self, mask: &[bool]) -> T {
        let mut acc = T::zero();
        for &(s, p) in &self.entries {
            if mask[s] {
                acc = acc + p;
            }
        }
        acc
    }

    pub fn total(&self) -> T {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Samples a state; `u` is a uniform draw in `[0,1)`.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for &(s, p) in &self.entries {
            acc += p.as_f64();
            if u < acc {
                return s;
            }
        }
        self.entries[self.entries.len() - 1].0
    }
}

/// `Pr[φ]_b`, where the formula has been compiled to a per-state mask.
pub fn belief_query<T: Scalar>(b: &Belief<T>, mask: &[bool]) -> Result<T, PomdpError> {
    if mask.len() != b.n_states() {
        return Err(PomdpError::DimensionMismatch {
            expected: b.n_states(),
            found: mask.len(),
        });
    }
    Ok(b.mass(mask))
}

/// Unnormalized predicted distribution `Σ_s T(s,a,·) b(s)`, sorted by state.
pub fn predict<T: Scalar>(m: &GPomdp<T>, b: &Belief<T>, a: usize) -> Vec<(usize, T)> {
    let mut out: Vec<(usize, T)> = Vec::with_capacity(b.support().len() * 2);
    for &(s, p) in b.support() {
        for &(n, q) in m.transition_row(s, a) {
            out.push((n, p * q));
        }
    }
    out.sort_by_key(|e| e.0);
    let mut merged: Vec<(usize, T)> = Vec::with_capacity(out.len());
    for (n, p) in out {
        match merged.last_mut() {
            Some(last) if last.0 == n => last.1 = last.1 + p,
            _ => merged.push((n, p)),
        }
    }
    merged
}

/// Conditions a predicted distribution on observation `o`.
pub fn condition<T: Scalar>(
    m: &GPomdp<T>,
    predicted: &[(usize, T)],
    a: usize,
    o: usize,
) -> Result<Belief<T>, PomdpError> {
    let mut entries = Vec::with_capacity(predicted.len());
    let mut total = T::zero();
    for &(n, p) in predicted {
        let w = p * m.observation_prob(n, a, o);
        if w > T::zero() {
            total = total + w;
            entries.push((n, w));
        }
    }
    if !(total > T::zero()) {
        return Err(PomdpError::ImpossibleObservation {
            action: m.actions[a].clone(),
            observation: m.observations[o].clone(),
        });
    }
    for e in &mut entries {
        e.1 = e.1 / total;
    }
    Ok(Belief {
        n_states: m.n_states(),
        entries,
    })
}

/// `b'(s') = α Ω(s',a,o) Σ_s T(s,a,s') b(s)`.
pub fn belief_update<T: Scalar>(
    m: &GPomdp<T>,
    b: &Belief<T>,
    a: usize,
    o: usize,
) -> Result<Belief<T>, PomdpError> {
    if a >= m.n_actions() {
        return Err(PomdpError::InvalidAction(a));
    }
    if o >= m.n_observations() {
        return Err(PomdpError::InvalidObservation(o));
    }
    condition(m, &predict(m, b, a), a, o)
}

/// Left fold of [`belief_update`] over `(action, observation)` pairs.
pub fn belief_update_seq<T: Scalar>(
    m: &GPomdp<T>,
    b0: &Belief<T>,
    trace: &[(usize, usize)],
) -> Result<Belief<T>, PomdpError> {
    let mut b = b0.clone();
    for &(a, o) in trace {
        b = belief_update(m, &b, a, o)?;
    }
    Ok(b)
}

/// `Pr(o | b, a)` for every observation.
pub fn observation_likelihood<T: Scalar>(m: &GPomdp<T>, b: &Belief<T>, a: usize) -> Vec<T> {
    likelihood_of_prediction(m, &predict(m, b, a), a)
}

pub fn likelihood_of_prediction<T: Scalar>(
    m: &GPomdp<T>,
    predicted: &[(usize, T)],
    a: usize,
) -> Vec<T> {
    let mut out = vec![T::zero(); m.n_observations()];
    for &(n, p) in predicted {
        for (o, &q) in m.observation_row(n, a).iter().enumerate() {
            out[o] = out[o] + p * q;
        }
    }
    out
}
