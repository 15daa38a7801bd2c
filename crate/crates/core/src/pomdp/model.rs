use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::belief::Belief;
use super::PomdpError;
use crate::scalar::Scalar;

/// A ground constant: an object name or an integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Key {
    Int(i64),
    Sym(String),
}

impl std::fmt::Display for Key {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Key::Int(i) => write!(f, "{i}"),
            Key::Sym(s) => f.write_str(s),
        }
    }
}

/// Value of a ground function application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    /// Varies by state; index into [`Vocabulary::columns`].
    Column(usize),
    Const(f64),
}

/// Per-state valuation of one ground state variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub observable: bool,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub arity: usize,
    pub entries: Vec<(Vec<Key>, Term)>,
    /// Value for ground applications absent from `entries`.
    #[serde(default)]
    pub default: f64,
    #[serde(skip)]
    index: HashMap<Vec<Key>, Term>,
}

impl FunctionDef {
    pub fn new(arity: usize) -> Self {
        Self {
            arity,
            entries: Vec::new(),
            default: 0.0,
            index: HashMap::new(),
        }
    }

    pub fn insert(&mut self, args: Vec<Key>, term: Term) {
        debug_assert_eq!(args.len(), self.arity);
        self.index.insert(args.clone(), term);
        self.entries.push((args, term));
    }

    pub fn lookup(&self, args: &[Key]) -> Term {
        self.index
            .get(args)
            .copied()
            .unwrap_or(Term::Const(self.default))
    }

    fn reindex(&mut self) {
        self.index = self.entries.iter().cloned().collect();
    }
}

/// Relational vocabulary used to ground BSQ formulas: objects grouped into
/// sorts, functions mapping ground arguments to state columns or constants.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// Declared constants in declaration order.
    pub sorts: BTreeMap<String, Vec<Key>>,
    pub functions: BTreeMap<String, FunctionDef>,
    pub columns: Vec<Column>,
}

impl Vocabulary {
    pub fn add_sort(&mut self, name: &str, members: Vec<Key>) {
        self.sorts.insert(name.to_string(), members);
    }

    pub fn add_column(&mut self, name: &str, observable: bool, values: Vec<f64>) -> usize {
        self.columns.push(Column {
            name: name.to_string(),
            observable,
            values,
        });
        self.columns.len() - 1
    }

    pub fn function_mut(&mut self, name: &str, arity: usize) -> &mut FunctionDef {
        self.functions
            .entry(name.to_string())
            .or_insert_with(|| FunctionDef::new(arity))
    }

    /// Adds a state-varying function value backed by a new column.
    pub fn define_column(
        &mut self,
        func: &str,
        args: Vec<Key>,
        observable: bool,
        values: Vec<f64>,
    ) -> usize {
        let label = if args.is_empty() {
            func.to_string()
        } else {
            let a: Vec<String> = args.iter().map(|k| k.to_string()).collect();
            format!("{func}({})", a.join(","))
        };
        let col = self.add_column(&label, observable, values);
        let arity = args.len();
        self.function_mut(func, arity)
            .insert(args, Term::Column(col));
        col
    }

    pub fn define_const(&mut self, func: &str, args: Vec<Key>, value: f64) {
        let arity = args.len();
        self.function_mut(func, arity)
            .insert(args, Term::Const(value));
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.sorts
            .values()
            .any(|m| m.iter().any(|k| matches!(k, Key::Sym(s) if s == name)))
    }

    pub(crate) fn reindex(&mut self) {
        for f in self.functions.values_mut() {
            f.reindex();
        }
    }
}

pub fn sym(s: &str) -> Key {
    Key::Sym(s.to_string())
}

/// Finite goal-oriented POMDP with materialized tables.
///
/// Transitions are stored as sparse rows per `(s, a)`, observations as a
/// dense `[s'][a][o]` table. Goal states are sinks and cost nothing.
#[derive(Debug, Clone)]
pub struct GPomdp<T> {
    pub name: String,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub horizon: usize,
    pub vocab: Vocabulary,
    trans: Vec<Vec<(usize, T)>>,
    obs: Vec<T>,
    goal: Vec<bool>,
    init: Belief<T>,
}

/// Mutable builder; `build` validates every model invariant.
#[derive(Debug, Clone)]
pub struct GPomdpBuilder<T> {
    pub name: String,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    pub horizon: usize,
    pub vocab: Vocabulary,
    pub trans: Vec<Vec<(usize, T)>>,
    pub obs: Vec<T>,
    pub goal: Vec<bool>,
    pub init: Vec<(usize, T)>,
}

impl<T: Scalar> GPomdpBuilder<T> {
    pub fn new(
        name: &str,
        states: Vec<String>,
        actions: Vec<String>,
        observations: Vec<String>,
    ) -> Self {
        let (s, a, o) = (states.len(), actions.len(), observations.len());
        Self {
            name: name.to_string(),
            states,
            actions,
            observations,
            horizon: 1,
            vocab: Vocabulary::default(),
            trans: vec![Vec::new(); s * a],
            obs: vec![T::zero(); s * a * o],
            goal: vec![false; s],
            init: Vec::new(),
        }
    }

    pub fn add_transition(&mut self, s: usize, a: usize, next: usize, p: T) {
        if p > T::zero() {
            let row = &mut self.trans[s * self.actions.len() + a];
            match row.iter_mut().find(|(n, _)| *n == next) {
                Some(e) => e.1 = e.1 + p,
                None => row.push((next, p)),
            }
        }
    }

    pub fn set_observation(&mut self, next: usize, a: usize, o: usize, p: T) {
        let (na, no) = (self.actions.len(), self.observations.len());
        self.obs[(next * na + a) * no + o] = p;
    }

    pub fn build(mut self) -> Result<GPomdp<T>, PomdpError> {
        let (ns, na, no) = (
            self.states.len(),
            self.actions.len(),
            self.observations.len(),
        );
        if ns == 0 || na == 0 || no == 0 {
            return Err(PomdpError::InvalidModel(
                "states, actions and observations must be nonempty".into(),
            ));
        }
        if self.horizon == 0 {
            return Err(PomdpError::InvalidModel("horizon must be positive".into()));
        }
        let tol = T::table_tolerance();
        for s in 0..ns {
            for a in 0..na {
                let row = &mut self.trans[s * na + a];
                row.sort_by_key(|e| e.0);
                if let Some(&(n, _)) = row.iter().find(|(n, _)| *n >= ns) {
                    return Err(PomdpError::InvalidModel(format!(
                        "transition to unknown state {n}"
                    )));
                }
                let total: T = row.iter().map(|e| e.1).sum();
                if (total - T::one()).abs() > tol {
                    return Err(PomdpError::InvalidModel(format!(
                        "T({}, {}, .) sums to {}",
                        self.states[s], self.actions[a], total
                    )));
                }
                if self.goal[s] && !(row.len() == 1 && row[0].0 == s) {
                    return Err(PomdpError::InvalidModel(format!(
                        "goal state {} is not a sink under {}",
                        self.states[s], self.actions[a]
                    )));
                }
            }
        }
        for n in 0..ns {
            for a in 0..na {
                let base = (n * na + a) * no;
                let total: T = self.obs[base..base + no].iter().copied().sum();
                if (total - T::one()).abs() > tol {
                    return Err(PomdpError::InvalidModel(format!(
                        "O({}, {}, .) sums to {}",
                        self.states[n], self.actions[a], total
                    )));
                }
                if self.obs[base..base + no].iter().any(|p| *p < T::zero()) {
                    return Err(PomdpError::InvalidModel(
                        "negative observation probability".into(),
                    ));
                }
            }
        }
        let init = Belief::from_entries(ns, self.init)?;
        for c in &self.vocab.columns {
            if c.values.len() != ns {
                return Err(PomdpError::InvalidModel(format!(
                    "column {} has {} values for {} states",
                    c.name,
                    c.values.len(),
                    ns
                )));
            }
        }
        self.vocab.reindex();
        Ok(GPomdp {
            name: self.name,
            states: self.states,
            actions: self.actions,
            observations: self.observations,
            horizon: self.horizon,
            vocab: self.vocab,
            trans: self.trans,
            obs: self.obs,
            goal: self.goal,
            init,
        })
    }
}

impl<T: Scalar> GPomdp<T> {
    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn transition_row(&self, s: usize, a: usize) -> &[(usize, T)] {
        &self.trans[s * self.actions.len() + a]
    }

    #[inline]
    pub fn observation_prob(&self, next: usize, a: usize, o: usize) -> T {
        let (na, no) = (self.actions.len(), self.observations.len());
        self.obs[(next * na + a) * no + o]
    }

    pub fn observation_row(&self, next: usize, a: usize) -> &[T] {
        let (na, no) = (self.actions.len(), self.observations.len());
        let base = (next * na + a) * no;
        &self.obs[base..base + no]
    }

    #[inline]
    pub fn is_goal(&self, s: usize) -> bool {
        self.goal[s]
    }

    pub fn goal_mask(&self) -> &[bool] {
        &self.goal
    }

    pub fn initial_belief(&self) -> &Belief<T> {
        &self.init
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn observation_index(&self, name: &str) -> Option<usize> {
        self.observations.iter().position(|o| o == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// Same model with a different horizon.
    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon.max(1);
        self
    }

    /// Same model with a different initial belief.
    pub fn with_initial_belief(mut self, b: Belief<T>) -> Self {
        self.init = b;
        self
    }
}
