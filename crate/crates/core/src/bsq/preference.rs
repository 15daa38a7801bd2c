use super::ast::PreferenceAst;
use super::compile::compile_rules;
use super::parser::parse_ast;
use super::BsqError;
use crate::interval::{Bound, IntervalSet, ParamBox, ParamDim, ParamSpace};
use crate::pomdp::{Belief, GPomdp};
use crate::scalar::Scalar;

/// Right-hand side of a probability-threshold query.
#[derive(Debug, Clone, PartialEq)]
pub enum Rhs<T> {
    Param(usize),
    Lit(T),
}

/// One grounded belief-state query.
#[derive(Debug, Clone, PartialEq)]
pub enum Atom<T> {
    /// `P[φ] op rhs`, `φ` compiled to a state mask.
    Prob {
        mask: Vec<bool>,
        op: Bound,
        rhs: Rhs<T>,
    },
    /// `P[φ] == 1`: every state with mass satisfies `φ`.
    Certain { mask: Vec<bool> },
    /// `P[v op theta] == 1` over an observable per-state value `v`.
    Observable {
        values: Vec<f64>,
        op: Bound,
        dim: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Condition<T> {
    Catchall,
    All(Vec<Atom<T>>),
    Any(Vec<Atom<T>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T> {
    pub condition: Condition<T>,
    pub action: usize,
    pub action_name: String,
}

/// What an atom says about the parameters at a fixed belief: either a
/// constant, or `theta[dim] < bound` (`below`) / `theta[dim] >= bound`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AtomValue<T> {
    Const(bool),
    Half { dim: usize, below: bool, bound: T },
}

impl<T: Scalar> AtomValue<T> {
    #[inline]
    pub fn holds(&self, theta: &[T]) -> bool {
        match *self {
            AtomValue::Const(c) => c,
            AtomValue::Half { dim, below, bound } => {
                if below {
                    theta[dim] < bound
                } else {
                    theta[dim] >= bound
                }
            }
        }
    }
}

/// Query probabilities are rounded to multiples of `1 / QUERY_SCALE` so that
/// one posterior level reached along different filtering paths yields one
/// threshold rather than several bounds a few ulps apart.
pub const QUERY_SCALE: f64 = 1e12;

#[inline]
pub fn snap_probability<T: Scalar>(q: T) -> T {
    T::of((q.as_f64() * QUERY_SCALE).round() / QUERY_SCALE)
}

fn apply<T: Scalar>(op: Bound, a: T, b: T) -> bool {
    match op {
        Bound::Lt => a < b,
        Bound::Le => a <= b,
        Bound::Gt => a > b,
        Bound::Ge => a >= b,
    }
}

impl<T: Scalar> Atom<T> {
    pub fn value(&self, b: &Belief<T>) -> AtomValue<T> {
        match self {
            Atom::Prob { mask, op, rhs } => {
                let q = snap_probability(b.mass(mask));
                match rhs {
                    // `q > theta` holds for theta in [lo, q); `q < theta` for [q, hi)
                    Rhs::Param(dim) => AtomValue::Half {
                        dim: *dim,
                        below: !op.is_lower(),
                        bound: q,
                    },
                    Rhs::Lit(c) => AtomValue::Const(apply(*op, q, *c)),
                }
            }
            Atom::Certain { mask } => AtomValue::Const(b.support().iter().all(|&(s, _)| mask[s])),
            Atom::Observable { values, op, dim } => {
                let vs = b.support().iter().map(|&(s, _)| values[s]);
                if op.is_lower() {
                    // v < theta for every state: theta >= max v
                    let m = vs.fold(f64::NEG_INFINITY, f64::max);
                    AtomValue::Half {
                        dim: *dim,
                        below: false,
                        bound: T::of(m),
                    }
                } else {
                    let m = vs.fold(f64::INFINITY, f64::min);
                    AtomValue::Half {
                        dim: *dim,
                        below: true,
                        bound: T::of(m),
                    }
                }
            }
        }
    }
}

/// Result of firing a preference on a belief.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<T> {
    pub rule: usize,
    pub action: usize,
    pub interval: IntervalSet<T>,
}

/// An ordered rule list over declared parameters, grounded against a model.
#[derive(Debug, Clone)]
pub struct BsqPreference<T> {
    pub name: String,
    pub space: ParamSpace<T>,
    pub ast: PreferenceAst,
    pub rules: Vec<Rule<T>>,
}

/// Parses, unrolls and grounds preference text against `model`.
pub fn parse_preference<T: Scalar>(
    text: &str,
    model: &GPomdp<T>,
) -> Result<BsqPreference<T>, BsqError> {
    let ast = parse_ast(text, &model.vocab)?;
    BsqPreference::from_ast(ast, model)
}

impl<T: Scalar> BsqPreference<T> {
    pub fn from_ast(ast: PreferenceAst, model: &GPomdp<T>) -> Result<Self, BsqError> {
        let space = ParamSpace::new(
            ast.params
                .iter()
                .map(|p| ParamDim {
                    name: p.name.clone(),
                    lo: T::of(p.lo),
                    hi: T::of(p.hi),
                })
                .collect(),
        )?;
        let rules = compile_rules(&ast, model)?;
        Ok(Self {
            name: ast.name.clone(),
            space,
            ast,
            rules,
        })
    }

    pub fn n_params(&self) -> usize {
        self.space.len()
    }

    pub fn n_rules(&self) -> usize {
        self.rules.len()
    }

    fn check(&self, theta: &[T]) -> Result<(), BsqError> {
        if theta.len() != self.space.len() {
            return Err(BsqError::DimensionMismatch {
                expected: self.space.len(),
                found: theta.len(),
            });
        }
        Ok(())
    }

    pub fn eval_condition(&self, c: &Condition<T>, b: &Belief<T>, theta: &[T]) -> bool {
        match c {
            Condition::Catchall => true,
            Condition::All(atoms) => atoms.iter().all(|a| a.value(b).holds(theta)),
            Condition::Any(atoms) => atoms.iter().any(|a| a.value(b).holds(theta)),
        }
    }

    /// `I(Ψ)` at `b`: the parameter values for which the condition holds.
    pub fn interval_of(&self, c: &Condition<T>, b: &Belief<T>) -> IntervalSet<T> {
        match c {
            Condition::Catchall => self.space.full(),
            Condition::All(atoms) => {
                let mut bx = self.space.full_box();
                for a in atoms {
                    match a.value(b) {
                        AtomValue::Const(true) => {}
                        AtomValue::Const(false) => return IntervalSet::empty(self.space.len()),
                        AtomValue::Half { dim, below, bound } => {
                            if below {
                                bx.hi[dim] = bx.hi[dim].min(bound);
                            } else {
                                bx.lo[dim] = bx.lo[dim].max(bound);
                            }
                        }
                    }
                }
                IntervalSet::from_box(bx)
            }
            Condition::Any(atoms) => {
                let mut boxes: Vec<ParamBox<T>> = Vec::new();
                for a in atoms {
                    match a.value(b) {
                        AtomValue::Const(true) => return self.space.full(),
                        AtomValue::Const(false) => {}
                        AtomValue::Half { dim, below, bound } => {
                            boxes.push(self.space.half_space(dim, below, bound))
                        }
                    }
                }
                IntervalSet::from_boxes(self.space.len(), boxes)
                    .expect("boxes come from the preference's own space")
            }
        }
    }

    /// Index and action of the first rule whose condition holds.
    pub fn choose_rule(&self, b: &Belief<T>, theta: &[T]) -> (usize, usize) {
        for (i, r) in self.rules.iter().enumerate() {
            if self.eval_condition(&r.condition, b, theta) {
                return (i, r.action);
            }
        }
        unreachable!("the last rule is a catchall")
    }

    /// `I(Ψ_i) ∖ ⋃_{j<i} I(Ψ_j)` at `b`.
    pub fn effective_interval(&self, rule: usize, b: &Belief<T>) -> IntervalSet<T> {
        let mut region = self.interval_of(&self.rules[rule].condition, b);
        for r in &self.rules[..rule] {
            if region.is_empty() {
                break;
            }
            let earlier = self.interval_of(&r.condition, b);
            if !earlier.is_empty() {
                region = region.subtract(&earlier).expect("same space");
            }
        }
        region
    }

    pub fn effective_intervals(&self, b: &Belief<T>) -> Vec<IntervalSet<T>> {
        let mut covered = IntervalSet::empty(self.space.len());
        let mut out = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let own = self.interval_of(&r.condition, b);
            out.push(own.subtract(&covered).expect("same space"));
            covered = covered.union(&own).expect("same space");
        }
        out
    }

    /// Fires the preference and returns the rule's effective interval, which
    /// contains `theta`.
    pub fn select_rule(&self, b: &Belief<T>, theta: &[T]) -> Result<Selection<T>, BsqError> {
        self.check(theta)?;
        let (rule, action) = self.choose_rule(b, theta);
        Ok(Selection {
            rule,
            action,
            interval: self.effective_interval(rule, b),
        })
    }

    /// Intersection of the effective intervals along a `(rule, belief)` path.
    pub fn leaf_interval<'a, I>(&self, trace: I) -> IntervalSet<T>
    where
        I: IntoIterator<Item = (usize, &'a Belief<T>)>,
        T: 'a,
    {
        let mut region = self.space.full();
        for (rule, b) in trace {
            let e = self.effective_interval(rule, b);
            region = region.intersect(&e).expect("same space");
            if region.is_empty() {
                break;
            }
        }
        region
    }

    /// Canonical text form of the preference.
    pub fn to_source(&self) -> String {
        self.ast.to_string()
    }
}
