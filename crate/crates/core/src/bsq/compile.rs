//! Grounding of parsed preferences against a model: loops and condition
//! quantifiers are unrolled in declared constant order, formulas are reduced
//! to per-state masks or per-state values.

use super::ast::*;
use super::preference::{Atom, Condition, Rhs, Rule};
use super::BsqError;
use crate::interval::Bound;
use crate::pomdp::{GPomdp, Key, Term, Vocabulary};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
enum Val {
    Num(f64),
    Sym(String),
    States(Vec<f64>),
}

struct Ctx<'a> {
    vocab: &'a Vocabulary,
    n: usize,
    env: Vec<(String, Key)>,
    params: &'a [ParamDecl],
    /// Set when evaluation read a column that is not observable.
    hidden: bool,
}

fn bad(msg: impl Into<String>) -> BsqError {
    BsqError::InvalidQuery(msg.into())
}

fn key_val(k: &Key) -> Val {
    match k {
        Key::Int(i) => Val::Num(*i as f64),
        Key::Sym(s) => Val::Sym(s.clone()),
    }
}

fn truthy(v: f64) -> bool {
    v != 0.0
}

fn b2f(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Ctx<'_> {
    fn lookup_env(&self, name: &str) -> Option<&Key> {
        self.env
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, k)| k)
    }

    fn is_param(&self, name: &str) -> bool {
        self.lookup_env(name).is_none() && self.params.iter().any(|p| p.name == name)
    }

    fn mentions_param(&self, f: &Formula, shadow: &mut Vec<String>) -> bool {
        match f {
            Formula::Name(n) => !shadow.contains(n) && self.is_param(n),
            Formula::Num(_) | Formula::Bool(_) => false,
            Formula::App(_, args) => args.iter().any(|a| self.mentions_param(a, shadow)),
            Formula::Abs(x) | Formula::Neg(x) | Formula::Not(x) => self.mentions_param(x, shadow),
            Formula::Arith(_, l, r) | Formula::Cmp(_, l, r) => {
                self.mentions_param(l, shadow) || self.mentions_param(r, shadow)
            }
            Formula::And(xs) | Formula::Or(xs) => xs.iter().any(|x| self.mentions_param(x, shadow)),
            Formula::Quant(_, bs, body) => {
                let k = shadow.len();
                shadow.extend(bs.iter().map(|b| b.var.clone()));
                let r = self.mentions_param(body, shadow);
                shadow.truncate(k);
                r
            }
        }
    }

    fn term(&mut self, t: Term) -> Val {
        match t {
            Term::Const(v) => Val::Num(v),
            Term::Column(c) => {
                let col = &self.vocab.columns[c];
                if !col.observable {
                    self.hidden = true;
                }
                Val::States(col.values.clone())
            }
        }
    }

    fn eval(&mut self, f: &Formula) -> Result<Val, BsqError> {
        Ok(match f {
            Formula::Num(v) => Val::Num(*v),
            Formula::Bool(b) => Val::Num(b2f(*b)),
            Formula::Name(n) => {
                if let Some(k) = self.lookup_env(n) {
                    key_val(k)
                } else if self.is_param(n) {
                    return Err(bad(format!(
                        "parameter '{n}' may only be a comparison operand in a '== 1' query"
                    )));
                } else if self.vocab.is_constant(n) {
                    Val::Sym(n.clone())
                } else if let Some(fd) = self.vocab.functions.get(n) {
                    let t = fd.lookup(&[]);
                    self.term(t)
                } else {
                    return Err(BsqError::UnknownSymbol {
                        name: n.clone(),
                        line: 0,
                        col: 0,
                    });
                }
            }
            Formula::App(name, args) => {
                let mut keys = Vec::with_capacity(args.len());
                for a in args {
                    keys.push(match self.eval(a)? {
                        Val::Num(v) if v.fract() == 0.0 => Key::Int(v as i64),
                        Val::Num(v) => {
                            return Err(bad(format!("non-integer argument {v} to '{name}'")))
                        }
                        Val::Sym(s) => Key::Sym(s),
                        Val::States(_) => {
                            return Err(bad(format!(
                                "arguments of '{name}' must not depend on the hidden state"
                            )))
                        }
                    });
                }
                let fd = self
                    .vocab
                    .functions
                    .get(name)
                    .ok_or_else(|| BsqError::UnknownSymbol {
                        name: name.clone(),
                        line: 0,
                        col: 0,
                    })?;
                let t = fd.lookup(&keys);
                self.term(t)
            }
            Formula::Abs(x) => self.map1(x, f64::abs)?,
            Formula::Neg(x) => self.map1(x, |v| -v)?,
            Formula::Not(x) => self.map1(x, |v| b2f(!truthy(v)))?,
            Formula::Arith(op, l, r) => {
                let g = match op {
                    ArithOp::Add => |a: f64, b: f64| a + b,
                    ArithOp::Sub => |a: f64, b: f64| a - b,
                    ArithOp::Mul => |a: f64, b: f64| a * b,
                };
                let (a, b) = (self.eval(l)?, self.eval(r)?);
                self.zip(a, b, g)?
            }
            Formula::Cmp(op, l, r) => {
                let (a, b) = (self.eval(l)?, self.eval(r)?);
                match (&a, &b, op) {
                    (Val::Sym(x), Val::Sym(y), CmpOp::Eq) => Val::Num(b2f(x == y)),
                    (Val::Sym(x), Val::Sym(y), CmpOp::Ne) => Val::Num(b2f(x != y)),
                    (Val::Sym(_), _, _) | (_, Val::Sym(_), _) => {
                        return Err(bad("constants can only be compared with == or !="))
                    }
                    _ => {
                        let op = *op;
                        self.zip(a, b, move |x, y| b2f(op.apply(x, y)))?
                    }
                }
            }
            Formula::And(xs) => self.fold(xs, true)?,
            Formula::Or(xs) => self.fold(xs, false)?,
            Formula::Quant(kind, binders, body) => {
                let all = *kind == QuantKind::Forall;
                let mut acc = Val::Num(b2f(all));
                self.quant(binders, 0, &mut |ctx| {
                    let v = ctx.eval(body)?;
                    acc = ctx.zip(acc.clone(), v, |a, b| {
                        if all {
                            b2f(truthy(a) && truthy(b))
                        } else {
                            b2f(truthy(a) || truthy(b))
                        }
                    })?;
                    Ok(())
                })?;
                acc
            }
        })
    }

    fn fold(&mut self, xs: &[Formula], all: bool) -> Result<Val, BsqError> {
        let mut acc = Val::Num(b2f(all));
        for x in xs {
            let v = self.eval(x)?;
            acc = self.zip(acc, v, |a, b| {
                if all {
                    b2f(truthy(a) && truthy(b))
                } else {
                    b2f(truthy(a) || truthy(b))
                }
            })?;
        }
        Ok(acc)
    }

    /// Calls `f` once per binding of `binders[i..]`, in declared order.
    fn quant(
        &mut self,
        binders: &[Binder],
        i: usize,
        f: &mut dyn FnMut(&mut Self) -> Result<(), BsqError>,
    ) -> Result<(), BsqError> {
        if i == binders.len() {
            return f(self);
        }
        let members = self
            .vocab
            .sorts
            .get(&binders[i].sort)
            .cloned()
            .ok_or_else(|| BsqError::UnknownSymbol {
                name: binders[i].sort.clone(),
                line: 0,
                col: 0,
            })?;
        for m in members {
            self.env.push((binders[i].var.clone(), m));
            let r = self.quant(binders, i + 1, f);
            self.env.pop();
            r?;
        }
        Ok(())
    }

    fn map1(&mut self, x: &Formula, g: impl Fn(f64) -> f64) -> Result<Val, BsqError> {
        Ok(match self.eval(x)? {
            Val::Num(v) => Val::Num(g(v)),
            Val::States(vs) => Val::States(vs.into_iter().map(g).collect()),
            Val::Sym(_) => return Err(bad("arithmetic on a constant name")),
        })
    }

    fn zip(&self, a: Val, b: Val, g: impl Fn(f64, f64) -> f64) -> Result<Val, BsqError> {
        Ok(match (a, b) {
            (Val::Num(x), Val::Num(y)) => Val::Num(g(x, y)),
            (Val::Num(x), Val::States(ys)) => {
                Val::States(ys.into_iter().map(|y| g(x, y)).collect())
            }
            (Val::States(xs), Val::Num(y)) => {
                Val::States(xs.into_iter().map(|x| g(x, y)).collect())
            }
            (Val::States(xs), Val::States(ys)) => {
                Val::States(xs.into_iter().zip(ys).map(|(x, y)| g(x, y)).collect())
            }
            _ => return Err(bad("arithmetic on a constant name")),
        })
    }

    fn values(&self, v: Val) -> Result<Vec<f64>, BsqError> {
        match v {
            Val::Num(x) => Ok(vec![x; self.n]),
            Val::States(xs) => Ok(xs),
            Val::Sym(s) => Err(bad(format!("'{s}' is not a value"))),
        }
    }

    fn mask(&mut self, f: &Formula) -> Result<Vec<bool>, BsqError> {
        let v = self.eval(f)?;
        Ok(self.values(v)?.into_iter().map(truthy).collect())
    }

    fn param_index(&self, name: &str) -> usize {
        self.params
            .iter()
            .position(|p| p.name == name)
            .expect("resolved by the parser")
    }

    fn atoms<T: Scalar>(&mut self, a: &CondAtom, out: &mut Vec<Atom<T>>) -> Result<(), BsqError> {
        match a {
            CondAtom::Forall { binders, atom } => {
                let mut collected = Vec::new();
                self.quant(binders, 0, &mut |ctx| ctx.atoms(atom, &mut collected))?;
                out.extend(collected);
                Ok(())
            }
            CondAtom::Query { formula, op, rhs } => {
                let with_param = self.mentions_param(formula, &mut Vec::new());
                if *op == CmpOp::Eq {
                    if with_param {
                        out.push(self.observable(formula)?);
                    } else {
                        out.push(Atom::Certain {
                            mask: self.mask(formula)?,
                        });
                    }
                    return Ok(());
                }
                if with_param {
                    return Err(bad(
                        "parameters may only appear inside a query of the form P[v op theta] == 1",
                    ));
                }
                let bound = to_bound(*op)?;
                let rhs = match rhs {
                    Operand::Param(p) => Rhs::Param(self.param_index(p)),
                    Operand::Num(v) => Rhs::Lit(T::of(*v)),
                };
                out.push(Atom::Prob {
                    mask: self.mask(formula)?,
                    op: bound,
                    rhs,
                });
                Ok(())
            }
        }
    }

    fn observable<T: Scalar>(&mut self, f: &Formula) -> Result<Atom<T>, BsqError> {
        let Formula::Cmp(op, l, r) = f else {
            return Err(bad(
                "a parameterized '== 1' query must be a single comparison",
            ));
        };
        let as_param = |x: &Formula| match x {
            Formula::Name(n) if self.is_param(n) => Some(self.param_index(n)),
            _ => None,
        };
        let (dim, side, op) = match (as_param(l), as_param(r)) {
            (None, Some(d)) => (d, l, *op),
            (Some(d), None) => (d, r, op.flip()),
            _ => {
                return Err(bad(
                    "exactly one side of the comparison must be a parameter",
                ))
            }
        };
        if self.mentions_param(side, &mut Vec::new()) {
            return Err(bad(
                "a parameter cannot be used inside a function argument or term",
            ));
        }
        self.hidden = false;
        let v = self.eval(side)?;
        if self.hidden {
            return Err(bad(
                "parameterized '== 1' queries must be over observable variables",
            ));
        }
        Ok(Atom::Observable {
            values: self.values(v)?,
            op: to_bound(op)?,
            dim,
        })
    }
}

fn to_bound(op: CmpOp) -> Result<Bound, BsqError> {
    Ok(match op {
        CmpOp::Lt => Bound::Lt,
        CmpOp::Le => Bound::Le,
        CmpOp::Gt => Bound::Gt,
        CmpOp::Ge => Bound::Ge,
        CmpOp::Eq | CmpOp::Ne => return Err(bad("equality against a parameter is not allowed")),
    })
}

/// Unrolls and grounds every rule of `ast` against `model`.
pub(crate) fn compile_rules<T: Scalar>(
    ast: &PreferenceAst,
    model: &GPomdp<T>,
) -> Result<Vec<Rule<T>>, BsqError> {
    let mut ctx = Ctx {
        vocab: &model.vocab,
        n: model.n_states(),
        env: Vec::new(),
        params: &ast.params,
        hidden: false,
    };
    let mut rules = Vec::new();
    unroll(&mut ctx, &ast.items, model, &mut rules)?;
    match rules.last() {
        Some(r) if matches!(r.condition, Condition::Catchall) => Ok(rules),
        _ => Err(BsqError::MissingElse),
    }
}

fn unroll<T: Scalar>(
    ctx: &mut Ctx<'_>,
    items: &[Item],
    model: &GPomdp<T>,
    rules: &mut Vec<Rule<T>>,
) -> Result<(), BsqError> {
    for item in items {
        match item {
            Item::For { var, sort, body } => {
                let members =
                    ctx.vocab
                        .sorts
                        .get(sort)
                        .cloned()
                        .ok_or_else(|| BsqError::UnknownSymbol {
                            name: sort.clone(),
                            line: 0,
                            col: 0,
                        })?;
                for m in members {
                    ctx.env.push((var.clone(), m));
                    let r = unroll(ctx, body, model, rules);
                    ctx.env.pop();
                    r?;
                }
            }
            Item::Rule(r) => {
                let action_name = ground_action(ctx, &r.action);
                let action = model
                    .action_index(&action_name)
                    .ok_or_else(|| BsqError::UnknownAction(action_name.clone()))?;
                let condition = match &r.cond {
                    None => Condition::Catchall,
                    Some(Cond::And(atoms)) => {
                        let mut out = Vec::new();
                        for a in atoms {
                            ctx.atoms(a, &mut out)?;
                        }
                        Condition::All(out)
                    }
                    Some(Cond::Or(atoms)) => {
                        let mut out = Vec::new();
                        for a in atoms {
                            ctx.atoms(a, &mut out)?;
                        }
                        Condition::Any(out)
                    }
                };
                rules.push(Rule {
                    condition,
                    action,
                    action_name,
                });
            }
        }
    }
    Ok(())
}

fn ground_action(ctx: &Ctx<'_>, a: &ActionAst) -> String {
    if a.args.is_empty() {
        return a.name.clone();
    }
    let args: Vec<String> = a
        .args
        .iter()
        .map(|x| match ctx.lookup_env(x) {
            Some(k) => k.to_string(),
            None => x.clone(),
        })
        .collect();
    format!("{}({})", a.name, args.join(","))
}
