//! Syntax tree of the preference language and its pretty-printer.
//!
//! Printing a tree and parsing the output yields an equal tree.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceAst {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Rule(RuleAst),
    /// Unrolled over the members of `sort` in declaration order.
    For {
        var: String,
        sort: String,
        body: Vec<Item>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    If,
    Elif,
    Else,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleAst {
    pub kind: RuleKind,
    /// `None` only for `else`.
    pub cond: Option<Cond>,
    pub action: ActionAst,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    And(Vec<CondAtom>),
    Or(Vec<CondAtom>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CondAtom {
    Query {
        formula: Formula,
        op: CmpOp,
        rhs: Operand,
    },
    /// Conjunction of `atom` over every binding.
    Forall {
        binders: Vec<Binder>,
        atom: Box<CondAtom>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Param(String),
    Num(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binder {
    pub var: String,
    pub sort: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    /// `a op b` rewritten as `b flip(op) a`.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
            o => o,
        }
    }

    pub fn apply(self, a: f64, b: f64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantKind {
    Exists,
    Forall,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    Num(f64),
    Bool(bool),
    /// Bound variable, parameter, constant, or nullary function.
    Name(String),
    App(String, Vec<Formula>),
    Abs(Box<Formula>),
    Neg(Box<Formula>),
    Arith(ArithOp, Box<Formula>, Box<Formula>),
    Cmp(CmpOp, Box<Formula>, Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Quant(QuantKind, Vec<Binder>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionAst {
    pub name: String,
    pub args: Vec<String>,
}

impl fmt::Display for ActionAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(", "))?;
        }
        Ok(())
    }
}

const P_QUANT: u8 = 0;
const P_OR: u8 = 1;
const P_AND: u8 = 2;
const P_NOT: u8 = 3;
const P_CMP: u8 = 4;
const P_ADD: u8 = 5;
const P_MUL: u8 = 6;
const P_NEG: u8 = 7;
const P_ATOM: u8 = 8;

impl Formula {
    fn prec(&self) -> u8 {
        match self {
            Formula::Quant(..) => P_QUANT,
            Formula::Or(_) => P_OR,
            Formula::And(_) => P_AND,
            Formula::Not(_) => P_NOT,
            Formula::Cmp(..) => P_CMP,
            Formula::Arith(ArithOp::Mul, ..) => P_MUL,
            Formula::Arith(..) => P_ADD,
            Formula::Neg(_) => P_NEG,
            _ => P_ATOM,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, ctx: u8) -> fmt::Result {
        let wrap = self.prec() < ctx;
        if wrap {
            f.write_str("(")?;
        }
        match self {
            Formula::Num(v) => write!(f, "{v}")?,
            Formula::Bool(v) => write!(f, "{v}")?,
            Formula::Name(n) => f.write_str(n)?,
            Formula::App(n, args) => {
                write!(f, "{n}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(f, P_QUANT)?;
                }
                f.write_str(")")?;
            }
            Formula::Abs(x) => {
                f.write_str("abs(")?;
                x.write(f, P_QUANT)?;
                f.write_str(")")?;
            }
            Formula::Neg(x) => {
                f.write_str("-")?;
                x.write(f, P_NEG)?;
            }
            Formula::Arith(op, l, r) => {
                let (sym, lp, rp) = match op {
                    ArithOp::Add => ("+", P_ADD, P_MUL),
                    ArithOp::Sub => ("-", P_ADD, P_MUL),
                    ArithOp::Mul => ("*", P_MUL, P_NEG),
                };
                l.write(f, lp)?;
                write!(f, " {sym} ")?;
                r.write(f, rp)?;
            }
            Formula::Cmp(op, l, r) => {
                l.write(f, P_ADD)?;
                write!(f, " {} ", op.symbol())?;
                r.write(f, P_ADD)?;
            }
            Formula::And(xs) => join(f, xs, " and ", P_NOT)?,
            Formula::Or(xs) => join(f, xs, " or ", P_AND)?,
            Formula::Not(x) => {
                f.write_str("not ")?;
                x.write(f, P_NOT)?;
            }
            Formula::Quant(kind, binders, body) => {
                f.write_str(match kind {
                    QuantKind::Exists => "exists ",
                    QuantKind::Forall => "forall ",
                })?;
                write_binders(f, binders)?;
                f.write_str(": ")?;
                body.write(f, P_QUANT)?;
            }
        }
        if wrap {
            f.write_str(")")?;
        }
        Ok(())
    }
}

fn join(f: &mut fmt::Formatter<'_>, xs: &[Formula], sep: &str, ctx: u8) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        x.write(f, ctx)?;
    }
    Ok(())
}

fn write_binders(f: &mut fmt::Formatter<'_>, binders: &[Binder]) -> fmt::Result {
    for (i, b) in binders.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{} in {}", b.var, b.sort)?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, P_QUANT)
    }
}

impl fmt::Display for CondAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CondAtom::Query { formula, op, rhs } => {
                write!(f, "P[{formula}] {} ", op.symbol())?;
                match rhs {
                    Operand::Param(p) => f.write_str(p),
                    Operand::Num(v) => write!(f, "{v}"),
                }
            }
            CondAtom::Forall { binders, atom } => {
                f.write_str("forall ")?;
                write_binders(f, binders)?;
                write!(f, ": {atom}")
            }
        }
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (atoms, sep) = match self {
            Cond::And(a) => (a, " and "),
            Cond::Or(a) => (a, " or "),
        };
        for (i, a) in atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(sep)?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

fn write_items(f: &mut fmt::Formatter<'_>, items: &[Item], depth: usize) -> fmt::Result {
    let pad = "    ".repeat(depth);
    for item in items {
        match item {
            Item::Rule(r) => match (&r.kind, &r.cond) {
                (RuleKind::Else, _) | (_, None) => writeln!(f, "{pad}else -> {};", r.action)?,
                (RuleKind::If, Some(c)) => writeln!(f, "{pad}if {c} -> {};", r.action)?,
                (RuleKind::Elif, Some(c)) => writeln!(f, "{pad}elif {c} -> {};", r.action)?,
            },
            Item::For { var, sort, body } => {
                writeln!(f, "{pad}for {var} in {sort} {{")?;
                write_items(f, body, depth + 1)?;
                writeln!(f, "{pad}}}")?;
            }
        }
    }
    Ok(())
}

impl fmt::Display for PreferenceAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pref {}(", self.name)?;
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} in [{}, {}]", p.name, p.lo, p.hi)?;
        }
        f.write_str(") {\n")?;
        write_items(f, &self.items, 1)?;
        f.write_str("}\n")
    }
}
