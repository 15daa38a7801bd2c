//! Recursive-descent parser for the preference language.
//!
//! ```text
//! pref      := "pref" IDENT "(" param ("," param)* ")" "{" item* "}"
//! param     := IDENT "in" "[" number "," number "]"
//! item      := rule | "for" IDENT "in" IDENT "{" item* "}"
//! rule      := ("if" | "elif") cond "->" action ";" | "else" "->" action ";"
//! cond      := catom ("and" catom)* | catom ("or" catom)*
//! catom     := "P" "[" formula "]" cmp (IDENT | number)
//!            | "forall" binders ":" catom
//! action    := IDENT ( "(" (IDENT ("," IDENT)*)? ")" )?
//! formula   := disj
//! disj      := conj ("or" conj)*
//! conj      := neg ("and" neg)*
//! neg       := "not" neg | ("exists" | "forall") binders ":" formula | compare
//! compare   := sum (cmp sum)?
//! sum       := prod (("+" | "-") prod)*
//! prod      := unary ("*" unary)*
//! unary     := "-" unary | primary
//! primary   := number | "true" | "false" | "(" formula ")" | "abs" "(" formula ")"
//!            | IDENT ( "(" (formula ("," formula)*)? ")" )?
//! binders   := IDENT "in" IDENT ("," IDENT "in" IDENT)*
//! cmp       := "<" | "<=" | ">" | ">=" | "==" | "!="
//! ```
//! `#` and `//` start comments. `if` may only open the first rule.

use std::collections::HashSet;

use super::ast::*;
use super::BsqError;
use crate::pomdp::Vocabulary;

const KEYWORDS: &[&str] = &[
    "pref", "if", "elif", "else", "for", "in", "forall", "exists", "and", "or", "not", "true",
    "false", "abs", "P",
];

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Punct(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const PUNCT: &[&str] = &[
    "->", "<=", ">=", "==", "!=", "(", ")", "[", "]", "{", "}", ",", ";", ":", "+", "-", "*", "<",
    ">",
];

fn lex(src: &str) -> Result<Vec<Token>, BsqError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start_col = col;
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - s;
            out.push(Token {
                tok: Tok::Ident(chars[s..i].iter().collect()),
                line,
                col: start_col,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit()))
        {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '-' || chars[i] == '+') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            let v = text.parse::<f64>().map_err(|_| BsqError::Syntax {
                line,
                col: start_col,
                msg: format!("malformed number '{text}'"),
            })?;
            out.push(Token {
                tok: Tok::Num(v),
                line,
                col: start_col,
            });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        match PUNCT.iter().find(|p| rest.starts_with(**p)) {
            Some(p) => {
                i += p.len();
                col += p.len();
                out.push(Token {
                    tok: Tok::Punct(p),
                    line,
                    col: start_col,
                });
            }
            None => {
                return Err(BsqError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character '{c}'"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    vocab: &'a Vocabulary,
    params: HashSet<String>,
    bound: Vec<String>,
    rules_seen: usize,
    else_seen: bool,
}

/// Parses preference text, resolving every symbol against `vocab`.
pub fn parse_ast(src: &str, vocab: &Vocabulary) -> Result<PreferenceAst, BsqError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        vocab,
        params: HashSet::new(),
        bound: Vec::new(),
        rules_seen: 0,
        else_seen: false,
    };
    let ast = p.preference()?;
    if !p.else_seen {
        return Err(BsqError::MissingElse);
    }
    Ok(ast)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, BsqError> {
        let (line, col) = self.here();
        Err(BsqError::Syntax {
            line,
            col,
            msg: msg.into(),
        })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Num(v) => format!("'{v}'"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), BsqError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(format!("expected '{p}', found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<(), BsqError> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(format!("expected '{k}', found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> Result<String, BsqError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                Ok(s)
            }
            _ => self.err(format!("expected identifier, found {}", self.describe())),
        }
    }

    fn signed_number(&mut self) -> Result<f64, BsqError> {
        let neg = self.eat_punct("-");
        match *self.peek() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            _ => self.err(format!("expected number, found {}", self.describe())),
        }
    }

    fn preference(&mut self) -> Result<PreferenceAst, BsqError> {
        self.expect_kw("pref")?;
        let name = self.ident()?;
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let (line, col) = self.here();
                let pname = self.ident()?;
                self.expect_kw("in")?;
                self.expect_punct("[")?;
                let lo = self.signed_number()?;
                self.expect_punct(",")?;
                let hi = self.signed_number()?;
                self.expect_punct("]")?;
                if !(lo < hi) {
                    return Err(BsqError::Syntax {
                        line,
                        col,
                        msg: format!("empty domain for '{pname}'"),
                    });
                }
                if !self.params.insert(pname.clone()) {
                    return Err(BsqError::Syntax {
                        line,
                        col,
                        msg: format!("duplicate parameter '{pname}'"),
                    });
                }
                params.push(ParamDecl {
                    name: pname,
                    lo,
                    hi,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let items = self.items()?;
        self.expect_punct("}")?;
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {} after preference", self.describe()));
        }
        Ok(PreferenceAst {
            name,
            params,
            items,
        })
    }

    fn items(&mut self) -> Result<Vec<Item>, BsqError> {
        let mut items = Vec::new();
        while !self.is_punct("}") && *self.peek() != Tok::Eof {
            if self.else_seen {
                return self.err("no rules may follow 'else'");
            }
            if self.eat_kw("for") {
                let var = self.ident()?;
                self.expect_kw("in")?;
                let sort = self.sort_name()?;
                self.expect_punct("{")?;
                self.bound.push(var.clone());
                let body = self.items()?;
                self.bound.pop();
                self.expect_punct("}")?;
                items.push(Item::For { var, sort, body });
            } else {
                items.push(Item::Rule(self.rule()?));
            }
        }
        Ok(items)
    }

    fn sort_name(&mut self) -> Result<String, BsqError> {
        let (line, col) = self.here();
        let sort = self.ident()?;
        if !self.vocab.sorts.contains_key(&sort) {
            return Err(BsqError::UnknownSymbol {
                name: sort,
                line,
                col,
            });
        }
        Ok(sort)
    }

    fn rule(&mut self) -> Result<RuleAst, BsqError> {
        let first = self.rules_seen == 0;
        let kind = if self.is_kw("if") {
            if !first {
                return self.err("'if' may only open the first rule; use 'elif'");
            }
            RuleKind::If
        } else if self.is_kw("elif") {
            if first {
                return self.err("the first rule must start with 'if'");
            }
            RuleKind::Elif
        } else if self.is_kw("else") {
            RuleKind::Else
        } else {
            return self.err(format!("expected a rule, found {}", self.describe()));
        };
        self.pos += 1;
        self.rules_seen += 1;
        let cond = if kind == RuleKind::Else {
            self.else_seen = true;
            None
        } else {
            Some(self.cond()?)
        };
        self.expect_punct("->")?;
        let action = self.action()?;
        self.expect_punct(";")?;
        Ok(RuleAst { kind, cond, action })
    }

    fn cond(&mut self) -> Result<Cond, BsqError> {
        let mut atoms = vec![self.cond_atom()?];
        let mut conn: Option<&'static str> = None;
        loop {
            let c = if self.is_kw("and") {
                "and"
            } else if self.is_kw("or") {
                "or"
            } else {
                break;
            };
            if conn.is_some_and(|k| k != c) {
                return self.err("a condition is either a conjunction or a disjunction, not both");
            }
            conn = Some(c);
            self.pos += 1;
            atoms.push(self.cond_atom()?);
        }
        if conn == Some("or") {
            if atoms.iter().any(|a| matches!(a, CondAtom::Forall { .. })) {
                return self.err("'forall' conditions cannot appear in a disjunction");
            }
            Ok(Cond::Or(atoms))
        } else {
            Ok(Cond::And(atoms))
        }
    }

    fn cond_atom(&mut self) -> Result<CondAtom, BsqError> {
        if self.eat_kw("forall") {
            let binders = self.binders()?;
            self.expect_punct(":")?;
            let atom = self.cond_atom();
            self.bound.truncate(self.bound.len() - binders.len());
            return Ok(CondAtom::Forall {
                binders,
                atom: Box::new(atom?),
            });
        }
        self.expect_kw("P")?;
        self.expect_punct("[")?;
        let formula = self.formula()?;
        self.expect_punct("]")?;
        let op = match self.cmp_op() {
            Some(op) => op,
            None => return self.err(format!("expected comparison, found {}", self.describe())),
        };
        let (line, col) = self.here();
        let rhs = match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Operand::Num(v)
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.pos += 1;
                if !self.params.contains(&name) {
                    return Err(BsqError::UndeclaredParameter { name, line, col });
                }
                Operand::Param(name)
            }
            _ => {
                return self.err(format!(
                    "expected parameter or number, found {}",
                    self.describe()
                ))
            }
        };
        match (op, &rhs) {
            (CmpOp::Eq, Operand::Num(v)) if *v == 1.0 => {}
            (CmpOp::Eq | CmpOp::Ne, _) => {
                return Err(BsqError::Syntax {
                    line,
                    col,
                    msg: "only '== 1' is allowed as an equality query".into(),
                })
            }
            _ => {}
        }
        Ok(CondAtom::Query { formula, op, rhs })
    }

    fn binders(&mut self) -> Result<Vec<Binder>, BsqError> {
        let mut out = Vec::new();
        loop {
            let var = self.ident()?;
            self.expect_kw("in")?;
            let sort = self.sort_name()?;
            out.push(Binder {
                var: var.clone(),
                sort,
            });
            self.bound.push(var);
            if !self.eat_punct(",") {
                return Ok(out);
            }
        }
    }

    fn action(&mut self) -> Result<ActionAst, BsqError> {
        let name = self.ident()?;
        let mut args = Vec::new();
        if self.eat_punct("(") {
            if !self.is_punct(")") {
                loop {
                    let (line, col) = self.here();
                    let a = self.ident()?;
                    if !self.bound.contains(&a) && !self.vocab.is_constant(&a) {
                        return Err(BsqError::UnknownSymbol { name: a, line, col });
                    }
                    args.push(a);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
        }
        Ok(ActionAst { name, args })
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match self.peek() {
            Tok::Punct("<") => CmpOp::Lt,
            Tok::Punct("<=") => CmpOp::Le,
            Tok::Punct(">") => CmpOp::Gt,
            Tok::Punct(">=") => CmpOp::Ge,
            Tok::Punct("==") => CmpOp::Eq,
            Tok::Punct("!=") => CmpOp::Ne,
            _ => return None,
        };
        self.pos += 1;
        Some(op)
    }

    fn formula(&mut self) -> Result<Formula, BsqError> {
        let first = self.conj()?;
        if !self.is_kw("or") {
            return Ok(first);
        }
        let mut xs = vec![first];
        while self.eat_kw("or") {
            xs.push(self.conj()?);
        }
        Ok(Formula::Or(xs))
    }

    fn conj(&mut self) -> Result<Formula, BsqError> {
        let first = self.neg()?;
        if !self.is_kw("and") {
            return Ok(first);
        }
        let mut xs = vec![first];
        while self.eat_kw("and") {
            xs.push(self.neg()?);
        }
        Ok(Formula::And(xs))
    }

    fn neg(&mut self) -> Result<Formula, BsqError> {
        if self.eat_kw("not") {
            return Ok(Formula::Not(Box::new(self.neg()?)));
        }
        let kind = if self.is_kw("exists") {
            Some(QuantKind::Exists)
        } else if self.is_kw("forall") {
            Some(QuantKind::Forall)
        } else {
            None
        };
        if let Some(kind) = kind {
            self.pos += 1;
            let binders = self.binders()?;
            self.expect_punct(":")?;
            let body = self.formula();
            self.bound.truncate(self.bound.len() - binders.len());
            return Ok(Formula::Quant(kind, binders, Box::new(body?)));
        }
        self.compare()
    }

    fn compare(&mut self) -> Result<Formula, BsqError> {
        let l = self.sum()?;
        match self.cmp_op() {
            Some(op) => {
                let r = self.sum()?;
                Ok(Formula::Cmp(op, Box::new(l), Box::new(r)))
            }
            None => Ok(l),
        }
    }

    fn sum(&mut self) -> Result<Formula, BsqError> {
        let mut l = self.prod()?;
        loop {
            let op = if self.eat_punct("+") {
                ArithOp::Add
            } else if self.eat_punct("-") {
                ArithOp::Sub
            } else {
                return Ok(l);
            };
            let r = self.prod()?;
            l = Formula::Arith(op, Box::new(l), Box::new(r));
        }
    }

    fn prod(&mut self) -> Result<Formula, BsqError> {
        let mut l = self.unary()?;
        while self.eat_punct("*") {
            let r = self.unary()?;
            l = Formula::Arith(ArithOp::Mul, Box::new(l), Box::new(r));
        }
        Ok(l)
    }

    fn unary(&mut self) -> Result<Formula, BsqError> {
        if self.eat_punct("-") {
            return Ok(Formula::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, BsqError> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Formula::Num(v))
            }
            Tok::Punct("(") => {
                self.pos += 1;
                let f = self.formula()?;
                self.expect_punct(")")?;
                Ok(f)
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.pos += 1;
                Ok(Formula::Bool(s == "true"))
            }
            Tok::Ident(s) if s == "abs" => {
                self.pos += 1;
                self.expect_punct("(")?;
                let f = self.formula()?;
                self.expect_punct(")")?;
                Ok(Formula::Abs(Box::new(f)))
            }
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.pos += 1;
                if self.eat_punct("(") {
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.formula()?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    match self.vocab.functions.get(&s) {
                        Some(fd) if fd.arity == args.len() => Ok(Formula::App(s, args)),
                        Some(fd) => Err(BsqError::Syntax {
                            line,
                            col,
                            msg: format!("'{s}' takes {} arguments, got {}", fd.arity, args.len()),
                        }),
                        None => Err(BsqError::UnknownSymbol { name: s, line, col }),
                    }
                } else {
                    let known = self.bound.contains(&s)
                        || self.params.contains(&s)
                        || self.vocab.is_constant(&s)
                        || self.vocab.functions.get(&s).is_some_and(|f| f.arity == 0);
                    if known {
                        Ok(Formula::Name(s))
                    } else {
                        Err(BsqError::UnknownSymbol { name: s, line, col })
                    }
                }
            }
            _ => self.err(format!("unexpected {}", self.describe())),
        }
    }
}
