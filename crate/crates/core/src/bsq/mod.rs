//! Belief-state-query preferences: the rule language, its grounding against
//! a model, and the map from beliefs to parameter-space intervals.
//!
//! Parameter comparisons use half-open sets: `P[φ] > theta` and
//! `P[φ] >= theta` both hold exactly for `theta` in `[lo, P[φ])`, and their
//! negations for `[P[φ], hi)`. Effective intervals of the rules at a belief
//! therefore tile the parameter domain exactly.

mod ast;
mod compile;
mod parser;
mod preference;

use thiserror::Error;

use crate::interval::IntervalError;

pub use ast::{
    ActionAst, ArithOp, Binder, CmpOp, Cond, CondAtom, Formula, Item, Operand, ParamDecl,
    PreferenceAst, QuantKind, RuleAst, RuleKind,
};
pub use parser::parse_ast;
pub use preference::{
    parse_preference, Atom, AtomValue, BsqPreference, Condition, Rhs, Rule, Selection,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BsqError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax {
        line: usize,
        col: usize,
        msg: String,
    },
    #[error("unknown symbol '{name}' at {line}:{col}")]
    UnknownSymbol {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("parameter '{name}' at {line}:{col} has no declared domain")]
    UndeclaredParameter {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("preference has no terminal else rule")]
    MissingElse,
    #[error("action '{0}' is not defined by the model")]
    UnknownAction(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("parameter vector has {found} entries, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pomdp::{belief_update, sym, Belief, GPomdp, GPomdpBuilder, Key};
    use proptest::prelude::*;

    /// Static two-component fault model with an observable counter column.
    fn faults() -> GPomdp<f64> {
        let names = ["TT", "TF", "FT", "FF"];
        let bits = [(true, true), (true, false), (false, true), (false, false)];
        let mut b = GPomdpBuilder::new(
            "faults",
            names.iter().map(|s| s.to_string()).collect(),
            vec!["repair(robot)".into(), "repair(ship)".into(), "wait".into()],
            names.iter().map(|s| format!("o_{s}")).collect(),
        );
        for s in 0..4 {
            for a in 0..3 {
                b.add_transition(s, a, s, 1.0);
                for o in 0..4 {
                    let pr = if bits[s].0 == bits[o].0 { 0.6 } else { 0.4 };
                    let ps = if bits[s].1 == bits[o].1 { 0.75 } else { 0.25 };
                    b.set_observation(s, a, o, pr * ps);
                }
            }
        }
        b.init = (0..4).map(|s| (s, 0.25)).collect();
        b.vocab
            .add_sort("components", vec![sym("robot"), sym("ship")]);
        b.vocab.add_sort("levels", vec![Key::Int(0), Key::Int(1)]);
        let col = |f: fn(&(bool, bool)) -> bool| bits.iter().map(|x| f(x) as i32 as f64).collect();
        b.vocab
            .define_column("broken", vec![sym("robot")], false, col(|x| x.0));
        b.vocab
            .define_column("broken", vec![sym("ship")], false, col(|x| x.1));
        b.vocab
            .define_column("gauge", vec![], true, vec![0.2, 0.4, 0.6, 0.8]);
        b.build().unwrap()
    }

    const SR: &str = "
        pref sr(theta1 in [0, 1], theta2 in [0, 1]) {
            if P[broken(robot)] > theta1 -> repair(robot);
            elif P[broken(ship)] > theta2 -> repair(ship);
            else -> wait;
        }";

    fn uniform() -> Belief<f64> {
        faults().initial_belief().clone()
    }

    fn bx(lo: [f64; 2], hi: [f64; 2]) -> crate::IntervalSet<f64> {
        crate::IntervalSet::from_box(crate::ParamBox::new(lo.to_vec(), hi.to_vec()))
    }

    #[test]
    fn parses_three_rules_two_params() {
        let m = faults();
        let p = parse_preference(SR, &m).unwrap();
        assert_eq!(p.n_rules(), 3);
        assert_eq!(p.n_params(), 2);
        let names: Vec<_> = p.rules.iter().map(|r| r.action_name.as_str()).collect();
        assert_eq!(names, ["repair(robot)", "repair(ship)", "wait"]);
    }

    #[test]
    fn missing_else_is_an_error() {
        let m = faults();
        let src = "pref p(t in [0,1]) { if P[broken(robot)] > t -> wait; }";
        assert_eq!(
            parse_preference(src, &m).unwrap_err(),
            BsqError::MissingElse
        );
    }

    #[test]
    fn errors_carry_positions() {
        let m = faults();
        let e = parse_preference(
            "pref p(t in [0,1]) {\n  if P[broken(robot)] > > t -> wait;\n else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert!(
            matches!(
                e,
                BsqError::Syntax {
                    line: 2,
                    col: 25,
                    ..
                }
            ),
            "{e:?}"
        );
        let e = parse_preference(
            "pref p(t in [0,1]) { if P[brokn(robot)] > t -> wait; else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert!(matches!(e, BsqError::UnknownSymbol { ref name, line: 1, .. } if name == "brokn"));
        let e = parse_preference(
            "pref p(t in [0,1]) { if P[broken(robot)] > u -> wait; else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert!(matches!(e, BsqError::UndeclaredParameter { ref name, .. } if name == "u"));
        let e = parse_preference(
            "pref p(t in [0,1]) { if P[broken(robot)] > t -> fly; else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert_eq!(e, BsqError::UnknownAction("fly".into()));
        let e = parse_preference(
            "pref p(t in [0,1]) { if P[broken(robot)] > t and P[broken(ship)] > t or P[broken(ship)] > t -> wait; else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert!(matches!(e, BsqError::Syntax { .. }));
        let e = parse_preference(
            "pref p(t in [0,1]) { if P[broken(robot)] == t -> wait; else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert!(matches!(e, BsqError::Syntax { .. }));
        let e = parse_preference(
            "pref p(t in [0,1]) { elif P[broken(robot)] > t -> wait; else -> wait; }",
            &m,
        )
        .unwrap_err();
        assert!(matches!(e, BsqError::Syntax { .. }));
    }

    #[test]
    fn compound_evaluation() {
        let m = faults();
        let p = parse_preference(SR, &m).unwrap();
        let b = uniform();
        let c = &p.rules[0].condition;
        assert!(p.eval_condition(c, &b, &[0.4, 0.0]));
        assert!(!p.eval_condition(c, &b, &[0.6, 0.0]));
        assert!(p.eval_condition(&Condition::Catchall, &b, &[0.99, 0.99]));
        assert_eq!(p.interval_of(c, &b), bx([0.0, 0.0], [0.5, 1.0]));
    }

    #[test]
    fn conjunction_and_disjunction_intervals() {
        let m = faults();
        let src = "pref p(theta1 in [0,1], theta2 in [0,1]) {
            if P[broken(robot)] > theta1 and P[gauge < 1] > theta2 -> wait;
            elif P[broken(robot)] < theta1 or P[broken(ship) and broken(robot)] > theta1 -> wait;
            else -> wait; }";
        let p = parse_preference(src, &m).unwrap();
        let b = Belief::from_entries(4, vec![(0, 0.3), (1, 0.2), (2, 0.25), (3, 0.25)]).unwrap();
        // P[broken(robot)] = 0.5, P[gauge<1] = 1, P[TT] = 0.3
        let i0 = p.interval_of(&p.rules[0].condition, &b);
        assert_eq!(i0, bx([0.0, 0.0], [0.5, 1.0]));
        let i1 = p.interval_of(&p.rules[1].condition, &b);
        assert_eq!(i1.boxes().len(), 2);
        assert!((i1.volume() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn select_rule_examples() {
        let m = faults();
        let p = parse_preference(SR, &m).unwrap();
        let b = uniform();
        let s = p.select_rule(&b, &[0.4, 0.9]).unwrap();
        assert_eq!(
            (s.rule, p.rules[s.rule].action_name.as_str()),
            (0, "repair(robot)")
        );
        assert_eq!(s.interval, bx([0.0, 0.0], [0.5, 1.0]));
        let s = p.select_rule(&b, &[0.6, 0.4]).unwrap();
        assert_eq!(
            (s.rule, p.rules[s.rule].action_name.as_str()),
            (1, "repair(ship)")
        );
        assert_eq!(s.interval, bx([0.5, 0.0], [1.0, 0.5]));
        let s = p.select_rule(&b, &[0.9, 0.9]).unwrap();
        assert_eq!((s.rule, p.rules[s.rule].action_name.as_str()), (2, "wait"));
        assert_eq!(s.interval, bx([0.5, 0.5], [1.0, 1.0]));
        assert!(p.select_rule(&b, &[0.5]).is_err());
    }

    #[test]
    fn leaf_interval_examples() {
        let m = faults();
        let p = parse_preference(SR, &m).unwrap();
        let b0 = uniform();
        assert_eq!(p.leaf_interval([(0, &b0)]), bx([0.0, 0.0], [0.5, 1.0]));
        let b1 = belief_update(&m, &b0, 0, 0).unwrap();
        assert!(p.leaf_interval([(0, &b0), (1, &b1)]).is_empty());
        let catchall = parse_preference("pref c(theta1 in [0,1]) { else -> wait; }", &m).unwrap();
        assert_eq!(
            catchall.leaf_interval([(0, &b0), (0, &b1)]),
            catchall.space.full()
        );
    }

    #[test]
    fn quantifiers_loops_and_observable_queries() {
        let m = faults();
        let src = "pref q(theta1 in [0,1], theta3 in [0,1]) {
            for c in components {
                if P[broken(c)] >= theta1 and P[gauge <= theta3] == 1 -> wait;
            }
            elif forall c in components: P[broken(c)] < theta1 -> repair(ship);
            elif P[exists c in components: broken(c)] > 0.9 -> repair(robot);
            elif P[not broken(robot) or broken(ship)] == 1 -> wait;
            else -> wait;
        }";
        let p = parse_preference(src, &m).unwrap();
        assert_eq!(p.n_rules(), 6);
        assert!(matches!(&p.rules[2].condition, Condition::All(a) if a.len() == 2));
        // after one o_TT observation: P[robot] = 0.6, P[ship] = 0.75; gauge max 0.8
        let b = belief_update(&m, &uniform(), 0, 0).unwrap();
        let i0 = p.interval_of(&p.rules[0].condition, &b);
        assert_eq!(i0, bx([0.0, 0.8], [0.6, 1.0]));
        let i2 = p.interval_of(&p.rules[2].condition, &b);
        assert_eq!(i2, bx([0.75, 0.0], [1.0, 1.0]));
        // P[exists] = 1 - P[FF] = 0.9 which is not > 0.9
        assert!(p.interval_of(&p.rules[3].condition, &b).is_empty());
        let c4 = &p.rules[4].condition;
        assert!(!p.interval_of(c4, &Belief::point(4, 2)).is_empty());
        assert!(p.interval_of(c4, &Belief::point(4, 1)).is_empty());
    }

    #[test]
    fn hidden_variables_cannot_carry_parameters() {
        let m = faults();
        let src = "pref q(t in [0,1]) { if P[broken(robot) <= t] == 1 -> wait; else -> wait; }";
        assert!(matches!(
            parse_preference(src, &m),
            Err(BsqError::InvalidQuery(_))
        ));
        let src = "pref q(t in [0,1]) { if P[gauge + t > 1] == 1 -> wait; else -> wait; }";
        assert!(matches!(
            parse_preference(src, &m),
            Err(BsqError::InvalidQuery(_))
        ));
    }

    #[test]
    fn round_trip() {
        let m = faults();
        let src = "pref q(theta1 in [0,1], theta3 in [-1, 2.5]) {
            for c in components {
                if P[broken(c)] >= theta1 and P[gauge <= theta3] == 1 -> wait;
            }
            elif forall c in components, l in levels: P[broken(c) and l + 1 > 0] < theta1 -> repair(ship);
            elif P[exists c in components: broken(c) or (gauge - 0.1) * 2 > -abs(gauge)] > 0.9 -> repair(robot);
            elif P[not (broken(robot) or broken(ship)) and (broken(robot) != 1)] == 1 -> wait;
            else -> wait;
        }";
        let a = parse_ast(src, &m.vocab).unwrap();
        let printed = a.to_string();
        let b = parse_ast(&printed, &m.vocab).unwrap();
        assert_eq!(a, b, "{printed}");
    }

    proptest! {
        #[test]
        fn lemma_one_membership(w in proptest::collection::vec(0.01f64..1.0, 4),
                                t0 in 0.0f64..1.0, t1 in 0.0f64..1.0) {
            let m = faults();
            let src = "pref q(theta1 in [0,1], theta2 in [0,1]) {
                if P[broken(robot)] > theta1 and P[gauge < theta2] == 1 -> wait;
                elif P[broken(ship)] <= theta2 or P[broken(robot) and broken(ship)] >= theta1 -> wait;
                else -> wait; }";
            let p = parse_preference(src, &m).unwrap();
            let b = Belief::from_entries(4, w.into_iter().enumerate().collect()).unwrap();
            let theta = [t0, t1];
            for r in &p.rules {
                let i = p.interval_of(&r.condition, &b);
                prop_assert_eq!(p.eval_condition(&r.condition, &b, &theta), i.contains(&theta).unwrap());
            }
            let eff = p.effective_intervals(&b);
            let total: f64 = eff.iter().map(|e| e.volume()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for i in 0..eff.len() {
                for j in (i + 1)..eff.len() {
                    prop_assert!(eff[i].intersect(&eff[j]).unwrap().is_empty());
                }
                prop_assert_eq!(&eff[i], &p.effective_interval(i, &b));
            }
            let sel = p.select_rule(&b, &theta).unwrap();
            prop_assert!(sel.interval.contains(&theta).unwrap());
        }
    }
}
