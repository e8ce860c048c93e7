//! Refinement program pieces: reduct check, cost rules, clones, dominance.

use std::collections::BTreeSet;

use crate::ast::{
    AggElement, AggFn, Aggregate, Atom, CmpOp, Literal, Program, QuantifiedProgram, Quantifier, Rule, Term,
    WeakConstraint,
};

use super::rename::{rename, rename_body, rename_rule, LitPatterns, SignatureTag};
use super::{complement, controlled_or, relaxed, CountermoveRecord, DomNames, TransformError};

fn var(s: &str) -> Term {
    Term::var(s)
}

fn xs(n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::Var(format!("X{i}"))).collect()
}

/// Encodes the reduct of `p2` with respect to `rec.ce`: `as` holds iff the
/// countermove is an answer set of `p2` under the current move.
pub fn check_as(p2: &Program, rec: &CountermoveRecord) -> Program {
    let n = &rec.names;
    let heads: BTreeSet<String> = p2.head_predicates();
    let to_neg = LitPatterns::negative(heads.iter().cloned());
    let to_pos = LitPatterns::positive(heads.iter().cloned());
    let fail = n.fail_atom.clone();
    let mut rules = Vec::new();
    for a in rec.ce.iter() {
        rules.push(Rule::fact(Atom {
            pred: n.neg.render(&a.pred),
            args: a.args.clone(),
        }));
    }
    for r in &p2.rules {
        let r2 = rename_rule(&rename_rule(r, &to_neg, &n.neg), &to_pos, &n.pos);
        match r2.head {
            Some(_) => rules.push(r2),
            None => rules.push(Rule::new(fail.clone(), r2.body)),
        }
    }
    for (pred, arity) in p2.head_signatures() {
        let args = xs(arity);
        let pos = Atom {
            pred: n.pos.render(&pred),
            args: args.clone(),
        };
        let neg = Atom {
            pred: n.neg.render(&pred),
            args,
        };
        rules.push(Rule::new(
            fail.clone(),
            vec![Literal::Pos(pos.clone()), Literal::Neg(neg.clone())],
        ));
        rules.push(Rule::new(fail.clone(), vec![Literal::Pos(neg), Literal::Neg(pos)]));
    }
    rules.push(Rule::new(n.as_atom.clone(), vec![Literal::Neg(fail)]));
    Program::from_rules(rules)
}

pub fn violation_predicate(tag: &SignatureTag) -> String {
    format!("caspr_v_{}", tag.id())
}

pub fn cost_predicate(tag: &SignatureTag) -> String {
    format!("caspr_cl_{}", tag.id())
}

/// Rules computing `caspr_cl_<tag>(T, l)`, the cost at each level `l` of
/// the weak constraints of `p`.
pub fn cost_program(p: &Program, tag: &SignatureTag) -> Program {
    let v = violation_predicate(tag);
    let cl = cost_predicate(tag);
    let mut rules = Vec::new();
    for w in &p.weaks {
        let mut args = vec![w.weight.clone(), Term::Int(w.level)];
        args.extend(w.tuple.iter().cloned());
        rules.push(Rule::new(Atom { pred: v.clone(), args }, w.body.clone()));
    }
    for level in p.levels() {
        let arities: BTreeSet<usize> = p
            .weaks
            .iter()
            .filter(|w| w.level == level)
            .map(|w| w.tuple.len())
            .collect();
        let elements = arities
            .into_iter()
            .map(|k| {
                let ts: Vec<Term> = (1..=k).map(|i| Term::Var(format!("T{i}"))).collect();
                let mut terms = vec![var("C")];
                terms.extend(ts.iter().cloned());
                let mut args = vec![var("C"), Term::Int(level)];
                args.extend(ts);
                AggElement {
                    terms,
                    cond: vec![Literal::Pos(Atom { pred: v.clone(), args })],
                }
            })
            .collect();
        rules.push(Rule::new(
            Atom::new(&cl, vec![var("T"), Term::Int(level)]),
            vec![Literal::Agg(Aggregate {
                func: AggFn::Sum,
                elements,
                op: CmpOp::Eq,
                guard: var("T"),
            })],
        ));
    }
    Program::from_rules(rules)
}

/// The rules of `p`, renamed onto the record's clone signature.
pub fn clone_rules(p: &Program, rec: &CountermoveRecord) -> Program {
    let pats = LitPatterns::both(p.head_predicates());
    rename(&pats, &rec.names.clone, &p.rules_only())
}

/// Derives `names.dom` iff the cost vector tagged `a` is dominated by the
/// one tagged `b`.
pub fn check_dom(a: &SignatureTag, b: &SignatureTag, names: &DomNames) -> Program {
    let cla = cost_predicate(a);
    let clb = cost_predicate(b);
    let cl = |pred: &str, c: &str, l: &str| Literal::Pos(Atom::new(pred, vec![var(c), var(l)]));
    let diff = |l: &str| Atom::new(&names.diff, vec![var(l)]);
    Program::from_rules(vec![
        Rule::new(
            diff("L"),
            vec![
                cl(&cla, "C1", "L"),
                cl(&clb, "C2", "L"),
                Literal::Cmp(var("C1"), CmpOp::Ne, var("C2")),
            ],
        ),
        Rule::new(
            Atom::new(&names.has_higher, vec![var("L")]),
            vec![
                Literal::Pos(diff("L")),
                Literal::Pos(diff("L1")),
                Literal::Cmp(var("L"), CmpOp::Lt, var("L1")),
            ],
        ),
        Rule::new(
            Atom::new(&names.highest, vec![var("L")]),
            vec![
                Literal::Pos(diff("L")),
                Literal::Neg(Atom::new(&names.has_higher, vec![var("L")])),
            ],
        ),
        Rule::new(
            names.dom.clone(),
            vec![
                Literal::Pos(Atom::new(&names.highest, vec![var("L")])),
                cl(&cla, "C1", "L"),
                cl(&clb, "C2", "L"),
                Literal::Cmp(var("C2"), CmpOp::Lt, var("C1")),
            ],
        ),
    ])
}

/// The renamed and guarded check program C' of a refinement.
fn guarded_check(qp: &QuantifiedProgram, rec: &CountermoveRecord, level: i64) -> Result<Program, TransformError> {
    let base = match qp.q1 {
        Quantifier::Exists => qp.c.clone(),
        Quantifier::Forall => complement(&qp.c)?,
    };
    let c1 = relaxed(&base, level);
    let mut preds = qp.p2.head_predicates();
    preds.extend(c1.head_predicates());
    let renamed = rename(&LitPatterns::both(preds), &rec.names.neg, &c1);
    Ok(controlled_or(&renamed, &Literal::Pos(rec.names.as_atom.clone())))
}

/// The refinement program for one countermove. Levels sit one to three
/// below the smallest level of P1 (0 when P1 has no weak constraints).
pub fn ref_program(qp: &QuantifiedProgram, rec: &CountermoveRecord) -> Result<Program, TransformError> {
    if !qp.is_alternating() {
        return Err(TransformError::NonAlternating);
    }
    let l = qp.p1.min_level().unwrap_or(0);
    let n = &rec.names;
    let guard = Literal::Pos(n.as_atom.clone());
    let heads = LitPatterns::both(qp.p2.head_predicates());

    let mut out = check_as(&qp.p2, rec);
    out.weaks.push(WeakConstraint::new(vec![guard.clone()], 1, l - 1));

    let p2_neg = Program {
        rules: Vec::new(),
        weaks: qp
            .p2
            .weaks
            .iter()
            .map(|w| WeakConstraint {
                body: rename_body(&w.body, &heads, &n.neg),
                ..w.clone()
            })
            .collect(),
    };
    out.extend(controlled_or(&cost_program(&p2_neg, &n.neg), &guard));
    out.extend(controlled_or(&clone_rules(&qp.p2, rec), &guard));
    let p2_clone = Program {
        rules: Vec::new(),
        weaks: rename(&heads, &n.clone, &qp.p2).weaks,
    };
    out.extend(controlled_or(&cost_program(&p2_clone, &n.clone), &guard));
    out.extend(controlled_or(&check_dom(&n.neg, &n.clone, &n.dom), &guard));
    out.weaks.push(WeakConstraint::new(
        vec![guard.clone(), Literal::Neg(n.dom_atom.clone())],
        1,
        l - 2,
    ));
    out.extend(guarded_check(qp, rec, l - 3)?);
    Ok(out)
}

/// The refinement program with its weak constraints replaced by the hard
/// constraint that the countermove must not counter the move.
pub fn strict_ref_program(qp: &QuantifiedProgram, rec: &CountermoveRecord) -> Result<Program, TransformError> {
    let mut p = ref_program(qp, rec)?;
    p.weaks.clear();
    let n = &rec.names;
    p.rules.push(Rule::constraint(vec![
        Literal::Pos(n.as_atom.clone()),
        Literal::Neg(n.dom_atom.clone()),
        Literal::Pos(n.unsat_neg_atom.clone()),
    ]));
    Ok(p)
}
