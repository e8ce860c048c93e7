//! Program transformations used by countermove search and refinement.

mod refine;
mod rename;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{Atom, Interpretation, Literal, Program, QuantifiedProgram, Quantifier, Rule, Term, WeakConstraint};
use crate::validate::unstratified_predicate;

pub use refine::{check_as, check_dom, clone_rules, cost_program, ref_program, strict_ref_program};
pub use rename::{rename, rename_body, rename_literal, rename_rule, rename_weak, LitPatterns, SignatureTag};

/// Atom derived by a complemented constraint.
pub const VIOLATION: &str = "caspr_v";
/// Atom derived by a relaxed constraint.
pub const UNSAT: &str = "caspr_unsat";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("program is not stratified (cycle through `{0}`)")]
    NotStratified(String),
    #[error("atom `{0}` is not over a head predicate of P1")]
    NonHeadAtom(String),
    #[error("the quantifiers do not alternate")]
    NonAlternating,
}

/// Names of the four dominance-check predicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomNames {
    pub diff: String,
    pub has_higher: String,
    pub highest: String,
    pub dom: Atom,
}

/// Fresh names owned by one countermove.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordNames {
    pub as_atom: Atom,
    pub fail_atom: Atom,
    pub dom_atom: Atom,
    pub unsat_neg_atom: Atom,
    pub pos: SignatureTag,
    pub neg: SignatureTag,
    pub clone: SignatureTag,
    pub dom: DomNames,
}

/// A countermove together with the fresh vocabulary of its refinement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountermoveRecord {
    pub id: usize,
    pub ce: Interpretation,
    pub names: RecordNames,
}

impl CountermoveRecord {
    pub fn new(id: usize, ce: Interpretation) -> CountermoveRecord {
        let beta = format!("ce{id}");
        let neg = SignatureTag::new("neg", &beta);
        let dom_atom = Atom::prop(&format!("caspr_dom_{beta}"));
        let names = RecordNames {
            as_atom: Atom::prop(&format!("caspr_as_{beta}")),
            fail_atom: Atom::prop(&format!("caspr_fail_{beta}")),
            unsat_neg_atom: Atom::prop(&neg.render(UNSAT)),
            dom: DomNames {
                diff: format!("caspr_diff_{beta}"),
                has_higher: format!("caspr_hashigher_{beta}"),
                highest: format!("caspr_highest_{beta}"),
                dom: dom_atom.clone(),
            },
            dom_atom,
            pos: SignatureTag::new("pos", &beta),
            clone: SignatureTag::new("clone", &beta),
            neg,
        };
        CountermoveRecord { id, ce, names }
    }
}

fn require_stratified(c: &Program) -> Result<(), TransformError> {
    match unstratified_predicate(c) {
        Some(p) => Err(TransformError::NotStratified(p)),
        None => Ok(()),
    }
}

/// Constraints `:- B` become `caspr_v :- B`, and `:- not caspr_v` is added.
pub fn complement(c: &Program) -> Result<Program, TransformError> {
    require_stratified(c)?;
    let v = Atom::prop(VIOLATION);
    let mut rules: Vec<Rule> = c
        .rules
        .iter()
        .map(|r| match &r.head {
            Some(_) => r.clone(),
            None => Rule::new(v.clone(), r.body.clone()),
        })
        .collect();
    rules.push(Rule::constraint(vec![Literal::Neg(v)]));
    Ok(Program {
        rules,
        weaks: c.weaks.clone(),
    })
}

/// Constraints `:- B` become `caspr_unsat :- B`, penalized at level `level`.
pub fn relaxed(c: &Program, level: i64) -> Program {
    let u = Atom::prop(UNSAT);
    let rules = c
        .rules
        .iter()
        .map(|r| match &r.head {
            Some(_) => r.clone(),
            None => Rule::new(u.clone(), r.body.clone()),
        })
        .collect();
    let mut weaks = c.weaks.clone();
    weaks.push(WeakConstraint::new(vec![Literal::Pos(u)], 1, level));
    Program { rules, weaks }
}

/// The countermove program: P2 plus the relaxed (complemented, for an
/// existential first player) check program one level below P2's weaks.
pub fn ctr(qp: &QuantifiedProgram) -> Result<Program, TransformError> {
    if !qp.is_alternating() {
        return Err(TransformError::NonAlternating);
    }
    let lmin = qp.p2.min_level().unwrap_or(0);
    let checked = match qp.q1 {
        Quantifier::Exists => complement(&qp.c)?,
        Quantifier::Forall => {
            require_stratified(&qp.c)?;
            qp.c.clone()
        }
    };
    Ok(qp.p2.clone().union(relaxed(&checked, lmin - 1)))
}

pub fn fix_predicate(pred: &str) -> String {
    format!("caspr_fix_{pred}")
}

fn vars(n: usize) -> Vec<Term> {
    (1..=n).map(|i| Term::Var(format!("X{i}"))).collect()
}

/// Facts for `m` plus, per head predicate of `p1`, a guard forbidding every
/// other atom of that predicate.
pub fn fix(p1: &Program, m: &Interpretation) -> Result<Program, TransformError> {
    let heads = p1.head_signatures();
    let mut by_sig: BTreeMap<(String, usize), Vec<&Atom>> = heads.iter().map(|s| (s.clone(), Vec::new())).collect();
    for a in m.iter() {
        match by_sig.get_mut(&a.signature()) {
            Some(v) => v.push(a),
            None => return Err(TransformError::NonHeadAtom(a.to_string())),
        }
    }
    let mut rules: Vec<Rule> = m.iter().map(|a| Rule::fact(a.clone())).collect();
    for ((pred, n), atoms) in by_sig {
        let fp = fix_predicate(&pred);
        for a in atoms {
            rules.push(Rule::fact(Atom {
                pred: fp.clone(),
                args: a.args.clone(),
            }));
        }
        let xs = vars(n);
        rules.push(Rule::constraint(vec![
            Literal::Pos(Atom { pred, args: xs.clone() }),
            Literal::Neg(Atom { pred: fp, args: xs }),
        ]));
    }
    Ok(Program::from_rules(rules))
}

/// Appends `guard` to the body of every rule and weak constraint.
pub fn controlled_or(p: &Program, guard: &Literal) -> Program {
    let mut out = p.clone();
    for r in &mut out.rules {
        r.body.push(guard.clone());
    }
    for w in &mut out.weaks {
        w.body.push(guard.clone());
    }
    out
}
