//! Structural checks on programs and quantified programs.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::ast::{Literal, Program, QuantifiedProgram, Rule, Term, WeakConstraint, CHOICE_PREFIX, RESERVED_PREFIX};
use crate::emit::{rule_to_string, weak_to_string};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    #[error("predicate `{pred}` in {section} uses the reserved prefix `caspr_`")]
    ReservedPrefix { pred: String, section: &'static str },
    #[error("predicate `{pred}` is defined in P2 and also occurs in P1")]
    HeadOverlap { pred: String },
    #[error("predicate `{pred}` is defined in the constraint program and also occurs in P1 or P2")]
    ConstraintHeadOverlap { pred: String },
    #[error("the constraint program is not stratified (cycle through `{pred}`)")]
    NotStratified { pred: String },
    #[error("the constraint program contains weak constraints")]
    ConstraintHasWeaks,
    #[error("global weak constraints mention `{pred}`, which does not occur in P1")]
    GlobalVocabulary { pred: String },
    #[error("variable {var} is unsafe in `{statement}`")]
    Unsafe { var: String, statement: String },
    #[error("weak constraint `{statement}` has an aggregate in its body")]
    AggregateInWeak { statement: String },
    #[error("warning: P2 weak constraints use level {level}, which is also a refinement level")]
    LevelOverlap { level: i64 },
}

impl Diagnostic {
    pub fn is_warning(&self) -> bool {
        matches!(self, Diagnostic::LevelOverlap { .. })
    }
}

fn vars_of_terms<'a>(terms: impl IntoIterator<Item = &'a Term>, out: &mut BTreeSet<String>) {
    for t in terms {
        if let Term::Var(v) = t {
            out.insert(v.clone());
        }
    }
}

/// Variables bound by a body: positive atoms, equalities with a bound side,
/// and assignment aggregates `#agg{..} = X`.
fn bound_vars(body: &[Literal], outer: &BTreeSet<String>) -> BTreeSet<String> {
    let mut bound = outer.clone();
    for l in body {
        if let Literal::Pos(a) = l {
            vars_of_terms(&a.args, &mut bound);
        }
    }
    loop {
        let before = bound.len();
        for l in body {
            match l {
                Literal::Cmp(x, crate::ast::CmpOp::Eq, y) => {
                    let bx = !matches!(x, Term::Var(v) if !bound.contains(v));
                    let by = !matches!(y, Term::Var(v) if !bound.contains(v));
                    if bx && !by {
                        vars_of_terms([y], &mut bound);
                    } else if by && !bx {
                        vars_of_terms([x], &mut bound);
                    }
                }
                Literal::Agg(agg) if agg.op == crate::ast::CmpOp::Eq => {
                    vars_of_terms([&agg.guard], &mut bound);
                }
                _ => {}
            }
        }
        if bound.len() == before {
            return bound;
        }
    }
}

fn body_unsafe(body: &[Literal], bound: &BTreeSet<String>, out: &mut BTreeSet<String>) {
    for l in body {
        match l {
            Literal::Pos(a) | Literal::Neg(a) => {
                let mut vs = BTreeSet::new();
                vars_of_terms(&a.args, &mut vs);
                out.extend(vs.difference(bound).cloned());
            }
            Literal::Cmp(x, _, y) => {
                let mut vs = BTreeSet::new();
                vars_of_terms([x, y], &mut vs);
                out.extend(vs.difference(bound).cloned());
            }
            Literal::Agg(agg) => {
                let mut vs = BTreeSet::new();
                vars_of_terms([&agg.guard], &mut vs);
                out.extend(vs.difference(bound).cloned());
                for e in &agg.elements {
                    let local = bound_vars(&e.cond, bound);
                    let mut ev = BTreeSet::new();
                    vars_of_terms(&e.terms, &mut ev);
                    out.extend(ev.difference(&local).cloned());
                    body_unsafe(&e.cond, &local, out);
                }
            }
        }
    }
}

/// Unsafe variables of a rule or weak constraint with the given body and
/// extra terms (head arguments, weight, tuple).
pub fn unsafe_variables<'a>(body: &[Literal], extra: impl IntoIterator<Item = &'a Term>) -> BTreeSet<String> {
    let bound = bound_vars(body, &BTreeSet::new());
    let mut out = BTreeSet::new();
    body_unsafe(body, &bound, &mut out);
    let mut ev = BTreeSet::new();
    vars_of_terms(extra, &mut ev);
    out.extend(ev.difference(&bound).cloned());
    out
}

pub fn rule_unsafe(r: &Rule) -> BTreeSet<String> {
    let head: &[Term] = r.head.as_ref().map(|h| h.args.as_slice()).unwrap_or(&[]);
    unsafe_variables(&r.body, head)
}

pub fn weak_unsafe(w: &WeakConstraint) -> BTreeSet<String> {
    unsafe_variables(&w.body, std::iter::once(&w.weight).chain(&w.tuple))
}

/// Safety diagnostics for every statement of `p`.
pub fn check_safety(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for r in &p.rules {
        for var in rule_unsafe(r) {
            out.push(Diagnostic::Unsafe {
                var,
                statement: rule_to_string(r),
            });
        }
    }
    for w in &p.weaks {
        for var in weak_unsafe(w) {
            out.push(Diagnostic::Unsafe {
                var,
                statement: weak_to_string(w),
            });
        }
    }
    out
}

/// Returns a predicate on a cycle through negation or aggregation, if any.
pub fn unstratified_predicate(p: &Program) -> Option<String> {
    let mut g: DiGraph<String, bool> = DiGraph::new();
    let mut nodes = BTreeMap::new();
    let mut node = |g: &mut DiGraph<String, bool>, name: &str| {
        *nodes
            .entry(name.to_string())
            .or_insert_with(|| g.add_node(name.to_string()))
    };
    fn deps(body: &[Literal], strict: bool, out: &mut Vec<(String, bool)>) {
        for l in body {
            match l {
                Literal::Pos(a) => out.push((a.pred.clone(), strict)),
                Literal::Neg(a) => out.push((a.pred.clone(), true)),
                Literal::Agg(agg) => {
                    for e in &agg.elements {
                        deps(&e.cond, true, out);
                    }
                }
                Literal::Cmp(..) => {}
            }
        }
    }
    for r in &p.rules {
        let Some(h) = &r.head else { continue };
        let hn = node(&mut g, &h.pred);
        let mut ds = Vec::new();
        deps(&r.body, false, &mut ds);
        for (pred, negative) in ds {
            let bn = node(&mut g, &pred);
            g.add_edge(hn, bn, negative);
        }
    }
    for scc in tarjan_scc(&g) {
        let members: BTreeSet<_> = scc.iter().copied().collect();
        for &n in &scc {
            for e in g.edges(n) {
                use petgraph::visit::EdgeRef;
                if *e.weight() && members.contains(&e.target()) {
                    return Some(g[n].clone());
                }
            }
        }
    }
    None
}

pub fn is_stratified(p: &Program) -> bool {
    unstratified_predicate(p).is_none()
}

fn reserved(p: &Program, section: &'static str, out: &mut Vec<Diagnostic>) {
    let heads = p.head_predicates();
    for pred in p.predicates() {
        if !pred.starts_with(RESERVED_PREFIX) {
            continue;
        }
        let paired = pred
            .strip_prefix(CHOICE_PREFIX)
            .is_some_and(|base| heads.contains(base));
        if !paired {
            out.push(Diagnostic::ReservedPrefix { pred, section });
        }
    }
}

fn has_aggregate(body: &[Literal]) -> bool {
    body.iter().any(|l| matches!(l, Literal::Agg(_)))
}

/// All invariant violations of `qp`; warnings are included and flagged by
/// [`Diagnostic::is_warning`].
pub fn validate(qp: &QuantifiedProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let cw = Program {
        rules: Vec::new(),
        weaks: qp.cw.clone(),
    };
    reserved(&qp.p1, "P1", &mut out);
    reserved(&qp.p2, "P2", &mut out);
    reserved(&qp.c, "C", &mut out);
    reserved(&cw, "global weak constraints", &mut out);

    let p1_preds = qp.p1.predicates();
    let p2_preds = qp.p2.predicates();
    for pred in qp.p2.head_predicates() {
        if p1_preds.contains(&pred) {
            out.push(Diagnostic::HeadOverlap { pred });
        }
    }
    for pred in qp.c.head_predicates() {
        if p1_preds.contains(&pred) || p2_preds.contains(&pred) {
            out.push(Diagnostic::ConstraintHeadOverlap { pred });
        }
    }
    if !qp.c.weaks.is_empty() {
        out.push(Diagnostic::ConstraintHasWeaks);
    }
    if let Some(pred) = unstratified_predicate(&qp.c) {
        out.push(Diagnostic::NotStratified { pred });
    }
    for pred in cw.predicates() {
        if !p1_preds.contains(&pred) {
            out.push(Diagnostic::GlobalVocabulary { pred });
        }
    }
    for p in [&qp.p1, &qp.p2, &qp.c, &cw] {
        out.extend(check_safety(p));
        for w in &p.weaks {
            if has_aggregate(&w.body) {
                out.push(Diagnostic::AggregateInWeak {
                    statement: weak_to_string(w),
                });
            }
        }
    }
    let l1 = qp.p1.min_level().unwrap_or(0);
    for level in qp.p2.levels() {
        if (l1 - 3..l1).contains(&level) {
            out.push(Diagnostic::LevelOverlap { level });
        }
    }
    out
}

/// Validation errors only, warnings dropped.
pub fn errors(qp: &QuantifiedProgram) -> Vec<Diagnostic> {
    validate(qp).into_iter().filter(|d| !d.is_warning()).collect()
}
