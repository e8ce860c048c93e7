//! Cost vectors, dominance, and direct evaluation of weak constraints on a
//! model.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::ast::{Atom, Interpretation, Literal, Term, WeakConstraint};

/// Cost per level. Absent levels count as zero; explicit zero entries are
/// kept so that every level of a weak-constraint set is reported.
#[derive(Clone, Debug, Default, Eq)]
pub struct CostVector {
    pub entries: BTreeMap<i64, i64>,
}

impl PartialEq for CostVector {
    fn eq(&self, other: &CostVector) -> bool {
        let levels: BTreeSet<i64> = self.entries.keys().chain(other.entries.keys()).copied().collect();
        levels.iter().all(|l| self.get(*l) == other.get(*l))
    }
}

impl CostVector {
    pub fn new() -> CostVector {
        CostVector::default()
    }

    pub fn from_pairs(pairs: &[(i64, i64)]) -> CostVector {
        CostVector {
            entries: pairs.iter().copied().collect(),
        }
    }

    pub fn get(&self, level: i64) -> i64 {
        self.entries.get(&level).copied().unwrap_or(0)
    }

    pub fn set(&mut self, level: i64, cost: i64) {
        self.entries.insert(level, cost);
    }

    pub fn add(&mut self, level: i64, cost: i64) {
        *self.entries.entry(level).or_insert(0) += cost;
    }

    /// Sum of two vectors, level by level.
    pub fn merged(&self, other: &CostVector) -> CostVector {
        let mut out = self.clone();
        for (l, c) in &other.entries {
            out.add(*l, *c);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(|c| *c == 0)
    }

    /// Returns the vector with every level shifted by `delta`.
    pub fn shifted(&self, delta: i64) -> CostVector {
        CostVector {
            entries: self.entries.iter().map(|(l, c)| (l + delta, *c)).collect(),
        }
    }
}

impl fmt::Display for CostVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (l, c)) in self.entries.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}:{c}")?;
        }
        f.write_str("}")
    }
}

/// True iff `b` is dominated by `a`: at the highest level where the two
/// differ, `a` is strictly cheaper.
pub fn dominates(a: &CostVector, b: &CostVector) -> bool {
    let levels: BTreeSet<i64> = a.entries.keys().chain(b.entries.keys()).copied().collect();
    for l in levels.iter().rev() {
        let (ca, cb) = (a.get(*l), b.get(*l));
        if ca != cb {
            return cb > ca;
        }
    }
    false
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CostError {
    #[error("weight of weak constraint `{0}` is not bound to an integer")]
    NonGroundWeight(String),
    #[error("weak constraint `{0}` has an aggregate in its body")]
    AggregateInWeakBody(String),
    #[error("variable {var} is unsafe in weak constraint `{weak}`")]
    Unsafe { var: String, weak: String },
}

type Binding = HashMap<String, Term>;

fn resolve(t: &Term, b: &Binding) -> Option<Term> {
    match t {
        Term::Var(v) => b.get(v).cloned(),
        other => Some(other.clone()),
    }
}

fn ground_atom(a: &Atom, b: &Binding) -> Option<Atom> {
    let mut args = Vec::with_capacity(a.args.len());
    for t in &a.args {
        args.push(resolve(t, b)?);
    }
    Some(Atom {
        pred: a.pred.clone(),
        args,
    })
}

fn unify(pattern: &Atom, fact: &Atom, b: &mut Binding) -> bool {
    for (p, f) in pattern.args.iter().zip(&fact.args) {
        match p {
            Term::Var(v) => match b.get(v) {
                Some(bound) if bound != f => return false,
                Some(_) => {}
                None => {
                    b.insert(v.clone(), f.clone());
                }
            },
            other => {
                if other != f {
                    return false;
                }
            }
        }
    }
    true
}

struct Index<'a> {
    by_sig: HashMap<(&'a str, usize), Vec<&'a Atom>>,
    model: &'a Interpretation,
}

impl<'a> Index<'a> {
    fn new(model: &'a Interpretation) -> Index<'a> {
        let mut by_sig: HashMap<(&str, usize), Vec<&Atom>> = HashMap::new();
        for a in model.iter() {
            by_sig.entry((a.pred.as_str(), a.arity())).or_default().push(a);
        }
        Index { by_sig, model }
    }
}

fn first_unbound(lit: &Literal, b: &Binding) -> Option<String> {
    let terms: Vec<&Term> = match lit {
        Literal::Pos(a) | Literal::Neg(a) => a.args.iter().collect(),
        Literal::Cmp(l, _, r) => vec![l, r],
        Literal::Agg(_) => Vec::new(),
    };
    terms.into_iter().find_map(|t| match t {
        Term::Var(v) if !b.contains_key(v) => Some(v.clone()),
        _ => None,
    })
}

/// Enumerates every binding under which `body` holds in the model.
fn solve_body(
    body: &[Literal],
    done: &mut Vec<bool>,
    idx: &Index<'_>,
    b: &mut Binding,
    out: &mut Vec<Binding>,
) -> Result<(), String> {
    // Pick the next literal that can be evaluated or can extend the binding.
    let mut pick = None;
    for (i, lit) in body.iter().enumerate() {
        if done[i] {
            continue;
        }
        let ready = match lit {
            Literal::Pos(_) => true,
            Literal::Neg(a) => a.args.iter().all(|t| resolve(t, b).is_some()),
            Literal::Cmp(l, op, r) => {
                let (lb, rb) = (resolve(l, b).is_some(), resolve(r, b).is_some());
                (lb && rb) || (*op == crate::ast::CmpOp::Eq && (lb || rb))
            }
            Literal::Agg(_) => unreachable!("aggregates rejected before evaluation"),
        };
        if ready {
            pick = Some(i);
            break;
        }
    }
    let Some(i) = pick else {
        if let Some(i) = done.iter().position(|d| !d) {
            return Err(first_unbound(&body[i], b).unwrap_or_default());
        }
        out.push(b.clone());
        return Ok(());
    };
    done[i] = true;
    match &body[i] {
        Literal::Pos(a) => {
            if let Some(cands) = idx.by_sig.get(&(a.pred.as_str(), a.arity())) {
                for fact in cands {
                    let mut nb = b.clone();
                    if unify(a, fact, &mut nb) {
                        solve_body(body, done, idx, &mut nb, out)?;
                    }
                }
            }
        }
        Literal::Neg(a) => {
            let g = ground_atom(a, b).expect("checked ready");
            if !idx.model.contains(&g) {
                solve_body(body, done, idx, b, out)?;
            }
        }
        Literal::Cmp(l, op, r) => match (resolve(l, b), resolve(r, b)) {
            (Some(x), Some(y)) => {
                if op.holds(&x, &y) {
                    solve_body(body, done, idx, b, out)?;
                }
            }
            (Some(x), None) | (None, Some(x)) => {
                let Term::Var(v) = (if resolve(l, b).is_none() { l } else { r }) else {
                    unreachable!()
                };
                let mut nb = b.clone();
                nb.insert(v.clone(), x);
                solve_body(body, done, idx, &mut nb, out)?;
            }
            (None, None) => unreachable!("checked ready"),
        },
        Literal::Agg(_) => unreachable!(),
    }
    done[i] = false;
    Ok(())
}

fn weak_text(w: &WeakConstraint) -> String {
    crate::emit::weak_to_string(w)
}

/// Ground violations `(weight, level, tuple)` of the weak constraints.
pub fn violations(
    weaks: &[WeakConstraint],
    model: &Interpretation,
) -> Result<BTreeSet<(i64, i64, Vec<Term>)>, CostError> {
    let idx = Index::new(model);
    let mut set = BTreeSet::new();
    for w in weaks {
        if w.body.iter().any(|l| matches!(l, Literal::Agg(_))) {
            return Err(CostError::AggregateInWeakBody(weak_text(w)));
        }
        let mut done = vec![false; w.body.len()];
        let mut bindings = Vec::new();
        solve_body(&w.body, &mut done, &idx, &mut Binding::new(), &mut bindings).map_err(|var| CostError::Unsafe {
            var,
            weak: weak_text(w),
        })?;
        for b in bindings {
            let weight = match resolve(&w.weight, &b) {
                Some(Term::Int(v)) => v,
                _ => return Err(CostError::NonGroundWeight(weak_text(w))),
            };
            let mut tuple = Vec::with_capacity(w.tuple.len());
            for t in &w.tuple {
                match resolve(t, &b) {
                    Some(g) => tuple.push(g),
                    None => {
                        return Err(CostError::Unsafe {
                            var: t.to_string(),
                            weak: weak_text(w),
                        })
                    }
                }
            }
            set.insert((weight, w.level, tuple));
        }
    }
    Ok(set)
}

/// Cost of `model` at every level mentioned by `weaks`, counting each
/// distinct violation tuple once.
pub fn evaluate_cost(weaks: &[WeakConstraint], model: &Interpretation) -> Result<CostVector, CostError> {
    let mut cost = CostVector::new();
    for w in weaks {
        cost.entries.entry(w.level).or_insert(0);
    }
    for (weight, level, _) in violations(weaks, model)? {
        cost.add(level, weight);
    }
    Ok(cost)
}
