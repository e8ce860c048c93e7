//! Predicate-level signature substitution.

use std::collections::BTreeSet;

use crate::ast::{AggElement, Aggregate, Atom, Literal, Program, Rule, WeakConstraint};

/// A fresh signature `caspr_<alpha>_<beta>_<pred>`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignatureTag {
    pub alpha: String,
    pub beta: String,
}

impl SignatureTag {
    pub fn new(alpha: &str, beta: &str) -> SignatureTag {
        SignatureTag {
            alpha: alpha.to_string(),
            beta: beta.to_string(),
        }
    }

    /// `alpha_beta`, or `alpha` alone when beta is empty.
    pub fn id(&self) -> String {
        if self.beta.is_empty() {
            self.alpha.clone()
        } else {
            format!("{}_{}", self.alpha, self.beta)
        }
    }

    pub fn render(&self, pred: &str) -> String {
        format!("caspr_{}_{}_{}", self.alpha, self.beta, pred)
    }
}

/// Predicates whose positive (resp. negated) occurrences get renamed. Heads
/// count as positive occurrences.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LitPatterns {
    pub pos: BTreeSet<String>,
    pub neg: BTreeSet<String>,
}

impl LitPatterns {
    /// Both polarities of every predicate in `preds`.
    pub fn both<I: IntoIterator<Item = String>>(preds: I) -> LitPatterns {
        let pos: BTreeSet<String> = preds.into_iter().collect();
        LitPatterns { neg: pos.clone(), pos }
    }

    pub fn positive<I: IntoIterator<Item = String>>(preds: I) -> LitPatterns {
        LitPatterns {
            pos: preds.into_iter().collect(),
            neg: BTreeSet::new(),
        }
    }

    pub fn negative<I: IntoIterator<Item = String>>(preds: I) -> LitPatterns {
        LitPatterns {
            pos: BTreeSet::new(),
            neg: preds.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

fn rename_atom(a: &Atom, set: &BTreeSet<String>, tag: &SignatureTag) -> Atom {
    if set.contains(&a.pred) {
        Atom {
            pred: tag.render(&a.pred),
            args: a.args.clone(),
        }
    } else {
        a.clone()
    }
}

pub fn rename_literal(l: &Literal, pats: &LitPatterns, tag: &SignatureTag) -> Literal {
    match l {
        Literal::Pos(a) => Literal::Pos(rename_atom(a, &pats.pos, tag)),
        Literal::Neg(a) => Literal::Neg(rename_atom(a, &pats.neg, tag)),
        Literal::Cmp(..) => l.clone(),
        Literal::Agg(agg) => Literal::Agg(Aggregate {
            elements: agg
                .elements
                .iter()
                .map(|e| AggElement {
                    terms: e.terms.clone(),
                    cond: rename_body(&e.cond, pats, tag),
                })
                .collect(),
            ..agg.clone()
        }),
    }
}

pub fn rename_body(body: &[Literal], pats: &LitPatterns, tag: &SignatureTag) -> Vec<Literal> {
    body.iter().map(|l| rename_literal(l, pats, tag)).collect()
}

pub fn rename_rule(r: &Rule, pats: &LitPatterns, tag: &SignatureTag) -> Rule {
    Rule {
        head: r.head.as_ref().map(|h| rename_atom(h, &pats.pos, tag)),
        body: rename_body(&r.body, pats, tag),
    }
}

pub fn rename_weak(w: &WeakConstraint, pats: &LitPatterns, tag: &SignatureTag) -> WeakConstraint {
    WeakConstraint {
        body: rename_body(&w.body, pats, tag),
        ..w.clone()
    }
}

/// Applies the substitution to every statement of `p`.
pub fn rename(pats: &LitPatterns, tag: &SignatureTag, p: &Program) -> Program {
    if pats.is_empty() {
        return p.clone();
    }
    Program {
        rules: p.rules.iter().map(|r| rename_rule(r, pats, tag)).collect(),
        weaks: p.weaks.iter().map(|w| rename_weak(w, pats, tag)).collect(),
    }
}
