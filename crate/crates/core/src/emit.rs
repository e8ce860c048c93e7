//! Deterministic text emission in the clingo-compatible input syntax.

use std::fmt::Write;

use crate::ast::{AggFn, Aggregate, Literal, Program, Rule, Term, WeakConstraint};

fn write_terms(out: &mut String, terms: &[Term]) {
    for (i, t) in terms.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{t}").unwrap();
    }
}

fn write_aggregate(out: &mut String, agg: &Aggregate) {
    out.push_str(match agg.func {
        AggFn::Sum => "#sum{",
        AggFn::Count => "#count{",
    });
    for (i, e) in agg.elements.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        write_terms(out, &e.terms);
        if !e.cond.is_empty() {
            out.push_str(" : ");
            write_body(out, &e.cond);
        }
    }
    write!(out, "}} {} {}", agg.op.symbol(), agg.guard).unwrap();
}

pub fn literal_to_string(l: &Literal) -> String {
    let mut s = String::new();
    write_literal(&mut s, l);
    s
}

fn write_literal(out: &mut String, l: &Literal) {
    match l {
        Literal::Pos(a) => write!(out, "{a}").unwrap(),
        Literal::Neg(a) => write!(out, "not {a}").unwrap(),
        Literal::Cmp(x, op, y) => write!(out, "{x} {} {y}", op.symbol()).unwrap(),
        Literal::Agg(agg) => write_aggregate(out, agg),
    }
}

fn write_body(out: &mut String, body: &[Literal]) {
    for (i, l) in body.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        write_literal(out, l);
    }
}

pub fn rule_to_string(r: &Rule) -> String {
    let mut s = String::new();
    match (&r.head, r.body.is_empty()) {
        (Some(h), true) => write!(s, "{h}.").unwrap(),
        (Some(h), false) => {
            write!(s, "{h} :- ").unwrap();
            write_body(&mut s, &r.body);
            s.push('.');
        }
        (None, true) => s.push_str(":- #true."),
        (None, false) => {
            s.push_str(":- ");
            write_body(&mut s, &r.body);
            s.push('.');
        }
    }
    s
}

pub fn weak_to_string(w: &WeakConstraint) -> String {
    let mut s = String::from(":~ ");
    if w.body.is_empty() {
        s.push_str("#true");
    } else {
        write_body(&mut s, &w.body);
    }
    write!(s, ". [{}@{}", w.weight, w.level).unwrap();
    for t in &w.tuple {
        write!(s, ",{t}").unwrap();
    }
    s.push(']');
    s
}

/// One statement per line: rules in order, then weak constraints.
pub fn emit_text(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.rules {
        out.push_str(&rule_to_string(r));
        out.push('\n');
    }
    for w in &p.weaks {
        out.push_str(&weak_to_string(w));
        out.push('\n');
    }
    out
}
