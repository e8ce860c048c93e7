//! Instance generators: the 2-QBF encoding, Erdős–Rényi clique coloring,
//! and small random programs for differential testing.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{Atom, Literal, Program, QuantifiedProgram, Quantifier, Rule, Term, WeakConstraint};
use crate::parser::{emit_quantified, parse_program};

/// A formula ∀X ∃Y φ with φ in CNF. Literals are `(positive, variable)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Qbf2 {
    pub x_vars: Vec<String>,
    pub y_vars: Vec<String>,
    pub clauses: Vec<Vec<(bool, String)>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IllFormedQbf {
    #[error("variable {0} is both universal and existential")]
    SharedVariable(String),
    #[error("variable {0} is declared twice")]
    DuplicateVariable(String),
    #[error("clause {0} is empty")]
    EmptyClause(usize),
    #[error("clause {0} has more than three literals")]
    LongClause(usize),
    #[error("clause {clause} mentions undeclared variable {var}")]
    Undeclared { clause: usize, var: String },
    #[error("{0} is not a valid variable name")]
    BadName(String),
}

fn valid_name(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_lowercase())
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !s.starts_with(crate::ast::RESERVED_PREFIX)
}

impl Qbf2 {
    pub fn check(&self) -> Result<(), IllFormedQbf> {
        let mut seen = BTreeSet::new();
        for v in self.x_vars.iter().chain(&self.y_vars) {
            if !valid_name(v) {
                return Err(IllFormedQbf::BadName(v.clone()));
            }
            if !seen.insert(v.as_str()) {
                return Err(if self.x_vars.contains(v) && self.y_vars.contains(v) {
                    IllFormedQbf::SharedVariable(v.clone())
                } else {
                    IllFormedQbf::DuplicateVariable(v.clone())
                });
            }
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if c.is_empty() {
                return Err(IllFormedQbf::EmptyClause(i + 1));
            }
            if c.len() > 3 {
                return Err(IllFormedQbf::LongClause(i + 1));
            }
            for (_, v) in c {
                if !seen.contains(v.as_str()) {
                    return Err(IllFormedQbf::Undeclared {
                        clause: i + 1,
                        var: v.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Truth by trying every assignment.
    pub fn is_true(&self) -> bool {
        let nx = self.x_vars.len();
        let ny = self.y_vars.len();
        (0..1u32 << nx).all(|xs| {
            (0..1u32 << ny).any(|ys| {
                let value = |v: &str| {
                    if let Some(i) = self.x_vars.iter().position(|x| x == v) {
                        xs >> i & 1 == 1
                    } else {
                        let i = self.y_vars.iter().position(|y| y == v).expect("declared variable");
                        ys >> i & 1 == 1
                    }
                };
                self.clauses.iter().all(|c| c.iter().any(|(pos, v)| value(v) == *pos))
            })
        })
    }

    pub fn random<R: Rng>(rng: &mut R, max_x: usize, max_y: usize, max_clauses: usize) -> Qbf2 {
        let nx = rng.gen_range(0..=max_x);
        let ny = rng.gen_range(1..=max_y.max(1));
        let x_vars: Vec<String> = (1..=nx).map(|i| format!("x{i}")).collect();
        let y_vars: Vec<String> = (1..=ny).map(|i| format!("y{i}")).collect();
        let all: Vec<&String> = x_vars.iter().chain(&y_vars).collect();
        let n_clauses = rng.gen_range(1..=max_clauses.max(1));
        let clauses = (0..n_clauses)
            .map(|_| {
                let k = rng.gen_range(1..=3.min(all.len()));
                all.choose_multiple(rng, k)
                    .map(|v| (rng.gen_bool(0.5), (*v).clone()))
                    .collect()
            })
            .collect();
        Qbf2 {
            x_vars,
            y_vars,
            clauses,
        }
    }
}

fn tv(pred: &str, var: &str, val: &str) -> Atom {
    Atom::new(pred, vec![Term::sym(var), Term::sym(val)])
}

/// The ∀∀ encoding: coherent iff the formula is true.
pub fn gen_qbf(phi: &Qbf2) -> Result<QuantifiedProgram, IllFormedQbf> {
    phi.check()?;
    let mut p1 = Program::new();
    for x in &phi.x_vars {
        p1.rules
            .push(Rule::new(tv("taup", x, "t"), vec![Literal::Neg(tv("taup", x, "f"))]));
        p1.rules
            .push(Rule::new(tv("taup", x, "f"), vec![Literal::Neg(tv("taup", x, "t"))]));
    }
    let mut p2 = Program::new();
    for x in &phi.x_vars {
        for val in ["t", "f"] {
            p2.rules
                .push(Rule::new(tv("tau", x, val), vec![Literal::Pos(tv("taup", x, val))]));
        }
    }
    for y in &phi.y_vars {
        p2.rules
            .push(Rule::new(tv("tau", y, "t"), vec![Literal::Neg(tv("tau", y, "f"))]));
        p2.rules
            .push(Rule::new(tv("tau", y, "f"), vec![Literal::Neg(tv("tau", y, "t"))]));
    }
    let unsat = Atom::prop("unsat");
    for (i, c) in phi.clauses.iter().enumerate() {
        let sat = Atom::new("sat", vec![Term::sym(&format!("c{}", i + 1))]);
        for (pos, v) in c {
            let val = if *pos { "t" } else { "f" };
            p2.rules
                .push(Rule::new(sat.clone(), vec![Literal::Pos(tv("tau", v, val))]));
        }
        p2.rules.push(Rule::new(unsat.clone(), vec![Literal::Neg(sat)]));
    }
    p2.weaks
        .push(WeakConstraint::new(vec![Literal::Pos(unsat.clone())], 1, 1));
    Ok(QuantifiedProgram {
        q1: Quantifier::Forall,
        p1,
        q2: Quantifier::Forall,
        p2,
        c: Program::from_rules(vec![Rule::constraint(vec![Literal::Pos(unsat)])]),
        cw: Vec::new(),
    })
}

const CC_P1: &str = "\
col(X,1) :- v(X), not col(X,2).
col(X,2) :- v(X), not col(X,1).
:- col(1,2).
adj(X,Y) :- e(X,Y).
adj(Y,X) :- e(X,Y).
";

const CC_P2: &str = "\
in(X) :- v(X), not out(X).
out(X) :- v(X), not in(X).
:- in(X), in(Y), X < Y, not adj(X,Y).
nonadj(X) :- out(X), in(Y), not adj(X,Y).
:- out(X), not nonadj(X).
twoin :- in(X), in(Y), X < Y.
:- not twoin.
";

const CC_C: &str = "\
bi :- in(X), in(Y), col(X,1), col(Y,2).
:- not bi.
";

/// Edges of G(n, p) over vertices 1..=n, drawn with ChaCha8 seeded by `seed`.
pub fn er_edges(n: usize, density: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 1..=n {
        for j in i + 1..=n {
            if rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Clique coloring on a random graph: is there a 2-coloring of the
/// vertices under which every maximal clique of size at least two uses both
/// colors? Vertex 1 is fixed to color 1.
pub fn gen_cc(n: usize, density: f64, seed: u64) -> QuantifiedProgram {
    assert!(n >= 2, "clique coloring needs at least two vertices");
    let mut p1 = parse_program(CC_P1).expect("shipped encoding parses");
    let int = |i: usize| Term::Int(i as i64);
    let mut facts: Vec<Rule> = (1..=n).map(|i| Rule::fact(Atom::new("v", vec![int(i)]))).collect();
    for (i, j) in er_edges(n, density, seed) {
        facts.push(Rule::fact(Atom::new("e", vec![int(i), int(j)])));
    }
    facts.append(&mut p1.rules);
    p1.rules = facts;
    QuantifiedProgram {
        q1: Quantifier::Exists,
        p1,
        q2: Quantifier::Forall,
        p2: parse_program(CC_P2).expect("shipped encoding parses"),
        c: parse_program(CC_C).expect("shipped encoding parses"),
        cw: Vec::new(),
    }
}

/// `gen_cc` as instance text with a header naming the generator settings.
pub fn gen_cc_text(n: usize, density: f64, seed: u64) -> String {
    format!(
        "% clique coloring, G(n,p) with n={n} p={density:.2} seed={seed} rng=ChaCha8\n{}",
        emit_quantified(&gen_cc(n, density, seed))
    )
}

/// Size limits for `random_alternating`.
#[derive(Clone, Debug)]
pub struct InstanceShape {
    pub max_p1_choices: usize,
    pub max_p2_choices: usize,
    pub max_p1_weaks: usize,
    pub max_p2_weaks: usize,
    pub max_constraints: usize,
    pub max_global_weaks: usize,
    /// Levels of global weak constraints are drawn from 1..=global_levels.
    pub global_levels: i64,
    /// Force q1 = Exists, as optimization requires.
    pub existential: bool,
}

impl Default for InstanceShape {
    fn default() -> Self {
        InstanceShape {
            max_p1_choices: 3,
            max_p2_choices: 3,
            max_p1_weaks: 1,
            max_p2_weaks: 2,
            max_constraints: 3,
            max_global_weaks: 0,
            global_levels: 2,
            existential: false,
        }
    }
}

fn quantifier<R: Rng>(rng: &mut R) -> Quantifier {
    if rng.gen_bool(0.5) {
        Quantifier::Exists
    } else {
        Quantifier::Forall
    }
}

fn choice_pair(pos: &str, neg: &str, guard: Option<Literal>) -> Vec<Rule> {
    let mut b1 = vec![Literal::Neg(Atom::prop(neg))];
    let mut b2 = vec![Literal::Neg(Atom::prop(pos))];
    if let Some(g) = guard {
        b1.push(g.clone());
        b2.push(g);
    }
    vec![Rule::new(Atom::prop(pos), b1), Rule::new(Atom::prop(neg), b2)]
}

fn random_literal<R: Rng>(rng: &mut R, atoms: &[String]) -> Literal {
    let a = Atom::prop(atoms.choose(rng).expect("nonempty vocabulary"));
    if rng.gen_bool(0.6) {
        Literal::Pos(a)
    } else {
        Literal::Neg(a)
    }
}

fn random_body<R: Rng>(rng: &mut R, atoms: &[String], max: usize) -> Vec<Literal> {
    let k = rng.gen_range(1..=max);
    let mut body: Vec<Literal> = Vec::new();
    for _ in 0..k {
        let l = random_literal(rng, atoms);
        if !body.iter().any(|b| b.atom() == l.atom()) {
            body.push(l);
        }
    }
    body
}

/// A small propositional alternating program. P1 guesses over `a<i>`/`na<i>`,
/// P2 over `b<j>`/`nb<j>` (sometimes guarded by a P1 literal) and may
/// derive `d`; C is stratified over all of these.
pub fn random_alternating<R: Rng>(rng: &mut R, shape: &InstanceShape) -> QuantifiedProgram {
    let k1 = rng.gen_range(1..=shape.max_p1_choices.max(1));
    let k2 = rng.gen_range(1..=shape.max_p2_choices.max(1));
    let p1_atoms: Vec<String> = (1..=k1).flat_map(|i| [format!("a{i}"), format!("na{i}")]).collect();
    let mut p2_atoms: Vec<String> = (1..=k2).flat_map(|j| [format!("b{j}"), format!("nb{j}")]).collect();

    let mut p1 = Program::new();
    for i in 1..=k1 {
        p1.rules.extend(choice_pair(&format!("a{i}"), &format!("na{i}"), None));
    }
    if rng.gen_bool(0.2) {
        p1.rules.push(Rule::constraint(random_body(rng, &p1_atoms, 2)));
    }
    for _ in 0..rng.gen_range(0..=shape.max_p1_weaks) {
        let body = random_body(rng, &p1_atoms, 2);
        p1.weaks
            .push(WeakConstraint::new(body, rng.gen_range(1..=2), rng.gen_range(1..=2)));
    }

    let mut p2 = Program::new();
    for j in 1..=k2 {
        let guard = rng.gen_bool(0.3).then(|| random_literal(rng, &p1_atoms));
        p2.rules.extend(choice_pair(&format!("b{j}"), &format!("nb{j}"), guard));
    }
    let mut inner: Vec<String> = p1_atoms.iter().chain(&p2_atoms).cloned().collect();
    if rng.gen_bool(0.4) {
        let mut body = random_body(rng, &inner, 2);
        body.retain(|l| !matches!(l, Literal::Neg(_)) || rng.gen_bool(0.5));
        if body.is_empty() {
            body.push(Literal::Pos(Atom::prop(&p2_atoms[0])));
        }
        p2.rules.push(Rule::new(Atom::prop("d"), body));
        p2_atoms.push("d".into());
        inner.push("d".into());
    }
    if rng.gen_bool(0.3) {
        p2.rules.push(Rule::constraint(random_body(rng, &inner, 2)));
    }
    for _ in 0..rng.gen_range(0..=shape.max_p2_weaks) {
        let body = random_body(rng, &inner, 2);
        p2.weaks
            .push(WeakConstraint::new(body, rng.gen_range(1..=2), rng.gen_range(1..=2)));
    }

    let mut c = Program::new();
    let n_c = rng.gen_range(0..=shape.max_constraints);
    for _ in 0..n_c {
        if rng.gen_bool(0.25) {
            let body: Vec<Literal> = random_body(rng, &inner, 2)
                .into_iter()
                .map(|l| match l {
                    Literal::Neg(a) if rng.gen_bool(0.5) => Literal::Pos(a),
                    l => l,
                })
                .collect();
            c.rules.push(Rule::new(Atom::prop("h"), body));
            c.rules.push(Rule::constraint(vec![Literal::Neg(Atom::prop("h"))]));
        } else {
            c.rules.push(Rule::constraint(random_body(rng, &inner, 2)));
        }
    }

    let cw = (0..rng.gen_range(0..=shape.max_global_weaks))
        .map(|_| {
            let body = random_body(rng, &p1_atoms, 2);
            WeakConstraint::new(
                body,
                rng.gen_range(1..=2),
                rng.gen_range(1..=shape.global_levels.max(1)),
            )
        })
        .collect();

    let q1 = if shape.existential {
        Quantifier::Exists
    } else {
        quantifier(rng)
    };
    QuantifiedProgram {
        q1,
        p1,
        q2: match q1 {
            Quantifier::Exists => Quantifier::Forall,
            Quantifier::Forall => Quantifier::Exists,
        },
        p2,
        c,
        cw,
    }
}

/// A random stratified propositional program over at most `max_atoms`
/// atoms `p1..pn`, with hard constraints. Rule bodies only mention
/// lower-numbered atoms.
pub fn random_stratified<R: Rng>(rng: &mut R, max_atoms: usize) -> Program {
    let n = rng.gen_range(1..=max_atoms.max(1));
    let name = |i: usize| format!("p{i}");
    let mut rules = Vec::new();
    for i in 1..=n {
        for _ in 0..rng.gen_range(0..=2) {
            let mut body = Vec::new();
            for j in 1..i {
                if !rng.gen_bool(0.4) {
                    continue;
                }
                if rng.gen_bool(0.4) {
                    body.push(Literal::Neg(Atom::prop(&name(j))));
                } else {
                    body.push(Literal::Pos(Atom::prop(&name(j))));
                }
            }
            rules.push(Rule::new(Atom::prop(&name(i)), body));
        }
    }
    let atoms: Vec<String> = (1..=n).map(name).collect();
    for _ in 0..rng.gen_range(0..=3) {
        rules.push(Rule::constraint(random_body(rng, &atoms, 2)));
    }
    Program::from_rules(rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::errors;

    fn q(x: &[&str], y: &[&str], cs: &[&[(bool, &str)]]) -> Qbf2 {
        Qbf2 {
            x_vars: x.iter().map(|s| s.to_string()).collect(),
            y_vars: y.iter().map(|s| s.to_string()).collect(),
            clauses: cs
                .iter()
                .map(|c| c.iter().map(|(p, v)| (*p, v.to_string())).collect())
                .collect(),
        }
    }

    #[test]
    fn qbf_truth_examples() {
        assert!(q(
            &["x"],
            &["y"],
            &[&[(true, "x"), (true, "y")], &[(false, "x"), (false, "y")]]
        )
        .is_true());
        assert!(!q(&["x"], &["y"], &[&[(true, "y")], &[(false, "y")]]).is_true());
        assert!(q(&[], &["y"], &[&[(true, "y")]]).is_true());
    }

    #[test]
    fn ill_formed_qbfs() {
        assert_eq!(
            q(&["x"], &["x"], &[&[(true, "x")]]).check(),
            Err(IllFormedQbf::SharedVariable("x".into()))
        );
        assert_eq!(q(&["x"], &["y"], &[&[]]).check(), Err(IllFormedQbf::EmptyClause(1)));
        assert!(matches!(
            q(&["x"], &["y"], &[&[(true, "z")]]).check(),
            Err(IllFormedQbf::Undeclared { .. })
        ));
        assert!(matches!(
            q(
                &["x"],
                &["y"],
                &[&[(true, "x"), (true, "y"), (true, "x"), (false, "y")]]
            )
            .check(),
            Err(IllFormedQbf::LongClause(1))
        ));
    }

    #[test]
    fn generated_instances_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let phi = Qbf2::random(&mut rng, 4, 4, 6);
            assert_eq!(errors(&gen_qbf(&phi).unwrap()), vec![]);
            let shape = InstanceShape {
                max_global_weaks: 2,
                ..InstanceShape::default()
            };
            let qp = random_alternating(&mut rng, &shape);
            assert_eq!(errors(&qp), vec![], "{}", emit_quantified(&qp));
        }
        for (n, p) in [(4, 0.25), (10, 0.5), (14, 0.75)] {
            assert_eq!(errors(&gen_cc(n, p, 3)), vec![]);
        }
    }

    #[test]
    fn cc_is_deterministic() {
        assert_eq!(gen_cc_text(10, 0.5, 1), gen_cc_text(10, 0.5, 1));
        assert_ne!(er_edges(10, 0.5, 1), er_edges(10, 0.5, 2));
    }
}
