//! Abstract syntax for normal ASP programs with weak constraints and for
//! quantified programs built from them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Prefix shared by every machine-generated predicate.
pub const RESERVED_PREFIX: &str = "caspr_";

/// Prefix of the complement atoms introduced when desugaring choice rules.
pub const CHOICE_PREFIX: &str = "caspr_n_";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    Var(String),
}

impl Term {
    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn sym(s: &str) -> Term {
        Term::Sym(s.to_string())
    }

    pub fn var(s: &str) -> Term {
        Term::Var(s.to_string())
    }

    pub fn is_ground(&self) -> bool {
        !matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(v) => write!(f, "{v}"),
            Term::Sym(s) | Term::Var(s) => f.write_str(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(pred: &str, args: Vec<Term>) -> Atom {
        Atom {
            pred: pred.to_string(),
            args,
        }
    }

    /// A propositional atom.
    pub fn prop(pred: &str) -> Atom {
        Atom::new(pred, Vec::new())
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn signature(&self) -> (String, usize) {
        (self.pred.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pred)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, t) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{t}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    /// The operator obtained by swapping the operands.
    pub fn flip(self) -> CmpOp {
        match self {
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ne => CmpOp::Ne,
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Gt => CmpOp::Lt,
            CmpOp::Ge => CmpOp::Le,
        }
    }

    pub fn holds<T: Ord>(self, a: &T, b: &T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AggFn {
    Sum,
    Count,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AggElement {
    pub terms: Vec<Term>,
    pub cond: Vec<Literal>,
}

/// Body aggregate `#fn{elements} op guard`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Aggregate {
    pub func: AggFn,
    pub elements: Vec<AggElement>,
    pub op: CmpOp,
    pub guard: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Pos(Atom),
    Neg(Atom),
    Cmp(Term, CmpOp, Term),
    Agg(Aggregate),
}

impl Literal {
    pub fn pos(a: Atom) -> Literal {
        Literal::Pos(a)
    }

    pub fn neg(a: Atom) -> Literal {
        Literal::Neg(a)
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Literal::Pos(a) | Literal::Neg(a) => Some(a),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rule {
    pub head: Option<Atom>,
    pub body: Vec<Literal>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleKind {
    Normal,
    Constraint,
    Fact,
}

impl Rule {
    pub fn new(head: Atom, body: Vec<Literal>) -> Rule {
        Rule { head: Some(head), body }
    }

    pub fn fact(head: Atom) -> Rule {
        Rule::new(head, Vec::new())
    }

    pub fn constraint(body: Vec<Literal>) -> Rule {
        Rule { head: None, body }
    }

    pub fn kind(&self) -> RuleKind {
        match (&self.head, self.body.is_empty()) {
            (None, _) => RuleKind::Constraint,
            (Some(_), true) => RuleKind::Fact,
            (Some(_), false) => RuleKind::Normal,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeakConstraint {
    pub body: Vec<Literal>,
    pub weight: Term,
    pub level: i64,
    pub tuple: Vec<Term>,
}

impl WeakConstraint {
    pub fn new(body: Vec<Literal>, weight: i64, level: i64) -> WeakConstraint {
        WeakConstraint {
            body,
            weight: Term::Int(weight),
            level,
            tuple: Vec::new(),
        }
    }
}

/// A set of rules and weak constraints. Equality is multiset equality on
/// both parts; body literal order is significant.
#[derive(Clone, Debug, Default, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
    pub weaks: Vec<WeakConstraint>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Program) -> bool {
        if self.rules.len() != other.rules.len() || self.weaks.len() != other.weaks.len() {
            return false;
        }
        let mut r1: Vec<&Rule> = self.rules.iter().collect();
        let mut r2: Vec<&Rule> = other.rules.iter().collect();
        r1.sort();
        r2.sort();
        let mut w1: Vec<&WeakConstraint> = self.weaks.iter().collect();
        let mut w2: Vec<&WeakConstraint> = other.weaks.iter().collect();
        w1.sort();
        w2.sort();
        r1 == r2 && w1 == w2
    }
}

impl Program {
    pub fn new() -> Program {
        Program::default()
    }

    pub fn from_rules(rules: Vec<Rule>) -> Program {
        Program {
            rules,
            weaks: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty() && self.weaks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len() + self.weaks.len()
    }

    pub fn extend(&mut self, other: Program) {
        self.rules.extend(other.rules);
        self.weaks.extend(other.weaks);
    }

    pub fn union(mut self, other: Program) -> Program {
        self.extend(other);
        self
    }

    /// The rule part R(P).
    pub fn rules_only(&self) -> Program {
        Program::from_rules(self.rules.clone())
    }

    /// Predicate signatures occurring in rule heads.
    pub fn head_signatures(&self) -> BTreeSet<(String, usize)> {
        self.rules
            .iter()
            .filter_map(|r| r.head.as_ref().map(Atom::signature))
            .collect()
    }

    pub fn head_predicates(&self) -> BTreeSet<String> {
        self.rules
            .iter()
            .filter_map(|r| r.head.as_ref().map(|a| a.pred.clone()))
            .collect()
    }

    /// Every predicate signature occurring anywhere in the program.
    pub fn signatures(&self) -> BTreeSet<(String, usize)> {
        let mut out = self.head_signatures();
        for r in &self.rules {
            collect_body_signatures(&r.body, &mut out);
        }
        for w in &self.weaks {
            collect_body_signatures(&w.body, &mut out);
        }
        out
    }

    pub fn predicates(&self) -> BTreeSet<String> {
        self.signatures().into_iter().map(|(p, _)| p).collect()
    }

    /// Smallest level among the weak constraints, if any.
    pub fn min_level(&self) -> Option<i64> {
        self.weaks.iter().map(|w| w.level).min()
    }

    pub fn levels(&self) -> BTreeSet<i64> {
        self.weaks.iter().map(|w| w.level).collect()
    }
}

pub(crate) fn collect_body_signatures(body: &[Literal], out: &mut BTreeSet<(String, usize)>) {
    for l in body {
        match l {
            Literal::Pos(a) | Literal::Neg(a) => {
                out.insert(a.signature());
            }
            Literal::Agg(agg) => {
                for e in &agg.elements {
                    collect_body_signatures(&e.cond, out);
                }
            }
            Literal::Cmp(..) => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Exists,
    Forall,
}

impl Quantifier {
    pub fn directive(self) -> &'static str {
        match self {
            Quantifier::Exists => "%@exists",
            Quantifier::Forall => "%@forall",
        }
    }
}

/// `q1 P1 q2 P2 : C : Cw`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantifiedProgram {
    pub q1: Quantifier,
    pub p1: Program,
    pub q2: Quantifier,
    pub p2: Program,
    pub c: Program,
    pub cw: Vec<WeakConstraint>,
}

impl QuantifiedProgram {
    pub fn is_alternating(&self) -> bool {
        self.q1 != self.q2
    }

    /// Predicates of the user-supplied P1, excluding generated names.
    pub fn p1_vocabulary(&self) -> BTreeSet<String> {
        self.p1
            .predicates()
            .into_iter()
            .filter(|p| !p.starts_with(RESERVED_PREFIX))
            .collect()
    }
}

/// A set of ground atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interpretation {
    pub atoms: BTreeSet<Atom>,
}

impl Interpretation {
    pub fn new() -> Interpretation {
        Interpretation::default()
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    pub fn insert(&mut self, a: Atom) -> bool {
        self.atoms.insert(a)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.atoms.iter()
    }

    /// Atoms whose predicate satisfies `keep`.
    pub fn project<F: Fn(&str) -> bool>(&self, keep: F) -> Interpretation {
        self.atoms.iter().filter(|a| keep(&a.pred)).cloned().collect()
    }

    /// Atoms grouped by predicate name.
    pub fn by_predicate(&self) -> BTreeMap<&str, Vec<&Atom>> {
        let mut out: BTreeMap<&str, Vec<&Atom>> = BTreeMap::new();
        for a in &self.atoms {
            out.entry(a.pred.as_str()).or_default().push(a);
        }
        out
    }

    /// Sorted textual atoms, the form used in output.
    pub fn to_strings(&self) -> Vec<String> {
        self.atoms.iter().map(ToString::to_string).collect()
    }
}

impl FromIterator<Atom> for Interpretation {
    fn from_iter<I: IntoIterator<Item = Atom>>(iter: I) -> Self {
        Interpretation {
            atoms: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str("}")
    }
}

/// Builds an interpretation of propositional atoms, for tests and examples.
pub fn props(names: &[&str]) -> Interpretation {
    names.iter().map(|n| Atom::prop(n)).collect()
}
