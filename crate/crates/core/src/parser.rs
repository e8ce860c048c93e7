//! Lexer and recursive-descent parser for plain programs and for the
//! sectioned quantified-program format.

use std::fmt;

use thiserror::Error;

use crate::ast::{
    AggElement, AggFn, Aggregate, Atom, CmpOp, Literal, Program, QuantifiedProgram, Quantifier, Rule, Term,
    WeakConstraint, CHOICE_PREFIX,
};
use crate::validate::{self, Diagnostic};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{span}: {message}")]
    Syntax { span: SourceSpan, message: String },
    #[error("{span}: {message}")]
    Section { span: SourceSpan, message: String },
    #[error("{span}: unsafe variable {var}")]
    Safety { span: SourceSpan, var: String },
    #[error("{span}: {diagnostic}")]
    Invalid { span: SourceSpan, diagnostic: Diagnostic },
}

impl ParseError {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ParseError::Syntax { span, .. }
            | ParseError::Section { span, .. }
            | ParseError::Safety { span, .. }
            | ParseError::Invalid { span, .. } => span,
        }
    }

    /// Replaces the file name of the span.
    pub fn with_file(mut self, file: &str) -> ParseError {
        match &mut self {
            ParseError::Syntax { span, .. }
            | ParseError::Section { span, .. }
            | ParseError::Safety { span, .. }
            | ParseError::Invalid { span, .. } => span.file = file.to_string(),
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    Directive(String),
    If,
    WeakIf,
    Dot,
    Comma,
    Semi,
    Colon,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBrack,
    RBrack,
    At,
    Op(CmpOp),
    Not,
    Sum,
    Count,
    True,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Directive(d) => write!(f, "directive `%@{d}`"),
            Tok::Op(op) => write!(f, "`{}`", op.symbol()),
            Tok::Eof => f.write_str("end of input"),
            other => {
                let s = match other {
                    Tok::If => ":-",
                    Tok::WeakIf => ":~",
                    Tok::Dot => ".",
                    Tok::Comma => ",",
                    Tok::Semi => ";",
                    Tok::Colon => ":",
                    Tok::LParen => "(",
                    Tok::RParen => ")",
                    Tok::LBrace => "{",
                    Tok::RBrace => "}",
                    Tok::LBrack => "[",
                    Tok::RBrack => "]",
                    Tok::At => "@",
                    Tok::Not => "not",
                    Tok::Sum => "#sum",
                    Tok::Count => "#count",
                    Tok::True => "#true",
                    _ => unreachable!(),
                };
                write!(f, "`{s}`")
            }
        }
    }
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    file: &'a str,
}

fn span(file: &str, line: usize, column: usize) -> SourceSpan {
    SourceSpan {
        file: file.to_string(),
        line,
        column,
    }
}

impl<'a> Lexer<'a> {
    fn new(text: &str, file: &'a str) -> Lexer<'a> {
        Lexer {
            chars: text.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            file,
        }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn err(&self, line: usize, col: usize, message: String) -> ParseError {
        ParseError::Syntax {
            span: span(self.file, line, col),
            message,
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            let (line, col) = (self.line, self.col);
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '%' {
                if col == 1 && self.peek(1) == Some('@') {
                    self.bump();
                    self.bump();
                    let name = self.word();
                    if matches!(name.as_str(), "exists" | "forall" | "constraint" | "global") {
                        out.push((Tok::Directive(name), span(self.file, line, col)));
                        continue;
                    }
                }
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let tok = if c.is_ascii_lowercase() {
                let w = self.word();
                if w == "not" {
                    Tok::Not
                } else {
                    Tok::Ident(w)
                }
            } else if c.is_ascii_uppercase() || c == '_' {
                let w = self.word();
                if w == "_" {
                    return Err(self.err(line, col, "anonymous variables are not supported".into()));
                }
                Tok::Var(w)
            } else if c.is_ascii_digit() || (c == '-' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                let mut s = String::new();
                if c == '-' {
                    s.push('-');
                    self.bump();
                }
                while let Some(d) = self.peek(0) {
                    if d.is_ascii_digit() {
                        s.push(d);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Int(
                    s.parse()
                        .map_err(|_| self.err(line, col, format!("integer `{s}` out of range")))?,
                )
            } else if c == '#' {
                self.bump();
                match self.word().as_str() {
                    "sum" => Tok::Sum,
                    "count" => Tok::Count,
                    "true" => Tok::True,
                    w => return Err(self.err(line, col, format!("unsupported directive `#{w}`"))),
                }
            } else {
                self.bump();
                let next = self.peek(0);
                match (c, next) {
                    (':', Some('-')) => {
                        self.bump();
                        Tok::If
                    }
                    (':', Some('~')) => {
                        self.bump();
                        Tok::WeakIf
                    }
                    ('!', Some('=')) => {
                        self.bump();
                        Tok::Op(CmpOp::Ne)
                    }
                    ('<', Some('=')) => {
                        self.bump();
                        Tok::Op(CmpOp::Le)
                    }
                    ('>', Some('=')) => {
                        self.bump();
                        Tok::Op(CmpOp::Ge)
                    }
                    (':', _) => Tok::Colon,
                    ('.', _) => Tok::Dot,
                    (',', _) => Tok::Comma,
                    (';', _) => Tok::Semi,
                    ('(', _) => Tok::LParen,
                    (')', _) => Tok::RParen,
                    ('{', _) => Tok::LBrace,
                    ('}', _) => Tok::RBrace,
                    ('[', _) => Tok::LBrack,
                    (']', _) => Tok::RBrack,
                    ('@', _) => Tok::At,
                    ('=', _) => Tok::Op(CmpOp::Eq),
                    ('<', _) => Tok::Op(CmpOp::Lt),
                    ('>', _) => Tok::Op(CmpOp::Gt),
                    _ => return Err(self.err(line, col, format!("unexpected character `{c}`"))),
                }
            };
            out.push((tok, span(self.file, line, col)));
        }
        out.push((Tok::Eof, span(self.file, self.line, self.col)));
        Ok(out)
    }
}

/// A parsed statement before sectioning.
enum Stmt {
    Rules(Vec<Rule>),
    Weak(WeakConstraint),
}

struct Parser {
    toks: Vec<(Tok, SourceSpan)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].1.clone()
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: String) -> PResult<T> {
        Err(ParseError::Syntax {
            span: self.span(),
            message,
        })
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected {t}, found {}", self.peek()))
        }
    }

    fn term(&mut self) -> PResult<Term> {
        match self.bump() {
            Tok::Int(v) => Ok(Term::Int(v)),
            Tok::Ident(s) => Ok(Term::Sym(s)),
            Tok::Var(s) => Ok(Term::Var(s)),
            t => {
                self.pos -= 1;
                self.fail(format!("expected a term, found {t}"))
            }
        }
    }

    fn terms_until(&mut self, stop: &Tok) -> PResult<Vec<Term>> {
        let mut out = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.term()?);
        }
        if self.peek() != stop {
            return self.fail(format!("expected {stop}, found {}", self.peek()));
        }
        Ok(out)
    }

    fn atom(&mut self) -> PResult<Atom> {
        let Tok::Ident(pred) = self.peek().clone() else {
            return self.fail(format!("expected an atom, found {}", self.peek()));
        };
        self.bump();
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            args = self.terms_until(&Tok::RParen)?;
            self.bump();
        }
        Ok(Atom { pred, args })
    }

    fn aggregate(&mut self) -> PResult<(AggFn, Vec<AggElement>)> {
        let func = match self.bump() {
            Tok::Sum => AggFn::Sum,
            Tok::Count => AggFn::Count,
            _ => unreachable!(),
        };
        self.expect(Tok::LBrace)?;
        let mut elements = Vec::new();
        if *self.peek() != Tok::RBrace {
            loop {
                let mut terms = vec![self.term()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    terms.push(self.term()?);
                }
                let mut cond = Vec::new();
                if *self.peek() == Tok::Colon {
                    self.bump();
                    cond = self.body(&[Tok::Semi, Tok::RBrace])?;
                }
                elements.push(AggElement { terms, cond });
                if *self.peek() == Tok::Semi {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RBrace)?;
        Ok((func, elements))
    }

    /// Returns `None` for `#true`, which is dropped.
    fn literal(&mut self) -> PResult<Option<Literal>> {
        match self.peek().clone() {
            Tok::True => {
                self.bump();
                Ok(None)
            }
            Tok::Not => {
                self.bump();
                if matches!(self.peek(), Tok::Sum | Tok::Count) {
                    return self.fail("negated aggregates are not supported".into());
                }
                Ok(Some(Literal::Neg(self.atom()?)))
            }
            Tok::Sum | Tok::Count => {
                let (func, elements) = self.aggregate()?;
                let Tok::Op(op) = self.peek().clone() else {
                    return self.fail("aggregate needs a comparison guard".into());
                };
                self.bump();
                let guard = self.term()?;
                Ok(Some(Literal::Agg(Aggregate {
                    func,
                    elements,
                    op,
                    guard,
                })))
            }
            Tok::Ident(_) if !matches!(self.peek_at(1), Tok::Op(_)) => Ok(Some(Literal::Pos(self.atom()?))),
            _ => {
                let lhs = self.term()?;
                let Tok::Op(op) = self.peek().clone() else {
                    return self.fail(format!("expected a comparison, found {}", self.peek()));
                };
                self.bump();
                if matches!(self.peek(), Tok::Sum | Tok::Count) {
                    let (func, elements) = self.aggregate()?;
                    return Ok(Some(Literal::Agg(Aggregate {
                        func,
                        elements,
                        op: op.flip(),
                        guard: lhs,
                    })));
                }
                let rhs = self.term()?;
                Ok(Some(Literal::Cmp(lhs, op, rhs)))
            }
        }
    }

    fn body(&mut self, stops: &[Tok]) -> PResult<Vec<Literal>> {
        let mut out = Vec::new();
        loop {
            if let Some(l) = self.literal()? {
                out.push(l);
            }
            if *self.peek() == Tok::Comma {
                self.bump();
                continue;
            }
            if stops.contains(self.peek()) {
                return Ok(out);
            }
            return self.fail(format!("unexpected {} in body", self.peek()));
        }
    }

    fn opt_body(&mut self) -> PResult<Vec<Literal>> {
        if *self.peek() == Tok::If {
            self.bump();
            self.body(&[Tok::Dot])
        } else {
            Ok(Vec::new())
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        match self.peek().clone() {
            Tok::If => {
                self.bump();
                let body = self.body(&[Tok::Dot])?;
                self.expect(Tok::Dot)?;
                Ok(Stmt::Rules(vec![Rule::constraint(body)]))
            }
            Tok::WeakIf => {
                self.bump();
                let body = self.body(&[Tok::Dot])?;
                self.expect(Tok::Dot)?;
                self.expect(Tok::LBrack)?;
                let weight = self.term()?;
                self.expect(Tok::At)?;
                let level = match self.bump() {
                    Tok::Int(v) => v,
                    t => {
                        self.pos -= 1;
                        return self.fail(format!("level must be an integer constant, found {t}"));
                    }
                };
                let mut tuple = Vec::new();
                while *self.peek() == Tok::Comma {
                    self.bump();
                    tuple.push(self.term()?);
                }
                self.expect(Tok::RBrack)?;
                Ok(Stmt::Weak(WeakConstraint {
                    body,
                    weight,
                    level,
                    tuple,
                }))
            }
            Tok::LBrace => {
                self.bump();
                let mut heads = vec![self.atom()?];
                while *self.peek() == Tok::Semi {
                    self.bump();
                    heads.push(self.atom()?);
                }
                self.expect(Tok::RBrace)?;
                let body = self.opt_body()?;
                self.expect(Tok::Dot)?;
                Ok(Stmt::Rules(desugar_choice(&heads, &body)))
            }
            Tok::Ident(_) => {
                let head = self.atom()?;
                let body = self.opt_body()?;
                self.expect(Tok::Dot)?;
                Ok(Stmt::Rules(vec![Rule::new(head, body)]))
            }
            t => self.fail(format!("expected a statement, found {t}")),
        }
    }
}

/// `{a1;..;an} :- B.` becomes, per element, the even loop
/// `ai :- B, not caspr_n_ai.` and `caspr_n_ai :- B, not ai.`
pub fn desugar_choice(heads: &[Atom], body: &[Literal]) -> Vec<Rule> {
    let mut out = Vec::new();
    for h in heads {
        let comp = Atom {
            pred: format!("{CHOICE_PREFIX}{}", h.pred),
            args: h.args.clone(),
        };
        let mut b1 = body.to_vec();
        b1.push(Literal::Neg(comp.clone()));
        out.push(Rule::new(h.clone(), b1));
        let mut b2 = body.to_vec();
        b2.push(Literal::Neg(h.clone()));
        out.push(Rule::new(comp, b2));
    }
    out
}

fn check_safe(stmt: &Stmt, span: &SourceSpan) -> PResult<()> {
    let bad = match stmt {
        Stmt::Rules(rs) => rs.iter().find_map(|r| validate::rule_unsafe(r).into_iter().next()),
        Stmt::Weak(w) => validate::weak_unsafe(w).into_iter().next(),
    };
    match bad {
        Some(var) => Err(ParseError::Safety {
            span: span.clone(),
            var,
        }),
        None => Ok(()),
    }
}

const INPUT: &str = "<input>";

/// Parses plain program text. Directives are not allowed.
pub fn parse_program(text: &str) -> PResult<Program> {
    let toks = Lexer::new(text, INPUT).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    let mut prog = Program::new();
    while *p.peek() != Tok::Eof {
        let sp = p.span();
        if let Tok::Directive(d) = p.peek() {
            return Err(ParseError::Section {
                span: sp,
                message: format!("directive `%@{d}` in a plain program"),
            });
        }
        let stmt = p.statement()?;
        check_safe(&stmt, &sp)?;
        match stmt {
            Stmt::Rules(rs) => prog.rules.extend(rs),
            Stmt::Weak(w) => prog.weaks.push(w),
        }
    }
    Ok(prog)
}

/// Parses the sectioned format and validates the result.
pub fn parse_quantified(text: &str) -> PResult<QuantifiedProgram> {
    let toks = Lexer::new(text, INPUT).tokens()?;
    let mut p = Parser { toks, pos: 0 };
    // Sections in order: quantifier 1, quantifier 2, constraint, global.
    let mut quants: Vec<Quantifier> = Vec::new();
    let mut progs: [Program; 4] = Default::default();
    let mut current: Option<usize> = None;
    let mut seen = [false; 4];
    while *p.peek() != Tok::Eof {
        let sp = p.span();
        if let Tok::Directive(d) = p.peek().clone() {
            p.bump();
            let idx = match d.as_str() {
                "exists" | "forall" => {
                    if quants.len() == 2 {
                        return Err(ParseError::Section {
                            span: sp,
                            message: "more than two quantifier sections".into(),
                        });
                    }
                    if seen[2] || seen[3] {
                        return Err(ParseError::Section {
                            span: sp,
                            message: "quantifier section after constraint or global section".into(),
                        });
                    }
                    quants.push(if d == "exists" {
                        Quantifier::Exists
                    } else {
                        Quantifier::Forall
                    });
                    quants.len() - 1
                }
                "constraint" => 2,
                _ => 3,
            };
            if idx >= 2 {
                if quants.len() < 2 {
                    return Err(ParseError::Section {
                        span: sp,
                        message: format!("`%@{d}` before both quantifier sections"),
                    });
                }
                if seen[idx] || (idx == 2 && seen[3]) {
                    return Err(ParseError::Section {
                        span: sp,
                        message: format!("duplicate or misordered `%@{d}` section"),
                    });
                }
            }
            seen[idx] = true;
            current = Some(idx);
            continue;
        }
        let Some(idx) = current else {
            return Err(ParseError::Section {
                span: sp,
                message: "statement before the first section directive".into(),
            });
        };
        let stmt = p.statement()?;
        check_safe(&stmt, &sp)?;
        match (idx, stmt) {
            (3, Stmt::Rules(_)) => {
                return Err(ParseError::Syntax {
                    span: sp,
                    message: "the global section admits weak constraints only".into(),
                })
            }
            (2, Stmt::Weak(_)) => {
                return Err(ParseError::Syntax {
                    span: sp,
                    message: "the constraint section admits no weak constraints".into(),
                })
            }
            (i, Stmt::Rules(rs)) => progs[i].rules.extend(rs),
            (i, Stmt::Weak(w)) => progs[i].weaks.push(w),
        }
    }
    if quants.len() != 2 {
        return Err(ParseError::Section {
            span: p.span(),
            message: format!("expected two quantifier sections, found {}", quants.len()),
        });
    }
    let [p1, p2, c, g] = progs;
    let qp = QuantifiedProgram {
        q1: quants[0],
        p1,
        q2: quants[1],
        p2,
        c,
        cw: g.weaks,
    };
    if let Some(d) = validate::errors(&qp).into_iter().next() {
        return Err(ParseError::Invalid {
            span: span(INPUT, 1, 1),
            diagnostic: d,
        });
    }
    Ok(qp)
}

/// Renders a quantified program in the sectioned format.
pub fn emit_quantified(qp: &QuantifiedProgram) -> String {
    let mut out = String::new();
    out.push_str(qp.q1.directive());
    out.push('\n');
    out.push_str(&crate::emit::emit_text(&qp.p1));
    out.push_str(qp.q2.directive());
    out.push('\n');
    out.push_str(&crate::emit::emit_text(&qp.p2));
    out.push_str("%@constraint\n");
    out.push_str(&crate::emit::emit_text(&qp.c));
    if !qp.cw.is_empty() {
        out.push_str("%@global\n");
        out.push_str(&crate::emit::emit_text(&Program {
            rules: Vec::new(),
            weaks: qp.cw.clone(),
        }));
    }
    out
}

/// Parses a single ground atom as printed by the solver, e.g. `p(1,a)`.
pub fn parse_ground_atom(text: &str) -> Option<Atom> {
    let toks = Lexer::new(text, INPUT).tokens().ok()?;
    let mut p = Parser { toks, pos: 0 };
    let a = p.atom().ok()?;
    (*p.peek() == Tok::Eof && a.is_ground()).then_some(a)
}
