#![allow(dead_code)]

use caspr::parser::{parse_program, parse_quantified};
use caspr::{Program, QuantifiedProgram, SolverConfig};

pub fn cfg() -> SolverConfig {
    SolverConfig::from_env()
}

pub fn prog(text: &str) -> Program {
    parse_program(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

pub fn qprog(text: &str) -> QuantifiedProgram {
    parse_quantified(text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

pub const RUNNING: &str = "%@exists
a :- not na.
na :- not a.
b :- not nb.
nb :- not b.
%@forall
c :- not nc.
nc :- not c.
:~ a, not c. [1@1]
:~ b, not nc. [1@1]
%@constraint
:- nb, nc.
";

/// The program of the worked transformation examples: the running example with a
/// three-constraint check program.
pub const THREE_CHECKS: &str = "%@exists
a :- not na.
na :- not a.
b :- not nb.
nb :- not b.
%@forall
c :- not nc.
nc :- not c.
:~ a, not c. [1@1]
:~ b, not nc. [1@1]
%@constraint
:- b, c.
:- nb, nc.
:- b, a, nc.
";
