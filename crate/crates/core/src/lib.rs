//! Counterexample-guided solving of two-quantifier answer set programs with
//! weak constraints, using an external ASP solver as oracle.

pub mod ast;
pub mod cost;
pub mod emit;
pub mod engine;
pub mod generate;
pub mod optimize;
pub mod oracle;
pub mod parser;
pub mod reference;
pub mod transform;
pub mod validate;

pub use ast::{Atom, Interpretation, Literal, Program, QuantifiedProgram, Quantifier, Rule, Term, WeakConstraint};
pub use cost::{dominates, evaluate_cost, CostVector};
pub use oracle::{SolveOutcome, SolveStatus, SolverConfig};
