//! Optimal quantified answer sets by upper-bound and lower-bound
//! improvement on top of the CEGAR engine.

use std::time::Instant;

use thiserror::Error;

use crate::ast::{
    Atom, CmpOp, Interpretation, Literal, Program, QuantifiedProgram, Quantifier, Rule, Term, WeakConstraint,
};
use crate::cost::{dominates, evaluate_cost, CostError, CostVector};
use crate::engine::{Engine, EngineError, EngineOptions, Outcome, RefineStyle};
use crate::oracle::SolverConfig;
use crate::reference::Reference;
use crate::transform::{check_dom, cost_program, DomNames, SignatureTag};

#[derive(Debug, Error)]
pub enum OptError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("optimization needs an existential first quantifier")]
    NotExistential,
    #[error("upper bound {new} does not improve on {old}")]
    BoundNotImproved { old: CostVector, new: CostVector },
}

#[derive(Clone, Debug, PartialEq)]
pub enum OptOutcome {
    Optimal { mv: Interpretation, cost: CostVector },
    NoQas,
    Unknown(String),
}

#[derive(Clone, Debug, Default)]
pub struct OptStats {
    /// Number of quantified answer sets found along the way.
    pub qas_found: usize,
    pub oracle_calls: usize,
    pub iterations: usize,
    pub countermoves: usize,
    /// Costs of the successive quantified answer sets (upper-bound strategy).
    pub bounds: Vec<CostVector>,
    pub overturned_defeats: usize,
}

#[derive(Clone, Debug)]
pub struct OptResult {
    pub outcome: OptOutcome,
    pub stats: OptStats,
}

#[derive(Clone, Debug, Default)]
pub struct OptOptions {
    pub deadline: Option<Instant>,
}

/// Moves global weak constraints strictly below the refinement levels,
/// keeping their relative order.
pub fn shift_global_levels(cw: &[WeakConstraint], l_min: i64) -> Vec<WeakConstraint> {
    let Some(max) = cw.iter().map(|w| w.level).max() else {
        return Vec::new();
    };
    let lambda = (l_min - 3) - max - 1;
    cw.iter()
        .map(|w| WeakConstraint {
            level: w.level + lambda,
            ..w.clone()
        })
        .collect()
}

fn stats_from(engine: &Engine<'_>, stats: &mut OptStats) {
    stats.oracle_calls = engine.oracle_calls();
    stats.countermoves = engine.records().len();
}

fn require_exists(qp: &QuantifiedProgram) -> Result<(), OptError> {
    if qp.q1 != Quantifier::Exists {
        return Err(OptError::NotExistential);
    }
    Ok(())
}

/// Abstraction accepting only P1-optimal moves whose global cost strictly
/// improves on `bound`. With the local cost pinned to v*, this is the same
/// as improving the merged cost.
fn improving_base(qp: &QuantifiedProgram, v_star: &CostVector, bound: &CostVector) -> Program {
    let loc = SignatureTag::new("loc", "");
    let glb = SignatureTag::new("glb", "");
    let prev = SignatureTag::new("prev", "");
    let mut base = qp.p1.clone();
    if !qp.p1.weaks.is_empty() {
        base.extend(cost_program(&weak_program(qp.p1.weaks.clone()), &loc));
        for level in qp.p1.levels() {
            base.rules.push(Rule::constraint(vec![
                Literal::Pos(Atom::new(
                    &format!("caspr_cl_{}", loc.id()),
                    vec![Term::var("T"), Term::Int(level)],
                )),
                Literal::Cmp(Term::var("T"), CmpOp::Ne, Term::Int(v_star.get(level))),
            ]));
        }
    }
    let global = weak_program(qp.cw.clone());
    base.extend(cost_program(&global, &glb));
    for level in global.levels() {
        base.rules.push(Rule::fact(Atom::new(
            &format!("caspr_cl_{}", prev.id()),
            vec![Term::Int(bound.get(level)), Term::Int(level)],
        )));
    }
    let improved = Atom::prop("caspr_improved");
    let names = DomNames {
        diff: "caspr_diff_upper".into(),
        has_higher: "caspr_hashigher_upper".into(),
        highest: "caspr_highest_upper".into(),
        dom: improved.clone(),
    };
    base.extend(check_dom(&prev, &glb, &names));
    base.rules.push(Rule::constraint(vec![Literal::Neg(improved)]));
    base
}

fn weak_program(weaks: Vec<WeakConstraint>) -> Program {
    Program {
        rules: Vec::new(),
        weaks,
    }
}

/// Finds a quantified answer set, then repeatedly asks for one with a
/// strictly better merged cost until none exists.
pub fn solve_upper(qp: &QuantifiedProgram, cfg: &SolverConfig) -> Result<OptResult, OptError> {
    solve_upper_with(qp, cfg, &OptOptions::default())
}

pub fn solve_upper_with(qp: &QuantifiedProgram, cfg: &SolverConfig, opts: &OptOptions) -> Result<OptResult, OptError> {
    require_exists(qp)?;
    let eopts = EngineOptions {
        deadline: opts.deadline,
        ..EngineOptions::default()
    };
    let mut engine = Engine::new(qp, cfg, eopts)?;
    let mut stats = OptStats::default();
    let first = engine.run(&qp.p1)?;
    stats.iterations += first.stats.iterations;
    stats.overturned_defeats += first.stats.overturned_defeats;
    let (mut best, mut cost) = match first.outcome {
        Outcome::Winning(m) => {
            let c = Reference::merged_cost(qp, &m)?;
            (m, c)
        }
        Outcome::NoWinningMove => {
            stats_from(&engine, &mut stats);
            return Ok(OptResult {
                outcome: OptOutcome::NoQas,
                stats,
            });
        }
        Outcome::Unknown(r) => {
            stats_from(&engine, &mut stats);
            return Ok(OptResult {
                outcome: OptOutcome::Unknown(r),
                stats,
            });
        }
    };
    stats.qas_found = 1;
    stats.bounds.push(cost.clone());
    if qp.cw.is_empty() {
        stats_from(&engine, &mut stats);
        return Ok(OptResult {
            outcome: OptOutcome::Optimal { mv: best, cost },
            stats,
        });
    }
    let v_star = evaluate_cost(&qp.p1.weaks, &best)?;
    let mut global = evaluate_cost(&qp.cw, &best)?;
    loop {
        let base = improving_base(qp, &v_star, &global);
        let res = engine.run(&base)?;
        stats.iterations += res.stats.iterations;
        stats.overturned_defeats += res.stats.overturned_defeats;
        match res.outcome {
            Outcome::Winning(m) => {
                let c = Reference::merged_cost(qp, &m)?;
                if !dominates(&c, &cost) {
                    return Err(OptError::BoundNotImproved { old: cost, new: c });
                }
                log::debug!("upper bound improved to {c}");
                stats.qas_found += 1;
                stats.bounds.push(c.clone());
                global = evaluate_cost(&qp.cw, &m)?;
                best = m;
                cost = c;
            }
            Outcome::NoWinningMove => break,
            Outcome::Unknown(r) => {
                stats_from(&engine, &mut stats);
                return Ok(OptResult {
                    outcome: OptOutcome::Unknown(r),
                    stats,
                });
            }
        }
    }
    stats_from(&engine, &mut stats);
    Ok(OptResult {
        outcome: OptOutcome::Optimal { mv: best, cost },
        stats,
    })
}

/// Runs a single CEGAR search whose abstraction also minimizes the global
/// weak constraints, remapped below every other level.
pub fn solve_lower(qp: &QuantifiedProgram, cfg: &SolverConfig) -> Result<OptResult, OptError> {
    solve_lower_with(qp, cfg, &OptOptions::default())
}

pub fn solve_lower_with(qp: &QuantifiedProgram, cfg: &SolverConfig, opts: &OptOptions) -> Result<OptResult, OptError> {
    require_exists(qp)?;
    let l_min = qp.p1.min_level().unwrap_or(0);
    let mut base = qp.p1.clone();
    base.weaks.extend(shift_global_levels(&qp.cw, l_min));
    let eopts = EngineOptions {
        style: RefineStyle::Strict,
        deadline: opts.deadline,
        ..EngineOptions::default()
    };
    let mut engine = Engine::new(qp, cfg, eopts)?;
    let res = engine.run(&base)?;
    let mut stats = OptStats {
        iterations: res.stats.iterations,
        ..OptStats::default()
    };
    stats_from(&engine, &mut stats);
    let outcome = match res.outcome {
        Outcome::Winning(m) => {
            let cost = Reference::merged_cost(qp, &m)?;
            stats.qas_found = 1;
            stats.bounds.push(cost.clone());
            OptOutcome::Optimal { mv: m, cost }
        }
        Outcome::NoWinningMove => OptOutcome::NoQas,
        Outcome::Unknown(r) => OptOutcome::Unknown(r),
    };
    Ok(OptResult { outcome, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels(ws: &[WeakConstraint]) -> Vec<i64> {
        ws.iter().map(|w| w.level).collect()
    }

    #[test]
    fn shift_examples() {
        let ws = vec![WeakConstraint::new(vec![], 1, 1), WeakConstraint::new(vec![], 1, 2)];
        assert_eq!(levels(&shift_global_levels(&ws, 0)), vec![-5, -4]);
        assert!(shift_global_levels(&[], 0).is_empty());
        let w0 = vec![WeakConstraint::new(vec![], 1, 0)];
        assert_eq!(levels(&shift_global_levels(&w0, 0)), vec![-4]);
        let w1 = vec![WeakConstraint::new(vec![], 1, 1)];
        assert_eq!(levels(&shift_global_levels(&w1, 0)), vec![-4]);
    }
}
