//! The counterexample-guided abstraction refinement loop.

use std::collections::BTreeSet;
use std::time::Instant;

use thiserror::Error;

use crate::ast::{Interpretation, Literal, Program, QuantifiedProgram, Rule, RESERVED_PREFIX};
use crate::cost::{evaluate_cost, CostError, CostVector};
use crate::oracle::{solve_optimal, OracleError, SolveStatus, SolverConfig};
use crate::transform::{ctr, fix, ref_program, strict_ref_program, CountermoveRecord, TransformError, UNSAT};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("countermove {0} was found twice")]
    RepeatedCountermove(String),
}

/// How recorded countermoves constrain the abstraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefineStyle {
    /// Weak constraints below P1's levels, as in the refinement program.
    Weighted,
    /// Hard constraints: no abstraction model may be countered by a
    /// recorded countermove.
    Strict,
}

#[derive(Clone, Debug)]
pub struct EngineOptions {
    pub style: RefineStyle,
    /// On a detected defeat, look for another optimal move that evades every
    /// recorded countermove before giving up.
    pub confirm_defeat: bool,
    pub max_iterations: Option<usize>,
    pub deadline: Option<Instant>,
    /// Re-check `NoWinningMove` answers with the reference evaluator when
    /// P1 has at most this many optimal answer sets.
    pub paranoid: Option<usize>,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            style: RefineStyle::Weighted,
            confirm_defeat: true,
            max_iterations: None,
            deadline: None,
            paranoid: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Winning(Interpretation),
    NoWinningMove,
    Unknown(String),
}

#[derive(Clone, Debug, Default)]
pub struct CegarStats {
    pub iterations: usize,
    pub oracle_calls: usize,
    pub countermoves: Vec<CountermoveRecord>,
    /// Defeats reported by the weighted check that a confirmation solve
    /// showed to be spurious.
    pub overturned_defeats: usize,
    /// Disagreement found by the paranoid re-check.
    pub discrepancy: Option<String>,
}

#[derive(Clone, Debug)]
pub struct CegarResult {
    pub outcome: Outcome,
    pub stats: CegarStats,
    /// Full abstraction model behind a winning move.
    pub witness: Option<Interpretation>,
}

/// True iff some record's three refinement weak constraints are all
/// violated by `n`, so its countermove also counters `n`'s move.
pub fn defeat_check(n: &Interpretation, cms: &[CountermoveRecord]) -> bool {
    cms.iter()
        .any(|r| n.contains(&r.names.as_atom) && !n.contains(&r.names.dom_atom) && n.contains(&r.names.unsat_neg_atom))
}

/// The atoms of `m2` over head predicates of P2.
pub fn extract_countermove(m2: &Interpretation, qp: &QuantifiedProgram) -> Interpretation {
    let heads = qp.p2.head_predicates();
    m2.project(|p| heads.contains(p))
}

fn defeat_constraints(cms: &[CountermoveRecord]) -> Vec<Rule> {
    cms.iter()
        .map(|r| {
            Rule::constraint(vec![
                Literal::Pos(r.names.as_atom.clone()),
                Literal::Neg(r.names.dom_atom.clone()),
                Literal::Pos(r.names.unsat_neg_atom.clone()),
            ])
        })
        .collect()
}

/// A stateful CEGAR run over one quantified program. Recorded countermoves
/// persist across calls to [`Engine::run`].
pub struct Engine<'a> {
    qp: &'a QuantifiedProgram,
    cfg: &'a SolverConfig,
    pub opts: EngineOptions,
    ctr: Program,
    vocab: BTreeSet<String>,
    records: Vec<CountermoveRecord>,
    refs: Program,
    v_star: Option<CostVector>,
    calls: usize,
}

enum Step<T> {
    Done(T),
    Stop(Outcome),
}

impl<'a> Engine<'a> {
    pub fn new(
        qp: &'a QuantifiedProgram,
        cfg: &'a SolverConfig,
        opts: EngineOptions,
    ) -> Result<Engine<'a>, EngineError> {
        Ok(Engine {
            ctr: ctr(qp)?,
            vocab: qp.p1_vocabulary(),
            qp,
            cfg,
            opts,
            records: Vec::new(),
            refs: Program::new(),
            v_star: None,
            calls: 0,
        })
    }

    pub fn records(&self) -> &[CountermoveRecord] {
        &self.records
    }

    pub fn oracle_calls(&self) -> usize {
        self.calls
    }

    /// Restriction of an abstraction model to the P1 vocabulary.
    pub fn project(&self, n: &Interpretation) -> Interpretation {
        n.project(|p| self.vocab.contains(p) && !p.starts_with(RESERVED_PREFIX))
    }

    fn solve(&mut self, p: &Program, what: &str) -> Result<Step<Option<Interpretation>>, EngineError> {
        if let Some(d) = self.opts.deadline {
            if Instant::now() >= d {
                return Ok(Step::Stop(Outcome::Unknown("time limit reached".into())));
            }
        }
        self.calls += 1;
        let out = solve_optimal(p, self.cfg)?;
        Ok(match out.status {
            SolveStatus::Unknown => Step::Stop(Outcome::Unknown(format!("solver gave no answer for {what}"))),
            SolveStatus::Unsat => Step::Done(None),
            _ => Step::Done(out.models.into_iter().next()),
        })
    }

    /// Cost vector shared by all optimal answer sets of P1.
    fn p1_optimum(&mut self) -> Result<Step<Option<CostVector>>, EngineError> {
        if let Some(v) = &self.v_star {
            return Ok(Step::Done(Some(v.clone())));
        }
        if self.qp.p1.weaks.is_empty() {
            self.v_star = Some(CostVector::new());
            return Ok(Step::Done(self.v_star.clone()));
        }
        let p1 = self.qp.p1.clone();
        match self.solve(&p1, "P1")? {
            Step::Stop(o) => Ok(Step::Stop(o)),
            Step::Done(None) => Ok(Step::Done(None)),
            Step::Done(Some(m)) => {
                let v = evaluate_cost(&self.qp.p1.weaks, &self.project(&m))?;
                self.v_star = Some(v.clone());
                Ok(Step::Done(Some(v)))
            }
        }
    }

    fn local_cost(&self, m1: &Interpretation) -> Result<CostVector, EngineError> {
        Ok(evaluate_cost(&self.qp.p1.weaks, m1)?)
    }

    /// Whether `m1` is P1-optimal; `None` when the solver gave up.
    fn is_p1_optimal(&mut self, m1: &Interpretation) -> Result<Step<bool>, EngineError> {
        match self.p1_optimum()? {
            Step::Stop(o) => Ok(Step::Stop(o)),
            Step::Done(None) => Ok(Step::Done(false)),
            Step::Done(Some(v)) => Ok(Step::Done(self.local_cost(m1)? == v)),
        }
    }

    fn result(
        &self,
        outcome: Outcome,
        iterations: usize,
        overturned: usize,
        witness: Option<Interpretation>,
    ) -> CegarResult {
        CegarResult {
            outcome,
            stats: CegarStats {
                iterations,
                oracle_calls: self.calls,
                countermoves: self.records.clone(),
                overturned_defeats: overturned,
                discrepancy: None,
            },
            witness,
        }
    }

    /// Runs the loop with `base` as the unrefined abstraction; `base` must
    /// contain P1.
    pub fn run(&mut self, base: &Program) -> Result<CegarResult, EngineError> {
        let mut res = self.run_inner(base)?;
        if let (Some(cap), Outcome::NoWinningMove) = (self.opts.paranoid, &res.outcome) {
            if base == &self.qp.p1 {
                res.stats.discrepancy = self.paranoid_check(cap)?;
            }
        }
        Ok(res)
    }

    fn paranoid_check(&mut self, cap: usize) -> Result<Option<String>, EngineError> {
        let opts = crate::reference::ReferenceOptions { max_moves: cap };
        match crate::reference::has_winning_move(self.qp, self.cfg, &opts) {
            Ok(true) => {
                let msg = "engine reported no winning move but the reference evaluator found one".to_string();
                log::error!("{msg}");
                Ok(Some(msg))
            }
            Ok(false) => Ok(None),
            Err(e) => {
                log::warn!("paranoid re-check skipped: {e}");
                Ok(None)
            }
        }
    }

    fn run_inner(&mut self, base: &Program) -> Result<CegarResult, EngineError> {
        let mut iterations = 0;
        let mut overturned = 0;
        loop {
            let mut a = base.clone();
            a.extend(self.refs.clone());
            let n = match self.solve(&a, "the abstraction")? {
                Step::Stop(o) => return Ok(self.result(o, iterations, overturned, None)),
                Step::Done(None) => return Ok(self.result(Outcome::NoWinningMove, iterations, overturned, None)),
                Step::Done(Some(n)) => n,
            };
            let n = match self.opts.style {
                RefineStyle::Weighted if defeat_check(&n, &self.records) => {
                    if !self.opts.confirm_defeat {
                        return Ok(self.result(Outcome::NoWinningMove, iterations, overturned, None));
                    }
                    a.rules.extend(defeat_constraints(&self.records));
                    match self.solve(&a, "the defeat confirmation")? {
                        Step::Stop(o) => return Ok(self.result(o, iterations, overturned, None)),
                        Step::Done(None) => {
                            return Ok(self.result(Outcome::NoWinningMove, iterations, overturned, None))
                        }
                        Step::Done(Some(n2)) => match self.is_p1_optimal(&self.project(&n2))? {
                            Step::Stop(o) => return Ok(self.result(o, iterations, overturned, None)),
                            Step::Done(false) => {
                                return Ok(self.result(Outcome::NoWinningMove, iterations, overturned, None))
                            }
                            Step::Done(true) => {
                                overturned += 1;
                                log::info!("weighted defeat check overturned by confirmation solve");
                                n2
                            }
                        },
                    }
                }
                RefineStyle::Weighted => n,
                RefineStyle::Strict => match self.is_p1_optimal(&self.project(&n))? {
                    Step::Stop(o) => return Ok(self.result(o, iterations, overturned, None)),
                    Step::Done(false) => return Ok(self.result(Outcome::NoWinningMove, iterations, overturned, None)),
                    Step::Done(true) => n,
                },
            };
            let m1 = self.project(&n);
            iterations += 1;
            let mut check = self.ctr.clone();
            check.extend(fix(&self.qp.p1, &m1)?);
            let m2 = match self.solve(&check, "the countermove program")? {
                Step::Stop(o) => return Ok(self.result(o, iterations, overturned, None)),
                Step::Done(m2) => m2,
            };
            let m2 = match m2 {
                Some(m2) if !m2.iter().any(|a| a.pred == UNSAT && a.args.is_empty()) => m2,
                _ => {
                    log::debug!("winning move {m1} after {iterations} iterations");
                    return Ok(self.result(Outcome::Winning(m1), iterations, overturned, Some(n)));
                }
            };
            let ce = extract_countermove(&m2, self.qp);
            if self.records.iter().any(|r| r.ce == ce) {
                return Err(EngineError::RepeatedCountermove(ce.to_string()));
            }
            log::debug!("move {m1} countered by {ce}");
            let rec = CountermoveRecord::new(self.records.len() + 1, ce);
            let refinement = match self.opts.style {
                RefineStyle::Weighted => ref_program(self.qp, &rec)?,
                RefineStyle::Strict => strict_ref_program(self.qp, &rec)?,
            };
            self.refs.extend(refinement);
            self.records.push(rec);
            if self.opts.max_iterations.is_some_and(|cap| iterations >= cap) {
                return Ok(self.result(
                    Outcome::Unknown("iteration cap reached".into()),
                    iterations,
                    overturned,
                    None,
                ));
            }
        }
    }
}

/// Searches for a move of the first player that admits no countermove.
pub fn find_winning_move(qp: &QuantifiedProgram, cfg: &SolverConfig) -> Result<CegarResult, EngineError> {
    find_winning_move_with(qp, cfg, EngineOptions::default())
}

pub fn find_winning_move_with(
    qp: &QuantifiedProgram,
    cfg: &SolverConfig,
    opts: EngineOptions,
) -> Result<CegarResult, EngineError> {
    let mut engine = Engine::new(qp, cfg, opts)?;
    engine.run(&qp.p1)
}
