//! Direct nested-enumeration evaluator, used as ground truth.
//!
//! Every optimal answer set of P1 is tried in turn; for each one the inner
//! program is enumerated and checked against C. Nothing here depends on the
//! countermove or refinement transformations.

use thiserror::Error;

use crate::ast::{Atom, Interpretation, Program, QuantifiedProgram, Quantifier, Rule, RESERVED_PREFIX};
use crate::cost::{dominates, evaluate_cost, CostError, CostVector};
use crate::oracle::{enumerate_optimal, OracleError, SolveStatus, SolverConfig};
use crate::transform::{fix, TransformError};

/// Marks a violated constraint of C in the inner enumeration.
const VIOLATED: &str = "caspr_viol";

#[derive(Debug, Error)]
pub enum ReferenceError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error("solver gave no answer for {0}")]
    Unknown(String),
    #[error("P1 has more than {0} optimal answer sets")]
    TooManyMoves(usize),
    #[error("quantified answer sets are defined for an existential first quantifier only")]
    NotExistential,
}

#[derive(Clone, Debug)]
pub struct ReferenceOptions {
    /// Largest number of P1 optimal answer sets that will be enumerated.
    pub max_moves: usize,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        ReferenceOptions { max_moves: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceReport {
    pub coherent: bool,
    pub qas: Vec<Interpretation>,
    pub opt_qas: Vec<Interpretation>,
    pub opt_cost: Option<CostVector>,
    pub oracle_calls: usize,
}

/// Check program whose constraints derive a marker instead of failing.
fn marked(c: &Program) -> Program {
    Program::from_rules(
        c.rules
            .iter()
            .map(|r| match r.head {
                Some(_) => r.clone(),
                None => Rule::new(Atom::prop(VIOLATED), r.body.clone()),
            })
            .collect(),
    )
}

/// Evaluator state for one quantified program.
pub struct Reference<'a> {
    qp: &'a QuantifiedProgram,
    cfg: &'a SolverConfig,
    opts: ReferenceOptions,
    pub calls: usize,
}

impl<'a> Reference<'a> {
    pub fn new(qp: &'a QuantifiedProgram, cfg: &'a SolverConfig, opts: ReferenceOptions) -> Reference<'a> {
        Reference {
            qp,
            cfg,
            opts,
            calls: 0,
        }
    }

    fn enumerate(&mut self, p: &Program, what: &str) -> Result<Vec<Interpretation>, ReferenceError> {
        self.calls += 1;
        let out = enumerate_optimal(p, self.cfg)?;
        match out.status {
            SolveStatus::Unknown => Err(ReferenceError::Unknown(what.to_string())),
            _ => Ok(out.models),
        }
    }

    /// OptAS(P1), restricted to the P1 vocabulary.
    pub fn moves(&mut self) -> Result<Vec<Interpretation>, ReferenceError> {
        let vocab = self.qp.p1_vocabulary();
        let models = self.enumerate(&self.qp.p1.clone(), "P1")?;
        if models.len() > self.opts.max_moves {
            return Err(ReferenceError::TooManyMoves(self.opts.max_moves));
        }
        let mut out: Vec<Interpretation> = models
            .iter()
            .map(|m| m.project(|p| vocab.contains(p) && !p.starts_with(RESERVED_PREFIX)))
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Optimal answer sets of P2 ∪ fix(P1, m1), each paired with whether it
    /// satisfies C.
    pub fn inner_optima(&mut self, m1: &Interpretation) -> Result<Vec<(Interpretation, bool)>, ReferenceError> {
        let mut p = self.qp.p2.clone();
        p.extend(fix(&self.qp.p1, m1)?);
        p.extend(marked(&self.qp.c));
        let v = Atom::prop(VIOLATED);
        let models = self.enumerate(&p, "the inner program")?;
        Ok(models
            .into_iter()
            .map(|m| {
                let ok = !m.contains(&v);
                (m, ok)
            })
            .collect())
    }

    /// Whether the inner quantifier is satisfied for move `m1`.
    pub fn inner(&mut self, m1: &Interpretation) -> Result<bool, ReferenceError> {
        let optima = self.inner_optima(m1)?;
        Ok(match self.qp.q2 {
            Quantifier::Exists => optima.iter().any(|(_, ok)| *ok),
            Quantifier::Forall => optima.iter().all(|(_, ok)| *ok),
        })
    }

    /// Countermoves to `m1`: inner optima that refute it, projected onto the
    /// head predicates of P2.
    pub fn countermoves(&mut self, m1: &Interpretation) -> Result<Vec<Interpretation>, ReferenceError> {
        let heads = self.qp.p2.head_predicates();
        let refute_when = self.qp.q1 == Quantifier::Forall;
        let mut out: Vec<Interpretation> = self
            .inner_optima(m1)?
            .into_iter()
            .filter(|(_, ok)| *ok == refute_when)
            .map(|(m, _)| m.project(|p| heads.contains(p)))
            .collect();
        out.sort();
        out.dedup();
        Ok(out)
    }

    pub fn coherent(&mut self) -> Result<bool, ReferenceError> {
        let moves = self.moves()?;
        match self.qp.q1 {
            Quantifier::Exists => {
                for m in &moves {
                    if self.inner(m)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Quantifier::Forall => {
                for m in &moves {
                    if !self.inner(m)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Moves that admit no countermove.
    pub fn winning_moves(&mut self) -> Result<Vec<Interpretation>, ReferenceError> {
        let want = self.qp.q1 == Quantifier::Exists;
        let mut out = Vec::new();
        for m in self.moves()? {
            if self.inner(&m)? == want {
                out.push(m);
            }
        }
        Ok(out)
    }

    pub fn enumerate_qas(&mut self) -> Result<Vec<Interpretation>, ReferenceError> {
        if self.qp.q1 != Quantifier::Exists {
            return Err(ReferenceError::NotExistential);
        }
        self.winning_moves()
    }

    /// Cost of a move: its cost under P1's weak constraints plus its cost
    /// under the global ones.
    pub fn merged_cost(qp: &QuantifiedProgram, m: &Interpretation) -> Result<CostVector, CostError> {
        Ok(evaluate_cost(&qp.p1.weaks, m)?.merged(&evaluate_cost(&qp.cw, m)?))
    }

    pub fn optimal_qas(&mut self) -> Result<(Vec<Interpretation>, Option<CostVector>), ReferenceError> {
        let qas = self.enumerate_qas()?;
        Ok(optimal_among(self.qp, &qas)?)
    }

    pub fn report(&mut self) -> Result<ReferenceReport, ReferenceError> {
        let (coherent, qas) = match self.qp.q1 {
            Quantifier::Exists => {
                let qas = self.enumerate_qas()?;
                (!qas.is_empty(), qas)
            }
            Quantifier::Forall => (self.coherent()?, Vec::new()),
        };
        let (opt_qas, opt_cost) = optimal_among(self.qp, &qas)?;
        Ok(ReferenceReport {
            coherent,
            qas,
            opt_qas,
            opt_cost,
            oracle_calls: self.calls,
        })
    }
}

fn optimal_among(
    qp: &QuantifiedProgram,
    qas: &[Interpretation],
) -> Result<(Vec<Interpretation>, Option<CostVector>), CostError> {
    let mut costed = Vec::with_capacity(qas.len());
    for m in qas {
        costed.push((m.clone(), Reference::merged_cost(qp, m)?));
    }
    let Some(best) = costed
        .iter()
        .map(|(_, c)| c)
        .fold(None::<&CostVector>, |acc, c| match acc {
            Some(b) if !dominates(c, b) => Some(b),
            _ => Some(c),
        })
        .cloned()
    else {
        return Ok((Vec::new(), None));
    };
    let opt = costed.into_iter().filter(|(_, c)| *c == best).map(|(m, _)| m).collect();
    Ok((opt, Some(best)))
}

pub fn coherent(qp: &QuantifiedProgram, cfg: &SolverConfig) -> Result<bool, ReferenceError> {
    Reference::new(qp, cfg, ReferenceOptions::default()).coherent()
}

pub fn enumerate_qas(qp: &QuantifiedProgram, cfg: &SolverConfig) -> Result<Vec<Interpretation>, ReferenceError> {
    Reference::new(qp, cfg, ReferenceOptions::default()).enumerate_qas()
}

pub fn optimal_qas(
    qp: &QuantifiedProgram,
    cfg: &SolverConfig,
) -> Result<(Vec<Interpretation>, Option<CostVector>), ReferenceError> {
    Reference::new(qp, cfg, ReferenceOptions::default()).optimal_qas()
}

/// Whether the first player has a winning move: coherence for an
/// existential first quantifier, incoherence for a universal one.
pub fn has_winning_move(
    qp: &QuantifiedProgram,
    cfg: &SolverConfig,
    opts: &ReferenceOptions,
) -> Result<bool, ReferenceError> {
    let c = Reference::new(qp, cfg, opts.clone()).coherent()?;
    Ok(match qp.q1 {
        Quantifier::Exists => c,
        Quantifier::Forall => !c,
    })
}
