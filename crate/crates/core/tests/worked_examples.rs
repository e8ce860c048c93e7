//! Golden tests for the running example and its transformations.

mod common;

use std::time::Instant;

use caspr::ast::props;
use caspr::engine::{find_winning_move, Outcome};
use caspr::optimize::{solve_lower, solve_upper, OptOutcome};
use caspr::oracle::solve_optimal;
use caspr::reference::{coherent, enumerate_qas, optimal_qas, Reference, ReferenceOptions};
use caspr::transform::{check_as, complement, ctr, fix, ref_program, relaxed, CountermoveRecord, UNSAT};
use caspr::{CostVector, Interpretation, Literal};

use common::{cfg, prog, qprog, RUNNING, THREE_CHECKS};

#[test]
fn running_example_engine() {
    let start = Instant::now();
    let qp = qprog(RUNNING);
    let cfg = cfg();
    let res = find_winning_move(&qp, &cfg).unwrap();
    let Outcome::Winning(m) = &res.outcome else {
        panic!("expected a winning move, got {:?}", res.outcome);
    };
    assert_ne!(m, &props(&["na", "nb"]));
    let mut r = Reference::new(&qp, &cfg, ReferenceOptions::default());
    assert!(r.countermoves(m).unwrap().is_empty());
    assert!(r.inner(&props(&["a", "nb"])).unwrap());
    assert!(!r.inner(&props(&["na", "nb"])).unwrap());
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn running_example_reference() {
    let qp = qprog(RUNNING);
    let cfg = cfg();
    assert!(coherent(&qp, &cfg).unwrap());
    let qas = enumerate_qas(&qp, &cfg).unwrap();
    let mut expected = vec![props(&["a", "nb"]), props(&["a", "b"]), props(&["na", "b"])];
    expected.sort();
    assert_eq!(qas, expected);
}

#[test]
fn running_example_without_weaks() {
    let mut qp = qprog(RUNNING);
    qp.p2.weaks.clear();
    let cfg = cfg();
    let mut r = Reference::new(&qp, &cfg, ReferenceOptions::default());
    assert!(!r.inner(&props(&["a", "nb"])).unwrap());
    assert!(r.coherent().unwrap());
    assert!(matches!(
        find_winning_move(&qp, &cfg).unwrap().outcome,
        Outcome::Winning(_)
    ));
}

#[test]
fn running_example_with_global_weak() {
    let qp = qprog(&format!("{RUNNING}%@global\n:~ a. [1@1]\n"));
    let cfg = cfg();
    let (opt, cost) = optimal_qas(&qp, &cfg).unwrap();
    assert_eq!(opt, vec![props(&["na", "b"])]);
    assert_eq!(cost, Some(CostVector::from_pairs(&[(1, 0)])));
    for res in [solve_upper(&qp, &cfg).unwrap(), solve_lower(&qp, &cfg).unwrap()] {
        assert_eq!(
            res.outcome,
            OptOutcome::Optimal {
                mv: props(&["na", "b"]),
                cost: CostVector::from_pairs(&[(1, 0)]),
            }
        );
    }
}

#[test]
fn three_checks_complement_and_relaxed() {
    let qp = qprog(THREE_CHECKS);
    assert_eq!(
        complement(&qp.c).unwrap(),
        prog("caspr_v :- b, c. caspr_v :- nb, nc. caspr_v :- b, a, nc. :- not caspr_v.")
    );
    assert_eq!(
        relaxed(&qp.c, 0),
        prog("caspr_unsat :- b, c. caspr_unsat :- nb, nc. caspr_unsat :- b, a, nc. :~ caspr_unsat. [1@0]")
    );
}

#[test]
fn three_checks_ctr() {
    let qp = qprog(THREE_CHECKS);
    let c = ctr(&qp).unwrap();
    let expected = prog(
        "c :- not nc. nc :- not c.
         :~ a, not c. [1@1]
         :~ b, not nc. [1@1]
         caspr_v :- b, c. caspr_v :- nb, nc. caspr_v :- b, a, nc.
         caspr_unsat :- not caspr_v.
         :~ caspr_unsat. [1@0]",
    );
    assert_eq!(c, expected);
    assert_eq!(c.len(), 9);
}

#[test]
fn three_checks_ctr_solves() {
    let start = Instant::now();
    let qp = qprog(THREE_CHECKS);
    let cfg = cfg();
    let c = ctr(&qp).unwrap();
    let heads = qp.p2.head_predicates();

    let mut p = c.clone();
    p.extend(fix(&qp.p1, &props(&["na", "nb"])).unwrap());
    let out = solve_optimal(&p, &cfg).unwrap();
    let m2 = out.model().expect("countermove program is coherent");
    assert!(!m2.iter().any(|a| a.pred == UNSAT));
    assert_eq!(m2.project(|p| heads.contains(p)), props(&["nc"]));

    let mut p = c;
    p.extend(fix(&qp.p1, &props(&["na", "b"])).unwrap());
    let out = solve_optimal(&p, &cfg).unwrap();
    let m2 = out.model().expect("countermove program is coherent");
    assert!(m2.iter().any(|a| a.pred == UNSAT));
    assert!(start.elapsed().as_secs_f64() < 5.0);
}

#[test]
fn three_checks_check_as() {
    let qp = qprog(THREE_CHECKS);
    let rec = CountermoveRecord::new(1, props(&["c"]));
    let expected = prog(
        "caspr_pos_ce1_c :- not caspr_neg_ce1_nc.
         caspr_pos_ce1_nc :- not caspr_neg_ce1_c.
         caspr_neg_ce1_c.
         caspr_fail_ce1 :- caspr_pos_ce1_c, not caspr_neg_ce1_c.
         caspr_fail_ce1 :- caspr_neg_ce1_c, not caspr_pos_ce1_c.
         caspr_fail_ce1 :- caspr_pos_ce1_nc, not caspr_neg_ce1_nc.
         caspr_fail_ce1 :- caspr_neg_ce1_nc, not caspr_pos_ce1_nc.
         caspr_as_ce1 :- not caspr_fail_ce1.",
    );
    assert_eq!(check_as(&qp.p2, &rec), expected);
}

#[test]
fn three_checks_ref() {
    let qp = qprog(THREE_CHECKS);
    let rec = CountermoveRecord::new(1, props(&["nc"]));
    let expected = prog(
        "caspr_pos_ce1_c :- not caspr_neg_ce1_nc.
         caspr_pos_ce1_nc :- not caspr_neg_ce1_c.
         caspr_neg_ce1_nc.
         caspr_fail_ce1 :- caspr_pos_ce1_c, not caspr_neg_ce1_c.
         caspr_fail_ce1 :- caspr_neg_ce1_c, not caspr_pos_ce1_c.
         caspr_fail_ce1 :- caspr_pos_ce1_nc, not caspr_neg_ce1_nc.
         caspr_fail_ce1 :- caspr_neg_ce1_nc, not caspr_pos_ce1_nc.
         caspr_as_ce1 :- not caspr_fail_ce1.
         :~ caspr_as_ce1. [1@-1]

         caspr_v_neg_ce1(1,1) :- a, not caspr_neg_ce1_c, caspr_as_ce1.
         caspr_v_neg_ce1(1,1) :- b, not caspr_neg_ce1_nc, caspr_as_ce1.
         caspr_cl_neg_ce1(T,1) :- #sum{C : caspr_v_neg_ce1(C,1)} = T, caspr_as_ce1.

         caspr_clone_ce1_c :- not caspr_clone_ce1_nc, caspr_as_ce1.
         caspr_clone_ce1_nc :- not caspr_clone_ce1_c, caspr_as_ce1.

         caspr_v_clone_ce1(1,1) :- a, not caspr_clone_ce1_c, caspr_as_ce1.
         caspr_v_clone_ce1(1,1) :- b, not caspr_clone_ce1_nc, caspr_as_ce1.
         caspr_cl_clone_ce1(T,1) :- #sum{C : caspr_v_clone_ce1(C,1)} = T, caspr_as_ce1.

         caspr_diff_ce1(L) :- caspr_cl_neg_ce1(C1,L), caspr_cl_clone_ce1(C2,L), C1 != C2, caspr_as_ce1.
         caspr_hashigher_ce1(L) :- caspr_diff_ce1(L), caspr_diff_ce1(L1), L < L1, caspr_as_ce1.
         caspr_highest_ce1(L) :- caspr_diff_ce1(L), not caspr_hashigher_ce1(L), caspr_as_ce1.
         caspr_dom_ce1 :- caspr_highest_ce1(L), caspr_cl_neg_ce1(C1,L), caspr_cl_clone_ce1(C2,L), C2 < C1, caspr_as_ce1.
         :~ caspr_as_ce1, not caspr_dom_ce1. [1@-2]

         caspr_neg_ce1_caspr_unsat :- b, caspr_neg_ce1_c, caspr_as_ce1.
         caspr_neg_ce1_caspr_unsat :- nb, caspr_neg_ce1_nc, caspr_as_ce1.
         caspr_neg_ce1_caspr_unsat :- b, a, caspr_neg_ce1_nc, caspr_as_ce1.
         :~ caspr_neg_ce1_caspr_unsat, caspr_as_ce1. [1@-3]",
    );
    assert_eq!(ref_program(&qp, &rec).unwrap(), expected);
}

/// After refining with {nc}, the abstraction moves away from {na,nb}.
#[test]
fn three_checks_refined_abstraction() {
    let qp = qprog(THREE_CHECKS);
    let cfg = cfg();
    let rec = CountermoveRecord::new(1, props(&["nc"]));
    let mut a = qp.p1.clone();
    a.extend(ref_program(&qp, &rec).unwrap());
    let n = solve_optimal(&a, &cfg).unwrap();
    let m1: Interpretation = n.model().unwrap().project(|p| ["a", "na", "b", "nb"].contains(&p));
    assert_ne!(m1, props(&["na", "nb"]));
    let dom_guard = Literal::Pos(rec.names.as_atom.clone());
    assert!(matches!(dom_guard, Literal::Pos(_)));
}

/// Local and global weak constraints with equal tuples are costed
/// separately and summed.
#[test]
fn merged_cost_sums_local_and_global() {
    let qp = qprog(
        "%@exists
a.
b :- not nb. nb :- not b.
c :- not nc. nc :- not c.
:- b, c. :- nb, nc.
:~ a. [1@1]
%@forall
d :- not e. e :- not d.
%@global
:~ b. [1@1]
:~ c. [1@0]
",
    );
    let cfg = cfg();
    let best = CostVector::from_pairs(&[(1, 1), (0, 1)]);
    let (opt, cost) = optimal_qas(&qp, &cfg).unwrap();
    assert_eq!(opt, vec![props(&["a", "c", "nb"])]);
    assert_eq!(cost, Some(best.clone()));
    for res in [solve_upper(&qp, &cfg).unwrap(), solve_lower(&qp, &cfg).unwrap()] {
        assert_eq!(
            res.outcome,
            OptOutcome::Optimal {
                mv: props(&["a", "c", "nb"]),
                cost: best.clone(),
            }
        );
    }
}

#[test]
fn three_checks_instance_has_winning_move() {
    let qp = qprog(THREE_CHECKS);
    let cfg = cfg();
    let mut r = Reference::new(&qp, &cfg, ReferenceOptions::default());
    assert!(r.countermoves(&props(&["na", "b"])).unwrap().is_empty());
    assert_eq!(r.countermoves(&props(&["na", "nb"])).unwrap(), vec![props(&["nc"])]);
    let res = find_winning_move(&qp, &cfg).unwrap();
    let Outcome::Winning(m) = res.outcome else {
        panic!("expected a winning move");
    };
    assert!(r.countermoves(&m).unwrap().is_empty());
}

#[test]
fn inner_program_without_answer_sets() {
    let qp = qprog("%@exists\na :- not b.\nb :- not a.\n%@forall\n:- a.\n:- b.\n");
    let res = find_winning_move(&qp, &cfg()).unwrap();
    assert!(matches!(res.outcome, Outcome::Winning(_)));
    assert_eq!(res.stats.iterations, 1);
    assert!(res.stats.countermoves.is_empty());
}
