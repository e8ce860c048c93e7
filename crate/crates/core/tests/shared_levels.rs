//! Refinement weak constraints share their levels across countermoves, and
//! equal violation tuples count once, so a defeated move can tie with a
//! winning one in the abstraction.

mod common;

use caspr::ast::props;
use caspr::engine::{defeat_check, find_winning_move, find_winning_move_with, EngineOptions, Outcome};
use caspr::oracle::enumerate_optimal;
use caspr::transform::{ref_program, CountermoveRecord};
use caspr::Atom;

use common::{cfg, qprog};

const SCENARIO: &str = "%@exists
x :- not y, not z.
y :- not x, not z.
z :- not x, not y.
%@forall
c1 :- not c2.
c2 :- not c1.
:- c1, x.
:- c2, y.
:~ c2, z. [1@1]
%@constraint
:- c1, y.
:- c2, x.
:- c2, z.
";

#[test]
fn aggregate_optimum_is_defeated() {
    let qp = qprog(SCENARIO);
    let cfg = cfg();
    let recs = [
        CountermoveRecord::new(1, props(&["c1"])),
        CountermoveRecord::new(2, props(&["c2"])),
    ];
    let mut a = qp.p1.clone();
    for r in &recs {
        a.extend(ref_program(&qp, r).unwrap());
    }
    let optima = enumerate_optimal(&a, &cfg).unwrap().models;
    let z = Atom::prop("z");
    assert!(optima.iter().any(|n| n.contains(&z) && !defeat_check(n, &recs)));
    assert!(optima.iter().any(|n| !n.contains(&z) && defeat_check(n, &recs)));
}

#[test]
fn confirmation_finds_the_winning_move() {
    let qp = qprog(SCENARIO);
    let cfg = cfg();
    let res = find_winning_move(&qp, &cfg).unwrap();
    assert_eq!(res.outcome, Outcome::Winning(props(&["z"])));
    let literal = find_winning_move_with(
        &qp,
        &cfg,
        EngineOptions {
            confirm_defeat: false,
            ..EngineOptions::default()
        },
    )
    .unwrap();
    match literal.outcome {
        Outcome::Winning(m) => assert_eq!(m, props(&["z"])),
        Outcome::NoWinningMove => assert_eq!(literal.stats.countermoves.len(), 2),
        Outcome::Unknown(r) => panic!("{r}"),
    }
}
