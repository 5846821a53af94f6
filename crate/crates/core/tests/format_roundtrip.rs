mod common;

use common::*;
use milpcert::format::{certificate_to_string, parse_certificate_str, read_problem, write_problem};
use milpcert::model::{IntegerSet, NamedConstraint, ObjectiveSense, Problem, Solution};
use milpcert::{Certificate, Constraint, Derivation, Rational, Reason, RtpGoal, Sense, SparseVec};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn corpus_round_trips() {
    for (name, cert) in golden() {
        let text = certificate_to_string(&cert);
        let again = parse_certificate_str(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(again, cert, "{name}");
        assert_eq!(certificate_to_string(&again), text, "{name}");
    }
    for text in [BRANCH_TREE_LP, ILP_ROUNDING_LP] {
        let p = read_problem(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_problem(&p, &mut out).unwrap();
        assert_eq!(read_problem(out.as_slice()).unwrap(), p);
    }
}

#[test]
fn comments_and_layout_do_not_matter() {
    let squashed: String = BRANCH_TREE
        .lines()
        .filter(|l| !l.starts_with('%'))
        .collect::<Vec<_>>()
        .join("   % trailing comment\n  ");
    assert_eq!(
        parse_certificate_str(&squashed).unwrap(),
        parse_certificate_str(BRANCH_TREE).unwrap()
    );
}

#[test]
fn corrupted_files_are_rejected_with_positions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for text in [LP_BOUND, ILP_ROUNDING, BRANCH_TREE] {
        for _ in 0..300 {
            let bad = corrupt(text, &mut rng);
            match parse_certificate_str(&bad) {
                Ok(_) => panic!("accepted corrupted file:\n{bad}"),
                Err(e) => assert!(e.position().is_some(), "{e}"),
            }
        }
    }
}

#[test]
fn semantic_format_errors() {
    let cases = [
        (BRANCH_TREE.replace("VER 1", "VER 2"), 2),
        (
            BRANCH_TREE.replace("C5 G 1 0 { lin 3 2 -1/3", "C5 G 1 0 { lin 3 12 -1/3"),
            18,
        ),
        (BRANCH_TREE.replace("{ asm } -1\nA2", "{ asm } 2\nA2"), 13),
        (LP_BOUND.replace("C1 G 2 2 0 5 1 -1", "C1 G 2 2 1 5 0 -1"), 7),
        (LP_BOUND.replace("RTP range 1 1", "RTP range 2 1"), 9),
        (BRANCH_TREE.replace("SOL 0", "SOL 1\nx 0"), 11),
    ];
    for (text, line) in cases {
        let err = parse_certificate_str(&text).unwrap_err();
        assert_eq!(err.position().map(|p| p.0), Some(line), "{err}");
    }
}

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-50i64..50, 1i64..12).prop_map(|(p, q)| Rational::new(p, q))
}

fn arb_nonzero() -> impl Strategy<Value = Rational> {
    arb_rational().prop_map(|r| if r.is_zero() { Rational::one() } else { r })
}

fn arb_sparse(n: usize) -> impl Strategy<Value = SparseVec> {
    proptest::collection::btree_map(0..n, arb_nonzero(), 0..=n)
        .prop_map(|m| SparseVec::from_entries(m.into_iter().collect()).unwrap())
}

fn arb_sense() -> impl Strategy<Value = Sense> {
    prop_oneof![Just(Sense::Ge), Just(Sense::Le), Just(Sense::Eq)]
}

fn arb_constraint(n: usize) -> impl Strategy<Value = Constraint> {
    (arb_sense(), arb_sparse(n), arb_rational()).prop_map(|(s, l, r)| Constraint::new(s, l, r))
}

fn arb_reason(index: usize) -> BoxedStrategy<Reason> {
    let terms = move || {
        proptest::collection::btree_map(0..index, arb_nonzero(), 0..4).prop_map(|m| m.into_iter().collect::<Vec<_>>())
    };
    prop_oneof![
        Just(Reason::Asm),
        terms().prop_map(Reason::Lin),
        terms().prop_map(Reason::Rnd),
        (0..index, 0..index, 0..index, 0..index).prop_map(|(i1, a1, i2, a2)| Reason::Uns { i1, a1, i2, a2 }),
    ]
    .boxed()
}

fn arb_certificate() -> impl Strategy<Value = Certificate> {
    (1usize..5, 1usize..5, 0usize..8).prop_flat_map(|(n, m, d)| {
        let problem = (
            proptest::collection::vec(arb_constraint(n), m),
            arb_sparse(n),
            proptest::collection::btree_set(0..n, 0..=n),
            any::<bool>(),
        )
            .prop_map(move |(cons, obj, ints, max)| Problem {
                variable_names: (0..n).map(|j| format!("v{j}")).collect(),
                integer_set: IntegerSet::new(ints),
                objective_sense: if max { ObjectiveSense::Max } else { ObjectiveSense::Min },
                objective: obj,
                constraints: cons
                    .into_iter()
                    .enumerate()
                    .map(|(j, c)| NamedConstraint::new(format!("c{j}"), c))
                    .collect(),
            });
        let derivations: Vec<_> = (0..d)
            .map(|k| {
                let index = m + k;
                (
                    arb_constraint(n),
                    arb_reason(index),
                    proptest::option::of(index + 1..index + 10),
                )
                    .prop_map(move |(c, r, last)| {
                        let mut d = Derivation::new(format!("d{k}"), c, r);
                        d.last_use = last;
                        d
                    })
            })
            .collect();
        let goal = prop_oneof![
            Just(RtpGoal::Infeasible),
            (proptest::option::of(arb_rational()), 0i64..5).prop_map(|(lb, gap)| RtpGoal::Range {
                upper: lb.as_ref().map(|l| l + &Rational::from_integer(gap)),
                lower: lb,
            }),
        ];
        let solutions = proptest::collection::vec(arb_sparse(n), 0..3);
        (problem, goal, solutions, derivations).prop_map(|(problem, goal, sols, derivations)| {
            let solutions = match goal {
                RtpGoal::Infeasible => Vec::new(),
                _ => sols
                    .into_iter()
                    .enumerate()
                    .map(|(k, a)| Solution {
                        name: format!("s{k}"),
                        assignment: a,
                    })
                    .collect(),
            };
            Certificate {
                problem,
                goal,
                solutions,
                derivations,
            }
        })
    })
}

proptest! {
    #[test]
    fn random_certificates_round_trip(cert in arb_certificate()) {
        let text = certificate_to_string(&cert);
        let parsed = parse_certificate_str(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(parsed, cert);
    }
}
