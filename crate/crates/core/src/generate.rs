//! Synthetic certificates for stress tests and benchmarks.

use crate::model::{
    Certificate, Constraint, Derivation, IntegerSet, NamedConstraint, ObjectiveSense, Problem, Reason, RtpGoal,
    Solution, SparseVec,
};
use crate::numeric::Rational;

/// A chain of `len` `lin` steps over `min x s.t. x >= 0`.
///
/// Step `k` restates `x >= 0` as a convex combination of the original
/// constraint and step `k - 1`, so every step depends on the previous one.
/// Last-use indices are left unset; run the tightener to fill them in.
pub fn lin_chain(len: usize) -> Certificate {
    let problem = Problem {
        variable_names: vec!["x".to_string()],
        integer_set: IntegerSet::default(),
        objective_sense: ObjectiveSense::Min,
        objective: SparseVec::unit(0),
        constraints: vec![NamedConstraint::new(
            "C0",
            Constraint::ge(SparseVec::unit(0), Rational::zero()),
        )],
    };
    let mut derivations = Vec::with_capacity(len);
    for k in 0..len {
        let terms = if k == 0 {
            vec![(0, Rational::one())]
        } else {
            let w = Rational::new(1, k as i64 + 2);
            vec![(0, w.clone()), (k, Rational::one() - w)]
        };
        derivations.push(Derivation::new(
            format!("D{k}"),
            Constraint::ge(SparseVec::unit(0), Rational::zero()),
            Reason::Lin(terms),
        ));
    }
    Certificate {
        problem,
        goal: RtpGoal::Range {
            lower: Some(Rational::zero()),
            upper: Some(Rational::zero()),
        },
        solutions: vec![Solution {
            name: "zero".to_string(),
            assignment: SparseVec::new(),
        }],
        derivations,
    }
}
