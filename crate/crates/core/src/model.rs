//! Certificate data model and the inference rules used to check it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::numeric::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("sparse vector indices must be strictly increasing (index {0})")]
    UnsortedIndex(usize),
    #[error("sparse vector stores a zero coefficient at index {0}")]
    ZeroCoefficient(usize),
    #[error("term {term}: multiplier {multiplier} has the wrong sign for a {sense} row in a {target} combination")]
    SignViolation {
        term: usize,
        sense: Sense,
        target: Sense,
        multiplier: Rational,
    },
    #[error("cannot round an equality constraint")]
    RoundEquality,
    #[error("cannot round: coefficient {coef} on variable {var} is not integral")]
    FractionalCoefficient { var: usize, coef: Rational },
    #[error("cannot round: variable {0} carries a nonzero coefficient but is not integer")]
    ContinuousVariable(usize),
}

/// Sparse coefficient vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SparseVec {
    entries: Vec<(usize, Rational)>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec::default()
    }

    /// Validates that the entries are already in canonical order without zeros.
    pub fn from_entries(entries: Vec<(usize, Rational)>) -> Result<Self, ModelError> {
        for (k, (i, v)) in entries.iter().enumerate() {
            if k > 0 && entries[k - 1].0 >= *i {
                return Err(ModelError::UnsortedIndex(*i));
            }
            if v.is_zero() {
                return Err(ModelError::ZeroCoefficient(*i));
            }
        }
        Ok(SparseVec { entries })
    }

    /// Sums duplicate indices and drops zeros.
    pub fn from_unsorted<I: IntoIterator<Item = (usize, Rational)>>(items: I) -> Self {
        let mut acc: BTreeMap<usize, Rational> = BTreeMap::new();
        for (i, v) in items {
            *acc.entry(i).or_default() += &v;
        }
        SparseVec {
            entries: acc.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
        }
    }

    pub fn unit(index: usize) -> Self {
        SparseVec {
            entries: vec![(index, Rational::one())],
        }
    }

    pub fn from_dense(values: &[Rational]) -> Self {
        SparseVec {
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| !v.is_zero())
                .map(|(i, v)| (i, v.clone()))
                .collect(),
        }
    }

    pub fn entries(&self) -> &[(usize, Rational)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> {
        self.entries.iter().map(|(i, v)| (*i, v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Rational {
        match self.entries.binary_search_by_key(&index, |(i, _)| *i) {
            Ok(k) => self.entries[k].1.clone(),
            Err(_) => Rational::zero(),
        }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn scaled(&self, factor: &Rational) -> SparseVec {
        if factor.is_zero() {
            return SparseVec::new();
        }
        SparseVec {
            entries: self.entries.iter().map(|(i, v)| (*i, v * factor)).collect(),
        }
    }

    /// Inner product with another sparse vector (e.g. a solution).
    pub fn dot(&self, other: &SparseVec) -> Rational {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = Rational::zero();
        while let (Some((i, x)), Some((j, y))) = (a.peek(), b.peek()) {
            match i.cmp(j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += &(x * y);
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, values: &[Rational]) -> Rational {
        let mut acc = Rational::zero();
        for (i, v) in &self.entries {
            acc += &(v * &values[*i]);
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

impl Sense {
    pub fn code(self) -> &'static str {
        match self {
            Sense::Ge => "G",
            Sense::Le => "L",
            Sense::Eq => "E",
        }
    }

    pub fn from_code(code: &str) -> Option<Sense> {
        match code {
            "G" => Some(Sense::Ge),
            "L" => Some(Sense::Le),
            "E" => Some(Sense::Eq),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
            Sense::Eq => "=",
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A linear constraint `lhs (>=|<=|=) rhs`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub sense: Sense,
    pub lhs: SparseVec,
    pub rhs: Rational,
}

impl Constraint {
    pub fn new(sense: Sense, lhs: SparseVec, rhs: Rational) -> Self {
        Constraint { sense, lhs, rhs }
    }

    pub fn ge(lhs: SparseVec, rhs: Rational) -> Self {
        Constraint::new(Sense::Ge, lhs, rhs)
    }

    pub fn le(lhs: SparseVec, rhs: Rational) -> Self {
        Constraint::new(Sense::Le, lhs, rhs)
    }

    pub fn eq(lhs: SparseVec, rhs: Rational) -> Self {
        Constraint::new(Sense::Eq, lhs, rhs)
    }

    /// The canonical absurdity `0 >= 1`.
    pub fn absurdity() -> Self {
        Constraint::ge(SparseVec::new(), Rational::one())
    }

    pub fn is_satisfied_by(&self, point: &SparseVec) -> bool {
        let value = self.lhs.dot(point);
        match self.sense {
            Sense::Ge => value >= self.rhs,
            Sense::Le => value <= self.rhs,
            Sense::Eq => value == self.rhs,
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        self.lhs.max_index()
    }
}

/// A constraint with its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedConstraint {
    pub name: String,
    pub constraint: Constraint,
}

impl NamedConstraint {
    pub fn new(name: impl Into<String>, constraint: Constraint) -> Self {
        NamedConstraint {
            name: name.into(),
            constraint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveSense {
    Min,
    Max,
}

/// Sorted set of integer-constrained variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IntegerSet(Vec<usize>);

impl IntegerSet {
    pub fn new<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        let set: BTreeSet<usize> = indices.into_iter().collect();
        IntegerSet(set.into_iter().collect())
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0.binary_search(&var).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub variable_names: Vec<String>,
    pub integer_set: IntegerSet,
    pub objective_sense: ObjectiveSense,
    pub objective: SparseVec,
    pub constraints: Vec<NamedConstraint>,
}

impl Problem {
    pub fn num_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// The objective-bound constraint proving the dual side of a range goal.
    pub fn objective_bound(&self, bound: &Rational) -> Constraint {
        let sense = match self.objective_sense {
            ObjectiveSense::Min => Sense::Ge,
            ObjectiveSense::Max => Sense::Le,
        };
        Constraint::new(sense, self.objective.clone(), bound.clone())
    }

    /// True if every nonzero objective coefficient is integral and on an integer variable.
    pub fn objective_is_integral(&self) -> bool {
        self.objective
            .iter()
            .all(|(i, v)| v.is_integer() && self.integer_set.contains(i))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Reason {
    Asm,
    Lin(Vec<(usize, Rational)>),
    Rnd(Vec<(usize, Rational)>),
    Uns { i1: usize, a1: usize, i2: usize, a2: usize },
}

impl Reason {
    pub fn kind(&self) -> ReasonKind {
        match self {
            Reason::Asm => ReasonKind::Asm,
            Reason::Lin(_) => ReasonKind::Lin,
            Reason::Rnd(_) => ReasonKind::Rnd,
            Reason::Uns { .. } => ReasonKind::Uns,
        }
    }

    /// Every constraint index this reason refers to, in file order.
    pub fn references(&self) -> Vec<usize> {
        match self {
            Reason::Asm => Vec::new(),
            Reason::Lin(terms) | Reason::Rnd(terms) => terms.iter().map(|(i, _)| *i).collect(),
            Reason::Uns { i1, a1, i2, a2 } => vec![*i1, *a1, *i2, *a2],
        }
    }

    pub(crate) fn map_references(&self, f: impl Fn(usize) -> usize) -> Reason {
        match self {
            Reason::Asm => Reason::Asm,
            Reason::Lin(t) => Reason::Lin(t.iter().map(|(i, m)| (f(*i), m.clone())).collect()),
            Reason::Rnd(t) => Reason::Rnd(t.iter().map(|(i, m)| (f(*i), m.clone())).collect()),
            Reason::Uns { i1, a1, i2, a2 } => Reason::Uns {
                i1: f(*i1),
                a1: f(*a1),
                i2: f(*i2),
                a2: f(*a2),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReasonKind {
    Asm,
    Lin,
    Rnd,
    Uns,
}

impl fmt::Display for ReasonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReasonKind::Asm => "asm",
            ReasonKind::Lin => "lin",
            ReasonKind::Rnd => "rnd",
            ReasonKind::Uns => "uns",
        })
    }
}

/// Last-use marker of a derivation; `None` means "keep until the end".
pub type LastUse = Option<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub name: String,
    pub constraint: Constraint,
    pub reason: Reason,
    pub last_use: LastUse,
}

impl Derivation {
    pub fn new(name: impl Into<String>, constraint: Constraint, reason: Reason) -> Self {
        Derivation {
            name: name.into(),
            constraint,
            reason,
            last_use: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RtpGoal {
    Infeasible,
    /// `None` on either side stands for an infinite bound.
    Range {
        lower: Option<Rational>,
        upper: Option<Rational>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub name: String,
    /// Unlisted variables are zero.
    pub assignment: SparseVec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub problem: Problem,
    pub goal: RtpGoal,
    pub solutions: Vec<Solution>,
    pub derivations: Vec<Derivation>,
}

impl Certificate {
    /// Combined index of derivation `k`.
    pub fn derivation_index(&self, k: usize) -> usize {
        self.problem.num_constraints() + k
    }

    /// Name of the constraint at a combined index.
    pub fn name_of(&self, index: usize) -> Option<&str> {
        let m = self.problem.num_constraints();
        if index < m {
            Some(&self.problem.constraints[index].name)
        } else {
            self.derivations.get(index - m).map(|d| d.name.as_str())
        }
    }

    /// Constraint at a combined index.
    pub fn constraint_at(&self, index: usize) -> Option<&Constraint> {
        let m = self.problem.num_constraints();
        if index < m {
            Some(&self.problem.constraints[index].constraint)
        } else {
            self.derivations.get(index - m).map(|d| &d.constraint)
        }
    }
}

/// Indices of the assumption derivations a constraint depends on.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssumptionSet(BTreeSet<usize>);

impl AssumptionSet {
    pub fn empty() -> Self {
        AssumptionSet::default()
    }

    pub fn singleton(index: usize) -> Self {
        AssumptionSet(BTreeSet::from([index]))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    pub fn union_with(&mut self, other: &AssumptionSet) {
        self.0.extend(other.0.iter().copied());
    }

    pub fn remove(&mut self, index: usize) {
        self.0.remove(&index);
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

impl FromIterator<usize> for AssumptionSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        AssumptionSet(iter.into_iter().collect())
    }
}

fn multiplier_sign_ok(row: Sense, target: Sense, multiplier: &Rational) -> bool {
    match (target, row) {
        (_, Sense::Eq) => true,
        (Sense::Ge, Sense::Ge) | (Sense::Le, Sense::Le) => !multiplier.is_negative(),
        (Sense::Ge, Sense::Le) | (Sense::Le, Sense::Ge) => !multiplier.is_positive(),
        (Sense::Eq, _) => false,
    }
}

/// Combines constraints with the given multipliers into a constraint of `target` sense.
///
/// Multipliers must respect the sign discipline of the target: for `>=` they are
/// nonnegative on `>=` rows and nonpositive on `<=` rows, mirrored for `<=`;
/// an `=` target only accepts equality rows. Equality rows take any sign.
pub fn linear_combine<'a, I>(terms: I, target: Sense) -> Result<Constraint, ModelError>
where
    I: IntoIterator<Item = (&'a Constraint, &'a Rational)>,
{
    let mut lhs: BTreeMap<usize, Rational> = BTreeMap::new();
    let mut rhs = Rational::zero();
    for (term, (c, mult)) in terms.into_iter().enumerate() {
        if !multiplier_sign_ok(c.sense, target, mult) {
            return Err(ModelError::SignViolation {
                term,
                sense: c.sense,
                target,
                multiplier: mult.clone(),
            });
        }
        if mult.is_zero() {
            continue;
        }
        for (i, v) in c.lhs.iter() {
            *lhs.entry(i).or_default() += &(v * mult);
        }
        rhs += &(&c.rhs * mult);
    }
    let lhs = SparseVec {
        entries: lhs.into_iter().filter(|(_, v)| !v.is_zero()).collect(),
    };
    Ok(Constraint::new(target, lhs, rhs))
}

/// Rounds the right-hand side of an inequality whose left side is integral on integer variables.
pub fn round_constraint(c: &Constraint, integer_set: &IntegerSet) -> Result<Constraint, ModelError> {
    check_integral_support(&c.lhs, integer_set)?;
    let rhs = match c.sense {
        Sense::Ge => c.rhs.ceil(),
        Sense::Le => c.rhs.floor(),
        Sense::Eq => return Err(ModelError::RoundEquality),
    };
    Ok(Constraint::new(c.sense, c.lhs.clone(), rhs))
}

fn check_integral_support(lhs: &SparseVec, integer_set: &IntegerSet) -> Result<(), ModelError> {
    for (i, v) in lhs.iter() {
        if !integer_set.contains(i) {
            return Err(ModelError::ContinuousVariable(i));
        }
        if !v.is_integer() {
            return Err(ModelError::FractionalCoefficient {
                var: i,
                coef: v.clone(),
            });
        }
    }
    Ok(())
}

/// True for `0 >= b` with `b > 0`, `0 <= b` with `b < 0`, and `0 = b` with `b != 0`.
pub fn is_absurd(c: &Constraint) -> bool {
    c.lhs.is_empty()
        && match c.sense {
            Sense::Ge => c.rhs.is_positive(),
            Sense::Le => c.rhs.is_negative(),
            Sense::Eq => !c.rhs.is_zero(),
        }
}

/// Syntactic implication: `d` has the same left side as `c` and a right side at
/// least as strong, or `d` is an absurdity.
pub fn dominates(d: &Constraint, c: &Constraint) -> bool {
    if is_absurd(d) {
        return true;
    }
    let same_lhs = d.lhs == c.lhs;
    match (d.sense, c.sense) {
        (Sense::Ge, Sense::Ge) | (Sense::Eq, Sense::Ge) => same_lhs && d.rhs >= c.rhs,
        (Sense::Le, Sense::Le) | (Sense::Eq, Sense::Le) => same_lhs && d.rhs <= c.rhs,
        (Sense::Eq, Sense::Eq) => same_lhs && d.rhs == c.rhs,
        _ => false,
    }
}

/// Checks that `{a1, a2}` is a split disjunction `a x <= delta` / `a x >= delta + 1`
/// in either order, with `a` integral and supported on integer variables.
pub fn check_disjunction_pair(a1: &Constraint, a2: &Constraint, integer_set: &IntegerSet) -> bool {
    let (low, high) = match (a1.sense, a2.sense) {
        (Sense::Le, Sense::Ge) => (a1, a2),
        (Sense::Ge, Sense::Le) => (a2, a1),
        _ => return false,
    };
    low.lhs == high.lhs
        && low.rhs.is_integer()
        && high.rhs == &low.rhs + &Rational::one()
        && check_integral_support(&low.lhs, integer_set).is_ok()
}

/// Returns feasibility (constraints and integrality) and the objective value of a solution.
pub fn evaluate_solution(problem: &Problem, solution: &Solution) -> (bool, Rational) {
    let value = problem.objective.dot(&solution.assignment);
    let integral = problem
        .integer_set
        .iter()
        .all(|i| solution.assignment.get(i).is_integer());
    let in_range = solution.assignment.max_index().is_none_or(|i| i < problem.num_vars());
    let feasible = integral
        && in_range
        && problem
            .constraints
            .iter()
            .all(|c| c.constraint.is_satisfied_by(&solution.assignment));
    (feasible, value)
}
