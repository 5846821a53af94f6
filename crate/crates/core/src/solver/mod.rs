//! Certificate-producing exact MILP solver.
//!
//! Depth-first branch-and-bound on simple variable splits. Every node's LP
//! outcome becomes a `lin` derivation (dual bound or Farkas absurdity), every
//! branch an `asm` pair, and every internal node an `uns` derivation that
//! discharges the pair. The derivation list is the flattened search tree.

use std::collections::HashSet;

use thiserror::Error;

use crate::model::{
    AssumptionSet, Certificate, Constraint, Derivation, IntegerSet, ObjectiveSense, Problem, Reason, RtpGoal, Solution,
    SparseVec,
};
use crate::numeric::Rational;

pub mod simplex;

pub use simplex::{simplex_solve, SimplexOutcome};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverConfig {
    /// Maximum number of branch-and-bound nodes.
    pub node_limit: usize,
    /// Round each node's objective bound when the objective is integral on integer variables.
    pub cg_objective: bool,
    /// Close a node by rounding instead of branching when the LP range of the
    /// branching variable contains no integer.
    pub bound_rounding: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            node_limit: 100_000,
            cg_objective: false,
            bound_rounding: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal {
        value: Rational,
        point: Vec<Rational>,
    },
    Infeasible,
    /// The LP relaxation is unbounded; no certificate is produced.
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub certificate: Option<Certificate>,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error("node limit {limit} exceeded (best objective value found: {})", .incumbent.as_ref().map_or("none".to_string(), |v| v.to_string()))]
    NodeLimit { limit: usize, incumbent: Option<Rational> },
    #[error("problem refers to variable {0}, but only {1} are declared")]
    VariableOutOfRange(usize, usize),
}

/// Picks the integer variable whose value is farthest from an integer (smallest index on ties).
///
/// Panics if no integer variable is fractional.
pub fn select_branch_variable(point: &[Rational], integer_set: &IntegerSet) -> usize {
    let mut best: Option<(usize, Rational)> = None;
    for i in integer_set.iter() {
        let frac = point[i].fractionality();
        if frac.is_zero() {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| frac > *b) {
            best = Some((i, frac));
        }
    }
    best.expect("no fractional integer variable to branch on").0
}

/// Result of a subtree: the derivation carrying its bound, and the bound in
/// minimization terms (`None` for an absurdity).
struct NodeResult {
    index: usize,
    bound: Option<Rational>,
}

struct Search<'a> {
    problem: &'a Problem,
    config: &'a SolverConfig,
    m: usize,
    /// Objective in minimization form.
    min_objective: SparseVec,
    round_objective: bool,
    derivations: Vec<Derivation>,
    assumptions: Vec<AssumptionSet>,
    taken_names: HashSet<String>,
    asm_count: usize,
    nodes: usize,
    /// Best integral solution so far, in minimization terms.
    incumbent: Option<(Rational, Vec<Rational>)>,
}

enum Abort {
    Unbounded,
    NodeLimit,
}

impl<'a> Search<'a> {
    fn new(problem: &'a Problem, config: &'a SolverConfig) -> Self {
        let min_objective = match problem.objective_sense {
            ObjectiveSense::Min => problem.objective.clone(),
            ObjectiveSense::Max => problem.objective.scaled(&-Rational::one()),
        };
        Search {
            problem,
            config,
            m: problem.num_constraints(),
            min_objective,
            round_objective: config.cg_objective && problem.objective_is_integral(),
            derivations: Vec::new(),
            assumptions: Vec::new(),
            taken_names: problem.constraints.iter().map(|c| c.name.clone()).collect(),
            asm_count: 0,
            nodes: 0,
            incumbent: None,
        }
    }

    fn fresh_name(&mut self, base: String) -> String {
        let mut name = base;
        while self.taken_names.contains(&name) {
            name = format!("d_{name}");
        }
        self.taken_names.insert(name.clone());
        name
    }

    fn assumptions_of(&self, index: usize) -> AssumptionSet {
        if index < self.m {
            AssumptionSet::empty()
        } else {
            self.assumptions[index - self.m].clone()
        }
    }

    fn emit(&mut self, constraint: Constraint, reason: Reason) -> usize {
        let index = self.m + self.derivations.len();
        for r in reason.references() {
            assert!(r < index, "derivation {index} would reference later index {r}");
        }
        let set = match &reason {
            Reason::Asm => AssumptionSet::singleton(index),
            Reason::Lin(terms) | Reason::Rnd(terms) => {
                let mut set = AssumptionSet::empty();
                for (r, _) in terms {
                    set.union_with(&self.assumptions_of(*r));
                }
                set
            }
            Reason::Uns { i1, a1, i2, a2 } => {
                let mut set = self.assumptions_of(*i1);
                set.union_with(&self.assumptions_of(*i2));
                set.remove(*a1);
                set.remove(*a2);
                set
            }
        };
        let name = match reason {
            Reason::Asm => {
                self.asm_count += 1;
                self.fresh_name(format!("A{}", self.asm_count))
            }
            _ => self.fresh_name(format!("C{}", index + 1)),
        };
        self.derivations.push(Derivation::new(name, constraint, reason));
        self.assumptions.push(set);
        index
    }

    /// The objective bound `c x >= b` (min) or `c x <= -b` (max) for a bound `b` in minimization terms.
    fn bound_constraint(&self, min_bound: &Rational) -> Constraint {
        match self.problem.objective_sense {
            ObjectiveSense::Min => Constraint::ge(self.problem.objective.clone(), min_bound.clone()),
            ObjectiveSense::Max => Constraint::le(self.problem.objective.clone(), -min_bound),
        }
    }

    fn node(&mut self, branch_rows: &mut Vec<usize>) -> Result<NodeResult, Abort> {
        self.nodes += 1;
        if self.nodes > self.config.node_limit {
            return Err(Abort::NodeLimit);
        }
        let (rows, row_index) = self.node_rows(branch_rows);
        let n = self.problem.num_vars();
        match simplex_solve(n, &rows, &self.min_objective) {
            SimplexOutcome::Unbounded { .. } => Err(Abort::Unbounded),
            SimplexOutcome::Infeasible { farkas } => Ok(self.emit_absurdity(&row_index, &farkas, &rows)),
            SimplexOutcome::Optimal { point, value, duals } => {
                let (mut terms, _) = combination_terms(&row_index, &duals, &rows);
                if self.problem.objective_sense == ObjectiveSense::Max {
                    for (_, y) in terms.iter_mut() {
                        *y = -&*y;
                    }
                }
                let mut index = self.emit(self.bound_constraint(&value), Reason::Lin(terms));
                let mut bound = value.clone();
                if self.round_objective {
                    bound = bound.ceil();
                    index = self.emit(
                        self.bound_constraint(&bound),
                        Reason::Rnd(vec![(index, Rational::one())]),
                    );
                }
                let integral = self.problem.integer_set.iter().all(|i| point[i].is_integer());
                if integral {
                    if self.incumbent.as_ref().is_none_or(|(best, _)| value < *best) {
                        self.incumbent = Some((value, point));
                    }
                    return Ok(NodeResult {
                        index,
                        bound: Some(bound),
                    });
                }
                if self.incumbent.as_ref().is_some_and(|(best, _)| bound >= *best) {
                    return Ok(NodeResult {
                        index,
                        bound: Some(bound),
                    });
                }
                self.branch(branch_rows, &point)
            }
        }
    }

    fn node_rows(&self, branch_rows: &[usize]) -> (Vec<Constraint>, Vec<usize>) {
        let mut rows: Vec<Constraint> = self.problem.constraints.iter().map(|c| c.constraint.clone()).collect();
        let mut row_index: Vec<usize> = (0..self.m).collect();
        for &d in branch_rows {
            rows.push(self.derivations[d - self.m].constraint.clone());
            row_index.push(d);
        }
        (rows, row_index)
    }

    fn emit_absurdity(&mut self, row_index: &[usize], farkas: &[Rational], rows: &[Constraint]) -> NodeResult {
        let (terms, rhs) = combination_terms(row_index, farkas, rows);
        // scale to the canonical absurdity 0 >= 1
        let terms = terms.into_iter().map(|(i, y)| (i, &y / &rhs)).collect();
        let index = self.emit(Constraint::absurdity(), Reason::Lin(terms));
        NodeResult { index, bound: None }
    }

    /// If `x_var` has no integer value in the node's LP range, derives `x_var >= lo`,
    /// rounds it up and closes the node with the resulting infeasible LP.
    fn close_by_rounding(&mut self, branch_rows: &[usize], var: usize) -> Option<NodeResult> {
        let (mut rows, mut row_index) = self.node_rows(branch_rows);
        let n = self.problem.num_vars();
        let unit = SparseVec::unit(var);
        let SimplexOutcome::Optimal { value: lo, duals, .. } = simplex_solve(n, &rows, &unit) else {
            return None;
        };
        let SimplexOutcome::Optimal { value: neg_hi, .. } = simplex_solve(n, &rows, &unit.scaled(&-Rational::one()))
        else {
            return None;
        };
        let rounded = lo.ceil();
        if rounded <= -neg_hi {
            return None;
        }
        let (terms, _) = combination_terms(&row_index, &duals, &rows);
        let bound = self.emit(Constraint::ge(unit.clone(), lo), Reason::Lin(terms));
        let cut = Constraint::ge(unit, rounded);
        let cut_index = self.emit(cut.clone(), Reason::Rnd(vec![(bound, Rational::one())]));
        rows.push(cut);
        row_index.push(cut_index);
        match simplex_solve(n, &rows, &SparseVec::new()) {
            SimplexOutcome::Infeasible { farkas } => Some(self.emit_absurdity(&row_index, &farkas, &rows)),
            other => unreachable!("rounded bound above the LP maximum left the node feasible: {other:?}"),
        }
    }

    fn branch(&mut self, branch_rows: &mut Vec<usize>, point: &[Rational]) -> Result<NodeResult, Abort> {
        let var = select_branch_variable(point, &self.problem.integer_set);
        if self.config.bound_rounding {
            if let Some(closed) = self.close_by_rounding(branch_rows, var) {
                return Ok(closed);
            }
        }
        let floor = point[var].floor();
        let unit = SparseVec::unit(var);

        let down = self.emit(Constraint::le(unit.clone(), floor.clone()), Reason::Asm);
        branch_rows.push(down);
        let left = self.node(branch_rows);
        branch_rows.pop();
        let left = left?;
        if !self.assumptions_of(left.index).contains(down) {
            // the left bound never used its branch, so it holds for the whole node
            return Ok(left);
        }

        let up = self.emit(Constraint::ge(unit, &floor + &Rational::one()), Reason::Asm);
        branch_rows.push(up);
        let right = self.node(branch_rows);
        branch_rows.pop();
        let right = right?;
        if !self.assumptions_of(right.index).contains(up) {
            return Ok(right);
        }

        let bound = match (&left.bound, &right.bound) {
            (None, None) => None,
            (Some(b), None) | (None, Some(b)) => Some(b.clone()),
            (Some(a), Some(b)) => Some(a.min(b).clone()),
        };
        let stated = match &bound {
            None => Constraint::absurdity(),
            Some(b) => self.bound_constraint(b),
        };
        let index = self.emit(
            stated,
            Reason::Uns {
                i1: left.index,
                a1: down,
                i2: right.index,
                a2: up,
            },
        );
        Ok(NodeResult { index, bound })
    }
}

/// Nonzero multipliers keyed by combined index (sorted), and the combined right-hand side.
fn combination_terms(
    row_index: &[usize],
    multipliers: &[Rational],
    rows: &[Constraint],
) -> (Vec<(usize, Rational)>, Rational) {
    let mut terms: Vec<(usize, Rational)> = row_index
        .iter()
        .zip(multipliers)
        .filter(|(_, y)| !y.is_zero())
        .map(|(i, y)| (*i, y.clone()))
        .collect();
    terms.sort_by_key(|(i, _)| *i);
    let rhs = rows
        .iter()
        .zip(multipliers)
        .fold(Rational::zero(), |acc, (r, y)| acc + &r.rhs * y);
    (terms, rhs)
}

fn validate(problem: &Problem) -> Result<(), SolveError> {
    let n = problem.num_vars();
    let vars = problem
        .constraints
        .iter()
        .filter_map(|c| c.constraint.max_var())
        .chain(problem.objective.max_index())
        .chain(problem.integer_set.iter());
    for v in vars {
        if v >= n {
            return Err(SolveError::VariableOutOfRange(v, n));
        }
    }
    Ok(())
}

/// Solves a MILP exactly and emits a certificate for the result.
pub fn solve_milp(problem: &Problem, config: &SolverConfig) -> Result<SolveOutcome, SolveError> {
    validate(problem)?;
    let mut search = Search::new(problem, config);
    let root = match search.node(&mut Vec::new()) {
        Ok(root) => root,
        Err(Abort::Unbounded) => {
            return Ok(SolveOutcome {
                status: SolveStatus::Unbounded,
                certificate: None,
                nodes: search.nodes,
            })
        }
        Err(Abort::NodeLimit) => {
            let incumbent = search.incumbent.map(|(v, _)| match problem.objective_sense {
                ObjectiveSense::Min => v,
                ObjectiveSense::Max => -v,
            });
            return Err(SolveError::NodeLimit {
                limit: config.node_limit,
                incumbent,
            });
        }
    };
    debug_assert!(search.assumptions_of(root.index).is_empty());
    let (status, goal, solutions) = match search.incumbent.take() {
        None => {
            debug_assert!(root.bound.is_none(), "no incumbent, so every leaf is infeasible");
            (SolveStatus::Infeasible, RtpGoal::Infeasible, Vec::new())
        }
        Some((min_value, point)) => {
            let value = match problem.objective_sense {
                ObjectiveSense::Min => min_value,
                ObjectiveSense::Max => -min_value,
            };
            let solution = Solution {
                name: "best".to_string(),
                assignment: SparseVec::from_dense(&point),
            };
            let goal = RtpGoal::Range {
                lower: Some(value.clone()),
                upper: Some(value.clone()),
            };
            (SolveStatus::Optimal { value, point }, goal, vec![solution])
        }
    };
    let certificate = Certificate {
        problem: problem.clone(),
        goal,
        solutions,
        derivations: search.derivations,
    };
    Ok(SolveOutcome {
        status,
        certificate: Some(certificate),
        nodes: search.nodes,
    })
}

/// Solves independent problems, on the rayon pool when `parallel` is set.
///
/// Results come back in input order.
pub fn solve_batch(
    problems: &[Problem],
    config: &SolverConfig,
    parallel: bool,
) -> Vec<Result<SolveOutcome, SolveError>> {
    crate::par::map_ordered(problems, parallel, |p| solve_milp(p, config))
}

/// Convenience check that a derivation list only ever references earlier indices.
pub fn references_are_backward(cert: &Certificate) -> bool {
    let m = cert.problem.num_constraints();
    cert.derivations
        .iter()
        .enumerate()
        .all(|(k, d)| d.reason.references().iter().all(|&r| r < m + k))
}
