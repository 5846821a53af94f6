//! Two-phase primal simplex over exact rationals with Bland's rule.
//!
//! Variables are free; each is split as `x = x+ - x-`. Inequality rows get a
//! slack, every row gets an artificial, and rows are sign-normalized so the
//! initial artificial basis is feasible. Artificial columns stay in the
//! tableau after they leave the basis (they never re-enter), which keeps the
//! dual values readable from their reduced costs.

use crate::model::{Constraint, Sense, SparseVec};
use crate::numeric::Rational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimplexOutcome {
    /// `duals` obey the `>=` sign discipline and combine the rows into `objective >= value`.
    Optimal {
        point: Vec<Rational>,
        value: Rational,
        duals: Vec<Rational>,
    },
    /// `farkas` obeys the `>=` sign discipline and combines the rows into `0 >= b` with `b > 0`.
    Infeasible { farkas: Vec<Rational> },
    /// Feasible direction along which the objective decreases.
    Unbounded { ray: Vec<Rational> },
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs for the current phase.
    cost_row: Vec<Rational>,
    /// Costs of the current phase.
    costs: Vec<Rational>,
    first_artificial: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let piv = self.rows[r][e].clone();
        if piv != Rational::one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &piv;
                }
            }
            self.rhs[r] = &self.rhs[r] / &piv;
        }
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][e].is_zero() {
                continue;
            }
            let factor = self.rows[i][e].clone();
            for (v, p) in self.rows[i].iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &(&factor * p);
                }
            }
            self.rhs[i] -= &(&factor * &pivot_rhs);
        }
        let factor = self.cost_row[e].clone();
        if !factor.is_zero() {
            for (v, p) in self.cost_row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &(&factor * p);
                }
            }
        }
        self.basis[r] = e;
    }

    fn set_costs(&mut self, costs: Vec<Rational>) {
        let mut reduced = costs.clone();
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (d, a) in reduced.iter_mut().zip(&self.rows[i]) {
                if !a.is_zero() {
                    *d -= &(cb * a);
                }
            }
        }
        self.costs = costs;
        self.cost_row = reduced;
    }

    fn objective_value(&self) -> Rational {
        self.basis
            .iter()
            .zip(&self.rhs)
            .map(|(&b, v)| &self.costs[b] * v)
            .fold(Rational::zero(), |acc, t| acc + t)
    }

    /// Runs Bland's rule to optimality; returns the entering column if unbounded.
    fn optimize(&mut self) -> Option<usize> {
        loop {
            let e = (0..self.first_artificial).find(|&j| self.cost_row[j].is_negative())?;
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                let better = match &leave {
                    None => true,
                    Some((r, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, e),
                None => return Some(e),
            }
        }
    }

    /// `c_B B^{-1}` for the sign-normalized rows, read off the artificial columns.
    fn row_duals(&self) -> Vec<Rational> {
        (0..self.rows.len())
            .map(|i| {
                let col = self.first_artificial + i;
                &self.costs[col] - &self.cost_row[col]
            })
            .collect()
    }

    fn column_values(&self) -> Vec<Rational> {
        let mut values = vec![Rational::zero(); self.cost_row.len()];
        for (i, &b) in self.basis.iter().enumerate() {
            values[b] = self.rhs[i].clone();
        }
        values
    }
}

/// Minimizes `objective` over the rows (variables `0..n`, all free).
pub fn simplex_solve(n: usize, rows: &[Constraint], objective: &SparseVec) -> SimplexOutcome {
    let m = rows.len();
    let slack_count = rows.iter().filter(|r| r.sense != Sense::Eq).count();
    let first_artificial = 2 * n + slack_count;
    let width = first_artificial + m;

    // Row i is multiplied by sign[i] so that its right-hand side is nonnegative.
    let mut sign = Vec::with_capacity(m);
    let mut table = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut next_slack = 2 * n;
    for (i, row) in rows.iter().enumerate() {
        let s = if row.rhs.is_negative() {
            -Rational::one()
        } else {
            Rational::one()
        };
        let mut t = vec![Rational::zero(); width];
        for (j, a) in row.lhs.iter() {
            assert!(j < n, "row {i} refers to variable {j} >= {n}");
            let v = a * &s;
            t[n + j] = -&v;
            t[j] = v;
        }
        match row.sense {
            Sense::Ge => {
                t[next_slack] = -&s;
                next_slack += 1;
            }
            Sense::Le => {
                t[next_slack] = s.clone();
                next_slack += 1;
            }
            Sense::Eq => {}
        }
        t[first_artificial + i] = Rational::one();
        rhs.push(&row.rhs * &s);
        table.push(t);
        sign.push(s);
    }

    let mut tab = Tableau {
        rows: table,
        rhs,
        basis: (first_artificial..width).collect(),
        cost_row: Vec::new(),
        costs: Vec::new(),
        first_artificial,
    };

    let mut phase1 = vec![Rational::zero(); width];
    for c in phase1.iter_mut().skip(first_artificial) {
        *c = Rational::one();
    }
    tab.set_costs(phase1);
    let unbounded = tab.optimize();
    debug_assert!(unbounded.is_none(), "phase 1 is bounded below by zero");

    let unscale = |tab: &Tableau| -> Vec<Rational> { tab.row_duals().iter().zip(&sign).map(|(y, s)| y * s).collect() };

    if tab.objective_value().is_positive() {
        return SimplexOutcome::Infeasible { farkas: unscale(&tab) };
    }

    // Drive zero-valued artificials out of the basis where the row allows it.
    for r in 0..m {
        if tab.basis[r] >= first_artificial {
            if let Some(e) = (0..first_artificial).find(|&j| !tab.rows[r][j].is_zero()) {
                tab.pivot(r, e);
            }
        }
    }

    let mut phase2 = vec![Rational::zero(); width];
    for (j, c) in objective.iter() {
        phase2[j] = c.clone();
        phase2[n + j] = -c;
    }
    tab.set_costs(phase2);
    if let Some(e) = tab.optimize() {
        let mut direction = vec![Rational::zero(); width];
        direction[e] = Rational::one();
        for (i, &b) in tab.basis.iter().enumerate() {
            direction[b] = -&tab.rows[i][e];
        }
        let ray = (0..n).map(|j| &direction[j] - &direction[n + j]).collect();
        return SimplexOutcome::Unbounded { ray };
    }

    let values = tab.column_values();
    let point: Vec<Rational> = (0..n).map(|j| &values[j] - &values[n + j]).collect();
    SimplexOutcome::Optimal {
        value: objective.dot_dense(&point),
        point,
        duals: unscale(&tab),
    }
}
