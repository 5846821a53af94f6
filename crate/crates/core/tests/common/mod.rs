#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use milpcert::format::parse_certificate_str;
use milpcert::model::{IntegerSet, NamedConstraint, ObjectiveSense, Problem, ReasonKind};
use milpcert::{Certificate, Constraint, Derivation, Rational, Reason, Sense, SparseVec};
use rand::Rng;

pub const LP_BOUND: &str = include_str!("../../corpus/lp_bound.crt");
pub const ILP_ROUNDING: &str = include_str!("../../corpus/ilp_rounding.crt");
pub const BRANCH_TREE: &str = include_str!("../../corpus/branch_tree.crt");
pub const BRANCH_TREE_LP: &str = include_str!("../../corpus/branch_tree.lp");
pub const ILP_ROUNDING_LP: &str = include_str!("../../corpus/ilp_rounding.lp");

pub fn golden() -> Vec<(&'static str, Certificate)> {
    [
        ("lp_bound", LP_BOUND),
        ("ilp_rounding", ILP_ROUNDING),
        ("branch_tree", BRANCH_TREE),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse_certificate_str(text).unwrap()))
    .collect()
}

pub fn q(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v)
}

pub fn index_of(cert: &Certificate, name: &str) -> usize {
    (0..cert.problem.num_constraints() + cert.derivations.len())
        .find(|&i| cert.name_of(i) == Some(name))
        .unwrap_or_else(|| panic!("no constraint named {name}"))
}

/// A pure-integer problem with explicit box bounds, plus the box.
pub struct BoxProblem {
    pub problem: Problem,
    pub lower: Vec<i64>,
    pub upper: Vec<i64>,
}

/// Random pure-integer problem with `n <= 6` variables and `m <= 8` general rows.
///
/// Box widths are kept small so the grid stays enumerable.
pub fn random_box_problem<R: Rng>(rng: &mut R) -> BoxProblem {
    let n = rng.gen_range(1..=6);
    let m = rng.gen_range(1..=8);
    let max_width = if n <= 3 { 6 } else { 3 };
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let l = rng.gen_range(-10..=10);
        let u = (l + rng.gen_range(0..=max_width)).min(10);
        lower.push(l);
        upper.push(u);
    }
    let mut constraints = Vec::new();
    // rows are anchored at one box point, so most instances are feasible;
    // some instances get an independent anchor per row instead
    let shared = rng.gen_bool(0.7);
    let common_anchor: Vec<Rational> = (0..n).map(|j| int(rng.gen_range(lower[j]..=upper[j]))).collect();
    for r in 0..m {
        let coefs: Vec<Rational> = (0..n)
            .map(|_| {
                if rng.gen_bool(0.3) {
                    int(0)
                } else {
                    int(rng.gen_range(-10..=10))
                }
            })
            .collect();
        let lhs = SparseVec::from_dense(&coefs);
        let anchor: Vec<Rational> = if shared {
            common_anchor.clone()
        } else {
            (0..n).map(|j| int(rng.gen_range(lower[j]..=upper[j]))).collect()
        };
        let at_anchor = lhs.dot_dense(&anchor);
        let slack = int(rng.gen_range(0..=10));
        let (sense, rhs) = match rng.gen_range(0..5) {
            0 => (Sense::Eq, at_anchor),
            1 | 2 => (Sense::Ge, &at_anchor - &slack),
            _ => (Sense::Le, &at_anchor + &slack),
        };
        constraints.push(NamedConstraint::new(format!("R{r}"), Constraint::new(sense, lhs, rhs)));
    }
    for j in 0..n {
        constraints.push(NamedConstraint::new(
            format!("L{j}"),
            Constraint::ge(SparseVec::unit(j), int(lower[j])),
        ));
        constraints.push(NamedConstraint::new(
            format!("U{j}"),
            Constraint::le(SparseVec::unit(j), int(upper[j])),
        ));
    }
    let objective: Vec<Rational> = (0..n).map(|_| int(rng.gen_range(-10..=10))).collect();
    let problem = Problem {
        variable_names: (0..n).map(|j| format!("x{j}")).collect(),
        integer_set: IntegerSet::new(0..n),
        objective_sense: if rng.gen_bool(0.5) {
            ObjectiveSense::Min
        } else {
            ObjectiveSense::Max
        },
        objective: SparseVec::from_dense(&objective),
        constraints,
    };
    BoxProblem { problem, lower, upper }
}

/// Exhaustive search over the integer box: `None` if infeasible, else the optimal value.
pub fn brute_force(bp: &BoxProblem) -> Option<Rational> {
    let n = bp.lower.len();
    let p = &bp.problem;
    let mut point: Vec<i64> = bp.lower.clone();
    let mut best: Option<Rational> = None;
    loop {
        let values: Vec<Rational> = point.iter().map(|&v| int(v)).collect();
        let sparse = SparseVec::from_dense(&values);
        if p.constraints.iter().all(|c| c.constraint.is_satisfied_by(&sparse)) {
            let value = p.objective.dot_dense(&values);
            let better = match (&best, p.objective_sense) {
                (None, _) => true,
                (Some(b), ObjectiveSense::Min) => value < *b,
                (Some(b), ObjectiveSense::Max) => value > *b,
            };
            if better {
                best = Some(value);
            }
        }
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if point[j] < bp.upper[j] {
                point[j] += 1;
                break;
            }
            point[j] = bp.lower[j];
            j += 1;
        }
    }
}

/// Assumption sets recomputed by plain recursion over the reference graph.
pub fn recursive_assumptions(cert: &Certificate) -> Vec<BTreeSet<usize>> {
    fn go(cert: &Certificate, m: usize, i: usize, memo: &mut HashMap<usize, BTreeSet<usize>>) -> BTreeSet<usize> {
        if i < m {
            return BTreeSet::new();
        }
        if let Some(s) = memo.get(&i) {
            return s.clone();
        }
        let set = match &cert.derivations[i - m].reason {
            Reason::Asm => BTreeSet::from([i]),
            Reason::Lin(terms) | Reason::Rnd(terms) => terms.iter().flat_map(|(r, _)| go(cert, m, *r, memo)).collect(),
            Reason::Uns { i1, a1, i2, a2 } => {
                let mut s = go(cert, m, *i1, memo);
                s.extend(go(cert, m, *i2, memo));
                s.remove(a1);
                s.remove(a2);
                s
            }
        };
        memo.insert(i, set.clone());
        set
    }
    let m = cert.problem.num_constraints();
    let mut memo = HashMap::new();
    (0..cert.derivations.len())
        .map(|k| go(cert, m, m + k, &mut memo))
        .collect()
}

pub fn count_kind(cert: &Certificate, kind: ReasonKind) -> usize {
    cert.derivations.iter().filter(|d| d.reason.kind() == kind).count()
}

/// Inserts unreferenced derivations after every `stride`-th derivation and shifts references.
pub fn insert_junk(cert: &Certificate, stride: usize) -> (Certificate, usize) {
    let m = cert.problem.num_constraints();
    let mut map = Vec::with_capacity(cert.derivations.len());
    let mut derivations: Vec<Derivation> = Vec::new();
    let mut inserted = 0;
    for (k, d) in cert.derivations.iter().enumerate() {
        map.push(m + derivations.len());
        let mut d = d.clone();
        d.reason = remap(&d.reason, &map, m);
        d.last_use = None;
        derivations.push(d);
        if k % stride == 0 {
            // a valid but useless consequence of the first original constraint
            let (row, source) = cert
                .problem
                .constraints
                .iter()
                .enumerate()
                .find(|(_, c)| !c.constraint.lhs.is_empty())
                .map(|(j, c)| (j, &c.constraint))
                .expect("a constraint with a nonempty left-hand side");
            let stated = Constraint::new(source.sense, source.lhs.scaled(&int(2)), &source.rhs * &int(2));
            derivations.push(Derivation::new(
                format!("junk{inserted}"),
                stated,
                Reason::Lin(vec![(row, int(2))]),
            ));
            inserted += 1;
        }
    }
    (
        Certificate {
            derivations,
            ..cert.clone()
        },
        inserted,
    )
}

fn remap(reason: &Reason, map: &[usize], m: usize) -> Reason {
    let f = |r: usize| if r < m { r } else { map[r - m] };
    match reason {
        Reason::Asm => Reason::Asm,
        Reason::Lin(t) => Reason::Lin(t.iter().map(|(r, y)| (f(*r), y.clone())).collect()),
        Reason::Rnd(t) => Reason::Rnd(t.iter().map(|(r, y)| (f(*r), y.clone())).collect()),
        Reason::Uns { i1, a1, i2, a2 } => Reason::Uns {
            i1: f(*i1),
            a1: f(*a1),
            i2: f(*i2),
            a2: f(*a2),
        },
    }
}

/// A single-point change to a valid certificate, tagged with the derivation it touches.
pub struct Mutant {
    pub label: String,
    pub target: usize,
    pub cert: Certificate,
}

fn strengthen(c: &Constraint, by: &Rational) -> Constraint {
    let rhs = match c.sense {
        Sense::Ge => &c.rhs + by,
        Sense::Le => &c.rhs - by,
        Sense::Eq => &c.rhs + by,
    };
    Constraint::new(c.sense, c.lhs.clone(), rhs)
}

/// Multiplier sign flips and perturbations, stated-constraint changes,
/// swapped unsplit references and broken disjunction pairs.
pub fn mutants(cert: &Certificate) -> Vec<Mutant> {
    let m = cert.problem.num_constraints();
    let mut out = Vec::new();
    let mut push = |label: String, target: usize, f: &dyn Fn(&mut Certificate)| {
        let mut c = cert.clone();
        f(&mut c);
        out.push(Mutant { label, target, cert: c });
    };
    let uns_assumptions: BTreeSet<usize> = cert
        .derivations
        .iter()
        .filter_map(|d| match d.reason {
            Reason::Uns { a1, a2, .. } => Some([a1, a2]),
            _ => None,
        })
        .flatten()
        .collect();
    for (k, d) in cert.derivations.iter().enumerate() {
        let index = m + k;
        let name = &d.name;
        match &d.reason {
            Reason::Lin(terms) | Reason::Rnd(terms) => {
                for (t, (row, _)) in terms.iter().enumerate() {
                    let row_sense = cert.constraint_at(*row).unwrap().sense;
                    if row_sense != Sense::Eq {
                        push(format!("{name}: flip multiplier {t}"), index, &|c| {
                            set_multiplier(c, k, t, |y| -y);
                        });
                    }
                    for delta in ["1", "1/2", "-1/3", "2", "-5/7"] {
                        let delta = q(delta);
                        push(format!("{name}: multiplier {t} plus {delta}"), index, &|c| {
                            set_multiplier(c, k, t, |y| {
                                let shifted = &y + &delta;
                                if shifted.is_zero() {
                                    &y + &int(5)
                                } else {
                                    shifted
                                }
                            });
                        });
                    }
                }
                if terms.len() > 1 {
                    for t in 0..terms.len() {
                        push(format!("{name}: drop term {t}"), index, &|c| {
                            if let Reason::Lin(terms) | Reason::Rnd(terms) = &mut c.derivations[k].reason {
                                terms.remove(t);
                            }
                        });
                    }
                    if terms[0].1 != terms[1].1 {
                        push(format!("{name}: swap the first two references"), index, &|c| {
                            if let Reason::Lin(terms) | Reason::Rnd(terms) = &mut c.derivations[k].reason {
                                let first = terms[0].0;
                                terms[0].0 = terms[1].0;
                                terms[1].0 = first;
                                terms.sort_by_key(|(r, _)| *r);
                            }
                        });
                    }
                }
                if !milpcert::model::is_absurd(&d.constraint) {
                    for by in ["1", "1/7", "3"] {
                        let by = q(by);
                        push(format!("{name}: rhs strengthened by {by}"), index, &|c| {
                            c.derivations[k].constraint = strengthen(&c.derivations[k].constraint, &by);
                        });
                    }
                    for (j, _) in d.constraint.lhs.iter() {
                        push(format!("{name}: lhs coefficient of var {j} bumped"), index, &|c| {
                            let entries = c.derivations[k]
                                .constraint
                                .lhs
                                .iter()
                                .map(|(i, a)| (i, if i == j { a + &int(1) } else { a.clone() }))
                                .filter(|(_, a)| !a.is_zero());
                            c.derivations[k].constraint.lhs = SparseVec::from_unsorted(entries);
                        });
                    }
                }
                if matches!(d.reason, Reason::Rnd(_)) {
                    push(format!("{name}: round a halved constraint"), index, &|c| {
                        set_multiplier(c, k, 0, |y| &y / &int(2));
                    });
                }
            }
            Reason::Uns { .. } => {
                push(format!("{name}: swap assumption references"), index, &|c| {
                    if let Reason::Uns { a1, a2, .. } = &mut c.derivations[k].reason {
                        std::mem::swap(a1, a2);
                    }
                });
                push(format!("{name}: swap branch references"), index, &|c| {
                    if let Reason::Uns { i1, i2, .. } = &mut c.derivations[k].reason {
                        std::mem::swap(i1, i2);
                    }
                });
                push(format!("{name}: same branch twice"), index, &|c| {
                    if let Reason::Uns { i1, a1, i2, a2 } = &mut c.derivations[k].reason {
                        *i2 = *i1;
                        *a2 = *a1;
                    }
                });
            }
            Reason::Asm if uns_assumptions.contains(&index) => {
                push(format!("{name}: widen the split gap"), index, &|c| {
                    let stated = &c.derivations[k].constraint;
                    let widened = match stated.sense {
                        Sense::Le => Constraint::le(stated.lhs.clone(), &stated.rhs - &int(1)),
                        _ => Constraint::new(stated.sense, stated.lhs.clone(), &stated.rhs + &int(1)),
                    };
                    c.derivations[k].constraint = widened;
                });
            }
            Reason::Asm => {}
        }
    }
    out
}

fn set_multiplier(c: &mut Certificate, k: usize, t: usize, f: impl Fn(Rational) -> Rational) {
    match &mut c.derivations[k].reason {
        Reason::Lin(terms) | Reason::Rnd(terms) => {
            let y = terms[t].1.clone();
            terms[t].1 = f(y);
        }
        _ => unreachable!(),
    }
}

fn tokens(text: &str) -> Vec<(usize, usize)> {
    // byte spans of whitespace-separated tokens outside comments
    let mut spans = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let body = line.split('%').next().unwrap();
        let mut start = None;
        for (i, ch) in body.char_indices() {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    spans.push((offset + s, offset + i));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            spans.push((offset + s, offset + body.len()));
        }
        offset += line.len();
    }
    spans
}

/// Edits that can never produce a valid file.
pub fn corrupt<R: Rng>(text: &str, rng: &mut R) -> String {
    // names may be arbitrary tokens, so in-place edits only target numbers
    let spans: Vec<(usize, usize)> = tokens(text)
        .into_iter()
        .filter(|&(s, e)| text[s..e].parse::<Rational>().is_ok())
        .collect();
    let (s, e) = spans[rng.gen_range(0..spans.len())];
    match rng.gen_range(0..5) {
        0 => text[..s].to_string(),
        1 => format!("{}@#{}", &text[..s], &text[e..]),
        2 => format!("{}1/0{}", &text[..s], &text[e..]),
        3 => format!("{} junk-token", text.trim_end()),
        _ => format!("{}{}/-{}", &text[..s], &text[s..e], &text[e..]),
    }
}
