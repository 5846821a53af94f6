//! Static HTML rendering of a certificate.

use std::fmt::Write as _;

use crate::model::{AssumptionSet, Certificate, Constraint, ObjectiveSense, Reason, RtpGoal, SparseVec};
use crate::numeric::Rational;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '"' => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
    out
}

/// Conventional rendering of a linear form, e.g. `2x + y` or `-1/3 x1 - x2`.
pub fn format_linear(v: &SparseVec, names: &[String]) -> String {
    if v.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, (i, coef)) in v.iter().enumerate() {
        let name = names.get(i).map_or_else(|| format!("x{i}"), |n| n.clone());
        let magnitude = coef.abs();
        match (k, coef.is_negative()) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        if magnitude == Rational::one() {
            out.push_str(&name);
        } else if magnitude.is_integer() {
            let _ = write!(out, "{magnitude}{name}");
        } else {
            let _ = write!(out, "{magnitude} {name}");
        }
    }
    out
}

pub fn format_constraint(c: &Constraint, names: &[String]) -> String {
    format!("{} {} {}", format_linear(&c.lhs, names), c.sense, c.rhs)
}

/// Assumption sets computed in file order; `None` where a reference is invalid.
fn assumption_sets(cert: &Certificate) -> Vec<Option<AssumptionSet>> {
    let m = cert.problem.num_constraints();
    let mut sets: Vec<Option<AssumptionSet>> = Vec::with_capacity(cert.derivations.len());
    let lookup = |sets: &[Option<AssumptionSet>], r: usize| -> Option<AssumptionSet> {
        if r < m {
            Some(AssumptionSet::empty())
        } else {
            sets.get(r - m).cloned().flatten()
        }
    };
    for (k, d) in cert.derivations.iter().enumerate() {
        let set = match &d.reason {
            Reason::Asm => Some(AssumptionSet::singleton(m + k)),
            Reason::Lin(terms) | Reason::Rnd(terms) => {
                terms.iter().try_fold(AssumptionSet::empty(), |mut acc, (r, _)| {
                    acc.union_with(&lookup(&sets, *r)?);
                    Some(acc)
                })
            }
            Reason::Uns { i1, a1, i2, a2 } => lookup(&sets, *i1).zip(lookup(&sets, *i2)).map(|(mut s, t)| {
                s.union_with(&t);
                s.remove(*a1);
                s.remove(*a2);
                s
            }),
        };
        sets.push(set);
    }
    sets
}

struct Doc<'a> {
    cert: &'a Certificate,
    out: String,
}

impl Doc<'_> {
    fn link(&self, index: usize) -> String {
        match self.cert.name_of(index) {
            Some(name) => format!("<a href=\"#i{index}\">{}</a>", escape(name)),
            None => format!("?{index}"),
        }
    }

    fn combination(&self, terms: &[(usize, Rational)]) -> String {
        if terms.is_empty() {
            return "0".to_string();
        }
        terms
            .iter()
            .map(|(i, m)| {
                if *m == Rational::one() {
                    self.link(*i)
                } else if m.is_negative() {
                    format!("({m}) &times; {}", self.link(*i))
                } else {
                    format!("{m} &times; {}", self.link(*i))
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    fn reason(&self, reason: &Reason) -> String {
        match reason {
            Reason::Asm => "assume".to_string(),
            Reason::Lin(terms) => self.combination(terms),
            Reason::Rnd(terms) if terms.len() == 1 && terms[0].1 == Rational::one() => {
                format!("round up {}", self.link(terms[0].0))
            }
            Reason::Rnd(terms) => format!("round up ({})", self.combination(terms)),
            Reason::Uns { i1, a1, i2, a2 } => format!(
                "unsplit {}, {} on {}, {}",
                self.link(*i1),
                self.link(*i2),
                self.link(*a1),
                self.link(*a2)
            ),
        }
    }
}

/// Renders a self-contained HTML page with one row per constraint, solution and derivation.
pub fn render_html(cert: &Certificate) -> String {
    let p = &cert.problem;
    let names = &p.variable_names;
    let mut doc = Doc {
        cert,
        out: String::new(),
    };
    let o = &mut doc.out;
    o.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>MILP certificate</title>\n");
    o.push_str("<style>\nbody { font-family: sans-serif; }\ntable { border-collapse: collapse; }\n");
    o.push_str("td, th { border: 1px solid #999; padding: 2px 8px; text-align: left; }\n");
    o.push_str("tr:target { background: #ffd; }\n</style>\n</head>\n<body>\n");
    o.push_str("<h1>MILP certificate</h1>\n");

    let ints: Vec<String> = p.integer_set.iter().map(|i| escape(&names[i])).collect();
    let _ = writeln!(o, "<p>Variables: {}</p>", escape(&names.join(", ")));
    let _ = writeln!(
        o,
        "<p>Integer variables: {}</p>",
        if ints.is_empty() {
            "none".to_string()
        } else {
            ints.join(", ")
        }
    );
    let sense = match p.objective_sense {
        ObjectiveSense::Min => "min",
        ObjectiveSense::Max => "max",
    };
    let _ = writeln!(
        o,
        "<p>Objective: {sense} {}</p>",
        escape(&format_linear(&p.objective, names))
    );
    let goal = match &cert.goal {
        RtpGoal::Infeasible => "infeasible".to_string(),
        RtpGoal::Range { lower, upper } => format!(
            "objective value in [{}, {}]",
            lower.as_ref().map_or("-inf".to_string(), |v| v.to_string()),
            upper.as_ref().map_or("inf".to_string(), |v| v.to_string())
        ),
    };
    let _ = writeln!(o, "<p>Goal: {goal}</p>");

    o.push_str("<h2>Given</h2>\n<table>\n<tr><th>#</th><th>Constraint</th></tr>\n");
    for (j, c) in p.constraints.iter().enumerate() {
        let _ = writeln!(
            o,
            "<tr id=\"i{j}\"><td>{j}</td><td class=\"con\">{}: {}</td></tr>",
            escape(&c.name),
            escape(&format_constraint(&c.constraint, names))
        );
    }
    o.push_str("</table>\n");

    if !cert.solutions.is_empty() {
        o.push_str("<h2>Solutions</h2>\n<table>\n<tr><th>Solution</th><th>Objective</th></tr>\n");
        for (k, s) in cert.solutions.iter().enumerate() {
            let assignment: Vec<String> = s
                .assignment
                .iter()
                .map(|(i, v)| format!("{} = {v}", names.get(i).map_or("?", |n| n.as_str())))
                .collect();
            let shown = if assignment.is_empty() {
                "all zero".to_string()
            } else {
                assignment.join(", ")
            };
            let _ = writeln!(
                o,
                "<tr id=\"s{k}\"><td class=\"sol\">{}: {}</td><td>{}</td></tr>",
                escape(&s.name),
                escape(&shown),
                p.objective.dot(&s.assignment)
            );
        }
        o.push_str("</table>\n");
    }

    if !cert.derivations.is_empty() {
        let sets = assumption_sets(cert);
        let m = p.num_constraints();
        let mut rows = String::from(
            "<h2>Derived</h2>\n<table>\n<tr><th>#</th><th>Constraint</th><th>Reason</th><th>Assumptions</th><th>Last use</th></tr>\n",
        );
        for (k, d) in cert.derivations.iter().enumerate() {
            let index = m + k;
            let assumptions = match &sets[k] {
                Some(s) => s.iter().map(|a| doc.link(a)).collect::<Vec<_>>().join(", "),
                None => "?".to_string(),
            };
            let last_use = d.last_use.map_or("-".to_string(), |l| l.to_string());
            let _ = writeln!(
                rows,
                "<tr id=\"i{index}\"><td>{index}</td><td class=\"con\">{}: {}</td><td>{}</td><td>{assumptions}</td><td>{last_use}</td></tr>",
                escape(&d.name),
                escape(&format_constraint(&d.constraint, names)),
                doc.reason(&d.reason)
            );
        }
        rows.push_str("</table>\n");
        doc.out.push_str(&rows);
    }
    doc.out.push_str("</body>\n</html>\n");
    doc.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_certificate_str;

    const BRANCH_TREE: &str = include_str!("../corpus/branch_tree.crt");
    const LP_BOUND: &str = include_str!("../corpus/lp_bound.crt");

    fn row<'a>(html: &'a str, name: &str) -> &'a str {
        let marker = format!("<td class=\"con\">{name}: ");
        html.lines().find(|l| l.contains(&marker)).unwrap()
    }

    #[test]
    fn branch_tree_unsplit_row() {
        let html = render_html(&parse_certificate_str(BRANCH_TREE).unwrap());
        let c9 = row(&html, "C9");
        assert!(c9.contains(
            "unsplit <a href=\"#i6\">C4</a>, <a href=\"#i8\">C5</a> on <a href=\"#i5\">A3</a>, <a href=\"#i7\">A4</a>"
        ));
        assert!(c9.ends_with("<td><a href=\"#i3\">A1</a></td><td>-</td></tr>"));
        assert!(row(&html, "C4").contains("<a href=\"#i3\">A1</a>, <a href=\"#i5\">A3</a></td>"));
        assert!(row(&html, "C10").contains("<td></td><td>-</td>"));
        assert!(row(&html, "C5").contains("(-1/3) &times; <a href=\"#i2\">C3</a>"));
        assert!(row(&html, "C7").contains("round up <a href=\"#i9\">C6</a>"));
        assert!(row(&html, "C6").contains("C6: x2 >= 1/4"));
    }

    #[test]
    fn lp_bound_objective_row() {
        let html = render_html(&parse_certificate_str(LP_BOUND).unwrap());
        let obj = row(&html, "obj");
        assert!(obj.contains("obj: 2x + y >= 1"));
        assert!(obj.contains("<a href=\"#i0\">C1</a> + (-1) &times; <a href=\"#i1\">C2</a>"));
        assert!(row(&html, "C2").contains("C2: 3x - 2y &lt;= 1"));
    }

    #[test]
    fn empty_derivations_render_problem_only() {
        let text = LP_BOUND.replace("DER 1\nobj G 1 2 0 2 1 1 { lin 2 0 1 1 -1 } -1\n", "DER 0\n");
        let html = render_html(&parse_certificate_str(&text).unwrap());
        assert!(!html.contains("<h2>Derived</h2>"));
        assert!(html.contains("<h2>Given</h2>"));
    }

    #[test]
    fn deterministic_and_complete() {
        let cert = parse_certificate_str(BRANCH_TREE).unwrap();
        let html = render_html(&cert);
        assert_eq!(html, render_html(&cert));
        assert!(!html.contains("<script"));
        let m = cert.problem.num_constraints();
        for i in 0..m + cert.derivations.len() {
            let name = cert.name_of(i).unwrap();
            assert_eq!(
                html.matches(&format!("<td class=\"con\">{name}: ")).count(),
                1,
                "{name}"
            );
            assert_eq!(html.matches(&format!("<tr id=\"i{i}\">")).count(), 1);
        }
    }

    #[test]
    fn linear_forms() {
        let names: Vec<String> = vec!["x".into(), "y".into(), "z".into()];
        let v = SparseVec::from_dense(&[Rational::new(-1, 3), Rational::one(), Rational::from_integer(-4)]);
        assert_eq!(format_linear(&v, &names), "-1/3 x + y - 4z");
        assert_eq!(format_linear(&SparseVec::new(), &names), "0");
    }
}
