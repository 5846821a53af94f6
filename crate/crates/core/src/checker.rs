//! Sequential certificate verification with on-the-fly assumption tracking.
//!
//! Each derivation is processed in two steps. Resolution runs strictly in
//! order: it looks up the referenced constraints, computes the assumption set,
//! stores the stated constraint and evicts constraints whose declared last use
//! is the current index. The arithmetic check (combination, rounding,
//! domination, goal test) only needs the *stated* constraints of earlier
//! derivations, so a window of resolved derivations can be checked
//! concurrently. The first failure in index order decides the report, which
//! is therefore the same in sequential and parallel mode.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::BufRead;
use std::sync::Arc;

use crate::format::{CertificateReader, Event, FormatError, Header};
use crate::model::{
    check_disjunction_pair, dominates, evaluate_solution, is_absurd, linear_combine, round_constraint, AssumptionSet,
    Certificate, Constraint, Derivation, LastUse, ObjectiveSense, Problem, Reason, ReasonKind, RtpGoal, Solution,
};
use crate::numeric::Rational;
use crate::par;
use crate::renderer::format_constraint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    /// Drop constraints after their declared last use.
    pub evict: bool,
    /// Check arithmetic on the rayon pool (ignored without the `parallel` feature).
    pub parallel: bool,
    /// Number of resolved derivations checked together in parallel mode.
    pub chunk_size: usize,
    /// Keep a per-derivation trace (assumption sets, goal hits) in the report.
    pub trace: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            evict: true,
            parallel: par::available(),
            chunk_size: 512,
            trace: false,
        }
    }
}

impl CheckOptions {
    pub fn sequential() -> Self {
        CheckOptions {
            parallel: false,
            ..CheckOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Verified,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureRule {
    Reference,
    Asm,
    Lin,
    Rnd,
    Uns,
    Solution,
    PrimalBound,
    Goal,
}

impl From<ReasonKind> for FailureRule {
    fn from(kind: ReasonKind) -> Self {
        match kind {
            ReasonKind::Asm => FailureRule::Asm,
            ReasonKind::Lin => FailureRule::Lin,
            ReasonKind::Rnd => FailureRule::Rnd,
            ReasonKind::Uns => FailureRule::Uns,
        }
    }
}

impl fmt::Display for FailureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureRule::Reference => "reference",
            FailureRule::Asm => "asm",
            FailureRule::Lin => "lin",
            FailureRule::Rnd => "rnd",
            FailureRule::Uns => "uns",
            FailureRule::Solution => "solution",
            FailureRule::PrimalBound => "primal bound",
            FailureRule::Goal => "goal",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    /// Combined index of the offending derivation, if the failure is tied to one.
    pub index: Option<usize>,
    pub name: Option<String>,
    pub rule: FailureRule,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.index, &self.name) {
            (Some(i), Some(n)) => write!(f, "derivation {i} ({n}), rule {}: {}", self.rule, self.message),
            (Some(i), None) => write!(f, "derivation {i}, rule {}: {}", self.rule, self.message),
            _ => write!(f, "{}: {}", self.rule, self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Statistics {
    pub asm: usize,
    pub lin: usize,
    pub rnd: usize,
    pub uns: usize,
    pub solutions: usize,
    /// Largest number of constraints (original and derived) held at once.
    pub peak_live: usize,
}

impl Statistics {
    fn count(&mut self, kind: ReasonKind) {
        match kind {
            ReasonKind::Asm => self.asm += 1,
            ReasonKind::Lin => self.lin += 1,
            ReasonKind::Rnd => self.rnd += 1,
            ReasonKind::Uns => self.uns += 1,
        }
    }

    pub fn derivations(&self) -> usize {
        self.asm + self.lin + self.rnd + self.uns
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTrace {
    pub index: usize,
    pub assumptions: Vec<usize>,
    pub proves_goal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub verdict: Verdict,
    pub failure: Option<Failure>,
    pub goal: Option<RtpGoal>,
    pub statistics: Statistics,
    /// Filled when [`CheckOptions::trace`] is set, up to the first failure.
    pub trace: Vec<DerivationTrace>,
}

impl VerificationReport {
    pub fn is_verified(&self) -> bool {
        self.verdict == Verdict::Verified
    }

    pub fn failing_index(&self) -> Option<usize> {
        self.failure.as_ref().and_then(|f| f.index)
    }

    /// Short outcome line such as `verified: infeasible`.
    pub fn summary(&self) -> String {
        match (&self.failure, &self.goal) {
            (Some(f), _) => format!("rejected: {f}"),
            (None, Some(RtpGoal::Infeasible)) => "verified: infeasible".to_string(),
            (None, Some(RtpGoal::Range { lower, upper })) => {
                let lb = lower.as_ref().map_or("-inf".to_string(), |v| v.to_string());
                let ub = upper.as_ref().map_or("inf".to_string(), |v| v.to_string());
                format!("verified: objective in [{lb}, {ub}]")
            }
            (None, None) => "verified".to_string(),
        }
    }
}

/// Whether `c`, derived without assumptions, establishes the dual side of the goal.
pub fn check_goal(problem: &Problem, goal: &RtpGoal, c: &Constraint) -> bool {
    match goal {
        RtpGoal::Infeasible => is_absurd(c),
        RtpGoal::Range { lower, upper } => {
            let bound = match problem.objective_sense {
                ObjectiveSense::Min => lower,
                ObjectiveSense::Max => upper,
            };
            match bound {
                Some(b) => dominates(c, &problem.objective_bound(b)),
                None => true,
            }
        }
    }
}

fn dual_side_vacuous(problem: &Problem, goal: &RtpGoal) -> bool {
    match goal {
        RtpGoal::Infeasible => false,
        RtpGoal::Range { lower, upper } => match problem.objective_sense {
            ObjectiveSense::Min => lower.is_none(),
            ObjectiveSense::Max => upper.is_none(),
        },
    }
}

struct Entry {
    constraint: Arc<Constraint>,
    assumptions: Arc<AssumptionSet>,
    last_use: LastUse,
    is_assumption: bool,
}

/// A resolved derivation awaiting its arithmetic check.
struct Job {
    index: usize,
    name: String,
    stated: Arc<Constraint>,
    kind: ReasonKind,
    multipliers: Vec<Rational>,
    operands: Vec<Arc<Constraint>>,
    assumptions: Arc<AssumptionSet>,
    precheck: Option<(FailureRule, String)>,
    /// Store size right after this derivation was resolved.
    live_after: usize,
}

struct Context {
    problem: Problem,
    goal: RtpGoal,
}

/// Streaming verifier state.
pub struct Checker {
    options: CheckOptions,
    ctx: Option<Context>,
    store: HashMap<usize, Entry>,
    evict_at: BTreeMap<usize, Vec<usize>>,
    next_index: usize,
    goal_proven: bool,
    best_solution_value: Option<Rational>,
    pending: Vec<Job>,
    failure: Option<Failure>,
    stats: Statistics,
    trace: Vec<DerivationTrace>,
}

impl Checker {
    pub fn new(options: CheckOptions) -> Self {
        Checker {
            options,
            ctx: None,
            store: HashMap::new(),
            evict_at: BTreeMap::new(),
            next_index: 0,
            goal_proven: false,
            best_solution_value: None,
            pending: Vec::new(),
            failure: None,
            stats: Statistics::default(),
            trace: Vec::new(),
        }
    }

    pub fn is_rejected(&self) -> bool {
        self.failure.is_some()
    }

    pub fn goal_proven(&self) -> bool {
        self.goal_proven
    }

    pub fn live_constraints(&self) -> usize {
        self.store.len()
    }

    pub fn next_index(&self) -> usize {
        self.next_index
    }

    pub fn header(&mut self, problem: &Problem, goal: &RtpGoal) {
        for (j, c) in problem.constraints.iter().enumerate() {
            self.store.insert(
                j,
                Entry {
                    constraint: Arc::new(c.constraint.clone()),
                    assumptions: Arc::new(AssumptionSet::empty()),
                    last_use: None,
                    is_assumption: false,
                },
            );
        }
        self.next_index = problem.num_constraints();
        self.goal_proven = dual_side_vacuous(problem, goal);
        self.stats.peak_live = self.store.len();
        self.ctx = Some(Context {
            problem: problem.clone(),
            goal: goal.clone(),
        });
    }

    fn ctx(&self) -> &Context {
        self.ctx.as_ref().expect("header must be processed first")
    }

    pub fn solution(&mut self, s: &Solution) {
        if self.failure.is_some() {
            return;
        }
        self.stats.solutions += 1;
        let ctx = self.ctx();
        let (feasible, value) = evaluate_solution(&ctx.problem, s);
        if !feasible {
            self.failure = Some(Failure {
                index: None,
                name: Some(s.name.clone()),
                rule: FailureRule::Solution,
                message: format!("solution `{}` is infeasible", s.name),
            });
            return;
        }
        let better = match (&self.best_solution_value, ctx.problem.objective_sense) {
            (None, _) => true,
            (Some(best), ObjectiveSense::Min) => value < *best,
            (Some(best), ObjectiveSense::Max) => value > *best,
        };
        if better {
            self.best_solution_value = Some(value);
        }
    }

    /// Resolves one derivation and queues (or runs) its arithmetic check.
    pub fn verify_derivation(&mut self, d: &Derivation) {
        if self.failure.is_some() {
            return;
        }
        let job = self.resolve(d);
        let stop = job.precheck.is_some();
        self.pending.push(job);
        let window = if self.options.parallel {
            self.options.chunk_size.max(1)
        } else {
            1
        };
        if stop || self.pending.len() >= window {
            self.flush();
        }
    }

    fn lookup(&self, index: usize, at: usize) -> Result<&Entry, String> {
        if index >= at {
            return Err(format!("constraint {index} is not earlier than derivation {at}"));
        }
        match self.store.get(&index) {
            None => Err(format!("constraint {index} referenced after its declared last use")),
            Some(e) => match e.last_use {
                Some(l) if l < at => Err(format!("constraint {index} referenced after its declared last use")),
                _ => Ok(e),
            },
        }
    }

    fn resolve(&mut self, d: &Derivation) -> Job {
        let index = self.next_index;
        self.next_index += 1;
        let kind = d.reason.kind();
        let stated = Arc::new(d.constraint.clone());
        let mut job = Job {
            index,
            name: d.name.clone(),
            stated: Arc::clone(&stated),
            kind,
            multipliers: Vec::new(),
            operands: Vec::new(),
            assumptions: Arc::new(AssumptionSet::empty()),
            precheck: None,
            live_after: 0,
        };
        let resolved = match &d.reason {
            Reason::Asm => Ok(Arc::new(AssumptionSet::singleton(index))),
            Reason::Lin(terms) | Reason::Rnd(terms) => self.resolve_terms(terms, index, &mut job),
            Reason::Uns { i1, a1, i2, a2 } => self.resolve_unsplit([*i1, *a1, *i2, *a2], index, &mut job),
        };
        match resolved {
            Ok(assumptions) => job.assumptions = assumptions,
            Err((rule, msg)) => {
                job.precheck = Some((rule, msg));
                job.live_after = self.store.len();
                return job;
            }
        }
        self.store.insert(
            index,
            Entry {
                constraint: stated,
                assumptions: Arc::clone(&job.assumptions),
                last_use: d.last_use,
                is_assumption: kind == ReasonKind::Asm,
            },
        );
        if let Some(l) = d.last_use {
            self.evict_at.entry(l).or_default().push(index);
        }
        job.live_after = self.store.len();
        if let Some(expiring) = self.evict_at.remove(&index) {
            if self.options.evict {
                for j in expiring {
                    self.store.remove(&j);
                }
            }
        }
        job
    }

    fn resolve_terms(
        &self,
        terms: &[(usize, Rational)],
        index: usize,
        job: &mut Job,
    ) -> Result<Arc<AssumptionSet>, (FailureRule, String)> {
        let mut merged: Option<AssumptionSet> = None;
        let mut shared: Option<Arc<AssumptionSet>> = None;
        for (j, m) in terms {
            let e = self.lookup(*j, index).map_err(|msg| (FailureRule::Reference, msg))?;
            job.operands.push(Arc::clone(&e.constraint));
            job.multipliers.push(m.clone());
            if e.assumptions.is_empty() {
                continue;
            }
            match (&mut merged, &shared) {
                (Some(acc), _) => acc.union_with(&e.assumptions),
                (None, None) => shared = Some(Arc::clone(&e.assumptions)),
                (None, Some(first)) if Arc::ptr_eq(first, &e.assumptions) || **first == *e.assumptions => {}
                (None, Some(first)) => {
                    let mut acc = (**first).clone();
                    acc.union_with(&e.assumptions);
                    merged = Some(acc);
                }
            }
        }
        Ok(match (merged, shared) {
            (Some(acc), _) => Arc::new(acc),
            (None, Some(s)) => s,
            (None, None) => Arc::new(AssumptionSet::empty()),
        })
    }

    fn resolve_unsplit(
        &self,
        refs: [usize; 4],
        index: usize,
        job: &mut Job,
    ) -> Result<Arc<AssumptionSet>, (FailureRule, String)> {
        let [i1, a1, i2, a2] = refs;
        let mut entries = Vec::with_capacity(4);
        for j in refs {
            entries.push(self.lookup(j, index).map_err(|msg| (FailureRule::Reference, msg))?);
        }
        let uns = |msg: String| (FailureRule::Uns, msg);
        for (a, e) in [(a1, entries[1]), (a2, entries[3])] {
            if !e.is_assumption {
                return Err(uns(format!("constraint {a} is not an assumption")));
            }
        }
        if a1 == a2 {
            return Err(uns(format!("both branches use the same assumption {a1}")));
        }
        if !entries[0].assumptions.contains(a1) {
            return Err(uns(format!("assumption {a1} is not among the assumptions of {i1}")));
        }
        if !entries[2].assumptions.contains(a2) {
            return Err(uns(format!("assumption {a2} is not among the assumptions of {i2}")));
        }
        let mut set = (*entries[0].assumptions).clone();
        set.union_with(&entries[2].assumptions);
        set.remove(a1);
        set.remove(a2);
        job.operands = entries.iter().map(|e| Arc::clone(&e.constraint)).collect();
        Ok(Arc::new(set))
    }

    fn flush(&mut self) {
        if self.pending.is_empty() {
            return;
        }
        let jobs = std::mem::take(&mut self.pending);
        let ctx = self.ctx.as_ref().expect("header must be processed first");
        let outcomes = par::map_ordered(&jobs, self.options.parallel, |job| check_job(ctx, job));
        for (job, outcome) in jobs.into_iter().zip(outcomes) {
            self.stats.count(job.kind);
            self.stats.peak_live = self.stats.peak_live.max(job.live_after);
            match outcome {
                Ok(proves) => {
                    self.goal_proven |= proves;
                    if self.options.trace {
                        self.trace.push(DerivationTrace {
                            index: job.index,
                            assumptions: job.assumptions.iter().collect(),
                            proves_goal: proves,
                        });
                    }
                }
                Err((rule, message)) => {
                    self.failure = Some(Failure {
                        index: Some(job.index),
                        name: Some(job.name),
                        rule,
                        message,
                    });
                    return;
                }
            }
        }
    }

    /// Completes verification after the last event.
    pub fn finish(mut self) -> VerificationReport {
        self.flush();
        if self.failure.is_none() {
            self.failure = self.final_failure();
        }
        VerificationReport {
            verdict: if self.failure.is_some() {
                Verdict::Rejected
            } else {
                Verdict::Verified
            },
            failure: self.failure,
            goal: self.ctx.map(|c| c.goal),
            statistics: self.stats,
            trace: self.trace,
        }
    }

    fn final_failure(&self) -> Option<Failure> {
        let ctx = self.ctx.as_ref()?;
        let fail = |rule, message: String| {
            Some(Failure {
                index: None,
                name: None,
                rule,
                message,
            })
        };
        if let RtpGoal::Range { lower, upper } = &ctx.goal {
            let primal = match ctx.problem.objective_sense {
                ObjectiveSense::Min => upper.as_ref().map(|ub| (ub, "<=")),
                ObjectiveSense::Max => lower.as_ref().map(|lb| (lb, ">=")),
            };
            if let Some((bound, op)) = primal {
                let met = match (&self.best_solution_value, op) {
                    (None, _) => false,
                    (Some(v), "<=") => v <= bound,
                    (Some(v), _) => v >= bound,
                };
                if !met {
                    return fail(
                        FailureRule::PrimalBound,
                        format!("no listed solution attains an objective value {op} {bound}"),
                    );
                }
            }
        }
        if !self.goal_proven {
            let what = match ctx.goal {
                RtpGoal::Infeasible => "no assumption-free absurdity was derived",
                RtpGoal::Range { .. } => "no assumption-free derivation proves the objective bound",
            };
            return fail(FailureRule::Goal, what.to_string());
        }
        None
    }
}

fn check_job(ctx: &Context, job: &Job) -> Result<bool, (FailureRule, String)> {
    if let Some(pre) = &job.precheck {
        return Err(pre.clone());
    }
    let rule = FailureRule::from(job.kind);
    match job.kind {
        ReasonKind::Asm => {}
        ReasonKind::Lin | ReasonKind::Rnd => {
            let terms = job.operands.iter().map(|c| &**c).zip(job.multipliers.iter());
            let mut derived = linear_combine(terms, job.stated.sense).map_err(|e| (rule, e.to_string()))?;
            if job.kind == ReasonKind::Rnd {
                derived = round_constraint(&derived, &ctx.problem.integer_set).map_err(|e| (rule, e.to_string()))?;
            }
            if !dominates(&derived, &job.stated) {
                return Err((
                    rule,
                    format!(
                        "derived {} does not dominate the stated constraint",
                        format_constraint(&derived, &ctx.problem.variable_names)
                    ),
                ));
            }
        }
        ReasonKind::Uns => {
            let [d1, a1, d2, a2] = [&job.operands[0], &job.operands[1], &job.operands[2], &job.operands[3]];
            if !check_disjunction_pair(a1, a2, &ctx.problem.integer_set) {
                return Err((rule, "assumptions do not form a split disjunction".to_string()));
            }
            if !dominates(d1, &job.stated) {
                return Err((rule, "first branch does not dominate the stated constraint".to_string()));
            }
            if !dominates(d2, &job.stated) {
                return Err((
                    rule,
                    "second branch does not dominate the stated constraint".to_string(),
                ));
            }
        }
    }
    Ok(job.assumptions.is_empty() && check_goal(&ctx.problem, &ctx.goal, &job.stated))
}

/// Verifies a stream of events produced by [`CertificateReader`].
///
/// Parse errors are returned as `Err`; logical failures produce a rejected report.
/// Reading stops at the first rejection.
pub fn verify_certificate<I>(events: I, options: CheckOptions) -> Result<VerificationReport, FormatError>
where
    I: IntoIterator<Item = Result<Event, FormatError>>,
{
    let mut checker = Checker::new(options);
    for event in events {
        match event? {
            Event::Header(h) => {
                let Header { problem, goal } = *h;
                checker.header(&problem, &goal);
            }
            Event::Solution(s) => checker.solution(&s),
            Event::Derivation(d) => checker.verify_derivation(&d),
            Event::End => break,
        }
        if checker.is_rejected() {
            break;
        }
    }
    Ok(checker.finish())
}

pub fn verify_reader<R: BufRead>(reader: R, options: CheckOptions) -> Result<VerificationReport, FormatError> {
    verify_certificate(CertificateReader::new(reader), options)
}

/// Verifies an in-memory certificate.
pub fn verify(cert: &Certificate, options: CheckOptions) -> VerificationReport {
    let mut checker = Checker::new(options);
    checker.header(&cert.problem, &cert.goal);
    for s in &cert.solutions {
        checker.solution(s);
    }
    for d in &cert.derivations {
        if checker.is_rejected() {
            break;
        }
        checker.verify_derivation(d);
    }
    checker.finish()
}
