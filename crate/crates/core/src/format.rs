//! Plain-text certificate format.
//!
//! ```text
//! VER 1
//! VAR <n> name...
//! INT <k> index...
//! OBJ min|max <sparse>
//! CON <m>            then m lines: <name> G|L|E <rhs> <sparse>
//! RTP infeas | RTP range <lb|-inf> <ub|inf>
//! SOL <s>            then s lines: <name> <sparse>
//! DER <d>            then d lines: <name> G|L|E <rhs> <sparse> { <reason> } <last_use>
//! ```
//!
//! A sparse vector is `k i1 v1 ... ik vk` with strictly increasing indices.
//! Reasons are `asm`, `lin k i1 m1 ...`, `rnd k i1 m1 ...` or `uns i1 a1 i2 a2`.
//! Original constraint `j` has index `j`, derivation `k` has index `m + k`.
//! `%` starts a comment running to the end of the line.
//!
//! [`CertificateReader`] yields the file as a stream of [`Event`]s, so the
//! derivation list is never held in memory as a whole.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::model::{
    Certificate, Constraint, Derivation, IntegerSet, NamedConstraint, ObjectiveSense, Problem, Reason, RtpGoal, Sense,
    Solution, SparseVec,
};
use crate::numeric::Rational;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl FormatError {
    /// `(line, column)` of a parse error, 1-based.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            FormatError::Parse { line, column, .. } => Some((*line, *column)),
            FormatError::Io(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    line: usize,
    column: usize,
}

struct Lexer<R> {
    reader: R,
    line_no: usize,
    pending: std::vec::IntoIter<Token>,
    buf: String,
    eof: bool,
}

impl<R: BufRead> Lexer<R> {
    fn new(reader: R) -> Self {
        Lexer {
            reader,
            line_no: 0,
            pending: Vec::new().into_iter(),
            buf: String::new(),
            eof: false,
        }
    }

    fn next(&mut self) -> Result<Option<Token>, FormatError> {
        loop {
            if let Some(tok) = self.pending.next() {
                return Ok(Some(tok));
            }
            if self.eof {
                return Ok(None);
            }
            self.buf.clear();
            if self.reader.read_line(&mut self.buf)? == 0 {
                self.eof = true;
                return Ok(None);
            }
            self.line_no += 1;
            let content = match self.buf.find('%') {
                Some(p) => &self.buf[..p],
                None => &self.buf[..],
            };
            let mut tokens = Vec::new();
            let mut start = None;
            for (pos, ch) in content.char_indices().chain(std::iter::once((content.len(), ' '))) {
                match (ch.is_whitespace(), start) {
                    (false, None) => start = Some(pos),
                    (true, Some(s)) => {
                        tokens.push(Token {
                            text: content[s..pos].to_string(),
                            line: self.line_no,
                            column: content[..s].chars().count() + 1,
                        });
                        start = None;
                    }
                    _ => {}
                }
            }
            self.pending = tokens.into_iter();
        }
    }

    fn error_at(&self, tok: Option<&Token>, message: impl Into<String>) -> FormatError {
        let (line, column) = match tok {
            Some(t) => (t.line, t.column),
            None => (self.line_no.max(1), 1),
        };
        FormatError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    fn expect_any(&mut self, what: &str) -> Result<Token, FormatError> {
        match self.next()? {
            Some(t) => Ok(t),
            None => Err(self.error_at(None, format!("unexpected end of input, expected {what}"))),
        }
    }

    fn expect_keyword(&mut self, keyword: &str) -> Result<Token, FormatError> {
        let tok = self.expect_any(keyword)?;
        if tok.text != keyword {
            return Err(self.error_at(Some(&tok), format!("expected `{keyword}`, found `{}`", tok.text)));
        }
        Ok(tok)
    }

    fn usize(&mut self, what: &str) -> Result<usize, FormatError> {
        let tok = self.expect_any(what)?;
        tok.text
            .parse::<usize>()
            .map_err(|_| self.error_at(Some(&tok), format!("expected {what}, found `{}`", tok.text)))
    }

    fn index_below(&mut self, bound: usize, what: &str) -> Result<usize, FormatError> {
        let tok = self.expect_any(what)?;
        let value = tok
            .text
            .parse::<usize>()
            .map_err(|_| self.error_at(Some(&tok), format!("expected {what}, found `{}`", tok.text)))?;
        if value >= bound {
            return Err(self.error_at(Some(&tok), format!("{what} {value} out of range (must be < {bound})")));
        }
        Ok(value)
    }

    fn rational(&mut self) -> Result<Rational, FormatError> {
        let tok = self.expect_any("rational")?;
        tok.text
            .parse::<Rational>()
            .map_err(|e| self.error_at(Some(&tok), e.to_string()))
    }

    fn nonzero_rational(&mut self) -> Result<Rational, FormatError> {
        let tok = self.expect_any("rational")?;
        match tok.text.parse::<Rational>() {
            Ok(v) if v.is_zero() => Err(self.error_at(Some(&tok), "zero coefficient is not allowed")),
            Ok(v) => Ok(v),
            Err(e) => Err(self.error_at(Some(&tok), e.to_string())),
        }
    }

    fn sense(&mut self) -> Result<Sense, FormatError> {
        let tok = self.expect_any("sense")?;
        Sense::from_code(&tok.text)
            .ok_or_else(|| self.error_at(Some(&tok), format!("unknown sense code `{}`", tok.text)))
    }

    fn name(&mut self) -> Result<String, FormatError> {
        let tok = self.expect_any("name")?;
        if tok.text == "{" || tok.text == "}" {
            return Err(self.error_at(Some(&tok), "expected a name"));
        }
        Ok(tok.text)
    }

    /// `k i1 v1 ... ik vk`; indices are variable indices below `n`.
    fn sparse(&mut self, n: usize) -> Result<SparseVec, FormatError> {
        let entries = self.terms(n, "variable index")?;
        Ok(SparseVec::from_entries(entries).expect("terms() validates order and zeros"))
    }

    fn terms(&mut self, bound: usize, what: &str) -> Result<Vec<(usize, Rational)>, FormatError> {
        let k = self.usize("entry count")?;
        let mut entries: Vec<(usize, Rational)> = Vec::with_capacity(k.min(1 << 16));
        for _ in 0..k {
            let tok = self.expect_any(what)?;
            let index = tok
                .text
                .parse::<usize>()
                .map_err(|_| self.error_at(Some(&tok), format!("expected {what}, found `{}`", tok.text)))?;
            if index >= bound {
                return Err(self.error_at(Some(&tok), format!("{what} {index} out of range (must be < {bound})")));
            }
            if let Some((prev, _)) = entries.last() {
                if *prev >= index {
                    return Err(self.error_at(Some(&tok), "indices must be strictly increasing"));
                }
            }
            let value = self.nonzero_rational()?;
            entries.push((index, value));
        }
        Ok(entries)
    }

    fn bound(&mut self, infinite: &str) -> Result<Option<Rational>, FormatError> {
        let tok = self.expect_any("bound")?;
        if tok.text == infinite {
            return Ok(None);
        }
        tok.text
            .parse::<Rational>()
            .map(Some)
            .map_err(|e| self.error_at(Some(&tok), e.to_string()))
    }

    fn peek_is(&mut self, keyword: &str) -> Result<bool, FormatError> {
        match self.next()? {
            Some(tok) => {
                let hit = tok.text == keyword;
                let rest: Vec<Token> = std::iter::once(tok).chain(self.pending.by_ref()).collect();
                self.pending = rest.into_iter();
                Ok(hit)
            }
            None => Ok(false),
        }
    }

    fn expect_end(&mut self) -> Result<(), FormatError> {
        match self.next()? {
            None => Ok(()),
            Some(tok) => Err(self.error_at(Some(&tok), format!("trailing token `{}`", tok.text))),
        }
    }
}

/// Problem and goal, available before any solution or derivation is read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub problem: Problem,
    pub goal: RtpGoal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    Header(Box<Header>),
    Solution(Solution),
    Derivation(Derivation),
    End,
}

enum Stage {
    Header,
    Solutions { left: usize },
    DerHeader,
    Derivations { next: usize, total: usize },
    End,
    Done,
}

/// Streaming reader producing one [`Event`] at a time.
pub struct CertificateReader<R> {
    lexer: Lexer<R>,
    stage: Stage,
    n: usize,
    m: usize,
}

impl<R: BufRead> CertificateReader<R> {
    pub fn new(reader: R) -> Self {
        CertificateReader {
            lexer: Lexer::new(reader),
            stage: Stage::Header,
            n: 0,
            m: 0,
        }
    }

    pub fn next_event(&mut self) -> Result<Option<Event>, FormatError> {
        match self.stage {
            Stage::Header => {
                let tok = self.lexer.expect_keyword("VER")?;
                let version = self.lexer.usize("version")?;
                if version != 1 {
                    return Err(self
                        .lexer
                        .error_at(Some(&tok), format!("unsupported version {version}")));
                }
                let problem = parse_problem_body(&mut self.lexer)?;
                let goal = parse_goal(&mut self.lexer)?;
                self.lexer.expect_keyword("SOL")?;
                let sol_tok_count = self.lexer.usize("solution count")?;
                if goal == RtpGoal::Infeasible && sol_tok_count != 0 {
                    return Err(self
                        .lexer
                        .error_at(None, "an infeasibility certificate cannot list solutions"));
                }
                self.n = problem.num_vars();
                self.m = problem.num_constraints();
                self.stage = Stage::Solutions { left: sol_tok_count };
                Ok(Some(Event::Header(Box::new(Header { problem, goal }))))
            }
            Stage::Solutions { left: 0 } => {
                self.stage = Stage::DerHeader;
                self.next_event()
            }
            Stage::Solutions { left } => {
                let name = self.lexer.name()?;
                let assignment = self.lexer.sparse(self.n)?;
                self.stage = Stage::Solutions { left: left - 1 };
                Ok(Some(Event::Solution(Solution { name, assignment })))
            }
            Stage::DerHeader => {
                self.lexer.expect_keyword("DER")?;
                let total = self.lexer.usize("derivation count")?;
                self.stage = Stage::Derivations { next: 0, total };
                self.next_event()
            }
            Stage::Derivations { next, total } if next == total => {
                self.lexer.expect_end()?;
                self.stage = Stage::End;
                self.next_event()
            }
            Stage::Derivations { next, total } => {
                let d = self.derivation(self.m + next)?;
                self.stage = Stage::Derivations { next: next + 1, total };
                Ok(Some(Event::Derivation(d)))
            }
            Stage::End => {
                self.stage = Stage::Done;
                Ok(Some(Event::End))
            }
            Stage::Done => Ok(None),
        }
    }

    fn derivation(&mut self, index: usize) -> Result<Derivation, FormatError> {
        let lx = &mut self.lexer;
        let name = lx.name()?;
        let sense = lx.sense()?;
        let rhs = lx.rational()?;
        let lhs = lx.sparse(self.n)?;
        lx.expect_keyword("{")?;
        let kind = lx.expect_any("reason")?;
        let reason = match kind.text.as_str() {
            "asm" => Reason::Asm,
            "lin" => Reason::Lin(lx.terms(index, "constraint index")?),
            "rnd" => Reason::Rnd(lx.terms(index, "constraint index")?),
            "uns" => Reason::Uns {
                i1: lx.index_below(index, "constraint index")?,
                a1: lx.index_below(index, "constraint index")?,
                i2: lx.index_below(index, "constraint index")?,
                a2: lx.index_below(index, "constraint index")?,
            },
            other => return Err(lx.error_at(Some(&kind), format!("unknown reason `{other}`"))),
        };
        lx.expect_keyword("}")?;
        let tok = lx.expect_any("last-use index")?;
        let last_use = match tok.text.as_str() {
            "-1" => None,
            text => match text.parse::<usize>() {
                Ok(k) if k > index => Some(k),
                Ok(k) => {
                    return Err(lx.error_at(
                        Some(&tok),
                        format!("last-use index {k} must exceed the derivation's own index {index}"),
                    ))
                }
                Err(_) => return Err(lx.error_at(Some(&tok), format!("bad last-use index `{text}`"))),
            },
        };
        Ok(Derivation {
            name,
            constraint: Constraint::new(sense, lhs, rhs),
            reason,
            last_use,
        })
    }
}

impl<R: BufRead> Iterator for CertificateReader<R> {
    type Item = Result<Event, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_event() {
            Ok(Some(ev)) => Some(Ok(ev)),
            Ok(None) => None,
            Err(e) => {
                self.stage = Stage::Done;
                Some(Err(e))
            }
        }
    }
}

fn parse_problem_body<R: BufRead>(lx: &mut Lexer<R>) -> Result<Problem, FormatError> {
    lx.expect_keyword("VAR")?;
    let n = lx.usize("variable count")?;
    let mut variable_names = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        variable_names.push(lx.name()?);
    }
    lx.expect_keyword("INT")?;
    let k = lx.usize("integer variable count")?;
    let mut ints = Vec::with_capacity(k.min(1 << 16));
    for _ in 0..k {
        ints.push(lx.index_below(n, "variable index")?);
    }
    lx.expect_keyword("OBJ")?;
    let sense_tok = lx.expect_any("min or max")?;
    let objective_sense = match sense_tok.text.as_str() {
        "min" => ObjectiveSense::Min,
        "max" => ObjectiveSense::Max,
        other => return Err(lx.error_at(Some(&sense_tok), format!("expected min or max, found `{other}`"))),
    };
    let objective = lx.sparse(n)?;
    lx.expect_keyword("CON")?;
    let m = lx.usize("constraint count")?;
    let mut constraints = Vec::with_capacity(m.min(1 << 16));
    for _ in 0..m {
        let name = lx.name()?;
        let sense = lx.sense()?;
        let rhs = lx.rational()?;
        let lhs = lx.sparse(n)?;
        constraints.push(NamedConstraint::new(name, Constraint::new(sense, lhs, rhs)));
    }
    Ok(Problem {
        variable_names,
        integer_set: IntegerSet::new(ints),
        objective_sense,
        objective,
        constraints,
    })
}

fn parse_goal<R: BufRead>(lx: &mut Lexer<R>) -> Result<RtpGoal, FormatError> {
    lx.expect_keyword("RTP")?;
    let kind = lx.expect_any("infeas or range")?;
    match kind.text.as_str() {
        "infeas" => Ok(RtpGoal::Infeasible),
        "range" => {
            let lower = lx.bound("-inf")?;
            let upper = lx.bound("inf")?;
            if let (Some(l), Some(u)) = (&lower, &upper) {
                if l > u {
                    return Err(lx.error_at(Some(&kind), format!("empty range [{l}, {u}]")));
                }
            }
            Ok(RtpGoal::Range { lower, upper })
        }
        other => Err(lx.error_at(Some(&kind), format!("expected infeas or range, found `{other}`"))),
    }
}

/// Reads a whole certificate into memory.
pub fn read_certificate<R: BufRead>(reader: R) -> Result<Certificate, FormatError> {
    let mut header = None;
    let mut solutions = Vec::new();
    let mut derivations = Vec::new();
    for event in CertificateReader::new(reader) {
        match event? {
            Event::Header(h) => header = Some(*h),
            Event::Solution(s) => solutions.push(s),
            Event::Derivation(d) => derivations.push(d),
            Event::End => {}
        }
    }
    let Header { problem, goal } = header.expect("reader emits a header before anything else");
    Ok(Certificate {
        problem,
        goal,
        solutions,
        derivations,
    })
}

pub fn parse_certificate_str(text: &str) -> Result<Certificate, FormatError> {
    read_certificate(text.as_bytes())
}

/// Reads a problem file: an optional `VER 1` line followed by the VAR, INT, OBJ and CON sections.
pub fn read_problem<R: BufRead>(reader: R) -> Result<Problem, FormatError> {
    let mut lx = Lexer::new(reader);
    if lx.peek_is("VER")? {
        let tok = lx.expect_keyword("VER")?;
        if lx.usize("version")? != 1 {
            return Err(lx.error_at(Some(&tok), "unsupported version"));
        }
    }
    let problem = parse_problem_body(&mut lx)?;
    lx.expect_end()?;
    Ok(problem)
}

fn write_sparse<W: Write>(out: &mut W, v: &SparseVec) -> io::Result<()> {
    write!(out, "{}", v.len())?;
    for (i, x) in v.iter() {
        write!(out, " {i} {x}")?;
    }
    Ok(())
}

fn write_constraint<W: Write>(out: &mut W, name: &str, c: &Constraint) -> io::Result<()> {
    write!(out, "{name} {} {} ", c.sense.code(), c.rhs)?;
    write_sparse(out, &c.lhs)
}

fn write_terms<W: Write>(out: &mut W, terms: &[(usize, Rational)]) -> io::Result<()> {
    write!(out, "{}", terms.len())?;
    for (i, m) in terms {
        write!(out, " {i} {m}")?;
    }
    Ok(())
}

fn write_problem_body<W: Write>(out: &mut W, p: &Problem) -> io::Result<()> {
    write!(out, "VAR {}", p.num_vars())?;
    for name in &p.variable_names {
        write!(out, " {name}")?;
    }
    write!(out, "\nINT {}", p.integer_set.len())?;
    for i in p.integer_set.iter() {
        write!(out, " {i}")?;
    }
    let sense = match p.objective_sense {
        ObjectiveSense::Min => "min",
        ObjectiveSense::Max => "max",
    };
    write!(out, "\nOBJ {sense} ")?;
    write_sparse(out, &p.objective)?;
    writeln!(out, "\nCON {}", p.num_constraints())?;
    for c in &p.constraints {
        write_constraint(out, &c.name, &c.constraint)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a problem file in the format accepted by [`read_problem`].
pub fn write_problem<W: Write>(p: &Problem, out: &mut W) -> io::Result<()> {
    writeln!(out, "VER 1")?;
    write_problem_body(out, p)
}

pub fn write_certificate<W: Write>(c: &Certificate, out: &mut W) -> io::Result<()> {
    writeln!(out, "VER 1")?;
    write_problem_body(out, &c.problem)?;
    match &c.goal {
        RtpGoal::Infeasible => writeln!(out, "RTP infeas")?,
        RtpGoal::Range { lower, upper } => {
            let lb = lower.as_ref().map_or_else(|| "-inf".to_string(), |v| v.to_string());
            let ub = upper.as_ref().map_or_else(|| "inf".to_string(), |v| v.to_string());
            writeln!(out, "RTP range {lb} {ub}")?;
        }
    }
    writeln!(out, "SOL {}", c.solutions.len())?;
    for s in &c.solutions {
        write!(out, "{} ", s.name)?;
        write_sparse(out, &s.assignment)?;
        writeln!(out)?;
    }
    writeln!(out, "DER {}", c.derivations.len())?;
    for d in &c.derivations {
        write_derivation(out, d)?;
    }
    Ok(())
}

fn write_derivation<W: Write>(out: &mut W, d: &Derivation) -> io::Result<()> {
    write_constraint(out, &d.name, &d.constraint)?;
    write!(out, " {{ ")?;
    match &d.reason {
        Reason::Asm => write!(out, "asm")?,
        Reason::Lin(terms) => {
            write!(out, "lin ")?;
            write_terms(out, terms)?;
        }
        Reason::Rnd(terms) => {
            write!(out, "rnd ")?;
            write_terms(out, terms)?;
        }
        Reason::Uns { i1, a1, i2, a2 } => write!(out, "uns {i1} {a1} {i2} {a2}")?,
    }
    match d.last_use {
        Some(k) => writeln!(out, " }} {k}"),
        None => writeln!(out, " }} -1"),
    }
}

pub fn certificate_to_string(c: &Certificate) -> String {
    let mut buf = Vec::new();
    write_certificate(c, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("certificate text is utf-8")
}
