//! Exact-arithmetic certificates for mixed-integer linear programs.
//!
//! A certificate lists a problem, the claim to prove (infeasibility or an
//! objective range), feasible solutions, and a sequence of derived
//! constraints. Each derivation is justified by an assumption, a suitable
//! linear combination of earlier constraints, a rounded combination, or by
//! unsplitting two branches of a split disjunction. This crate checks such
//! certificates in a single streaming pass ([`checker`]), tightens them
//! ([`tightener`]), renders them as HTML ([`renderer`]) and produces them with
//! an exact branch-and-bound solver ([`solver`]).

pub mod checker;
pub mod cli;
pub mod format;
pub mod generate;
pub mod model;
pub mod numeric;
pub mod par;
pub mod renderer;
pub mod solver;
pub mod tightener;

pub use checker::{verify, verify_certificate, verify_reader, CheckOptions, Verdict, VerificationReport};
pub use format::{read_certificate, write_certificate, CertificateReader, Event, FormatError};
pub use model::{Certificate, Constraint, Derivation, Problem, Reason, RtpGoal, Sense, SparseVec};
pub use numeric::Rational;
