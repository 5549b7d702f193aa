//! Quantitative security assessment of multi-service Cloud-Edge deployments.
//!
//! Infrastructure capabilities, security policies and operator trust are
//! declared in a small logic language ([`dsl`]). The knowledge base
//! ([`model`]) is grounded into propositional formulas ([`grounder`],
//! [`trust`]) and evaluated either as probabilities by weighted model
//! counting over decision diagrams ([`wmc`]) or in a trust/confidence
//! semiring ([`semiring`]). [`assessor`] enumerates and ranks eligible
//! deployments; [`explain`] renders the formulas behind a result.

pub mod assessor;
pub mod cli;
pub mod dsl;
pub mod explain;
pub mod formula;
pub mod grounder;
pub mod model;
pub mod semiring;
pub mod trust;
pub mod wmc;

pub use assessor::{
    assess, deployment_formula, enumerate_deployments, evaluate, rank, AssessOptions, Assessment, Assignment,
    Deployment, PartialDeployment, RankBy, RankedAssessment,
};
pub use dsl::{parse_program, print_program, Label, ParseError, Program};
pub use formula::{AtomId, AtomTable, Formula, GroundAtom, GroundFormula};
pub use grounder::{candidate_nodes, ground_requirement};
pub use model::{build_kb, lint_vocabulary, KnowledgeBase, ValidationError, ValidationErrorKind, Warning};
pub use semiring::{enumerate_proofs, ProofSet, SemiringId, SemiringValue, TieBreak};
pub use trust::{trust_degree, trust_formula, trust_value, TrustMode, TrustOptions};
pub use wmc::{compile, wmc, DecisionDiagram};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("no security requirements declared for service `{0}`")]
    NoRequirement(String),
    #[error("policy unfolding exceeded depth {0}")]
    DepthExceeded(usize),
    #[error("unsupported literal `{0}` in policy body")]
    UnsupportedBuiltin(String),
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("more than {0} trust paths")]
    TooManyPaths(usize),
    #[error("atom `{0}` has a (trust, confidence) label; use a pair semiring")]
    UnsupportedLabel(String),
    #[error("atom #{0} has no label")]
    UnlabeledAtom(usize),
    #[error("variable order misses atom #{0}")]
    InvalidOrder(usize),
    #[error("decision diagram exceeded {0} nodes")]
    SizeLimit(usize),
    #[error("{0} atoms is too many to enumerate")]
    TooManyAtoms(usize),
    #[error("value outside the {semiring} carrier: {detail}")]
    CarrierMismatch { semiring: &'static str, detail: String },
    #[error("negation cannot be evaluated in a pair semiring")]
    NegationInAlgebraicMode,
    #[error("more than {0} proofs")]
    TooManyProofs(usize),
    #[error("unknown application `{0}`")]
    UnknownApp(String),
    #[error("inconsistent partial deployment: {0}")]
    InconsistentPartial(String),
}

/// Formats a number with up to eight decimals, trailing zeros trimmed.
///
/// ```
/// assert_eq!(secassess::format_number(1.0), "1.0");
/// assert_eq!(secassess::format_number(0.23560000000000003), "0.2356");
/// ```
pub fn format_number(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    let mut s = format!("{x:.8}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    if s == "-0.0" {
        s = "0.0".into();
    }
    s
}
