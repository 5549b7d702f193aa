//! Trust queries over the operator trust network.
//!
//! `trusts2(A, B)` holds when some directed path of trust edges leads from
//! `A` to `B`. Its ground formula is the disjunction, over all simple
//! paths, of the conjunction of the path's edge atoms; its probability is
//! the two-terminal reliability of the network with independent edges.

use std::collections::BTreeSet;
use std::fmt;

use crate::formula::{AtomId, AtomTable, Formula, GroundAtom, GroundFormula};
use crate::model::KnowledgeBase;
use crate::semiring::{enumerate_proofs, SemiringValue};
use crate::Error;

/// Default cap on enumerated simple paths.
pub const DEFAULT_MAX_PATHS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TrustMode {
    /// Unconditional transitive closure.
    #[default]
    Transitive,
    /// Pairs flagged with `dir(A,B)` use only their direct edge.
    DirectPreferred,
    /// Paths of at most this many edges.
    Radius(u32),
}

impl fmt::Display for TrustMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrustMode::Transitive => f.write_str("transitive"),
            TrustMode::DirectPreferred => f.write_str("direct"),
            TrustMode::Radius(d) => write!(f, "radius:{d}"),
        }
    }
}

impl std::str::FromStr for TrustMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "transitive" => Ok(TrustMode::Transitive),
            "direct" => Ok(TrustMode::DirectPreferred),
            _ => {
                let d = s
                    .strip_prefix("radius:")
                    .or_else(|| s.strip_prefix("radius="))
                    .ok_or_else(|| format!("unknown trust mode `{s}` (expected transitive, direct or radius:D)"))?;
                match d.parse::<u32>() {
                    Ok(d) if d >= 1 => Ok(TrustMode::Radius(d)),
                    _ => Err(format!("radius must be a positive integer, got `{d}`")),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrustOptions {
    pub max_paths: usize,
}

impl Default for TrustOptions {
    fn default() -> Self {
        Self {
            max_paths: DEFAULT_MAX_PATHS,
        }
    }
}

/// Edge atoms of one simple path, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrustPath(pub Vec<AtomId>);

fn edge_atom(from: &str, to: &str) -> GroundAtom {
    GroundAtom::binary("trusts", from, to)
}

/// All simple paths from `from` to `to` with at most `max_len` edges.
pub fn trust_paths(
    kb: &KnowledgeBase,
    from: &str,
    to: &str,
    max_len: Option<usize>,
    table: &mut AtomTable,
    opts: TrustOptions,
) -> Result<Vec<TrustPath>, Error> {
    struct Search<'a> {
        kb: &'a KnowledgeBase,
        target: &'a str,
        max_len: usize,
        cap: usize,
        visited: BTreeSet<&'a str>,
        stack: Vec<AtomId>,
        found: Vec<TrustPath>,
    }
    impl<'a> Search<'a> {
        fn dfs(&mut self, at: &'a str, table: &mut AtomTable) -> Result<(), Error> {
            if self.stack.len() == self.max_len {
                return Ok(());
            }
            let net = self.kb.trust();
            for (next, label) in net.successors(at) {
                if self.visited.contains(next) {
                    continue;
                }
                let id = table.intern(edge_atom(at, next), *label);
                self.stack.push(id);
                if next == self.target {
                    if self.found.len() == self.cap {
                        return Err(Error::TooManyPaths(self.cap));
                    }
                    self.found.push(TrustPath(self.stack.clone()));
                } else {
                    self.visited.insert(next);
                    self.dfs(next, table)?;
                    self.visited.remove(next);
                }
                self.stack.pop();
            }
            Ok(())
        }
    }
    let mut search = Search {
        kb,
        target: to,
        max_len: max_len.unwrap_or(usize::MAX),
        cap: opts.max_paths,
        visited: BTreeSet::from([from]),
        stack: Vec::new(),
        found: Vec::new(),
    };
    search.dfs(from, table)?;
    Ok(search.found)
}

fn check_operator(kb: &KnowledgeBase, op: &str) -> Result<(), Error> {
    if kb.trust().operators().contains(op) {
        Ok(())
    } else {
        Err(Error::UnknownOperator(op.to_string()))
    }
}

/// Ground formula for `trusts2(from, to)` under `mode`.
pub fn trust_formula(kb: &KnowledgeBase, from: &str, to: &str, mode: TrustMode) -> Result<GroundFormula, Error> {
    let mut table = AtomTable::default();
    let root = trust_formula_into(kb, from, to, mode, &mut table, TrustOptions::default())?;
    Ok(GroundFormula::new(root, table))
}

/// As [`trust_formula`], interning atoms into a shared table.
pub fn trust_formula_into(
    kb: &KnowledgeBase,
    from: &str,
    to: &str,
    mode: TrustMode,
    table: &mut AtomTable,
    opts: TrustOptions,
) -> Result<Formula, Error> {
    if from == to {
        return Ok(Formula::True);
    }
    check_operator(kb, from)?;
    check_operator(kb, to)?;
    let max_len = match mode {
        TrustMode::Radius(d) => Some(d as usize),
        TrustMode::Transitive => None,
        TrustMode::DirectPreferred => {
            if kb.is_direct(from, to) {
                // flagged pairs never fall back to indirect trust
                return Ok(match kb.trust().edge(from, to) {
                    Some(label) => Formula::Atom(table.intern(edge_atom(from, to), *label)),
                    None => Formula::False,
                });
            }
            None
        }
    };
    let paths = trust_paths(kb, from, to, max_len, table, opts)?;
    Ok(Formula::or(
        paths
            .into_iter()
            .map(|p| Formula::and(p.0.into_iter().map(Formula::Atom))),
    ))
}

/// Probability of reaching `to` from `from` (probability semiring).
pub fn trust_degree(kb: &KnowledgeBase, from: &str, to: &str, mode: TrustMode) -> Result<f64, Error> {
    let f = trust_formula(kb, from, to, mode)?;
    crate::wmc::wmc(&f)
}

/// Trust value in the knowledge base's semiring. Probability values come
/// from model counting; pair semirings combine path proofs.
pub fn trust_value(kb: &KnowledgeBase, from: &str, to: &str, mode: TrustMode) -> Result<SemiringValue, Error> {
    let f = trust_formula(kb, from, to, mode)?;
    let s = kb.semiring();
    if s.is_probability() {
        Ok(SemiringValue::Probability(crate::wmc::wmc(&f)?))
    } else {
        s.evaluate_proofs(&enumerate_proofs(&f)?, &f.atoms)
    }
}
