//! Unfolds security requirements for a (service, node) pair into a ground
//! formula over capability atoms.
//!
//! Policies are non-recursive, so grounding is plain macro expansion: each
//! policy literal is replaced by the disjunction of its clause bodies, and
//! each capability literal becomes an atom (declared) or `False`
//! (undeclared). A predicate with both capability facts and policy clauses
//! is the disjunction of both.

use std::collections::BTreeSet;

use crate::dsl::{Atom, BodyExpr, Term};
use crate::formula::{AtomTable, Formula, GroundAtom, GroundFormula};
use crate::model::{KnowledgeBase, PolicyRule};
use crate::Error;

/// Maximum policy nesting depth.
pub const MAX_UNFOLD_DEPTH: usize = 64;

/// Ground formula for `securityRequirements(service, node)`.
pub fn ground_requirement(kb: &KnowledgeBase, service: &str, node: &str) -> Result<GroundFormula, Error> {
    let mut table = AtomTable::default();
    let root = requirement_formula(kb, service, node, &mut table)?;
    Ok(GroundFormula::new(root, table))
}

/// As [`ground_requirement`], interning atoms into a shared table.
pub fn requirement_formula(
    kb: &KnowledgeBase,
    service: &str,
    node: &str,
    table: &mut AtomTable,
) -> Result<Formula, Error> {
    if kb.node_operator(node).is_none() {
        return Err(Error::UnknownNode(node.to_string()));
    }
    let clauses = kb.requirements(service);
    if clauses.is_empty() {
        return Err(Error::NoRequirement(service.to_string()));
    }
    let mut parts = Vec::with_capacity(clauses.len());
    for clause in clauses {
        parts.push(unfold_clause(kb, clause, node, table, 0)?);
    }
    Ok(Formula::or(parts))
}

fn unfold_clause(
    kb: &KnowledgeBase,
    clause: &PolicyRule,
    node: &str,
    table: &mut AtomTable,
    depth: usize,
) -> Result<Formula, Error> {
    if depth > MAX_UNFOLD_DEPTH {
        return Err(Error::DepthExceeded(MAX_UNFOLD_DEPTH));
    }
    unfold_body(kb, &clause.body, &clause.node_var, node, table, depth)
}

fn unfold_body(
    kb: &KnowledgeBase,
    body: &BodyExpr,
    var: &str,
    node: &str,
    table: &mut AtomTable,
    depth: usize,
) -> Result<Formula, Error> {
    Ok(match body {
        BodyExpr::Conj(xs) => Formula::and(
            xs.iter()
                .map(|x| unfold_body(kb, x, var, node, table, depth))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        BodyExpr::Disj(xs) => Formula::or(
            xs.iter()
                .map(|x| unfold_body(kb, x, var, node, table, depth))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        BodyExpr::Lit { atom, positive } => {
            let arg = literal_argument(atom, var, node)?;
            let f = unfold_predicate(kb, &atom.predicate, arg, table, depth)?;
            if *positive {
                f
            } else {
                Formula::negate(f)
            }
        }
        other => return Err(Error::UnsupportedBuiltin(other.to_string())),
    })
}

fn literal_argument<'a>(atom: &'a Atom, var: &str, node: &'a str) -> Result<&'a str, Error> {
    match atom.args.as_slice() {
        [Term::Var(v)] if v == var => Ok(node),
        [Term::Const(c)] => Ok(c),
        _ => Err(Error::UnsupportedBuiltin(atom.to_string())),
    }
}

fn unfold_predicate(
    kb: &KnowledgeBase,
    predicate: &str,
    node: &str,
    table: &mut AtomTable,
    depth: usize,
) -> Result<Formula, Error> {
    let mut parts = Vec::new();
    if let Some(label) = kb.capability(predicate, node) {
        parts.push(Formula::Atom(table.intern(GroundAtom::unary(predicate, node), *label)));
    }
    for clause in kb.policy(predicate) {
        parts.push(unfold_clause(kb, clause, node, table, depth + 1)?);
    }
    Ok(Formula::or(parts))
}

/// Nodes whose requirement formula for `service` is not constantly false.
pub fn candidate_nodes(kb: &KnowledgeBase, service: &str) -> Result<BTreeSet<String>, Error> {
    let mut out = BTreeSet::new();
    if kb.requirements(service).is_empty() {
        return Ok(out);
    }
    for node in kb.nodes().keys() {
        let mut table = AtomTable::default();
        if !requirement_formula(kb, service, node, &mut table)?.is_false() {
            out.insert(node.clone());
        }
    }
    Ok(out)
}
