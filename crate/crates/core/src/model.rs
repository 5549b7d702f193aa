//! Knowledge base construction and validation.
//!
//! Statements are classified by predicate:
//!
//! | statement                          | meaning                                  |
//! |------------------------------------|------------------------------------------|
//! | `node(N, Op).`                     | node `N` is managed by operator `Op`     |
//! | `app(A, [S1, ...]).`               | application `A` and its ordered services |
//! | `p::trusts(A, B).`                 | trust edge (also `directly_trusts/2`)    |
//! | `dir(A, B).`                       | prefer direct trust for the pair         |
//! | `p::cap(N).`                       | capability `cap` offered by node `N`     |
//! | `securityRequirements(s, N) :- B.` | requirement of service `s`               |
//! | `policy(N) :- B.`                  | custom policy                            |
//!
//! Rules defining the built-in predicates (`secFog/3`, `deployment/3`,
//! `trusts2`, the `trusts(X,X).` self-trust clause and friends) are
//! accepted so that complete listings load, but their meaning is fixed by
//! the engine. Queries are kept for reference only.
//!
//! Anything not declared is false: a node lacks every capability it does
//! not list, and two operators share no trust edge unless one is declared.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::dsl::{Atom, BodyExpr, Label, Program, Span, Statement, Term};
use crate::semiring::SemiringId;

/// The capability vocabulary used by the lint.
pub const CAPABILITY_TAXONOMY: [&str; 21] = [
    "access_logs",
    "authentication",
    "host_ids",
    "process_isolation",
    "permission_model",
    "resource_monitoring",
    "restore_points",
    "user_data_isolation",
    "certificates",
    "iot_data_encryption",
    "firewall",
    "node_isolation_mechanism",
    "network_ids",
    "public_key_cryptography",
    "wireless_security",
    "backup",
    "encrypted_storage",
    "obfuscated_storage",
    "access_control",
    "anti_tampering",
    "audit",
];

const BUILTIN_RULES: [(&str, usize); 7] = [
    ("secFog", 3),
    ("deployment", 3),
    ("trusts", 2),
    ("trusts2", 2),
    ("trusts2", 3),
    ("indirectly_trusts", 2),
    ("directly_trusts", 2),
];

pub const REQUIREMENT_PREDICATE: &str = "securityRequirements";

#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub source: Option<String>,
    pub line: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            Some(s) => write!(f, "{s}:{}", self.line),
            None => write!(f, "line {}", self.line),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidationErrorKind {
    #[error("`{0}` is declared with more than one label")]
    DuplicateLabel(String),
    #[error("capability `{capability}` declared for undeclared node `{node}`")]
    UnknownNode { capability: String, node: String },
    #[error("node `{node}` is declared by both `{first}` and `{second}`")]
    ConflictingNodeOwner {
        node: String,
        first: String,
        second: String,
    },
    #[error("policy `{0}` is recursive")]
    RecursivePolicy(String),
    #[error("label of `{atom}` is outside the {semiring} carrier")]
    RangeError { atom: String, semiring: &'static str },
    #[error("rule for `{head}` is not range-restricted: variable `{var}` does not occur in a positive body literal")]
    UnsafeRule { head: String, var: String },
    #[error("negation over `{0}`, which is not a plain (certain) capability fact")]
    ProbabilisticNegation(String),
    #[error("structural fact `{0}` cannot carry a probability label")]
    LabeledStructuralFact(String),
    #[error("invalid application declaration `{0}`: the service list must be a non-empty list of distinct constants")]
    InvalidApp(String),
    #[error("application `{0}` is declared twice")]
    DuplicateApp(String),
    #[error("unsupported statement `{0}`")]
    Unsupported(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{kind}", location.as_ref().map(|l| format!("{l}: ")).unwrap_or_default())]
pub struct ValidationError {
    pub kind: ValidationErrorKind,
    pub location: Option<Location>,
}

impl ValidationError {
    fn new(kind: ValidationErrorKind, location: Option<Location>) -> Self {
        Self { kind, location }
    }
}

/// A policy or requirement clause: `head(.., N) :- body`, with `N` the node
/// variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PolicyRule {
    pub head: Atom,
    pub node_var: String,
    pub body: BodyExpr,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrustNetwork {
    edges: BTreeMap<(String, String), Label>,
    operators: BTreeSet<String>,
}

impl TrustNetwork {
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, &Label)> {
        self.edges.iter().map(|((a, b), l)| (a.as_str(), b.as_str(), l))
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&Label> {
        self.edges.get(&(from.to_string(), to.to_string()))
    }

    /// Outgoing edges of `from`, ordered by target.
    pub fn successors<'a>(&'a self, from: &'a str) -> impl Iterator<Item = (&'a str, &'a Label)> + 'a {
        self.edges
            .range((from.to_string(), String::new())..)
            .take_while(move |((a, _), _)| a == from)
            .map(|((_, b), l)| (b.as_str(), l))
    }

    pub fn operators(&self) -> &BTreeSet<String> {
        &self.operators
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Validated, immutable description of infrastructure, applications and
/// trust.
#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeBase {
    semiring: SemiringId,
    nodes: BTreeMap<String, String>,
    capabilities: BTreeMap<(String, String), Label>,
    apps: BTreeMap<String, Vec<String>>,
    policies: BTreeMap<String, Vec<PolicyRule>>,
    requirements: BTreeMap<String, Vec<PolicyRule>>,
    trust: TrustNetwork,
    direct_flags: BTreeSet<(String, String)>,
    queries: BTreeSet<Atom>,
}

impl KnowledgeBase {
    pub fn semiring(&self) -> SemiringId {
        self.semiring
    }

    pub fn nodes(&self) -> &BTreeMap<String, String> {
        &self.nodes
    }

    pub fn node_operator(&self, node: &str) -> Option<&str> {
        self.nodes.get(node).map(String::as_str)
    }

    pub fn capabilities(&self) -> &BTreeMap<(String, String), Label> {
        &self.capabilities
    }

    pub fn capability(&self, name: &str, node: &str) -> Option<&Label> {
        self.capabilities.get(&(name.to_string(), node.to_string()))
    }

    pub fn apps(&self) -> &BTreeMap<String, Vec<String>> {
        &self.apps
    }

    pub fn services(&self, app: &str) -> Option<&[String]> {
        self.apps.get(app).map(Vec::as_slice)
    }

    pub fn has_service(&self, service: &str) -> bool {
        self.apps.values().any(|s| s.iter().any(|x| x == service))
    }

    pub fn policies(&self) -> &BTreeMap<String, Vec<PolicyRule>> {
        &self.policies
    }

    pub fn policy(&self, name: &str) -> &[PolicyRule] {
        self.policies.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn requirements(&self, service: &str) -> &[PolicyRule] {
        self.requirements.get(service).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn trust(&self) -> &TrustNetwork {
        &self.trust
    }

    pub fn direct_flags(&self) -> &BTreeSet<(String, String)> {
        &self.direct_flags
    }

    pub fn is_direct(&self, from: &str, to: &str) -> bool {
        self.direct_flags.contains(&(from.to_string(), to.to_string()))
    }

    pub fn queries(&self) -> &BTreeSet<Atom> {
        &self.queries
    }

    /// Predicate names of all declared capability facts.
    pub fn capability_names(&self) -> BTreeSet<&str> {
        self.capabilities.keys().map(|(c, _)| c.as_str()).collect()
    }
}

/// A lint finding; never fatal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub atom: String,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "warning: {}", self.message)
    }
}

/// Reports capability facts whose name is outside [`CAPABILITY_TAXONOMY`].
pub fn lint_vocabulary(kb: &KnowledgeBase) -> Vec<Warning> {
    kb.capabilities
        .keys()
        .filter(|(cap, _)| !CAPABILITY_TAXONOMY.contains(&cap.as_str()))
        .map(|(cap, node)| Warning {
            atom: format!("{cap}({node})"),
            message: format!("capability `{cap}({node})` is not part of the standard taxonomy"),
        })
        .collect()
}

struct Builder {
    semiring: SemiringId,
    kb: KnowledgeBase,
    capability_sites: BTreeMap<(String, String), Option<Location>>,
    negated: Vec<(String, Option<Location>)>,
}

/// Builds a knowledge base from programs merged in order.
pub fn build_kb(programs: &[Program], semiring: SemiringId) -> Result<KnowledgeBase, ValidationError> {
    let mut b = Builder {
        semiring,
        kb: KnowledgeBase {
            semiring,
            nodes: BTreeMap::new(),
            capabilities: BTreeMap::new(),
            apps: BTreeMap::new(),
            policies: BTreeMap::new(),
            requirements: BTreeMap::new(),
            trust: TrustNetwork::default(),
            direct_flags: BTreeSet::new(),
            queries: BTreeSet::new(),
        },
        capability_sites: BTreeMap::new(),
        negated: Vec::new(),
    };
    for program in programs {
        for (i, stmt) in program.statements.iter().enumerate() {
            let loc = program.span(i).map(|s: Span| Location {
                source: program.source_name.clone(),
                line: s.line,
            });
            b.statement(stmt, loc)?;
        }
    }
    b.finish()
}

impl Builder {
    fn statement(&mut self, stmt: &Statement, loc: Option<Location>) -> Result<(), ValidationError> {
        match stmt {
            Statement::Fact { label, atom } => self.fact(*label, atom, loc),
            Statement::Rule { head, body } => self.rule(head, body.as_ref(), loc),
            Statement::Query(atom) => {
                self.kb.queries.insert(atom.clone());
                Ok(())
            }
        }
    }

    fn fact(&mut self, label: Label, atom: &Atom, loc: Option<Location>) -> Result<(), ValidationError> {
        let err = |kind| Err(ValidationError::new(kind, loc.clone()));
        let consts: Option<Vec<&str>> = atom.args.iter().map(Term::as_const).collect();
        match (atom.predicate.as_str(), atom.arity()) {
            ("node", 2) | ("dir", 2) | ("app", 2) if !label.is_certain() => {
                err(ValidationErrorKind::LabeledStructuralFact(atom.to_string()))
            }
            ("node", 2) => {
                let Some(args) = consts else {
                    return err(ValidationErrorKind::Unsupported(atom.to_string()));
                };
                let (node, op) = (args[0].to_string(), args[1].to_string());
                if let Some(prev) = self.kb.nodes.get(&node) {
                    if *prev != op {
                        return err(ValidationErrorKind::ConflictingNodeOwner {
                            node,
                            first: prev.clone(),
                            second: op,
                        });
                    }
                }
                self.kb.trust.operators.insert(op.clone());
                self.kb.nodes.insert(node, op);
                Ok(())
            }
            ("app", 2) => {
                let (Some(name), Term::List(items, None)) = (atom.args[0].as_const(), &atom.args[1]) else {
                    return err(ValidationErrorKind::InvalidApp(atom.to_string()));
                };
                let services: Option<Vec<String>> = items.iter().map(|t| t.as_const().map(str::to_string)).collect();
                let Some(services) = services else {
                    return err(ValidationErrorKind::InvalidApp(atom.to_string()));
                };
                let distinct: BTreeSet<_> = services.iter().collect();
                if services.is_empty() || distinct.len() != services.len() {
                    return err(ValidationErrorKind::InvalidApp(atom.to_string()));
                }
                match self.kb.apps.get(name) {
                    Some(prev) if *prev == services => Ok(()),
                    Some(_) => err(ValidationErrorKind::DuplicateApp(name.to_string())),
                    None => {
                        self.kb.apps.insert(name.to_string(), services);
                        Ok(())
                    }
                }
            }
            ("dir", 2) => {
                let Some(args) = consts else {
                    return err(ValidationErrorKind::Unsupported(atom.to_string()));
                };
                self.kb.trust.operators.insert(args[0].to_string());
                self.kb.trust.operators.insert(args[1].to_string());
                self.kb.direct_flags.insert((args[0].to_string(), args[1].to_string()));
                Ok(())
            }
            ("trusts", 2) | ("directly_trusts", 2) => {
                let Some(args) = consts else {
                    return err(ValidationErrorKind::Unsupported(atom.to_string()));
                };
                self.check_carrier(&label, atom, &loc)?;
                let key = (args[0].to_string(), args[1].to_string());
                let shown = format!("trusts({},{})", key.0, key.1);
                insert_label(&mut self.kb.trust.edges, key.clone(), label)
                    .map_err(|_| ValidationError::new(ValidationErrorKind::DuplicateLabel(shown), loc.clone()))?;
                self.kb.trust.operators.insert(key.0);
                self.kb.trust.operators.insert(key.1);
                Ok(())
            }
            (cap, 1) => {
                let Some(args) = consts else {
                    return err(ValidationErrorKind::Unsupported(atom.to_string()));
                };
                self.check_carrier(&label, atom, &loc)?;
                let key = (cap.to_string(), args[0].to_string());
                insert_label(&mut self.kb.capabilities, key.clone(), label).map_err(|_| {
                    ValidationError::new(ValidationErrorKind::DuplicateLabel(atom.to_string()), loc.clone())
                })?;
                self.capability_sites.entry(key).or_insert(loc);
                Ok(())
            }
            _ => err(ValidationErrorKind::Unsupported(atom.to_string())),
        }
    }

    fn check_carrier(&self, label: &Label, atom: &Atom, loc: &Option<Location>) -> Result<(), ValidationError> {
        self.semiring.value_of(label).map(|_| ()).map_err(|_| {
            ValidationError::new(
                ValidationErrorKind::RangeError {
                    atom: atom.to_string(),
                    semiring: self.semiring.name(),
                },
                loc.clone(),
            )
        })
    }

    fn rule(&mut self, head: &Atom, body: Option<&BodyExpr>, loc: Option<Location>) -> Result<(), ValidationError> {
        let err = |kind| Err(ValidationError::new(kind, loc.clone()));
        if BUILTIN_RULES.contains(&(head.predicate.as_str(), head.arity())) {
            return Ok(());
        }
        let Some(body) = body else {
            return err(ValidationErrorKind::Unsupported(head.to_string()));
        };
        let node_var = match (head.predicate.as_str(), head.args.as_slice()) {
            (REQUIREMENT_PREDICATE, [Term::Const(_), Term::Var(n)]) => n.clone(),
            (REQUIREMENT_PREDICATE, _) => return err(ValidationErrorKind::Unsupported(head.to_string())),
            (_, [Term::Var(n)]) => n.clone(),
            _ => return err(ValidationErrorKind::Unsupported(head.to_string())),
        };
        let bound = body.positive_variables();
        for var in head.variables() {
            if !bound.contains(&var) {
                return err(ValidationErrorKind::UnsafeRule {
                    head: head.to_string(),
                    var: var.to_string(),
                });
            }
        }
        check_policy_body(body, &node_var).map_err(|kind| ValidationError::new(kind, loc.clone()))?;
        for (atom, positive) in body.literals() {
            if !positive {
                self.negated.push((atom.predicate.clone(), loc.clone()));
            }
        }
        let rule = PolicyRule {
            head: head.clone(),
            node_var,
            body: body.clone(),
        };
        let clauses = if head.predicate == REQUIREMENT_PREDICATE {
            let service = head.args[0].as_const().unwrap().to_string();
            self.kb.requirements.entry(service).or_default()
        } else {
            self.kb.policies.entry(head.predicate.clone()).or_default()
        };
        if !clauses.contains(&rule) {
            clauses.push(rule);
            clauses.sort();
        }
        Ok(())
    }

    fn finish(mut self) -> Result<KnowledgeBase, ValidationError> {
        for ((cap, node), loc) in &self.capability_sites {
            if !self.kb.nodes.contains_key(node) {
                return Err(ValidationError::new(
                    ValidationErrorKind::UnknownNode {
                        capability: cap.clone(),
                        node: node.clone(),
                    },
                    loc.clone(),
                ));
            }
        }
        for (pred, loc) in &self.negated {
            let probabilistic = self
                .kb
                .capabilities
                .iter()
                .any(|((c, _), l)| c == pred && !l.is_certain());
            if probabilistic || self.kb.policies.contains_key(pred) {
                return Err(ValidationError::new(
                    ValidationErrorKind::ProbabilisticNegation(pred.clone()),
                    loc.clone(),
                ));
            }
        }
        if let Some(name) = find_policy_cycle(&self.kb.policies) {
            return Err(ValidationError::new(ValidationErrorKind::RecursivePolicy(name), None));
        }
        // every node owner is a known operator
        let owners: Vec<String> = self.kb.nodes.values().cloned().collect();
        self.kb.trust.operators.extend(owners);
        Ok(self.kb)
    }
}

fn insert_label<K: Ord>(map: &mut BTreeMap<K, Label>, key: K, label: Label) -> Result<(), ()> {
    match map.get(&key) {
        Some(prev) if prev.is_certain() && label.is_certain() => Ok(()),
        Some(_) => Err(()),
        None => {
            map.insert(key, label);
            Ok(())
        }
    }
}

fn check_policy_body(body: &BodyExpr, node_var: &str) -> Result<(), ValidationErrorKind> {
    match body {
        BodyExpr::Conj(xs) | BodyExpr::Disj(xs) => xs.iter().try_for_each(|x| check_policy_body(x, node_var)),
        BodyExpr::Lit { atom, .. } => match atom.args.as_slice() {
            [Term::Var(v)] if v == node_var => Ok(()),
            [Term::Const(_)] => Ok(()),
            _ => Err(ValidationErrorKind::Unsupported(format!(
                "policy literal `{atom}` (policy bodies use unary atoms over the node variable)"
            ))),
        },
        other => Err(ValidationErrorKind::Unsupported(format!(
            "built-in `{other}` in a policy body"
        ))),
    }
}

fn find_policy_cycle(policies: &BTreeMap<String, Vec<PolicyRule>>) -> Option<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        name: &'a str,
        policies: &'a BTreeMap<String, Vec<PolicyRule>>,
        marks: &mut BTreeMap<&'a str, Mark>,
    ) -> Option<String> {
        match marks.get(name) {
            Some(Mark::Active) => return Some(name.to_string()),
            Some(Mark::Done) => return None,
            None => {}
        }
        marks.insert(name, Mark::Active);
        for rule in policies.get(name).into_iter().flatten() {
            for (atom, _) in rule.body.literals() {
                if policies.contains_key(&atom.predicate) {
                    if let Some(found) = visit(&atom.predicate, policies, marks) {
                        return Some(found);
                    }
                }
            }
        }
        marks.insert(name, Mark::Done);
        None
    }
    let mut marks = BTreeMap::new();
    policies.keys().find_map(|name| visit(name, policies, &mut marks))
}
