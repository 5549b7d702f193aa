//! Generate & Test over deployments.
//!
//! Each service is placed on a node that can satisfy its requirements and
//! whose operator is trust-reachable from the deploying operator. A
//! deployment's security level is the value of the conjunction, over all
//! services, of the requirement formula and the trust formula, with atoms
//! shared across services. Trust conjuncts are only added when the
//! knowledge base declares a trust network.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::formula::{AtomTable, Formula, GroundFormula};
use crate::grounder::{candidate_nodes, requirement_formula};
use crate::model::KnowledgeBase;
use crate::semiring::{enumerate_proofs, SemiringId, SemiringValue};
use crate::trust::{trust_formula_into, TrustMode, TrustOptions};
use crate::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Assignment {
    pub service: String,
    pub node: String,
    pub operator: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Deployment {
    pub app: String,
    /// The operator deploying the application.
    pub operator: String,
    /// One per service, in declaration order.
    pub assignments: Vec<Assignment>,
}

impl Deployment {
    pub fn nodes(&self) -> Vec<&str> {
        self.assignments.iter().map(|a| a.node.as_str()).collect()
    }
}

/// Services already pinned to nodes; the rest are left to enumeration.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialDeployment {
    pub assignments: BTreeMap<String, String>,
}

impl PartialDeployment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pin(mut self, service: impl Into<String>, node: impl Into<String>) -> Self {
        self.assignments.insert(service.into(), node.into());
        self
    }
}

impl From<&Deployment> for PartialDeployment {
    fn from(d: &Deployment) -> Self {
        PartialDeployment {
            assignments: d
                .assignments
                .iter()
                .map(|a| (a.service.clone(), a.node.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub deployment: Deployment,
    pub level: SemiringValue,
    pub formula: GroundFormula,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankBy {
    /// Trust (or probability) first, then confidence.
    Value,
    /// Confidence first, then trust.
    #[default]
    Confidence,
}

impl std::str::FromStr for RankBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "value" => Ok(RankBy::Value),
            "confidence" => Ok(RankBy::Confidence),
            other => Err(format!("unknown ranking `{other}` (expected value or confidence)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssessOptions {
    pub semiring: SemiringId,
    pub trust_mode: TrustMode,
    pub rank_by: RankBy,
    pub trust: TrustOptions,
}

impl Default for AssessOptions {
    fn default() -> Self {
        Self {
            semiring: SemiringId::Probability,
            trust_mode: TrustMode::Transitive,
            rank_by: RankBy::Confidence,
            trust: TrustOptions::default(),
        }
    }
}

impl AssessOptions {
    pub fn for_kb(kb: &KnowledgeBase) -> Self {
        Self {
            semiring: kb.semiring(),
            ..Self::default()
        }
    }
}

/// An assessment plus its position in enumeration order (1-based), which is
/// the `Δk` identifier shown in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedAssessment {
    pub id: usize,
    pub assessment: Assessment,
}

fn uses_trust(kb: &KnowledgeBase) -> bool {
    !kb.trust().is_empty()
}

/// Eligible deployments of `app` for `operator`, services in app order and
/// nodes in lexicographic order.
pub fn enumerate_deployments(
    kb: &KnowledgeBase,
    app: &str,
    operator: &str,
    partial: Option<&PartialDeployment>,
    opts: &AssessOptions,
) -> Result<Vec<Deployment>, Error> {
    let services = kb.services(app).ok_or_else(|| Error::UnknownApp(app.to_string()))?;
    if let Some(p) = partial {
        for (service, node) in &p.assignments {
            if !services.contains(service) {
                return Err(Error::InconsistentPartial(format!(
                    "service `{service}` is not part of `{app}`"
                )));
            }
            if kb.node_operator(node).is_none() {
                return Err(Error::InconsistentPartial(format!("node `{node}` is not declared")));
            }
        }
    }
    let trust = uses_trust(kb);
    let mut reachable: BTreeMap<String, bool> = BTreeMap::new();
    let mut columns: Vec<Vec<Assignment>> = Vec::with_capacity(services.len());
    for service in services {
        let pinned = partial.and_then(|p| p.assignments.get(service));
        let mut column = Vec::new();
        for node in candidate_nodes(kb, service)? {
            if pinned.is_some_and(|p| *p != node) {
                continue;
            }
            let owner = kb.node_operator(&node).expect("candidate nodes are declared");
            if trust {
                let ok = match reachable.get(owner) {
                    Some(ok) => *ok,
                    None => {
                        let mut scratch = AtomTable::default();
                        let f = trust_formula_into(kb, operator, owner, opts.trust_mode, &mut scratch, opts.trust)?;
                        let ok = !f.is_false();
                        reachable.insert(owner.to_string(), ok);
                        ok
                    }
                };
                if !ok {
                    continue;
                }
            }
            column.push(Assignment {
                service: service.clone(),
                node: node.clone(),
                operator: owner.to_string(),
            });
        }
        columns.push(column);
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(columns.len());
    cartesian(&columns, &mut current, &mut |assignments| {
        out.push(Deployment {
            app: app.to_string(),
            operator: operator.to_string(),
            assignments: assignments.to_vec(),
        })
    });
    Ok(out)
}

fn cartesian(columns: &[Vec<Assignment>], current: &mut Vec<Assignment>, emit: &mut dyn FnMut(&[Assignment])) {
    match columns.split_first() {
        None => emit(current),
        Some((first, rest)) => {
            for a in first {
                current.push(a.clone());
                cartesian(rest, current, emit);
                current.pop();
            }
        }
    }
}

/// Joint formula of a complete deployment: requirements and trust of every
/// service, with shared atoms.
pub fn deployment_formula(kb: &KnowledgeBase, d: &Deployment, opts: &AssessOptions) -> Result<GroundFormula, Error> {
    let services = kb.services(&d.app).ok_or_else(|| Error::UnknownApp(d.app.clone()))?;
    if d.assignments.len() != services.len() || d.assignments.iter().zip(services).any(|(a, s)| a.service != *s) {
        return Err(Error::InconsistentPartial(format!(
            "deployment does not assign every service of `{}` in order",
            d.app
        )));
    }
    let trust = uses_trust(kb);
    let mut table = AtomTable::default();
    let mut parts = Vec::with_capacity(d.assignments.len() * 2);
    for a in &d.assignments {
        match kb.node_operator(&a.node) {
            Some(owner) if owner == a.operator => {}
            _ => {
                return Err(Error::InconsistentPartial(format!(
                    "node `{}` is not managed by `{}`",
                    a.node, a.operator
                )))
            }
        }
        parts.push(requirement_formula(kb, &a.service, &a.node, &mut table)?);
        if trust {
            parts.push(trust_formula_into(
                kb,
                &d.operator,
                &a.operator,
                opts.trust_mode,
                &mut table,
                opts.trust,
            )?);
        }
    }
    Ok(GroundFormula::new(Formula::and(parts), table))
}

/// Security level of one deployment.
pub fn assess(kb: &KnowledgeBase, d: &Deployment, opts: &AssessOptions) -> Result<Assessment, Error> {
    let formula = deployment_formula(kb, d, opts)?;
    let level = evaluate(&formula, opts.semiring)?;
    Ok(Assessment {
        deployment: d.clone(),
        level,
        formula,
    })
}

/// Value of a ground formula in the given semiring.
pub fn evaluate(formula: &GroundFormula, semiring: SemiringId) -> Result<SemiringValue, Error> {
    if semiring.is_probability() {
        Ok(SemiringValue::Probability(crate::wmc::wmc(formula)?))
    } else {
        semiring.evaluate_proofs(&enumerate_proofs(formula)?, &formula.atoms)
    }
}

fn compare(a: &Assessment, b: &Assessment, rank_by: RankBy) -> Ordering {
    let (ta, tb) = (a.level.value(), b.level.value());
    let (ca, cb) = (a.level.confidence().unwrap_or(0.0), b.level.confidence().unwrap_or(0.0));
    let primary = match rank_by {
        RankBy::Confidence => cb.total_cmp(&ca).then(tb.total_cmp(&ta)),
        RankBy::Value => tb.total_cmp(&ta).then(cb.total_cmp(&ca)),
    };
    primary.then_with(|| a.deployment.nodes().cmp(&b.deployment.nodes()))
}

/// Assesses every eligible deployment and orders them best first.
pub fn rank(
    kb: &KnowledgeBase,
    app: &str,
    operator: &str,
    partial: Option<&PartialDeployment>,
    opts: &AssessOptions,
) -> Result<Vec<RankedAssessment>, Error> {
    let deployments = enumerate_deployments(kb, app, operator, partial, opts)?;
    let assessed: Vec<Assessment> = deployments
        .par_iter()
        .map(|d| assess(kb, d, opts))
        .collect::<Result<_, _>>()?;
    let mut ranked: Vec<RankedAssessment> = assessed
        .into_iter()
        .enumerate()
        .map(|(i, assessment)| RankedAssessment { id: i + 1, assessment })
        .collect();
    ranked.sort_by(|a, b| compare(&a.assessment, &b.assessment, opts.rank_by));
    Ok(ranked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_program;
    use crate::model::build_kb;

    fn kb(text: &str) -> KnowledgeBase {
        build_kb(&[parse_program(text).unwrap()], SemiringId::Probability).unwrap()
    }

    #[test]
    fn unknown_app() {
        let k = kb("node(n, o).");
        assert!(matches!(
            enumerate_deployments(&k, "nope", "o", None, &AssessOptions::default()),
            Err(Error::UnknownApp(_))
        ));
    }

    #[test]
    fn inconsistent_partial() {
        let k = kb("node(n, o). 0.5::firewall(n). app(a, [s]). securityRequirements(s, N) :- firewall(N).");
        let opts = AssessOptions::default();
        let p = PartialDeployment::new().pin("t", "n");
        assert!(matches!(
            enumerate_deployments(&k, "a", "o", Some(&p), &opts),
            Err(Error::InconsistentPartial(_))
        ));
        let p = PartialDeployment::new().pin("s", "ghost");
        assert!(matches!(
            enumerate_deployments(&k, "a", "o", Some(&p), &opts),
            Err(Error::InconsistentPartial(_))
        ));
    }

    #[test]
    fn shared_node_counts_atoms_once() {
        let k = kb("
            node(n, o). 0.9::firewall(n). 0.8::backup(n).
            app(a, [s1, s2]).
            securityRequirements(s1, N) :- firewall(N), backup(N).
            securityRequirements(s2, N) :- firewall(N), backup(N).
            app(single, [s1]).
        ");
        let opts = AssessOptions::default();
        let both = rank(&k, "a", "o", None, &opts).unwrap();
        let one = rank(&k, "single", "o", None, &opts).unwrap();
        assert_eq!(both.len(), 1);
        assert_eq!(both[0].assessment.level, one[0].assessment.level);
        assert_eq!(both[0].assessment.formula.root.atoms().len(), 2);
    }

    #[test]
    fn unreachable_operator_filtered() {
        let k = kb("
            node(n1, o1). node(n2, o2). 0.9::firewall(n1). 0.9::firewall(n2).
            app(a, [s]). securityRequirements(s, N) :- firewall(N).
            0.5::trusts(me, o1).
            node(mine, me).
        ");
        let d = enumerate_deployments(&k, "a", "me", None, &AssessOptions::default()).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].assignments[0].node, "n1");
    }

    #[test]
    fn own_node_has_true_trust_conjunct() {
        let k = kb("
            node(mine, me). 0.9::firewall(mine).
            app(a, [s]). securityRequirements(s, N) :- firewall(N).
            0.5::trusts(me, other). node(x, other).
        ");
        let opts = AssessOptions::default();
        let d = enumerate_deployments(&k, "a", "me", None, &opts).unwrap();
        let f = deployment_formula(&k, &d[0], &opts).unwrap();
        assert_eq!(f.render(), "firewall(mine)");
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let k = kb("
            node(b, o). node(a, o). 0.5::firewall(a). 0.5::firewall(b).
            app(x, [s]). securityRequirements(s, N) :- firewall(N).
        ");
        let r = rank(&k, "x", "o", None, &AssessOptions::default()).unwrap();
        assert_eq!(r[0].assessment.deployment.nodes(), vec!["a"]);
        assert_eq!(r[1].assessment.deployment.nodes(), vec!["b"]);
    }
}
