//! Explanations: the AND-OR ground program as a Graphviz graph, and the
//! mutually exclusive proofs behind a probability.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::dsl::Label;
use crate::formula::{AtomId, Formula, GroundFormula};
use crate::semiring::{enumerate_proofs, ProofSet, SemiringId, SemiringValue};
use crate::wmc::{compile, Literal};
use crate::Error;

/// A signed partial assignment read off one root-to-true path of the
/// decision diagram. Distinct proofs of a formula never overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjointProof {
    pub literals: Vec<Literal>,
    pub contribution: f64,
}

/// Disjoint proofs of `f`, whose contributions sum to its probability.
pub fn disjoint_proofs(f: &GroundFormula) -> Result<Vec<DisjointProof>, Error> {
    let weights = f.atoms.weights()?;
    let dd = compile(f)?;
    Ok(dd
        .paths()
        .into_iter()
        .map(|literals| {
            let contribution = literals
                .iter()
                .map(|l| {
                    let p = weights[l.atom.index()];
                    if l.positive {
                        p
                    } else {
                        1.0 - p
                    }
                })
                .product();
            DisjointProof { literals, contribution }
        })
        .collect())
}

fn atom_name(f: &GroundFormula, id: AtomId) -> String {
    f.atoms
        .atom(id)
        .map(|a| a.to_string())
        .unwrap_or_else(|| format!("#{}", id.index()))
}

fn literal_name(f: &GroundFormula, l: &Literal) -> String {
    if l.positive {
        atom_name(f, l.atom)
    } else {
        format!("¬{}", atom_name(f, l.atom))
    }
}

fn short(x: f64) -> String {
    let mut s = format!("{x:.6}");
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    s
}

fn label_text(label: Option<&Label>) -> String {
    match label {
        None | Some(Label::Certain) => "1.0".into(),
        Some(Label::Prob(p)) => short(*p),
        Some(Label::Pair(t, c)) => format!("({}, {})", short(*t), short(*c)),
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the formula as a DOT digraph. Inner nodes are numbered in
/// pre-order; each atom gets a single leaf shared by all its occurrences.
pub fn export_dot(f: &GroundFormula, title: Option<&str>) -> String {
    struct Writer<'a> {
        f: &'a GroundFormula,
        next: usize,
        leaves: HashMap<AtomId, usize>,
        nodes: String,
        edges: String,
    }
    impl Writer<'_> {
        fn fresh(&mut self) -> usize {
            self.next += 1;
            self.next - 1
        }

        fn inner(&mut self, label: &str, shape: &str) -> usize {
            let id = self.fresh();
            let _ = writeln!(self.nodes, "  n{id} [label=\"{label}\", shape={shape}];");
            id
        }

        fn visit(&mut self, node: &Formula) -> usize {
            match node {
                Formula::True => self.inner("TRUE", "plaintext"),
                Formula::False => self.inner("FALSE", "plaintext"),
                Formula::Atom(a) => {
                    if let Some(id) = self.leaves.get(a) {
                        return *id;
                    }
                    let id = self.fresh();
                    self.leaves.insert(*a, id);
                    let text = format!("{}: {}", atom_name(self.f, *a), label_text(self.f.atoms.label(*a)));
                    let _ = writeln!(self.nodes, "  n{id} [label=\"{}\", shape=ellipse];", escape(&text));
                    id
                }
                Formula::Not(child) => {
                    let id = self.inner("NOT", "invtriangle");
                    let c = self.visit(child);
                    let _ = writeln!(self.edges, "  n{id} -> n{c};");
                    id
                }
                Formula::And(children) | Formula::Or(children) => {
                    let (label, shape) = match node {
                        Formula::And(_) => ("AND", "box"),
                        _ => ("OR", "diamond"),
                    };
                    let id = self.inner(label, shape);
                    for child in children {
                        let c = self.visit(child);
                        let _ = writeln!(self.edges, "  n{id} -> n{c};");
                    }
                    id
                }
            }
        }
    }
    let mut w = Writer {
        f,
        next: 0,
        leaves: HashMap::new(),
        nodes: String::new(),
        edges: String::new(),
    };
    w.visit(&f.root);
    let mut out = String::from("digraph ground {\n");
    if let Some(t) = title {
        let _ = writeln!(out, "  label=\"{}\";\n  labelloc=t;", escape(t));
    }
    out.push_str("  node [fontname=\"Helvetica\"];\n");
    out.push_str(&w.nodes);
    out.push_str(&w.edges);
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, Serialize)]
struct ProofEntry {
    literals: Vec<String>,
    contribution: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ProbabilityReport<'a> {
    query: &'a str,
    semiring: &'static str,
    probability: f64,
    proofs: Vec<ProofEntry>,
}

#[derive(Debug, Clone, Serialize)]
struct AlgebraicEntry {
    atoms: Vec<String>,
    value: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
struct AlgebraicReport<'a> {
    query: &'a str,
    semiring: &'static str,
    value: [f64; 2],
    proofs: Vec<AlgebraicEntry>,
}

fn pair(v: SemiringValue) -> [f64; 2] {
    [v.value(), v.confidence().unwrap_or(1.0)]
}

/// JSON proof listing. The probability semiring lists disjoint proofs and
/// their contributions; pair semirings list minimal proofs and their
/// ⊗-values.
pub fn proofs_json(f: &GroundFormula, query: &str, semiring: SemiringId) -> Result<String, Error> {
    let json = if semiring.is_probability() {
        let proofs = disjoint_proofs(f)?;
        let probability = crate::wmc::wmc(f)?;
        serde_json::to_string_pretty(&ProbabilityReport {
            query,
            semiring: semiring.name(),
            probability,
            proofs: proofs
                .iter()
                .map(|p| ProofEntry {
                    literals: p.literals.iter().map(|l| literal_name(f, l)).collect(),
                    contribution: p.contribution,
                })
                .collect(),
        })
    } else {
        let proofs = enumerate_proofs(f)?;
        let value = semiring.evaluate_proofs(&proofs, &f.atoms)?;
        let mut entries = Vec::with_capacity(proofs.len());
        for proof in proofs.iter() {
            let single = ProofSet::new(vec![proof.clone()]);
            entries.push(AlgebraicEntry {
                atoms: proof.iter().map(|a| atom_name(f, *a)).collect(),
                value: pair(semiring.evaluate_proofs(&single, &f.atoms)?),
            });
        }
        serde_json::to_string_pretty(&AlgebraicReport {
            query,
            semiring: semiring.name(),
            value: pair(value),
            proofs: entries,
        })
    };
    Ok(json.expect("report serializes") + "\n")
}
