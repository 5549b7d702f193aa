//! Propositional AND/OR/NOT formulas over labelled ground atoms.

use std::collections::HashMap;
use std::fmt;

use crate::dsl::Label;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(u32);

impl AtomId {
    pub fn from_index(index: usize) -> Self {
        AtomId(u32::try_from(index).expect("atom table overflow"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A ground atom such as `firewall(cloud1)` or `trusts(appOp,edgeOp)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: impl Into<String>, args: Vec<String>) -> Self {
        Self {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn unary(predicate: &str, arg: &str) -> Self {
        Self::new(predicate, vec![arg.to_string()])
    }

    pub fn binary(predicate: &str, a: &str, b: &str) -> Self {
        Self::new(predicate, vec![a.to_string(), b.to_string()])
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

/// Interns ground atoms so that one atom has one id within a query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AtomTable {
    atoms: Vec<(GroundAtom, Label)>,
    index: HashMap<GroundAtom, AtomId>,
}

impl AtomTable {
    pub fn intern(&mut self, atom: GroundAtom, label: Label) -> AtomId {
        if let Some(&id) = self.index.get(&atom) {
            return id;
        }
        let id = AtomId::from_index(self.atoms.len());
        self.index.insert(atom.clone(), id);
        self.atoms.push((atom, label));
        id
    }

    pub fn lookup(&self, atom: &GroundAtom) -> Option<AtomId> {
        self.index.get(atom).copied()
    }

    pub fn atom(&self, id: AtomId) -> Option<&GroundAtom> {
        self.atoms.get(id.index()).map(|(a, _)| a)
    }

    pub fn label(&self, id: AtomId) -> Option<&Label> {
        self.atoms.get(id.index()).map(|(_, l)| l)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AtomId, &GroundAtom, &Label)> {
        self.atoms
            .iter()
            .enumerate()
            .map(|(i, (a, l))| (AtomId::from_index(i), a, l))
    }

    /// Probability weight of every atom, indexed by atom id. Plain facts
    /// weigh 1.
    pub fn weights(&self) -> Result<Vec<f64>, Error> {
        self.atoms
            .iter()
            .map(|(atom, label)| match *label {
                Label::Certain => Ok(1.0),
                Label::Prob(p) => Ok(p),
                Label::Pair(..) => Err(Error::UnsupportedLabel(atom.to_string())),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(AtomId),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    /// Conjunction with flattening and constant folding.
    pub fn and(children: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for child in children {
            match child {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => {
                    for c in inner {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    /// Disjunction with flattening and constant folding.
    pub fn or(children: impl IntoIterator<Item = Formula>) -> Formula {
        let mut out: Vec<Formula> = Vec::new();
        for child in children {
            match child {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => {
                    for c in inner {
                        if !out.contains(&c) {
                            out.push(c);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn negate(child: Formula) -> Formula {
        match child {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn eval(&self, assignment: &dyn Fn(AtomId) -> bool) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(id) => assignment(*id),
            Formula::Not(c) => !c.eval(assignment),
            Formula::And(cs) => cs.iter().all(|c| c.eval(assignment)),
            Formula::Or(cs) => cs.iter().any(|c| c.eval(assignment)),
        }
    }

    /// Distinct atoms in order of first appearance (pre-order).
    pub fn atoms(&self) -> Vec<AtomId> {
        let mut out = Vec::new();
        let mut seen = std::collections::HashSet::new();
        self.collect_atoms(&mut out, &mut seen);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<AtomId>, seen: &mut std::collections::HashSet<AtomId>) {
        match self {
            Formula::Atom(id) => {
                if seen.insert(*id) {
                    out.push(*id);
                }
            }
            Formula::Not(c) => c.collect_atoms(out, seen),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out, seen)),
            Formula::True | Formula::False => {}
        }
    }

    pub fn has_negation(&self) -> bool {
        match self {
            Formula::Not(_) => true,
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(Formula::has_negation),
            _ => false,
        }
    }

    /// Whether the formula contains a `True`/`False` constant below the root.
    pub fn has_inner_constants(&self) -> bool {
        fn inner(f: &Formula) -> bool {
            match f {
                Formula::True | Formula::False => true,
                Formula::Atom(_) => false,
                Formula::Not(c) => inner(c),
                Formula::And(cs) | Formula::Or(cs) => cs.iter().any(inner),
            }
        }
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => false,
            Formula::Not(c) => inner(c),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().any(inner),
        }
    }
}

/// A formula together with the table labelling its atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundFormula {
    pub root: Formula,
    pub atoms: AtomTable,
}

impl GroundFormula {
    pub fn new(root: Formula, atoms: AtomTable) -> Self {
        Self { root, atoms }
    }

    pub fn constant(value: bool) -> Self {
        Self::new(if value { Formula::True } else { Formula::False }, AtomTable::default())
    }

    /// Renders the formula with atom names, e.g.
    /// `and(or(a(x), b(x)), c(x))`.
    pub fn render(&self) -> String {
        let mut s = String::new();
        self.render_into(&self.root, &mut s);
        s
    }

    fn render_into(&self, f: &Formula, out: &mut String) {
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Atom(id) => match self.atoms.atom(*id) {
                Some(a) => out.push_str(&a.to_string()),
                None => out.push_str(&format!("#{}", id.index())),
            },
            Formula::Not(c) => {
                out.push_str("not(");
                self.render_into(c, out);
                out.push(')');
            }
            Formula::And(cs) | Formula::Or(cs) => {
                out.push_str(if matches!(f, Formula::And(_)) { "and(" } else { "or(" });
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.render_into(c, out);
                }
                out.push(')');
            }
        }
    }
}
