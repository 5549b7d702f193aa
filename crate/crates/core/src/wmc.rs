//! Exact weighted model counting through reduced ordered binary decision
//! diagrams.
//!
//! A formula is compiled bottom-up with the classic `apply` construction
//! over a unique table, so the diagram is canonical for a fixed variable
//! order. The probability of the formula is then one linear pass over the
//! diagram.

use std::collections::HashMap;

use crate::formula::{AtomId, Formula, GroundFormula};
use crate::Error;

/// Default cap on decision nodes per diagram.
pub const DEFAULT_MAX_NODES: usize = 10_000_000;

/// Largest atom count accepted by [`enumerate_probability`].
pub const MAX_ENUMERATION_ATOMS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeRef(u32);

impl NodeRef {
    pub const FALSE: NodeRef = NodeRef(0);
    pub const TRUE: NodeRef = NodeRef(1);

    pub fn is_terminal(self) -> bool {
        self.0 < 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Node {
    level: u32,
    low: NodeRef,
    high: NodeRef,
}

const TERMINAL_LEVEL: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct DecisionDiagram {
    nodes: Vec<Node>,
    root: NodeRef,
    /// Atom tested at each level.
    order: Vec<AtomId>,
}

/// One step of a root-to-true path: the atom tested and the branch taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub atom: AtomId,
    pub positive: bool,
}

impl DecisionDiagram {
    pub fn root(&self) -> NodeRef {
        self.root
    }

    /// Number of decision (non-terminal) nodes reachable from the root.
    pub fn size(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![self.root];
        let mut count = 0;
        while let Some(n) = stack.pop() {
            if n.is_terminal() || seen[n.0 as usize] {
                continue;
            }
            seen[n.0 as usize] = true;
            count += 1;
            let node = self.nodes[n.0 as usize];
            stack.push(node.low);
            stack.push(node.high);
        }
        count
    }

    pub fn order(&self) -> &[AtomId] {
        &self.order
    }

    /// Atom tested at `node`, or `None` for terminals.
    pub fn var(&self, node: NodeRef) -> Option<AtomId> {
        if node.is_terminal() {
            None
        } else {
            Some(self.order[self.nodes[node.0 as usize].level as usize])
        }
    }

    pub fn children(&self, node: NodeRef) -> Option<(NodeRef, NodeRef)> {
        if node.is_terminal() {
            None
        } else {
            let n = self.nodes[node.0 as usize];
            Some((n.low, n.high))
        }
    }

    /// Weighted model count. `weights[id]` is the probability of atom `id`.
    pub fn probability(&self, weights: &[f64]) -> f64 {
        // children are always created before their parents
        let mut value = vec![0.0; self.nodes.len()];
        value[NodeRef::TRUE.0 as usize] = 1.0;
        for (i, node) in self.nodes.iter().enumerate().skip(2) {
            let p = weights[self.order[node.level as usize].index()];
            value[i] = (1.0 - p) * value[node.low.0 as usize] + p * value[node.high.0 as usize];
        }
        value[self.root.0 as usize]
    }

    /// Every root-to-true path, as the literals decided along it.
    pub fn paths(&self) -> Vec<Vec<Literal>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.collect_paths(self.root, &mut stack, &mut out);
        out
    }

    fn collect_paths(&self, node: NodeRef, stack: &mut Vec<Literal>, out: &mut Vec<Vec<Literal>>) {
        if node == NodeRef::TRUE {
            out.push(stack.clone());
            return;
        }
        if node == NodeRef::FALSE {
            return;
        }
        let n = self.nodes[node.0 as usize];
        let atom = self.order[n.level as usize];
        for (child, positive) in [(n.high, true), (n.low, false)] {
            stack.push(Literal { atom, positive });
            self.collect_paths(child, stack, out);
            stack.pop();
        }
    }

    /// Checks ordering and reduction; used by tests.
    pub fn is_reduced_ordered(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        for node in self.nodes.iter().skip(2) {
            if node.low == node.high || !seen.insert(*node) {
                return false;
            }
            for child in [node.low, node.high] {
                let level = self.nodes[child.0 as usize].level;
                if level != TERMINAL_LEVEL && level <= node.level {
                    return false;
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    And,
    Or,
}

struct Builder {
    nodes: Vec<Node>,
    unique: HashMap<Node, NodeRef>,
    apply_cache: HashMap<(Op, NodeRef, NodeRef), NodeRef>,
    not_cache: HashMap<NodeRef, NodeRef>,
    max_nodes: usize,
}

impl Builder {
    fn new(max_nodes: usize) -> Self {
        let terminal = Node {
            level: TERMINAL_LEVEL,
            low: NodeRef::FALSE,
            high: NodeRef::FALSE,
        };
        Self {
            nodes: vec![
                terminal,
                Node {
                    high: NodeRef::TRUE,
                    ..terminal
                },
            ],
            unique: HashMap::new(),
            apply_cache: HashMap::new(),
            not_cache: HashMap::new(),
            max_nodes,
        }
    }

    fn level(&self, n: NodeRef) -> u32 {
        self.nodes[n.0 as usize].level
    }

    fn make(&mut self, level: u32, low: NodeRef, high: NodeRef) -> Result<NodeRef, Error> {
        if low == high {
            return Ok(low);
        }
        let node = Node { level, low, high };
        if let Some(&r) = self.unique.get(&node) {
            return Ok(r);
        }
        if self.nodes.len() - 2 >= self.max_nodes {
            return Err(Error::SizeLimit(self.max_nodes));
        }
        let r = NodeRef(self.nodes.len() as u32);
        self.nodes.push(node);
        self.unique.insert(node, r);
        Ok(r)
    }

    fn apply(&mut self, op: Op, a: NodeRef, b: NodeRef) -> Result<NodeRef, Error> {
        match op {
            Op::And => {
                if a == NodeRef::FALSE || b == NodeRef::FALSE {
                    return Ok(NodeRef::FALSE);
                }
                if a == NodeRef::TRUE {
                    return Ok(b);
                }
                if b == NodeRef::TRUE || a == b {
                    return Ok(a);
                }
            }
            Op::Or => {
                if a == NodeRef::TRUE || b == NodeRef::TRUE {
                    return Ok(NodeRef::TRUE);
                }
                if a == NodeRef::FALSE {
                    return Ok(b);
                }
                if b == NodeRef::FALSE || a == b {
                    return Ok(a);
                }
            }
        }
        let key = if a <= b { (op, a, b) } else { (op, b, a) };
        if let Some(&r) = self.apply_cache.get(&key) {
            return Ok(r);
        }
        let (la, lb) = (self.level(a), self.level(b));
        let level = la.min(lb);
        let na = self.nodes[a.0 as usize];
        let nb = self.nodes[b.0 as usize];
        let (a0, a1) = if la == level { (na.low, na.high) } else { (a, a) };
        let (b0, b1) = if lb == level { (nb.low, nb.high) } else { (b, b) };
        let low = self.apply(op, a0, b0)?;
        let high = self.apply(op, a1, b1)?;
        let r = self.make(level, low, high)?;
        self.apply_cache.insert(key, r);
        Ok(r)
    }

    fn not(&mut self, a: NodeRef) -> Result<NodeRef, Error> {
        if a == NodeRef::TRUE {
            return Ok(NodeRef::FALSE);
        }
        if a == NodeRef::FALSE {
            return Ok(NodeRef::TRUE);
        }
        if let Some(&r) = self.not_cache.get(&a) {
            return Ok(r);
        }
        let n = self.nodes[a.0 as usize];
        let low = self.not(n.low)?;
        let high = self.not(n.high)?;
        let r = self.make(n.level, low, high)?;
        self.not_cache.insert(a, r);
        Ok(r)
    }

    fn build(&mut self, f: &Formula, levels: &HashMap<AtomId, u32>) -> Result<NodeRef, Error> {
        match f {
            Formula::True => Ok(NodeRef::TRUE),
            Formula::False => Ok(NodeRef::FALSE),
            Formula::Atom(id) => self.make(levels[id], NodeRef::FALSE, NodeRef::TRUE),
            Formula::Not(c) => {
                let c = self.build(c, levels)?;
                self.not(c)
            }
            Formula::And(cs) | Formula::Or(cs) => {
                let op = if matches!(f, Formula::And(_)) { Op::And } else { Op::Or };
                let mut acc = if op == Op::And { NodeRef::TRUE } else { NodeRef::FALSE };
                for c in cs {
                    let c = self.build(c, levels)?;
                    acc = self.apply(op, acc, c)?;
                }
                Ok(acc)
            }
        }
    }
}

/// Compiles a formula with the first-appearance variable order.
pub fn compile(f: &GroundFormula) -> Result<DecisionDiagram, Error> {
    compile_with(f, None, DEFAULT_MAX_NODES)
}

/// Compiles a formula with an explicit variable order (which must cover
/// every atom of the formula) and node cap.
pub fn compile_with(f: &GroundFormula, order: Option<&[AtomId]>, max_nodes: usize) -> Result<DecisionDiagram, Error> {
    let atoms = f.root.atoms();
    for id in &atoms {
        match f.atoms.label(*id) {
            Some(crate::dsl::Label::Pair(..)) => {
                return Err(Error::UnsupportedLabel(f.atoms.atom(*id).unwrap().to_string()))
            }
            Some(_) => {}
            None => return Err(Error::UnlabeledAtom(id.index())),
        }
    }
    let order: Vec<AtomId> = match order {
        None => atoms.clone(),
        Some(o) => {
            let mut seen = std::collections::HashSet::new();
            let mut out = Vec::new();
            for id in o {
                if seen.insert(*id) {
                    out.push(*id);
                }
            }
            if let Some(missing) = atoms.iter().find(|a| !seen.contains(a)) {
                return Err(Error::InvalidOrder(missing.index()));
            }
            out
        }
    };
    let levels: HashMap<AtomId, u32> = order.iter().enumerate().map(|(i, id)| (*id, i as u32)).collect();
    let mut builder = Builder::new(max_nodes);
    let root = builder.build(&f.root, &levels)?;
    Ok(DecisionDiagram {
        nodes: builder.nodes,
        root,
        order,
    })
}

/// Probability of a formula whose atoms carry probability labels.
pub fn wmc(f: &GroundFormula) -> Result<f64, Error> {
    let weights = f.atoms.weights()?;
    Ok(compile(f)?.probability(&weights))
}

/// Brute-force weighted model count over every assignment of the
/// formula's atoms.
pub fn enumerate_probability(f: &Formula, weights: &[f64]) -> Result<f64, Error> {
    let atoms = f.atoms();
    if atoms.len() > MAX_ENUMERATION_ATOMS {
        return Err(Error::TooManyAtoms(atoms.len()));
    }
    let position: HashMap<AtomId, usize> = atoms.iter().enumerate().map(|(i, a)| (*a, i)).collect();
    let mut total = 0.0;
    for mask in 0u64..(1u64 << atoms.len()) {
        let truth = |id: AtomId| mask >> position[&id] & 1 == 1;
        if f.eval(&truth) {
            let mut w = 1.0;
            for (i, a) in atoms.iter().enumerate() {
                let p = weights[a.index()];
                w *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
            }
            total += w;
        }
    }
    Ok(total)
}
