#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;

use rand::Rng;
use secassess::{build_kb, parse_program, AtomId, Formula, KnowledgeBase, Program, SemiringId};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn load(names: &[&str], semiring: SemiringId) -> KnowledgeBase {
    let programs: Vec<Program> = names
        .iter()
        .map(|n| parse_program(&read_fixture(n)).unwrap_or_else(|e| panic!("{n}: {e}")))
        .collect();
    build_kb(&programs, semiring).unwrap_or_else(|e| panic!("{names:?}: {e}"))
}

pub type Edge = (&'static str, &'static str, f64);

pub const TRUST_EXAMPLE: [Edge; 4] = [
    ("srcOp", "aOp", 0.9),
    ("srcOp", "bOp", 0.2),
    ("aOp", "dstOp", 0.1),
    ("bOp", "dstOp", 0.8),
];

pub const WEATHER_TRUST: [Edge; 8] = [
    ("appOp", "edgeOp", 0.9),
    ("appOp", "ispOp", 0.9),
    ("edgeOp", "cloudOp1", 0.7),
    ("edgeOp", "cloudOp2", 0.8),
    ("cloudOp1", "cloudOp2", 0.8),
    ("cloudOp2", "cloudOp", 0.2),
    ("ispOp", "cloudOp", 0.8),
    ("ispOp", "edgeOp", 0.6),
];

pub const SMARTBUILDING_TRUST: [Edge; 7] = [
    ("appOp", "edgeOp", 0.9),
    ("appOp", "cloudOp2", 0.8),
    ("edgeOp", "cloudOp2", 0.9),
    ("edgeOp", "cloudOp1", 0.7),
    ("cloudOp1", "cloudOp2", 0.1),
    ("cloudOp2", "edgeOp", 0.8),
    ("cloudOp2", "cloudOp1", 0.5),
];

/// Two-terminal reliability by summing over every subset of present edges.
pub fn reachability_oracle(edges: &[Edge], from: &str, to: &str) -> f64 {
    assert!(edges.len() <= 20);
    let mut total = 0.0;
    for mask in 0u32..(1 << edges.len()) {
        let mut weight = 1.0;
        for (i, (_, _, p)) in edges.iter().enumerate() {
            weight *= if mask & (1 << i) != 0 { *p } else { 1.0 - *p };
        }
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(at) = queue.pop_front() {
            for (i, (a, b, _)) in edges.iter().enumerate() {
                if mask & (1 << i) != 0 && *a == at && seen.insert(b) {
                    queue.push_back(b);
                }
            }
        }
        if seen.contains(to) {
            total += weight;
        }
    }
    total
}

/// Probability of `f` by summing the weight of every satisfying world.
pub fn brute_force(f: &Formula, weights: &[f64]) -> f64 {
    let n = weights.len();
    assert!(n <= 20);
    let mut total = 0.0;
    for world in 0u32..(1 << n) {
        if f.eval(&|a: AtomId| world & (1 << a.index()) != 0) {
            let mut w = 1.0;
            for (i, p) in weights.iter().enumerate() {
                w *= if world & (1 << i) != 0 { *p } else { 1.0 - *p };
            }
            total += w;
        }
    }
    total
}

/// Random formula over atoms `0..atoms` with nesting at most `depth`.
/// Built from raw variants, so constants and singleton connectives survive.
pub fn random_formula<R: Rng>(rng: &mut R, atoms: usize, depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..20) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::Atom(AtomId::from_index(rng.gen_range(0..atoms))),
        };
    }
    match rng.gen_range(0..5) {
        0 => Formula::Not(Box::new(random_formula(rng, atoms, depth - 1))),
        1 | 2 => {
            let k = rng.gen_range(1..=4);
            Formula::And((0..k).map(|_| random_formula(rng, atoms, depth - 1)).collect())
        }
        _ => {
            let k = rng.gen_range(1..=4);
            Formula::Or((0..k).map(|_| random_formula(rng, atoms, depth - 1)).collect())
        }
    }
}

pub fn formula_depth(f: &Formula) -> usize {
    match f {
        Formula::Not(c) => 1 + formula_depth(c),
        Formula::And(cs) | Formula::Or(cs) => 1 + cs.iter().map(formula_depth).max().unwrap_or(0),
        _ => 0,
    }
}
