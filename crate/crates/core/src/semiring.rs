//! Semirings for algebraic evaluation of queries.
//!
//! Three carriers are supported: plain probabilities, trust/confidence
//! pairs with `t, c` in `[0,1]`, and the signed "star" pairs with
//! `t` in `[-1,1]` that can express distrust. Probability answers for whole
//! queries come from weighted model counting (see [`crate::wmc`]); the
//! pairwise operations here serve the pair semirings and explanation
//! listings.

use std::collections::BTreeSet;
use std::fmt;

use crate::dsl::Label;
use crate::formula::{AtomId, AtomTable, Formula, GroundFormula};
use crate::Error;

/// How the trust/confidence semiring breaks confidence ties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieBreak {
    MaxT,
    MinT,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SemiringId {
    Probability,
    TrustConfidence(TieBreak),
    Star,
}

impl SemiringId {
    pub const ALL: [SemiringId; 4] = [
        SemiringId::Probability,
        SemiringId::TrustConfidence(TieBreak::MaxT),
        SemiringId::TrustConfidence(TieBreak::MinT),
        SemiringId::Star,
    ];

    /// Command-line name: `prob`, `tc-max`, `tc-min` or `star`.
    pub fn name(self) -> &'static str {
        match self {
            SemiringId::Probability => "prob",
            SemiringId::TrustConfidence(TieBreak::MaxT) => "tc-max",
            SemiringId::TrustConfidence(TieBreak::MinT) => "tc-min",
            SemiringId::Star => "star",
        }
    }

    pub fn is_probability(self) -> bool {
        self == SemiringId::Probability
    }

    pub fn zero(self) -> SemiringValue {
        match self {
            SemiringId::Probability => SemiringValue::Probability(0.0),
            SemiringId::TrustConfidence(_) => SemiringValue::Tc { t: 0.0, c: 0.0 },
            SemiringId::Star => SemiringValue::Star { t: 0.0, c: 0.0 },
        }
    }

    pub fn one(self) -> SemiringValue {
        match self {
            SemiringId::Probability => SemiringValue::Probability(1.0),
            SemiringId::TrustConfidence(_) => SemiringValue::Tc { t: 1.0, c: 1.0 },
            SemiringId::Star => SemiringValue::Star { t: 1.0, c: 1.0 },
        }
    }

    /// Maps a declared label into this semiring's carrier. Plain facts map
    /// to `one()`.
    pub fn value_of(self, label: &Label) -> Result<SemiringValue, Error> {
        let mismatch = || Error::CarrierMismatch {
            semiring: self.name(),
            detail: format!("label `{}` is not in the carrier", label_text(label)),
        };
        match (self, *label) {
            (_, Label::Certain) => Ok(self.one()),
            (SemiringId::Probability, Label::Prob(p)) if (0.0..=1.0).contains(&p) => Ok(SemiringValue::Probability(p)),
            (SemiringId::TrustConfidence(_), Label::Pair(t, c))
                if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&c) =>
            {
                Ok(SemiringValue::tc(t, c))
            }
            (SemiringId::Star, Label::Pair(t, c)) if (-1.0..=1.0).contains(&t) && (0.0..=1.0).contains(&c) => {
                Ok(SemiringValue::star(t, c))
            }
            _ => Err(mismatch()),
        }
    }

    pub fn contains(self, v: &SemiringValue) -> bool {
        match (self, *v) {
            (SemiringId::Probability, SemiringValue::Probability(p)) => (0.0..=1.0).contains(&p),
            (SemiringId::TrustConfidence(_), SemiringValue::Tc { t, c }) => {
                (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&c)
            }
            (SemiringId::Star, SemiringValue::Star { t, c }) => (-1.0..=1.0).contains(&t) && (0.0..=1.0).contains(&c),
            _ => false,
        }
    }

    fn check(self, a: &SemiringValue, b: &SemiringValue) -> Result<(), Error> {
        for v in [a, b] {
            if !self.contains(v) {
                return Err(Error::CarrierMismatch {
                    semiring: self.name(),
                    detail: format!("value {v} is not in the carrier"),
                });
            }
        }
        Ok(())
    }

    pub fn otimes(self, a: SemiringValue, b: SemiringValue) -> Result<SemiringValue, Error> {
        self.check(&a, &b)?;
        Ok(match (a, b) {
            (SemiringValue::Probability(x), SemiringValue::Probability(y)) => SemiringValue::Probability(x * y),
            (SemiringValue::Tc { t, c }, SemiringValue::Tc { t: t2, c: c2 }) => SemiringValue::tc(t * t2, c * c2),
            (SemiringValue::Star { t, c }, SemiringValue::Star { t: t2, c: c2 }) => {
                // two distrust opinions in a row yield indifference
                if t < 0.0 && t2 < 0.0 {
                    SemiringValue::star(0.0, c * c2)
                } else {
                    SemiringValue::star(t * t2, c * c2)
                }
            }
            _ => unreachable!("checked by carrier test"),
        })
    }

    pub fn oplus(self, a: SemiringValue, b: SemiringValue) -> Result<SemiringValue, Error> {
        self.check(&a, &b)?;
        if let (SemiringValue::Probability(x), SemiringValue::Probability(y)) = (a, b) {
            return Ok(SemiringValue::Probability(x + y - x * y));
        }
        let zero = self.zero();
        if a == zero {
            return Ok(b);
        }
        if b == zero {
            return Ok(a);
        }
        let (t, c) = a.pair();
        let (t2, c2) = b.pair();
        if c > c2 {
            return Ok(a);
        }
        if c2 > c {
            return Ok(b);
        }
        Ok(match self {
            SemiringId::TrustConfidence(TieBreak::MaxT) => SemiringValue::tc(t.max(t2), c),
            SemiringId::TrustConfidence(TieBreak::MinT) => SemiringValue::tc(t.min(t2), c),
            SemiringId::Star => {
                let sign = if t + t2 >= 0.0 { 1.0 } else { -1.0 };
                SemiringValue::star(sign * t.abs().max(t2.abs()), c)
            }
            SemiringId::Probability => unreachable!(),
        })
    }

    /// ⊕ over proofs of ⊗ over each proof's atom labels. Each atom counts
    /// once per proof.
    pub fn evaluate_proofs(self, proofs: &ProofSet, labels: &AtomTable) -> Result<SemiringValue, Error> {
        let mut total = self.zero();
        for proof in proofs.iter() {
            let mut value = self.one();
            for &id in proof {
                let label = labels.label(id).ok_or(Error::UnlabeledAtom(id.index()))?;
                value = self.otimes(value, self.value_of(label)?)?;
            }
            total = self.oplus(total, value)?;
        }
        Ok(total)
    }
}

impl fmt::Display for SemiringId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SemiringId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prob" | "probability" => Ok(SemiringId::Probability),
            "tc-max" => Ok(SemiringId::TrustConfidence(TieBreak::MaxT)),
            "tc-min" => Ok(SemiringId::TrustConfidence(TieBreak::MinT)),
            "star" => Ok(SemiringId::Star),
            other => Err(format!(
                "unknown semiring `{other}` (expected prob, tc-max, tc-min or star)"
            )),
        }
    }
}

fn label_text(label: &Label) -> String {
    match label {
        Label::Certain => "certain".into(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SemiringValue {
    Probability(f64),
    Tc { t: f64, c: f64 },
    Star { t: f64, c: f64 },
}

// Adding 0.0 maps -0.0 to +0.0 so that equal values are bitwise equal.
fn canon(x: f64) -> f64 {
    x + 0.0
}

impl SemiringValue {
    pub fn tc(t: f64, c: f64) -> Self {
        SemiringValue::Tc {
            t: canon(t),
            c: canon(c),
        }
    }

    pub fn star(t: f64, c: f64) -> Self {
        SemiringValue::Star {
            t: canon(t),
            c: canon(c),
        }
    }

    /// The trust (or probability) component.
    pub fn value(&self) -> f64 {
        match *self {
            SemiringValue::Probability(p) => p,
            SemiringValue::Tc { t, .. } | SemiringValue::Star { t, .. } => t,
        }
    }

    /// The confidence component, if the carrier has one.
    pub fn confidence(&self) -> Option<f64> {
        match *self {
            SemiringValue::Probability(_) => None,
            SemiringValue::Tc { c, .. } | SemiringValue::Star { c, .. } => Some(c),
        }
    }

    fn pair(&self) -> (f64, f64) {
        (self.value(), self.confidence().unwrap_or(1.0))
    }
}

impl fmt::Display for SemiringValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemiringValue::Probability(p) => write!(f, "{}", crate::format_number(*p)),
            SemiringValue::Tc { t, c } | SemiringValue::Star { t, c } => {
                write!(f, "({}, {})", crate::format_number(*t), crate::format_number(*c))
            }
        }
    }
}

/// Sets of atoms whose joint truth proves a query.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProofSet {
    proofs: Vec<BTreeSet<AtomId>>,
}

impl ProofSet {
    pub fn new(proofs: Vec<BTreeSet<AtomId>>) -> Self {
        let mut set = ProofSet { proofs: Vec::new() };
        for p in proofs {
            if !set.proofs.contains(&p) {
                set.proofs.push(p);
            }
        }
        set
    }

    pub fn len(&self) -> usize {
        self.proofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.proofs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &BTreeSet<AtomId>> {
        self.proofs.iter()
    }

    pub fn into_vec(self) -> Vec<BTreeSet<AtomId>> {
        self.proofs
    }
}

/// Upper bound on the number of proofs held while expanding a formula.
pub const DEFAULT_MAX_PROOFS: usize = 1_000_000;

/// All minimal sets of atoms whose truth makes a negation-free formula true.
pub fn enumerate_proofs(f: &GroundFormula) -> Result<ProofSet, Error> {
    enumerate_proofs_capped(f, DEFAULT_MAX_PROOFS)
}

pub fn enumerate_proofs_capped(f: &GroundFormula, cap: usize) -> Result<ProofSet, Error> {
    Ok(ProofSet {
        proofs: proofs_of(&f.root, cap)?,
    })
}

fn proofs_of(f: &Formula, cap: usize) -> Result<Vec<BTreeSet<AtomId>>, Error> {
    let out = match f {
        Formula::True => vec![BTreeSet::new()],
        Formula::False => Vec::new(),
        Formula::Atom(id) => vec![BTreeSet::from([*id])],
        Formula::Not(_) => return Err(Error::NegationInAlgebraicMode),
        Formula::Or(children) => {
            let mut acc = Vec::new();
            for child in children {
                acc.extend(proofs_of(child, cap)?);
                if acc.len() > cap {
                    return Err(Error::TooManyProofs(cap));
                }
            }
            minimize(acc)
        }
        Formula::And(children) => {
            let mut acc = vec![BTreeSet::new()];
            for child in children {
                let rhs = proofs_of(child, cap)?;
                if acc.len().saturating_mul(rhs.len()) > cap {
                    return Err(Error::TooManyProofs(cap));
                }
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for left in &acc {
                    for right in &rhs {
                        next.push(left.union(right).copied().collect());
                    }
                }
                acc = minimize(next);
            }
            acc
        }
    };
    Ok(out)
}

// Drops duplicates and proper supersets, keeping first-occurrence order.
fn minimize(proofs: Vec<BTreeSet<AtomId>>) -> Vec<BTreeSet<AtomId>> {
    let mut out: Vec<BTreeSet<AtomId>> = Vec::with_capacity(proofs.len());
    for (i, p) in proofs.iter().enumerate() {
        let dominated = proofs.iter().enumerate().any(|(j, q)| {
            if i == j {
                return false;
            }
            (q.is_subset(p) && q.len() < p.len()) || (q == p && j < i)
        });
        if !dominated {
            out.push(p.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::GroundAtom;
    use proptest::prelude::*;

    const TC_MAX: SemiringId = SemiringId::TrustConfidence(TieBreak::MaxT);
    const TC_MIN: SemiringId = SemiringId::TrustConfidence(TieBreak::MinT);

    fn close(a: SemiringValue, b: SemiringValue) -> bool {
        (a.value() - b.value()).abs() < 1e-12
            && (a.confidence().unwrap_or(0.0) - b.confidence().unwrap_or(0.0)).abs() < 1e-12
    }

    #[test]
    fn tc_otimes() {
        let v = TC_MAX
            .otimes(SemiringValue::tc(0.9, 0.8), SemiringValue::tc(0.5, 0.5))
            .unwrap();
        assert!(close(v, SemiringValue::tc(0.45, 0.40)));
    }

    #[test]
    fn star_double_distrust_is_indifferent() {
        let v = SemiringId::Star
            .otimes(SemiringValue::star(-0.5, 0.9), SemiringValue::star(-0.4, 0.8))
            .unwrap();
        assert_eq!(v.value(), 0.0);
        assert!((v.confidence().unwrap() - 0.72).abs() < 1e-12);
    }

    #[test]
    fn tc_oplus_confidence_wins() {
        let a = SemiringValue::tc(0.3, 0.9);
        assert_eq!(TC_MAX.oplus(a, SemiringValue::tc(0.8, 0.2)).unwrap(), a);
        assert_eq!(
            TC_MAX
                .oplus(SemiringValue::tc(0.3, 0.5), SemiringValue::tc(0.8, 0.5))
                .unwrap(),
            SemiringValue::tc(0.8, 0.5)
        );
        assert_eq!(
            TC_MIN
                .oplus(SemiringValue::tc(0.3, 0.5), SemiringValue::tc(0.8, 0.5))
                .unwrap(),
            SemiringValue::tc(0.3, 0.5)
        );
    }

    #[test]
    fn star_tie_takes_larger_magnitude() {
        let s = SemiringId::Star;
        let v = s
            .oplus(SemiringValue::star(-0.5, 0.4), SemiringValue::star(0.3, 0.4))
            .unwrap();
        assert_eq!(v, SemiringValue::star(-0.5, 0.4));
        let v = s
            .oplus(SemiringValue::star(-0.3, 0.4), SemiringValue::star(0.3, 0.4))
            .unwrap();
        assert_eq!(v, SemiringValue::star(0.3, 0.4));
    }

    #[test]
    fn carrier_mismatch() {
        assert!(matches!(
            TC_MAX.otimes(SemiringValue::Probability(0.5), SemiringValue::tc(0.5, 0.5)),
            Err(Error::CarrierMismatch { .. })
        ));
        assert!(TC_MAX.value_of(&Label::Pair(-0.5, 0.5)).is_err());
        assert!(SemiringId::Star.value_of(&Label::Pair(-0.5, 0.5)).is_ok());
        assert!(SemiringId::Probability.value_of(&Label::Pair(0.5, 0.5)).is_err());
    }

    fn table(labels: &[(&str, Label)]) -> (AtomTable, Vec<AtomId>) {
        let mut t = AtomTable::default();
        let ids = labels
            .iter()
            .map(|(n, l)| t.intern(GroundAtom::new(*n, vec![]), *l))
            .collect();
        (t, ids)
    }

    #[test]
    fn evaluate_single_and_two_proofs() {
        let (t, ids) = table(&[("a", Label::Pair(0.9, 0.9)), ("b", Label::Pair(0.7, 0.5))]);
        let proofs = ProofSet::new(vec![BTreeSet::from([ids[0], ids[1]])]);
        let v = TC_MAX.evaluate_proofs(&proofs, &t).unwrap();
        assert!(close(v, SemiringValue::tc(0.63, 0.45)));

        let (t, ids) = table(&[
            ("a", Label::Pair(0.9, 0.9)),
            ("b", Label::Pair(0.7, 0.5)),
            ("c", Label::Pair(0.5, 0.9)),
            ("d", Label::Pair(0.8, 0.7)),
        ]);
        let proofs = ProofSet::new(vec![BTreeSet::from([ids[0], ids[1]]), BTreeSet::from([ids[2], ids[3]])]);
        let v = TC_MAX.evaluate_proofs(&proofs, &t).unwrap();
        assert!(close(v, SemiringValue::tc(0.40, 0.63)));
        assert_eq!(TC_MAX.evaluate_proofs(&ProofSet::default(), &t).unwrap(), TC_MAX.zero());
    }

    #[test]
    fn unlabeled_atom() {
        let (t, _) = table(&[]);
        let proofs = ProofSet::new(vec![BTreeSet::from([AtomId::from_index(3)])]);
        assert!(matches!(
            TC_MAX.evaluate_proofs(&proofs, &t),
            Err(Error::UnlabeledAtom(3))
        ));
    }

    #[test]
    fn proofs_of_small_formulas() {
        let (t, ids) = table(&[
            ("a", Label::Prob(0.5)),
            ("b", Label::Prob(0.5)),
            ("c", Label::Prob(0.5)),
            ("d", Label::Prob(0.5)),
        ]);
        let a = |i: usize| Formula::Atom(ids[i]);
        let f = GroundFormula::new(
            Formula::Or(vec![Formula::And(vec![a(0), a(1)]), Formula::And(vec![a(2), a(3)])]),
            t.clone(),
        );
        assert_eq!(
            enumerate_proofs(&f).unwrap().into_vec(),
            vec![BTreeSet::from([ids[0], ids[1]]), BTreeSet::from([ids[2], ids[3]])]
        );
        let f = GroundFormula::new(Formula::And(vec![a(0), Formula::Or(vec![a(1), a(2)])]), t.clone());
        assert_eq!(
            enumerate_proofs(&f).unwrap().into_vec(),
            vec![BTreeSet::from([ids[0], ids[1]]), BTreeSet::from([ids[0], ids[2]])]
        );
        // absorption: a ∨ (a ∧ b) has the single proof {a}
        let f = GroundFormula::new(Formula::Or(vec![a(0), Formula::And(vec![a(0), a(1)])]), t.clone());
        assert_eq!(enumerate_proofs(&f).unwrap().into_vec(), vec![BTreeSet::from([ids[0]])]);
        let f = GroundFormula::new(Formula::Not(Box::new(a(0))), t);
        assert!(matches!(enumerate_proofs(&f), Err(Error::NegationInAlgebraicMode)));
    }

    fn arb_value(s: SemiringId) -> BoxedStrategy<SemiringValue> {
        // grid values so that confidence ties actually occur
        let unit = prop_oneof![(0u32..=10).prop_map(|k| k as f64 / 10.0), 0.0f64..=1.0];
        match s {
            SemiringId::Probability => unit.prop_map(SemiringValue::Probability).boxed(),
            SemiringId::TrustConfidence(_) => (unit.clone(), unit).prop_map(|(t, c)| SemiringValue::tc(t, c)).boxed(),
            SemiringId::Star => {
                let signed = prop_oneof![(-10i32..=10).prop_map(|k| k as f64 / 10.0), -1.0f64..=1.0];
                (signed, unit).prop_map(|(t, c)| SemiringValue::star(t, c)).boxed()
            }
        }
    }

    proptest! {
        #[test]
        fn oplus_commutes((s, a, b) in prop_oneof![Just(TC_MAX), Just(TC_MIN), Just(SemiringId::Star)]
            .prop_flat_map(|s| (Just(s), arb_value(s), arb_value(s))))
        {
            prop_assert_eq!(s.oplus(a, b).unwrap(), s.oplus(b, a).unwrap());
        }

        #[test]
        fn tc_proof_order_irrelevant(
            vals in proptest::collection::vec((0u32..=10, 0u32..=10), 1..6),
            rot in 0usize..6,
        ) {
            for s in [TC_MAX, TC_MIN, SemiringId::Star] {
                let mut t = AtomTable::default();
                let ids: Vec<_> = vals
                    .iter()
                    .enumerate()
                    .map(|(i, (a, b))| t.intern(GroundAtom::new(format!("e{i}"), vec![]), Label::Pair(*a as f64 / 10.0, *b as f64 / 10.0)))
                    .collect();
                let proofs: Vec<_> = ids.iter().map(|id| BTreeSet::from([*id])).collect();
                let mut rotated = proofs.clone();
                rotated.rotate_left(rot % proofs.len());
                prop_assert_eq!(
                    s.evaluate_proofs(&ProofSet::new(proofs), &t).unwrap(),
                    s.evaluate_proofs(&ProofSet::new(rotated), &t).unwrap()
                );
            }
        }
    }

    #[test]
    fn neutral_and_absorbing() {
        for s in SemiringId::ALL {
            let mut runner = proptest::test_runner::TestRunner::deterministic();
            for _ in 0..200 {
                let a = arb_value(s).new_tree(&mut runner).unwrap().current();
                assert_eq!(s.oplus(s.zero(), a).unwrap(), a, "{s}: zero ⊕ {a}");
                assert_eq!(s.otimes(s.one(), a).unwrap(), a, "{s}: one ⊗ {a}");
                assert_eq!(s.otimes(s.zero(), a).unwrap(), s.zero(), "{s}: zero ⊗ {a}");
            }
        }
    }
}
