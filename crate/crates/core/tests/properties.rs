mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::subsequence;
use secassess::dsl::{Atom, BodyExpr, Statement, Term};
use secassess::explain::{disjoint_proofs, export_dot};
use secassess::semiring::TieBreak;
use secassess::{
    build_kb, enumerate_deployments, enumerate_proofs, parse_program, print_program, rank, trust_degree, wmc,
    AssessOptions, AtomId, AtomTable, Formula, GroundAtom, GroundFormula, Label, PartialDeployment, Program, ProofSet,
    SemiringId, TrustMode,
};

use common::*;

const CAPS: [&str; 6] = [
    "firewall",
    "backup",
    "host_ids",
    "access_logs",
    "anti_tampering",
    "authentication",
];
const CONSTS: [&str; 4] = ["n1", "n2", "edge", "cloud"];

fn arb_label() -> impl Strategy<Value = Label> {
    prop_oneof![
        Just(Label::Certain),
        (0.0..=1.0f64).prop_map(Label::Prob),
        (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(t, c)| Label::Pair(t, c)),
    ]
}

fn arb_fact() -> impl Strategy<Value = Statement> {
    (
        arb_label(),
        prop::sample::select(&CAPS[..]),
        prop::sample::select(&CONSTS[..]),
    )
        .prop_map(|(label, p, n)| Statement::Fact {
            label,
            atom: Atom::new(p, vec![Term::Const(n.into())]),
        })
}

fn arb_body() -> impl Strategy<Value = BodyExpr> {
    let leaf = (prop::sample::select(&CAPS[..]), any::<bool>()).prop_map(|(p, positive)| BodyExpr::Lit {
        atom: Atom::new(p, vec![Term::Var("N".into())]),
        positive,
    });
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(BodyExpr::Conj),
            prop::collection::vec(inner, 2..4).prop_map(BodyExpr::Disj),
        ]
    })
}

fn arb_statement() -> impl Strategy<Value = Statement> {
    prop_oneof![
        3 => arb_fact(),
        1 => (prop::sample::select(&CONSTS[..]), arb_body()).prop_map(|(s, body)| Statement::Rule {
            head: Atom::new("securityRequirements", vec![Term::Const(s.into()), Term::Var("N".into())]),
            body: Some(body),
        }),
        1 => prop::collection::vec(prop::sample::select(&CONSTS[..]), 1..4).prop_map(|xs| Statement::Fact {
            label: Label::Certain,
            atom: Atom::new("app", vec![
                Term::Const("a".into()),
                Term::List(xs.into_iter().map(|x| Term::Const(x.into())).collect(), None),
            ]),
        }),
        1 => prop::sample::select(&CONSTS[..]).prop_map(|s| Statement::Query(Atom::new(
            "secFog",
            vec![Term::Const("appOp".into()), Term::Const(s.into()), Term::Var("D".into())],
        ))),
    ]
}

fn smartbuilding() -> Program {
    parse_program(&read_fixture("smartbuilding.sf")).unwrap()
}

fn levels(kb: &secassess::KnowledgeBase) -> Vec<(Vec<String>, u64)> {
    rank(kb, "smartbuilding", "appOp", None, &AssessOptions::default())
        .unwrap()
        .into_iter()
        .map(|r| {
            let nodes = r.assessment.deployment.nodes().iter().map(|s| s.to_string()).collect();
            (nodes, r.assessment.level.value().to_bits())
        })
        .collect()
}

fn labelled(weights: &[f64]) -> AtomTable {
    let mut t = AtomTable::default();
    for (i, w) in weights.iter().enumerate() {
        t.intern(GroundAtom::new(format!("x{i}"), vec![]), Label::Prob(*w));
    }
    t
}

fn arb_formula(atoms: usize, negation: bool) -> impl Strategy<Value = Formula> {
    let leaf = (0..atoms).prop_map(|i| Formula::Atom(AtomId::from_index(i)));
    leaf.prop_recursive(4, 24, 4, move |inner| {
        let mut options = vec![
            prop::collection::vec(inner.clone(), 1..4)
                .prop_map(Formula::and)
                .boxed(),
            prop::collection::vec(inner.clone(), 1..4).prop_map(Formula::or).boxed(),
        ];
        if negation {
            options.push(inner.prop_map(Formula::negate).boxed());
        }
        prop::strategy::Union::new(options)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dsl_round_trip(statements in prop::collection::vec(arb_statement(), 0..12)) {
        let program = Program::new(statements);
        let text = print_program(&program);
        let parsed = parse_program(&text).unwrap();
        prop_assert_eq!(&parsed, &program);
        prop_assert_eq!(print_program(&parsed), text);
    }

    #[test]
    fn wmc_bounds_and_proofs(f in arb_formula(6, false), weights in prop::collection::vec(0.0..=1.0f64, 6)) {
        let g = GroundFormula::new(f.clone(), labelled(&weights));
        let p = wmc(&g).unwrap();
        prop_assert!((p - brute_force(&f, &weights)).abs() < 1e-12);
        let proofs = enumerate_proofs(&g).unwrap();
        for proof in proofs.iter() {
            let product: f64 = proof.iter().map(|a| weights[a.index()]).product();
            prop_assert!(p >= product - 1e-12);
            // a proof makes the formula true
            prop_assert!(f.eval(&|a: AtomId| proof.contains(&a)));
        }
    }

    #[test]
    fn disjoint_proofs_partition(f in arb_formula(6, true), weights in prop::collection::vec(0.0..=1.0f64, 6)) {
        let g = GroundFormula::new(f, labelled(&weights));
        let proofs = disjoint_proofs(&g).unwrap();
        let sum: f64 = proofs.iter().map(|p| p.contribution).sum();
        prop_assert!((sum - wmc(&g).unwrap()).abs() < 1e-9);
        for (i, p) in proofs.iter().enumerate() {
            for q in &proofs[i + 1..] {
                prop_assert!(p.literals.iter().any(|l| q.literals.iter().any(|m| m.atom == l.atom && m.positive != l.positive)));
            }
        }
        prop_assert_eq!(export_dot(&g, None), export_dot(&g.clone(), None));
    }

    #[test]
    fn proof_order_is_irrelevant(
        s in prop::sample::select(vec![
            SemiringId::TrustConfidence(TieBreak::MaxT),
            SemiringId::TrustConfidence(TieBreak::MinT),
            SemiringId::Star,
        ]),
        labels in prop::collection::vec((-1.0..=1.0f64, prop::sample::select(vec![0.25, 0.5, 1.0])), 5),
        picks in prop::collection::vec(subsequence((0..5usize).collect::<Vec<_>>(), 1..4), 1..6),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut table = AtomTable::default();
        for (i, (t, c)) in labels.iter().enumerate() {
            let t = if s == SemiringId::Star { *t } else { t.abs() };
            table.intern(GroundAtom::new(format!("x{i}"), vec![]), Label::Pair(t, *c));
        }
        let proofs: Vec<BTreeSet<AtomId>> = picks
            .iter()
            .map(|p| p.iter().map(|i| AtomId::from_index(*i)).collect())
            .collect();
        let mut shuffled = proofs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = s.evaluate_proofs(&ProofSet::new(proofs), &table).unwrap();
        let b = s.evaluate_proofs(&ProofSet::new(shuffled), &table).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn radius_grows_towards_transitive(to in prop::sample::select(vec!["cloudOp1", "cloudOp2", "edgeOp"])) {
        let kb = load(&["smartbuilding.sf"], SemiringId::Probability);
        let mut prev = 0.0;
        for d in 1..=6 {
            let v = trust_degree(&kb, "appOp", to, TrustMode::Radius(d)).unwrap();
            prop_assert!(v >= prev);
            prev = v;
        }
        prop_assert_eq!(prev, trust_degree(&kb, "appOp", to, TrustMode::Transitive).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kb_is_order_insensitive(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let base = smartbuilding();
        let mut shuffled = base.statements.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = build_kb(&[base], SemiringId::Probability).unwrap();
        let b = build_kb(&[Program::new(shuffled)], SemiringId::Probability).unwrap();
        prop_assert_eq!(levels(&a), levels(&b));
    }

    #[test]
    fn splitting_into_files_is_neutral(cut in 0usize..120) {
        let base = smartbuilding();
        let cut = cut.min(base.statements.len());
        let (x, y) = base.statements.split_at(cut);
        let a = build_kb(std::slice::from_ref(&base), SemiringId::Probability).unwrap();
        let b = build_kb(&[Program::new(x.to_vec()), Program::new(y.to_vec())], SemiringId::Probability).unwrap();
        prop_assert_eq!(levels(&a), levels(&b));
    }

    #[test]
    fn capability_facts_are_monotone(extra in prop::collection::vec(
        (prop::sample::select(&CAPS[..]), prop::sample::select(&["cloud1", "cloud2", "edge2", "edge3"][..]), 0.0..=1.0f64),
        1..4,
    )) {
        let base = smartbuilding();
        let before = build_kb(std::slice::from_ref(&base), SemiringId::Probability).unwrap();
        let mut statements = base.statements.clone();
        for (cap, node, p) in &extra {
            let atom = Atom::new(*cap, vec![Term::Const(node.to_string())]);
            if before.capability(cap, node).is_none() && !statements.iter().any(|s| matches!(s, Statement::Fact { atom: a, .. } if *a == atom)) {
                statements.push(Statement::Fact { label: Label::Prob(*p), atom });
            }
        }
        let after = build_kb(&[Program::new(statements)], SemiringId::Probability).unwrap();
        let old: std::collections::BTreeMap<_, _> = levels(&before).into_iter().collect();
        for (nodes, bits) in levels(&after) {
            let new = f64::from_bits(bits);
            if let Some(prev) = old.get(&nodes) {
                prop_assert!(new >= f64::from_bits(*prev) - 1e-12, "{:?}: {} < {}", nodes, new, f64::from_bits(*prev));
            }
        }
    }
}

#[test]
fn full_partial_selects_one_deployment() {
    let kb = load(&["smartbuilding.sf"], SemiringId::Probability);
    let opts = AssessOptions::default();
    let all = enumerate_deployments(&kb, "smartbuilding", "appOp", None, &opts).unwrap();
    for d in &all {
        let pinned = PartialDeployment::from(d);
        let one = enumerate_deployments(&kb, "smartbuilding", "appOp", Some(&pinned), &opts).unwrap();
        assert_eq!(one, vec![d.clone()]);
    }
    assert!(
        enumerate_deployments(&kb, "smartbuilding", "appOp", Some(&PartialDeployment::new()), &opts).unwrap() == all
    );
}

#[test]
fn ranking_is_sorted_with_lexicographic_ties() {
    let kb = load(&["smartbuilding.sf"], SemiringId::Probability);
    let ranked = rank(&kb, "smartbuilding", "appOp", None, &AssessOptions::default()).unwrap();
    for w in ranked.windows(2) {
        let (a, b) = (&w[0].assessment, &w[1].assessment);
        assert!(
            a.level.value() > b.level.value() || (a.level == b.level && a.deployment.nodes() < b.deployment.nodes())
        );
    }
    let ids: BTreeSet<usize> = ranked.iter().map(|r| r.id).collect();
    assert_eq!(ids, (1..=24).collect());
}

#[test]
fn ranking_is_stable_across_runs() {
    let kb = load(&["smartbuilding_star.sf"], SemiringId::Star);
    let opts = AssessOptions {
        semiring: SemiringId::Star,
        trust_mode: TrustMode::Radius(3),
        ..AssessOptions::default()
    };
    let first = rank(&kb, "smartbuilding", "appOp", None, &opts).unwrap();
    for _ in 0..5 {
        assert_eq!(rank(&kb, "smartbuilding", "appOp", None, &opts).unwrap(), first);
    }
}
