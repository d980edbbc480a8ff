//! Cross-module invariants over the shipped corpus: discipline equivalences,
//! freezing propagation, determinism, and the parse/print round trip.

use std::path::PathBuf;

use tittm::feedback::{eval_feedback, export_tree, NodeStatus, Verdict};
use tittm::frontend::parse::{parse_program, print_program};
use tittm::frontend::store::{load_corpus, ProgramStore};
use tittm::ordinal::Ordinal;
use tittm::tape::TapeRep;
use tittm::variants::{ordinal_oracle_run, strong_jump, Budgets, JumpResult};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> ProgramStore {
    load_corpus(&corpus_dir()).expect("corpus loads")
}

#[test]
fn strong_jump_matches_the_alpha_one_discipline() {
    let store = corpus();
    let b = Budgets::default();
    // programs that explicitly write an ordinal >= 1 probe the violation
    // path and genuinely separate the two disciplines
    let probes = ["ordinal_root", "ordinal_violation"];
    for (id, p) in store.iter() {
        if probes.contains(&p.name.as_str()) {
            continue;
        }
        let jump = strong_jump(&store, id, &TapeRep::empty(), &b).result;
        let (v, _) = ordinal_oracle_run(
            &store,
            id,
            &Ordinal::one(),
            &TapeRep::empty(),
            &TapeRep::empty(),
            &b,
        );
        let as_jump = match v {
            Verdict::Converges(_) => JumpResult::In,
            Verdict::Diverges => JumpResult::Out,
            _ => JumpResult::Unknown,
        };
        assert_eq!(jump, as_jump, "{}", p.name);
    }
}

#[test]
fn ordinal_discipline_never_freezes_on_the_corpus() {
    let store = corpus();
    let b = Budgets::default();
    for alpha in [Ordinal::zero(), Ordinal::one(), Ordinal::omega()] {
        for (id, p) in store.iter() {
            let (v, _) = ordinal_oracle_run(
                &store,
                id,
                &alpha,
                &TapeRep::empty(),
                &TapeRep::empty(),
                &b,
            );
            assert!(
                !matches!(v, Verdict::Freezes(_)),
                "{} froze at alpha {alpha}",
                p.name
            );
        }
    }
}

#[test]
fn freezing_propagates_to_the_root() {
    let store = corpus();
    let b = Budgets::default();
    for (id, p) in store.iter() {
        let (v, tree) = eval_feedback(&store, id, &TapeRep::empty(), &b);
        let any_frozen = tree.nodes.iter().any(|n| n.status == NodeStatus::Frozen);
        if any_frozen {
            assert!(
                matches!(v, Verdict::Freezes(_)),
                "{}: a frozen node without a freezing root",
                p.name
            );
        }
    }
}

#[test]
fn evaluation_is_deterministic_and_exclusive() {
    let store = corpus();
    let b = Budgets::default();
    for (id, _) in store.iter() {
        let (v1, t1) = eval_feedback(&store, id, &TapeRep::empty(), &b);
        let (v2, t2) = eval_feedback(&store, id, &TapeRep::empty(), &b);
        assert_eq!(v1, v2);
        assert_eq!(export_tree(&t1, &store), export_tree(&t2, &store));
    }
}

#[test]
fn parse_print_round_trip_over_the_corpus() {
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().map(|x| x != "fit").unwrap_or(true) {
            continue;
        }
        let name = path.file_stem().unwrap().to_string_lossy().into_owned();
        let src = std::fs::read_to_string(&path).unwrap();
        let p = parse_program(&src, &name).unwrap();
        let printed = print_program(&p);
        let q = parse_program(&printed, &name).unwrap();
        assert_eq!(p, q, "{name} round trip");
    }
}

#[test]
fn alpha_strictly_decreases_along_accepted_ordinal_paths() {
    use tittm::feedback::NodeLabel;
    let store = corpus();
    let b = Budgets::default();
    let root = store.id_of("ordinal_root").unwrap();
    let (v, tree) = ordinal_oracle_run(
        &store,
        root,
        &Ordinal::omega(),
        &TapeRep::empty(),
        &TapeRep::empty(),
        &b,
    );
    assert!(matches!(v, Verdict::Converges(_)));
    // the descending chain 3, 2, 1, 0 hangs under the root
    let mut betas = Vec::new();
    for node in &tree.nodes {
        if let NodeLabel::Call(c) = &node.label {
            betas.push(c.ordinal.clone().unwrap_or_else(Ordinal::zero));
        }
    }
    let expected: Vec<Ordinal> = (0..4u64)
        .rev()
        .map(|n| Ordinal::from_nat(n).unwrap())
        .collect();
    assert_eq!(betas, expected);
    for node in &tree.nodes {
        let (Some(parent), NodeLabel::Call(c)) = (node.parent, &node.label) else {
            continue;
        };
        let alpha = match &tree.nodes[parent].label {
            NodeLabel::Root { .. } => Ordinal::omega(),
            NodeLabel::Call(pc) => pc.ordinal.clone().unwrap_or_else(Ordinal::zero),
        };
        let beta = c.ordinal.clone().unwrap_or_else(Ordinal::zero);
        assert!(beta < alpha, "{beta} not below {alpha}");
    }
}

#[test]
fn iitm_without_calls_matches_plain_evaluation_on_the_corpus() {
    let store = corpus();
    let b = Budgets::default();
    for (id, p) in store.iter() {
        if p.makes_calls() {
            continue;
        }
        let (plain, _) = eval_feedback(&store, id, &TapeRep::empty(), &b);
        let (iitm, _) = tittm::variants::iitm_run(&store, id, &TapeRep::empty(), &b);
        assert_eq!(plain, iitm, "{}", p.name);
    }
}

#[test]
fn mutual_recursion_freezes_with_a_two_call_cycle() {
    let store = corpus();
    let id = store.id_of("mutual_a").unwrap();
    let (v, tree) = eval_feedback(&store, id, &TapeRep::empty(), &Budgets::default());
    let witness = match v {
        Verdict::Freezes(w) => w,
        other => panic!("expected freezing, got {other:?}"),
    };
    let indices: Vec<u64> = witness.iter().map(|c| c.index).collect();
    assert_eq!(indices, [41, 42, 41]);
    assert_eq!(tree.nodes.len(), 3);
    assert!(tree.nodes.iter().all(|n| n.children.len() <= 1));
    assert_eq!(tree.nodes[2].status, NodeStatus::Frozen);
}

#[test]
fn stair_climber_halts_past_four_limits() {
    let store = corpus();
    let id = store.id_of("stairs").unwrap();
    let (v, tree) = eval_feedback(&store, id, &TapeRep::empty(), &Budgets::default());
    assert!(matches!(v, Verdict::Converges(_)));
    let clock = &tree.nodes[0].final_snapshot.as_ref().unwrap().clock;
    assert_eq!(clock, &tittm::ordinal::parse_ordinal("w*4+1").unwrap());
}
