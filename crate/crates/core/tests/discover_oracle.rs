mod support;

use std::collections::BTreeSet;

use causeway_core::discover::{dag_to_cpdag, ges_search};
use causeway_core::synth;
use support::oracle::{class_cpdag, enumerate_dags, run_case, seeded_case};

#[test]
fn dag_counts_match_known_sequence() {
    assert_eq!(enumerate_dags(2).len(), 3);
    assert_eq!(enumerate_dags(3).len(), 25);
    assert_eq!(enumerate_dags(4).len(), 543);
}

#[test]
fn meek_completion_agrees_with_class_enumeration() {
    for p in 3..=4 {
        let all = enumerate_dags(p);
        for dag in &all {
            let (d, u) = class_cpdag(dag, &all);
            let g = dag_to_cpdag(dag, &BTreeSet::new());
            assert_eq!((d, u), (g.directed, g.undirected), "dag {dag:?}");
        }
    }
}

#[test]
fn collider_matches_three_node_enumeration() {
    let ds = synth::collider(2000, 17);
    let out = run_case(&ds);
    assert!(out.bic_match && out.cpdag_match);
}

#[test]
fn search_reaches_the_enumerated_optimum_on_most_seeds() {
    let mut hits = 0;
    for seed in 0..50 {
        let out = run_case(&seeded_case(seed));
        if out.bic_match && out.cpdag_match {
            hits += 1;
        } else {
            eprintln!(
                "seed {seed} (p={}): search {:.4} vs optimum {:.4}",
                out.p, out.search_bic, out.optimum_bic
            );
        }
    }
    eprintln!("oracle agreement: {hits}/50");
    assert!(hits >= 45, "only {hits}/50 seeds matched");
}

#[test]
fn result_models_reflect_the_cpdag() {
    let ds = seeded_case(3);
    let r = ges_search(&ds, &BTreeSet::new(), &BTreeSet::new()).unwrap();
    let skel = |m: &causeway_core::CausalModel| -> BTreeSet<(String, String)> {
        m.edges
            .iter()
            .map(|e| {
                let (a, b) = (m.name_of(&e.src), m.name_of(&e.dst));
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect()
    };
    assert_eq!(skel(&r.cpdag), skel(&r.dag));
    for e in r.cpdag.edges.iter().filter(|e| e.is_directed()) {
        let (s, d) = (r.cpdag.name_of(&e.src), r.cpdag.name_of(&e.dst));
        assert!(r
            .dag
            .edges
            .iter()
            .any(|f| r.dag.name_of(&f.src) == s && r.dag.name_of(&f.dst) == d));
    }
}
