use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use rand::rngs::StdRng;
use rand::SeedableRng;

use tempock::classgraph::{
    build_graph, sequences, ClassError, ClassGraph, ExploreError, Explorer, Limit, Limits,
};
use tempock::library::{build_tasksystem, parse_task_table, EtMode, EXAMPLE_TASKS};
use tempock::oracle::{oracle_explore, oracle_explore_refining, oracle_sequences, OracleError};
use tempock::random::{random_tts, RandomOptions};
use tempock::time::{Rat, TimeInterval};
use tempock::tts::{DiscreteState, TransId, TtsBuilder};
use tempock::{compile, parse_program, Tts};

fn iv(lo: i64, hi: i64) -> TimeInterval {
    TimeInterval::closed(lo, hi)
}

/// One instance per transition, each with a single τ from `a` to `b`.
fn independent(bounds: &[(i64, i64)]) -> Tts {
    let mut b = TtsBuilder::new();
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        let i = b.instance(&format!("p{k}"), &["a", "b"]);
        b.tau(&format!("t{k}"), i, 0, 1, iv(lo, hi));
    }
    b.finish().unwrap()
}

fn firable_by_state(g: &ClassGraph) -> BTreeMap<DiscreteState, BTreeSet<TransId>> {
    let mut out: BTreeMap<DiscreteState, BTreeSet<TransId>> = BTreeMap::new();
    for (i, c) in g.classes.iter().enumerate() {
        out.entry(c.state.clone())
            .or_default()
            .extend(g.succ[i].iter().map(|e| e.0));
    }
    out
}

#[test]
fn initial_domain_is_the_static_box() {
    let t = independent(&[(2, 3)]);
    let ex = Explorer::new(&t);
    let c = ex.initial_class();
    assert_eq!(ex.delay_bounds(&c, 0).unwrap().to_string(), "[2,3]");
    assert_eq!(ex.firable(&c), vec![0]);

    let t = independent(&[(0, 2), (1, 4)]);
    let ex = Explorer::new(&t);
    let c = ex.initial_class();
    assert_eq!(ex.show_domain(&c), "0:[0,2] 1:[1,4]");
}

#[test]
fn no_enabled_transition_is_dead() {
    let mut b = TtsBuilder::new();
    b.instance("p", &["a"]);
    let t = b.finish().unwrap();
    let ex = Explorer::new(&t);
    let c = ex.initial_class();
    assert!(c.is_dead());
    assert!(ex.firable(&c).is_empty());
    let g = build_graph(&t, &Limits::default()).unwrap();
    assert_eq!((g.len(), g.edge_count(), g.dead().count()), (1, 0, 1));
}

#[test]
fn later_interval_not_firable() {
    let t = independent(&[(2, 3), (5, 6)]);
    let ex = Explorer::new(&t);
    assert_eq!(ex.firable(&ex.initial_class()), vec![0]);
    let o = oracle_explore(&t, Rat::from_integer(1)).unwrap();
    assert_eq!(o.firable[&t.initial], BTreeSet::from([0]));
}

#[test]
fn priority_between_urgent_transitions() {
    let mut b = TtsBuilder::new();
    let p = b.instance("p", &["a", "b"]);
    let q = b.instance("q", &["a", "b"]);
    let hi = b.tau("hi", p, 0, 1, iv(0, 0));
    let lo = b.tau("lo", q, 0, 1, iv(0, 0));
    b.priority(hi, lo);
    let t = b.finish().unwrap();
    let ex = Explorer::new(&t);
    assert_eq!(ex.firable(&ex.initial_class()), vec![hi]);
}

#[test]
fn self_loop_regenerates_domain() {
    let mut b = TtsBuilder::new();
    let p = b.instance("p", &["a"]);
    b.tau("a", p, 0, 0, iv(2, 3));
    let t = b.finish().unwrap();
    let g = build_graph(&t, &Limits::default()).unwrap();
    assert_eq!((g.len(), g.edge_count()), (1, 1));
    let ex = Explorer::new(&t);
    assert_eq!(ex.delay_bounds(g.class(0), 0).unwrap().to_string(), "[2,3]");

    let mut b = TtsBuilder::new();
    let p = b.instance("p", &["a"]);
    b.tau("a", p, 0, 0, TimeInterval::from_lower(0));
    let g = build_graph(&b.finish().unwrap(), &Limits::default()).unwrap();
    assert_eq!((g.len(), g.edge_count()), (1, 1));
}

#[test]
fn persistent_transition_keeps_elapsed_time() {
    let t = independent(&[(1, 2), (2, 3)]);
    let ex = Explorer::new(&t);
    let c0 = ex.initial_class();
    let succ = ex.successor(&c0, 0).unwrap();
    assert_eq!(succ.len(), 1);
    assert_eq!(ex.delay_bounds(&succ[0], 1).unwrap().to_string(), "[0,2]");
    // b fired from c0 leaves a with at most 1 - 2 < 0 remaining: not firable there
    let after_b = ex.successor(&c0, 1).unwrap();
    assert_eq!(
        ex.delay_bounds(&after_b[0], 0).unwrap().to_string(),
        "[0,0]"
    );
    let o = oracle_explore(&t, Rat::new(1, 2)).unwrap();
    let g = build_graph(&t, &Limits::default()).unwrap();
    let states: BTreeSet<_> = g.classes.iter().map(|c| c.state.clone()).collect();
    assert_eq!(states, o.states);
    assert_eq!(firable_by_state(&g), o.firable);
}

#[test]
fn firing_non_firable_is_rejected() {
    let t = independent(&[(2, 3), (5, 6)]);
    let ex = Explorer::new(&t);
    assert!(matches!(
        ex.successor(&ex.initial_class(), 1),
        Err(ClassError::NotFirable(1))
    ));
}

#[test]
fn periodic_graph() {
    let p = parse_program(include_str!("../models/periodic.fcr")).unwrap();
    let t = compile(&p).unwrap();
    let g = build_graph(&t, &Limits::default()).unwrap();
    assert_eq!((g.len(), g.edge_count(), g.dead().count()), (4, 4, 0));
    let err = t.instances[0]
        .states
        .iter()
        .position(|s| s == "sched_error")
        .unwrap() as u16;
    assert!(g.classes.iter().all(|c| c.state.locs[0] != err));
}

#[test]
fn parallel_numbering_matches_sequential() {
    let tasks = parse_task_table(EXAMPLE_TASKS).unwrap();
    let t = compile(&build_tasksystem(&tasks, EtMode::Interval).unwrap()).unwrap();
    let seq = build_graph(&t, &Limits::default()).unwrap();
    let par = build_graph(
        &t,
        &Limits {
            threads: 4,
            ..Limits::default()
        },
    )
    .unwrap();
    assert_eq!(seq.classes, par.classes);
    assert_eq!(seq.succ, par.succ);
    assert_eq!(seq.dump(&t), par.dump(&t));
}

#[test]
fn class_limit_returns_partial_graph() {
    let tasks = parse_task_table(EXAMPLE_TASKS).unwrap();
    let t = compile(&build_tasksystem(&tasks, EtMode::Interval).unwrap()).unwrap();
    match build_graph(
        &t,
        &Limits {
            max_classes: 5,
            ..Limits::default()
        },
    ) {
        Err(ExploreError::LimitExceeded {
            limit: Limit::Classes(5),
            partial,
        }) => {
            assert!(partial.expanded < partial.len());
            assert_eq!(partial.succ.len(), partial.len());
        }
        other => panic!("{other:?}"),
    }
    let r = build_graph(
        &t,
        &Limits {
            time_budget: Some(Duration::ZERO),
            ..Limits::default()
        },
    );
    assert!(matches!(
        r,
        Err(ExploreError::LimitExceeded {
            limit: Limit::Time(_),
            ..
        })
    ));
}

#[test]
fn oracle_point_delays() {
    let t = independent(&[(2, 3)]);
    let seqs = oracle_sequences(&t, Rat::from_integer(1), 1).unwrap();
    assert_eq!(seqs, BTreeSet::from([vec![], vec![0]]));
}

#[test]
fn open_bound_needs_finer_grid() {
    let mut b = TtsBuilder::new();
    let p = b.instance("p", &["a", "b"]);
    b.tau(
        "t",
        p,
        0,
        1,
        TimeInterval::new(Rat::from_integer(0), true, Some(Rat::from_integer(1)), true).unwrap(),
    );
    let t = b.finish().unwrap();
    assert_eq!(
        oracle_explore(&t, Rat::from_integer(1)),
        Err(OracleError::GranularityTooCoarse {
            suggestion: Rat::new(1, 2)
        })
    );
    let o = oracle_explore_refining(&t, Rat::from_integer(1), 3).unwrap();
    assert_eq!(o.granularity, Rat::new(1, 2));
    assert_eq!(o.states.len(), 2);
}

#[test]
fn firing_sequences_match_oracle() {
    let mut rng = StdRng::seed_from_u64(11);
    for k in 0..100 {
        let t = random_tts(&mut rng, &RandomOptions::default());
        let g = build_graph(&t, &Limits::default()).unwrap();
        let o = oracle_sequences(&t, Rat::new(1, 8), 8).unwrap();
        assert_eq!(sequences(&g, 8), o, "case {k}");
    }
}

#[test]
fn broken_graph_is_detected() {
    let t = independent(&[(1, 2), (2, 3)]);
    let mut g = build_graph(&t, &Limits::default()).unwrap();
    let o = oracle_explore(&t, Rat::new(1, 2)).unwrap();
    assert_eq!(firable_by_state(&g), o.firable);
    g.succ[g.initial].pop();
    assert_ne!(firable_by_state(&g), o.firable);
}
