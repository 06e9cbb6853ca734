//! One line per acceptance criterion: `criterion N: PASS|FAIL ...`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::SeedableRng;

use tempock::ast::{Formula, Pattern, Program};
use tempock::classgraph::{build_graph, ClassGraph, Limits};
use tempock::library::{
    check_obligations, check_schedulable, dedicated_tasksystem_source, instantiate_periodic,
    parse_task_table, scaling_tasks, EtMode, EXAMPLE_TASKS,
};
use tempock::ltl::{self, eval_lasso, invariant_operand, state_holds, Lasso, LtlVerdict};
use tempock::oracle::{oracle_explore, oracle_replay, OracleError};
use tempock::patterns::{
    block_response, check_noninterference, check_pattern, check_property, compile_pattern,
    resolve_pattern, CheckOptions, Outcome, ResolvedPattern, Verdict, VerdictRule,
};
use tempock::random::{random_tts, RandomOptions};
use tempock::time::Rat;
use tempock::tts::{eval_formula, Atom, DiscreteState, TransId};
use tempock::{compile, parse_program, parse_property, Tts};

fn report(n: u32, pass: bool, detail: String) {
    let line = format!(
        "criterion {n}: {} {detail}\n",
        if pass { "PASS" } else { "FAIL" }
    );
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass, "criterion {n} failed: {detail}");
}

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models")
}

fn corpus() -> Vec<(String, Program)> {
    let mut files: Vec<_> = std::fs::read_dir(models_dir().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "fcr"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (
                name,
                parse_program(&std::fs::read_to_string(&p).unwrap()).unwrap(),
            )
        })
        .collect()
}

fn periodic() -> Program {
    parse_program(include_str!("../models/periodic.fcr")).unwrap()
}

/// A violated outcome replays through the discrete-time oracle and its
/// lasso refutes the property.
fn replays(o: &Outcome) -> Result<(), String> {
    let Some(cex) = &o.counterexample else {
        return Err("no counterexample".into());
    };
    let tts = &o.product.tts;
    let lasso: &Lasso = &cex.lasso;
    let mut seq = lasso.transitions();
    let cyc: Vec<TransId> = lasso.cycle.iter().filter_map(|s| s.transition).collect();
    seq.extend(&cyc);
    let mut g = Rat::new(1, 2);
    let mut feasible = false;
    for _ in 0..4 {
        match oracle_replay(tts, g, &seq) {
            Ok(true) => {
                feasible = true;
                break;
            }
            Ok(false) | Err(OracleError::GranularityTooCoarse { .. }) => g /= 2,
            Err(e) => return Err(e.to_string()),
        }
    }
    if !feasible {
        return Err(format!("sequence of {} steps not replayable", seq.len()));
    }
    match &o.product.rule {
        VerdictRule::Safety(bad) => {
            let last = lasso
                .steps()
                .last()
                .map(|s| s.target)
                .unwrap_or(o.graph.initial);
            if !bad.holds(&o.graph.class(last).state) {
                return Err("witness does not end in a bad state".into());
            }
        }
        VerdictRule::Ltl(f) if lasso.cycle.is_empty() => {
            let p = invariant_operand(f).ok_or("finite witness for a non-invariant")?;
            let last = lasso
                .steps()
                .last()
                .map(|s| s.target)
                .unwrap_or(o.graph.initial);
            if !state_holds(&o.graph, p, last) {
                return Err("witness does not end in a bad state".into());
            }
        }
        VerdictRule::Ltl(f) => {
            if eval_lasso(&o.graph, tts, f, lasso) {
                return Err("lasso satisfies the property".into());
            }
        }
    }
    if cex
        .times
        .iter()
        .zip(lasso.steps())
        .any(|(t, s)| s.transition.is_some() && t.is_none())
    {
        return Err("missing timestamps".into());
    }
    Ok(())
}

fn check_decl(prog: &Program, text: &str) -> Outcome {
    let tts = compile(prog).unwrap();
    let scope = [("T".to_string(), 20i64)].into_iter().collect();
    let decl = parse_property(text, &scope).unwrap();
    check_property(prog, &tts, &decl, &CheckOptions::default())
        .unwrap_or_else(|e| panic!("{text}: {e}"))
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_1_obligations() {
    let start = Instant::now();
    let results = check_obligations(20, &CheckOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let expected_period: BTreeMap<&str, i64> = [
        ("P0a", 20),
        ("P0b", 20),
        ("P1", 20),
        ("P2", 1),
        ("P3", 1),
        ("P4", 20),
    ]
    .into_iter()
    .collect();
    let holds = results
        .iter()
        .filter(|r| r.verdict == Verdict::Holds)
        .count();
    let periods_ok = results
        .iter()
        .all(|r| expected_period.get(r.id.as_str()) == Some(&r.period));
    let detail: Vec<String> = results
        .iter()
        .map(|r| format!("{}@T={}:{}", r.id, r.period, r.verdict.as_str()))
        .collect();
    report(
        1,
        holds == 6 && results.len() == 6 && periods_ok && secs < 10.0,
        format!("{} in {secs:.2}s", detail.join(" ")),
    );
}

#[test]
fn criterion_2_three_tasks() {
    let start = Instant::now();
    let tasks = parse_task_table(EXAMPLE_TASKS).unwrap();
    let det = check_schedulable(&tasks, EtMode::Deterministic, &CheckOptions::default()).unwrap();
    let int = check_schedulable(&tasks, EtMode::Interval, &CheckOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let has_cex = int.outcome.counterexample.is_some();
    report(
        2,
        det.schedulable == Some(true) && int.schedulable == Some(false) && has_cex && secs < 60.0,
        format!(
            "deterministic={:?} interval={:?} counterexample={has_cex} in {secs:.2}s",
            det.schedulable, int.schedulable
        ),
    );
}

#[test]
fn criterion_3_periodic_requirements() {
    let start = Instant::now();
    let bare = periodic();
    let env = instantiate_periodic("main", 20, true).unwrap();
    let req3 = check_decl(
        &bare,
        "property req3 is absent (main/1/event d) after (main/1/event d) within ]0; T[",
    );
    let req4_bare = check_decl(&bare, "property req4 is absent (main/1/state sched_error)");
    let req4_env = check_decl(&env, "property req4 is absent (main/t/state sched_error)");
    let req2 = check_decl(
        &bare,
        "property req2 is (main/1/event c) leadsto (main/1/event d) within [0; T]",
    );
    let req2r = check_decl(
        &bare,
        "property req2r is (main/1/event d) leadsto (main/1/event c) within [0; T]",
    );
    let req2_env = check_decl(
        &env,
        "property req2 is (main/t/event c) leadsto (main/t/event d) within [0; 20]",
    );
    let req2r_env = check_decl(
        &env,
        "property req2r is (main/t/event d) leadsto (main/t/event c) within [0; 20]",
    );
    let secs = start.elapsed().as_secs_f64();
    let all = [
        &req2, &req2r, &req3, &req4_bare, &req2_env, &req2r_env, &req4_env,
    ];
    let decided = all
        .iter()
        .all(|o| !matches!(o.verdict, Verdict::Unknown(_)));
    let cex_ok = all
        .iter()
        .filter(|o| o.verdict == Verdict::Violated)
        .all(|o| o.counterexample.is_some());
    report(
        3,
        req3.verdict == Verdict::Holds && decided && cex_ok && secs < 30.0,
        format!(
            "req3={} req4(immediate completion)={} req4(late-completing job)={} req2(c~>d)={} req2(d~>c)={} \
             with job: req2(c~>d)={} req2(d~>c)={} in {secs:.2}s",
            req3.verdict.as_str(),
            req4_bare.verdict.as_str(),
            req4_env.verdict.as_str(),
            req2.verdict.as_str(),
            req2r.verdict.as_str(),
            req2_env.verdict.as_str(),
            req2r_env.verdict.as_str(),
        ),
    );
}

// ---------------------------------------------------------------------------

fn firable_by_state(g: &ClassGraph) -> BTreeMap<DiscreteState, BTreeSet<TransId>> {
    let mut out: BTreeMap<DiscreteState, BTreeSet<TransId>> = BTreeMap::new();
    for (i, c) in g.classes.iter().enumerate() {
        out.entry(c.state.clone())
            .or_default()
            .extend(g.succ[i].iter().map(|e| e.0));
    }
    out
}

/// Safety patterns checked on a random system: deadlock freedom and
/// unreachability of every location of every instance.
fn safety_patterns(tts: &Tts) -> Vec<ResolvedPattern> {
    let mut out = vec![Pattern::NoGlobalDeadlock];
    for (i, inst) in tts.instances.iter().enumerate() {
        for l in 0..inst.states.len() {
            out.push(Pattern::Unreachable(Formula::Atom(Atom::State(
                i, l as u16,
            ))));
        }
    }
    out
}

fn oracle_safety(p: &ResolvedPattern, o: &tempock::oracle::OracleResult) -> bool {
    match p {
        Pattern::NoGlobalDeadlock => o.dead.is_empty(),
        Pattern::Unreachable(f) => !o.states.iter().any(|s| eval_formula(f, None, s, false)),
        _ => unreachable!(),
    }
}

fn seed() -> u64 {
    std::env::var("TEMPOCK_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(7)
}

/// Random systems with their violated safety outcomes.
fn random_suite(cases: usize) -> (usize, [usize; 3], Vec<Outcome>) {
    let mut rng = StdRng::seed_from_u64(seed());
    let mut mismatches = [0; 3];
    let mut checks = 0;
    let mut violated = Vec::new();
    for _ in 0..cases {
        let tts = random_tts(&mut rng, &RandomOptions::default());
        let g = build_graph(&tts, &Limits::default()).unwrap();
        let o = oracle_explore(&tts, Rat::new(1, 2)).unwrap();
        let states: BTreeSet<_> = g.classes.iter().map(|c| c.state.clone()).collect();
        mismatches[0] += usize::from(states != o.states);
        mismatches[1] += usize::from(firable_by_state(&g) != o.firable);
        for p in safety_patterns(&tts) {
            checks += 1;
            let out = check_pattern(&tts, &p, &CheckOptions::default()).unwrap();
            let holds = out.verdict == Verdict::Holds;
            mismatches[2] += usize::from(holds != oracle_safety(&p, &o));
            if out.verdict == Verdict::Violated {
                violated.push(out);
            }
        }
    }
    (checks, mismatches, violated)
}

#[test]
fn criterion_4_oracle_equivalence() {
    let start = Instant::now();
    let cases = 300;
    let (checks, m, _) = random_suite(cases);
    let secs = start.elapsed().as_secs_f64();
    report(
        4,
        m == [0, 0, 0] && secs < 300.0,
        format!(
            "{cases} systems (seed {}), {checks} safety verdicts; mismatches states={} firable={} safety={} in {secs:.2}s",
            seed(),
            m[0],
            m[1],
            m[2]
        ),
    );
}

// ---------------------------------------------------------------------------

/// Direct graph evaluation of a pattern on the bare system graph.
fn direct(g: &ClassGraph, p: &ResolvedPattern) -> bool {
    let sat = |i: usize, f: &Formula<Atom>| eval_formula(f, None, &g.class(i).state, false);
    match p {
        Pattern::NoGlobalDeadlock => g.dead().next().is_none(),
        Pattern::Unreachable(f) => !(0..g.len()).any(|i| sat(i, f)),
        Pattern::Resettable(f) => {
            // violated iff the classes outside `f` contain a dead class or a cycle
            let bad: Vec<bool> = (0..g.len()).map(|i| !sat(i, f)).collect();
            if (0..g.len()).any(|i| bad[i] && g.is_dead(i)) {
                return false;
            }
            let mut color = vec![0u8; g.len()];
            for root in 0..g.len() {
                if !bad[root] || color[root] != 0 {
                    continue;
                }
                let mut stack = vec![(root, 0usize)];
                color[root] = 1;
                while let Some(&mut (v, ref mut k)) = stack.last_mut() {
                    if let Some(&(_, w)) = g.succ[v].get(*k) {
                        *k += 1;
                        if !bad[w] {
                            continue;
                        }
                        match color[w] {
                            0 => {
                                color[w] = 1;
                                stack.push((w, 0));
                            }
                            1 => return false,
                            _ => {}
                        }
                    } else {
                        color[v] = 2;
                        stack.pop();
                    }
                }
            }
            true
        }
        _ => unreachable!(),
    }
}

/// Pattern/LTL verdict pairs on the corpus plus violated outcomes.
fn corpus_suite() -> (usize, usize, Vec<String>, Vec<Outcome>) {
    let opts = CheckOptions::default();
    let mut models = 0;
    let mut agree = 0;
    let mut bad = Vec::new();
    let mut violated = Vec::new();
    for (name, prog) in corpus() {
        models += 1;
        let tts = compile(&prog).unwrap();
        let g = build_graph(&tts, &Limits::default()).unwrap();
        for pat in ["nd", "unr", "rst"] {
            let find = |n: &str| prog.properties.iter().find(|p| p.name == n).unwrap();
            let pd = find(pat);
            let ld = find(&format!("{pat}_ltl"));
            let po = check_property(&prog, &tts, pd, &opts).unwrap();
            let lo = check_property(&prog, &tts, ld, &opts).unwrap();
            let d = direct(&g, &resolve_pattern(&prog, &tts, &pd.body).unwrap());
            let Pattern::Ltl(f) = resolve_pattern(&prog, &tts, &ld.body).unwrap() else {
                panic!("{name}: not ltl")
            };
            let nested = matches!(
                ltl::check(&g, &tts, &f, 1_000_000).unwrap(),
                LtlVerdict::Holds
            );
            let same =
                po.verdict == lo.verdict && (po.verdict == Verdict::Holds) == d && d == nested;
            if same {
                agree += 1;
            } else {
                bad.push(format!(
                    "{name}/{pat}: pattern={} ltl={} graph={d} nested-dfs={nested}",
                    po.verdict.as_str(),
                    lo.verdict.as_str()
                ));
            }
            for o in [po, lo] {
                if o.verdict == Verdict::Violated {
                    violated.push(o);
                }
            }
        }
    }
    (models, agree, bad, violated)
}

#[test]
fn criterion_5_pattern_ltl_agreement() {
    let (models, agree, bad, violated) = corpus_suite();
    let total = models * 3;
    report(
        5,
        models >= 10 && agree == total,
        format!(
            "{models} models, {agree}/{total} pattern verdicts agree ({} violated) {}",
            violated.len() / 2,
            bad.join("; ")
        ),
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_6_observer_noninterference() {
    let limits = Limits::default();
    let mut cases: Vec<(String, Program)> = corpus()
        .into_iter()
        .filter(|(_, p)| p.properties.iter().any(|d| d.name == "lt"))
        .collect();
    cases.push(("periodic".into(), periodic()));
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut control_caught = 0;
    for (name, prog) in &cases {
        let tts = compile(prog).unwrap();
        for d in &prog.properties {
            let p = resolve_pattern(prog, &tts, &d.body).unwrap();
            let obs = compile_pattern(&p, &tts).unwrap();
            if obs.monitor.is_none() {
                continue;
            }
            checked += 1;
            if !check_noninterference(&tts, &obs, 10, &limits).unwrap() {
                failures.push(format!("{name}/{}", d.name));
            }
            if !check_noninterference(&tts, &block_response(&obs), 10, &limits).unwrap() {
                control_caught += 1;
            }
        }
    }
    report(
        6,
        checked >= 5 && failures.is_empty() && control_caught > 0,
        format!(
            "{checked} observers identical at depth 10; blocking control detected in {control_caught} {}",
            failures.join(" ")
        ),
    );
}

// ---------------------------------------------------------------------------

fn peak_rss_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

#[test]
fn criterion_7_scalability() {
    let mut n = 6;
    let limits = Limits {
        time_budget: Some(Duration::from_secs(120)),
        threads: std::thread::available_parallelism().map_or(1, |p| p.get().min(2)),
        ..Limits::default()
    };
    loop {
        let src = dedicated_tasksystem_source(&scaling_tasks(n), EtMode::Interval).unwrap();
        let tts = compile(&parse_program(&src).unwrap()).unwrap();
        let start = Instant::now();
        let g = build_graph(&tts, &limits);
        let secs = start.elapsed().as_secs_f64();
        match g {
            Ok(g) if g.len() > 100_000 => {
                let est = g.memory_estimate() as u64;
                let rss = peak_rss_bytes().unwrap_or(est);
                let mem = est.max(rss);
                report(
                    7,
                    secs < 120.0 && mem < 1 << 30,
                    format!(
                        "{n} tasks: {} classes {} edges in {secs:.2}s, graph {} MiB, peak rss {} MiB",
                        g.len(),
                        g.edge_count(),
                        est >> 20,
                        rss >> 20
                    ),
                );
                return;
            }
            Ok(g) if n < 12 => {
                println!("  {n} tasks: {} classes in {secs:.2}s", g.len());
                n += 1;
            }
            Ok(g) => {
                return report(
                    7,
                    false,
                    format!("{n} tasks only reach {} classes", g.len()),
                )
            }
            Err(e) => return report(7, false, format!("{n} tasks: {e}")),
        }
    }
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_8_counterexamples_replay() {
    let mut outcomes: Vec<(String, Outcome)> = Vec::new();
    for r in check_obligations(20, &CheckOptions::default()).unwrap() {
        outcomes.push((format!("obligation {}", r.id), r.outcome));
    }
    let tasks = parse_task_table(EXAMPLE_TASKS).unwrap();
    for mode in [EtMode::Deterministic, EtMode::Interval] {
        let r = check_schedulable(&tasks, mode, &CheckOptions::default()).unwrap();
        outcomes.push((format!("tasks {mode:?}"), r.outcome));
    }
    let env = instantiate_periodic("main", 20, true).unwrap();
    for text in [
        "property req4 is absent (main/t/state sched_error)",
        "property req2r is (main/t/event d) leadsto (main/t/event c) within [0; 20]",
        "property req2 is (main/t/event c) leadsto (main/t/event d) within [0; 20]",
    ] {
        outcomes.push(("periodic with job".into(), check_decl(&env, text)));
    }
    let bare = periodic();
    for d in &bare.properties {
        let tts = compile(&bare).unwrap();
        outcomes.push((
            d.name.clone(),
            check_property(&bare, &tts, d, &CheckOptions::default()).unwrap(),
        ));
    }
    let mut violated: Vec<(String, Outcome)> = outcomes
        .into_iter()
        .filter(|(_, o)| o.verdict == Verdict::Violated)
        .collect();
    violated.extend(
        random_suite(150)
            .2
            .into_iter()
            .map(|o| ("random".to_string(), o)),
    );
    violated.extend(
        corpus_suite()
            .3
            .into_iter()
            .map(|o| ("corpus".to_string(), o)),
    );
    let mut failures = Vec::new();
    for (name, o) in &violated {
        if let Err(e) = replays(o) {
            failures.push(format!("{name}: {e}"));
        }
    }
    report(
        8,
        !violated.is_empty() && failures.is_empty(),
        format!(
            "{} violated verdicts, {} replayed {}",
            violated.len(),
            violated.len() - failures.len(),
            failures.join("; ")
        ),
    );
}
