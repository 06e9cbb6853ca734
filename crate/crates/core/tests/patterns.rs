use tempock::ast::{Pattern, Program};
use tempock::classgraph::Limits;
use tempock::patterns::{
    block_response, check_noninterference, check_property, compile_pattern, resolve_observable,
    resolve_pattern, CheckOptions, Outcome, PatternError, Verdict, VerdictRule,
};
use tempock::tts::Atom;
use tempock::{compile, parse_program, parse_property, Tts};

fn periodic() -> (Program, Tts) {
    let p = parse_program(include_str!("../models/periodic.fcr")).unwrap();
    let t = compile(&p).unwrap();
    (p, t)
}

fn check(text: &str) -> Outcome {
    let (p, t) = periodic();
    let d = parse_property(
        &format!("property x is {text}"),
        &[("T".to_string(), 20)].into_iter().collect(),
    )
    .unwrap();
    check_property(&p, &t, &d, &CheckOptions::default()).unwrap()
}

fn resolve_err(text: &str) -> PatternError {
    let (p, t) = periodic();
    let d = parse_property(&format!("property x is {text}"), &Default::default()).unwrap();
    resolve_pattern(&p, &t, &d.body)
        .and_then(|r| compile_pattern(&r, &t).map(|_| ()))
        .unwrap_err()
}

#[test]
fn periodic_requirements_hold() {
    let (p, t) = periodic();
    for d in &p.properties {
        let o = check_property(&p, &t, d, &CheckOptions::default()).unwrap();
        assert_eq!(o.verdict, Verdict::Holds, "{}", d.name);
    }
}

#[test]
fn observable_resolution() {
    let (p, t) = periodic();
    let d = parse_property("property x is ltl <> main/1/event c", &Default::default()).unwrap();
    let Pattern::Ltl(tempock::ast::Formula::Eventually(inner)) = &d.body else {
        panic!()
    };
    let tempock::ast::Formula::Atom(o) = &**inner else {
        panic!()
    };
    assert_eq!(
        resolve_observable(&p, &t, o).unwrap(),
        Atom::Event(t.port_by_name("main/c").unwrap())
    );
    assert!(matches!(
        resolve_err("absent (main/9/event c)"),
        PatternError::UnknownPath(_)
    ));
    assert!(matches!(
        resolve_err("absent (main/1/event zz)"),
        PatternError::UnknownPort { .. }
    ));
    assert!(matches!(
        resolve_err("absent (main/1/state zz)"),
        PatternError::UnknownState { .. }
    ));
    assert!(matches!(
        resolve_err("absent (main/state s0)"),
        PatternError::NotAProcess(_)
    ));
    assert!(matches!(
        resolve_err("(main/1/event c) leadsto dead within [0;1]"),
        PatternError::DeadInTimedPattern
    ));
    assert!(matches!(
        resolve_err("(main/1/event c) leadsto (main/1/event d) within [0;...["),
        PatternError::UnsupportedInterval(_)
    ));
}

#[test]
fn absent_state_needs_no_observer() {
    let (p, t) = periodic();
    let d = &p.properties.iter().find(|d| d.name == "req4").unwrap().body;
    let obs = compile_pattern(&resolve_pattern(&p, &t, d).unwrap(), &t).unwrap();
    assert!(obs.monitor.is_none());
    assert!(matches!(obs.rule, VerdictRule::Ltl(_)));
    assert!(check_noninterference(&t, &obs, 10, &Limits::default()).unwrap());
}

#[test]
fn leadsto_uses_safety_observer() {
    let (p, t) = periodic();
    let d = &p.properties.iter().find(|d| d.name == "req2").unwrap().body;
    let obs = compile_pattern(&resolve_pattern(&p, &t, d).unwrap(), &t).unwrap();
    assert!(obs.monitor.is_some());
    assert!(matches!(obs.rule, VerdictRule::Safety(_)));
    assert!(check_noninterference(&t, &obs, 10, &Limits::default()).unwrap());
    assert!(!check_noninterference(&t, &block_response(&obs), 10, &Limits::default()).unwrap());
}

#[test]
fn reverse_response_holds() {
    assert_eq!(
        check("(main/1/event d) leadsto (main/1/event c) within [0; T]").verdict,
        Verdict::Holds
    );
}

#[test]
fn tight_windows_are_violated() {
    let o = check("(main/1/event c) leadsto (main/1/event d) within [0; 19]");
    assert_eq!(o.verdict, Verdict::Violated);
    let text = o.counterexample.unwrap().render(&o.graph, &o.product.tts);
    assert!(
        text.contains("deadline") && text.contains("]19,20]"),
        "{text}"
    );

    assert_eq!(
        check("absent (main/1/event d) after (main/1/event d) within ]0; T]").verdict,
        Verdict::Violated
    );
    assert_eq!(
        check("absent (main/1/event d) after (main/1/event d) within [1; 19]").verdict,
        Verdict::Holds
    );
    assert_eq!(
        check("(main/1/event c) leadsto (main/1/event d) within [21; 30]").verdict,
        Verdict::Violated
    );
    assert_eq!(
        check("(main/1/event c) leadsto (main/1/event d) within [20; 30]").verdict,
        Verdict::Holds
    );
    assert_eq!(
        check("(main/1/event c) leadsto (main/1/event d) within ]20; 30]").verdict,
        Verdict::Violated
    );
}

#[test]
fn ltl_response_and_deadlock() {
    assert_eq!(
        check("ltl [] (main/1/event dl => <> main/1/event d)").verdict,
        Verdict::Holds
    );
    assert_eq!(check("NoGlobalDeadlock").verdict, Verdict::Holds);
    assert_eq!(
        check("Resettable (main/1/state s0)").verdict,
        Verdict::Holds
    );
    assert_eq!(
        check("Unreachable (main/1/state sched_error)").verdict,
        Verdict::Holds
    );
    let o = check("Unreachable (main/1/value (st = p_idle))");
    assert_eq!(o.verdict, Verdict::Violated);
    assert_eq!(o.counterexample.unwrap().lasso.prefix.len(), 1);
}

#[test]
fn limits_give_unknown() {
    let (p, t) = periodic();
    let d = &p.properties[1];
    let opts = CheckOptions {
        limits: Limits {
            max_classes: 2,
            ..Limits::default()
        },
        max_product: None,
    };
    assert!(matches!(
        check_property(&p, &t, d, &opts).unwrap().verdict,
        Verdict::Unknown(_)
    ));
}
