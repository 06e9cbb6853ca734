use std::collections::HashMap;

use proptest::prelude::*;

use tempock::ast::*;
use tempock::pretty::pretty_print;
use tempock::{parse_program, parse_property, ParseError};

const PERIODIC: &str = include_str!("../models/periodic.fcr");

fn scope() -> HashMap<String, i64> {
    [("T".to_string(), 20)].into_iter().collect()
}

#[test]
fn periodic_structure() {
    let p = parse_program(PERIODIC).unwrap();
    assert_eq!(p.processes.len(), 1);
    let proc_ = &p.processes[0];
    assert_eq!(proc_.name, "periodic");
    assert_eq!(proc_.states, ["s0", "sched_error"]);
    assert_eq!(proc_.ports, ["d", "c", "dl", "w"]);
    assert_eq!(p.components.len(), 1);
    assert_eq!(p.components[0].name, "main");
    assert_eq!(p.const_value("T"), Some(20));
    assert_eq!(p.properties.len(), 4);
    assert_eq!(p.root_name(), "main");
}

#[test]
fn empty_input_is_empty_program() {
    let p = parse_program("").unwrap();
    assert!(p.processes.is_empty() && p.components.is_empty() && p.properties.is_empty());
    assert_eq!(pretty_print(&p), "\n");
}

#[test]
fn truncated_port_list() {
    let e = parse_program("process periodic [d").unwrap_err();
    let ParseError::Syntax { expected, .. } = &e else {
        panic!("{e}")
    };
    assert!(expected.iter().any(|x| x.contains(':')), "{e}");
}

#[test]
fn error_positions() {
    let e = parse_program("process p is\n  states s\n  from s to\n").unwrap_err();
    assert_eq!(e.span().start_line, 4);
    let e = parse_program("process p is\n  states s\n  from s while x; to s\n").unwrap_err();
    assert!(matches!(e, ParseError::NotInSubset { .. }), "{e}");
    assert_eq!(e.span().start_line, 3);
}

#[test]
fn req3_interval_is_open_open() {
    let d = parse_property(
        "property req3 is absent (main/1/event d) after (main/1/event d) within ]0; T[",
        &scope(),
    )
    .unwrap();
    let Pattern::AbsentAfter { within, .. } = &d.body else {
        panic!("{:?}", d.body)
    };
    assert!(within.lower_strict && within.upper_strict);
    assert_eq!(within.lower, BoundExpr::Lit(0));
    assert_eq!(
        within
            .resolve(|s| scope().get(s).copied())
            .unwrap()
            .to_string(),
        "]0,20["
    );
}

#[test]
fn req4_is_plain_absent() {
    let d = parse_property(
        "property req4 is absent (main/1/state sched_error)",
        &scope(),
    )
    .unwrap();
    let Pattern::Absent(Formula::Atom(Observable::State { state, .. })) = &d.body else {
        panic!("{:?}", d.body)
    };
    assert_eq!(state, "sched_error");
}

#[test]
fn p4_is_point_leadsto() {
    let d = parse_property(
        "property P4 is t/event dl leadsto t/event d within [0,0]",
        &scope(),
    )
    .unwrap();
    let Pattern::LeadsTo { within, .. } = &d.body else {
        panic!("{:?}", d.body)
    };
    assert_eq!(within, &IntervalExpr::closed(0, 0));
}

#[test]
fn unbound_interval_symbol() {
    let e = parse_property(
        "property q is absent (a/event d) after (a/event d) within [0; U]",
        &scope(),
    )
    .unwrap_err();
    assert!(
        matches!(e, ParseError::UnboundIntervalSymbol { ref name, .. } if name == "U"),
        "{e}"
    );
}

#[test]
fn ltl_precedence() {
    // unary operators bind tighter than `and`, which binds tighter than `=>`
    let d = parse_property(
        "property f is ltl [] a/event x => <> a/event y and a/event z",
        &scope(),
    )
    .unwrap();
    let Pattern::Ltl(Formula::Implies(lhs, rhs)) = &d.body else {
        panic!("{:?}", d.body)
    };
    assert!(matches!(**lhs, Formula::Always(_)), "{lhs:?}");
    let Formula::And(a, _) = &**rhs else {
        panic!("{rhs:?}")
    };
    assert!(matches!(**a, Formula::Eventually(_)), "{a:?}");
}

#[test]
fn periodic_round_trip() {
    let p = parse_program(PERIODIC).unwrap();
    let text = pretty_print(&p);
    assert_eq!(parse_program(&text).unwrap(), p);
    assert_eq!(pretty_print(&parse_program(&text).unwrap()), text);
}

// random ASTs -----------------------------------------------------------------

fn ident() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,4}".prop_filter("keyword", |s| !tempock::parser::is_reserved(s))
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..50).prop_map(Expr::Int),
        any::<bool>().prop_map(Expr::Bool),
        ident().prop_map(Expr::Ident),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            inner
                .clone()
                .prop_map(|e| Expr::Unary(UnOp::Not, Box::new(e))),
            (
                prop::sample::select(vec![
                    BinOp::Add,
                    BinOp::Sub,
                    BinOp::Eq,
                    BinOp::Ne,
                    BinOp::Lt,
                    BinOp::Le,
                    BinOp::Gt,
                    BinOp::Ge,
                    BinOp::And,
                    BinOp::Or
                ]),
                inner.clone(),
                inner
            )
                .prop_map(|(op, a, b)| Expr::Binary(op, Box::new(a), Box::new(b))),
        ]
    })
}

fn interval() -> impl Strategy<Value = IntervalExpr> {
    (
        0i64..5,
        0i64..5,
        any::<bool>(),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(a, d, ls, us, inf)| IntervalExpr {
            lower: BoundExpr::Lit(a),
            lower_strict: ls && (inf || d > 0),
            upper: (!inf).then_some(BoundExpr::Lit(a + d)),
            upper_strict: inf || (us && d > 0),
        })
}

fn simple_stmt() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        Just(Stmt::Null),
        ident().prop_map(Stmt::Sync),
        (ident(), expr()).prop_map(|(v, e)| Stmt::Assign(v, e)),
        ident().prop_map(Stmt::Any),
        interval().prop_map(Stmt::Wait),
        expr().prop_map(Stmt::On),
    ]
}

fn terminal() -> impl Strategy<Value = Stmt> {
    prop_oneof![ident().prop_map(Stmt::To), Just(Stmt::Loop)]
}

fn seq(parts: Vec<Stmt>) -> Stmt {
    if parts.len() == 1 {
        parts.into_iter().next().unwrap()
    } else {
        Stmt::Seq(parts)
    }
}

fn stmt() -> BoxedStrategy<Stmt> {
    let body = (prop::collection::vec(simple_stmt(), 0..3), terminal()).prop_map(|(mut v, t)| {
        v.push(t);
        seq(v)
    });
    body.prop_recursive(2, 16, 3, |inner| {
        prop_oneof![
            (
                prop::collection::vec(simple_stmt(), 0..2),
                prop::collection::vec(inner.clone(), 1..3),
                prop::collection::vec(inner.clone(), 0..2)
            )
                .prop_map(|(mut pre, branches, unless)| {
                    pre.push(Stmt::Select { branches, unless });
                    seq(pre)
                }),
            (expr(), inner.clone(), inner).prop_map(|(c, a, b)| Stmt::If(
                c,
                Box::new(a),
                Box::new(b)
            )),
        ]
    })
    .boxed()
}

fn data_type() -> impl Strategy<Value = DataType> {
    prop_oneof![
        Just(DataType::Bool),
        (0i64..3, 0i64..5).prop_map(|(a, d)| DataType::Range(a, a + d)),
        ident().prop_map(DataType::Named),
    ]
}

fn process() -> impl Strategy<Value = ProcessDecl> {
    (
        ident(),
        prop::collection::vec(ident(), 0..3),
        prop::collection::vec((ident(), data_type(), any::<bool>()), 0..2),
        prop::collection::vec(ident(), 1..3),
        prop::collection::vec((ident(), data_type(), prop::option::of(expr())), 0..2),
        prop::collection::vec((ident(), stmt()), 1..3),
    )
        .prop_map(|(name, ports, vars, states, locals, from)| ProcessDecl {
            name,
            ports,
            vars: vars
                .into_iter()
                .map(|(name, ty, write)| VarParam {
                    name,
                    ty,
                    read: true,
                    write,
                })
                .collect(),
            states,
            locals: locals
                .into_iter()
                .map(|(name, ty, init)| VarDecl { name, ty, init })
                .collect(),
            init: None,
            from: from
                .into_iter()
                .map(|(state, body)| FromBlock {
                    state,
                    body,
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        })
}

fn component() -> impl Strategy<Value = ComponentDecl> {
    (
        ident(),
        prop::collection::vec((ident(), prop::option::of(interval())), 0..3),
        prop::collection::vec(prop::collection::vec(ident(), 2..4), 0..2),
        prop::collection::vec(
            (
                prop::option::of(ident()),
                ident(),
                prop::collection::vec(ident(), 0..3),
            ),
            1..3,
        ),
    )
        .prop_map(|(name, ports, priorities, instances)| ComponentDecl {
            name,
            port_params: vec![],
            var_params: vec![],
            ports: ports
                .into_iter()
                .map(|(name, interval)| PortDecl { name, interval })
                .collect(),
            vars: vec![],
            priorities,
            instances: instances
                .into_iter()
                .map(|(label, target, ports)| Instance {
                    label,
                    target,
                    ports,
                    vars: vec![],
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        })
}

fn observable() -> impl Strategy<Value = Observable> {
    let path = (ident(), prop::collection::vec(1u32..4, 0..2))
        .prop_map(|(root, idx)| {
            InstancePath(
                std::iter::once(PathSeg::Name(root))
                    .chain(idx.into_iter().map(PathSeg::Index))
                    .collect(),
            )
        })
        .boxed();
    prop_oneof![
        (path.clone(), ident()).prop_map(|(path, port)| Observable::Event { path, port }),
        (path.clone(), ident()).prop_map(|(path, state)| Observable::State { path, state }),
        path.prop_map(|path| Observable::Start { path }),
    ]
}

fn formula() -> impl Strategy<Value = Formula<Observable>> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::Dead),
        observable().prop_map(Formula::Atom)
    ];
    leaf.prop_recursive(3, 10, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(|f| Formula::Always(Box::new(f))),
            inner.clone().prop_map(|f| Formula::Eventually(Box::new(f))),
            inner.clone().prop_map(|f| Formula::Next(Box::new(f))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Formula::Implies(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::Until(Box::new(a), Box::new(b))),
        ]
    })
}

fn operand() -> impl Strategy<Value = Formula<Observable>> {
    let leaf = observable().prop_map(Formula::Atom);
    leaf.prop_recursive(2, 4, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::and(a, b)),
        ]
    })
}

fn property() -> impl Strategy<Value = PropertyDecl> {
    let body = prop_oneof![
        formula().prop_map(Pattern::Ltl),
        operand().prop_map(Pattern::Absent),
        operand().prop_map(Pattern::Unreachable),
        operand().prop_map(Pattern::Resettable),
        Just(Pattern::NoGlobalDeadlock),
        (operand(), operand(), interval()).prop_map(|(trigger, response, within)| {
            Pattern::LeadsTo {
                trigger,
                response,
                within,
            }
        }),
        (operand(), operand(), interval()).prop_map(|(forbidden, trigger, within)| {
            Pattern::AbsentAfter {
                forbidden,
                trigger,
                within,
            }
        }),
    ];
    (ident(), body).prop_map(|(name, body)| PropertyDecl {
        name,
        body,
        span: Span::default(),
    })
}

fn program() -> impl Strategy<Value = Program> {
    (
        prop::collection::vec((ident(), 0i64..100), 0..2),
        prop::collection::vec((ident(), prop::collection::vec(ident(), 1..4)), 0..2),
        prop::collection::vec(process(), 0..3),
        prop::collection::vec(component(), 0..2),
        prop::collection::vec(property(), 0..3),
        prop::option::of(ident()),
    )
        .prop_map(
            |(consts, types, processes, components, properties, root)| Program {
                consts: consts
                    .into_iter()
                    .map(|(name, value)| ConstDecl {
                        name,
                        value,
                        span: Span::default(),
                    })
                    .collect(),
                types: types
                    .into_iter()
                    .map(|(name, tags)| TypeDecl {
                        name,
                        ty: DataType::Enum(tags),
                        span: Span::default(),
                    })
                    .collect(),
                processes,
                components,
                properties,
                root,
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn random_programs_round_trip(p in program()) {
        let text = pretty_print(&p);
        let back = parse_program(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, p, "{}", text);
    }
}
