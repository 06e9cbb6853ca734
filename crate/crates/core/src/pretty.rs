//! Canonical concrete syntax for programs and properties.

use std::fmt::Write;

use crate::ast::*;

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for c in &p.consts {
        let _ = writeln!(out, "const {} : int is {}", c.name, c.value);
    }
    for t in &p.types {
        let _ = writeln!(out, "type {} is {}", t.name, data_type(&t.ty));
    }
    for proc in &p.processes {
        out.push_str(&process(proc));
    }
    for comp in &p.components {
        out.push_str(&component(comp));
    }
    for prop in &p.properties {
        let _ = writeln!(out, "{}", property(prop));
    }
    if let Some(root) = &p.root {
        let _ = writeln!(out, "{root}");
    }
    if out.is_empty() {
        out.push('\n');
    }
    out
}

pub fn data_type(t: &DataType) -> String {
    match t {
        DataType::Bool => "bool".into(),
        DataType::Range(lo, hi) => format!("{lo}..{hi}"),
        DataType::Enum(names) => format!("union {} end", names.join(" | ")),
        DataType::Named(n) => n.clone(),
    }
}

fn var_params(vars: &[VarParam]) -> String {
    let parts: Vec<String> = vars
        .iter()
        .map(|v| {
            let mode = match (v.read, v.write) {
                (true, true) => "read write ",
                (true, false) => "read ",
                (false, true) => "write ",
                (false, false) => "",
            };
            format!("&{} : {}{}", v.name, mode, data_type(&v.ty))
        })
        .collect();
    format!(" ({})", parts.join(", "))
}

fn var_decls(vars: &[VarDecl]) -> String {
    vars.iter()
        .map(|v| match &v.init {
            Some(e) => format!("{} : {} := {}", v.name, data_type(&v.ty), expr(e)),
            None => format!("{} : {}", v.name, data_type(&v.ty)),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn port_params(ports: &[String]) -> String {
    let parts: Vec<String> = ports.iter().map(|p| format!("{p} : none")).collect();
    format!(" [{}]", parts.join(", "))
}

fn process(p: &ProcessDecl) -> String {
    let mut out = format!("process {}", p.name);
    if !p.ports.is_empty() {
        out.push_str(&port_params(&p.ports));
    }
    if !p.vars.is_empty() {
        out.push_str(&var_params(&p.vars));
    }
    let _ = writeln!(out, " is");
    let _ = writeln!(out, "  states {}", p.states.join(", "));
    if !p.locals.is_empty() {
        let _ = writeln!(out, "  var {}", var_decls(&p.locals));
    }
    if let Some(init) = &p.init {
        let _ = writeln!(out, "  init {}", stmt(init, 2));
    }
    for f in &p.from {
        let _ = writeln!(out, "  from {}\n    {}", f.state, stmt(&f.body, 4));
    }
    out.push('\n');
    out
}

fn component(c: &ComponentDecl) -> String {
    let mut out = format!("component {}", c.name);
    if !c.port_params.is_empty() {
        out.push_str(&port_params(&c.port_params));
    }
    if !c.var_params.is_empty() {
        out.push_str(&var_params(&c.var_params));
    }
    let _ = writeln!(out, " is");
    if !c.vars.is_empty() {
        let _ = writeln!(out, "  var {}", var_decls(&c.vars));
    }
    if !c.ports.is_empty() {
        let ports: Vec<String> = c
            .ports
            .iter()
            .map(|p| match &p.interval {
                Some(i) => format!("{} : none in {}", p.name, interval(i)),
                None => format!("{} : none", p.name),
            })
            .collect();
        let _ = writeln!(out, "  port {}", ports.join(",\n       "));
    }
    if !c.priorities.is_empty() {
        let chains: Vec<String> = c.priorities.iter().map(|ch| ch.join(" > ")).collect();
        let _ = writeln!(out, "  priority {}", chains.join(", "));
    }
    let insts: Vec<String> = c.instances.iter().map(instance).collect();
    let _ = writeln!(out, "  par {}\n  end\n", insts.join("\n   || "));
    out
}

fn instance(i: &Instance) -> String {
    let mut s = String::new();
    if let Some(l) = &i.label {
        let _ = write!(s, "{l} : ");
    }
    s.push_str(&i.target);
    if !i.ports.is_empty() {
        let _ = write!(s, " [{}]", i.ports.join(", "));
    }
    if !i.vars.is_empty() {
        let vars: Vec<String> = i.vars.iter().map(|v| format!("&{v}")).collect();
        let _ = write!(s, " ({})", vars.join(", "));
    }
    s
}

pub fn interval(i: &IntervalExpr) -> String {
    let b = |b: &BoundExpr| match b {
        BoundExpr::Lit(v) => v.to_string(),
        BoundExpr::Sym(s) => s.clone(),
    };
    let open = if i.lower_strict { ']' } else { '[' };
    match &i.upper {
        None => format!("{open}{},...[", b(&i.lower)),
        Some(u) => {
            let close = if i.upper_strict { '[' } else { ']' };
            format!("{open}{},{}{close}", b(&i.lower), b(u))
        }
    }
}

pub fn stmt(s: &Stmt, indent: usize) -> String {
    let pad = " ".repeat(indent);
    match s {
        Stmt::Null => "null".into(),
        Stmt::To(st) => format!("to {st}"),
        Stmt::Loop => "loop".into(),
        Stmt::Sync(p) => p.clone(),
        Stmt::Assign(v, e) => format!("{v} := {}", expr(e)),
        Stmt::Any(v) => format!("{v} := any"),
        Stmt::Wait(i) => format!("wait {}", interval(i)),
        Stmt::On(e) => format!("on {}", expr(e)),
        Stmt::Seq(items) => {
            let parts: Vec<String> = items.iter().map(|i| stmt(i, indent)).collect();
            parts.join(&format!(";\n{pad}"))
        }
        Stmt::If(c, a, b) => {
            let inner = indent + 2;
            let ipad = " ".repeat(inner);
            let mut out = format!("if {} then\n{ipad}{}", expr(c), stmt(a, inner));
            if **b != Stmt::Null {
                let _ = write!(out, "\n{pad}else\n{ipad}{}", stmt(b, inner));
            }
            let _ = write!(out, "\n{pad}end");
            out
        }
        Stmt::Select { branches, unless } => {
            let inner = indent + 3;
            let ipad = " ".repeat(inner);
            let mut out = String::from("select\n");
            for (k, br) in branches.iter().enumerate() {
                let sep = if k == 0 { "   " } else { "[] " };
                let _ = writeln!(out, "{pad}{sep}{}", stmt(br, inner));
            }
            for (k, br) in unless.iter().enumerate() {
                if k == 0 {
                    let _ = writeln!(out, "{pad}unless\n{ipad}{}", stmt(br, inner));
                } else {
                    let _ = writeln!(out, "{pad}[] {}", stmt(br, inner));
                }
            }
            let _ = write!(out, "{pad}end");
            out
        }
    }
}

// expression levels: or 1, and 2, not 3, comparison 4, additive 5, negation 6, atoms 7
fn level(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => match op {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Add | BinOp::Sub => 5,
            _ => 4,
        },
        Expr::Unary(UnOp::Not, _) => 3,
        Expr::Unary(UnOp::Neg, _) => 6,
        _ => 7,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    if level(e) < min {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) if *v < 0 => format!("({v})"),
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Ident(s) => s.clone(),
        Expr::Unary(UnOp::Not, a) => format!("not {}", wrap(a, 3)),
        Expr::Unary(UnOp::Neg, a) => format!("-{}", wrap(a, 7)),
        Expr::Binary(op, a, b) => {
            let l = level(e);
            let (lmin, rmin) = if l == 4 { (5, 5) } else { (l, l + 1) };
            format!("{} {} {}", wrap(a, lmin), op.symbol(), wrap(b, rmin))
        }
    }
}

pub fn observable(o: &Observable) -> String {
    match o {
        Observable::Event { path, port } => format!("{path}/event {port}"),
        Observable::State { path, state } => format!("{path}/state {state}"),
        Observable::Value { path, pred } => format!("{path}/value ({})", expr(pred)),
        Observable::Start { path } => format!("{path}/start"),
    }
}

/// Prints a formula, parenthesizing every compound subformula.
pub fn formula<A>(f: &Formula<A>, atom: &dyn Fn(&A) -> String) -> String {
    let sub = |g: &Formula<A>| match g {
        Formula::True | Formula::False | Formula::Dead | Formula::Atom(_) => formula(g, atom),
        _ => format!("({})", formula(g, atom)),
    };
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Dead => "dead".into(),
        Formula::Atom(a) => atom(a),
        Formula::Not(a) => format!("not {}", sub(a)),
        Formula::And(a, b) => format!("{} and {}", sub(a), sub(b)),
        Formula::Or(a, b) => format!("{} or {}", sub(a), sub(b)),
        Formula::Implies(a, b) => format!("{} => {}", sub(a), sub(b)),
        Formula::Next(a) => format!("next {}", sub(a)),
        Formula::Until(a, b) => format!("{} until {}", sub(a), sub(b)),
        Formula::Release(a, b) => format!("{} release {}", sub(a), sub(b)),
        Formula::Always(a) => format!("[] {}", sub(a)),
        Formula::Eventually(a) => format!("<> {}", sub(a)),
    }
}

pub fn obs_formula(f: &Formula<Observable>) -> String {
    formula(f, &observable)
}

fn operand(f: &Formula<Observable>) -> String {
    format!("({})", obs_formula(f))
}

pub fn pattern_body(b: &PropertyBody) -> String {
    match b {
        Pattern::LeadsTo {
            trigger,
            response,
            within,
        } => {
            format!(
                "{} leadsto {} within {}",
                operand(trigger),
                operand(response),
                interval(within)
            )
        }
        Pattern::AbsentAfter {
            forbidden,
            trigger,
            within,
        } => {
            format!(
                "absent {} after {} within {}",
                operand(forbidden),
                operand(trigger),
                interval(within)
            )
        }
        Pattern::Absent(f) => format!("absent {}", operand(f)),
        Pattern::NoGlobalDeadlock => "NoGlobalDeadlock".into(),
        Pattern::Unreachable(f) => format!("Unreachable {}", operand(f)),
        Pattern::Resettable(f) => format!("Resettable {}", operand(f)),
        Pattern::Ltl(f) => format!("ltl {}", obs_formula(f)),
    }
}

pub fn property(p: &PropertyDecl) -> String {
    format!("property {} is {}", p.name, pattern_body(&p.body))
}
