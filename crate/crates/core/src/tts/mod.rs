//! Timed Transition Systems: the flattened semantic object a program
//! compiles to.

pub(crate) mod compile;
mod unroll;

pub use compile::{compile, compile_with, CompileError, CompileOptions};
pub use unroll::{unroll_block, Alternative, UnrollError};

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use crate::ast::{BinOp, Formula, UnOp};
use crate::time::TimeInterval;

pub type TransId = usize;
pub type InstId = usize;
pub type VarId = usize;
pub type PortId = usize;

/// Discrete configuration: one control location per process instance and a
/// value for every variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiscreteState {
    pub locs: Box<[u16]>,
    pub vals: Box<[i32]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Domain {
    Bool,
    Range(i32, i32),
    Enum(Vec<String>),
}

impl Domain {
    pub fn values(&self) -> std::ops::RangeInclusive<i32> {
        match self {
            Domain::Bool => 0..=1,
            Domain::Range(lo, hi) => *lo..=*hi,
            Domain::Enum(names) => 0..=(names.len() as i32 - 1),
        }
    }

    pub fn contains(&self, v: i32) -> bool {
        self.values().contains(&v)
    }

    pub fn show(&self, v: i32) -> String {
        match self {
            Domain::Bool => (v != 0).to_string(),
            Domain::Range(..) => v.to_string(),
            Domain::Enum(names) => names
                .get(v as usize)
                .cloned()
                .unwrap_or_else(|| v.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarInfo {
    pub name: String,
    pub domain: Domain,
    pub init: i32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceInfo {
    /// Positional path such as `main/1`.
    pub path: String,
    pub process: String,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortInfo {
    /// Qualified name such as `main/d`.
    pub name: String,
    pub interval: TimeInterval,
    pub holders: Vec<InstId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    Port(PortId),
    /// Internal step of one process instance.
    Tau(InstId),
    /// Internal timed step of an observer.
    Observer(usize),
}

/// Compiled expression over discrete variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CExpr {
    Const(i32),
    Var(VarId),
    /// Instance is at the given location.
    At(InstId, u16),
    Unary(UnOp, Box<CExpr>),
    Binary(BinOp, Box<CExpr>, Box<CExpr>),
}

impl CExpr {
    pub fn eval(&self, s: &DiscreteState) -> i32 {
        eval_with(self, &s.locs, &s.vals)
    }

    pub fn holds(&self, s: &DiscreteState) -> bool {
        self.eval(s) != 0
    }

    pub fn and(a: CExpr, b: CExpr) -> CExpr {
        match (&a, &b) {
            (CExpr::Const(1), _) => b,
            (_, CExpr::Const(1)) => a,
            _ => CExpr::Binary(BinOp::And, Box::new(a), Box::new(b)),
        }
    }

    pub fn eq(a: CExpr, b: CExpr) -> CExpr {
        CExpr::Binary(BinOp::Eq, Box::new(a), Box::new(b))
    }

    fn show(&self, tts: &Tts) -> String {
        match self {
            CExpr::Const(v) => v.to_string(),
            CExpr::Var(v) => tts.vars[*v].name.clone(),
            CExpr::At(i, l) => format!(
                "{}@{}",
                tts.instances[*i].path, tts.instances[*i].states[*l as usize]
            ),
            CExpr::Unary(UnOp::Not, a) => format!("not ({})", a.show(tts)),
            CExpr::Unary(UnOp::Neg, a) => format!("-({})", a.show(tts)),
            CExpr::Binary(op, a, b) => format!("({} {} {})", a.show(tts), op.symbol(), b.show(tts)),
        }
    }
}

fn eval_with(e: &CExpr, locs: &[u16], vals: &[i32]) -> i32 {
    match e {
        CExpr::Const(v) => *v,
        CExpr::Var(v) => vals[*v],
        CExpr::At(i, l) => (locs[*i] == *l) as i32,
        CExpr::Unary(UnOp::Not, a) => (eval_with(a, locs, vals) == 0) as i32,
        CExpr::Unary(UnOp::Neg, a) => eval_with(a, locs, vals).wrapping_neg(),
        CExpr::Binary(op, a, b) => {
            let x = eval_with(a, locs, vals);
            if *op == BinOp::And && x == 0 {
                return 0;
            }
            if *op == BinOp::Or && x != 0 {
                return 1;
            }
            let y = eval_with(b, locs, vals);
            match op {
                BinOp::Add => x.wrapping_add(y),
                BinOp::Sub => x.wrapping_sub(y),
                BinOp::Eq => (x == y) as i32,
                BinOp::Ne => (x != y) as i32,
                BinOp::Lt => (x < y) as i32,
                BinOp::Le => (x <= y) as i32,
                BinOp::Gt => (x > y) as i32,
                BinOp::Ge => (x >= y) as i32,
                BinOp::And | BinOp::Or => (y != 0) as i32,
            }
        }
    }
}

/// Effect of a transition, executed after the synchronization point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Seq(Vec<Action>),
    Assign(VarId, CExpr),
    /// Nondeterministic choice of any value in the variable's domain.
    Any(VarId),
    If(CExpr, Box<Action>, Box<Action>),
    /// Nondeterministic choice between branches.
    Choice(Vec<Action>),
    Goto(InstId, u16),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub id: TransId,
    pub event: Event,
    /// Participating instances and the location each must be in.
    pub participants: Vec<(InstId, u16)>,
    pub guard: CExpr,
    /// Effects, applied in participant order.
    pub actions: Vec<Action>,
    pub interval: TimeInterval,
    pub name: String,
}

impl Transition {
    pub fn is_observer(&self) -> bool {
        matches!(self.event, Event::Observer(_))
    }
}

/// Resolved state/event atom.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// A communication on the port.
    Event(PortId),
    /// An internal step of the instance.
    Tau(InstId),
    /// The instance is at the location.
    State(InstId, u16),
    /// A predicate over variables holds.
    Value(CExpr),
    /// The initial configuration.
    Start,
}

/// Synchronous observer reacting to system steps.
///
/// The location variable holds `2 * location + parity`. After every
/// non-observer transition the monitor evaluates `trigger` and `response`
/// on the fired event and the target state, then rewrites its location
/// through `on_response` and `on_trigger` (order given by `trigger_first`).
/// A trigger taken from a location flagged in `restart` flips the parity, so
/// observer transitions guarded on the new location are newly enabled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monitor {
    pub var: VarId,
    pub trigger: Formula<Atom>,
    pub response: Formula<Atom>,
    pub on_trigger: Vec<i32>,
    pub on_response: Vec<i32>,
    pub restart: Vec<bool>,
    pub trigger_first: bool,
}

impl Monitor {
    fn react(&self, event: Option<&Transition>, state: &mut DiscreteState, start: bool) {
        let trig = eval_formula(&self.trigger, event, state, start);
        let resp = eval_formula(&self.response, event, state, start);
        let v = state.vals[self.var];
        let (mut loc, mut parity) = (v / 2, v % 2);
        let mut apply_trigger = |loc: &mut i32| {
            if trig {
                if self.restart[*loc as usize] {
                    parity ^= 1;
                }
                *loc = self.on_trigger[*loc as usize];
            }
        };
        if self.trigger_first {
            apply_trigger(&mut loc);
            if resp {
                loc = self.on_response[loc as usize];
            }
        } else {
            if resp {
                loc = self.on_response[loc as usize];
            }
            apply_trigger(&mut loc);
        }
        state.vals[self.var] = 2 * loc + parity;
    }
}

/// Evaluates a propositional formula on a step: event atoms on the fired
/// transition, state atoms on `state`.
pub fn eval_formula(
    f: &Formula<Atom>,
    event: Option<&Transition>,
    state: &DiscreteState,
    start: bool,
) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Atom(a) => eval_atom(a, event, state, start),
        Formula::Not(a) => !eval_formula(a, event, state, start),
        Formula::And(a, b) => {
            eval_formula(a, event, state, start) && eval_formula(b, event, state, start)
        }
        Formula::Or(a, b) => {
            eval_formula(a, event, state, start) || eval_formula(b, event, state, start)
        }
        Formula::Implies(a, b) => {
            !eval_formula(a, event, state, start) || eval_formula(b, event, state, start)
        }
        Formula::Dead => false,
        _ => panic!("temporal operator in a step predicate"),
    }
}

pub fn eval_atom(a: &Atom, event: Option<&Transition>, state: &DiscreteState, start: bool) -> bool {
    match a {
        Atom::Event(p) => event.is_some_and(|t| t.event == Event::Port(*p)),
        Atom::Tau(i) => event.is_some_and(|t| t.event == Event::Tau(*i)),
        Atom::State(i, l) => state.locs[*i] == *l,
        Atom::Value(e) => e.holds(state),
        Atom::Start => start,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FireError {
    #[error("transition {0} is not enabled")]
    NotEnabled(TransId),
    #[error("assignment of {value} to `{var}` leaves its domain")]
    OutOfDomain { var: String, value: i32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tts {
    pub instances: Vec<InstanceInfo>,
    pub vars: Vec<VarInfo>,
    pub ports: Vec<PortInfo>,
    pub transitions: Vec<Transition>,
    pub initial: DiscreteState,
    /// Direct priority pairs `(higher, lower)`.
    pub priority: Vec<(TransId, TransId)>,
    /// For each transition, every transition that dominates it (transitive).
    pub dominators: Vec<Vec<TransId>>,
    pub monitors: Vec<Monitor>,
    /// Component-instance paths to their process instances, for resolution.
    pub scopes: Vec<Scope>,
}

/// Name resolution data for one component or process instance.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Scope {
    pub path: String,
    pub label: Option<String>,
    pub process: Option<InstId>,
    /// Local names of ports visible in this instance.
    pub ports: Vec<(String, PortId)>,
    /// Local names of variables visible in this instance.
    pub vars: Vec<(String, VarId)>,
    pub children: Vec<usize>,
}

impl Tts {
    pub fn enabled(&self, s: &DiscreteState) -> Vec<TransId> {
        self.transitions
            .iter()
            .filter(|t| self.is_enabled(t, s))
            .map(|t| t.id)
            .collect()
    }

    pub fn is_enabled(&self, t: &Transition, s: &DiscreteState) -> bool {
        t.participants.iter().all(|&(i, l)| s.locs[i] == l) && t.guard.holds(s)
    }

    /// All successors of firing `t` from `s`.
    pub fn fire(
        &self,
        s: &DiscreteState,
        t: TransId,
    ) -> Result<BTreeSet<DiscreteState>, FireError> {
        let tr = &self.transitions[t];
        if !self.is_enabled(tr, s) {
            return Err(FireError::NotEnabled(t));
        }
        let mut states = vec![s.clone()];
        for action in &tr.actions {
            let mut next = Vec::new();
            for st in states {
                self.exec(action, st, &mut next)?;
            }
            states = next;
        }
        if !tr.is_observer() {
            for st in &mut states {
                for m in &self.monitors {
                    m.react(Some(tr), st, false);
                }
            }
        }
        Ok(states.into_iter().collect())
    }

    fn exec(
        &self,
        a: &Action,
        s: DiscreteState,
        out: &mut Vec<DiscreteState>,
    ) -> Result<(), FireError> {
        match a {
            Action::Seq(items) => {
                let mut cur = vec![s];
                for item in items {
                    let mut next = Vec::new();
                    for st in cur {
                        self.exec(item, st, &mut next)?;
                    }
                    cur = next;
                }
                out.extend(cur);
            }
            Action::Assign(v, e) => {
                let value = e.eval(&s);
                let info = &self.vars[*v];
                if !info.domain.contains(value) {
                    return Err(FireError::OutOfDomain {
                        var: info.name.clone(),
                        value,
                    });
                }
                let mut s = s;
                s.vals[*v] = value;
                out.push(s);
            }
            Action::Any(v) => {
                for value in self.vars[*v].domain.values() {
                    let mut st = s.clone();
                    st.vals[*v] = value;
                    out.push(st);
                }
            }
            Action::If(c, a, b) => {
                let branch = if c.holds(&s) { a } else { b };
                self.exec(branch, s, out)?;
            }
            Action::Choice(branches) => {
                for b in branches {
                    self.exec(b, s.clone(), out)?;
                }
            }
            Action::Goto(i, l) => {
                let mut s = s;
                s.locs[*i] = *l;
                out.push(s);
            }
        }
        Ok(())
    }

    /// Applies the monitors' reaction to the initial configuration.
    pub(crate) fn apply_start(&self, s: &mut DiscreteState) {
        for m in &self.monitors {
            m.react(None, s, true);
        }
    }

    /// Recomputes `dominators` from `priority`; returns a transition on a
    /// cycle if the relation is not a strict order.
    pub(crate) fn close_priority(&mut self) -> Result<(), TransId> {
        let n = self.transitions.len();
        let mut higher: Vec<BTreeSet<TransId>> = vec![BTreeSet::new(); n];
        for &(h, l) in &self.priority {
            higher[l].insert(h);
        }
        // transitive closure by DFS from each node
        let mut doms = vec![Vec::new(); n];
        for t in 0..n {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<TransId> = higher[t].iter().copied().collect();
            while let Some(u) = stack.pop() {
                if seen.insert(u) {
                    stack.extend(higher[u].iter().copied());
                }
            }
            if seen.contains(&t) {
                return Err(t);
            }
            doms[t] = seen.into_iter().collect();
        }
        self.dominators = doms;
        Ok(())
    }

    pub fn dominates(&self, hi: TransId, lo: TransId) -> bool {
        self.dominators[lo].binary_search(&hi).is_ok()
    }

    pub fn transition_label(&self, t: TransId) -> &str {
        &self.transitions[t].name
    }

    pub fn port_by_name(&self, name: &str) -> Option<PortId> {
        self.ports.iter().position(|p| p.name == name)
    }

    pub fn instance_by_path(&self, path: &str) -> Option<InstId> {
        self.instances.iter().position(|i| i.path == path)
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Short human-readable summary of a discrete state.
    pub fn show_state(&self, s: &DiscreteState) -> String {
        let mut out = String::new();
        for (i, inst) in self.instances.iter().enumerate() {
            if !out.is_empty() {
                out.push(' ');
            }
            let _ = write!(out, "{}@{}", inst.path, inst.states[s.locs[i] as usize]);
        }
        for (v, info) in self.vars.iter().enumerate() {
            let _ = write!(out, " {}={}", info.name, info.domain.show(s.vals[v]));
        }
        out
    }

    /// Deterministic text listing, one transition per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for t in &self.transitions {
            let acts: Vec<String> = t.actions.iter().map(|a| self.show_action(a)).collect();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                t.id,
                t.name,
                t.interval,
                t.guard.show(self),
                acts.join("; ")
            );
        }
        for &(h, l) in &self.priority {
            let _ = writeln!(out, "prio\t{h} > {l}");
        }
        out
    }

    fn show_action(&self, a: &Action) -> String {
        match a {
            Action::Seq(items) => {
                let parts: Vec<String> = items.iter().map(|i| self.show_action(i)).collect();
                format!("{{{}}}", parts.join("; "))
            }
            Action::Assign(v, e) => format!("{} := {}", self.vars[*v].name, e.show(self)),
            Action::Any(v) => format!("{} := any", self.vars[*v].name),
            Action::If(c, a, b) => {
                format!(
                    "if {} then {} else {}",
                    c.show(self),
                    self.show_action(a),
                    self.show_action(b)
                )
            }
            Action::Choice(bs) => {
                let parts: Vec<String> = bs.iter().map(|b| self.show_action(b)).collect();
                format!("choice({})", parts.join(" | "))
            }
            Action::Goto(i, l) => format!(
                "{} -> {}",
                self.instances[*i].path, self.instances[*i].states[*l as usize]
            ),
        }
    }
}

impl fmt::Display for Tts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Programmatic construction of small systems, used for tests and random
/// generation.
#[derive(Default)]
pub struct TtsBuilder {
    tts: Option<Tts>,
}

impl TtsBuilder {
    pub fn new() -> Self {
        TtsBuilder {
            tts: Some(Tts {
                instances: vec![],
                vars: vec![],
                ports: vec![],
                transitions: vec![],
                initial: DiscreteState {
                    locs: Box::new([]),
                    vals: Box::new([]),
                },
                priority: vec![],
                dominators: vec![],
                monitors: vec![],
                scopes: vec![],
            }),
        }
    }

    fn tts(&mut self) -> &mut Tts {
        self.tts.as_mut().expect("builder already finished")
    }

    pub fn instance(&mut self, path: &str, states: &[&str]) -> InstId {
        let tts = self.tts();
        tts.instances.push(InstanceInfo {
            path: path.to_string(),
            process: path.to_string(),
            states: states.iter().map(|s| s.to_string()).collect(),
        });
        tts.instances.len() - 1
    }

    pub fn var(&mut self, name: &str, domain: Domain, init: i32) -> VarId {
        let tts = self.tts();
        tts.vars.push(VarInfo {
            name: name.to_string(),
            domain,
            init,
        });
        tts.vars.len() - 1
    }

    pub fn port(&mut self, name: &str, interval: TimeInterval, holders: Vec<InstId>) -> PortId {
        let tts = self.tts();
        tts.ports.push(PortInfo {
            name: name.to_string(),
            interval,
            holders,
        });
        tts.ports.len() - 1
    }

    /// Adds a transition; `moves` lists `(instance, from, to)`.
    pub fn transition(
        &mut self,
        name: &str,
        event: Event,
        moves: &[(InstId, u16, u16)],
        guard: CExpr,
        mut effects: Vec<Action>,
        interval: TimeInterval,
    ) -> TransId {
        let tts = self.tts();
        let id = tts.transitions.len();
        effects.extend(moves.iter().map(|&(i, _, to)| Action::Goto(i, to)));
        tts.transitions.push(Transition {
            id,
            event,
            participants: moves.iter().map(|&(i, from, _)| (i, from)).collect(),
            guard,
            actions: effects,
            interval,
            name: name.to_string(),
        });
        id
    }

    /// Convenience: internal step of one instance.
    pub fn tau(
        &mut self,
        name: &str,
        inst: InstId,
        from: u16,
        to: u16,
        interval: TimeInterval,
    ) -> TransId {
        self.transition(
            name,
            Event::Tau(inst),
            &[(inst, from, to)],
            CExpr::Const(1),
            vec![],
            interval,
        )
    }

    pub fn priority(&mut self, higher: TransId, lower: TransId) {
        self.tts().priority.push((higher, lower));
    }

    pub fn finish(mut self) -> Result<Tts, CompileError> {
        let mut tts = self.tts.take().expect("builder already finished");
        tts.initial = DiscreteState {
            locs: vec![0u16; tts.instances.len()].into_boxed_slice(),
            vals: tts.vars.iter().map(|v| v.init).collect(),
        };
        tts.close_priority()
            .map_err(|t| CompileError::PriorityCycle(tts.transitions[t].name.clone()))?;
        compile::check_priority_intervals(&tts)?;
        Ok(tts)
    }
}
