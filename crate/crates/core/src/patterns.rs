//! Specification patterns: resolution, observer composition and checking.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::{
    BinOp, Formula, Observable, PathSeg, Pattern, Program, PropertyBody, PropertyDecl,
};
use crate::classgraph::{build_graph, ClassGraph, ExploreError, Limits};
use crate::ltl::{self, Counterexample, Lasso, LtlError, LtlVerdict};
use crate::time::TimeInterval;
use crate::tts::compile::{enum_constants, resolve_expr};
use crate::tts::{Action, Atom, CExpr, Domain, Event, Monitor, TransId, Transition, Tts, VarInfo};

pub type ResolvedPattern = Pattern<Atom, TimeInterval>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("no instance `{0}`")]
    UnknownPath(String),
    #[error("`{path}` has no port `{port}`")]
    UnknownPort { path: String, port: String },
    #[error("`{path}` has no state `{state}`")]
    UnknownState { path: String, state: String },
    #[error("`{0}` is not a process instance")]
    NotAProcess(String),
    #[error("in predicate of `{path}`: {message}")]
    Predicate { path: String, message: String },
    #[error("interval: {0}")]
    Interval(String),
    #[error("leadsto needs a finite upper bound, got {0}")]
    UnsupportedInterval(TimeInterval),
    #[error("`dead` is only allowed in untimed patterns and formulas")]
    DeadInTimedPattern,
    #[error("timed pattern operands must be propositional")]
    TemporalOperand,
    #[error("observer: {0}")]
    Compose(String),
}

/// Maps an instance path to a scope index of `tts`.
fn scope_of(tts: &Tts, root: &str, path: &[PathSeg]) -> Option<usize> {
    let mut segs = path;
    if let Some(PathSeg::Name(n)) = segs.first() {
        if n == root {
            segs = &segs[1..];
        }
    }
    let mut cur = 0;
    for seg in segs {
        let children = &tts.scopes.get(cur)?.children;
        cur = match seg {
            PathSeg::Index(i) => *children.get((*i as usize).checked_sub(1)?)?,
            PathSeg::Name(n) => *children
                .iter()
                .find(|&&c| tts.scopes[c].label.as_deref() == Some(n))?,
        };
    }
    Some(cur)
}

pub fn resolve_observable(prog: &Program, tts: &Tts, o: &Observable) -> Result<Atom, PatternError> {
    let (path, text) = match o {
        Observable::Event { path, .. }
        | Observable::State { path, .. }
        | Observable::Value { path, .. }
        | Observable::Start { path } => (&path.0, path.to_string()),
    };
    let scope = scope_of(tts, prog.root_name(), path)
        .ok_or_else(|| PatternError::UnknownPath(text.clone()))?;
    let sc = &tts.scopes[scope];
    Ok(match o {
        Observable::Event { port, .. } => {
            let id = sc.ports.iter().find(|p| &p.0 == port).map(|p| p.1);
            Atom::Event(id.ok_or_else(|| PatternError::UnknownPort {
                path: text,
                port: port.clone(),
            })?)
        }
        Observable::State { state, .. } => {
            let inst = sc
                .process
                .ok_or_else(|| PatternError::NotAProcess(text.clone()))?;
            let loc = tts.instances[inst].states.iter().position(|s| s == state);
            let loc = loc.ok_or_else(|| PatternError::UnknownState {
                path: text,
                state: state.clone(),
            })?;
            Atom::State(inst, loc as u16)
        }
        Observable::Value { pred, .. } => {
            let vars: HashMap<String, usize> = sc.vars.iter().cloned().collect();
            let e = resolve_expr(prog, &enum_constants(prog), &vars, pred, &text).map_err(|e| {
                PatternError::Predicate {
                    path: text,
                    message: e.to_string(),
                }
            })?;
            Atom::Value(e)
        }
        Observable::Start { .. } => Atom::Start,
    })
}

pub fn resolve_pattern(
    prog: &Program,
    tts: &Tts,
    body: &PropertyBody,
) -> Result<ResolvedPattern, PatternError> {
    body.try_map(&mut |o| resolve_observable(prog, tts, o), &mut |i| {
        i.resolve(|s| prog.const_value(s))
            .map_err(|e| PatternError::Interval(e.to_string()))
    })
}

/// How the verdict of a composed system is read off its class graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VerdictRule {
    /// The property holds iff no reachable state satisfies the predicate.
    Safety(CExpr),
    Ltl(Formula<Atom>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObserverProduct {
    pub tts: Tts,
    pub rule: VerdictRule,
    /// Index of the added monitor, if any.
    pub monitor: Option<usize>,
}

fn timed_operand(f: &Formula<Atom>) -> Result<(), PatternError> {
    if f.mentions_dead() {
        return Err(PatternError::DeadInTimedPattern);
    }
    if !f.is_propositional() {
        return Err(PatternError::TemporalOperand);
    }
    Ok(())
}

struct ObsBuilder {
    tts: Tts,
    var: usize,
    monitor: usize,
    system: Vec<TransId>,
}

impl ObsBuilder {
    fn new(sys: &Tts, locs: i32) -> ObsBuilder {
        let mut tts = sys.clone();
        let system = (0..tts.transitions.len())
            .filter(|&t| !tts.transitions[t].is_observer())
            .collect();
        let var = tts.vars.len();
        tts.vars.push(VarInfo {
            name: "observer/loc".into(),
            domain: Domain::Range(0, 2 * locs - 1),
            init: 0,
        });
        let mut vals = tts.initial.vals.to_vec();
        vals.push(0);
        tts.initial.vals = vals.into_boxed_slice();
        let monitor = tts.monitors.len();
        ObsBuilder {
            tts,
            var,
            monitor,
            system,
        }
    }

    fn at(&self, loc: i32, parity: i32) -> CExpr {
        CExpr::eq(CExpr::Var(self.var), CExpr::Const(2 * loc + parity))
    }

    /// Observer transition from any of `from` to `to`, keeping the parity.
    fn step(&mut self, name: &str, from: &[i32], to: i32, interval: TimeInterval, urgent: bool) {
        for parity in 0..2 {
            let guard = from
                .iter()
                .map(|&l| self.at(l, parity))
                .reduce(|a, b| CExpr::Binary(BinOp::Or, Box::new(a), Box::new(b)))
                .expect("at least one source location");
            let id = self.tts.transitions.len();
            self.tts.transitions.push(Transition {
                id,
                event: Event::Observer(self.monitor),
                participants: vec![],
                guard,
                actions: vec![Action::Assign(self.var, CExpr::Const(2 * to + parity))],
                interval,
                name: format!("observer {name}"),
            });
            if urgent {
                for &t in &self.system {
                    self.tts.priority.push((id, t));
                }
            }
        }
    }

    fn finish(mut self, m: Monitor, err: i32) -> Result<ObserverProduct, PatternError> {
        self.tts.monitors.push(m);
        self.tts
            .close_priority()
            .map_err(|t| PatternError::Compose(format!("priority cycle at {t}")))?;
        crate::tts::compile::check_priority_intervals(&self.tts)
            .map_err(|e| PatternError::Compose(e.to_string()))?;
        let mut init = self.tts.initial.clone();
        self.tts.apply_start(&mut init);
        self.tts.initial = init;
        let bad = CExpr::Binary(
            BinOp::Ge,
            Box::new(CExpr::Var(self.var)),
            Box::new(CExpr::Const(2 * err)),
        );
        Ok(ObserverProduct {
            tts: self.tts,
            rule: VerdictRule::Safety(bad),
            monitor: Some(self.monitor),
        })
    }
}

fn rat_sub(
    a: num::rational::Ratio<i64>,
    b: num::rational::Ratio<i64>,
) -> num::rational::Ratio<i64> {
    a - b
}

/// Composes the system with the observer of a pattern.
pub fn compile_pattern(p: &ResolvedPattern, sys: &Tts) -> Result<ObserverProduct, PatternError> {
    let ltl = |f: Formula<Atom>| ObserverProduct {
        tts: sys.clone(),
        rule: VerdictRule::Ltl(f),
        monitor: None,
    };
    match p {
        Pattern::Absent(e) | Pattern::Unreachable(e) => {
            Ok(ltl(Formula::always(Formula::not(e.clone()))))
        }
        Pattern::NoGlobalDeadlock => Ok(ltl(Formula::always(Formula::not(Formula::Dead)))),
        Pattern::Resettable(e) => Ok(ltl(Formula::always(Formula::eventually(e.clone())))),
        Pattern::Ltl(f) => Ok(ltl(f.clone())),
        Pattern::LeadsTo {
            trigger,
            response,
            within,
        } => {
            timed_operand(trigger)?;
            timed_operand(response)?;
            let upper = within
                .upper
                .ok_or(PatternError::UnsupportedInterval(*within))?;
            let l = within.lower;
            let early = l > num::zero();
            // idle, early, armed, err
            let (idle, early_loc, armed, err) = (0, 1, 2, 3);
            let mut b = ObsBuilder::new(sys, 4);
            if early {
                b.step(
                    "window-start",
                    &[early_loc],
                    armed,
                    TimeInterval::point(l),
                    !within.lower_strict,
                );
            }
            let d = if early { rat_sub(upper, l) } else { upper };
            let deadline = TimeInterval::new(d, !within.upper_strict, None, true)
                .map_err(|e| PatternError::Compose(e.to_string()))?;
            b.step("deadline", &[armed], err, deadline, false);
            let m = Monitor {
                var: b.var,
                trigger: trigger.clone(),
                response: response.clone(),
                on_trigger: vec![if early { early_loc } else { armed }, early_loc, armed, err],
                on_response: vec![idle, err, idle, err],
                restart: vec![true, false, false, false],
                trigger_first: !early && !within.lower_strict,
            };
            b.finish(m, err)
        }
        Pattern::AbsentAfter {
            forbidden,
            trigger,
            within,
        } => {
            timed_operand(trigger)?;
            timed_operand(forbidden)?;
            // idle, waiting, open, err
            let (idle, waiting, open, err) = (0, 1, 2, 3);
            let mut b = ObsBuilder::new(sys, 4);
            if within.lower_strict {
                let lazy =
                    TimeInterval::new(within.lower, true, None, true).expect("lower bound only");
                b.step("window-open", &[waiting], open, lazy, false);
            } else {
                b.step(
                    "window-open",
                    &[waiting],
                    open,
                    TimeInterval::point(within.lower),
                    true,
                );
            }
            if let Some(u) = within.upper {
                b.step(
                    "window-close",
                    &[waiting, open],
                    idle,
                    TimeInterval::point(u),
                    within.upper_strict,
                );
            }
            let m = Monitor {
                var: b.var,
                trigger: trigger.clone(),
                response: forbidden.clone(),
                on_trigger: vec![waiting, waiting, waiting, err],
                on_response: vec![idle, waiting, err, err],
                restart: vec![true, true, true, false],
                trigger_first: false,
            };
            b.finish(m, err)
        }
    }
}

/// Variant of a product whose system cannot perform the observed response
/// while the observer is waiting for it. Used as a negative control for
/// non-interference.
pub fn block_response(p: &ObserverProduct) -> ObserverProduct {
    let mut out = p.clone();
    let Some(m) = p.monitor else { return out };
    let mon = &p.tts.monitors[m];
    let mut atoms = Vec::new();
    mon.response.atoms(&mut atoms);
    let ports: BTreeSet<usize> = atoms
        .iter()
        .filter_map(|a| {
            if let Atom::Event(p) = a {
                Some(*p)
            } else {
                None
            }
        })
        .collect();
    let idle = CExpr::Binary(
        BinOp::Lt,
        Box::new(CExpr::Var(mon.var)),
        Box::new(CExpr::Const(2)),
    );
    for t in &mut out.tts.transitions {
        if matches!(t.event, Event::Port(q) if ports.contains(&q)) {
            t.guard = CExpr::and(t.guard.clone(), idle.clone());
        }
    }
    out
}

/// System-event sequences of length at most `depth`, observer steps
/// projected away.
pub fn projected_sequences(g: &ClassGraph, tts: &Tts, depth: usize) -> BTreeSet<Vec<TransId>> {
    let is_obs = |t: TransId| tts.transitions[t].is_observer();
    let closure = |set: &BTreeSet<usize>| {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(c) = stack.pop() {
            for &(t, d) in &g.succ[c] {
                if is_obs(t) && out.insert(d) {
                    stack.push(d);
                }
            }
        }
        out
    };
    let mut out = BTreeSet::new();
    out.insert(vec![]);
    let mut level: BTreeMap<Vec<TransId>, BTreeSet<usize>> = BTreeMap::new();
    level.insert(vec![], closure(&[g.initial].into_iter().collect()));
    for _ in 0..depth {
        let mut next: BTreeMap<Vec<TransId>, BTreeSet<usize>> = BTreeMap::new();
        for (seq, classes) in &level {
            for &c in classes {
                for &(t, d) in &g.succ[c] {
                    if !is_obs(t) {
                        let mut s = seq.clone();
                        s.push(t);
                        next.entry(s).or_default().insert(d);
                    }
                }
            }
        }
        level = next.into_iter().map(|(s, cs)| (s, closure(&cs))).collect();
        out.extend(level.keys().cloned());
    }
    out
}

/// True if composing the observer leaves the projected system traces of
/// length at most `depth` unchanged.
pub fn check_noninterference(
    sys: &Tts,
    obs: &ObserverProduct,
    depth: usize,
    limits: &Limits,
) -> Result<bool, ExploreError> {
    if obs.monitor.is_none() {
        return Ok(true);
    }
    let bare = build_graph(sys, limits)?;
    let comp = build_graph(&obs.tts, limits)?;
    Ok(projected_sequences(&bare, sys, depth) == projected_sequences(&comp, &obs.tts, depth))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated,
    /// Exploration or checking stopped at a resource limit.
    Unknown(String),
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::Unknown(_) => "unknown",
        }
    }
}

/// Result of checking one pattern.
#[derive(Debug)]
pub struct Outcome {
    pub verdict: Verdict,
    pub product: ObserverProduct,
    pub graph: ClassGraph,
    pub counterexample: Option<Counterexample>,
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    pub limits: Limits,
    /// Bound on product states explored by the LTL checker.
    pub max_product: Option<usize>,
}

/// Builds the composed class graph and evaluates the verdict rule.
pub fn check_pattern(
    sys: &Tts,
    p: &ResolvedPattern,
    opts: &CheckOptions,
) -> Result<Outcome, PatternError> {
    let product = compile_pattern(p, sys)?;
    let (graph, partial) = match build_graph(&product.tts, &opts.limits) {
        Ok(g) => (g, None),
        Err(ExploreError::LimitExceeded { limit, partial }) => (*partial, Some(limit)),
        Err(ExploreError::Fire(e)) => return Err(PatternError::Compose(e.to_string())),
    };
    let max_product = opts.max_product.unwrap_or(50_000_000);
    let lasso: Option<Lasso> = match &product.rule {
        VerdictRule::Safety(bad) => ltl::reach(&graph, |c| bad.holds(&graph.class(c).state)),
        VerdictRule::Ltl(f) if ltl::invariant_operand(f).is_some() => {
            let p = ltl::invariant_operand(f).expect("checked");
            ltl::reach(&graph, |c| ltl::state_holds(&graph, p, c))
        }
        VerdictRule::Ltl(f) if partial.is_none() => {
            match ltl::check(&graph, &product.tts, f, max_product) {
                Ok(LtlVerdict::Holds) => None,
                Ok(LtlVerdict::Violated(l)) => Some(l),
                Err(LtlError::Exhausted(n)) => {
                    return Ok(Outcome {
                        verdict: Verdict::Unknown(format!("product exceeds {n} states")),
                        product,
                        graph,
                        counterexample: None,
                    })
                }
                Err(e) => return Err(PatternError::Compose(e.to_string())),
            }
        }
        VerdictRule::Ltl(_) => None,
    };
    let verdict = match (&lasso, partial) {
        (Some(_), _) => Verdict::Violated,
        (None, None) => Verdict::Holds,
        (None, Some(limit)) => Verdict::Unknown(format!("stopped at {limit}")),
    };
    let counterexample = lasso.map(|l| Counterexample::new(&graph, &product.tts, l));
    Ok(Outcome {
        verdict,
        product,
        graph,
        counterexample,
    })
}

/// Resolves and checks a declared property.
pub fn check_property(
    prog: &Program,
    sys: &Tts,
    decl: &PropertyDecl,
    opts: &CheckOptions,
) -> Result<Outcome, PatternError> {
    let p = resolve_pattern(prog, sys, &decl.body)?;
    check_pattern(sys, &p, opts)
}
