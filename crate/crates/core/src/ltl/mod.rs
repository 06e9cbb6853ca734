//! State/event LTL model checking over class graphs.

mod buchi;
mod eval;
mod timestamp;

pub use buchi::{to_buchi, Buchi, BuchiState, Nnf, SizeExceeded};
pub use eval::eval_lasso;
pub use timestamp::{timestamp, InfeasiblePath};

use std::collections::HashMap;
use std::fmt::Write;

use crate::ast::Formula;
use crate::classgraph::ClassGraph;
use crate::time::TimeInterval;
use crate::tts::{eval_atom, Atom, TransId, Tts};

/// Proposition of the logic: a resolved atom or the deadlock predicate.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Prop {
    Atom(Atom),
    Dead,
}

/// One position of a run: the class, the transition fired from it (`None`
/// for the stutter step of a dead class) and the class reached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub class: usize,
    pub transition: Option<TransId>,
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lasso {
    pub prefix: Vec<Step>,
    /// Empty for a finite witness of a safety violation.
    pub cycle: Vec<Step>,
}

impl Lasso {
    pub fn steps(&self) -> impl Iterator<Item = &Step> {
        self.prefix.iter().chain(self.cycle.iter())
    }

    /// Fired transitions, stutter steps omitted.
    pub fn transitions(&self) -> Vec<TransId> {
        self.steps().filter_map(|s| s.transition).collect()
    }
}

/// Lasso with per-step absolute time bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub lasso: Lasso,
    /// One interval per step of `prefix` then `cycle`; `None` for stutter.
    pub times: Vec<Option<TimeInterval>>,
}

impl Counterexample {
    pub fn new(g: &ClassGraph, tts: &Tts, lasso: Lasso) -> Counterexample {
        let path: Vec<(usize, Option<TransId>, usize)> = lasso
            .steps()
            .map(|s| (s.class, s.transition, s.target))
            .collect();
        let times = timestamp(g, tts, &path).unwrap_or_else(|_| vec![None; path.len()]);
        Counterexample { lasso, times }
    }

    /// One line per step: `#k  t=[lo,hi]  event  ->  class-summary`.
    pub fn render(&self, g: &ClassGraph, tts: &Tts) -> String {
        let mut out = String::new();
        let n = self.lasso.prefix.len();
        for (k, step) in self.lasso.steps().enumerate() {
            if k == n && !self.lasso.cycle.is_empty() {
                out.push_str("-- cycle --\n");
            }
            let time = match &self.times[k] {
                Some(i) => i.to_string(),
                None => "-".to_string(),
            };
            let event = match step.transition {
                Some(t) => tts.transition_label(t).to_string(),
                None => "(stutter)".to_string(),
            };
            let _ = writeln!(
                out,
                "#{k}  t={time}  {event}  ->  {}",
                tts.show_state(&g.class(step.target).state)
            );
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LtlVerdict {
    Holds,
    Violated(Lasso),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error(transparent)]
    Size(#[from] SizeExceeded),
    #[error("product exceeds {0} states")]
    Exhausted(usize),
    #[error("graph is partial")]
    Partial,
}

pub const DEFAULT_NODE_BUDGET: usize = 100_000;

/// Interns propositions and converts to negation normal form.
#[derive(Default)]
pub struct PropTable {
    pub props: Vec<Prop>,
    ids: HashMap<Prop, usize>,
}

impl PropTable {
    fn id(&mut self, p: Prop) -> usize {
        if let Some(&i) = self.ids.get(&p) {
            return i;
        }
        self.props.push(p.clone());
        self.ids.insert(p, self.props.len() - 1);
        self.props.len() - 1
    }

    pub fn nnf(&mut self, f: &Formula<Atom>, positive: bool) -> Nnf {
        use Formula as F;
        match (f, positive) {
            (F::True, true) | (F::False, false) => Nnf::True,
            (F::True, false) | (F::False, true) => Nnf::False,
            (F::Atom(a), pos) => Nnf::Lit(pos, self.id(Prop::Atom(a.clone()))),
            (F::Dead, pos) => Nnf::Lit(pos, self.id(Prop::Dead)),
            (F::Not(a), pos) => self.nnf(a, !pos),
            (F::And(a, b), true) | (F::Or(a, b), false) => {
                Nnf::and(self.nnf(a, positive), self.nnf(b, positive))
            }
            (F::Or(a, b), true) | (F::And(a, b), false) => {
                Nnf::or(self.nnf(a, positive), self.nnf(b, positive))
            }
            (F::Implies(a, b), true) => Nnf::or(self.nnf(a, false), self.nnf(b, true)),
            (F::Implies(a, b), false) => Nnf::and(self.nnf(a, true), self.nnf(b, false)),
            (F::Next(a), pos) => Nnf::Next(Box::new(self.nnf(a, pos))),
            (F::Until(a, b), true) => Nnf::until(self.nnf(a, true), self.nnf(b, true)),
            (F::Until(a, b), false) => Nnf::release(self.nnf(a, false), self.nnf(b, false)),
            (F::Release(a, b), true) => Nnf::release(self.nnf(a, true), self.nnf(b, true)),
            (F::Release(a, b), false) => Nnf::until(self.nnf(a, false), self.nnf(b, false)),
            (F::Always(a), true) | (F::Eventually(a), false) => {
                Nnf::release(Nnf::False, self.nnf(a, positive))
            }
            (F::Eventually(a), true) | (F::Always(a), false) => {
                Nnf::until(Nnf::True, self.nnf(a, positive))
            }
        }
    }
}

/// Truth of a proposition at a run position.
pub fn prop_holds(
    p: &Prop,
    g: &ClassGraph,
    tts: &Tts,
    class: usize,
    t: Option<TransId>,
    first: bool,
) -> bool {
    match p {
        Prop::Dead => g.is_dead(class),
        Prop::Atom(a) => eval_atom(
            a,
            t.map(|t| &tts.transitions[t]),
            &g.class(class).state,
            first,
        ),
    }
}

/// Outgoing positions of a class: its edges, or a stutter step if dead.
fn moves(g: &ClassGraph, c: usize) -> Vec<(Option<TransId>, usize)> {
    if g.succ[c].is_empty() {
        vec![(None, c)]
    } else {
        g.succ[c].iter().map(|&(t, d)| (Some(t), d)).collect()
    }
}

/// Product position: class, index into `moves`, automaton state, first flag.
type Pos = (usize, usize, usize, bool);

struct Product<'a> {
    g: &'a ClassGraph,
    tts: &'a Tts,
    b: Buchi,
    props: Vec<Prop>,
    moves: Vec<Vec<(Option<TransId>, usize)>>,
}

impl Product<'_> {
    fn consistent(&self, q: usize, c: usize, m: usize, first: bool) -> bool {
        let t = self.moves[c][m].0;
        self.b.states[q]
            .label
            .iter()
            .all(|&(v, p)| prop_holds(&self.props[p], self.g, self.tts, c, t, first) == v)
    }

    fn initial(&self) -> Vec<Pos> {
        let c = self.g.initial;
        let mut out = Vec::new();
        for &q in &self.b.initial {
            for m in 0..self.moves[c].len() {
                if self.consistent(q, c, m, true) {
                    out.push((c, m, q, true));
                }
            }
        }
        out
    }

    fn succ(&self, (c, m, q, _): Pos) -> Vec<Pos> {
        let d = self.moves[c][m].1;
        let mut out = Vec::new();
        for &q2 in &self.b.states[q].succ {
            for m2 in 0..self.moves[d].len() {
                if self.consistent(q2, d, m2, false) {
                    out.push((d, m2, q2, false));
                }
            }
        }
        out
    }

    fn accepting(&self, p: Pos) -> bool {
        self.b.states[p.2].accepting
    }

    fn step(&self, (c, m, _, _): Pos) -> Step {
        let (t, d) = self.moves[c][m];
        Step {
            class: c,
            transition: t,
            target: d,
        }
    }
}

/// Checks `f` on every infinite run of the graph (dead classes stutter).
pub fn check(
    g: &ClassGraph,
    tts: &Tts,
    f: &Formula<Atom>,
    max_states: usize,
) -> Result<LtlVerdict, LtlError> {
    if g.expanded < g.len() {
        return Err(LtlError::Partial);
    }
    let mut table = PropTable::default();
    let neg = table.nnf(f, false);
    let b = to_buchi(&neg, DEFAULT_NODE_BUDGET)?;
    let moves = (0..g.len()).map(|c| moves(g, c)).collect();
    let prod = Product {
        g,
        tts,
        b,
        props: table.props,
        moves,
    };
    match nested_dfs(&prod, max_states)? {
        None => Ok(LtlVerdict::Holds),
        Some((prefix, cycle)) => Ok(LtlVerdict::Violated(Lasso {
            prefix: prefix.into_iter().map(|p| prod.step(p)).collect(),
            cycle: cycle.into_iter().map(|p| prod.step(p)).collect(),
        })),
    }
}

type Found = Option<(Vec<Pos>, Vec<Pos>)>;

/// Iterative nested depth-first search for an accepting cycle.
fn nested_dfs(prod: &Product<'_>, max_states: usize) -> Result<Found, LtlError> {
    let mut index: HashMap<Pos, usize> = HashMap::new();
    let mut blue_done: Vec<bool> = Vec::new();
    let mut red: Vec<bool> = Vec::new();
    let mut on_stack: Vec<bool> = Vec::new();
    let mut all: Vec<Pos> = Vec::new();
    let mut intern = |p: Pos,
                      all: &mut Vec<Pos>,
                      blue_done: &mut Vec<bool>,
                      red: &mut Vec<bool>,
                      on_stack: &mut Vec<bool>|
     -> Result<(usize, bool), LtlError> {
        if let Some(&i) = index.get(&p) {
            return Ok((i, false));
        }
        if all.len() >= max_states {
            return Err(LtlError::Exhausted(max_states));
        }
        all.push(p);
        blue_done.push(false);
        red.push(false);
        on_stack.push(false);
        index.insert(p, all.len() - 1);
        Ok((all.len() - 1, true))
    };
    for init in prod.initial() {
        let (root, fresh) = intern(init, &mut all, &mut blue_done, &mut red, &mut on_stack)?;
        if !fresh {
            continue;
        }
        // blue stack of (node, successors, next successor index)
        let mut stack: Vec<(usize, Vec<Pos>, usize)> = vec![(root, prod.succ(init), 0)];
        on_stack[root] = true;
        while let Some(top) = stack.last_mut() {
            if top.2 < top.1.len() {
                let p = top.1[top.2];
                top.2 += 1;
                let (i, fresh) = intern(p, &mut all, &mut blue_done, &mut red, &mut on_stack)?;
                if fresh {
                    on_stack[i] = true;
                    stack.push((i, prod.succ(p), 0));
                }
                continue;
            }
            let (node, _, _) = stack.pop().unwrap();
            if prod.accepting(all[node]) {
                // red search for a path back to the blue stack
                let mut rstack: Vec<(usize, Vec<Pos>, usize)> =
                    vec![(node, prod.succ(all[node]), 0)];
                red[node] = true;
                let mut hit = None;
                'red: while let Some(top) = rstack.last_mut() {
                    if top.2 < top.1.len() {
                        let p = top.1[top.2];
                        top.2 += 1;
                        let (i, _) = intern(p, &mut all, &mut blue_done, &mut red, &mut on_stack)?;
                        if on_stack[i] || i == node {
                            hit = Some(i);
                            break 'red;
                        }
                        if !red[i] {
                            red[i] = true;
                            rstack.push((i, prod.succ(p), 0));
                        }
                        continue;
                    }
                    rstack.pop();
                }
                if let Some(target) = hit {
                    let blue: Vec<usize> = stack.iter().map(|e| e.0).chain([node]).collect();
                    let red_path: Vec<usize> = rstack.iter().skip(1).map(|e| e.0).collect();
                    let cut = blue
                        .iter()
                        .position(|&b| b == target)
                        .expect("target on stack");
                    let prefix = blue[..cut].iter().map(|&i| all[i]).collect();
                    let cycle = blue[cut..]
                        .iter()
                        .chain(red_path.iter())
                        .map(|&i| all[i])
                        .collect();
                    return Ok(Some((prefix, cycle)));
                }
            }
            on_stack[node] = false;
            blue_done[node] = true;
        }
    }
    Ok(None)
}

/// Shortest path from the initial class to a class satisfying `bad`.
pub fn reach(g: &ClassGraph, bad: impl Fn(usize) -> bool) -> Option<Lasso> {
    let mut parent: Vec<Option<(usize, TransId)>> = vec![None; g.len()];
    let mut seen = vec![false; g.len()];
    let mut queue = std::collections::VecDeque::from([g.initial]);
    seen[g.initial] = true;
    while let Some(c) = queue.pop_front() {
        if bad(c) {
            let mut prefix = Vec::new();
            let mut cur = c;
            while let Some((p, t)) = parent[cur] {
                prefix.push(Step {
                    class: p,
                    transition: Some(t),
                    target: cur,
                });
                cur = p;
            }
            prefix.reverse();
            return Some(Lasso {
                prefix,
                cycle: vec![],
            });
        }
        for &(t, d) in &g.succ[c] {
            if !seen[d] {
                seen[d] = true;
                parent[d] = Some((c, t));
                queue.push_back(d);
            }
        }
    }
    None
}

/// `p` when `f` is `[] not p` and `p` only reads class state.
pub fn invariant_operand(f: &Formula<Atom>) -> Option<&Formula<Atom>> {
    fn state_only(f: &Formula<Atom>) -> bool {
        match f {
            Formula::True | Formula::False | Formula::Dead => true,
            Formula::Atom(a) => matches!(a, Atom::State(..) | Atom::Value(_)),
            Formula::Not(a) => state_only(a),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                state_only(a) && state_only(b)
            }
            _ => false,
        }
    }
    match f {
        Formula::Always(g) => match &**g {
            Formula::Not(p) if state_only(p) => Some(p),
            _ => None,
        },
        _ => None,
    }
}

/// Truth of a state-only formula at a class.
pub fn state_holds(g: &ClassGraph, f: &Formula<Atom>, class: usize) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Dead => g.is_dead(class),
        Formula::Atom(a) => eval_atom(a, None, &g.class(class).state, false),
        Formula::Not(a) => !state_holds(g, a, class),
        Formula::And(a, b) => state_holds(g, a, class) && state_holds(g, b, class),
        Formula::Or(a, b) => state_holds(g, a, class) || state_holds(g, b, class),
        Formula::Implies(a, b) => !state_holds(g, a, class) || state_holds(g, b, class),
        _ => panic!("temporal operator in state formula"),
    }
}
