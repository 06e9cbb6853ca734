//! State-class graph construction.

use std::fmt::Write;
use std::time::{Duration, Instant};

use indexmap::IndexSet;
use rayon::prelude::*;

use crate::domain::{interval_bounds, le, lt, Dbm, INF};
use crate::time::{common_scale, Rat, TimeInterval};
use crate::tts::{DiscreteState, FireError, TransId, Tts};

/// Discrete state plus a canonical firing domain. Variable `k` of the
/// domain is the k-th enabled transition in increasing id order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateClass {
    pub state: DiscreteState,
    pub enabled: Box<[TransId]>,
    pub dbm: Dbm,
}

impl StateClass {
    pub fn is_dead(&self) -> bool {
        self.enabled.is_empty()
    }

    fn var(&self, t: TransId) -> Option<usize> {
        self.enabled.binary_search(&t).ok().map(|k| k + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassError {
    #[error("transition {0} is not firable")]
    NotFirable(TransId),
    #[error(transparent)]
    Fire(#[from] FireError),
}

/// Static data shared by all class computations for one TTS.
pub struct Explorer<'a> {
    pub tts: &'a Tts,
    /// Common denominator of every interval bound.
    pub scale: i64,
    bounds: Vec<(i64, i64)>,
}

impl<'a> Explorer<'a> {
    pub fn new(tts: &'a Tts) -> Self {
        let scale = common_scale(tts.transitions.iter().flat_map(|t| t.interval.bounds()));
        let bounds = tts
            .transitions
            .iter()
            .map(|t| interval_bounds(&t.interval, scale))
            .collect();
        Explorer { tts, scale, bounds }
    }

    pub fn initial_class(&self) -> StateClass {
        let state = self.tts.initial.clone();
        let enabled: Box<[TransId]> = self.tts.enabled(&state).into();
        let b: Vec<(i64, i64)> = enabled.iter().map(|&t| self.bounds[t]).collect();
        StateClass {
            state,
            enabled,
            dbm: Dbm::boxes(&b),
        }
    }

    /// Domain of `c` restricted to runs where `t` fires first, or `None`.
    fn fire_first(&self, c: &StateClass, t: TransId) -> Option<Dbm> {
        let k = c.var(t)?;
        let mut d = c.dbm.clone();
        for u in 1..d.dim {
            if u != k && !d.constrain(k, u, le(0)) {
                return None;
            }
        }
        for &h in &self.tts.dominators[t] {
            if let Some(hk) = c.var(h) {
                if !d.constrain(k, hk, lt(0)) {
                    return None;
                }
            }
        }
        Some(d)
    }

    pub fn firable(&self, c: &StateClass) -> Vec<TransId> {
        c.enabled
            .iter()
            .copied()
            .filter(|&t| self.fire_first(c, t).is_some())
            .collect()
    }

    pub fn successor(&self, c: &StateClass, t: TransId) -> Result<Vec<StateClass>, ClassError> {
        let d = self.fire_first(c, t).ok_or(ClassError::NotFirable(t))?;
        let k = c.var(t).expect("firable implies enabled");
        let mut out = Vec::new();
        for state in self.tts.fire(&c.state, t)? {
            let enabled: Box<[TransId]> = self.tts.enabled(&state).into();
            // old index of each new variable, None when fresh
            let origin: Vec<Option<usize>> = enabled
                .iter()
                .map(|&u| if u == t { None } else { c.var(u) })
                .collect();
            let dim = enabled.len() + 1;
            let mut m = Dbm {
                dim,
                m: vec![INF; dim * dim].into_boxed_slice(),
            };
            m.set(0, 0, le(0));
            for (a, oa) in origin.iter().enumerate() {
                let a = a + 1;
                match oa {
                    Some(i) => {
                        m.set(a, 0, d.get(*i, k));
                        m.set(0, a, d.get(k, *i));
                    }
                    None => {
                        let (up, low) = self.bounds[enabled[a - 1]];
                        m.set(a, 0, up);
                        m.set(0, a, low);
                    }
                }
            }
            for (a, oa) in origin.iter().enumerate() {
                for (b, ob) in origin.iter().enumerate() {
                    let v = match (oa, ob) {
                        _ if a == b => le(0),
                        (Some(i), Some(j)) => d.get(*i, *j),
                        _ => crate::domain::add(m.get(a + 1, 0), m.get(0, b + 1)),
                    };
                    m.set(a + 1, b + 1, v);
                }
            }
            out.push(StateClass {
                state,
                enabled,
                dbm: m,
            });
        }
        Ok(out)
    }

    /// Bounds of variable `t` in `c`, unscaled.
    pub fn delay_bounds(&self, c: &StateClass, t: TransId) -> Option<TimeInterval> {
        let k = c.var(t)?;
        let up = c.dbm.get(k, 0);
        let low = c.dbm.get(0, k);
        let r = |v: i64| Rat::new(v, self.scale);
        let upper = if up == INF {
            None
        } else {
            Some(r(crate::domain::value(up)))
        };
        TimeInterval::new(
            r(-crate::domain::value(low)),
            crate::domain::is_strict(low),
            upper,
            up == INF || crate::domain::is_strict(up),
        )
        .ok()
    }

    /// Text form of a class domain, one constraint per variable.
    pub fn show_domain(&self, c: &StateClass) -> String {
        let parts: Vec<String> = c
            .enabled
            .iter()
            .filter_map(|&t| self.delay_bounds(c, t).map(|i| format!("{t}:{i}")))
            .collect();
        parts.join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_classes: usize,
    pub time_budget: Option<Duration>,
    pub threads: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_classes: 2_000_000,
            time_budget: None,
            threads: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Limit {
    Classes(usize),
    Time(Duration),
}

impl std::fmt::Display for Limit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Limit::Classes(n) => write!(f, "class limit {n}"),
            Limit::Time(d) => write!(f, "time budget {}s", d.as_secs_f64()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClassGraph {
    pub classes: IndexSet<StateClass>,
    /// Outgoing `(transition, target)` per class, in discovery order.
    pub succ: Vec<Vec<(TransId, usize)>>,
    pub initial: usize,
    pub scale: i64,
    /// Number of classes whose successors were computed; less than the
    /// class count only for partial graphs.
    pub expanded: usize,
    pub elapsed: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum ExploreError {
    #[error("exploration stopped at {limit} after {} classes", partial.len())]
    LimitExceeded {
        limit: Limit,
        partial: Box<ClassGraph>,
    },
    #[error(transparent)]
    Fire(#[from] FireError),
}

impl ClassGraph {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(|s| s.len()).sum()
    }

    pub fn class(&self, i: usize) -> &StateClass {
        &self.classes[i]
    }

    pub fn is_dead(&self, i: usize) -> bool {
        self.classes[i].is_dead()
    }

    pub fn dead(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.is_dead(i))
    }

    /// Rough memory footprint of the class store in bytes.
    pub fn memory_estimate(&self) -> usize {
        self.classes
            .iter()
            .map(|c| {
                std::mem::size_of::<StateClass>()
                    + (c.state.locs.len() * 2)
                    + (c.state.vals.len() * 4)
                    + c.enabled.len() * 8
                    + c.dbm.m.len() * 8
            })
            .sum::<usize>()
            + self.edge_count() * 16
    }

    /// Text listing: one line per class, then one line per edge.
    pub fn dump(&self, tts: &Tts) -> String {
        let mut out = String::new();
        for (i, c) in self.classes.iter().enumerate() {
            let _ = writeln!(out, "class {i} {}", tts.show_state(&c.state));
        }
        for (i, s) in self.succ.iter().enumerate() {
            for &(t, j) in s {
                let _ = writeln!(out, "edge {i} {} {j}", tts.transition_label(t));
            }
        }
        out
    }

    pub fn stats(&self) -> String {
        format!(
            "classes {} edges {} memory {} wall {:.3}s",
            self.len(),
            self.edge_count(),
            self.memory_estimate(),
            self.elapsed.as_secs_f64()
        )
    }
}

type Succs = Result<Vec<(TransId, StateClass)>, FireError>;

fn expand(ex: &Explorer<'_>, c: &StateClass) -> Succs {
    let mut out = Vec::new();
    for t in ex.firable(c) {
        match ex.successor(c, t) {
            Ok(v) => out.extend(v.into_iter().map(|s| (t, s))),
            Err(ClassError::Fire(e)) => return Err(e),
            Err(ClassError::NotFirable(_)) => unreachable!("firable transition rejected"),
        }
    }
    Ok(out)
}

/// Exhaustive breadth-first construction. Classes are numbered in
/// discovery order; the result does not depend on the thread count.
pub fn build_graph(tts: &Tts, limits: &Limits) -> Result<ClassGraph, ExploreError> {
    let start = Instant::now();
    let ex = Explorer::new(tts);
    let mut g = ClassGraph {
        classes: IndexSet::new(),
        succ: Vec::new(),
        initial: 0,
        scale: ex.scale,
        expanded: 0,
        elapsed: Duration::ZERO,
    };
    g.classes.insert(ex.initial_class());
    let pool = if limits.threads > 1 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(limits.threads)
            .build()
            .ok()
    } else {
        None
    };
    let chunk = if pool.is_some() {
        512 * limits.threads
    } else {
        1
    };
    let mut next = 0;
    let stop = |mut g: ClassGraph, limit: Limit| {
        g.expanded = g.succ.len();
        g.succ.resize(g.classes.len(), Vec::new());
        g.elapsed = start.elapsed();
        ExploreError::LimitExceeded {
            limit,
            partial: Box::new(g),
        }
    };
    while next < g.classes.len() {
        if let Some(budget) = limits.time_budget {
            if start.elapsed() > budget {
                return Err(stop(g, Limit::Time(budget)));
            }
        }
        let hi = (next + chunk).min(g.classes.len());
        let results: Vec<Succs> = match &pool {
            Some(pool) => pool.install(|| {
                (next..hi)
                    .into_par_iter()
                    .map(|i| expand(&ex, &g.classes[i]))
                    .collect()
            }),
            None => (next..hi).map(|i| expand(&ex, &g.classes[i])).collect(),
        };
        for r in results {
            let mut edges = Vec::new();
            for (t, c) in r? {
                let (j, _) = g.classes.insert_full(c);
                edges.push((t, j));
            }
            g.succ.push(edges);
            if g.classes.len() > limits.max_classes {
                return Err(stop(g, Limit::Classes(limits.max_classes)));
            }
        }
        next = hi;
    }
    g.expanded = g.len();
    g.elapsed = start.elapsed();
    Ok(g)
}

/// All transition sequences of length at most `depth` from the initial class.
pub fn sequences(g: &ClassGraph, depth: usize) -> std::collections::BTreeSet<Vec<TransId>> {
    let mut out = std::collections::BTreeSet::new();
    let mut level: std::collections::BTreeMap<Vec<TransId>, std::collections::BTreeSet<usize>> =
        [(vec![], [g.initial].into_iter().collect())]
            .into_iter()
            .collect();
    out.insert(vec![]);
    for _ in 0..depth {
        let mut next: std::collections::BTreeMap<Vec<TransId>, std::collections::BTreeSet<usize>> =
            Default::default();
        for (seq, classes) in &level {
            for &c in classes {
                for &(t, d) in &g.succ[c] {
                    let mut s = seq.clone();
                    s.push(t);
                    next.entry(s).or_default().insert(d);
                }
            }
        }
        out.extend(next.keys().cloned());
        level = next;
    }
    out
}
