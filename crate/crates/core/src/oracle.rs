//! Discrete-time brute-force exploration, used to validate the class graph.
//!
//! Clocks advance in steps of a fixed granularity. Transitions fire only at
//! grid points, time may not step past any enabled upper bound, and a
//! transition is blocked while a dominating one can fire.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use num::{Integer, Zero};

use crate::time::{Rat, TimeInterval};
use crate::tts::{DiscreteState, FireError, TransId, Tts};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("granularity too coarse; try {}", crate::time::fmt_rat(.suggestion))]
    GranularityTooCoarse { suggestion: Rat },
    #[error("more than {0} configurations")]
    HorizonExceeded(usize),
    #[error(transparent)]
    Fire(#[from] FireError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Config {
    state: DiscreteState,
    /// `(transition, clock in grid units)` for every enabled transition.
    clocks: Vec<(TransId, i64)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleResult {
    pub states: BTreeSet<DiscreteState>,
    /// Transitions fired from each discrete state in some configuration.
    pub firable: BTreeMap<DiscreteState, BTreeSet<TransId>>,
    /// Discrete states reached with no enabled transition.
    pub dead: BTreeSet<DiscreteState>,
    pub granularity: Rat,
}

struct Grid {
    g: Rat,
    /// `(lower, lower_strict, upper, upper_strict)` in grid units.
    bounds: Vec<(i64, bool, Option<i64>, bool)>,
}

impl Grid {
    fn new(tts: &Tts, g: Rat) -> Result<Grid, OracleError> {
        let mut bounds = Vec::new();
        for t in &tts.transitions {
            let units = |r: Rat| -> Result<i64, OracleError> {
                let q = r / g;
                if q.is_integer() {
                    Ok(q.to_integer())
                } else {
                    Err(OracleError::GranularityTooCoarse {
                        suggestion: finer(g, r),
                    })
                }
            };
            let TimeInterval {
                lower,
                lower_strict,
                upper,
                upper_strict,
            } = t.interval;
            bounds.push((
                units(lower)?,
                lower_strict,
                upper.map(units).transpose()?,
                upper_strict,
            ));
        }
        Ok(Grid { g, bounds })
    }

    fn in_interval(&self, t: TransId, c: i64) -> bool {
        let (lo, ls, hi, hs) = self.bounds[t];
        let above = if ls { c > lo } else { c >= lo };
        let below = match hi {
            None => true,
            Some(h) => {
                if hs {
                    c < h
                } else {
                    c <= h
                }
            }
        };
        above && below
    }

    fn can_advance(&self, t: TransId, c: i64) -> bool {
        match self.bounds[t].2 {
            None => true,
            Some(h) => {
                if self.bounds[t].3 {
                    c + 1 < h
                } else {
                    c < h
                }
            }
        }
    }

    fn cap(&self, t: TransId, c: i64) -> i64 {
        match self.bounds[t].2 {
            None => c.min(self.bounds[t].0 + 1),
            Some(_) => c,
        }
    }
}

/// Largest granularity dividing both `g` and `r`.
fn finer(g: Rat, r: Rat) -> Rat {
    let num = g.numer().gcd(r.numer());
    let den = g.denom().lcm(r.denom());
    let f = Rat::new(num, den);
    if f.is_zero() {
        g / 2
    } else {
        f
    }
}

struct Oracle<'a> {
    tts: &'a Tts,
    grid: Grid,
    max_configs: usize,
}

impl<'a> Oracle<'a> {
    fn initial(&self) -> Config {
        let state = self.tts.initial.clone();
        let clocks = self
            .tts
            .enabled(&state)
            .into_iter()
            .map(|t| (t, 0))
            .collect();
        Config { state, clocks }
    }

    fn firable(&self, c: &Config) -> Vec<TransId> {
        let now: Vec<TransId> = c
            .clocks
            .iter()
            .filter(|&&(t, v)| self.grid.in_interval(t, v))
            .map(|&(t, _)| t)
            .collect();
        now.iter()
            .copied()
            .filter(|&t| !now.iter().any(|&h| self.tts.dominates(h, t)))
            .collect()
    }

    fn advance(&self, c: &Config) -> Option<Config> {
        if c.clocks.is_empty() || !c.clocks.iter().all(|&(t, v)| self.grid.can_advance(t, v)) {
            return None;
        }
        let clocks = c
            .clocks
            .iter()
            .map(|&(t, v)| (t, self.grid.cap(t, v + 1)))
            .collect();
        Some(Config {
            state: c.state.clone(),
            clocks,
        })
    }

    fn fire(&self, c: &Config, t: TransId) -> Result<Vec<Config>, OracleError> {
        let mut out = Vec::new();
        for state in self.tts.fire(&c.state, t)? {
            let clocks = self
                .tts
                .enabled(&state)
                .into_iter()
                .map(|u| {
                    let old = c.clocks.iter().find(|&&(v, _)| v == u).map(|&(_, k)| k);
                    (u, if u == t { 0 } else { old.unwrap_or(0) })
                })
                .collect();
            out.push(Config { state, clocks });
        }
        Ok(out)
    }

    /// Discrete successors of a configuration, with time elapsing first.
    fn steps(&self, c: &Config) -> Result<Vec<(TransId, Config)>, OracleError> {
        let mut out = Vec::new();
        for d in self.time_closure(c)? {
            for t in self.firable(&d) {
                out.extend(self.fire(&d, t)?.into_iter().map(|n| (t, n)));
            }
        }
        Ok(out)
    }

    fn time_closure(&self, c: &Config) -> Result<Vec<Config>, OracleError> {
        let mut out = vec![c.clone()];
        let mut cur = c.clone();
        while let Some(next) = self.advance(&cur) {
            if next == cur {
                break;
            }
            out.push(next.clone());
            cur = next;
        }
        if !cur.clocks.is_empty() && self.advance(&cur).is_none() && self.firable(&cur).is_empty() {
            return Err(OracleError::GranularityTooCoarse {
                suggestion: self.grid.g / 2,
            });
        }
        if out.len() > self.max_configs {
            return Err(OracleError::HorizonExceeded(self.max_configs));
        }
        Ok(out)
    }
}

const MAX_CONFIGS: usize = 2_000_000;

/// Reachable discrete states and firable sets at granularity `g`.
pub fn oracle_explore(tts: &Tts, g: Rat) -> Result<OracleResult, OracleError> {
    let o = Oracle {
        tts,
        grid: Grid::new(tts, g)?,
        max_configs: MAX_CONFIGS,
    };
    let mut res = OracleResult {
        granularity: g,
        ..OracleResult::default()
    };
    let init = o.initial();
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(init.clone());
    queue.push_back(init);
    while let Some(c) = queue.pop_front() {
        res.states.insert(c.state.clone());
        if c.clocks.is_empty() {
            res.dead.insert(c.state.clone());
        }
        let entry = res.firable.entry(c.state.clone()).or_default();
        for (t, n) in o.steps(&c)? {
            entry.insert(t);
            if seen.insert(n.clone()) {
                if seen.len() > o.max_configs {
                    return Err(OracleError::HorizonExceeded(o.max_configs));
                }
                queue.push_back(n);
            }
        }
    }
    Ok(res)
}

/// Like [`oracle_explore`], halving the granularity while it is too coarse.
pub fn oracle_explore_refining(
    tts: &Tts,
    mut g: Rat,
    max_halvings: u32,
) -> Result<OracleResult, OracleError> {
    let mut left = max_halvings;
    loop {
        match oracle_explore(tts, g) {
            Err(OracleError::GranularityTooCoarse { suggestion }) if left > 0 => {
                g = suggestion;
                left -= 1;
            }
            r => return r,
        }
    }
}

/// All fired-transition sequences of length at most `depth`.
pub fn oracle_sequences(
    tts: &Tts,
    g: Rat,
    depth: usize,
) -> Result<BTreeSet<Vec<TransId>>, OracleError> {
    let o = Oracle {
        tts,
        grid: Grid::new(tts, g)?,
        max_configs: MAX_CONFIGS,
    };
    let mut out = BTreeSet::new();
    let mut level: BTreeMap<Vec<TransId>, BTreeSet<Config>> = BTreeMap::new();
    level.insert(vec![], [o.initial()].into_iter().collect());
    out.insert(vec![]);
    for _ in 0..depth {
        let mut next: BTreeMap<Vec<TransId>, BTreeSet<Config>> = BTreeMap::new();
        for (seq, configs) in &level {
            for c in configs {
                for (t, n) in o.steps(c)? {
                    let mut s = seq.clone();
                    s.push(t);
                    next.entry(s).or_default().insert(n);
                }
            }
        }
        out.extend(next.keys().cloned());
        level = next;
    }
    Ok(out)
}

/// True if the transition sequence can be executed in discrete time.
pub fn oracle_replay(tts: &Tts, g: Rat, seq: &[TransId]) -> Result<bool, OracleError> {
    let o = Oracle {
        tts,
        grid: Grid::new(tts, g)?,
        max_configs: MAX_CONFIGS,
    };
    let mut configs: BTreeSet<Config> = [o.initial()].into_iter().collect();
    for &t in seq {
        let mut next = BTreeSet::new();
        for c in &configs {
            for d in o.time_closure(c)? {
                if o.firable(&d).contains(&t) {
                    next.extend(o.fire(&d, t)?);
                }
            }
        }
        if next.is_empty() {
            return Ok(false);
        }
        configs = next;
    }
    Ok(true)
}
