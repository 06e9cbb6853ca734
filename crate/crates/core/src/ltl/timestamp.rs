//! Absolute firing-time bounds along a path of the class graph.

use crate::classgraph::ClassGraph;
use crate::domain::{interval_bounds, is_strict, le, lt, value, Dbm, INF};
use crate::time::{Rat, TimeInterval};
use crate::tts::{TransId, Tts};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("path is infeasible at step {0}")]
pub struct InfeasiblePath(pub usize);

/// Per-step `[earliest, latest]` absolute firing times along `path`, given
/// as `(class, transition, target)` triples. Stutter steps get `None`.
pub fn timestamp(
    g: &ClassGraph,
    tts: &Tts,
    path: &[(usize, Option<TransId>, usize)],
) -> Result<Vec<Option<TimeInterval>>, InfeasiblePath> {
    let fired: Vec<(usize, usize, TransId)> = path
        .iter()
        .enumerate()
        .filter_map(|(k, &(c, t, _))| t.map(|t| (k, c, t)))
        .collect();
    let n = fired.len();
    let bounds: Vec<(i64, i64)> = tts
        .transitions
        .iter()
        .map(|t| interval_bounds(&t.interval, g.scale))
        .collect();
    // variable 0 is time zero, variable k + 1 is the k-th firing
    let mut d = Dbm::boxes(&vec![(INF, le(0)); n]);
    // enabling variable of every enabled transition
    let first = path.first().map_or(g.initial, |s| s.0);
    let mut since: Vec<(TransId, usize)> = g.class(first).enabled.iter().map(|&t| (t, 0)).collect();
    let fail = |k: usize| InfeasiblePath(k);
    for (k, &(step, class, t)) in fired.iter().enumerate() {
        let me = k + 1;
        let c = g.class(class);
        if !d.constrain(me - 1, me, le(0)) {
            return Err(fail(step));
        }
        let origin = |u: TransId| since.iter().find(|e| e.0 == u).map(|e| e.1);
        let Some(en) = origin(t) else {
            return Err(fail(step));
        };
        let (up, low) = bounds[t];
        if !d.constrain(me, en, up) || !d.constrain(en, me, low) {
            return Err(fail(step));
        }
        for &u in c.enabled.iter() {
            let Some(eu) = origin(u) else {
                return Err(fail(step));
            };
            if !d.constrain(me, eu, bounds[u].0) {
                return Err(fail(step));
            }
            if tts.dominates(u, t) {
                // the dominating transition is a point: fire strictly before it
                let lo = -value(bounds[u].1);
                if !d.constrain(me, eu, lt(lo)) {
                    return Err(fail(step));
                }
            }
        }
        let target = g.class(path[step].2);
        since = target
            .enabled
            .iter()
            .map(|&u| {
                let keep = if u == t || !c.enabled.contains(&u) {
                    None
                } else {
                    origin(u)
                };
                (u, keep.unwrap_or(me))
            })
            .collect();
    }
    let r = |v: i64| Rat::new(v, g.scale);
    let mut out = Vec::with_capacity(path.len());
    let mut k = 0;
    for &(_, t, _) in path {
        if t.is_none() {
            out.push(None);
            continue;
        }
        k += 1;
        let (up, low) = (d.get(k, 0), d.get(0, k));
        let upper = if up == INF { None } else { Some(r(value(up))) };
        let i = TimeInterval::new(
            r(-value(low)),
            is_strict(low),
            upper,
            up == INF || is_strict(up),
        )
        .map_err(|_| InfeasiblePath(k - 1))?;
        out.push(Some(i));
    }
    Ok(out)
}
