//! Direct evaluation of a formula on an ultimately periodic run.

use crate::ast::Formula;
use crate::classgraph::ClassGraph;
use crate::tts::{Atom, Tts};

use super::{prop_holds, Lasso, Prop};

/// Truth of `f` at the first position of `prefix cycle^ω`. The cycle must
/// be nonempty.
pub fn eval_lasso(g: &ClassGraph, tts: &Tts, f: &Formula<Atom>, lasso: &Lasso) -> bool {
    assert!(!lasso.cycle.is_empty(), "evaluation needs an infinite run");
    let steps: Vec<_> = lasso.steps().collect();
    let n = steps.len();
    let loop_start = lasso.prefix.len();
    let next = |i: usize| if i + 1 < n { i + 1 } else { loop_start };
    let sat = eval(
        f,
        &|p: &Prop, i: usize| prop_holds(p, g, tts, steps[i].class, steps[i].transition, i == 0),
        n,
        &next,
    );
    sat[0]
}

fn eval(
    f: &Formula<Atom>,
    at: &dyn Fn(&Prop, usize) -> bool,
    n: usize,
    next: &dyn Fn(usize) -> usize,
) -> Vec<bool> {
    use Formula as F;
    let rec = |g: &Formula<Atom>| eval(g, at, n, next);
    match f {
        F::True => vec![true; n],
        F::False => vec![false; n],
        F::Atom(a) => (0..n).map(|i| at(&Prop::Atom(a.clone()), i)).collect(),
        F::Dead => (0..n).map(|i| at(&Prop::Dead, i)).collect(),
        F::Not(a) => rec(a).into_iter().map(|b| !b).collect(),
        F::And(a, b) => rec(a)
            .into_iter()
            .zip(rec(b))
            .map(|(x, y)| x && y)
            .collect(),
        F::Or(a, b) => rec(a)
            .into_iter()
            .zip(rec(b))
            .map(|(x, y)| x || y)
            .collect(),
        F::Implies(a, b) => rec(a)
            .into_iter()
            .zip(rec(b))
            .map(|(x, y)| !x || y)
            .collect(),
        F::Next(a) => {
            let s = rec(a);
            (0..n).map(|i| s[next(i)]).collect()
        }
        F::Until(a, b) => fixpoint(&rec(a), &rec(b), false, n, next),
        F::Release(a, b) => {
            // a R b = not (not a U not b)
            let na: Vec<bool> = rec(a).into_iter().map(|x| !x).collect();
            let nb: Vec<bool> = rec(b).into_iter().map(|x| !x).collect();
            fixpoint(&na, &nb, false, n, next)
                .into_iter()
                .map(|x| !x)
                .collect()
        }
        F::Always(a) => {
            let s = rec(a);
            let ns: Vec<bool> = s.into_iter().map(|x| !x).collect();
            fixpoint(&vec![true; n], &ns, false, n, next)
                .into_iter()
                .map(|x| !x)
                .collect()
        }
        F::Eventually(a) => fixpoint(&vec![true; n], &rec(a), false, n, next),
    }
}

/// Least fixpoint of `u = b or (a and X u)`.
fn fixpoint(
    a: &[bool],
    b: &[bool],
    init: bool,
    n: usize,
    next: &dyn Fn(usize) -> usize,
) -> Vec<bool> {
    let mut u = vec![init; n];
    loop {
        let mut changed = false;
        for i in (0..n).rev() {
            let v = b[i] || (a[i] && u[next(i)]);
            if v != u[i] {
                u[i] = v;
                changed = true;
            }
        }
        if !changed {
            return u;
        }
    }
}
