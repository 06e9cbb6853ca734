//! Random small systems for cross-validation.

use rand::Rng;

use crate::ast::BinOp;
use crate::time::{rat, TimeInterval};
use crate::tts::{Action, CExpr, Domain, Event, Tts, TtsBuilder};

#[derive(Clone, Debug)]
pub struct RandomOptions {
    pub max_transitions: usize,
    pub max_bound: i64,
    pub open_bounds: bool,
    pub priorities: bool,
}

impl Default for RandomOptions {
    fn default() -> Self {
        RandomOptions {
            max_transitions: 4,
            max_bound: 4,
            open_bounds: true,
            priorities: true,
        }
    }
}

fn interval<R: Rng>(rng: &mut R, opts: &RandomOptions, point: bool) -> TimeInterval {
    let lo = rng.gen_range(0..=opts.max_bound);
    if point {
        return TimeInterval::closed(lo, lo);
    }
    let hi = if rng.gen_bool(0.15) {
        None
    } else {
        Some(rng.gen_range(lo..=opts.max_bound))
    };
    let mut ls = opts.open_bounds && rng.gen_bool(0.3);
    let mut hs = hi.is_none() || (opts.open_bounds && rng.gen_bool(0.3));
    if hi == Some(lo) {
        ls = false;
        hs = false;
    }
    TimeInterval::new(rat(lo), ls, hi.map(rat), hs).expect("nonempty by construction")
}

/// A random system with one or two instances, a shared boolean and at most
/// `max_transitions` transitions.
pub fn random_tts<R: Rng>(rng: &mut R, opts: &RandomOptions) -> Tts {
    let mut b = TtsBuilder::new();
    let ninst = rng.gen_range(1..=2);
    let nloc: Vec<u16> = (0..ninst).map(|_| rng.gen_range(1..=3)).collect();
    let insts: Vec<usize> = (0..ninst)
        .map(|i| {
            let names: Vec<String> = (0..nloc[i]).map(|l| format!("l{l}")).collect();
            let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
            b.instance(&format!("p{i}"), &refs)
        })
        .collect();
    let x = b.var("x", Domain::Bool, 0);
    let port = if ninst == 2 {
        Some(b.port("sync", TimeInterval::unbounded(), insts.clone()))
    } else {
        None
    };
    let n = rng.gen_range(1..=opts.max_transitions);
    let mut points = Vec::new();
    for k in 0..n {
        let point = opts.priorities && rng.gen_bool(0.3);
        let iv = interval(rng, opts, point);
        let guard = match rng.gen_range(0..4) {
            0 => CExpr::Var(x),
            1 => CExpr::Unary(crate::ast::UnOp::Not, Box::new(CExpr::Var(x))),
            _ => CExpr::Const(1),
        };
        let effects = if rng.gen_bool(0.4) {
            vec![Action::Assign(
                x,
                CExpr::Binary(
                    BinOp::Eq,
                    Box::new(CExpr::Var(x)),
                    Box::new(CExpr::Const(0)),
                ),
            )]
        } else {
            vec![]
        };
        let name = format!("t{k}");
        let id = match port {
            Some(p) if rng.gen_bool(0.25) => {
                let moves: Vec<(usize, u16, u16)> = insts
                    .iter()
                    .map(|&i| (i, rng.gen_range(0..nloc[i]), rng.gen_range(0..nloc[i])))
                    .collect();
                b.transition(&name, Event::Port(p), &moves, guard, effects, iv)
            }
            _ => {
                let i = rng.gen_range(0..ninst);
                let mv = [(
                    insts[i],
                    rng.gen_range(0..nloc[i]),
                    rng.gen_range(0..nloc[i]),
                )];
                b.transition(&name, Event::Tau(insts[i]), &mv, guard, effects, iv)
            }
        };
        if iv.is_point() {
            points.push(id);
        }
    }
    if opts.priorities {
        for &h in &points {
            if rng.gen_bool(0.5) {
                let lows: Vec<usize> = (0..n).filter(|&l| l > h).collect();
                if !lows.is_empty() {
                    b.priority(h, lows[rng.gen_range(0..lows.len())]);
                }
            }
        }
    }
    b.finish().expect("acyclic priorities over point intervals")
}
