//! Splits a `from` block into atomic alternatives.
//!
//! A path through a block is a prefix of guards (`on`, `if` conditions,
//! `select` choices) up to the first timing point (a `wait`, a sync, or
//! both), followed by an untimed effect that must end in `to` or `loop`.

use crate::ast::{Expr, IntervalExpr, Stmt};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alternative {
    pub guards: Vec<Expr>,
    pub waits: Vec<IntervalExpr>,
    pub sync: Option<String>,
    /// Effect executed when the transition fires.
    pub post: Vec<Stmt>,
    /// `(select, took_unless)` for every select the path went through.
    pub choices: Vec<(usize, bool)>,
}

impl Alternative {
    /// True if `self` took an unless branch of a select where `other`
    /// took a plain branch.
    pub fn dominates(&self, other: &Alternative) -> bool {
        self.choices
            .iter()
            .any(|&(sel, unless)| unless && other.choices.iter().any(|&(s2, u2)| s2 == sel && !u2))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum UnrollError {
    #[error("`{0}` after the synchronization point of a transition is not in subset")]
    Retiming(&'static str),
    #[error("a path through the block does not end with `to` or `loop`")]
    MissingTarget,
    #[error("more than {0} alternatives")]
    Overflow(usize),
}

#[derive(Clone)]
struct Path<'a> {
    todo: Vec<&'a Stmt>,
    alt: Alternative,
}

/// Unrolls a block body into its alternatives, in source order.
pub fn unroll_block(body: &Stmt, bound: usize) -> Result<Vec<Alternative>, UnrollError> {
    let mut out = Vec::new();
    let start = Path {
        todo: vec![body],
        alt: Alternative {
            guards: vec![],
            waits: vec![],
            sync: None,
            post: vec![],
            choices: vec![],
        },
    };
    let mut stack = vec![start];
    while let Some(mut path) = stack.pop() {
        let Some(stmt) = path.todo.pop() else {
            return Err(UnrollError::MissingTarget);
        };
        match stmt {
            Stmt::Null => stack.push(path),
            Stmt::Seq(items) => {
                path.todo.extend(items.iter().rev());
                stack.push(path);
            }
            Stmt::On(e) => {
                path.alt.guards.push(e.clone());
                stack.push(path);
            }
            Stmt::If(c, a, b) => {
                let mut other = path.clone();
                other.alt.guards.push(Expr::not(c.clone()));
                other.todo.push(b);
                path.alt.guards.push(c.clone());
                path.todo.push(a);
                // pushed in reverse so the then-branch is emitted first
                stack.push(other);
                stack.push(path);
            }
            Stmt::Select { branches, unless } => {
                let id = stmt as *const Stmt as usize;
                let mut alts = Vec::new();
                for (b, is_unless) in branches
                    .iter()
                    .map(|b| (b, false))
                    .chain(unless.iter().map(|b| (b, true)))
                {
                    let mut p = path.clone();
                    p.alt.choices.push((id, is_unless));
                    p.todo.push(b);
                    alts.push(p);
                }
                stack.extend(alts.into_iter().rev());
            }
            Stmt::Wait(i) => {
                path.alt.waits.push(i.clone());
                finish_timing(path, &mut out)?;
            }
            Stmt::Sync(p) => {
                path.alt.sync = Some(p.clone());
                finish_timing(path, &mut out)?;
            }
            Stmt::Assign(..) | Stmt::Any(_) | Stmt::To(_) | Stmt::Loop => {
                path.todo.push(stmt);
                finish_post(path, &mut out)?;
            }
        }
        if out.len() > bound {
            return Err(UnrollError::Overflow(bound));
        }
    }
    Ok(out)
}

/// Absorbs a directly following wait or sync into the timing point, then
/// treats the rest as the effect.
fn finish_timing(mut path: Path<'_>, out: &mut Vec<Alternative>) -> Result<(), UnrollError> {
    loop {
        let next = path.todo.pop();
        match next {
            Some(Stmt::Seq(items)) => path.todo.extend(items.iter().rev()),
            Some(Stmt::Null) => {}
            Some(Stmt::Wait(i)) if path.alt.sync.is_none() => path.alt.waits.push(i.clone()),
            Some(Stmt::Sync(p)) if path.alt.sync.is_none() => path.alt.sync = Some(p.clone()),
            Some(s) => {
                path.todo.push(s);
                break;
            }
            None => break,
        }
    }
    finish_post(path, out)
}

fn finish_post(mut path: Path<'_>, out: &mut Vec<Alternative>) -> Result<(), UnrollError> {
    path.alt.post = path.todo.iter().rev().map(|s| (*s).clone()).collect();
    for s in &path.alt.post {
        check_post(s)?;
    }
    if !path.alt.post.iter().any(terminates) {
        return Err(UnrollError::MissingTarget);
    }
    out.push(path.alt);
    Ok(())
}

fn check_post(s: &Stmt) -> Result<(), UnrollError> {
    match s {
        Stmt::Wait(_) => Err(UnrollError::Retiming("wait")),
        Stmt::Sync(_) => Err(UnrollError::Retiming("synchronization")),
        Stmt::On(_) => Err(UnrollError::Retiming("on")),
        Stmt::Select { unless, .. } if !unless.is_empty() => Err(UnrollError::Retiming("unless")),
        Stmt::Select { branches, .. } => branches.iter().try_for_each(check_post),
        Stmt::Seq(items) => items.iter().try_for_each(check_post),
        Stmt::If(_, a, b) => {
            check_post(a)?;
            check_post(b)
        }
        _ => Ok(()),
    }
}

fn terminates(s: &Stmt) -> bool {
    match s {
        Stmt::To(_) | Stmt::Loop => true,
        Stmt::Seq(items) => items.iter().any(terminates),
        Stmt::If(_, a, b) => terminates(a) && terminates(b),
        Stmt::Select { branches, .. } => !branches.is_empty() && branches.iter().all(terminates),
        _ => false,
    }
}
