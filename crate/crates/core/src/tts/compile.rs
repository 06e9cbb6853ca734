//! Program to TTS flattening.

use std::collections::HashMap;

use super::unroll::{unroll_block, Alternative, UnrollError};
use super::*;
use crate::ast::{
    ComponentDecl, DataType, Expr, IntervalExpr, ProcessDecl, Program, Stmt, VarDecl, VarParam,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    /// Maximum number of transitions produced.
    pub max_transitions: usize,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            max_transitions: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error("no root component or process `{0}`")]
    UnknownRoot(String),
    #[error("unknown process or component `{0}`")]
    UnknownTarget(String),
    #[error("unknown name `{name}` in {context}")]
    UnknownName { name: String, context: String },
    #[error("unknown type `{0}`")]
    UnknownType(String),
    #[error("`{target}` expects {expected} {what} arguments, got {got}")]
    Arity {
        target: String,
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("in {process}, state {state}: {source}")]
    Unroll {
        process: String,
        state: String,
        source: UnrollError,
    },
    #[error("more than {0} transitions")]
    DomainOverflow(usize),
    #[error("priority cycle through `{0}`")]
    PriorityCycle(String),
    #[error("`{higher}` has priority over `{lower}` but its interval {interval} is not a point")]
    NonPointPriority {
        higher: String,
        lower: String,
        interval: String,
    },
    #[error("{0}")]
    Interval(String),
    #[error("initialization of {0}: {1}")]
    Init(String, String),
}

pub fn compile(p: &Program) -> Result<Tts, CompileError> {
    compile_with(p, &CompileOptions::default())
}

pub fn compile_with(p: &Program, opts: &CompileOptions) -> Result<Tts, CompileError> {
    let mut c = Compiler::new(p, opts);
    let root = p.root_name().to_string();
    c.scopes.push(Scope {
        path: root.clone(),
        ..Scope::default()
    });
    if let Some(comp) = p.component(&root) {
        let mut ports = HashMap::new();
        for name in &comp.port_params {
            let id = c.new_port(&format!("{root}/{name}"), TimeInterval::unbounded());
            ports.insert(name.clone(), id);
        }
        let mut vars = HashMap::new();
        for vp in &comp.var_params {
            vars.insert(
                vp.name.clone(),
                c.new_var(
                    &format!("{root}/{}", vp.name),
                    &vp.ty,
                    None,
                    &HashMap::new(),
                )?,
            );
        }
        c.component(comp, &root, 0, ports, vars)?;
    } else if let Some(proc_) = p.process(&root) {
        let mut ports = HashMap::new();
        for name in &proc_.ports {
            ports.insert(
                name.clone(),
                c.new_port(&format!("{root}/{name}"), TimeInterval::unbounded()),
            );
        }
        let mut vars = HashMap::new();
        for vp in &proc_.vars {
            vars.insert(
                vp.name.clone(),
                c.new_var(
                    &format!("{root}/{}", vp.name),
                    &vp.ty,
                    None,
                    &HashMap::new(),
                )?,
            );
        }
        c.process(proc_, &root, 0, ports, vars)?;
    } else {
        return Err(CompileError::UnknownRoot(root));
    }
    c.finish()
}

struct InstRec<'p> {
    id: InstId,
    decl: &'p ProcessDecl,
    ports: HashMap<String, PortId>,
    vars: HashMap<String, VarId>,
}

/// One alternative of one instance, resolved.
struct LocalAlt {
    inst: InstId,
    block: usize,
    alt: usize,
    from: u16,
    guard: CExpr,
    action: Action,
    waits: Vec<TimeInterval>,
    sync: Option<PortId>,
    unrolled: Alternative,
}

struct Compiler<'p> {
    prog: &'p Program,
    opts: &'p CompileOptions,
    tts: Tts,
    scopes: Vec<Scope>,
    insts: Vec<InstRec<'p>>,
    port_prio: Vec<(PortId, PortId)>,
    enums: HashMap<String, i32>,
    init_vals: Vec<i32>,
}

impl<'p> Compiler<'p> {
    fn new(prog: &'p Program, opts: &'p CompileOptions) -> Self {
        let enums = enum_constants(prog);
        Compiler {
            prog,
            opts,
            tts: TtsBuilder::new().tts.take().unwrap(),
            scopes: vec![],
            insts: vec![],
            port_prio: vec![],
            enums,
            init_vals: vec![],
        }
    }

    fn domain(&self, ty: &DataType) -> Result<Domain, CompileError> {
        Ok(match ty {
            DataType::Bool => Domain::Bool,
            DataType::Range(lo, hi) => Domain::Range(*lo as i32, *hi as i32),
            DataType::Enum(names) => Domain::Enum(names.clone()),
            DataType::Named(n) => {
                let decl = self
                    .prog
                    .type_decl(n)
                    .ok_or_else(|| CompileError::UnknownType(n.clone()))?;
                self.domain(&decl.ty)?
            }
        })
    }

    fn new_port(&mut self, name: &str, interval: TimeInterval) -> PortId {
        self.tts.ports.push(PortInfo {
            name: name.to_string(),
            interval,
            holders: vec![],
        });
        self.tts.ports.len() - 1
    }

    fn new_var(
        &mut self,
        name: &str,
        ty: &DataType,
        init: Option<&Expr>,
        scope: &HashMap<String, VarId>,
    ) -> Result<VarId, CompileError> {
        let domain = self.domain(ty)?;
        let value = match init {
            Some(e) => {
                let ce = self.expr(e, scope, name)?;
                let probe = DiscreteState {
                    locs: Box::new([]),
                    vals: self.init_vals.clone().into_boxed_slice(),
                };
                ce.eval(&probe)
            }
            None => *domain.values().start(),
        };
        if !domain.contains(value) {
            return Err(CompileError::Init(
                name.to_string(),
                format!("value {value} outside the domain"),
            ));
        }
        self.tts.vars.push(VarInfo {
            name: name.to_string(),
            domain,
            init: value,
        });
        self.init_vals.push(value);
        Ok(self.tts.vars.len() - 1)
    }

    fn locals(
        &mut self,
        path: &str,
        decls: &[VarDecl],
        vars: &mut HashMap<String, VarId>,
    ) -> Result<(), CompileError> {
        for v in decls {
            let id = self.new_var(&format!("{path}/{}", v.name), &v.ty, v.init.as_ref(), vars)?;
            vars.insert(v.name.clone(), id);
        }
        Ok(())
    }

    fn component(
        &mut self,
        comp: &'p ComponentDecl,
        path: &str,
        scope: usize,
        mut ports: HashMap<String, PortId>,
        mut vars: HashMap<String, VarId>,
    ) -> Result<(), CompileError> {
        for pd in &comp.ports {
            let interval = match &pd.interval {
                Some(i) => self.interval(i)?,
                None => TimeInterval::unbounded(),
            };
            let id = self.new_port(&format!("{path}/{}", pd.name), interval);
            ports.insert(pd.name.clone(), id);
        }
        self.locals(path, &comp.vars, &mut vars)?;
        for (h, l) in comp.priority_pairs() {
            let ctx = format!("priority of {}", comp.name);
            let h = lookup(&ports, h, &ctx)?;
            let l = lookup(&ports, l, &ctx)?;
            self.port_prio.push((h, l));
        }
        self.scopes[scope].ports = sorted(&ports);
        self.scopes[scope].vars = sorted(&vars);
        for (k, inst) in comp.instances.iter().enumerate() {
            let child_path = format!("{path}/{}", k + 1);
            let ctx = format!("instance {} of {}", k + 1, comp.name);
            let args: Vec<PortId> = inst
                .ports
                .iter()
                .map(|p| lookup(&ports, p, &ctx))
                .collect::<Result<_, _>>()?;
            let vargs: Vec<VarId> = inst
                .vars
                .iter()
                .map(|v| lookup(&vars, v, &ctx))
                .collect::<Result<_, _>>()?;
            let child = self.scopes.len();
            self.scopes.push(Scope {
                path: child_path.clone(),
                label: inst.label.clone(),
                ..Scope::default()
            });
            self.scopes[scope].children.push(child);
            let (port_params, var_params): (&[String], &[VarParam]) =
                if let Some(pr) = self.prog.process(&inst.target) {
                    (&pr.ports, &pr.vars)
                } else if let Some(co) = self.prog.component(&inst.target) {
                    (&co.port_params, &co.var_params)
                } else {
                    return Err(CompileError::UnknownTarget(inst.target.clone()));
                };
            arity(&inst.target, "port", port_params.len(), args.len())?;
            arity(&inst.target, "variable", var_params.len(), vargs.len())?;
            let cports = port_params.iter().cloned().zip(args).collect();
            let cvars = var_params
                .iter()
                .map(|v| v.name.clone())
                .zip(vargs)
                .collect();
            if let Some(pr) = self.prog.process(&inst.target) {
                self.process(pr, &child_path, child, cports, cvars)?;
            } else {
                let co = self.prog.component(&inst.target).expect("checked above");
                self.component(co, &child_path, child, cports, cvars)?;
            }
        }
        Ok(())
    }

    fn process(
        &mut self,
        decl: &'p ProcessDecl,
        path: &str,
        scope: usize,
        ports: HashMap<String, PortId>,
        mut vars: HashMap<String, VarId>,
    ) -> Result<(), CompileError> {
        self.locals(path, &decl.locals, &mut vars)?;
        let id = self.tts.instances.len();
        self.tts.instances.push(InstanceInfo {
            path: path.to_string(),
            process: decl.name.clone(),
            states: decl.states.clone(),
        });
        let mut holders: Vec<PortId> = ports.values().copied().collect();
        holders.sort_unstable();
        holders.dedup();
        for p in holders {
            self.tts.ports[p].holders.push(id);
        }
        self.scopes[scope].process = Some(id);
        self.scopes[scope].ports = sorted(&ports);
        self.scopes[scope].vars = sorted(&vars);
        self.insts.push(InstRec {
            id,
            decl,
            ports,
            vars,
        });
        Ok(())
    }

    fn interval(&self, i: &IntervalExpr) -> Result<TimeInterval, CompileError> {
        i.resolve(|s| self.prog.const_value(s))
            .map_err(|e| CompileError::Interval(e.to_string()))
    }

    fn expr(
        &self,
        e: &Expr,
        vars: &HashMap<String, VarId>,
        ctx: &str,
    ) -> Result<CExpr, CompileError> {
        resolve_expr(self.prog, &self.enums, vars, e, ctx)
    }

    fn state_index(decl: &ProcessDecl, name: &str) -> Result<u16, CompileError> {
        decl.states
            .iter()
            .position(|s| s == name)
            .map(|i| i as u16)
            .ok_or_else(|| CompileError::UnknownName {
                name: name.to_string(),
                context: format!("states of {}", decl.name),
            })
    }

    /// Translates an untimed statement into an action.
    fn action(&self, rec: &InstRec<'p>, from: u16, s: &Stmt) -> Result<Action, CompileError> {
        let ctx = &rec.decl.name;
        Ok(match s {
            Stmt::Null => Action::Seq(vec![]),
            Stmt::To(st) => Action::Goto(rec.id, Self::state_index(rec.decl, st)?),
            Stmt::Loop => Action::Goto(rec.id, from),
            Stmt::Assign(x, e) => {
                Action::Assign(lookup(&rec.vars, x, ctx)?, self.expr(e, &rec.vars, ctx)?)
            }
            Stmt::Any(x) => Action::Any(lookup(&rec.vars, x, ctx)?),
            Stmt::Seq(items) => Action::Seq(
                items
                    .iter()
                    .map(|i| self.action(rec, from, i))
                    .collect::<Result<_, _>>()?,
            ),
            Stmt::If(c, a, b) => Action::If(
                self.expr(c, &rec.vars, ctx)?,
                Box::new(self.action(rec, from, a)?),
                Box::new(self.action(rec, from, b)?),
            ),
            Stmt::Select { branches, .. } => Action::Choice(
                branches
                    .iter()
                    .map(|b| self.action(rec, from, b))
                    .collect::<Result<_, _>>()?,
            ),
            Stmt::Wait(_) | Stmt::Sync(_) | Stmt::On(_) => {
                let path = self.tts.instances[rec.id].path.clone();
                return Err(CompileError::Init(path, "timed statement".into()));
            }
        })
    }

    fn alternatives(&self, rec: &InstRec<'p>) -> Result<Vec<LocalAlt>, CompileError> {
        let mut out = Vec::new();
        for (b, block) in rec.decl.from.iter().enumerate() {
            let from = Self::state_index(rec.decl, &block.state)?;
            let alts =
                unroll_block(&block.body, self.opts.max_transitions).map_err(|e| match e {
                    UnrollError::Overflow(n) => CompileError::DomainOverflow(n),
                    source => CompileError::Unroll {
                        process: rec.decl.name.clone(),
                        state: block.state.clone(),
                        source,
                    },
                })?;
            for (a, alt) in alts.into_iter().enumerate() {
                let ctx = &rec.decl.name;
                let mut guard = CExpr::Const(1);
                for g in &alt.guards {
                    guard = CExpr::and(guard, self.expr(g, &rec.vars, ctx)?);
                }
                let action = Action::Seq(
                    alt.post
                        .iter()
                        .map(|s| self.action(rec, from, s))
                        .collect::<Result<_, _>>()?,
                );
                let waits = alt
                    .waits
                    .iter()
                    .map(|w| self.interval(w))
                    .collect::<Result<_, _>>()?;
                let sync = alt
                    .sync
                    .as_ref()
                    .map(|p| lookup(&rec.ports, p, ctx))
                    .transpose()?;
                out.push(LocalAlt {
                    inst: rec.id,
                    block: b,
                    alt: a,
                    from,
                    guard,
                    action,
                    waits,
                    sync,
                    unrolled: alt,
                });
            }
        }
        Ok(out)
    }

    fn finish(mut self) -> Result<Tts, CompileError> {
        let mut init_acts = Vec::new();
        for rec in &self.insts {
            if let Some(init) = &rec.decl.init {
                init_acts.push((rec.id, self.action(rec, 0, init)?));
            }
        }
        let mut all = Vec::new();
        for rec in &self.insts {
            all.extend(self.alternatives(rec)?);
        }
        // (transition, [(alt index into `all`)])
        let mut origins: Vec<Vec<usize>> = Vec::new();
        let mut transitions = Vec::new();
        let mut push = |tts: &Tts,
                        event: Event,
                        parts: Vec<usize>,
                        interval: TimeInterval|
         -> Result<(), CompileError> {
            if transitions.len() >= self.opts.max_transitions {
                return Err(CompileError::DomainOverflow(self.opts.max_transitions));
            }
            let mut guard = CExpr::Const(1);
            let mut actions = Vec::new();
            let mut participants = Vec::new();
            for &k in &parts {
                let la: &LocalAlt = &all[k];
                guard = CExpr::and(guard, la.guard.clone());
                actions.push(la.action.clone());
                participants.push((la.inst, la.from));
            }
            let first = &all[parts[0]];
            let origin = format!(
                "{}:{}.{}",
                tts.instances[first.inst].path,
                tts.instances[first.inst].states[first.from as usize],
                first.alt
            );
            let name = match event {
                Event::Port(p) if parts.len() == 1 => format!("{} ({origin})", tts.ports[p].name),
                Event::Port(p) => format!("{} ({origin}+{})", tts.ports[p].name, parts.len() - 1),
                _ => format!("tau ({origin})"),
            };
            transitions.push(Transition {
                id: transitions.len(),
                event,
                participants,
                guard,
                actions,
                interval,
                name,
            });
            origins.push(parts);
            Ok(())
        };
        for (k, la) in all.iter().enumerate() {
            if la.sync.is_none() {
                if let Some(i) = intersect_all(TimeInterval::unbounded(), &la.waits) {
                    push(&self.tts, Event::Tau(la.inst), vec![k], i)?;
                }
            }
        }
        for p in 0..self.tts.ports.len() {
            let holders = self.tts.ports[p].holders.clone();
            if holders.is_empty() {
                continue;
            }
            let per_holder: Vec<Vec<usize>> = holders
                .iter()
                .map(|h| {
                    (0..all.len())
                        .filter(|&k| all[k].inst == *h && all[k].sync == Some(p))
                        .collect()
                })
                .collect();
            if per_holder.iter().any(|v| v.is_empty()) {
                continue;
            }
            let mut combos: Vec<Vec<usize>> = vec![vec![]];
            for options in &per_holder {
                let mut next = Vec::new();
                for c in &combos {
                    for &o in options {
                        let mut c = c.clone();
                        c.push(o);
                        next.push(c);
                    }
                }
                if next.len() > self.opts.max_transitions {
                    return Err(CompileError::DomainOverflow(self.opts.max_transitions));
                }
                combos = next;
            }
            for combo in combos {
                let waits: Vec<TimeInterval> = combo
                    .iter()
                    .flat_map(|&k| all[k].waits.iter().cloned())
                    .collect();
                if let Some(i) = intersect_all(self.tts.ports[p].interval, &waits) {
                    push(&self.tts, Event::Port(p), combo, i)?;
                }
            }
        }
        self.tts.transitions = transitions;

        let mut prio = Vec::new();
        let n = self.tts.transitions.len();
        for t1 in 0..n {
            for t2 in 0..n {
                if t1 == t2 {
                    continue;
                }
                let (e1, e2) = (
                    self.tts.transitions[t1].event,
                    self.tts.transitions[t2].event,
                );
                let by_port = match (e1, e2) {
                    (Event::Port(a), Event::Port(b)) => self.port_prio.contains(&(a, b)),
                    _ => false,
                };
                let by_unless = origins[t1].iter().any(|&a| {
                    origins[t2].iter().any(|&b| {
                        all[a].inst == all[b].inst
                            && all[a].block == all[b].block
                            && all[a].unrolled.dominates(&all[b].unrolled)
                    })
                });
                if by_port || by_unless {
                    prio.push((t1, t2));
                }
            }
        }
        self.tts.priority = prio;
        let names: Vec<String> = self
            .tts
            .transitions
            .iter()
            .map(|t| t.name.clone())
            .collect();
        self.tts
            .close_priority()
            .map_err(|t| CompileError::PriorityCycle(names[t].clone()))?;
        check_priority_intervals(&self.tts)?;

        self.tts.scopes = self.scopes;
        let mut initial = DiscreteState {
            locs: vec![0u16; self.tts.instances.len()].into_boxed_slice(),
            vals: self.init_vals.into_boxed_slice(),
        };
        for (inst, act) in init_acts {
            let path = self.tts.instances[inst].path.clone();
            let mut out = Vec::new();
            self.tts
                .exec(&act, initial.clone(), &mut out)
                .map_err(|e| CompileError::Init(path.clone(), e.to_string()))?;
            if out.len() != 1 {
                return Err(CompileError::Init(path, "nondeterministic".into()));
            }
            initial = out.pop().unwrap();
        }
        self.tts.initial = initial;
        Ok(self.tts)
    }
}

fn intersect_all(mut acc: TimeInterval, items: &[TimeInterval]) -> Option<TimeInterval> {
    for i in items {
        acc = acc.intersect(i)?;
    }
    Some(acc)
}

/// Rejects priority over a transition whose interval is not a single
/// point; only then is the firing rule exact.
pub(crate) fn check_priority_intervals(tts: &Tts) -> Result<(), CompileError> {
    for (lo, doms) in tts.dominators.iter().enumerate() {
        for &hi in doms {
            let t = &tts.transitions[hi];
            if !t.interval.is_point() {
                return Err(CompileError::NonPointPriority {
                    higher: t.name.clone(),
                    lower: tts.transitions[lo].name.clone(),
                    interval: t.interval.to_string(),
                });
            }
        }
    }
    Ok(())
}

fn lookup<T: Copy>(map: &HashMap<String, T>, name: &str, ctx: &str) -> Result<T, CompileError> {
    map.get(name)
        .copied()
        .ok_or_else(|| CompileError::UnknownName {
            name: name.to_string(),
            context: ctx.to_string(),
        })
}

fn sorted<T: Copy>(map: &HashMap<String, T>) -> Vec<(String, T)> {
    let mut v: Vec<(String, T)> = map.iter().map(|(k, v)| (k.clone(), *v)).collect();
    v.sort_by(|a, b| a.0.cmp(&b.0));
    v
}

fn arity(
    target: &str,
    what: &'static str,
    expected: usize,
    got: usize,
) -> Result<(), CompileError> {
    if expected != got {
        return Err(CompileError::Arity {
            target: target.to_string(),
            what,
            expected,
            got,
        });
    }
    Ok(())
}

/// Value of every enumeration constant declared in the program.
pub(crate) fn enum_constants(prog: &Program) -> HashMap<String, i32> {
    let mut enums = HashMap::new();
    let mut add = |ty: &DataType| {
        if let DataType::Enum(names) = ty {
            for (i, n) in names.iter().enumerate() {
                enums.entry(n.clone()).or_insert(i as i32);
            }
        }
    };
    prog.types.iter().for_each(|t| add(&t.ty));
    for p in &prog.processes {
        p.locals.iter().for_each(|v| add(&v.ty));
        p.vars.iter().for_each(|v| add(&v.ty));
    }
    for c in &prog.components {
        c.vars.iter().for_each(|v| add(&v.ty));
    }
    enums
}

pub(crate) fn resolve_expr(
    prog: &Program,
    enums: &HashMap<String, i32>,
    vars: &HashMap<String, VarId>,
    e: &Expr,
    ctx: &str,
) -> Result<CExpr, CompileError> {
    let rec = |x: &Expr| resolve_expr(prog, enums, vars, x, ctx);
    Ok(match e {
        Expr::Int(v) => CExpr::Const(*v as i32),
        Expr::Bool(b) => CExpr::Const(*b as i32),
        Expr::Ident(n) => {
            if let Some(v) = vars.get(n) {
                CExpr::Var(*v)
            } else if let Some(c) = prog.const_value(n) {
                CExpr::Const(c as i32)
            } else if let Some(k) = enums.get(n) {
                CExpr::Const(*k)
            } else {
                return Err(CompileError::UnknownName {
                    name: n.clone(),
                    context: ctx.to_string(),
                });
            }
        }
        Expr::Unary(op, a) => CExpr::Unary(*op, Box::new(rec(a)?)),
        Expr::Binary(op, a, b) => CExpr::Binary(*op, Box::new(rec(a)?), Box::new(rec(b)?)),
    })
}
