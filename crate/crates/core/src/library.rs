//! Component library: the periodic thread controller, its proof
//! obligations, and task-system generation for schedulability analysis.

use std::fmt::Write;

use crate::ast::{Program, PropertyDecl};
use crate::parser::{parse_program, parse_property, ParseError};
use crate::patterns::{check_property, CheckOptions, Outcome, PatternError, Verdict};
use crate::tts::{compile, CompileError};

/// Source of the periodic controller process.
pub const PERIODIC_PROCESS: &str = "\
type status is union p_idle | p_rdy | p_err end

process periodic [d : none, c : none, dl : none, w : none] is
  states s0, sched_error
  var st : status := p_rdy, pend : bool := true, tick : bool := false
  from s0
    select
      on pend; d; st := p_idle; pend := false; loop
    [] on st = p_idle; c; st := p_rdy; loop
    [] on tick; dl; tick := false; pend := true; loop
    [] w; if st = p_rdy then tick := true else st := p_err end; loop
    unless
      on st = p_err; wait [0,0]; to sched_error
    end
";

/// Job whose completion may come at any time after dispatch.
pub const JOB_PROCESS: &str = "\
process job [d : none, c : none] is
  states idle, run, done
  from idle d; to run
  from run to done
  from done c; to idle
";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LibraryError {
    #[error("period must be positive, got {0}")]
    NonPositivePeriod(i64),
    #[error("`{0}` is not a library component instance")]
    NotALibraryComponent(String),
    #[error("task `{name}`: {reason}")]
    InvalidTaskSpec { name: String, reason: String },
    #[error("line {line}: {reason}")]
    TaskTable { line: usize, reason: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

fn check_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !crate::parser::is_reserved(name)
}

/// Program with one periodic controller labelled `t` inside component
/// `name`, as the root. With `environment`, completion is driven by a job
/// that may finish arbitrarily late; without it, completion is immediate.
pub fn instantiate_periodic(
    name: &str,
    period: i64,
    environment: bool,
) -> Result<Program, LibraryError> {
    if period <= 0 {
        return Err(LibraryError::NonPositivePeriod(period));
    }
    let mut src = String::from(PERIODIC_PROCESS);
    if environment {
        src.push('\n');
        src.push_str(JOB_PROCESS);
    }
    let _ = write!(
        src,
        "\ncomponent {name} is\n  port d : none in [0,0], c : none in [0,0], dl : none in [0,0], w : none in [{period},{period}]\n  priority c > dl > d\n  par t : periodic [d, c, dl, w]{} end\n\n{name}\n",
        if environment { " || job [d, c]" } else { "" }
    );
    Ok(parse_program(&src)?)
}

pub const OBLIGATIONS: [&str; 6] = ["P0a", "P0b", "P1", "P2", "P3", "P4"];

/// Obligation text with `t` standing for the instance path.
fn obligation_text(id: &str, t: &str) -> Option<String> {
    Some(match id {
        "P0a" => format!("property P0a is ltl [] (({t}/event d and ((not {t}/event c) until {t}/event dl)) => <> {t}/state sched_error)"),
        "P0b" => format!("property P0b is ltl (([] ({t}/event d => ((not {t}/event dl) until {t}/event c))) => [] (not ({t}/state sched_error)))"),
        "P1" => format!("property P1 is {t}/event c leadsto (({t}/value (st = p_rdy)) or {t}/state sched_error) within [0,0]"),
        "P2" => format!("property P2 is ({t}/event dl leadsto ({t}/event dl or {t}/state sched_error) within [1,1])"),
        "P3" => format!("property P3 is ({t}/event dl or {t}/start) leadsto ({t}/event dl or {t}/state sched_error) within [1,1]"),
        "P4" => format!("property P4 is {t}/event dl leadsto {t}/event d within [0,0]"),
        _ => return None,
    })
}

/// Period an obligation must be checked at: the timed window of P2 and P3
/// is one period, so they use a unit period.
pub fn obligation_period(id: &str, period: i64) -> i64 {
    if id == "P2" || id == "P3" {
        1
    } else {
        period
    }
}

/// The six obligations of a periodic controller instance at `path`.
pub fn obligations_for(
    prog: &Program,
    path: &str,
) -> Result<Vec<(String, PropertyDecl)>, LibraryError> {
    let tts = compile(prog)?;
    let probe = parse_property(
        &format!("property probe is absent ({path}/state sched_error)"),
        &Default::default(),
    )?;
    let atom = crate::patterns::resolve_pattern(prog, &tts, &probe.body);
    let is_periodic = atom.is_ok() && {
        let last = path.rsplit('/').next().unwrap_or(path);
        tts.scopes.iter().any(|s| {
            (s.label.as_deref() == Some(last) || s.path.ends_with(&format!("/{last}")))
                && s.process
                    .is_some_and(|i| tts.instances[i].process == "periodic")
        })
    };
    if !is_periodic {
        return Err(LibraryError::NotALibraryComponent(path.to_string()));
    }
    OBLIGATIONS
        .iter()
        .map(|id| {
            let text = obligation_text(id, path).expect("known obligation");
            Ok((id.to_string(), parse_property(&text, &Default::default())?))
        })
        .collect()
}

#[derive(Debug)]
pub struct ObligationResult {
    pub id: String,
    pub period: i64,
    pub verdict: Verdict,
    pub seconds: f64,
    pub outcome: Outcome,
}

/// Checks every obligation on a fresh instance (with environment), each at
/// its required period.
pub fn check_obligations(
    period: i64,
    opts: &CheckOptions,
) -> Result<Vec<ObligationResult>, LibraryError> {
    let mut out = Vec::new();
    for id in OBLIGATIONS {
        let t = obligation_period(id, period);
        let prog = instantiate_periodic("main", t, true)?;
        let tts = compile(&prog)?;
        let decls = obligations_for(&prog, "t")?;
        let decl = &decls
            .iter()
            .find(|d| d.0 == id)
            .expect("all obligations emitted")
            .1;
        let start = std::time::Instant::now();
        let outcome = check_property(&prog, &tts, decl, opts)?;
        out.push(ObligationResult {
            id: id.to_string(),
            period: t,
            verdict: outcome.verdict.clone(),
            seconds: start.elapsed().as_secs_f64(),
            outcome,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSpec {
    pub name: String,
    pub period: i64,
    pub offset: i64,
    pub deadline: i64,
    /// 1 is the highest priority.
    pub priority: i64,
    pub bcet: i64,
    pub wcet: i64,
}

impl TaskSpec {
    pub fn validate(&self) -> Result<(), LibraryError> {
        let bad = |reason: &str| {
            Err(LibraryError::InvalidTaskSpec {
                name: self.name.clone(),
                reason: reason.into(),
            })
        };
        if !check_ident(&self.name) {
            return bad("name is not an identifier");
        }
        if self.period <= 0 {
            return bad("period must be positive");
        }
        if self.offset < 0 || self.offset >= self.period {
            return bad("offset must be in [0, period)");
        }
        if self.deadline <= 0 || self.deadline > self.period {
            return bad("deadline must be in (0, period]");
        }
        if self.bcet < 0 || self.bcet > self.wcet {
            return bad("need 0 <= bcet <= wcet");
        }
        if self.wcet > self.deadline {
            return bad("wcet exceeds the deadline");
        }
        Ok(())
    }
}

/// Parses a task table: one task per line, `name period offset deadline
/// priority bcet wcet`. Blank lines and `#` comments are skipped.
pub fn parse_task_table(text: &str) -> Result<Vec<TaskSpec>, LibraryError> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let err = |reason: String| LibraryError::TaskTable {
            line: k + 1,
            reason,
        };
        if fields.len() != 7 {
            return Err(err(format!("expected 7 fields, found {}", fields.len())));
        }
        let mut nums = [0i64; 6];
        for (i, f) in fields[1..].iter().enumerate() {
            nums[i] = f
                .parse()
                .map_err(|_| err(format!("`{f}` is not an integer")))?;
        }
        let [period, offset, deadline, priority, bcet, wcet] = nums;
        let spec = TaskSpec {
            name: fields[0].to_string(),
            period,
            offset,
            deadline,
            priority,
            bcet,
            wcet,
        };
        spec.validate()?;
        out.push(spec);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtMode {
    /// Every job runs exactly its WCET.
    Deterministic,
    /// Every job runs some time in `[bcet, wcet]`.
    Interval,
}

/// Source text of the task system; see [`build_tasksystem`].
pub fn tasksystem_source(tasks: &[TaskSpec], mode: EtMode) -> Result<String, LibraryError> {
    system_source(tasks, mode, true)
}

/// Task system where every task runs on its own processor: no scheduler,
/// executors start on dispatch.
pub fn dedicated_tasksystem_source(
    tasks: &[TaskSpec],
    mode: EtMode,
) -> Result<String, LibraryError> {
    system_source(tasks, mode, false)
}

fn system_source(tasks: &[TaskSpec], mode: EtMode, shared: bool) -> Result<String, LibraryError> {
    if tasks.is_empty() {
        return Err(LibraryError::InvalidTaskSpec {
            name: String::new(),
            reason: "no tasks".into(),
        });
    }
    for t in tasks {
        t.validate()?;
    }
    for (i, a) in tasks.iter().enumerate() {
        for b in &tasks[i + 1..] {
            if a.priority == b.priority {
                return Err(LibraryError::InvalidTaskSpec {
                    name: b.name.clone(),
                    reason: "duplicate priority".into(),
                });
            }
            if a.name == b.name {
                return Err(LibraryError::InvalidTaskSpec {
                    name: b.name.clone(),
                    reason: "duplicate name".into(),
                });
            }
        }
    }
    let mut s = String::from("type status is union p_idle | p_rdy | p_err end\n");
    for t in tasks {
        let n = &t.name;
        let boot = t.offset > 0;
        let _ = write!(
            s,
            "\nprocess ctl_{n} [{o}d : none, c : none, dl : none, w : none] (&halt : read write bool) is\n  states {b}s0, sched_error\n  var st : status := p_rdy, pend : bool := true\n",
            o = if boot { "o : none, " } else { "" },
            b = if boot { "boot, " } else { "" },
        );
        if boot {
            s.push_str("  from boot o; to s0\n");
        }
        s.push_str(
            "  from s0\n    select\n      on pend and st = p_rdy; d; st := p_idle; pend := false; loop\n    [] on st = p_idle; c; st := p_rdy; loop\n    [] on st = p_idle; dl; st := p_err; loop\n    [] on not halt; w; pend := true; loop\n    unless\n      on st = p_err; wait [0,0]; halt := true; to sched_error\n    end\n",
        );
        let (lo, hi) = match mode {
            EtMode::Deterministic => (t.wcet, t.wcet),
            EtMode::Interval => (t.bcet, t.wcet),
        };
        if shared {
            let _ = write!(
                s,
                "\nprocess exec_{n} [d : none, g : none, c : none] (&q : read write bool) is\n  states idle, waiting, running, done\n  from idle d; q := true; to waiting\n  from waiting g; q := false; to running\n  from running wait [{lo},{hi}]; to done\n  from done c; to idle\n"
            );
        } else {
            let _ = write!(
                s,
                "\nprocess exec_{n} [d : none, c : none] is\n  states idle, running, done\n  from idle d; to running\n  from running wait [{lo},{hi}]; to done\n  from done c; to idle\n"
            );
        }
    }
    if !shared {
        return Ok(dedicated_component(s, tasks));
    }
    // scheduler, tasks in priority order
    let mut by_prio: Vec<usize> = (0..tasks.len()).collect();
    by_prio.sort_by_key(|&i| (tasks[i].priority, i));
    let ports: Vec<String> = tasks
        .iter()
        .flat_map(|t| [format!("g_{}", t.name), format!("c_{}", t.name)])
        .collect();
    let vars: Vec<String> = tasks
        .iter()
        .map(|t| format!("&q_{} : read bool", t.name))
        .collect();
    let _ = write!(
        s,
        "\nprocess sched [{}] ({}) is\n  states free, busy\n  from free\n    select\n",
        ports
            .iter()
            .map(|p| format!("{p} : none"))
            .collect::<Vec<_>>()
            .join(", "),
        vars.join(", ")
    );
    for (k, &i) in by_prio.iter().enumerate() {
        let mut guard = format!("q_{}", tasks[i].name);
        for &j in &by_prio[..k] {
            let _ = write!(guard, " and not q_{}", tasks[j].name);
        }
        let _ = writeln!(
            s,
            "      {}on {guard}; g_{}; to busy",
            if k == 0 { "" } else { "[] " },
            tasks[i].name
        );
    }
    s.push_str("    end\n  from busy\n    select\n");
    for (k, t) in tasks.iter().enumerate() {
        let _ = writeln!(
            s,
            "      {}c_{}; to free",
            if k == 0 { "" } else { "[] " },
            t.name
        );
    }
    s.push_str("    end\n\ncomponent sys is\n  var halt : bool := false");
    for t in tasks {
        let _ = write!(s, ", q_{} : bool := false", t.name);
    }
    s.push_str("\n  port ");
    let mut decls = Vec::new();
    for t in tasks {
        let n = &t.name;
        if t.offset > 0 {
            decls.push(format!("o_{n} : none in [{0},{0}]", t.offset));
        }
        decls.push(format!("d_{n} : none in [0,0]"));
        decls.push(format!("c_{n} : none in [0,0]"));
        decls.push(format!("dl_{n} : none in [{0},{0}]", t.deadline));
        decls.push(format!("w_{n} : none in [{0},{0}]", t.period));
        decls.push(format!("g_{n} : none in [0,0]"));
    }
    s.push_str(&decls.join(",\n       "));
    let mut chains: Vec<String> = tasks
        .iter()
        .map(|t| format!("c_{0} > dl_{0} > d_{0}", t.name))
        .collect();
    for a in tasks {
        let mut highs = vec![format!("d_{}", a.name), format!("w_{}", a.name)];
        if a.offset > 0 {
            highs.push(format!("o_{}", a.name));
        }
        for h in highs {
            for b in tasks {
                chains.push(format!("{h} > g_{}", b.name));
            }
        }
    }
    let _ = write!(
        s,
        "\n  priority {}\n  par\n    ",
        chains.join(",\n           ")
    );
    let mut insts = Vec::new();
    for t in tasks {
        let n = &t.name;
        let o = if t.offset > 0 {
            format!("o_{n}, ")
        } else {
            String::new()
        };
        insts.push(format!(
            "{n} : ctl_{n} [{o}d_{n}, c_{n}, dl_{n}, w_{n}] (&halt)"
        ));
        insts.push(format!(
            "{n}_exec : exec_{n} [d_{n}, g_{n}, c_{n}] (&q_{n})"
        ));
    }
    let sched_ports: Vec<String> = tasks
        .iter()
        .flat_map(|t| [format!("g_{}", t.name), format!("c_{}", t.name)])
        .collect();
    let sched_vars: Vec<String> = tasks.iter().map(|t| format!("&q_{}", t.name)).collect();
    insts.push(format!(
        "sched : sched [{}] ({})",
        sched_ports.join(", "),
        sched_vars.join(", ")
    ));
    s.push_str(&insts.join("\n || "));
    s.push_str("\n  end\n\nsys\n");
    Ok(s)
}

fn dedicated_component(mut s: String, tasks: &[TaskSpec]) -> String {
    s.push_str("\ncomponent sys is\n  var halt : bool := false\n  port ");
    let mut decls = Vec::new();
    let mut chains = Vec::new();
    let mut insts = Vec::new();
    for t in tasks {
        let n = &t.name;
        if t.offset > 0 {
            decls.push(format!("o_{n} : none in [{0},{0}]", t.offset));
        }
        decls.push(format!("d_{n} : none in [0,0], c_{n} : none in [0,0]"));
        decls.push(format!(
            "dl_{n} : none in [{0},{0}], w_{n} : none in [{1},{1}]",
            t.deadline, t.period
        ));
        chains.push(format!("c_{0} > dl_{0} > d_{0}", n));
        let o = if t.offset > 0 {
            format!("o_{n}, ")
        } else {
            String::new()
        };
        insts.push(format!(
            "{n} : ctl_{n} [{o}d_{n}, c_{n}, dl_{n}, w_{n}] (&halt)"
        ));
        insts.push(format!("{n}_exec : exec_{n} [d_{n}, c_{n}]"));
    }
    let _ = write!(
        s,
        "{}\n  priority {}\n  par\n    {}\n  end\n\nsys\n",
        decls.join(",\n       "),
        chains.join(", "),
        insts.join("\n || ")
    );
    s
}

/// Task system: per task a controller and an executor, plus a
/// non-preemptive fixed-priority scheduler.
pub fn build_tasksystem(tasks: &[TaskSpec], mode: EtMode) -> Result<Program, LibraryError> {
    Ok(parse_program(&tasksystem_source(tasks, mode)?)?)
}

/// `Unreachable` over the error states of all controllers.
pub fn schedulability_property(tasks: &[TaskSpec]) -> Result<PropertyDecl, LibraryError> {
    let atoms: Vec<String> = tasks
        .iter()
        .map(|t| format!("sys/{}/state sched_error", t.name))
        .collect();
    Ok(parse_property(
        &format!(
            "property schedulable is Unreachable ({})",
            atoms.join(" or ")
        ),
        &Default::default(),
    )?)
}

/// Scheduler obligations: mutual exclusion of running executors and
/// immediate granting of a free processor.
pub fn scheduler_obligations(
    tasks: &[TaskSpec],
) -> Result<Vec<(String, PropertyDecl)>, LibraryError> {
    let mut pairs = Vec::new();
    for (i, a) in tasks.iter().enumerate() {
        for b in &tasks[i + 1..] {
            pairs.push(format!(
                "(sys/{}_exec/state running and sys/{}_exec/state running)",
                a.name, b.name
            ));
        }
    }
    let mut out = Vec::new();
    if !pairs.is_empty() {
        let text = format!("property mutex is Unreachable ({})", pairs.join(" or "));
        out.push((
            "mutex".to_string(),
            parse_property(&text, &Default::default())?,
        ));
    }
    let ready: Vec<String> = tasks.iter().map(|t| format!("q_{}", t.name)).collect();
    let text = format!(
        "property work_conserving is (sys/sched/value ({}) and sys/sched/state free) leadsto sys/sched/state busy within [0,0]",
        ready.join(" or ")
    );
    out.push((
        "work_conserving".to_string(),
        parse_property(&text, &Default::default())?,
    ));
    Ok(out)
}

#[derive(Debug)]
pub struct SchedulabilityReport {
    pub schedulable: Option<bool>,
    pub outcome: Outcome,
    pub program: Program,
}

pub fn check_schedulable(
    tasks: &[TaskSpec],
    mode: EtMode,
    opts: &CheckOptions,
) -> Result<SchedulabilityReport, LibraryError> {
    let program = build_tasksystem(tasks, mode)?;
    let tts = compile(&program)?;
    let outcome = check_property(&program, &tts, &schedulability_property(tasks)?, opts)?;
    let schedulable = match outcome.verdict {
        Verdict::Holds => Some(true),
        Verdict::Violated => Some(false),
        Verdict::Unknown(_) => None,
    };
    Ok(SchedulabilityReport {
        schedulable,
        outcome,
        program,
    })
}

/// The three-task example table.
pub const EXAMPLE_TASKS: &str = "\
# name  period offset deadline priority bcet wcet
Task1   20     0      20       1        1    3
Task2   20     3      10       2        2    2
Task3   20     0      20       3        10   10
";

/// `n` periodic tasks for scalability runs.
pub fn scaling_tasks(n: usize) -> Vec<TaskSpec> {
    (0..n)
        .map(|i| {
            let i64i = i as i64;
            TaskSpec {
                name: format!("T{}", i + 1),
                period: 20 + 10 * i64i,
                offset: (3 * i64i) % 7,
                deadline: 20 + 10 * i64i,
                priority: i64i + 1,
                bcet: 1,
                wcet: 3 + (i64i % 3),
            }
        })
        .collect()
}
