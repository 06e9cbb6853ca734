//! Abstract syntax of the specification language.

use std::fmt;

use crate::time::{Rat, TimeInterval};

/// Source location, 1-based.
///
/// Spans never participate in equality: two ASTs that differ only in where
/// their nodes came from compare equal.
#[derive(Clone, Copy, Debug, Default)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

impl std::hash::Hash for Span {
    fn hash<H: std::hash::Hasher>(&self, _: &mut H) {}
}

impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Span {
    fn cmp(&self, _: &Self) -> std::cmp::Ordering {
        std::cmp::Ordering::Equal
    }
}

impl Span {
    pub fn to(self, end: Span) -> Span {
        Span {
            end_line: end.end_line,
            end_col: end.end_col,
            ..self
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start_line, self.start_col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Program {
    pub consts: Vec<ConstDecl>,
    pub types: Vec<TypeDecl>,
    pub processes: Vec<ProcessDecl>,
    pub components: Vec<ComponentDecl>,
    pub properties: Vec<PropertyDecl>,
    /// Explicitly designated root component; `main` when absent.
    pub root: Option<String>,
}

impl Program {
    pub fn root_name(&self) -> &str {
        self.root.as_deref().unwrap_or("main")
    }

    pub fn root_component(&self) -> Option<&ComponentDecl> {
        self.component(self.root_name())
    }

    pub fn process(&self, name: &str) -> Option<&ProcessDecl> {
        self.processes.iter().find(|p| p.name == name)
    }

    pub fn component(&self, name: &str) -> Option<&ComponentDecl> {
        self.components.iter().find(|c| c.name == name)
    }

    pub fn type_decl(&self, name: &str) -> Option<&TypeDecl> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn const_value(&self, name: &str) -> Option<i64> {
        self.consts.iter().find(|c| c.name == name).map(|c| c.value)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyDecl> {
        self.properties.iter().find(|p| p.name == name)
    }

    /// Appends every declaration of `other`.
    pub fn extend(&mut self, other: Program) {
        self.consts.extend(other.consts);
        self.types.extend(other.types);
        self.processes.extend(other.processes);
        self.components.extend(other.components);
        self.properties.extend(other.properties);
        if other.root.is_some() {
            self.root = other.root;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: String,
    pub value: i64,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: String,
    pub ty: DataType,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DataType {
    Bool,
    Range(i64, i64),
    Enum(Vec<String>),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarParam {
    pub name: String,
    pub ty: DataType,
    pub read: bool,
    pub write: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: DataType,
    pub init: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessDecl {
    pub name: String,
    /// Port parameters; all ports carry no data.
    pub ports: Vec<String>,
    pub vars: Vec<VarParam>,
    pub states: Vec<String>,
    pub locals: Vec<VarDecl>,
    pub init: Option<Stmt>,
    pub from: Vec<FromBlock>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FromBlock {
    pub state: String,
    pub body: Stmt,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Null,
    To(String),
    Loop,
    Sync(String),
    Assign(String, Expr),
    /// `x := any`: nondeterministic choice over the whole domain of `x`.
    Any(String),
    Wait(IntervalExpr),
    /// Guard: blocks unless the expression holds.
    On(Expr),
    Seq(Vec<Stmt>),
    If(Expr, Box<Stmt>, Box<Stmt>),
    Select {
        branches: Vec<Stmt>,
        unless: Vec<Stmt>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentDecl {
    pub name: String,
    pub port_params: Vec<String>,
    pub var_params: Vec<VarParam>,
    pub ports: Vec<PortDecl>,
    pub vars: Vec<VarDecl>,
    /// Priority chains, `c > dl > d` stored highest first.
    pub priorities: Vec<Vec<String>>,
    pub instances: Vec<Instance>,
    pub span: Span,
}

impl ComponentDecl {
    /// Every `(higher, lower)` pair of adjacent ports in the declared chains.
    pub fn priority_pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.priorities
            .iter()
            .flat_map(|chain| chain.windows(2).map(|w| (w[0].as_str(), w[1].as_str())))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortDecl {
    pub name: String,
    pub interval: Option<IntervalExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub label: Option<String>,
    pub target: String,
    pub ports: Vec<String>,
    pub vars: Vec<String>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum BoundExpr {
    Lit(i64),
    Sym(String),
}

/// An interval as written, possibly with symbolic bounds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalExpr {
    pub lower: BoundExpr,
    pub lower_strict: bool,
    /// `None` is an infinite upper bound.
    pub upper: Option<BoundExpr>,
    pub upper_strict: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IntervalResolveError {
    #[error("unbound interval symbol `{0}`")]
    Unbound(String),
    #[error(transparent)]
    Invalid(#[from] crate::time::IntervalError),
}

impl IntervalExpr {
    pub fn closed(lo: i64, hi: i64) -> Self {
        IntervalExpr {
            lower: BoundExpr::Lit(lo),
            lower_strict: false,
            upper: Some(BoundExpr::Lit(hi)),
            upper_strict: false,
        }
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        [Some(&self.lower), self.upper.as_ref()]
            .into_iter()
            .flatten()
            .filter_map(|b| match b {
                BoundExpr::Sym(s) => Some(s.as_str()),
                BoundExpr::Lit(_) => None,
            })
    }

    pub fn resolve(
        &self,
        lookup: impl Fn(&str) -> Option<i64>,
    ) -> Result<TimeInterval, IntervalResolveError> {
        let bound = |b: &BoundExpr| -> Result<Rat, IntervalResolveError> {
            match b {
                BoundExpr::Lit(v) => Ok(Rat::from_integer(*v)),
                BoundExpr::Sym(s) => lookup(s)
                    .map(Rat::from_integer)
                    .ok_or_else(|| IntervalResolveError::Unbound(s.clone())),
            }
        };
        let lower = bound(&self.lower)?;
        let upper = self.upper.as_ref().map(bound).transpose()?;
        Ok(TimeInterval::new(
            lower,
            self.lower_strict,
            upper,
            self.upper_strict,
        )?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    /// A variable, or an enumeration constant.
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Eq => "=",
            BinOp::Ne => "<>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
        }
    }
}

impl Expr {
    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn ident(s: &str) -> Expr {
        Expr::Ident(s.to_string())
    }

    pub fn idents(&self, out: &mut Vec<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Ident(s) => out.push(s.clone()),
            Expr::Unary(_, e) => e.idents(out),
            Expr::Binary(_, a, b) => {
                a.idents(out);
                b.idents(out);
            }
        }
    }
}

/// One segment of an instance path: a 1-based index or an instance label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum PathSeg {
    Index(u32),
    Name(String),
}

impl fmt::Display for PathSeg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathSeg::Index(i) => write!(f, "{i}"),
            PathSeg::Name(n) => f.write_str(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InstancePath(pub Vec<PathSeg>);

impl fmt::Display for InstancePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        f.write_str(&parts.join("/"))
    }
}

/// Something a property can refer to.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Observable {
    Event { path: InstancePath, port: String },
    State { path: InstancePath, state: String },
    Value { path: InstancePath, pred: Expr },
    Start { path: InstancePath },
}

/// State/event LTL over atoms of type `A`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula<A> {
    True,
    False,
    Atom(A),
    /// No transition can fire from the current state.
    Dead,
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Or(Box<Formula<A>>, Box<Formula<A>>),
    Implies(Box<Formula<A>>, Box<Formula<A>>),
    Next(Box<Formula<A>>),
    Until(Box<Formula<A>>, Box<Formula<A>>),
    Release(Box<Formula<A>>, Box<Formula<A>>),
    Always(Box<Formula<A>>),
    Eventually(Box<Formula<A>>),
}

impl<A> Formula<A> {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<A>) -> Self {
        Formula::Not(Box::new(f))
    }
    pub fn and(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn or(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn implies(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }
    pub fn always(f: Formula<A>) -> Self {
        Formula::Always(Box::new(f))
    }
    pub fn eventually(f: Formula<A>) -> Self {
        Formula::Eventually(Box::new(f))
    }
    pub fn until(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::Until(Box::new(a), Box::new(b))
    }

    /// Maps every atom, failing on the first error.
    pub fn try_map<B, E>(&self, f: &mut impl FnMut(&A) -> Result<B, E>) -> Result<Formula<B>, E> {
        use Formula::*;
        Ok(match self {
            True => True,
            False => False,
            Dead => Dead,
            Atom(a) => Atom(f(a)?),
            Not(a) => Not(Box::new(a.try_map(f)?)),
            And(a, b) => And(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Or(a, b) => Or(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Implies(a, b) => Implies(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Next(a) => Next(Box::new(a.try_map(f)?)),
            Until(a, b) => Until(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Release(a, b) => Release(Box::new(a.try_map(f)?), Box::new(b.try_map(f)?)),
            Always(a) => Always(Box::new(a.try_map(f)?)),
            Eventually(a) => Eventually(Box::new(a.try_map(f)?)),
        })
    }

    /// True when the formula has no temporal operator.
    pub fn is_propositional(&self) -> bool {
        use Formula::*;
        match self {
            True | False | Dead | Atom(_) => true,
            Not(a) => a.is_propositional(),
            And(a, b) | Or(a, b) | Implies(a, b) => a.is_propositional() && b.is_propositional(),
            Next(_) | Until(..) | Release(..) | Always(_) | Eventually(_) => false,
        }
    }

    pub fn atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        use Formula::*;
        match self {
            True | False | Dead => {}
            Atom(a) => out.push(a),
            Not(a) | Next(a) | Always(a) | Eventually(a) => a.atoms(out),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    pub fn mentions_dead(&self) -> bool {
        use Formula::*;
        match self {
            Dead => true,
            True | False | Atom(_) => false,
            Not(a) | Next(a) | Always(a) | Eventually(a) => a.mentions_dead(),
            And(a, b) | Or(a, b) | Implies(a, b) | Until(a, b) | Release(a, b) => {
                a.mentions_dead() || b.mentions_dead()
            }
        }
    }
}

/// Realtime and untimed specification patterns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pattern<A, I> {
    /// Every `trigger` is followed by `response` within the interval.
    LeadsTo {
        trigger: Formula<A>,
        response: Formula<A>,
        within: I,
    },
    /// `forbidden` does not occur within the interval after `trigger`.
    AbsentAfter {
        forbidden: Formula<A>,
        trigger: Formula<A>,
        within: I,
    },
    Absent(Formula<A>),
    NoGlobalDeadlock,
    Unreachable(Formula<A>),
    Resettable(Formula<A>),
    Ltl(Formula<A>),
}

impl<A, I> Pattern<A, I> {
    pub fn try_map<B, J, E>(
        &self,
        atom: &mut impl FnMut(&A) -> Result<B, E>,
        interval: &mut impl FnMut(&I) -> Result<J, E>,
    ) -> Result<Pattern<B, J>, E> {
        Ok(match self {
            Pattern::LeadsTo {
                trigger,
                response,
                within,
            } => Pattern::LeadsTo {
                trigger: trigger.try_map(atom)?,
                response: response.try_map(atom)?,
                within: interval(within)?,
            },
            Pattern::AbsentAfter {
                forbidden,
                trigger,
                within,
            } => Pattern::AbsentAfter {
                forbidden: forbidden.try_map(atom)?,
                trigger: trigger.try_map(atom)?,
                within: interval(within)?,
            },
            Pattern::Absent(f) => Pattern::Absent(f.try_map(atom)?),
            Pattern::NoGlobalDeadlock => Pattern::NoGlobalDeadlock,
            Pattern::Unreachable(f) => Pattern::Unreachable(f.try_map(atom)?),
            Pattern::Resettable(f) => Pattern::Resettable(f.try_map(atom)?),
            Pattern::Ltl(f) => Pattern::Ltl(f.try_map(atom)?),
        })
    }

    pub fn is_timed(&self) -> bool {
        matches!(self, Pattern::LeadsTo { .. } | Pattern::AbsentAfter { .. })
    }
}

pub type PropertyBody = Pattern<Observable, IntervalExpr>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropertyDecl {
    pub name: String,
    pub body: PropertyBody,
    pub span: Span,
}
