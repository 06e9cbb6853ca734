//! Verification toolchain for a small timed specification language.
//!
//! Programs are parsed, flattened into Timed Transition Systems, explored
//! as state-class graphs, and checked against realtime patterns and
//! state/event LTL.

pub mod ast;
pub mod classgraph;
pub mod domain;
pub mod lexer;
pub mod library;
pub mod ltl;
pub mod oracle;
pub mod parser;
pub mod patterns;
pub mod pretty;
pub mod random;
pub mod time;
pub mod tts;

pub use parser::{parse_program, parse_property, ParseError};
pub use tts::{compile, Tts};
