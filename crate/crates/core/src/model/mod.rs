//! The modelling language: syntax, values, linking, typing and semantics.

pub mod ast;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod project;
pub mod semantics;
pub mod typeck;
pub mod value;

pub use ast::{Expr, Origin};
pub use project::{parse_project, Machine, Project, Universe};
pub use semantics::{Semantics, SemanticsError};
pub use typeck::{typecheck, Diagnostic};
pub use value::{Bindings, State, Value};
