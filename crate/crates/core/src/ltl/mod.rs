//! Constraint language: finite-trace temporal logic over trip state
//! variables.
//!
//! Formulas are built from atoms over the mode that led to a state and
//! numeric state variables, combined with `!`, `&`, `|`, `X` (next), `G`
//! (always), `F` (eventually) and the infix `AFTER`: `a AFTER b` holds when
//! every non-final position satisfying `a` is followed by a suffix
//! satisfying `b`.
//!
//! [`eval`] decides a whole trajectory directly from the semantics;
//! [`progress`] consumes states one at a time and is what the planner uses
//! to prune partial routes.

use alloc::string::String;

mod ast;
mod eval;
mod parse;
mod print;
mod progress;

pub use ast::{Atom, AuxAgg, Bound, CmpOp, Comparison, LtlFormula, Real, StateVar, SCORE_TOLERANCE};
pub use eval::{eval, holds_now, StateSnapshot, Valuation};
pub use parse::parse;
pub use print::print;
pub use progress::{holds_at_end, progress, progress_unchecked, specialize, verdict_of, Progression, Verdict};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LtlError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown variable `{name}` at {position}")]
    UnknownVariable { position: usize, name: String },
    #[error("unknown mode `{name}` at {position}")]
    UnknownMode { position: usize, name: String },
    #[error("the left side of AFTER must not contain temporal operators")]
    UnsupportedProgression { position: Option<usize> },
}

impl LtlError {
    fn syntax(position: usize, message: impl Into<String>) -> Self {
        LtlError::Syntax {
            position,
            message: message.into(),
        }
    }

    /// Byte offset into the constraint text, when known.
    pub fn position(&self) -> Option<usize> {
        match self {
            LtlError::Syntax { position, .. }
            | LtlError::UnknownVariable { position, .. }
            | LtlError::UnknownMode { position, .. } => Some(*position),
            LtlError::UnsupportedProgression { position } => *position,
        }
    }
}

/// The implicit "no driving after biking or transit" constraint.
pub fn default_constraint() -> LtlFormula {
    parse("(mode=bike | mode=public) AFTER G(!(mode=car))").expect("default constraint parses")
}
