//! Formula progression over finite traces.
//!
//! Progressing `f` through a state that is known to have a successor yields
//! the obligation the remaining suffix must meet. Residuals are kept in a
//! canonical form (constants folded, conjunctions and disjunctions flattened,
//! sorted and deduplicated) so equal obligations compare equal.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::ast::{Atom, LtlFormula};
use super::eval::{holds_now, Valuation};
use super::LtlError;

/// Three-valued verdict on a trajectory prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Every extension satisfies the formula.
    True,
    /// No extension satisfies the formula.
    False,
    Pending,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Progression {
    pub verdict: Verdict,
    pub residual: LtlFormula,
}

/// Consumes one state.
///
/// With `is_final` the state is the last one of the trajectory and the
/// verdict is decided; otherwise the residual constrains the suffix that
/// starts at the next state.
pub fn progress<V: Valuation + ?Sized>(f: &LtlFormula, state: &V, is_final: bool) -> Result<Progression, LtlError> {
    if !f.is_progressable() {
        return Err(LtlError::UnsupportedProgression { position: None });
    }
    Ok(progress_unchecked(f, state, is_final))
}

/// [`progress`] for formulas already known to satisfy
/// [`LtlFormula::is_progressable`].
pub fn progress_unchecked<V: Valuation + ?Sized>(f: &LtlFormula, state: &V, is_final: bool) -> Progression {
    if is_final {
        let ok = holds_at_end(f, state);
        return Progression {
            verdict: if ok { Verdict::True } else { Verdict::False },
            residual: if ok { LtlFormula::True } else { LtlFormula::False },
        };
    }
    let residual = step(f, state);
    Progression {
        verdict: verdict_of(&residual),
        residual,
    }
}

pub fn verdict_of(residual: &LtlFormula) -> Verdict {
    match residual {
        LtlFormula::True => Verdict::True,
        LtlFormula::False => Verdict::False,
        _ => Verdict::Pending,
    }
}

/// Truth of `f` on the one-state trajectory made of `state` alone.
pub fn holds_at_end<V: Valuation + ?Sized>(f: &LtlFormula, state: &V) -> bool {
    match f {
        LtlFormula::True => true,
        LtlFormula::False => false,
        LtlFormula::Atom(a) => a.holds(state),
        LtlFormula::Not(x) => !holds_at_end(x, state),
        LtlFormula::And(a, b) => holds_at_end(a, state) && holds_at_end(b, state),
        LtlFormula::Or(a, b) => holds_at_end(a, state) || holds_at_end(b, state),
        LtlFormula::Next(_) => false,
        LtlFormula::Always(x) | LtlFormula::Eventually(x) => holds_at_end(x, state),
        LtlFormula::After(..) => true,
    }
}

fn step<V: Valuation + ?Sized>(f: &LtlFormula, s: &V) -> LtlFormula {
    match f {
        LtlFormula::True => LtlFormula::True,
        LtlFormula::False => LtlFormula::False,
        LtlFormula::Atom(a) => constant(a.holds(s)),
        LtlFormula::Not(x) => mk_not(step(x, s)),
        LtlFormula::And(a, b) => mk_and(step(a, s), step(b, s)),
        LtlFormula::Or(a, b) => mk_or(step(a, s), step(b, s)),
        LtlFormula::Next(x) => (**x).clone(),
        LtlFormula::Always(x) => mk_and(step(x, s), f.clone()),
        LtlFormula::Eventually(x) => mk_or(step(x, s), f.clone()),
        LtlFormula::After(trigger, then) => {
            let fired = holds_now(trigger, s).expect("After triggers are state formulas");
            if fired {
                mk_and((**then).clone(), f.clone())
            } else {
                f.clone()
            }
        }
    }
}

/// Replaces atoms whose value is known at every state with constants and
/// simplifies the result.
pub fn specialize(f: &LtlFormula, known: &impl Fn(&Atom) -> Option<bool>) -> LtlFormula {
    match f {
        LtlFormula::True | LtlFormula::False => f.clone(),
        LtlFormula::Atom(a) => known(a).map_or_else(|| f.clone(), constant),
        LtlFormula::Not(x) => mk_not(specialize(x, known)),
        LtlFormula::And(a, b) => mk_and(specialize(a, known), specialize(b, known)),
        LtlFormula::Or(a, b) => mk_or(specialize(a, known), specialize(b, known)),
        LtlFormula::Next(x) => match specialize(x, known) {
            LtlFormula::False => LtlFormula::False,
            x => LtlFormula::next(x),
        },
        LtlFormula::Always(x) => match specialize(x, known) {
            c @ (LtlFormula::True | LtlFormula::False) => c,
            x => LtlFormula::always(x),
        },
        LtlFormula::Eventually(x) => match specialize(x, known) {
            c @ (LtlFormula::True | LtlFormula::False) => c,
            x => LtlFormula::eventually(x),
        },
        LtlFormula::After(a, b) => match (specialize(a, known), specialize(b, known)) {
            (LtlFormula::False, _) | (_, LtlFormula::True) => LtlFormula::True,
            (a, b) => LtlFormula::after(a, b),
        },
    }
}

fn constant(b: bool) -> LtlFormula {
    if b {
        LtlFormula::True
    } else {
        LtlFormula::False
    }
}

fn mk_not(f: LtlFormula) -> LtlFormula {
    match f {
        LtlFormula::True => LtlFormula::False,
        LtlFormula::False => LtlFormula::True,
        LtlFormula::Not(x) => *x,
        other => LtlFormula::Not(Box::new(other)),
    }
}

fn mk_and(a: LtlFormula, b: LtlFormula) -> LtlFormula {
    junction(a, b, true)
}

fn mk_or(a: LtlFormula, b: LtlFormula) -> LtlFormula {
    junction(a, b, false)
}

/// Canonical n-ary conjunction (`is_and`) or disjunction of two formulas.
fn junction(a: LtlFormula, b: LtlFormula, is_and: bool) -> LtlFormula {
    let (unit, zero) = if is_and {
        (LtlFormula::True, LtlFormula::False)
    } else {
        (LtlFormula::False, LtlFormula::True)
    };
    if a == zero || b == zero {
        return zero;
    }
    if a == unit {
        return b;
    }
    if b == unit {
        return a;
    }
    let mut parts = Vec::new();
    flatten(a, is_and, &mut parts);
    flatten(b, is_and, &mut parts);
    parts.sort();
    parts.dedup();
    // x together with !x
    for p in &parts {
        if let LtlFormula::Not(inner) = p {
            if parts.binary_search(inner).is_ok() {
                return zero;
            }
        }
    }
    let mut iter = parts.into_iter().rev();
    let mut acc = iter.next().unwrap_or(unit);
    for p in iter {
        acc = if is_and {
            LtlFormula::And(Box::new(p), Box::new(acc))
        } else {
            LtlFormula::Or(Box::new(p), Box::new(acc))
        };
    }
    acc
}

fn flatten(f: LtlFormula, is_and: bool, out: &mut Vec<LtlFormula>) {
    match f {
        LtlFormula::And(a, b) if is_and => {
            flatten(*a, is_and, out);
            flatten(*b, is_and, out);
        }
        LtlFormula::Or(a, b) if !is_and => {
            flatten(*a, is_and, out);
            flatten(*b, is_and, out);
        }
        other => out.push(other),
    }
}
