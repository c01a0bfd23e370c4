use alloc::vec::Vec;

use super::ast::{Atom, AuxAgg, Bound, Comparison, LtlFormula, StateVar};
use crate::mode::Mode;
use crate::pcf::StateVars;

/// Read access to the state variables of one trajectory state.
pub trait Valuation {
    /// Mode that led to this state; `None` at the first state.
    fn mode(&self) -> Option<Mode>;
    fn time_s(&self, mode: Mode) -> i64;
    fn fare_cents(&self, mode: Mode) -> i64;
    fn clock_s(&self) -> i64;
    /// Aggregate of a dataset along the path; 0 for unknown datasets.
    fn aux(&self, dataset: &str, agg: AuxAgg) -> f64;
    /// Score of the current node; 0 for unknown datasets.
    fn aux_here(&self, dataset: &str) -> f64;
}

/// One state of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSnapshot {
    pub mode: Option<Mode>,
    pub vars: StateVars,
    /// Score of the current node, aligned with `vars.aux`.
    pub aux_here: Vec<f64>,
}

impl Valuation for StateSnapshot {
    fn mode(&self) -> Option<Mode> {
        self.mode
    }

    fn time_s(&self, mode: Mode) -> i64 {
        i64::from(self.vars.time(mode))
    }

    fn fare_cents(&self, mode: Mode) -> i64 {
        self.vars.fare(mode)
    }

    fn clock_s(&self) -> i64 {
        i64::from(self.vars.clock_s)
    }

    fn aux(&self, dataset: &str, agg: AuxAgg) -> f64 {
        let Some(i) = self.vars.aux_index(dataset) else {
            return 0.0;
        };
        let a = &self.vars.aux[i];
        match agg {
            AuxAgg::Sum => a.sum,
            AuxAgg::Max => a.max,
            AuxAgg::Min => a.min,
            AuxAgg::Avg => self.vars.aux_avg(i),
        }
    }

    fn aux_here(&self, dataset: &str) -> f64 {
        self.vars
            .aux_index(dataset)
            .and_then(|i| self.aux_here.get(i).copied())
            .unwrap_or(0.0)
    }
}

impl<V: Valuation + ?Sized> Valuation for &V {
    fn mode(&self) -> Option<Mode> {
        (**self).mode()
    }
    fn time_s(&self, mode: Mode) -> i64 {
        (**self).time_s(mode)
    }
    fn fare_cents(&self, mode: Mode) -> i64 {
        (**self).fare_cents(mode)
    }
    fn clock_s(&self) -> i64 {
        (**self).clock_s()
    }
    fn aux(&self, dataset: &str, agg: AuxAgg) -> f64 {
        (**self).aux(dataset, agg)
    }
    fn aux_here(&self, dataset: &str) -> f64 {
        (**self).aux_here(dataset)
    }
}

impl Atom {
    pub fn holds<V: Valuation + ?Sized>(&self, s: &V) -> bool {
        match self {
            Atom::ModeIs(m) => s.mode() == Some(*m),
            Atom::VarCmp(c) => c.holds(s),
        }
    }
}

impl Comparison {
    pub fn holds<V: Valuation + ?Sized>(&self, s: &V) -> bool {
        match (&self.var, self.bound) {
            (StateVar::Time(m), Bound::Int(b)) => self.op.holds_int(s.time_s(*m), b),
            (StateVar::Fare(m), Bound::Int(b)) => self.op.holds_int(s.fare_cents(*m), b),
            (StateVar::Clock, Bound::Int(b)) => self.op.holds_int(s.clock_s(), b),
            (var, bound) => {
                let value = match var {
                    StateVar::Time(m) => s.time_s(*m) as f64,
                    StateVar::Fare(m) => s.fare_cents(*m) as f64,
                    StateVar::Clock => s.clock_s() as f64,
                    StateVar::Aux { dataset, agg } => s.aux(dataset, *agg),
                    StateVar::AuxHere { dataset } => s.aux_here(dataset),
                };
                self.op.holds_real(value, bound.as_f64())
            }
        }
    }
}

/// Truth of a formula without temporal operators at a single state.
pub fn holds_now<V: Valuation + ?Sized>(f: &LtlFormula, s: &V) -> Option<bool> {
    Some(match f {
        LtlFormula::True => true,
        LtlFormula::False => false,
        LtlFormula::Atom(a) => a.holds(s),
        LtlFormula::Not(x) => !holds_now(x, s)?,
        LtlFormula::And(a, b) => holds_now(a, s)? && holds_now(b, s)?,
        LtlFormula::Or(a, b) => holds_now(a, s)? || holds_now(b, s)?,
        _ => return None,
    })
}

/// Whether the trajectory satisfies the formula, evaluating every connective
/// directly on trajectory suffixes.
///
/// Panics on an empty trajectory.
pub fn eval<V: Valuation>(f: &LtlFormula, trajectory: &[V]) -> bool {
    assert!(!trajectory.is_empty(), "a trajectory has at least its initial state");
    holds_at(f, trajectory, 0)
}

fn holds_at<V: Valuation>(f: &LtlFormula, t: &[V], i: usize) -> bool {
    let last = t.len() - 1;
    match f {
        LtlFormula::True => true,
        LtlFormula::False => false,
        LtlFormula::Atom(a) => a.holds(&t[i]),
        LtlFormula::Not(x) => !holds_at(x, t, i),
        LtlFormula::And(a, b) => holds_at(a, t, i) && holds_at(b, t, i),
        LtlFormula::Or(a, b) => holds_at(a, t, i) || holds_at(b, t, i),
        LtlFormula::Next(x) => i < last && holds_at(x, t, i + 1),
        LtlFormula::Always(x) => (i..=last).all(|j| holds_at(x, t, j)),
        LtlFormula::Eventually(x) => (i..=last).any(|j| holds_at(x, t, j)),
        LtlFormula::After(a, b) => (i..last).all(|j| !holds_at(a, t, j) || holds_at(b, t, j + 1)),
    }
}
