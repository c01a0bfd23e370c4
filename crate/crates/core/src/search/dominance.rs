//! Label dominance.
//!
//! Two labels at the same node are comparable when every future step
//! behaves identically for both: same residual obligation, same arrival
//! context (mode and line ridden, which decide fares and mode atoms), and
//! the same value of every state variable the constraint mentions. Values
//! past the largest (or below the smallest) threshold of a monotone
//! variable are interchangeable, so they are bucketed together.
//!
//! Averages are the exception: a threshold `avg <= c` is a sign condition
//! on the excess `sum - c * visited`, which moves the same way for both
//! labels on any shared continuation. When every atom over an average leans
//! one way (only ever wanted true, or only ever wanted false), a label with
//! the better excess at each threshold can stand in for the other, so those
//! excesses are compared rather than keyed.
//!
//! Within a bucket, an earlier arrival is never worse: it can catch every
//! departure the later one can. With waiting attributed to transit time the
//! earlier label may have to wait longer, which is bounded by the arrival
//! gap priced at the transit time rate.

use alloc::collections::BTreeMap;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::state::SearchState;
use crate::geodata::{LineIdx, NodeIdx};
use crate::ltl::{Atom, AuxAgg, CmpOp, LtlFormula, StateVar, SCORE_TOLERANCE};
use crate::mode::Mode;

// Margin around thresholds; wider than the comparison tolerance.
const MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum KeyVal {
    Saturated,
    Int(i64),
    Real(u64),
    Avg(u64, u32),
}

#[derive(Debug, Clone, Copy)]
enum Tracked {
    /// Nondecreasing integer saturating above `cap`.
    Time(Mode, f64),
    Fare(Mode, f64),
    /// Aggregate of the dataset at this index.
    AuxUp(usize, AuxAgg, f64),
    AuxDown(usize, f64),
    AuxAvg(usize),
}

/// An excess `sum - threshold * visited` of the average over a dataset,
/// oriented so that smaller is never worse.
#[derive(Debug, Clone, Copy)]
struct Excess {
    dataset: usize,
    threshold: f64,
    sign: f64,
}

impl Excess {
    fn of(&self, s: &SearchState) -> f64 {
        self.sign * (s.vars.aux[self.dataset].sum - self.threshold * f64::from(s.vars.visited))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(super) struct DomKey {
    node: NodeIdx,
    arrival: Option<Mode>,
    on_line: Option<LineIdx>,
    residual: LtlFormula,
    clock: Option<u32>,
    vars: Vec<KeyVal>,
}

/// Which state variables separate labels, derived from the constraint.
#[derive(Debug, Clone)]
pub(super) struct Signature {
    tracked: Vec<Tracked>,
    excesses: Vec<Excess>,
    exact_clock: bool,
}

impl Signature {
    pub(super) fn new(constraint: &LtlFormula, datasets: &[Arc<str>], public_waits: bool) -> Self {
        // Bounds per variable: (smallest, largest).
        let mut bounds: BTreeMap<StateVar, (f64, f64)> = BTreeMap::new();
        constraint.for_each_atom(&mut |a| {
            if let Atom::VarCmp(c) = a {
                let b = c.bound.as_f64();
                let e = bounds.entry(c.var.clone()).or_insert((b, b));
                e.0 = e.0.min(b);
                e.1 = e.1.max(b);
            }
        });
        let mut avg_atoms: BTreeMap<&str, Vec<(CmpOp, f64, bool)>> = BTreeMap::new();
        with_polarity(constraint, true, &mut |a, positive| {
            if let Atom::VarCmp(c) = a {
                if let StateVar::Aux { dataset, agg: AuxAgg::Avg } = &c.var {
                    avg_atoms.entry(dataset).or_default().push((c.op, c.bound.as_f64(), positive));
                }
            }
        });
        let index = |dataset: &str| {
            datasets
                .iter()
                .position(|d| **d == *dataset)
                .expect("constraint datasets are checked before search")
        };
        let mut excesses = Vec::new();
        let mut exact_avg = Vec::new();
        for (dataset, atoms) in &avg_atoms {
            let i = index(dataset);
            let mut sign = 0.0;
            let mut found = Vec::new();
            for &(op, bound, positive) in atoms {
                // `avg <= c` holds iff the excess over the effective threshold is <= 0.
                let (threshold, lower_holds) = match op {
                    CmpOp::Le => (bound + SCORE_TOLERANCE, true),
                    CmpOp::Lt => (bound - SCORE_TOLERANCE, true),
                    CmpOp::Ge => (bound - SCORE_TOLERANCE, false),
                    CmpOp::Gt => (bound + SCORE_TOLERANCE, false),
                    CmpOp::Eq => (bound, true),
                };
                let s = if lower_holds == positive { 1.0 } else { -1.0 };
                if op == CmpOp::Eq || (sign != 0.0 && sign != s) {
                    sign = f64::NAN;
                    break;
                }
                sign = s;
                found.push(Excess {
                    dataset: i,
                    threshold,
                    sign: s,
                });
            }
            if sign.is_nan() {
                exact_avg.push(i);
            } else {
                excesses.extend(found);
            }
        }

        let mut exact_clock = false;
        let mut tracked = Vec::new();
        for (var, (lo, hi)) in bounds {
            match var {
                StateVar::Clock => exact_clock = true,
                StateVar::AuxHere { .. } => {}
                StateVar::Time(m) => {
                    if m == Mode::Public && public_waits {
                        exact_clock = true;
                    }
                    tracked.push(Tracked::Time(m, hi));
                }
                StateVar::Fare(m) => tracked.push(Tracked::Fare(m, hi)),
                StateVar::Aux { dataset, agg } => {
                    let i = index(&dataset);
                    match agg {
                        AuxAgg::Sum | AuxAgg::Max => tracked.push(Tracked::AuxUp(i, agg, hi)),
                        AuxAgg::Min => tracked.push(Tracked::AuxDown(i, lo)),
                        AuxAgg::Avg if exact_avg.contains(&i) => tracked.push(Tracked::AuxAvg(i)),
                        AuxAgg::Avg => {}
                    }
                }
            }
        }
        Signature {
            tracked,
            excesses,
            exact_clock,
        }
    }

    /// Whether `a` is at least as good as `b` on every compared excess.
    pub(super) fn no_worse(&self, a: &SearchState, b: &SearchState) -> bool {
        self.excesses.iter().all(|e| {
            let same_count = a.vars.visited == b.vars.visited;
            // With equal counts the comparison is exact; otherwise keep clear
            // of rounding in the excesses themselves.
            if same_count {
                e.sign * a.vars.aux[e.dataset].sum <= e.sign * b.vars.aux[e.dataset].sum
            } else {
                e.of(a) <= e.of(b) - MARGIN
            }
        })
    }

    pub(super) fn key(&self, s: &SearchState) -> DomKey {
        let up = |v: f64, cap: f64| {
            if v > cap + MARGIN {
                KeyVal::Saturated
            } else {
                KeyVal::Real(bits(v))
            }
        };
        let int_up = |v: i64, cap: f64| {
            if v as f64 > cap + MARGIN {
                KeyVal::Saturated
            } else {
                KeyVal::Int(v)
            }
        };
        let vars = self
            .tracked
            .iter()
            .map(|t| match *t {
                Tracked::Time(m, cap) => int_up(i64::from(s.vars.time(m)), cap),
                Tracked::Fare(m, cap) => int_up(s.vars.fare(m), cap),
                Tracked::AuxUp(i, AuxAgg::Sum, cap) => up(s.vars.aux[i].sum, cap),
                Tracked::AuxUp(i, _, cap) => up(s.vars.aux[i].max, cap),
                Tracked::AuxDown(i, floor) => {
                    let v = s.vars.aux[i].min;
                    if v < floor - MARGIN {
                        KeyVal::Saturated
                    } else {
                        KeyVal::Real(bits(v))
                    }
                }
                Tracked::AuxAvg(i) => KeyVal::Avg(bits(s.vars.aux[i].sum), s.vars.visited),
            })
            .collect();
        DomKey {
            node: s.node,
            arrival: s.arrival_mode,
            on_line: s.on_line,
            residual: s.residual.clone(),
            clock: self.exact_clock.then_some(s.vars.clock_s),
            vars,
        }
    }
}

/// Visits every atom with whether it occurs under an even number of
/// negations. `a AFTER b` reads as "always, `a` implies next `b`", so its
/// trigger is negative.
fn with_polarity<'a>(f: &'a LtlFormula, positive: bool, visit: &mut impl FnMut(&'a Atom, bool)) {
    match f {
        LtlFormula::True | LtlFormula::False => {}
        LtlFormula::Atom(a) => visit(a, positive),
        LtlFormula::Not(x) => with_polarity(x, !positive, visit),
        LtlFormula::And(a, b) | LtlFormula::Or(a, b) => {
            with_polarity(a, positive, visit);
            with_polarity(b, positive, visit);
        }
        LtlFormula::Next(x) | LtlFormula::Always(x) | LtlFormula::Eventually(x) => with_polarity(x, positive, visit),
        LtlFormula::After(a, b) => {
            with_polarity(a, !positive, visit);
            with_polarity(b, positive, visit);
        }
    }
}

fn bits(v: f64) -> u64 {
    // Folds -0.0 into 0.0.
    (v + 0.0).to_bits()
}

/// Live labels per dominance key.
#[derive(Debug, Default)]
pub(super) struct DominanceStore {
    buckets: BTreeMap<DomKey, Vec<u32>>,
}

impl DominanceStore {
    pub(super) fn bucket(&mut self, key: DomKey) -> &mut Vec<u32> {
        self.buckets.entry(key).or_default()
    }
}
