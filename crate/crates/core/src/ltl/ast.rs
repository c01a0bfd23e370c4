use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::hash::{Hash, Hasher};

use crate::mode::Mode;

/// Tolerance for comparisons over auxiliary scores.
pub const SCORE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            "=" => CmpOp::Eq,
            ">=" => CmpOp::Ge,
            ">" => CmpOp::Gt,
            _ => return None,
        })
    }

    pub fn holds_int(self, value: i64, bound: i64) -> bool {
        match self {
            CmpOp::Lt => value < bound,
            CmpOp::Le => value <= bound,
            CmpOp::Eq => value == bound,
            CmpOp::Ge => value >= bound,
            CmpOp::Gt => value > bound,
        }
    }

    /// Real comparison where values within [`SCORE_TOLERANCE`] count as equal.
    pub fn holds_real(self, value: f64, bound: f64) -> bool {
        let close = (value - bound).abs() <= SCORE_TOLERANCE;
        match self {
            CmpOp::Lt => value < bound && !close,
            CmpOp::Le => value < bound || close,
            CmpOp::Eq => close,
            CmpOp::Ge => value > bound || close,
            CmpOp::Gt => value > bound && !close,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AuxAgg {
    Sum,
    Max,
    Min,
    Avg,
}

impl AuxAgg {
    pub const ALL: [AuxAgg; 4] = [AuxAgg::Sum, AuxAgg::Max, AuxAgg::Min, AuxAgg::Avg];

    pub fn name(self) -> &'static str {
        match self {
            AuxAgg::Sum => "sum",
            AuxAgg::Max => "max",
            AuxAgg::Min => "min",
            AuxAgg::Avg => "avg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        AuxAgg::ALL.into_iter().find(|a| a.name() == s)
    }
}

/// A numeric state variable that constraints can compare against.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateVar {
    /// Seconds spent so far in a mode.
    Time(Mode),
    /// Cents spent so far on a mode.
    Fare(Mode),
    /// Running aggregate of an auxiliary dataset along the path.
    Aux { dataset: String, agg: AuxAgg },
    /// Auxiliary score of the current node.
    AuxHere { dataset: String },
    /// Seconds since departure.
    Clock,
}

impl StateVar {
    /// Integer-valued variables compare exactly; auxiliary scores are reals.
    pub fn is_integral(&self) -> bool {
        matches!(self, StateVar::Time(_) | StateVar::Fare(_) | StateVar::Clock)
    }

    pub fn dataset(&self) -> Option<&str> {
        match self {
            StateVar::Aux { dataset, .. } | StateVar::AuxHere { dataset } => Some(dataset),
            _ => None,
        }
    }
}

/// A real number with a total order, so formulas can be compared and sorted.
#[derive(Debug, Clone, Copy)]
pub struct Real(f64);

impl Real {
    pub fn new(v: f64) -> Self {
        // -0.0 and 0.0 are the same bound
        Real(if v == 0.0 { 0.0 } else { v })
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Real {}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Real {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Real {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

/// Comparison bound: seconds or cents for integral variables, a real score
/// for auxiliary variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    Int(i64),
    Real(Real),
}

impl Bound {
    pub fn as_f64(self) -> f64 {
        match self {
            Bound::Int(v) => v as f64,
            Bound::Real(r) => r.get(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparison {
    pub var: StateVar,
    pub op: CmpOp,
    pub bound: Bound,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    /// The mode that led to the current state. False at the first state.
    ModeIs(Mode),
    VarCmp(Comparison),
}

impl Atom {
    pub fn mode_is(mode: Mode) -> Self {
        Atom::ModeIs(mode)
    }

    pub fn time(mode: Mode, op: CmpOp, seconds: i64) -> Self {
        Atom::VarCmp(Comparison {
            var: StateVar::Time(mode),
            op,
            bound: Bound::Int(seconds),
        })
    }

    pub fn fare(mode: Mode, op: CmpOp, cents: i64) -> Self {
        Atom::VarCmp(Comparison {
            var: StateVar::Fare(mode),
            op,
            bound: Bound::Int(cents),
        })
    }

    pub fn clock(op: CmpOp, seconds: i64) -> Self {
        Atom::VarCmp(Comparison {
            var: StateVar::Clock,
            op,
            bound: Bound::Int(seconds),
        })
    }

    pub fn aux(dataset: impl Into<String>, agg: AuxAgg, op: CmpOp, value: f64) -> Self {
        Atom::VarCmp(Comparison {
            var: StateVar::Aux {
                dataset: dataset.into(),
                agg,
            },
            op,
            bound: Bound::Real(Real::new(value)),
        })
    }

    pub fn aux_here(dataset: impl Into<String>, op: CmpOp, value: f64) -> Self {
        Atom::VarCmp(Comparison {
            var: StateVar::AuxHere {
                dataset: dataset.into(),
            },
            op,
            bound: Bound::Real(Real::new(value)),
        })
    }
}

/// Finite-trace temporal formula.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LtlFormula {
    True,
    False,
    Atom(Atom),
    Not(Box<LtlFormula>),
    And(Box<LtlFormula>, Box<LtlFormula>),
    Or(Box<LtlFormula>, Box<LtlFormula>),
    /// Holds at the next state; false at the last one.
    Next(Box<LtlFormula>),
    Always(Box<LtlFormula>),
    Eventually(Box<LtlFormula>),
    /// Whenever the left side holds at a non-final position, the right side
    /// holds on the suffix starting one state later.
    After(Box<LtlFormula>, Box<LtlFormula>),
}

impl LtlFormula {
    pub fn atom(a: Atom) -> Self {
        LtlFormula::Atom(a)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: LtlFormula) -> Self {
        LtlFormula::Not(Box::new(f))
    }

    pub fn and(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: LtlFormula, b: LtlFormula) -> Self {
        LtlFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn next(f: LtlFormula) -> Self {
        LtlFormula::Next(Box::new(f))
    }

    pub fn always(f: LtlFormula) -> Self {
        LtlFormula::Always(Box::new(f))
    }

    pub fn eventually(f: LtlFormula) -> Self {
        LtlFormula::Eventually(Box::new(f))
    }

    pub fn after(trigger: LtlFormula, then: LtlFormula) -> Self {
        LtlFormula::After(Box::new(trigger), Box::new(then))
    }

    /// Height of the syntax tree; atoms and constants have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => 1,
            LtlFormula::Not(f) | LtlFormula::Next(f) | LtlFormula::Always(f) | LtlFormula::Eventually(f) => {
                1 + f.depth()
            }
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::After(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// No temporal operators anywhere in the formula.
    pub fn is_state_formula(&self) -> bool {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => true,
            LtlFormula::Not(f) => f.is_state_formula(),
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) => a.is_state_formula() && b.is_state_formula(),
            LtlFormula::Next(_) | LtlFormula::Always(_) | LtlFormula::Eventually(_) | LtlFormula::After(..) => false,
        }
    }

    /// Every `After` has a state-formula trigger, the shape formula
    /// progression supports.
    pub fn is_progressable(&self) -> bool {
        match self {
            LtlFormula::True | LtlFormula::False | LtlFormula::Atom(_) => true,
            LtlFormula::Not(f) | LtlFormula::Next(f) | LtlFormula::Always(f) | LtlFormula::Eventually(f) => {
                f.is_progressable()
            }
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) => a.is_progressable() && b.is_progressable(),
            LtlFormula::After(a, b) => a.is_state_formula() && b.is_progressable(),
        }
    }

    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self {
            LtlFormula::True | LtlFormula::False => {}
            LtlFormula::Atom(a) => f(a),
            LtlFormula::Not(x) | LtlFormula::Next(x) | LtlFormula::Always(x) | LtlFormula::Eventually(x) => {
                x.for_each_atom(f)
            }
            LtlFormula::And(a, b) | LtlFormula::Or(a, b) | LtlFormula::After(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Datasets referenced by auxiliary atoms, sorted and deduplicated.
    pub fn datasets(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.for_each_atom(&mut |a| {
            if let Atom::VarCmp(c) = a {
                if let Some(d) = c.var.dataset() {
                    out.push(d);
                }
            }
        });
        out.sort_unstable();
        out.dedup();
        out
    }
}
