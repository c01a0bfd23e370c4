use alloc::vec::Vec;

use crate::geodata::{LineIdx, NodeIdx};
use crate::ltl::{AuxAgg, LtlFormula, Valuation};
use crate::mode::Mode;
use crate::pcf::StateVars;

/// End of a trajectory prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    pub node: NodeIdx,
    /// `None` at the origin.
    pub arrival_mode: Option<Mode>,
    /// Transit line ridden into `node`, if any.
    pub on_line: Option<LineIdx>,
    pub vars: StateVars,
    /// Scores of `node`, one per active dataset.
    pub here: Vec<f64>,
    /// What the trajectory from this state on must still satisfy.
    pub residual: LtlFormula,
    /// Cost of the prefix in dollars.
    pub g: f64,
}

impl Valuation for SearchState {
    fn mode(&self) -> Option<Mode> {
        self.arrival_mode
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
            .and_then(|i| self.here.get(i).copied())
            .unwrap_or(0.0)
    }
}

/// One edge traversal of a trip. Times are seconds since service-day
/// midnight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripStep {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub mode: Mode,
    pub line: Option<LineIdx>,
    /// When the traveller is ready to leave `from`.
    pub ready_s: u32,
    /// When the move starts; later than `ready_s` only for transit waits.
    pub depart_s: u32,
    pub arrive_s: u32,
    pub fare_cents: i64,
    pub length_m: f64,
}

impl TripStep {
    pub fn wait_s(&self) -> u32 {
        self.depart_s - self.ready_s
    }

    pub fn travel_s(&self) -> u32 {
        self.arrive_s - self.depart_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Successor {
    pub state: SearchState,
    pub step: TripStep,
}
