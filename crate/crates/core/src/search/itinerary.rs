use alloc::vec::Vec;

use super::state::TripStep;
use super::{Planner, SearchState};
use crate::geodata::{LineIdx, NodeIdx};
use crate::ltl::{LtlFormula, StateSnapshot};
use crate::mode::Mode;
use crate::pcf::{accumulate, pcf, to_cents, StateVars, Step};

/// Maximal run of steps in one mode (and, for transit, one continuous ride
/// on one line).
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub mode: Mode,
    pub line: Option<LineIdx>,
    /// Visited nodes, both ends included.
    pub nodes: Vec<NodeIdx>,
    /// Arrival at the first node; equals the previous leg's end.
    pub start_s: u32,
    pub end_s: u32,
    /// Waiting before boarding, included in `start_s..end_s`.
    pub wait_s: u32,
    /// Seconds this leg adds to the mode's travel time.
    pub time_s: u32,
    pub fare_cents: i64,
    pub distance_m: f64,
}

impl Leg {
    pub fn duration_s(&self) -> u32 {
        self.end_s - self.start_s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Itinerary {
    pub origin: NodeIdx,
    pub destination: NodeIdx,
    pub depart_at: u32,
    pub arrive_at: u32,
    pub steps: Vec<TripStep>,
    pub legs: Vec<Leg>,
    pub totals: StateVars,
    /// Cost in dollars.
    pub total_cost: f64,
    /// The constraint the trip satisfies.
    pub constraint: LtlFormula,
    /// States along the trip, starting at the origin.
    pub trajectory: Vec<StateSnapshot>,
}

impl Itinerary {
    pub fn total_cost_cents(&self) -> i64 {
        to_cents(self.total_cost)
    }

    pub(super) fn build(planner: &Planner<'_>, steps: Vec<TripStep>, goal: &SearchState) -> Self {
        let attributed = planner.options.attribute_wait_to_public;
        let origin = planner.from;
        let here = planner.scores_at(origin);
        let mut vars = StateVars::at_origin(&planner.datasets, &here).expect("one score per dataset");
        let mut trajectory = Vec::with_capacity(steps.len() + 1);
        trajectory.push(StateSnapshot {
            mode: None,
            vars: vars.clone(),
            aux_here: here,
        });
        for s in &steps {
            let here = planner.scores_at(s.to);
            vars = accumulate(
                &vars,
                &Step {
                    mode: s.mode,
                    travel_s: i64::from(s.travel_s()),
                    wait_s: i64::from(s.wait_s()),
                    wait_counts_as_travel: attributed,
                    fare_cents: s.fare_cents,
                    node_scores: &here,
                },
            )
            .expect("search steps are nonnegative");
            trajectory.push(StateSnapshot {
                mode: Some(s.mode),
                vars: vars.clone(),
                aux_here: here,
            });
        }
        debug_assert_eq!(vars, goal.vars, "replayed totals match the search");

        Itinerary {
            origin,
            destination: steps.last().map_or(origin, |s| s.to),
            depart_at: planner.depart_at,
            arrive_at: steps.last().map_or(planner.depart_at, |s| s.arrive_s),
            legs: merge_legs(&steps, attributed),
            total_cost: pcf(&vars, &planner.profile),
            totals: vars,
            steps,
            constraint: planner.constraint.clone(),
            trajectory,
        }
    }
}

/// Groups consecutive steps of the same mode into legs. Transit steps join a
/// leg only while riding on without getting off.
pub fn merge_legs(steps: &[TripStep], wait_counts_as_travel: bool) -> Vec<Leg> {
    let mut legs: Vec<Leg> = Vec::new();
    for s in steps {
        let time = s.travel_s() + if wait_counts_as_travel { s.wait_s() } else { 0 };
        if let Some(leg) = legs.last_mut() {
            let continues = leg.mode == s.mode && (s.mode != Mode::Public || (leg.line == s.line && s.wait_s() == 0));
            if continues {
                leg.nodes.push(s.to);
                leg.end_s = s.arrive_s;
                leg.wait_s += s.wait_s();
                leg.time_s += time;
                leg.fare_cents += s.fare_cents;
                leg.distance_m += s.length_m;
                continue;
            }
        }
        legs.push(Leg {
            mode: s.mode,
            line: s.line,
            nodes: alloc::vec![s.from, s.to],
            start_s: s.ready_s,
            end_s: s.arrive_s,
            wait_s: s.wait_s(),
            time_s: time,
            fare_cents: s.fare_cents,
            distance_m: s.length_m,
        });
    }
    legs
}
