//! Brute-force route enumeration with its own implementation of the
//! movement rules (schedules, fares, waiting, the service-day cutoff).
//! Constraint satisfaction is decided on whole trajectories with the direct
//! evaluator, never by progression.

use std::sync::Arc;

use tripplan_core::geodata::{LineIdx, MapEdge, MapGraph, NodeIdx, Traversal, SERVICE_DAY_S};
use tripplan_core::ltl::{eval, StateSnapshot};
use tripplan_core::mode::Mode;
use tripplan_core::pcf::{accumulate, pcf, StateVars, Step};
use tripplan_core::search::{Endpoint, Itinerary, TripStep};

use crate::gen::Instance;

/// A trajectory being extended.
#[derive(Debug, Clone)]
pub struct Walk {
    pub node: NodeIdx,
    /// Seconds since service-day midnight.
    pub now: u32,
    pub arrival: Option<Mode>,
    pub riding: Option<LineIdx>,
    pub vars: StateVars,
    pub trajectory: Vec<StateSnapshot>,
    pub moves: Vec<TripStep>,
}

pub struct World<'a> {
    pub inst: &'a Instance,
    pub graph: &'a MapGraph,
    pub from: NodeIdx,
    pub to: NodeIdx,
    datasets: Vec<Arc<str>>,
}

fn node_of(graph: &MapGraph, e: &Endpoint) -> NodeIdx {
    match e {
        Endpoint::Node(id) => graph.node_index(id).expect("instance endpoints exist"),
        Endpoint::Coord(_) => panic!("oracle instances use node endpoints"),
    }
}

impl<'a> World<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        World {
            inst,
            graph: &inst.graph,
            from: node_of(&inst.graph, &inst.request.from),
            to: node_of(&inst.graph, &inst.request.to),
            datasets: inst.overlays.iter().map(|o| Arc::from(o.dataset_name.as_str())).collect(),
        }
    }

    fn scores(&self, node: NodeIdx) -> Vec<f64> {
        self.inst.overlays.iter().map(|o| o.scores()[node.index()]).collect()
    }

    pub fn start(&self) -> Walk {
        let here = self.scores(self.from);
        let vars = StateVars::at_origin(&self.datasets, &here).unwrap();
        Walk {
            node: self.from,
            now: self.inst.request.depart_at,
            arrival: None,
            riding: None,
            trajectory: vec![StateSnapshot {
                mode: None,
                vars: vars.clone(),
                aux_here: here,
            }],
            vars,
            moves: Vec::new(),
        }
    }

    pub fn cost(&self, w: &Walk) -> f64 {
        pcf(&w.vars, &self.inst.request.profile)
    }

    pub fn satisfied(&self, w: &Walk) -> bool {
        w.node == self.to && eval(&self.inst.request.constraint, &w.trajectory)
    }

    /// The walk extended along `edge`, if the edge can be taken now.
    pub fn take(&self, w: &Walk, edge: &MapEdge) -> Option<Walk> {
        if !self.inst.request.allowed_modes.contains(edge.mode) {
            return None;
        }
        let fares = &self.inst.fares;
        let per_km = |usd: f64| (usd * edge.length_m / 1000.0 * 100.0).round() as i64;
        let (line, depart, travel, fare) = match edge.traversal {
            Traversal::Fixed { duration_s } => {
                let fare = match edge.mode {
                    Mode::Car => per_km(fares.car_per_km_usd),
                    Mode::Taxi => {
                        let base = if w.arrival == Some(Mode::Taxi) {
                            0
                        } else {
                            (fares.taxi_base_usd * 100.0).round() as i64
                        };
                        per_km(fares.taxi_per_km_usd) + base
                    }
                    _ => 0,
                };
                (None, w.now, duration_s, fare)
            }
            Traversal::Scheduled { line, stop_index } => {
                let l = self.graph.line(line);
                let k = stop_index as usize;
                let offset: u32 = l.leg_durations[..k].iter().sum();
                let depart = l.departures.iter().map(|d| d + offset).find(|&t| t >= w.now)?;
                let fare = if w.riding == Some(line) { 0 } else { l.boarding_fare_cents };
                (Some(line), depart, l.leg_durations[k], fare)
            }
        };
        let arrive = depart + travel;
        if arrive > SERVICE_DAY_S {
            return None;
        }
        let here = self.scores(edge.to);
        let vars = accumulate(
            &w.vars,
            &Step {
                mode: edge.mode,
                travel_s: i64::from(travel),
                wait_s: i64::from(depart - w.now),
                wait_counts_as_travel: self.inst.options.attribute_wait_to_public,
                fare_cents: fare,
                node_scores: &here,
            },
        )
        .unwrap();
        let mut next = w.clone();
        next.moves.push(TripStep {
            from: w.node,
            to: edge.to,
            mode: edge.mode,
            line,
            ready_s: w.now,
            depart_s: depart,
            arrive_s: arrive,
            fare_cents: fare,
            length_m: edge.length_m,
        });
        next.trajectory.push(StateSnapshot {
            mode: Some(edge.mode),
            vars: vars.clone(),
            aux_here: here,
        });
        next.node = edge.to;
        next.now = arrive;
        next.arrival = Some(edge.mode);
        next.riding = line;
        next.vars = vars;
        Some(next)
    }

    pub fn successors(&self, w: &Walk) -> Vec<Walk> {
        self.graph
            .edges()
            .iter()
            .filter(|e| e.from == w.node)
            .filter_map(|e| self.take(w, e))
            .collect()
    }

    /// Replays recorded steps; `None` if one of them is not a legal move.
    pub fn replay(&self, steps: &[TripStep]) -> Option<Walk> {
        let mut w = self.start();
        for s in steps {
            w = self
                .graph
                .edges()
                .iter()
                .filter(|e| e.from == s.from && e.to == s.to && e.mode == s.mode)
                .filter_map(|e| self.take(&w, e))
                .find(|n| n.moves.last() == Some(s))?;
        }
        Some(w)
    }
}

/// Cheapest satisfying trajectory among those costing at most `bound`.
/// Every move costs something, so the bound makes the enumeration finite.
pub fn optimum_within(inst: &Instance, bound: f64) -> Option<(f64, Walk)> {
    let world = World::new(inst);
    let mut best: Option<(f64, Walk)> = None;
    let limit = bound + 1e-9 * bound.abs().max(1.0);
    let mut stack = vec![world.start()];
    while let Some(w) = stack.pop() {
        let c = world.cost(&w);
        if c > limit {
            continue;
        }
        if world.satisfied(&w) && best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, w.clone()));
        }
        stack.extend(world.successors(&w));
    }
    best
}

/// Some satisfying trajectory that visits no node more than `max_visits`
/// times.
pub fn any_within_visits(inst: &Instance, max_visits: u8) -> Option<Walk> {
    let world = World::new(inst);
    let mut visits = vec![0u8; inst.graph.node_count()];
    visits[world.from.index()] = 1;
    search_visits(&world, world.start(), &mut visits, max_visits)
}

fn search_visits(world: &World<'_>, w: Walk, visits: &mut [u8], max_visits: u8) -> Option<Walk> {
    if world.satisfied(&w) {
        return Some(w);
    }
    for next in world.successors(&w) {
        let v = next.node.index();
        if visits[v] >= max_visits {
            continue;
        }
        visits[v] += 1;
        let found = search_visits(world, next, visits, max_visits);
        visits[v] -= 1;
        if found.is_some() {
            return found;
        }
    }
    None
}

/// Checks that no way of reaching the goal from the end of `prefix` costs
/// less than `g + h` in total, constraint or not.
pub fn check_admissible(inst: &Instance, prefix: &[TripStep], g: f64, h: f64) -> Result<(), String> {
    let world = World::new(inst);
    let start = world.replay(prefix).ok_or("expanded prefix is not a legal trajectory")?;
    let replayed = world.cost(&start);
    if (replayed - g).abs() > 1e-9 * g.abs().max(1.0) {
        return Err(format!("label cost {g} but prefix costs {replayed}"));
    }
    let limit = g + h - 1e-9 * (g + h).abs().max(1.0);
    let mut stack = vec![start];
    while let Some(w) = stack.pop() {
        let c = world.cost(&w);
        if c >= limit {
            continue;
        }
        if w.node == world.to {
            return Err(format!(
                "estimate {h} exceeds remaining cost {} at {}",
                c - g,
                inst.graph.node(prefix.last().map_or(world.from, |s| s.to)).id
            ));
        }
        stack.extend(world.successors(&w));
    }
    Ok(())
}

/// Validates a planner itinerary against the movement rules, the
/// constraint and its own totals.
pub fn check_itinerary(inst: &Instance, it: &Itinerary) -> Result<(), String> {
    let world = World::new(inst);
    let w = world.replay(&it.steps).ok_or("itinerary contains an illegal move")?;
    if w.node != world.to {
        return Err("itinerary does not end at the destination".into());
    }
    if w.vars != it.totals {
        return Err(format!("totals {:?} differ from replay {:?}", it.totals, w.vars));
    }
    if !eval(&inst.request.constraint, &w.trajectory) {
        return Err(format!("trajectory violates {}", inst.request.constraint));
    }
    let cost = world.cost(&w);
    if (cost - it.total_cost).abs() >= 0.01 {
        return Err(format!("reported cost {} but trajectory costs {cost}", it.total_cost));
    }
    if it.arrive_at != w.now {
        return Err("arrival time differs from replay".into());
    }
    let mut time = [0u32; Mode::COUNT];
    let mut fare = [0i64; Mode::COUNT];
    let mut at = (world.from, inst.request.depart_at);
    for leg in &it.legs {
        if (leg.nodes[0], leg.start_s) != at {
            return Err("legs are not contiguous".into());
        }
        at = (*leg.nodes.last().unwrap(), leg.end_s);
        time[leg.mode.index()] += leg.time_s;
        fare[leg.mode.index()] += leg.fare_cents;
    }
    if time != it.totals.time_s || fare != it.totals.fare_cents {
        return Err("legs do not add up to the totals".into());
    }
    Ok(())
}
