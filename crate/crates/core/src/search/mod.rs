//! Constrained cost-optimal trip search.
//!
//! A multi-label A*: every label is a trajectory prefix ending at a node,
//! carrying its state variables and the residual of the constraint. Labels
//! whose residual can no longer be satisfied are pruned; labels at the same
//! node are compared by a dominance rule that only discards a label when
//! another one can replicate each of its completions at no greater cost.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::auxmetrics::AuxOverlay;
use crate::geodata::{great_circle_distance, LatLon, MapEdge, MapGraph, NodeIdx, Traversal, SERVICE_DAY_S};
use crate::ltl::{holds_at_end, progress_unchecked, specialize, Atom, LtlError, LtlFormula, StateVar};
use crate::mode::{Mode, ModeSet};
use crate::pcf::{accumulate, pcf, CoefficientProfile, FareConfig, StateVars, Step};

mod dominance;
mod itinerary;
mod state;

use dominance::{DominanceStore, Signature};
pub use itinerary::{merge_legs, Itinerary, Leg};
pub use state::{SearchState, Successor, TripStep};

/// Lat/lon endpoints snap to the nearest node within this distance.
pub const DEFAULT_SNAP_RADIUS_M: f64 = 500.0;

#[derive(Debug, Clone, PartialEq)]
pub enum Endpoint {
    Node(String),
    Coord(LatLon),
}

#[derive(Debug, Clone)]
pub struct PlanRequest {
    pub from: Endpoint,
    pub to: Endpoint,
    /// Departure, in seconds since service-day midnight.
    pub depart_at: u32,
    pub constraint: LtlFormula,
    pub profile: CoefficientProfile,
    pub allowed_modes: ModeSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Count waiting at transit stops as public-transit time, not only
    /// clock time.
    pub attribute_wait_to_public: bool,
    /// Give up after creating this many labels.
    pub max_labels: usize,
    pub snap_radius_m: f64,
    /// Keep the prefix of every expanded label in the report.
    pub record_expansions: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            attribute_wait_to_public: true,
            max_labels: 2_000_000,
            snap_radius_m: DEFAULT_SNAP_RADIUS_M,
            record_expansions: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("no node matches endpoint {0}")]
    UnknownEndpoint(String),
    #[error("origin and destination are the same node")]
    SameEndpoints,
    #[error("departure {0} s is outside the service day")]
    DepartureOutsideServiceDay(u32),
    #[error("constraint references dataset `{0}`, which is not active")]
    UnknownDataset(String),
    #[error("overlay `{0}` was built for a different graph")]
    OverlayMismatch(String),
    #[error("dataset `{0}` is active twice")]
    DuplicateDataset(String),
    #[error(transparent)]
    Constraint(#[from] LtlError),
    #[error("search gave up after {0} labels")]
    SearchLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Found(Itinerary),
    /// No trajectory satisfies the constraint: it is over-restrictive for
    /// this graph and departure.
    Infeasible,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub labels: usize,
    pub expanded: usize,
    pub pruned: usize,
    pub dominated: usize,
}

/// A label taken off the open list, with the estimate it was ranked by.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpandedLabel {
    pub steps: Vec<TripStep>,
    pub g: f64,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub outcome: PlanOutcome,
    pub stats: SearchStats,
    /// Filled only with [`SearchOptions::record_expansions`].
    pub expanded: Vec<ExpandedLabel>,
}

/// Plans a cost-minimal trip satisfying the request's constraint.
///
/// `overlays` are the active auxiliary datasets; each contributes its
/// aggregates to the state and its coefficient to the cost.
pub fn plan(
    graph: &MapGraph,
    overlays: &[&AuxOverlay],
    fares: &FareConfig,
    request: &PlanRequest,
    options: &SearchOptions,
) -> Result<PlanReport, PlanError> {
    Planner::new(graph, overlays, fares, request, options)?.run()
}

/// A validated request bound to its graph, ready to search.
#[derive(Debug)]
pub struct Planner<'a> {
    graph: &'a MapGraph,
    overlays: Vec<&'a AuxOverlay>,
    datasets: Vec<Arc<str>>,
    fares: FareConfig,
    profile: CoefficientProfile,
    constraint: LtlFormula,
    // The constraint with atoms over unusable modes folded away.
    start_residual: LtlFormula,
    allowed: ModeSet,
    from: NodeIdx,
    to: NodeIdx,
    depart_at: u32,
    options: SearchOptions,
    h_table: Vec<f64>,
    // Later arrivals at a node cannot reach the goal before the day ends.
    latest: Vec<Option<u32>>,
    // Dollars per second of extra waiting that an earlier arrival can cost.
    wait_rate: f64,
    signature: Signature,
}

impl<'a> Planner<'a> {
    pub fn new(
        graph: &'a MapGraph,
        overlays: &[&'a AuxOverlay],
        fares: &FareConfig,
        request: &PlanRequest,
        options: &SearchOptions,
    ) -> Result<Self, PlanError> {
        let from = resolve(graph, &request.from, options.snap_radius_m)?;
        let to = resolve(graph, &request.to, options.snap_radius_m)?;
        if from == to {
            return Err(PlanError::SameEndpoints);
        }
        if request.depart_at >= SERVICE_DAY_S {
            return Err(PlanError::DepartureOutsideServiceDay(request.depart_at));
        }
        if !request.constraint.is_progressable() {
            return Err(LtlError::UnsupportedProgression { position: None }.into());
        }
        let mut datasets: Vec<Arc<str>> = Vec::with_capacity(overlays.len());
        for o in overlays {
            if !o.is_for(graph) {
                return Err(PlanError::OverlayMismatch(o.dataset_name.clone()));
            }
            if datasets.iter().any(|d| **d == *o.dataset_name) {
                return Err(PlanError::DuplicateDataset(o.dataset_name.clone()));
            }
            datasets.push(Arc::from(o.dataset_name.as_str()));
        }
        for d in request.constraint.datasets() {
            if !datasets.iter().any(|x| &**x == d) {
                return Err(PlanError::UnknownDataset(d.into()));
            }
        }

        let h_table = heuristic_table(graph, to, &request.profile, request.allowed_modes);
        let latest = latest_useful_arrival(graph, to, request.allowed_modes);
        let usable = request.allowed_modes.intersect(graph.modes_present());
        let unused: ModeSet = Mode::ALL.into_iter().filter(|&m| !usable.contains(m)).collect();
        let start_residual = specialize(&request.constraint, &|a| frozen_atom(a, unused));
        let public_waits = options.attribute_wait_to_public && request.allowed_modes.contains(Mode::Public);
        let wait_rate = if public_waits {
            request.profile.beta_time * request.profile.alpha(Mode::Public) / 3600.0
        } else {
            0.0
        };
        let signature = Signature::new(&start_residual, &datasets, public_waits);
        Ok(Planner {
            graph,
            overlays: overlays.to_vec(),
            datasets,
            fares: *fares,
            profile: request.profile.clone(),
            constraint: request.constraint.clone(),
            start_residual,
            allowed: request.allowed_modes,
            from,
            to,
            depart_at: request.depart_at,
            options: *options,
            h_table,
            latest,
            wait_rate,
            signature,
        })
    }

    pub fn origin_node(&self) -> NodeIdx {
        self.from
    }

    pub fn goal_node(&self) -> NodeIdx {
        self.to
    }

    /// Admissible estimate of the cost still to pay from `node` to the goal.
    pub fn heuristic(&self, node: NodeIdx) -> f64 {
        self.h_table[node.index()]
    }

    fn scores_at(&self, node: NodeIdx) -> Vec<f64> {
        self.overlays.iter().map(|o| o.score(node)).collect()
    }

    /// The label at the origin before any move.
    pub fn origin(&self) -> SearchState {
        let here = self.scores_at(self.from);
        let vars = StateVars::at_origin(&self.datasets, &here).expect("one score per dataset");
        let g = pcf(&vars, &self.profile);
        SearchState {
            node: self.from,
            arrival_mode: None,
            on_line: None,
            vars,
            here,
            residual: self.start_residual.clone(),
            g,
        }
    }

    /// Whether a trip may end at `state`.
    pub fn is_goal(&self, state: &SearchState) -> bool {
        state.node == self.to && holds_at_end(&state.residual, state)
    }

    /// Successors of `state` along every allowed outgoing edge, minus those
    /// from which the constraint can no longer be met.
    pub fn expand(&self, state: &SearchState) -> Vec<Successor> {
        let mut out = Vec::new();
        self.expand_into(state, &mut out, &mut 0);
        out
    }

    fn expand_into(&self, state: &SearchState, out: &mut Vec<Successor>, pruned: &mut usize) {
        let next = progress_unchecked(&state.residual, state, false).residual;
        if next == LtlFormula::False {
            return;
        }
        let now = self.depart_at + state.vars.clock_s;
        for edge in self.graph.out_edges(state.node) {
            if !self.allowed.contains(edge.mode) || self.latest[edge.to.index()].is_none() {
                continue;
            }
            let (line, depart, travel, fare) = match edge.traversal {
                Traversal::Fixed { duration_s } => {
                    let mut fare = self.fares.distance_fare_cents(edge.mode, edge.length_m);
                    if edge.mode == Mode::Taxi && state.arrival_mode != Some(Mode::Taxi) {
                        fare += self.fares.taxi_base_cents();
                    }
                    (None, now, duration_s, fare)
                }
                Traversal::Scheduled { line, stop_index } => {
                    let l = self.graph.line(line);
                    let Some(depart) = l.next_departure(stop_index as usize, now) else {
                        continue;
                    };
                    let fare = if state.on_line == Some(line) { 0 } else { l.boarding_fare_cents };
                    (Some(line), depart, l.leg_durations[stop_index as usize], fare)
                }
            };
            let arrive = depart + travel;
            if self.latest[edge.to.index()].is_none_or(|t| arrive > t) {
                continue;
            }
            let here = self.scores_at(edge.to);
            let vars = accumulate(
                &state.vars,
                &Step {
                    mode: edge.mode,
                    travel_s: i64::from(travel),
                    wait_s: i64::from(depart - now),
                    wait_counts_as_travel: self.options.attribute_wait_to_public,
                    fare_cents: fare,
                    node_scores: &here,
                },
            )
            .expect("search steps are nonnegative");
            let g = pcf(&vars, &self.profile);
            let child = SearchState {
                node: edge.to,
                arrival_mode: Some(edge.mode),
                on_line: line,
                vars,
                here,
                residual: next.clone(),
                g,
            };
            if doomed(&child) {
                *pruned += 1;
                continue;
            }
            out.push(Successor {
                state: child,
                step: TripStep {
                    from: state.node,
                    to: edge.to,
                    mode: edge.mode,
                    line,
                    ready_s: now,
                    depart_s: depart,
                    arrive_s: arrive,
                    fare_cents: fare,
                    length_m: edge.length_m,
                },
            });
        }
    }

    pub fn run(&self) -> Result<PlanReport, PlanError> {
        let mut stats = SearchStats::default();
        let mut expanded = Vec::new();
        let mut labels: Vec<Label> = Vec::new();
        let mut open = BinaryHeap::new();
        let mut store = DominanceStore::default();

        let origin = self.origin();
        if doomed(&origin) {
            return Ok(PlanReport {
                outcome: PlanOutcome::Infeasible,
                stats,
                expanded,
            });
        }
        self.push(&mut labels, &mut open, &mut store, &mut stats, origin, None, None)?;

        let mut successors = Vec::new();
        while let Some(entry) = open.pop() {
            let id = entry.label as usize;
            if !labels[id].alive {
                continue;
            }
            stats.expanded += 1;
            if self.options.record_expansions {
                expanded.push(ExpandedLabel {
                    steps: path_of(&labels, id),
                    g: labels[id].state.g,
                    h: labels[id].h,
                });
            }
            if self.is_goal(&labels[id].state) {
                let itinerary = Itinerary::build(self, path_of(&labels, id), &labels[id].state);
                return Ok(PlanReport {
                    outcome: PlanOutcome::Found(itinerary),
                    stats,
                    expanded,
                });
            }
            successors.clear();
            self.expand_into(&labels[id].state, &mut successors, &mut stats.pruned);
            for s in successors.drain(..) {
                self.push(&mut labels, &mut open, &mut store, &mut stats, s.state, Some(id as u32), Some(s.step))?;
            }
        }
        Ok(PlanReport {
            outcome: PlanOutcome::Infeasible,
            stats,
            expanded,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &self,
        labels: &mut Vec<Label>,
        open: &mut BinaryHeap<OpenEntry>,
        store: &mut DominanceStore,
        stats: &mut SearchStats,
        state: SearchState,
        parent: Option<u32>,
        step: Option<TripStep>,
    ) -> Result<(), PlanError> {
        let key = self.signature.key(&state);
        let id = labels.len() as u32;
        let rate = self.wait_rate;
        let sig = &self.signature;
        let dominates = |a: &SearchState, b: &SearchState| {
            let (ca, cb) = (a.vars.clock_s, b.vars.clock_s);
            ca <= cb && a.g + rate * f64::from(cb - ca) <= b.g + 1e-9 && sig.no_worse(a, b)
        };

        let bucket = store.bucket(key);
        bucket.retain(|&l| labels[l as usize].alive);
        if bucket.iter().any(|&l| dominates(&labels[l as usize].state, &state)) {
            stats.dominated += 1;
            return Ok(());
        }
        bucket.retain(|&l| {
            let beaten = dominates(&state, &labels[l as usize].state);
            if beaten {
                labels[l as usize].alive = false;
            }
            !beaten
        });
        bucket.push(id);

        if labels.len() >= self.options.max_labels {
            return Err(PlanError::SearchLimit(labels.len()));
        }
        let h = self.heuristic(state.node);
        open.push(OpenEntry {
            f: state.g + h,
            g: state.g,
            rank: self.graph.id_rank(state.node),
            mode: state.arrival_mode.map_or(0, |m| m.index() as u8 + 1),
            label: id,
        });
        labels.push(Label {
            state,
            parent,
            step,
            h,
            alive: true,
        });
        stats.labels += 1;
        Ok(())
    }
}

/// True when no trajectory through `state` can satisfy its residual: ending
/// here fails, and so does every continuation.
fn doomed(state: &SearchState) -> bool {
    !holds_at_end(&state.residual, state)
        && progress_unchecked(&state.residual, state, false).residual == LtlFormula::False
}

fn resolve(graph: &MapGraph, endpoint: &Endpoint, snap_radius_m: f64) -> Result<NodeIdx, PlanError> {
    match endpoint {
        Endpoint::Node(id) => graph
            .node_index(id)
            .ok_or_else(|| PlanError::UnknownEndpoint(id.clone())),
        Endpoint::Coord(pos) => graph
            .nearest_node(*pos, snap_radius_m)
            .map(|(idx, _)| idx)
            .ok_or_else(|| PlanError::UnknownEndpoint(alloc::format!("{},{}", pos.lat, pos.lon))),
    }
}

/// Value of `atom` at every state of any trip that never uses `unused`
/// modes, if that is fixed.
fn frozen_atom(atom: &Atom, unused: ModeSet) -> Option<bool> {
    match atom {
        Atom::ModeIs(m) => unused.contains(*m).then_some(false),
        Atom::VarCmp(c) => match c.var {
            StateVar::Time(m) | StateVar::Fare(m) if unused.contains(m) => {
                Some(c.op.holds_real(0.0, c.bound.as_f64()))
            }
            _ => None,
        },
    }
}

/// Latest clock time at each node from which the goal can still be reached
/// within the service day over allowed edges; `None` where it cannot.
fn latest_useful_arrival(graph: &MapGraph, goal: NodeIdx, allowed: ModeSet) -> Vec<Option<u32>> {
    let mut incoming: Vec<Vec<&MapEdge>> = alloc::vec![Vec::new(); graph.node_count()];
    for e in graph.edges().iter().filter(|e| allowed.contains(e.mode)) {
        incoming[e.to.index()].push(e);
    }
    let mut latest = alloc::vec![None; graph.node_count()];
    latest[goal.index()] = Some(SERVICE_DAY_S);
    let mut heap = BinaryHeap::from([(SERVICE_DAY_S, goal)]);
    while let Some((t, n)) = heap.pop() {
        if latest[n.index()] != Some(t) {
            continue;
        }
        for e in &incoming[n.index()] {
            let before = match e.traversal {
                Traversal::Fixed { duration_s } => t.checked_sub(duration_s),
                Traversal::Scheduled { line, stop_index } => {
                    let l = graph.line(line);
                    let k = stop_index as usize;
                    let (offset, leg) = (l.offset(k), l.leg_durations[k]);
                    let n = l.departures.partition_point(|&d| d + offset + leg <= t);
                    n.checked_sub(1).map(|i| l.departures[i] + offset)
                }
            };
            if let Some(b) = before {
                if latest[e.from.index()].is_none_or(|cur| b > cur) {
                    latest[e.from.index()] = Some(b);
                    heap.push((b, e.from));
                }
            }
        }
    }
    latest
}

/// Straight-line distance to the goal, priced at the cheapest
/// time-per-meter among the allowed modes that exist in the graph. Fares and
/// auxiliary costs are nonnegative and bounded below by zero.
fn heuristic_table(graph: &MapGraph, goal: NodeIdx, profile: &CoefficientProfile, allowed: ModeSet) -> Vec<f64> {
    let speeds = graph.heuristic_speeds();
    let per_meter = allowed
        .intersect(graph.modes_present())
        .iter()
        .map(|m| profile.alpha(m) / speeds.get(m))
        .fold(f64::INFINITY, f64::min);
    if !per_meter.is_finite() {
        return alloc::vec![0.0; graph.node_count()];
    }
    let goal_pos = graph.node(goal).pos;
    // Shaved slightly so rounding in the distance sums cannot overshoot.
    let scale = profile.beta_time * per_meter / 3600.0 * (1.0 - 1e-9);
    graph
        .nodes()
        .iter()
        .map(|n| (scale * great_circle_distance(n.pos, goal_pos)).max(0.0))
        .collect()
}

#[derive(Debug)]
struct Label {
    state: SearchState,
    parent: Option<u32>,
    step: Option<TripStep>,
    h: f64,
    alive: bool,
}

fn path_of(labels: &[Label], mut id: usize) -> Vec<TripStep> {
    let mut steps = Vec::new();
    while let Some(step) = labels[id].step {
        steps.push(step);
        id = labels[id].parent.expect("labels with a step have a parent") as usize;
    }
    steps.reverse();
    steps
}

/// Open-list entry; the heap pops the smallest f, then the largest g, then
/// the smallest node id, arrival mode and creation order.
#[derive(Debug)]
struct OpenEntry {
    f: f64,
    g: f64,
    rank: u32,
    mode: u8,
    label: u32,
}

impl Ord for OpenEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.rank.cmp(&self.rank))
            .then(other.mode.cmp(&self.mode))
            .then(other.label.cmp(&self.label))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}
