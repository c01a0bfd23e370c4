//! Random formulas, trajectories and planning instances.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use tripplan_core::auxmetrics::{build_overlay, AuxDataset, AuxOverlay};
use tripplan_core::geodata::{load_graph, EdgeRecord, LatLon, LineRecord, MapGraph, ModeSpeeds, NodeKind, NodeRecord};
use tripplan_core::ltl::{parse, Atom, AuxAgg, CmpOp, LtlFormula, StateSnapshot};
use tripplan_core::mode::{Mode, ModeSet};
use tripplan_core::pcf::{accumulate, CoefficientProfile, FareConfig, StateVars, Step};
use tripplan_core::search::{Endpoint, PlanRequest, SearchOptions};

pub const DATASET: &str = "crime";

const OPS: [CmpOp; 5] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt];

/// An atom over any state variable, with bounds near the values
/// [`random_trajectory`] produces.
pub fn random_atom<R: Rng>(rng: &mut R) -> Atom {
    let mode = *Mode::ALL.choose(rng).unwrap();
    let op = *OPS.choose(rng).unwrap();
    match rng.gen_range(0..7) {
        0 | 1 => Atom::ModeIs(mode),
        2 => Atom::time(mode, op, rng.gen_range(0..5) * 300),
        3 => Atom::fare(mode, op, rng.gen_range(0..4) * 200),
        4 => Atom::clock(op, rng.gen_range(0..6) * 600),
        5 => {
            let agg = *[AuxAgg::Sum, AuxAgg::Max, AuxAgg::Min, AuxAgg::Avg].choose(rng).unwrap();
            Atom::aux(DATASET, agg, op, f64::from(rng.gen_range(0..8)) * 0.5)
        }
        _ => Atom::aux_here(DATASET, op, f64::from(rng.gen_range(0..5)) * 0.5),
    }
}

/// A formula without temporal operators, of depth at most `depth`.
pub fn random_state_formula<R: Rng>(rng: &mut R, depth: usize) -> LtlFormula {
    if depth <= 1 || rng.gen_bool(0.35) {
        return leaf(rng);
    }
    match rng.gen_range(0..3) {
        0 => LtlFormula::not(random_state_formula(rng, depth - 1)),
        1 => LtlFormula::and(random_state_formula(rng, depth - 1), random_state_formula(rng, depth - 1)),
        _ => LtlFormula::or(random_state_formula(rng, depth - 1), random_state_formula(rng, depth - 1)),
    }
}

fn leaf<R: Rng>(rng: &mut R) -> LtlFormula {
    match rng.gen_range(0..12) {
        0 => LtlFormula::True,
        1 => LtlFormula::False,
        _ => LtlFormula::atom(random_atom(rng)),
    }
}

/// A formula of depth at most `depth` over the full grammar; `AFTER`
/// triggers are state formulas.
pub fn random_formula<R: Rng>(rng: &mut R, depth: usize) -> LtlFormula {
    if depth <= 1 || rng.gen_bool(0.2) {
        return leaf(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..8) {
        0 => LtlFormula::not(random_formula(rng, d)),
        1 => LtlFormula::next(random_formula(rng, d)),
        2 => LtlFormula::always(random_formula(rng, d)),
        3 => LtlFormula::eventually(random_formula(rng, d)),
        4 => LtlFormula::and(random_formula(rng, d), random_formula(rng, d)),
        5 => LtlFormula::or(random_formula(rng, d), random_formula(rng, d)),
        _ => LtlFormula::after(random_state_formula(rng, d), random_formula(rng, d)),
    }
}

/// A trajectory of `len` states built by accumulating random steps, with
/// one auxiliary dataset.
pub fn random_trajectory<R: Rng>(rng: &mut R, len: usize) -> Vec<StateSnapshot> {
    assert!(len >= 1);
    let datasets: Vec<Arc<str>> = vec![Arc::from(DATASET)];
    let score = |rng: &mut R| f64::from(rng.gen_range(0..5)) * 0.5;
    let here = vec![score(rng)];
    let mut vars = StateVars::at_origin(&datasets, &here).unwrap();
    let mut out = vec![StateSnapshot {
        mode: None,
        vars: vars.clone(),
        aux_here: here,
    }];
    for _ in 1..len {
        let mode = *Mode::ALL.choose(rng).unwrap();
        let here = vec![score(rng)];
        vars = accumulate(
            &vars,
            &Step {
                mode,
                travel_s: rng.gen_range(0..4) * 300,
                wait_s: if mode == Mode::Public { rng.gen_range(0..3) * 120 } else { 0 },
                wait_counts_as_travel: true,
                fare_cents: if mode.is_fare_free() { 0 } else { rng.gen_range(0..3) * 200 },
                node_scores: &here,
            },
        )
        .unwrap();
        out.push(StateSnapshot {
            mode: Some(mode),
            vars: vars.clone(),
            aux_here: here,
        });
    }
    out
}

/// Constraints drawn on by randomized planning instances.
pub const CONSTRAINT_POOL: [&str; 8] = [
    "true",
    "(mode=bike | mode=public) AFTER G(!(mode=car))",
    "F(time(bike) >= 300) & G(time(bike) <= 900)",
    "G(!(mode=car))",
    "G(aux_here(crime) <= 1.5)",
    "F(mode=public) | G(fare(taxi) <= 5.00)",
    "G(clock <= 2400)",
    "G(aux(crime,avg) <= 1.0) & F(time(walk) >= 120)",
];

/// A self-contained planning problem.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: MapGraph,
    pub overlays: Vec<AuxOverlay>,
    pub fares: FareConfig,
    pub request: PlanRequest,
    pub options: SearchOptions,
}

impl Instance {
    pub fn overlay_refs(&self) -> Vec<&AuxOverlay> {
        self.overlays.iter().collect()
    }
}

const ORIGIN: LatLon = LatLon::new(37.77, -122.42);
const M_PER_DEG_LAT: f64 = 111_195.0;

fn offset(north_m: f64, east_m: f64) -> LatLon {
    LatLon::new(
        ORIGIN.lat + north_m / M_PER_DEG_LAT,
        ORIGIN.lon + east_m / (M_PER_DEG_LAT * ORIGIN.lat.to_radians().cos()),
    )
}

/// Typical traversal speed per street mode in m/s.
fn base_speed(mode: Mode) -> f64 {
    match mode {
        Mode::Walk => 1.25,
        Mode::Bike => 4.5,
        _ => 12.0,
    }
}

/// A random instance with at most `max_nodes` nodes, three modes and two
/// transit lines, and a constraint from [`CONSTRAINT_POOL`].
pub fn random_instance<R: Rng>(rng: &mut R, max_nodes: usize) -> Instance {
    let n = rng.gen_range(3..=max_nodes.max(3));
    let positions: Vec<LatLon> = (0..n)
        .map(|_| offset(rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0)))
        .collect();
    let ids: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
    let nodes: Vec<NodeRecord> = ids
        .iter()
        .zip(&positions)
        .map(|(id, p)| NodeRecord {
            id: id.clone(),
            lat: p.lat,
            lon: p.lon,
            kind: NodeKind::StreetCorner,
        })
        .collect();

    let mut modes: Vec<Mode> = Mode::ALL.to_vec();
    modes.shuffle(rng);
    modes.truncate(rng.gen_range(1..=3));
    let street: Vec<Mode> = modes.iter().copied().filter(|&m| m != Mode::Public).collect();

    let distance = |a: usize, b: usize| tripplan_core::geodata::great_circle_distance(positions[a], positions[b]);
    let mut edges = Vec::new();
    if !street.is_empty() {
        for from in 0..n {
            for _ in 0..rng.gen_range(1..=2) {
                let to = (from + rng.gen_range(1..n)) % n;
                let mode = *street.choose(rng).unwrap();
                let length = distance(from, to) * rng.gen_range(1.0..1.4) + 10.0;
                let speed = base_speed(mode) * rng.gen_range(0.6..1.0);
                edges.push(EdgeRecord {
                    from: ids[from].clone(),
                    to: ids[to].clone(),
                    mode,
                    length_m: length,
                    duration_s: Some((length / speed).ceil().max(1.0) as u32),
                });
            }
        }
    }

    let depart_at = 8 * 3600;
    let mut lines = Vec::new();
    if modes.contains(&Mode::Public) {
        let mut served = std::collections::BTreeSet::new();
        for l in 0..rng.gen_range(1..=2) {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            order.truncate(rng.gen_range(2..=4.min(n)));
            let legs: Vec<u32> = order.windows(2).map(|w| (distance(w[0], w[1]) / 10.0) as u32 + 30).collect();
            let mut departures: Vec<u32> = (0..rng.gen_range(2..=4))
                .map(|_| depart_at + rng.gen_range(0..40) * 60)
                .collect();
            departures.sort_unstable();
            departures.dedup();
            for w in order.windows(2) {
                if served.insert((w[0], w[1])) {
                    edges.push(EdgeRecord {
                        from: ids[w[0]].clone(),
                        to: ids[w[1]].clone(),
                        mode: Mode::Public,
                        length_m: distance(w[0], w[1]) * 1.1 + 10.0,
                        duration_s: None,
                    });
                }
            }
            lines.push(LineRecord {
                id: format!("L{l}"),
                stops: order.iter().map(|&i| ids[i].clone()).collect(),
                departures_s: departures,
                leg_durations_s: legs,
                boarding_fare_usd: f64::from(rng.gen_range(1..=3)) * 1.25,
            });
        }
    }
    let graph = load_graph(&nodes, &edges, &lines, ModeSpeeds::default()).expect("generated graphs are valid");

    let points: Vec<LatLon> = (0..rng.gen_range(3..=15))
        .map(|_| offset(rng.gen_range(0.0..2500.0), rng.gen_range(0.0..2500.0)))
        .collect();
    let dataset = AuxDataset::new(DATASET, DATASET, points, 500.0).unwrap();
    let overlay = build_overlay(&graph, &dataset, rng.gen_range(300.0..900.0)).unwrap();

    let weights = [0.25, 0.5, 1.0, 2.0, 3.0];
    let mut profile = CoefficientProfile::uniform(f64::from(rng.gen_range(5..=30)));
    for m in Mode::ALL {
        profile.alpha[m.index()] = *weights.choose(rng).unwrap();
    }
    profile
        .beta_aux
        .insert(DATASET.into(), *[0.0, 0.25, 1.0].choose(rng).unwrap());

    let from = rng.gen_range(0..n);
    let to = (from + rng.gen_range(1..n)) % n;
    let allowed_modes = if rng.gen_bool(0.7) {
        ModeSet::ALL
    } else {
        Mode::ALL.iter().copied().filter(|_| rng.gen_bool(0.7)).collect()
    };
    Instance {
        graph,
        overlays: vec![overlay],
        fares: FareConfig::default(),
        request: PlanRequest {
            from: Endpoint::Node(ids[from].clone()),
            to: Endpoint::Node(ids[to].clone()),
            depart_at,
            constraint: parse(CONSTRAINT_POOL.choose(rng).unwrap()).unwrap(),
            profile,
            allowed_modes,
        },
        options: SearchOptions {
            attribute_wait_to_public: rng.gen_bool(0.8),
            ..SearchOptions::default()
        },
    }
}

/// A graph of up to `max_nodes` isolated nodes and a dataset of up to
/// `max_points` points in the same few square kilometers, with a radius in
/// [50, 1000] m.
pub fn random_aux_instance<R: Rng>(rng: &mut R, max_nodes: usize, max_points: usize) -> (MapGraph, AuxDataset, f64) {
    let extent = rng.gen_range(500.0..4000.0);
    let nodes: Vec<NodeRecord> = (0..rng.gen_range(1..=max_nodes))
        .map(|i| {
            let p = offset(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent));
            NodeRecord {
                id: format!("n{i}"),
                lat: p.lat,
                lon: p.lon,
                kind: NodeKind::StreetCorner,
            }
        })
        .collect();
    let graph = load_graph(&nodes, &[], &[], ModeSpeeds::default()).expect("generated nodes are valid");
    let mut points: Vec<LatLon> = (0..rng.gen_range(1..=max_points))
        .map(|_| offset(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)))
        .collect();
    // a few points exactly on nodes
    for _ in 0..3.min(points.len()) {
        let n = graph.nodes().choose(rng).unwrap();
        let slot = rng.gen_range(0..points.len());
        points[slot] = n.pos;
    }
    let radius = rng.gen_range(50.0..=1000.0);
    let dataset = AuxDataset::new("random", DATASET, points, radius).unwrap();
    (graph, dataset, radius)
}

/// Whether progressing `f` state by state ends in the same verdict as
/// evaluating it on the whole trajectory.
pub fn chain_agrees(f: &LtlFormula, trajectory: &[StateSnapshot]) -> bool {
    use tripplan_core::ltl::{eval, progress, Verdict};
    let mut residual = f.clone();
    let last = trajectory.len() - 1;
    let mut verdict = Verdict::Pending;
    for (i, s) in trajectory.iter().enumerate() {
        let p = progress(&residual, s, i == last).expect("generated triggers are state formulas");
        verdict = p.verdict;
        residual = p.residual;
    }
    verdict == if eval(f, trajectory) { Verdict::True } else { Verdict::False }
}
