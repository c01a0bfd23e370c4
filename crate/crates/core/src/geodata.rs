//! Static map graph and transit schedules.
//!
//! A [`MapGraph`] is built once from plain records (the std companion crate
//! parses them out of CSV and JSON files) and is immutable afterwards.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::mode::{Mode, ModeSet};

/// Mean Earth radius used by every distance computation.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Length of the single service day; no trip may end after it.
pub const SERVICE_DAY_S: u32 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        LatLon { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Haversine distance in meters.
pub fn great_circle_distance(a: LatLon, b: LatLon) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    let s1 = libm::sin(half_dphi);
    let s2 = libm::sin(half_dlambda);
    let h = s1 * s1 + libm::cos(phi1) * libm::cos(phi2) * s2 * s2;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(h.clamp(0.0, 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineIdx(pub u32);

impl LineIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    StreetCorner,
    TransitStop,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::StreetCorner => "street_corner",
            NodeKind::TransitStop => "transit_stop",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "street_corner" => Some(NodeKind::StreetCorner),
            "transit_stop" => Some(NodeKind::TransitStop),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapNode {
    pub id: String,
    pub pos: LatLon,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Traversal {
    /// Walk, bike, car and taxi edges take a precomputed time.
    Fixed { duration_s: u32 },
    /// Public edges ride leg `stop_index` of a transit line.
    Scheduled { line: LineIdx, stop_index: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapEdge {
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub mode: Mode,
    pub length_m: f64,
    pub traversal: Traversal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitLine {
    pub id: String,
    pub stops: Vec<NodeIdx>,
    /// Departure clock times at the first stop, strictly increasing.
    pub departures: Vec<u32>,
    pub leg_durations: Vec<u32>,
    pub boarding_fare_cents: i64,
    offsets: Vec<u32>,
}

impl TransitLine {
    /// Seconds from the first-stop departure until the vehicle leaves stop `k`.
    pub fn offset(&self, stop_index: usize) -> u32 {
        self.offsets[stop_index]
    }

    /// Earliest departure from `stop_index` at or after `at`.
    ///
    /// Panics unless `stop_index` names a stop that has a following leg.
    pub fn next_departure(&self, stop_index: usize, at: u32) -> Option<u32> {
        assert!(
            stop_index + 1 < self.stops.len(),
            "stop index {stop_index} has no outgoing leg on line {}",
            self.id
        );
        let offset = self.offsets[stop_index];
        let first = self.departures.partition_point(|&d| d + offset < at);
        self.departures.get(first).map(|&d| d + offset)
    }
}

/// Free-function form of [`TransitLine::next_departure`].
pub fn next_departure(line: &TransitLine, stop_index: usize, at: u32) -> Option<u32> {
    line.next_departure(stop_index, at)
}

/// Maximum speed per mode in m/s, indexed by [`Mode::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpeeds(pub [f64; Mode::COUNT]);

impl ModeSpeeds {
    pub fn get(&self, mode: Mode) -> f64 {
        self.0[mode.index()]
    }

    pub fn set(&mut self, mode: Mode, mps: f64) {
        self.0[mode.index()] = mps;
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        for m in Mode::ALL {
            let v = self.get(m);
            if !(v.is_finite() && v > 0.0) {
                return Err(GraphError::InvalidSpeeds(alloc::format!(
                    "speed for {m} must be positive, got {v}"
                )));
            }
        }
        if !(self.get(Mode::Walk) <= self.get(Mode::Bike)
            && self.get(Mode::Bike) <= self.get(Mode::Car))
        {
            return Err(GraphError::InvalidSpeeds(
                "expected walk <= bike <= car".into(),
            ));
        }
        Ok(())
    }
}

impl Default for ModeSpeeds {
    fn default() -> Self {
        // walk, bike, car, public, taxi
        ModeSpeeds([1.25, 5.0, 30.0, 30.0, 30.0])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub kind: NodeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    pub mode: Mode,
    pub length_m: f64,
    pub duration_s: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineRecord {
    pub id: String,
    pub stops: Vec<String>,
    pub departures_s: Vec<u32>,
    pub leg_durations_s: Vec<u32>,
    pub boarding_fare_usd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    Node,
    Edge,
    Line,
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordKind::Node => "node",
            RecordKind::Edge => "edge",
            RecordKind::Line => "transit line",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("malformed {kind} record #{index}, field `{field}`: {reason}")]
    MalformedRecord {
        kind: RecordKind,
        index: usize,
        field: &'static str,
        reason: String,
    },
    #[error("{kind} record #{index} references missing node `{node}`")]
    DanglingReference {
        kind: RecordKind,
        index: usize,
        node: String,
    },
    #[error("inconsistent schedule for line `{line}`: {reason}")]
    ScheduleInconsistent { line: String, reason: String },
    #[error("invalid mode speeds: {0}")]
    InvalidSpeeds(String),
}

fn malformed(kind: RecordKind, index: usize, field: &'static str, reason: &str) -> GraphError {
    GraphError::MalformedRecord {
        kind,
        index,
        field,
        reason: reason.to_string(),
    }
}

/// Immutable, validated street and transit graph.
#[derive(Debug, Clone)]
pub struct MapGraph {
    nodes: Vec<MapNode>,
    by_id: BTreeMap<String, NodeIdx>,
    // Rank of each node id in lexicographic order, used for tie-breaking.
    id_rank: Vec<u32>,
    edges: Vec<MapEdge>,
    // CSR offsets into `edges`, grouped by source node.
    out_start: Vec<u32>,
    lines: Vec<TransitLine>,
    mode_speeds: ModeSpeeds,
    heuristic_speeds: ModeSpeeds,
    modes_present: ModeSet,
}

/// Builds a [`MapGraph`] from parsed records, validating every invariant.
pub fn load_graph(
    nodes: &[NodeRecord],
    edges: &[EdgeRecord],
    lines: &[LineRecord],
    speeds: ModeSpeeds,
) -> Result<MapGraph, GraphError> {
    speeds.validate()?;

    let mut map_nodes = Vec::with_capacity(nodes.len());
    let mut by_id = BTreeMap::new();
    for (i, rec) in nodes.iter().enumerate() {
        if rec.id.is_empty() {
            return Err(malformed(RecordKind::Node, i, "id", "empty id"));
        }
        let pos = LatLon::new(rec.lat, rec.lon);
        if !(rec.lat.is_finite() && (-90.0..=90.0).contains(&rec.lat)) {
            return Err(malformed(RecordKind::Node, i, "lat", "outside [-90, 90]"));
        }
        if !(rec.lon.is_finite() && (-180.0..=180.0).contains(&rec.lon)) {
            return Err(malformed(RecordKind::Node, i, "lon", "outside [-180, 180]"));
        }
        let idx = NodeIdx(map_nodes.len() as u32);
        if by_id.insert(rec.id.clone(), idx).is_some() {
            return Err(malformed(RecordKind::Node, i, "id", "duplicate node id"));
        }
        map_nodes.push(MapNode {
            id: rec.id.clone(),
            pos,
            kind: rec.kind,
        });
    }

    let lookup = |kind, index, id: &str| {
        by_id
            .get(id)
            .copied()
            .ok_or_else(|| GraphError::DanglingReference {
                kind,
                index,
                node: id.to_string(),
            })
    };

    let mut transit = Vec::with_capacity(lines.len());
    let mut line_ids = BTreeMap::new();
    for (i, rec) in lines.iter().enumerate() {
        if rec.id.is_empty() {
            return Err(malformed(RecordKind::Line, i, "id", "empty id"));
        }
        if line_ids.insert(rec.id.as_str(), i).is_some() {
            return Err(malformed(RecordKind::Line, i, "id", "duplicate line id"));
        }
        if !(rec.boarding_fare_usd.is_finite() && rec.boarding_fare_usd >= 0.0) {
            return Err(malformed(
                RecordKind::Line,
                i,
                "boarding_fare_usd",
                "must be a nonnegative number",
            ));
        }
        let inconsistent = |reason: &str| GraphError::ScheduleInconsistent {
            line: rec.id.clone(),
            reason: reason.to_string(),
        };
        if rec.stops.len() < 2 {
            return Err(inconsistent("a line needs at least two stops"));
        }
        if rec.leg_durations_s.len() != rec.stops.len() - 1 {
            return Err(inconsistent("expected one leg duration per consecutive stop pair"));
        }
        if rec.leg_durations_s.contains(&0) {
            return Err(inconsistent("leg durations must be positive"));
        }
        if rec.departures_s.windows(2).any(|w| w[0] >= w[1]) {
            return Err(inconsistent("departures must be strictly increasing"));
        }
        let mut stops = Vec::with_capacity(rec.stops.len());
        for s in &rec.stops {
            stops.push(lookup(RecordKind::Line, i, s)?);
        }
        if stops.windows(2).any(|w| w[0] == w[1]) {
            return Err(inconsistent("consecutive stops must differ"));
        }
        let mut offsets = Vec::with_capacity(stops.len());
        let mut acc = 0u32;
        for &leg in &rec.leg_durations_s {
            offsets.push(acc);
            acc = acc.saturating_add(leg);
        }
        offsets.push(acc);
        if let Some(&last) = rec.departures_s.last() {
            if last.saturating_add(acc) > SERVICE_DAY_S {
                return Err(inconsistent("trips may not run past the end of the service day"));
            }
        }
        transit.push(TransitLine {
            id: rec.id.clone(),
            stops,
            departures: rec.departures_s.clone(),
            leg_durations: rec.leg_durations_s.clone(),
            boarding_fare_cents: libm::round(rec.boarding_fare_usd * 100.0) as i64,
            offsets,
        });
    }

    let mut map_edges = Vec::with_capacity(edges.len());
    for (i, rec) in edges.iter().enumerate() {
        let from = lookup(RecordKind::Edge, i, &rec.from)?;
        let to = lookup(RecordKind::Edge, i, &rec.to)?;
        if from == to {
            return Err(malformed(RecordKind::Edge, i, "to", "self loops are not allowed"));
        }
        if !(rec.length_m.is_finite() && rec.length_m > 0.0) {
            return Err(malformed(RecordKind::Edge, i, "length_m", "must be positive"));
        }
        match (rec.mode, rec.duration_s) {
            (Mode::Public, Some(_)) => {
                return Err(malformed(
                    RecordKind::Edge,
                    i,
                    "duration_s",
                    "public edges take their duration from the schedule",
                ))
            }
            (Mode::Public, None) => {
                let mut served = false;
                for (li, line) in transit.iter().enumerate() {
                    for (k, w) in line.stops.windows(2).enumerate() {
                        if w[0] == from && w[1] == to {
                            served = true;
                            map_edges.push(MapEdge {
                                from,
                                to,
                                mode: Mode::Public,
                                length_m: rec.length_m,
                                traversal: Traversal::Scheduled {
                                    line: LineIdx(li as u32),
                                    stop_index: k as u32,
                                },
                            });
                        }
                    }
                }
                if !served {
                    return Err(GraphError::ScheduleInconsistent {
                        line: String::new(),
                        reason: alloc::format!(
                            "no line serves public edge {} -> {} (record #{i})",
                            rec.from,
                            rec.to
                        ),
                    });
                }
            }
            (_, None) | (_, Some(0)) => {
                return Err(malformed(
                    RecordKind::Edge,
                    i,
                    "duration_s",
                    "non-public edges need a positive duration",
                ))
            }
            (mode, Some(d)) => map_edges.push(MapEdge {
                from,
                to,
                mode,
                length_m: rec.length_m,
                traversal: Traversal::Fixed { duration_s: d },
            }),
        }
    }

    let mut ranked: Vec<usize> = (0..map_nodes.len()).collect();
    ranked.sort_by(|&a, &b| map_nodes[a].id.cmp(&map_nodes[b].id));
    let mut id_rank = alloc::vec![0u32; map_nodes.len()];
    for (rank, &n) in ranked.iter().enumerate() {
        id_rank[n] = rank as u32;
    }

    // Canonical adjacency order: by source, then (target id, mode, line, leg).
    map_edges.sort_by(|a, b| {
        let key = |e: &MapEdge| {
            let (line, leg) = match e.traversal {
                Traversal::Fixed { .. } => (None, 0),
                Traversal::Scheduled { line, stop_index } => {
                    (Some(transit[line.index()].id.as_str()), stop_index)
                }
            };
            (e.from, id_rank[e.to.index()], e.mode, line, leg)
        };
        key(a).cmp(&key(b))
    });
    let mut out_start = alloc::vec![0u32; map_nodes.len() + 1];
    for e in &map_edges {
        out_start[e.from.index() + 1] += 1;
    }
    for i in 0..map_nodes.len() {
        out_start[i + 1] += out_start[i];
    }

    let mut heuristic_speeds = speeds;
    let mut modes_present = ModeSet::EMPTY;
    for e in &map_edges {
        modes_present.insert(e.mode);
        let min_duration = match e.traversal {
            Traversal::Fixed { duration_s } => duration_s,
            Traversal::Scheduled { line, stop_index } => {
                transit[line.index()].leg_durations[stop_index as usize]
            }
        };
        let straight = great_circle_distance(map_nodes[e.from.index()].pos, map_nodes[e.to.index()].pos);
        let observed = straight / f64::from(min_duration);
        if observed > heuristic_speeds.get(e.mode) {
            heuristic_speeds.set(e.mode, observed);
        }
    }

    Ok(MapGraph {
        nodes: map_nodes,
        by_id,
        id_rank,
        edges: map_edges,
        out_start,
        lines: transit,
        mode_speeds: speeds,
        heuristic_speeds,
        modes_present,
    })
}

impl MapGraph {
    pub fn empty() -> Self {
        load_graph(&[], &[], &[], ModeSpeeds::default()).expect("empty graph is valid")
    }

    pub fn nodes(&self) -> &[MapNode] {
        &self.nodes
    }

    pub fn node(&self, idx: NodeIdx) -> &MapNode {
        &self.nodes[idx.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_index(&self, id: &str) -> Option<NodeIdx> {
        self.by_id.get(id).copied()
    }

    pub(crate) fn id_rank(&self, idx: NodeIdx) -> u32 {
        self.id_rank[idx.index()]
    }

    /// All edges, grouped by source node in canonical order.
    pub fn edges(&self) -> &[MapEdge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn out_edges(&self, idx: NodeIdx) -> &[MapEdge] {
        let lo = self.out_start[idx.index()] as usize;
        let hi = self.out_start[idx.index() + 1] as usize;
        &self.edges[lo..hi]
    }

    /// Position of the first outgoing edge of `idx` within [`Self::edges`].
    pub fn out_edge_offset(&self, idx: NodeIdx) -> usize {
        self.out_start[idx.index()] as usize
    }

    pub fn lines(&self) -> &[TransitLine] {
        &self.lines
    }

    pub fn line(&self, idx: LineIdx) -> &TransitLine {
        &self.lines[idx.index()]
    }

    pub fn mode_speeds(&self) -> &ModeSpeeds {
        &self.mode_speeds
    }

    /// Per-mode speed bound used for remaining-cost estimates: the configured
    /// maximum, raised to the fastest straight-line speed any edge achieves.
    pub fn heuristic_speeds(&self) -> &ModeSpeeds {
        &self.heuristic_speeds
    }

    pub fn modes_present(&self) -> ModeSet {
        self.modes_present
    }

    /// Nearest node within `max_m` meters; ties go to the smaller node id.
    pub fn nearest_node(&self, pos: LatLon, max_m: f64) -> Option<(NodeIdx, f64)> {
        let mut best: Option<(NodeIdx, f64)> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            let d = great_circle_distance(pos, n.pos);
            if d > max_m {
                continue;
            }
            let idx = NodeIdx(i as u32);
            let better = match best {
                None => true,
                Some((b, bd)) => d < bd || (d == bd && self.id_rank(idx) < self.id_rank(b)),
            };
            if better {
                best = Some((idx, d));
            }
        }
        best
    }
}
