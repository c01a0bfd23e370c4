//! JSON documents exchanged by the service and printed by the CLI.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use tripplan_core::geodata::MapGraph;
use tripplan_core::ltl::print;
use tripplan_core::mode::Mode;
use tripplan_core::search::{Itinerary, SearchStats};

use crate::io::format_clock;

/// A trip endpoint: a node id or a coordinate that snaps to the nearest node.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum EndpointDoc {
    Node(String),
    Coord { lat: f64, lon: f64 },
}

/// Body of `POST /plan`.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRequestDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    pub from: Option<EndpointDoc>,
    pub to: Option<EndpointDoc>,
    /// `"HH:MM:SS"` or seconds since midnight.
    pub depart: Option<Value>,
    /// Constraint text or tree; absent means no constraint of its own.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub include_default_constraint: Option<bool>,
    /// A stored profile ...
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile_id: Option<String>,
    /// ... or elicitation answers given inline.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preferences: Option<Value>,
    /// Auxiliary datasets to activate by name; all registered ones if absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub datasets: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allowed_modes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribute_wait_to_public: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegDoc {
    pub mode: String,
    pub line: Option<String>,
    pub from: String,
    pub to: String,
    pub nodes: Vec<String>,
    pub start: String,
    pub end: String,
    pub start_s: u32,
    pub end_s: u32,
    pub duration_s: u32,
    pub wait_s: u32,
    /// Seconds counted towards the mode's travel time.
    pub time_s: u32,
    pub fare: f64,
    pub fare_cents: i64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxTotalsDoc {
    pub sum: f64,
    pub max: f64,
    pub min: f64,
    pub avg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalsDoc {
    pub time_s: BTreeMap<String, u32>,
    pub fare_cents: BTreeMap<String, i64>,
    pub fare: f64,
    pub clock_s: u32,
    pub visited: u32,
    pub aux: BTreeMap<String, AuxTotalsDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItineraryDoc {
    pub origin: String,
    pub destination: String,
    pub depart: String,
    pub arrive: String,
    pub depart_s: u32,
    pub arrive_s: u32,
    pub duration_s: u32,
    pub total_cost: f64,
    pub total_cost_cents: i64,
    /// The constraint that was enforced, defaults included.
    pub constraint: String,
    pub legs: Vec<LegDoc>,
    pub totals: TotalsDoc,
}

fn dollars(cents: i64) -> f64 {
    cents as f64 / 100.0
}

pub fn itinerary_doc(graph: &MapGraph, it: &Itinerary) -> ItineraryDoc {
    let id = |n| graph.node(n).id.clone();
    let legs = it
        .legs
        .iter()
        .map(|leg| LegDoc {
            mode: leg.mode.name().to_string(),
            line: leg.line.map(|l| graph.line(l).id.clone()),
            from: id(leg.nodes[0]),
            to: id(*leg.nodes.last().expect("legs have two or more nodes")),
            nodes: leg.nodes.iter().map(|&n| id(n)).collect(),
            start: format_clock(leg.start_s),
            end: format_clock(leg.end_s),
            start_s: leg.start_s,
            end_s: leg.end_s,
            duration_s: leg.duration_s(),
            wait_s: leg.wait_s,
            time_s: leg.time_s,
            fare: dollars(leg.fare_cents),
            fare_cents: leg.fare_cents,
            distance_m: (leg.distance_m * 10.0).round() / 10.0,
        })
        .collect();
    let t = &it.totals;
    let totals = TotalsDoc {
        time_s: Mode::ALL.iter().map(|&m| (m.name().to_string(), t.time(m))).collect(),
        fare_cents: Mode::ALL.iter().map(|&m| (m.name().to_string(), t.fare(m))).collect(),
        fare: dollars(t.total_fare_cents()),
        clock_s: t.clock_s,
        visited: t.visited,
        aux: t
            .aux
            .iter()
            .enumerate()
            .map(|(i, a)| {
                (
                    a.dataset.to_string(),
                    AuxTotalsDoc {
                        sum: a.sum,
                        max: a.max,
                        min: a.min,
                        avg: t.aux_avg(i),
                    },
                )
            })
            .collect(),
    };
    ItineraryDoc {
        origin: id(it.origin),
        destination: id(it.destination),
        depart: format_clock(it.depart_at),
        arrive: format_clock(it.arrive_at),
        depart_s: it.depart_at,
        arrive_s: it.arrive_at,
        duration_s: it.arrive_at - it.depart_at,
        total_cost: dollars(it.total_cost_cents()),
        total_cost_cents: it.total_cost_cents(),
        constraint: print(&it.constraint),
        legs,
        totals,
    }
}

/// One LineString feature per leg, through the leg's nodes.
pub fn geometry(graph: &MapGraph, doc: &ItineraryDoc) -> Value {
    let features: Vec<Value> = doc
        .legs
        .iter()
        .enumerate()
        .map(|(i, leg)| {
            let coordinates: Vec<[f64; 2]> = leg
                .nodes
                .iter()
                .map(|id| {
                    let n = graph.node(graph.node_index(id).expect("itinerary nodes exist"));
                    [n.pos.lon, n.pos.lat]
                })
                .collect();
            serde_json::json!({
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coordinates},
                "properties": {
                    "leg": i,
                    "mode": leg.mode,
                    "line": leg.line,
                    "start": leg.start,
                    "end": leg.end,
                    "fare": leg.fare,
                    "duration": leg.duration_s,
                }
            })
        })
        .collect();
    serde_json::json!({"type": "FeatureCollection", "features": features})
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingDoc {
    pub elapsed_ms: f64,
    pub labels: usize,
    pub expanded: usize,
    pub pruned: usize,
    pub dominated: usize,
}

impl TimingDoc {
    pub fn new(elapsed: std::time::Duration, stats: &SearchStats) -> Self {
        TimingDoc {
            elapsed_ms: (elapsed.as_secs_f64() * 1e6).round() / 1e3,
            labels: stats.labels,
            expanded: stats.expanded,
            pruned: stats.pruned,
            dominated: stats.dominated,
        }
    }
}

/// Body of a successful `POST /plan`, whether or not a trip exists.
#[derive(Debug, Clone, Serialize)]
pub struct PlanResponseDoc {
    pub status: &'static str,
    pub request_id: String,
    pub constraint: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub itinerary: Option<ItineraryDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Value>,
    pub timing: TimingDoc,
}

/// Canonical text of an itinerary, shared by the CLI and the service:
/// pretty-printed, newline-terminated.
pub fn itinerary_json(doc: &ItineraryDoc) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("itineraries serialize");
    text.push('\n');
    text
}
