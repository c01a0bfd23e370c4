//! Readers for the on-disk inputs: graph directories, auxiliary point CSVs,
//! preference answers and fare configuration.
//!
//! A graph directory holds `nodes.csv`, `edges.csv` and optionally
//! `transit.json`, `speeds.json` and `fares.json`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::Value;

use tripplan_core::geodata::{
    load_graph, EdgeRecord, GraphError, LatLon, LineRecord, MapGraph, ModeSpeeds, NodeKind, NodeRecord, RecordKind,
};
use tripplan_core::mode::Mode;
use tripplan_core::pcf::{ElicitationAnswers, FareConfig};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    /// `line` is 1-based and counts the header.
    #[error("{}:{line}: {message}", path.display())]
    Malformed { path: PathBuf, line: u64, message: String },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Graph, speeds and fares loaded from one directory.
#[derive(Debug, Clone)]
pub struct GraphBundle {
    pub graph: MapGraph,
    pub fares: FareConfig,
}

pub fn load_graph_dir(dir: &Path) -> Result<GraphBundle, InputError> {
    let nodes_path = dir.join("nodes.csv");
    let edges_path = dir.join("edges.csv");
    let transit_path = dir.join("transit.json");
    let nodes = parse_nodes(&read(&nodes_path)?).map_err(|e| e.at(&nodes_path))?;
    let edges = parse_edges(&read(&edges_path)?).map_err(|e| e.at(&edges_path))?;
    let lines = if transit_path.exists() {
        parse_transit(&read(&transit_path)?).map_err(|message| InputError::Invalid {
            path: transit_path.clone(),
            message,
        })?
    } else {
        Vec::new()
    };
    let speeds_path = dir.join("speeds.json");
    let speeds = if speeds_path.exists() {
        parse_speeds(&read(&speeds_path)?).map_err(|message| InputError::Invalid {
            path: speeds_path.clone(),
            message,
        })?
    } else {
        ModeSpeeds::default()
    };
    let fares_path = dir.join("fares.json");
    let fares = if fares_path.exists() {
        parse_fares(&read(&fares_path)?).map_err(|message| InputError::Invalid {
            path: fares_path.clone(),
            message,
        })?
    } else {
        FareConfig::default()
    };

    let graph = load_graph(&nodes, &edges, &lines, speeds).map_err(|e| match &e {
        GraphError::MalformedRecord { kind, index, .. } | GraphError::DanglingReference { kind, index, .. } => {
            match kind {
                RecordKind::Node => record_error(&nodes_path, *index, &e),
                RecordKind::Edge => record_error(&edges_path, *index, &e),
                RecordKind::Line => InputError::Invalid {
                    path: transit_path.clone(),
                    message: e.to_string(),
                },
            }
        }
        GraphError::ScheduleInconsistent { .. } => InputError::Invalid {
            path: transit_path.clone(),
            message: e.to_string(),
        },
        GraphError::InvalidSpeeds(_) => InputError::Invalid {
            path: speeds_path.clone(),
            message: e.to_string(),
        },
    })?;
    Ok(GraphBundle { graph, fares })
}

fn record_error(path: &Path, index: usize, e: &GraphError) -> InputError {
    InputError::Malformed {
        path: path.to_path_buf(),
        line: index as u64 + 2,
        message: e.to_string(),
    }
}

/// A CSV problem before the file name is known.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct CsvError {
    pub line: u64,
    pub message: String,
}

impl CsvError {
    fn at(self, path: &Path) -> InputError {
        InputError::Malformed {
            path: path.to_path_buf(),
            line: self.line,
            message: self.message,
        }
    }
}

/// Rows of a CSV with exactly the `expected` header, with their line numbers.
fn rows(text: &str, expected: &[&str]) -> Result<Vec<(u64, csv::StringRecord)>, CsvError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CsvError {
        line: 1,
        message: e.to_string(),
    })?;
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(CsvError {
            line: 1,
            message: format!("expected header `{}`", expected.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| CsvError {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        out.push((line, rec));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(line: u64, rec: &csv::StringRecord, i: usize, name: &str) -> Result<T, CsvError> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| CsvError {
        line,
        message: format!("field `{name}`: cannot parse `{raw}`"),
    })
}

pub fn parse_nodes(text: &str) -> Result<Vec<NodeRecord>, CsvError> {
    rows(text, &["id", "lat", "lon", "kind"])?
        .into_iter()
        .map(|(line, rec)| {
            let kind = NodeKind::parse(&rec[3]).ok_or_else(|| CsvError {
                line,
                message: format!("field `kind`: unknown node kind `{}`", &rec[3]),
            })?;
            Ok(NodeRecord {
                id: rec[0].to_string(),
                lat: field(line, &rec, 1, "lat")?,
                lon: field(line, &rec, 2, "lon")?,
                kind,
            })
        })
        .collect()
}

pub fn parse_edges(text: &str) -> Result<Vec<EdgeRecord>, CsvError> {
    rows(text, &["from", "to", "mode", "length_m", "duration_s"])?
        .into_iter()
        .map(|(line, rec)| {
            let mode: Mode = rec[2].parse().map_err(|_| CsvError {
                line,
                message: format!("field `mode`: unknown mode `{}`", &rec[2]),
            })?;
            let duration_s = if rec[4].is_empty() {
                None
            } else {
                Some(field(line, &rec, 4, "duration_s")?)
            };
            Ok(EdgeRecord {
                from: rec[0].to_string(),
                to: rec[1].to_string(),
                mode,
                length_m: field(line, &rec, 3, "length_m")?,
                duration_s,
            })
        })
        .collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDoc {
    id: String,
    stops: Vec<String>,
    departures_s: Vec<u32>,
    leg_durations_s: Vec<u32>,
    boarding_fare_usd: f64,
}

pub fn parse_transit(text: &str) -> Result<Vec<LineRecord>, String> {
    let docs: Vec<LineDoc> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Ok(docs
        .into_iter()
        .map(|d| LineRecord {
            id: d.id,
            stops: d.stops,
            departures_s: d.departures_s,
            leg_durations_s: d.leg_durations_s,
            boarding_fare_usd: d.boarding_fare_usd,
        })
        .collect())
}

/// `{"walk": 1.4, ...}`; unlisted modes keep their defaults.
pub fn parse_speeds(text: &str) -> Result<ModeSpeeds, String> {
    let map: BTreeMap<String, f64> = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let mut speeds = ModeSpeeds::default();
    for (name, v) in map {
        let mode: Mode = name.parse().map_err(|_| format!("unknown mode `{name}`"))?;
        speeds.set(mode, v);
    }
    Ok(speeds)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FareDoc {
    taxi_base_usd: Option<f64>,
    taxi_per_km_usd: Option<f64>,
    car_per_km_usd: Option<f64>,
}

pub fn parse_fares(text: &str) -> Result<FareConfig, String> {
    let doc: FareDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let d = FareConfig::default();
    let fares = FareConfig {
        taxi_base_usd: doc.taxi_base_usd.unwrap_or(d.taxi_base_usd),
        taxi_per_km_usd: doc.taxi_per_km_usd.unwrap_or(d.taxi_per_km_usd),
        car_per_km_usd: doc.car_per_km_usd.unwrap_or(d.car_per_km_usd),
    };
    for (name, v) in [
        ("taxi_base_usd", fares.taxi_base_usd),
        ("taxi_per_km_usd", fares.taxi_per_km_usd),
        ("car_per_km_usd", fares.car_per_km_usd),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("`{name}` must be a nonnegative number"));
        }
    }
    Ok(fares)
}

/// Points of an auxiliary dataset: a `lat,lon` CSV with at least one row.
pub fn parse_aux_csv(text: &str) -> Result<Vec<LatLon>, CsvError> {
    let rows = rows(text, &["lat", "lon"])?;
    if rows.is_empty() {
        return Err(CsvError {
            line: 2,
            message: "no points".into(),
        });
    }
    rows.into_iter()
        .map(|(line, rec)| {
            let p = LatLon::new(field(line, &rec, 0, "lat")?, field(line, &rec, 1, "lon")?);
            if !p.is_valid() {
                return Err(CsvError {
                    line,
                    message: "coordinates out of range".into(),
                });
            }
            Ok(p)
        })
        .collect()
}

/// A problem with elicitation answers, naming the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("`{field}`: {message}")]
pub struct AnswerError {
    pub field: String,
    pub message: String,
}

fn answer_error(field: impl Into<String>, message: impl Into<String>) -> AnswerError {
    AnswerError {
        field: field.into(),
        message: message.into(),
    }
}

/// Reads `{"hours_equivalent": {...}, "dollars_per_hour": n,
/// "dollars_per_aux": {...}}`. Range checks are left to
/// [`tripplan_core::pcf::derive_coefficients`]; this only checks shape.
pub fn parse_answers(doc: &Value) -> Result<ElicitationAnswers, AnswerError> {
    let obj = doc.as_object().ok_or_else(|| answer_error("", "expected a JSON object"))?;
    for key in obj.keys() {
        if !["hours_equivalent", "dollars_per_hour", "dollars_per_aux"].contains(&key.as_str()) {
            return Err(answer_error(key.as_str(), "unknown field"));
        }
    }
    let number = |v: &Value, name: &str| v.as_f64().ok_or_else(|| answer_error(name, "expected a number"));

    let hours = obj
        .get("hours_equivalent")
        .ok_or_else(|| answer_error("hours_equivalent", "missing field"))?
        .as_object()
        .ok_or_else(|| answer_error("hours_equivalent", "expected an object"))?;
    let mut answers = ElicitationAnswers::default();
    for (name, v) in hours {
        let path = format!("hours_equivalent.{name}");
        let mode: Mode = name.parse().map_err(|_| answer_error(path.as_str(), "unknown mode"))?;
        let value = number(v, &path)?;
        if mode == Mode::Car {
            // driving is the unit of the scale
            if value != 1.0 {
                return Err(answer_error(path, "driving is the reference mode and must be 1"));
            }
            continue;
        }
        answers.hours_equivalent.insert(mode, value);
    }
    for mode in Mode::ALL.into_iter().filter(|&m| m != Mode::Car) {
        if !answers.hours_equivalent.contains_key(&mode) {
            return Err(answer_error(format!("hours_equivalent.{mode}"), "missing field"));
        }
    }
    answers.dollars_per_hour = number(
        obj.get("dollars_per_hour")
            .ok_or_else(|| answer_error("dollars_per_hour", "missing field"))?,
        "dollars_per_hour",
    )?;
    if let Some(aux) = obj.get("dollars_per_aux") {
        let aux = aux
            .as_object()
            .ok_or_else(|| answer_error("dollars_per_aux", "expected an object"))?;
        for (name, v) in aux {
            let value = number(v, &format!("dollars_per_aux.{name}"))?;
            answers.dollars_per_aux.insert(name.clone(), value);
        }
    }
    Ok(answers)
}

/// Clock time `HH:MM:SS` (or `HH:MM`) as seconds since midnight.
pub fn parse_clock(text: &str) -> Option<u32> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    if !(2..=3).contains(&parts.len()) || parts.iter().any(|p| p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit())) {
        return None;
    }
    let h: u32 = parts[0].parse().ok()?;
    let m: u32 = parts[1].parse().ok()?;
    let s: u32 = parts.get(2).map_or(Some(0), |s| s.parse().ok())?;
    (h < 24 && m < 60 && s < 60).then_some(h * 3600 + m * 60 + s)
}

/// Seconds since midnight as `HH:MM:SS`; 86400 prints as `24:00:00`.
pub fn format_clock(seconds: u32) -> String {
    format!("{:02}:{:02}:{:02}", seconds / 3600, seconds / 60 % 60, seconds % 60)
}
