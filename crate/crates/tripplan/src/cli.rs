//! Command-line front end: `plan` runs one request against files on disk,
//! `serve` starts the HTTP service.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use tripplan_core::auxmetrics::{build_overlay, AuxDataset, AuxOverlay};
use tripplan_core::search::SearchOptions;

use crate::error::ApiError;
use crate::io::{load_graph_dir, parse_aux_csv};
use crate::plan::{plan_request, PlanContext};
use crate::service::store::valid_dataset_name;
use crate::service::{serve, ServeConfig};
use crate::wire::{itinerary_json, EndpointDoc, PlanRequestDoc};

/// A trip was found.
pub const EXIT_OK: u8 = 0;
/// The planner or service failed for a reason other than its inputs.
pub const EXIT_FAILURE: u8 = 1;
/// The inputs were unreadable or invalid.
pub const EXIT_INPUT: u8 = 2;
/// No trip satisfies the constraint.
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tripplan", version, about = "Personalized, constraint-aware multi-modal trip planner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Plan one trip and print it.
    Plan(PlanArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Directory with nodes.csv, edges.csv and optional transit.json,
    /// speeds.json and fares.json.
    #[arg(long)]
    pub graph: PathBuf,
    /// Origin: `lat,lon` or a node id.
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    /// Destination: `lat,lon` or a node id.
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    /// Departure time, HH:MM:SS.
    #[arg(long)]
    pub depart: String,
    /// Constraint file: constraint text, or a JSON constraint tree.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Elicitation answers (JSON).
    #[arg(long)]
    pub prefs: PathBuf,
    /// Activate an auxiliary dataset: NAME=CSV:RADIUS (radius in meters).
    #[arg(long = "aux", value_name = "NAME=CSV:RADIUS")]
    pub aux: Vec<String>,
    /// Print the itinerary document.
    #[arg(long, conflicts_with = "geojson")]
    pub json: bool,
    /// Print the route as a GeoJSON FeatureCollection (the default).
    #[arg(long)]
    pub geojson: bool,
    /// Do not add the default "no driving after biking or transit" constraint.
    #[arg(long)]
    pub no_default_constraint: bool,
    /// Comma-separated modes the trip may use (default: all).
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "TRIPPLAN_GRAPH_DIR")]
    pub graph: PathBuf,
    /// Where uploaded datasets and profiles are kept.
    #[arg(long, env = "TRIPPLAN_DATA_DIR", default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long, env = "TRIPPLAN_HOST", default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, env = "TRIPPLAN_PORT", default_value_t = 8080)]
    pub port: u16,
}

/// `NAME=CSV:RADIUS`; the radius is taken after the last colon.
pub fn parse_aux_spec(spec: &str) -> Result<(String, PathBuf, f64), String> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| format!("`{spec}`: expected NAME=CSV:RADIUS"))?;
    let (path, radius) = rest
        .rsplit_once(':')
        .ok_or_else(|| format!("`{spec}`: expected NAME=CSV:RADIUS"))?;
    let radius: f64 = radius
        .parse()
        .map_err(|_| format!("`{spec}`: radius `{radius}` is not a number"))?;
    if !valid_dataset_name(name) {
        return Err(format!("`{spec}`: invalid dataset name `{name}`"));
    }
    if path.is_empty() {
        return Err(format!("`{spec}`: missing CSV path"));
    }
    Ok((name.to_string(), PathBuf::from(path), radius))
}

/// `lat,lon` becomes a coordinate; anything else is a node id.
pub fn parse_endpoint(text: &str) -> EndpointDoc {
    if let Some((lat, lon)) = text.split_once(',') {
        if let (Ok(lat), Ok(lon)) = (lat.trim().parse(), lon.trim().parse()) {
            return EndpointDoc::Coord { lat, lon };
        }
    }
    EndpointDoc::Node(text.to_string())
}

fn read_text(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// The request the service would receive for the same inputs.
pub fn request_doc(args: &PlanArgs) -> Result<PlanRequestDoc, String> {
    let constraint = match &args.constraints {
        None => None,
        Some(path) => {
            let text = read_text(path)?;
            Some(if text.trim_start().starts_with('{') {
                serde_json::from_str::<Value>(&text).map_err(|e| format!("{}: {e}", path.display()))?
            } else {
                Value::String(text.trim().to_string())
            })
        }
    };
    let prefs: Value = serde_json::from_str(&read_text(&args.prefs)?).map_err(|e| format!("{}: {e}", args.prefs.display()))?;
    let mut datasets = Vec::new();
    for spec in &args.aux {
        datasets.push(parse_aux_spec(spec)?.0);
    }
    Ok(PlanRequestDoc {
        from: Some(parse_endpoint(&args.from)),
        to: Some(parse_endpoint(&args.to)),
        depart: Some(Value::String(args.depart.clone())),
        constraint,
        include_default_constraint: args.no_default_constraint.then_some(false),
        preferences: Some(prefs),
        datasets: (!datasets.is_empty()).then_some(datasets),
        allowed_modes: args.modes.clone(),
        ..PlanRequestDoc::default()
    })
}

fn load_overlays(
    args: &PlanArgs,
    graph: &tripplan_core::geodata::MapGraph,
) -> Result<BTreeMap<String, Arc<AuxOverlay>>, ApiError> {
    let mut overlays = BTreeMap::new();
    for spec in &args.aux {
        let (name, path, radius) = parse_aux_spec(spec).map_err(ApiError::bad_request)?;
        if !(radius.is_finite() && radius > 0.0) {
            return Err(ApiError::unprocessable(
                "NonpositiveRadius",
                format!("dataset `{name}`: radius must be positive, got {radius}"),
            ));
        }
        let text = read_text(&path).map_err(|m| ApiError::new(400, "MalformedCSV", m))?;
        let points = parse_aux_csv(&text)
            .map_err(|e| ApiError::new(400, "MalformedCSV", format!("{}: {e}", path.display())))?;
        let dataset =
            AuxDataset::new(&name, &name, points, radius).map_err(|e| ApiError::new(400, "MalformedCSV", e.to_string()))?;
        let overlay = build_overlay(graph, &dataset, radius).map_err(|e| ApiError::bad_request(e.to_string()))?;
        if overlays.insert(name.clone(), Arc::new(overlay)).is_some() {
            return Err(ApiError::bad_request(format!("dataset `{name}` given twice")));
        }
    }
    Ok(overlays)
}

fn exit_code_for(e: &ApiError) -> u8 {
    if e.status >= 500 {
        EXIT_FAILURE
    } else {
        EXIT_INPUT
    }
}

/// Runs `plan`, writing the result to `out` and diagnostics to `err`;
/// returns the process exit code.
pub fn run_plan(args: &PlanArgs, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let fail = |err: &mut dyn Write, code: u8, message: &str| {
        let _ = writeln!(err, "error: {message}");
        code
    };
    let bundle = match load_graph_dir(&args.graph) {
        Ok(b) => b,
        Err(e) => return fail(err, EXIT_INPUT, &e.to_string()),
    };
    let doc = match request_doc(args) {
        Ok(d) => d,
        Err(m) => return fail(err, EXIT_INPUT, &m),
    };
    let overlays = match load_overlays(args, &bundle.graph) {
        Ok(o) => o,
        Err(e) => return fail(err, exit_code_for(&e), &format!("{}: {}", e.error, e.message)),
    };
    let no_profiles = |_: &str| None;
    let ctx = PlanContext {
        graph: &bundle.graph,
        fares: &bundle.fares,
        overlays: &overlays,
        profiles: &no_profiles,
        options: SearchOptions::default(),
    };
    let response = match plan_request(&ctx, &doc) {
        Ok(r) => r,
        Err(e) => return fail(err, exit_code_for(&e), &format!("{}: {}", e.error, e.message)),
    };
    let Some(itinerary) = &response.itinerary else {
        let _ = writeln!(err, "infeasible: no trip satisfies {}", response.constraint);
        return EXIT_INFEASIBLE;
    };
    let text = if args.json {
        itinerary_json(itinerary)
    } else {
        let geometry = response.geometry.as_ref().expect("found plans carry geometry");
        serde_json::to_string_pretty(geometry).expect("geometry serializes") + "\n"
    };
    match out.write_all(text.as_bytes()) {
        Ok(()) => EXIT_OK,
        Err(e) => fail(err, EXIT_FAILURE, &e.to_string()),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan(args) => {
            let code = run_plan(&args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
            ExitCode::from(code)
        }
        Command::Serve(args) => {
            let config = ServeConfig {
                graph_dir: args.graph,
                data_dir: args.data_dir,
                addr: SocketAddr::new(args.host, args.port),
            };
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_FAILURE);
                }
            };
            match runtime.block_on(serve(config)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_FAILURE)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aux_specs() {
        let (name, path, radius) = parse_aux_spec("crime=data/crime.csv:500").unwrap();
        assert_eq!((name.as_str(), path, radius), ("crime", PathBuf::from("data/crime.csv"), 500.0));
        // only the last colon separates the radius
        assert_eq!(parse_aux_spec("a=C:\\x.csv:50").unwrap().1, PathBuf::from("C:\\x.csv"));
        assert!(parse_aux_spec("crime.csv:500").is_err());
        assert!(parse_aux_spec("crime=crime.csv").is_err());
        assert!(parse_aux_spec("crime=crime.csv:far").is_err());
        assert!(parse_aux_spec("9x=crime.csv:5").is_err());
    }

    #[test]
    fn endpoints() {
        assert_eq!(
            parse_endpoint("40.1,-88.2"),
            EndpointDoc::Coord {
                lat: 40.1,
                lon: -88.2
            }
        );
        assert_eq!(parse_endpoint("n1"), EndpointDoc::Node("n1".into()));
        assert_eq!(parse_endpoint("a,b"), EndpointDoc::Node("a,b".into()));
    }

    #[test]
    fn arguments_parse() {
        let cli = Cli::try_parse_from([
            "tripplan", "plan", "--graph", "g", "--from", "a", "--to", "b", "--depart", "08:00:00", "--prefs",
            "p.json", "--aux", "crime=c.csv:500", "--json",
        ])
        .unwrap();
        let Command::Plan(args) = cli.command else { panic!("expected plan") };
        assert!(args.json && !args.geojson);
        assert_eq!(args.aux, vec!["crime=c.csv:500".to_string()]);
        assert!(Cli::try_parse_from(["tripplan", "plan", "--graph", "g", "--json", "--geojson"]).is_err());
    }
}
