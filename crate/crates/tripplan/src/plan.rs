//! Request handling shared by the CLI and the HTTP service, so both paths
//! produce the same itinerary for the same inputs.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde_json::Value;

use tripplan_core::auxmetrics::AuxOverlay;
use tripplan_core::geodata::{LatLon, MapGraph, SERVICE_DAY_S};
use tripplan_core::ltl::{default_constraint, LtlFormula};
use tripplan_core::mode::{Mode, ModeSet};
use tripplan_core::pcf::{derive_coefficients, CoefficientProfile, FareConfig, PcfError};
use tripplan_core::search::{plan, Endpoint, PlanError, PlanOutcome, PlanRequest, SearchOptions};

use crate::constraint::{read_constraint, ConstraintError};
use crate::error::ApiError;
use crate::io::{parse_answers, parse_clock, AnswerError};
use crate::wire::{geometry, itinerary_doc, EndpointDoc, PlanRequestDoc, PlanResponseDoc, TimingDoc};

/// Everything a plan request is resolved against.
pub struct PlanContext<'a> {
    pub graph: &'a MapGraph,
    pub fares: &'a FareConfig,
    /// Active overlays by dataset name.
    pub overlays: &'a BTreeMap<String, Arc<AuxOverlay>>,
    /// Looks up a stored profile by id.
    pub profiles: &'a dyn Fn(&str) -> Option<CoefficientProfile>,
    pub options: SearchOptions,
}

impl From<AnswerError> for ApiError {
    fn from(e: AnswerError) -> Self {
        let kind = if e.message == "missing field" {
            "MissingAnswer"
        } else {
            "InvalidAnswer"
        };
        ApiError::unprocessable(kind, e.to_string()).with_field(e.field)
    }
}

impl From<PcfError> for ApiError {
    fn from(e: PcfError) -> Self {
        match &e {
            PcfError::NonpositiveAnswer { field, .. } => {
                let field = field.clone();
                ApiError::unprocessable("NonpositiveAnswer", e.to_string()).with_field(field)
            }
            PcfError::MissingAnswer(field) => {
                let field = field.clone();
                ApiError::unprocessable("MissingAnswer", e.to_string()).with_field(field)
            }
            _ => ApiError::unprocessable("InvalidAnswer", e.to_string()),
        }
    }
}

impl From<PlanError> for ApiError {
    fn from(e: PlanError) -> Self {
        let message = e.to_string();
        match e {
            PlanError::UnknownEndpoint(_) => ApiError::unprocessable("UnknownEndpoint", message),
            PlanError::SameEndpoints => ApiError::unprocessable("SameEndpoints", message),
            PlanError::DepartureOutsideServiceDay(_) => {
                ApiError::unprocessable("DepartureOutsideServiceDay", message).with_field("depart")
            }
            PlanError::UnknownDataset(_) => ApiError::not_found("UnknownDataset", message),
            PlanError::OverlayMismatch(_) | PlanError::DuplicateDataset(_) => {
                ApiError::new(500, "InternalError", message)
            }
            PlanError::Constraint(c) => ConstraintError::Text(c).into(),
            PlanError::SearchLimit(_) => ApiError::new(503, "SearchLimit", message),
        }
    }
}

/// Derives a profile from elicitation answers in their JSON form.
pub fn profile_from_answers(doc: &Value) -> Result<CoefficientProfile, ApiError> {
    let answers = parse_answers(doc)?;
    Ok(derive_coefficients(&answers)?)
}

fn endpoint(doc: Option<&EndpointDoc>, field: &str) -> Result<Endpoint, ApiError> {
    match doc {
        None => Err(ApiError::bad_request(format!("missing `{field}`")).with_field(field)),
        Some(EndpointDoc::Node(id)) => Ok(Endpoint::Node(id.clone())),
        Some(EndpointDoc::Coord { lat, lon }) => {
            let pos = LatLon { lat: *lat, lon: *lon };
            if !pos.is_valid() {
                return Err(ApiError::bad_request(format!("`{field}` is not a valid coordinate")).with_field(field));
            }
            Ok(Endpoint::Coord(pos))
        }
    }
}

fn departure(doc: Option<&Value>) -> Result<u32, ApiError> {
    let bad = || ApiError::bad_request("`depart` must be HH:MM:SS or seconds since midnight").with_field("depart");
    match doc {
        None => Err(ApiError::bad_request("missing `depart`").with_field("depart")),
        Some(Value::String(s)) => parse_clock(s).ok_or_else(bad),
        Some(Value::Number(n)) => n
            .as_u64()
            .filter(|&s| s < u64::from(SERVICE_DAY_S))
            .map(|s| s as u32)
            .ok_or_else(bad),
        Some(_) => Err(bad()),
    }
}

fn modes(names: Option<&[String]>) -> Result<ModeSet, ApiError> {
    let Some(names) = names else {
        return Ok(ModeSet::ALL);
    };
    let mut set = ModeSet::EMPTY;
    for name in names {
        let mode: Mode = name.parse().map_err(|_| {
            ApiError::unprocessable("UnknownMode", format!("unknown mode `{name}`")).with_field("allowed_modes")
        })?;
        set.insert(mode);
    }
    if set.is_empty() {
        return Err(ApiError::unprocessable("NoModes", "`allowed_modes` is empty").with_field("allowed_modes"));
    }
    Ok(set)
}

/// The request's own constraint conjoined with the default one, unless
/// the request opts out.
pub fn effective_constraint(doc: &PlanRequestDoc) -> Result<LtlFormula, ApiError> {
    let own = match &doc.constraint {
        None | Some(Value::Null) => LtlFormula::True,
        Some(v) => read_constraint(v)?,
    };
    if !doc.include_default_constraint.unwrap_or(true) {
        return Ok(own);
    }
    Ok(match own {
        LtlFormula::True => default_constraint(),
        own => LtlFormula::And(Box::new(own), Box::new(default_constraint())),
    })
}

fn profile(ctx: &PlanContext<'_>, doc: &PlanRequestDoc) -> Result<CoefficientProfile, ApiError> {
    match (&doc.profile_id, &doc.preferences) {
        (Some(_), Some(_)) => Err(ApiError::bad_request("give `profile_id` or `preferences`, not both")),
        (Some(id), None) => (ctx.profiles)(id)
            .ok_or_else(|| ApiError::not_found("UnknownProfile", format!("no profile `{id}`")).with_field("profile_id")),
        (None, Some(answers)) => profile_from_answers(answers).map_err(|e| match e.field.clone() {
            Some(f) => e.with_field(format!("preferences.{f}")),
            None => e,
        }),
        (None, None) => Err(ApiError::bad_request("missing `profile_id` or `preferences`")),
    }
}

fn overlays<'c>(ctx: &'c PlanContext<'_>, names: Option<&[String]>) -> Result<Vec<&'c AuxOverlay>, ApiError> {
    match names {
        None => Ok(ctx.overlays.values().map(|o| &**o).collect()),
        Some(names) => {
            let mut picked: Vec<&AuxOverlay> = Vec::with_capacity(names.len());
            for name in names {
                let o = ctx.overlays.get(name).ok_or_else(|| {
                    ApiError::not_found("UnknownDataset", format!("no dataset `{name}`")).with_field("datasets")
                })?;
                if !picked.iter().any(|p| p.dataset_name == *name) {
                    picked.push(o);
                }
            }
            Ok(picked)
        }
    }
}

/// Validates and plans one request. Infeasibility is a successful
/// response with status `infeasible`.
pub fn plan_request(ctx: &PlanContext<'_>, doc: &PlanRequestDoc) -> Result<PlanResponseDoc, ApiError> {
    let constraint = effective_constraint(doc)?;
    let request = PlanRequest {
        from: endpoint(doc.from.as_ref(), "from")?,
        to: endpoint(doc.to.as_ref(), "to")?,
        depart_at: departure(doc.depart.as_ref())?,
        constraint,
        profile: profile(ctx, doc)?,
        allowed_modes: modes(doc.allowed_modes.as_deref())?,
    };
    let active = overlays(ctx, doc.datasets.as_deref())?;
    let mut options = ctx.options;
    if let Some(attribute) = doc.attribute_wait_to_public {
        options.attribute_wait_to_public = attribute;
    }

    let started = Instant::now();
    let report = plan(ctx.graph, &active, ctx.fares, &request, &options)?;
    let timing = TimingDoc::new(started.elapsed(), &report.stats);
    let constraint = tripplan_core::ltl::print(&request.constraint);
    let request_id = doc.request_id.clone().unwrap_or_default();
    Ok(match report.outcome {
        PlanOutcome::Found(it) => {
            let itinerary = itinerary_doc(ctx.graph, &it);
            let geometry = geometry(ctx.graph, &itinerary);
            PlanResponseDoc {
                status: "ok",
                request_id,
                constraint,
                itinerary: Some(itinerary),
                geometry: Some(geometry),
                timing,
            }
        }
        PlanOutcome::Infeasible => PlanResponseDoc {
            status: "infeasible",
            request_id,
            constraint,
            itinerary: None,
            geometry: None,
            timing,
        },
    })
}
