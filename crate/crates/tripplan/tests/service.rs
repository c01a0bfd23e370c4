mod common;

use axum::http::StatusCode;
use serde_json::{json, Value};

use common::{call, call_json, cases, fixture, service};
use tripplan::wire::{itinerary_json, ItineraryDoc};

fn alice_answers() -> Value {
    json!({
        "hours_equivalent": {"walk": 3, "bike": 2, "public": 0.25, "taxi": 0.5},
        "dollars_per_hour": 20,
        "dollars_per_aux": {"crime": 1}
    })
}

fn crime_csv() -> Vec<u8> {
    std::fs::read(fixture("bob/crime.csv")).unwrap()
}

#[tokio::test]
async fn dataset_upload_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("bob", dir.path());

    let (status, rec) = call_json(&app, "POST", "/datasets?name=crime&radius=200", crime_csv()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(rec["name"], "crime");
    assert_eq!(rec["point_count"], 23);
    assert_eq!(rec["radius"], 200.0);
    assert_eq!(rec["overlay_version"], 1);
    assert!(rec["uploaded_at"].as_u64().unwrap() > 0);

    let (status, rec) = call_json(&app, "POST", "/datasets?name=crime&radius=150", crime_csv()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(rec["overlay_version"], 2);
    assert_ne!(rec["id"], "crime-v1");

    let (status, list) = call_json(&app, "GET", "/datasets", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list.as_array().unwrap().len(), 1);
    assert_eq!(list[0]["radius"], 150.0);
}

#[tokio::test]
async fn dataset_upload_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("bob", dir.path());

    let (status, err) = call_json(&app, "POST", "/datasets?name=crime", "lat,lon\n91,0\n").await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("MalformedCSV")));
    let (status, err) = call_json(&app, "POST", "/datasets?name=crime", "latitude,longitude\n1,2\n").await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("MalformedCSV")));
    let (status, err) = call_json(&app, "POST", "/datasets?name=crime", "lat,lon\n").await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("MalformedCSV")));

    for radius in ["0", "-5"] {
        let (status, err) = call_json(&app, "POST", &format!("/datasets?name=crime&radius={radius}"), crime_csv()).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(err["error"], "NonpositiveRadius");
        assert_eq!(err["field"], "radius");
    }

    let (status, _) = call_json(&app, "POST", "/datasets", crime_csv()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call_json(&app, "POST", "/datasets?name=no%20spaces", crime_csv()).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let (_, list) = call_json(&app, "GET", "/datasets", "").await;
    assert_eq!(list, json!([]));
}

#[tokio::test]
async fn elicitation_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("alice", dir.path());

    let (status, q) = call_json(&app, "GET", "/elicitation/questions", "").await;
    assert_eq!(status, StatusCode::OK);
    let questions = q["questions"].as_array().unwrap();
    assert_eq!(questions.len(), 3);
    assert_eq!(questions[0]["keys"], json!(["walk", "bike", "public", "taxi"]));

    let (status, profile) = call_json(&app, "POST", "/elicitation/answers", alice_answers().to_string()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(
        profile["alpha"],
        json!({"walk": 3.0, "bike": 2.0, "car": 1.0, "public": 0.25, "taxi": 0.5})
    );
    assert_eq!(profile["beta_time"], 20.0);
    assert_eq!(profile["beta_aux"], json!({"crime": 1.0}));

    let id = profile["id"].as_str().unwrap();
    let (status, again) = call_json(&app, "GET", &format!("/profiles/{id}"), "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, profile);

    let (status, second) = call_json(&app, "POST", "/elicitation/answers", alice_answers().to_string()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_ne!(second["id"], profile["id"]);
}

#[tokio::test]
async fn elicitation_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("alice", dir.path());

    let mut answers = alice_answers();
    answers["hours_equivalent"]["bike"] = json!(0);
    let (status, err) = call_json(&app, "POST", "/elicitation/answers", answers.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "NonpositiveAnswer");
    assert_eq!(err["field"], "hours_equivalent.bike");

    let mut answers = alice_answers();
    answers["dollars_per_hour"] = json!(-1);
    let (_, err) = call_json(&app, "POST", "/elicitation/answers", answers.to_string()).await;
    assert_eq!(err["field"], "dollars_per_hour");

    let mut answers = alice_answers();
    answers["hours_equivalent"].as_object_mut().unwrap().remove("taxi");
    let (status, err) = call_json(&app, "POST", "/elicitation/answers", answers.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "hours_equivalent.taxi");

    let (status, _) = call_json(&app, "POST", "/elicitation/answers", "{not json").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn plan_returns_itinerary_and_geometry() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("alice", dir.path());
    let (_, profile) = call_json(&app, "POST", "/elicitation/answers", alice_answers().to_string()).await;
    let body = json!({
        "request_id": "r1",
        "from": "H",
        "to": "O",
        "depart": "08:00:00",
        "constraint": "G(!(mode=car)) & F(time(bike) >= 1200) & G(time(bike) <= 1800)",
        "profile_id": profile["id"],
    });
    let (status, resp) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp["status"], "ok");
    assert_eq!(resp["request_id"], "r1");
    assert!(resp["constraint"].as_str().unwrap().contains("AFTER"), "default constraint attached");

    let legs = resp["itinerary"]["legs"].as_array().unwrap();
    let features = resp["geometry"]["features"].as_array().unwrap();
    assert_eq!(resp["geometry"]["type"], "FeatureCollection");
    assert_eq!(features.len(), legs.len());
    for (leg, feature) in legs.iter().zip(features) {
        assert_eq!(feature["geometry"]["type"], "LineString");
        let props = &feature["properties"];
        assert_eq!(props["mode"], leg["mode"]);
        assert_eq!(props["start"], leg["start"]);
        assert_eq!(props["end"], leg["end"]);
        assert_eq!(props["fare"], leg["fare"]);
        assert_eq!(props["duration"], leg["duration_s"]);
        assert_eq!(
            feature["geometry"]["coordinates"].as_array().unwrap().len(),
            leg["nodes"].as_array().unwrap().len()
        );
    }
    let bike = resp["itinerary"]["totals"]["time_s"]["bike"].as_u64().unwrap();
    assert!((1200..=1800).contains(&bike));
}

#[tokio::test]
async fn infeasible_is_a_successful_response() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("alice", dir.path());
    let body = json!({
        "from": "H", "to": "O", "depart": "08:00:00",
        "constraint": "G(!(mode=car)) & G(time(bike) <= 0) & G(time(walk) <= 0) & G(time(public) <= 0)",
        "preferences": alice_answers(),
    });
    let (status, resp) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(resp["status"], "infeasible");
    assert!(resp.get("itinerary").is_none());
    assert!(resp["constraint"].as_str().unwrap().starts_with("G(!(mode=car))"));
}

#[tokio::test]
async fn plan_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("bob", dir.path());
    let base = json!({"from": "g20", "to": "g24", "depart": "08:00:00", "preferences": alice_answers()});

    let mut body = base.clone();
    body["constraint"] = json!("G(");
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "SyntaxError");
    assert_eq!(err["position"], 2);

    let mut body = base.clone();
    body["constraint"] = json!({"always": {"mode": "boat"}});
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "constraint/always/mode");

    let (status, err) = call_json(&app, "POST", "/plan", "{\"from\": 3}").await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("InvalidRequest")));
    let (status, _) = call_json(&app, "POST", "/plan", "{\"frm\": \"g20\"}").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call_json(&app, "POST", "/plan", "[]").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let mut body = base.clone();
    body.as_object_mut().unwrap().remove("preferences");
    body["profile_id"] = json!("p404");
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownProfile")));

    let mut body = base.clone();
    body["datasets"] = json!(["crime"]);
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownDataset")));

    let mut body = base.clone();
    body["constraint"] = json!("G(aux_here(crime) <= 15)");
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::NOT_FOUND, Some("UnknownDataset")));

    let mut body = base.clone();
    body["to"] = json!("nowhere");
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("UnknownEndpoint")));

    let mut body = base.clone();
    body["depart"] = json!("8 o'clock");
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!((status, err["field"].as_str()), (StatusCode::BAD_REQUEST, Some("depart")));

    let mut body = base.clone();
    body["preferences"]["dollars_per_hour"] = json!(0);
    let (status, err) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["field"], "preferences.dollars_per_hour");
}

#[tokio::test]
async fn uploads_apply_to_later_plans_only() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = service("bob", dir.path());
    let before = state.snapshot();
    let (status, _) = call_json(&app, "POST", "/datasets?name=crime&radius=200", crime_csv()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert!(before.overlays.is_empty(), "earlier snapshots are unchanged");
    let after = state.snapshot();
    assert_eq!(after.overlays["crime"].radius, 200.0);

    // the newly uploaded dataset is visible to the next plan
    let body = json!({
        "from": "g20", "to": "g24", "depart": "08:00:00",
        "constraint": "G(aux_here(crime) <= 15)",
        "preferences": alice_answers(),
    });
    let (status, resp) = call_json(&app, "POST", "/plan", body.to_string()).await;
    assert_eq!((status, resp["status"].as_str()), (StatusCode::OK, Some("ok")));
}

#[tokio::test]
async fn state_survives_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let profile_id;
    {
        let (_, app) = service("bob", dir.path());
        call_json(&app, "POST", "/datasets?name=crime&radius=200", crime_csv()).await;
        let (_, profile) = call_json(&app, "POST", "/elicitation/answers", alice_answers().to_string()).await;
        profile_id = profile["id"].as_str().unwrap().to_string();
    }
    assert!(dir.path().join("index.json").exists());
    assert!(dir.path().join("datasets/crime-v1.csv").exists());

    let (state, app) = service("bob", dir.path());
    let reg = state.snapshot();
    assert_eq!(reg.datasets["crime"].overlay_version, 1);
    assert!(reg.profiles.contains_key(&profile_id));
    let (_, rec) = call_json(&app, "POST", "/datasets?name=crime&radius=200", crime_csv()).await;
    assert_eq!(rec["overlay_version"], 2);
    let (_, profile) = call_json(&app, "POST", "/elicitation/answers", alice_answers().to_string()).await;
    assert_ne!(profile["id"].as_str().unwrap(), profile_id);
}

#[tokio::test]
async fn full_and_bare_views_agree() {
    for case in cases() {
        let (status, bare) = common::service_plan(&case).await;
        assert_eq!(status, StatusCode::OK, "{}", case.name);

        let dir = tempfile::tempdir().unwrap();
        let (_, app) = service(case.graph, dir.path());
        if let Some((name, csv, radius)) = case.aux {
            let body = std::fs::read(fixture(csv)).unwrap();
            call(&app, "POST", &format!("/datasets?name={name}&radius={radius}"), body).await;
        }
        let (_, full) = call_json(&app, "POST", "/plan", case.request_body().to_string()).await;
        if full["status"] == "infeasible" {
            assert_eq!(serde_json::from_slice::<Value>(&bare).unwrap()["status"], "infeasible");
            continue;
        }
        let doc: ItineraryDoc = serde_json::from_value(full["itinerary"].clone()).unwrap();
        assert_eq!(itinerary_json(&doc).as_bytes(), &bare[..], "{}", case.name);
    }
}

#[tokio::test]
async fn health() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("square", dir.path());
    let (status, body) = call_json(&app, "GET", "/health", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["nodes"], 4);
}
