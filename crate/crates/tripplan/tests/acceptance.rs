//! Acceptance run: one PASS/FAIL line per criterion, each with its time
//! budget. Exits nonzero if any criterion fails.

mod common;

use std::collections::{BinaryHeap, HashSet};
use std::cmp::Reverse;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};

use tripplan::cli::{run_plan, PlanArgs};
use tripplan::io::{load_graph_dir, parse_aux_csv};
use tripplan_core::auxmetrics::{build_overlay, point_score, AuxDataset};
use tripplan_core::geodata::{great_circle_distance, LatLon, MapGraph, NodeIdx, Traversal};
use tripplan_core::mode::Mode;
use tripplan_core::pcf::{derive_coefficients, to_cents, ElicitationAnswers};
use tripplan_core::search::{plan, PlanOutcome, SearchOptions};
use tripplan_testkit::gen::{chain_agrees, random_aux_instance, random_formula, random_instance, random_trajectory};
use tripplan_testkit::ltl_oracle::check_depth3;
use tripplan_testkit::overlay_oracle::brute_force_scores;
use tripplan_testkit::route_oracle::{any_within_visits, check_admissible, check_itinerary, optimum_within};

use common::{call_json, cases, fixture, run_cli, service, service_plan};

type Outcome = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap()
}

// ---- elicitation

fn elicitation() -> Outcome {
    let answers = ElicitationAnswers {
        hours_equivalent: [(Mode::Walk, 3.0), (Mode::Bike, 2.0), (Mode::Public, 0.25), (Mode::Taxi, 0.5)]
            .into_iter()
            .collect(),
        dollars_per_hour: 20.0,
        dollars_per_aux: [("crime".to_string(), 1.0)].into_iter().collect(),
    };
    let p = derive_coefficients(&answers).map_err(|e| e.to_string())?;
    let expect = [(Mode::Walk, 3.0), (Mode::Bike, 2.0), (Mode::Car, 1.0), (Mode::Public, 0.25), (Mode::Taxi, 0.5)];
    for (m, a) in expect {
        ensure(p.alpha(m) == a, || format!("alpha_{m} = {} (want {a})", p.alpha(m)))?;
    }
    ensure(p.beta_time == 20.0, || format!("beta_T = {}", p.beta_time))?;
    ensure(p.beta_aux("crime") == 1.0, || format!("beta_A = {}", p.beta_aux("crime")))?;

    // the same answers through the service
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service("alice", dir.path());
    let body = json!({
        "hours_equivalent": {"walk": 3, "bike": 2, "public": 0.25, "taxi": 0.5},
        "dollars_per_hour": 20,
        "dollars_per_aux": {"crime": 1}
    });
    let (status, profile) = runtime().block_on(call_json(&app, "POST", "/elicitation/answers", body.to_string()));
    ensure(status == StatusCode::CREATED, || format!("service answered {status}"))?;
    let want = json!({"walk": 3.0, "bike": 2.0, "car": 1.0, "public": 0.25, "taxi": 0.5});
    ensure(profile["alpha"] == want, || format!("service alpha {}", profile["alpha"]))?;
    ensure(profile["beta_time"] == 20.0 && profile["beta_aux"]["crime"] == 1.0, || {
        format!("service betas {} {}", profile["beta_time"], profile["beta_aux"])
    })?;
    Ok("alpha=(3,2,1,0.25,0.5) beta_T=20 beta_A=1, library and service".into())
}

// ---- auxiliary scores

fn aux_scoring() -> Outcome {
    let mut rng = StdRng::seed_from_u64(20);
    let mut nodes = 0;
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let (graph, dataset, radius) = random_aux_instance(&mut rng, 200, 500);
        ensure((50.0..=1000.0).contains(&radius), || format!("radius {radius} out of range"))?;
        let overlay = build_overlay(&graph, &dataset, radius).map_err(|e| e.to_string())?;
        let expect = brute_force_scores(&graph, &dataset, radius);
        for (n, (&got, &want)) in overlay.scores().iter().zip(&expect).enumerate() {
            let d = (got - want).abs();
            worst = worst.max(d);
            ensure(d <= 1e-9, || format!("instance {i} node {n}: {got} vs {want}"))?;
        }
        nodes += graph.node_count();
    }

    let node = LatLon::new(41.88, -87.63);
    let north = |m: f64| LatLon::new(node.lat + m / 111_194.926_644_558_74, node.lon);
    let r = great_circle_distance(node, north(300.0));
    let half = LatLon::new(node.lat + (north(300.0).lat - node.lat) / 2.0, node.lon);
    let r_half = 2.0 * great_circle_distance(node, half);
    let cases = [
        (node, r, 1.0, "ED=0"),
        (half, r_half, 0.5, "ED=r/2"),
        (north(300.0), r, 0.0, "ED=r"),
        (north(600.0), r, 0.0, "ED=2r"),
    ];
    for (p, radius, want, label) in cases {
        let got = point_score(node, p, radius).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("{label}: score {got}, want {want}"))?;
    }
    Ok(format!("50 instances, {nodes} nodes, max diff {worst:.1e}; boundaries exact"))
}

// ---- temporal logic

fn ltl_agreement() -> Outcome {
    let mut rng = StdRng::seed_from_u64(30);
    for i in 0..10_000 {
        let (depth, len) = (rng.gen_range(1..=4), rng.gen_range(1..=6));
        let f = random_formula(&mut rng, depth);
        let t = random_trajectory(&mut rng, len);
        ensure(chain_agrees(&f, &t), || format!("pair {i}: {f}"))?;
    }
    Ok("10000 pairs agree".into())
}

fn ltl_soundness() -> Outcome {
    let report = check_depth3(4, 6);
    ensure(report.is_clean(), || format!("{:?}", report.examples))?;
    Ok(format!(
        "{} formulas, {} prefixes, 0 counterexamples",
        report.formulas, report.prefixes
    ))
}

// ---- planner

fn planner_optimality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(40);
    let (mut found, mut infeasible) = (0, 0);
    for i in 0..200 {
        let inst = random_instance(&mut rng, 12);
        let fail = |e: String| format!("instance {i} ({}): {e}", inst.request.constraint);
        let report = plan(&inst.graph, &inst.overlay_refs(), &inst.fares, &inst.request, &inst.options)
            .map_err(|e| fail(e.to_string()))?;
        match report.outcome {
            PlanOutcome::Found(it) => {
                check_itinerary(&inst, &it).map_err(fail)?;
                let (best, _) =
                    optimum_within(&inst, it.total_cost).ok_or_else(|| fail("oracle found nothing".into()))?;
                ensure(to_cents(best) == it.total_cost_cents(), || {
                    fail(format!("planner {} vs oracle {best}", it.total_cost))
                })?;
                found += 1;
            }
            PlanOutcome::Infeasible => {
                if let Some(w) = any_within_visits(&inst, 2) {
                    return Err(fail(format!("infeasible, but oracle found {:?}", w.moves)));
                }
                infeasible += 1;
            }
        }
    }
    Ok(format!("200 instances: {found} optimal, {infeasible} infeasible, all confirmed"))
}

fn heuristic_admissibility() -> Outcome {
    let mut rng = StdRng::seed_from_u64(40);
    let mut states = 0;
    for i in 0..200 {
        let mut inst = random_instance(&mut rng, 12);
        inst.options = SearchOptions {
            record_expansions: true,
            ..inst.options
        };
        let report = plan(&inst.graph, &inst.overlay_refs(), &inst.fares, &inst.request, &inst.options)
            .map_err(|e| e.to_string())?;
        for label in &report.expanded {
            check_admissible(&inst, &label.steps, label.g, label.h).map_err(|e| format!("instance {i}: {e}"))?;
        }
        states += report.expanded.len();
    }
    Ok(format!("{states} expanded states over the 200-instance corpus, 0 violations"))
}

// ---- fixtures

fn plan_json(args: &[String]) -> Result<Value, String> {
    let run = run_cli(args);
    ensure(run.code == 0, || format!("exit {}: {}", run.code, run.stderr))?;
    serde_json::from_str(&run.stdout).map_err(|e| e.to_string())
}

fn fixture_args(graph: &str, from: &str, to: &str, prefs: &str, extra: &[String]) -> Vec<String> {
    let mut args = vec![
        "plan".to_string(),
        "--graph".into(),
        fixture(graph).display().to_string(),
        "--from".into(),
        from.into(),
        "--to".into(),
        to.into(),
        "--depart".into(),
        "08:00:00".into(),
        "--prefs".into(),
        fixture(prefs).display().to_string(),
        "--json".into(),
    ];
    args.extend_from_slice(extra);
    args
}

fn leg_signature(it: &Value) -> Vec<(String, Vec<String>)> {
    it["legs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| {
            let nodes = l["nodes"].as_array().unwrap().iter().map(|n| n.as_str().unwrap().to_string()).collect();
            (l["mode"].as_str().unwrap().to_string(), nodes)
        })
        .collect()
}

fn alice_fixture() -> Outcome {
    let constraint = vec!["--constraints".to_string(), fixture("alice/constraint.ltl").display().to_string()];
    let it = plan_json(&fixture_args("alice", "H", "O", "alice/prefs.json", &constraint))?;
    let bike = it["totals"]["time_s"]["bike"].as_u64().unwrap();
    ensure((1200..=1800).contains(&bike), || format!("T_bike = {bike}"))?;
    let modes: Vec<String> = leg_signature(&it).into_iter().map(|(m, _)| m).collect();
    ensure(!modes.iter().any(|m| m == "car"), || format!("car leg in {modes:?}"))?;

    let flipped = plan_json(&fixture_args("alice", "H", "O", "alice/prefs_public_averse.json", &constraint))?;
    ensure(leg_signature(&flipped) != leg_signature(&it), || {
        "raising alpha_public above alpha_walk left the route unchanged".into()
    })?;
    let flipped_modes: Vec<String> = leg_signature(&flipped).into_iter().map(|(m, _)| m).collect();
    Ok(format!(
        "T_bike={bike}s via {}; with alpha_public=4 > alpha_walk: {}",
        modes.join("+"),
        flipped_modes.join("+")
    ))
}

/// Least total travel time between two nodes over fixed-duration edges.
fn fastest_time(graph: &MapGraph, from: NodeIdx, to: NodeIdx) -> Option<u32> {
    let mut best = vec![u32::MAX; graph.node_count()];
    let mut heap = BinaryHeap::new();
    best[from.index()] = 0;
    heap.push(Reverse((0u32, from.0)));
    while let Some(Reverse((t, n))) = heap.pop() {
        if n == to.0 {
            return Some(t);
        }
        if t > best[n as usize] {
            continue;
        }
        for e in graph.out_edges(NodeIdx(n)) {
            if let Traversal::Fixed { duration_s } = e.traversal {
                let nt = t + duration_s;
                if nt < best[e.to.index()] {
                    best[e.to.index()] = nt;
                    heap.push(Reverse((nt, e.to.0)));
                }
            }
        }
    }
    None
}

/// Recomputes an itinerary's cost from its totals and a set of answers.
fn recomputed_cost(it: &Value, prefs: &Value) -> f64 {
    let alpha = |m: &str| {
        if m == "car" {
            1.0
        } else {
            prefs["hours_equivalent"][m].as_f64().unwrap()
        }
    };
    let beta_t = prefs["dollars_per_hour"].as_f64().unwrap();
    let beta_a = prefs["dollars_per_aux"]["crime"].as_f64().unwrap_or(0.0);
    let time: f64 = it["totals"]["time_s"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(m, t)| alpha(m) * t.as_f64().unwrap() / 3600.0)
        .sum();
    let aux = it["totals"]["aux"]["crime"]["sum"].as_f64().unwrap_or(0.0);
    beta_t * time + it["totals"]["fare"].as_f64().unwrap() + beta_a * aux
}

fn bob_fixture() -> Outcome {
    let bundle = load_graph_dir(&fixture("bob")).map_err(|e| e.to_string())?;
    let graph = &bundle.graph;
    let points = parse_aux_csv(&std::fs::read_to_string(fixture("bob/crime.csv")).unwrap()).map_err(|e| e.to_string())?;
    let dataset = AuxDataset::new("crime", "crime", points, 200.0).map_err(|e| e.to_string())?;
    let scores = brute_force_scores(graph, &dataset, 200.0);
    let hot: HashSet<String> = graph
        .nodes()
        .iter()
        .zip(&scores)
        .filter(|(_, &s)| s > 15.0)
        .map(|(n, _)| n.id.clone())
        .collect();
    ensure(!hot.is_empty(), || "fixture has no node scoring above 15".into())?;

    let aux = vec!["--aux".to_string(), format!("crime={}:200", fixture("bob/crime.csv").display())];
    let constrained_args: Vec<String> =
        [aux.clone(), vec!["--constraints".into(), fixture("bob/constraint.ltl").display().to_string()]].concat();
    let safe = plan_json(&fixture_args("bob", "g20", "g24", "bob/prefs.json", &constrained_args))?;
    let fastest = plan_json(&fixture_args("bob", "g20", "g24", "bob/prefs_indifferent.json", &aux))?;

    let visits = |it: &Value| -> Vec<String> { leg_signature(it).into_iter().flat_map(|(_, n)| n).collect() };
    let safe_nodes = visits(&safe);
    let fast_nodes = visits(&fastest);
    ensure(safe_nodes.iter().all(|n| !hot.contains(n)), || format!("constrained route visits {safe_nodes:?}"))?;
    ensure(fast_nodes.iter().any(|n| hot.contains(n)), || "fastest route avoids the hot spot already".into())?;

    let (from, to) = (graph.node_index("g20").unwrap(), graph.node_index("g24").unwrap());
    let quickest = fastest_time(graph, from, to).ok_or("no route")?;
    let fast_t = fastest["duration_s"].as_u64().unwrap();
    let safe_t = safe["duration_s"].as_u64().unwrap();
    ensure(fast_t == u64::from(quickest), || format!("beta_A=0 route takes {fast_t}s, fastest is {quickest}s"))?;
    ensure(safe_t > fast_t, || format!("constrained {safe_t}s vs fastest {fast_t}s"))?;

    let bob: Value = serde_json::from_str(&std::fs::read_to_string(fixture("bob/prefs.json")).unwrap()).unwrap();
    let safe_cost = recomputed_cost(&safe, &bob);
    let fast_cost = recomputed_cost(&fastest, &bob);
    ensure((safe_cost - safe["total_cost"].as_f64().unwrap()).abs() < 0.005, || {
        format!("reported {} vs recomputed {safe_cost}", safe["total_cost"])
    })?;
    ensure(safe_cost < fast_cost, || format!("PCF {safe_cost} vs fastest route's {fast_cost}"))?;
    Ok(format!(
        "avoids {} nodes; {safe_t}s > {fast_t}s, PCF ${safe_cost:.2} < ${fast_cost:.2}; beta_A=0 recovers the {quickest}s route",
        hot.len()
    ))
}

// ---- parity

fn parity() -> Outcome {
    let rt = runtime();
    let all = cases();
    let mut infeasible = 0;
    for case in &all {
        let cli = run_cli(&[case.cli_args(), vec!["--json".to_string()]].concat());
        let (status, body) = rt.block_on(service_plan(case));
        ensure(status == StatusCode::OK, || format!("{}: service answered {status}", case.name))?;
        match cli.code {
            0 => ensure(cli.stdout.as_bytes() == &body[..], || format!("{}: outputs differ", case.name))?,
            3 => {
                let doc: Value = serde_json::from_slice(&body).map_err(|e| e.to_string())?;
                ensure(doc["status"] == "infeasible", || format!("{}: only the CLI found it infeasible", case.name))?;
                infeasible += 1;
            }
            code => return Err(format!("{}: CLI exit {code}: {}", case.name, cli.stderr)),
        }
    }
    // the in-process CLI entry point prints the same bytes as the binary
    let case = &all[0];
    let args = PlanArgs {
        graph: fixture(case.graph),
        from: case.from.into(),
        to: case.to.into(),
        depart: case.depart.into(),
        constraints: case.constraint.map(fixture),
        prefs: fixture(case.prefs),
        aux: vec![],
        json: true,
        geojson: false,
        no_default_constraint: false,
        modes: None,
    };
    let mut out = Vec::new();
    ensure(run_plan(&args, &mut out, &mut std::io::sink()) == 0, || "in-process run failed".into())?;
    let binary = run_cli(&[case.cli_args(), vec!["--json".to_string()]].concat());
    ensure(out == binary.stdout.as_bytes(), || "in-process output differs from the binary".into())?;
    Ok(format!("{} fixture requests byte-identical ({infeasible} infeasible on both)", all.len()))
}

struct Criterion {
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "elicitation exactness", budget: Duration::from_secs(1), check: elicitation },
        Criterion { name: "aux scoring oracle", budget: Duration::from_secs(30), check: aux_scoring },
        Criterion { name: "LTL evaluator agreement", budget: Duration::from_secs(60), check: ltl_agreement },
        Criterion { name: "progression soundness", budget: Duration::from_secs(300), check: ltl_soundness },
        Criterion { name: "planner optimality", budget: Duration::from_secs(300), check: planner_optimality },
        Criterion { name: "heuristic admissibility", budget: Duration::from_secs(300), check: heuristic_admissibility },
        Criterion { name: "Alice-shape fixture", budget: Duration::from_secs(10), check: alice_fixture },
        Criterion { name: "Bob-shape fixture", budget: Duration::from_secs(10), check: bob_fixture },
        Criterion { name: "CLI/service parity", budget: Duration::from_secs(300), check: parity },
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = started.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > c.budget {
                Err(format!("took {elapsed:.2?}, budget {:?} ({detail})", c.budget))
            } else {
                Ok(detail)
            }
        });
        match result {
            Ok(detail) => println!("PASS  {:<24} {:>9.2?}  {detail}", c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:<24} {:>9.2?}  {why}", c.name, elapsed);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
