use std::sync::Arc;

use proptest::prelude::*;

use tripplan_core::mode::Mode;
use tripplan_core::pcf::{accumulate, derive_coefficients, pcf, CoefficientProfile, ElicitationAnswers, StateVars, Step};

fn alice() -> CoefficientProfile {
    let mut a = ElicitationAnswers {
        dollars_per_hour: 20.0,
        ..Default::default()
    };
    for (m, h) in [(Mode::Walk, 3.0), (Mode::Bike, 2.0), (Mode::Public, 0.25), (Mode::Taxi, 0.5)] {
        a.hours_equivalent.insert(m, h);
    }
    a.dollars_per_aux.insert("crime".into(), 1.0);
    derive_coefficients(&a).unwrap()
}

fn mode() -> impl Strategy<Value = Mode> {
    prop::sample::select(Mode::ALL.to_vec())
}

fn profile() -> impl Strategy<Value = CoefficientProfile> {
    (prop::array::uniform5(0.0..5.0f64), 0.0..60.0f64, 0.0..3.0f64).prop_map(|(alpha, beta_time, beta)| {
        let mut p = CoefficientProfile::uniform(beta_time);
        p.alpha = alpha;
        p.alpha[Mode::Car.index()] = 1.0;
        p.beta_aux.insert("crime".into(), beta);
        p
    })
}

#[derive(Debug, Clone)]
struct RawStep {
    mode: Mode,
    travel: i64,
    wait: i64,
    fare: i64,
    score: f64,
}

fn steps() -> impl Strategy<Value = Vec<RawStep>> {
    prop::collection::vec(
        (mode(), 0..4000i64, 0..900i64, 0..1500i64, 0.0..4.0f64).prop_map(|(mode, travel, wait, fare, score)| RawStep {
            mode,
            travel,
            wait,
            fare,
            score,
        }),
        0..12,
    )
}

fn fold(steps: &[RawStep]) -> StateVars {
    let ds: Vec<Arc<str>> = vec!["crime".into()];
    let mut v = StateVars::at_origin(&ds, &[0.5]).unwrap();
    for s in steps {
        v = accumulate(
            &v,
            &Step {
                mode: s.mode,
                travel_s: s.travel,
                wait_s: s.wait,
                wait_counts_as_travel: true,
                fare_cents: s.fare,
                node_scores: &[s.score],
            },
        )
        .unwrap();
    }
    v
}

proptest! {
    #[test]
    fn cost_is_linear_in_each_time(p in profile(), path in steps(), m in mode(), delta in 0u32..20_000) {
        let v = fold(&path);
        let mut w = v.clone();
        w.time_s[m.index()] += delta;
        let diff = pcf(&w, &p) - pcf(&v, &p);
        let expect = p.beta_time * p.alpha(m) * f64::from(delta) / 3600.0;
        prop_assert!((diff - expect).abs() <= 1e-9 * pcf(&w, &p).max(1.0));
    }

    #[test]
    fn cost_is_nonnegative_and_monotone(p in profile(), path in steps()) {
        let mut prev = 0.0;
        for k in 0..=path.len() {
            let c = pcf(&fold(&path[..k]), &p);
            prop_assert!(c >= 0.0);
            prop_assert!(c >= prev - 1e-9);
            prev = c;
        }
    }

    #[test]
    fn folding_matches_batch_totals(path in steps()) {
        let v = fold(&path);
        for m in Mode::ALL {
            let on = |s: &&RawStep| s.mode == m;
            let time: i64 = path.iter().filter(on).map(|s| s.travel + s.wait).sum();
            let fare: i64 = if m.is_fare_free() { 0 } else { path.iter().filter(on).map(|s| s.fare).sum() };
            prop_assert_eq!(i64::from(v.time(m)), time);
            prop_assert_eq!(v.fare(m), fare);
        }
        let clock: i64 = path.iter().map(|s| s.travel + s.wait).sum();
        prop_assert_eq!(i64::from(v.clock_s), clock);
        let scores: Vec<f64> = std::iter::once(0.5).chain(path.iter().map(|s| s.score)).collect();
        let sum: f64 = scores.iter().sum();
        prop_assert!((v.aux[0].sum - sum).abs() <= 1e-9);
        prop_assert_eq!(v.aux[0].max, scores.iter().cloned().fold(f64::MIN, f64::max));
        prop_assert_eq!(v.aux[0].min, scores.iter().cloned().fold(f64::MAX, f64::min));
        prop_assert!((v.aux[0].sum - v.aux_avg(0) * f64::from(v.visited)).abs() <= 1e-9);
        prop_assert!(v.aux[0].min <= v.aux_avg(0) + 1e-12 && v.aux_avg(0) <= v.aux[0].max + 1e-12);
    }

    #[test]
    fn splitting_a_path_does_not_change_totals(path in steps(), cut in 0usize..12) {
        let cut = cut.min(path.len());
        let whole = fold(&path);
        let mut v = fold(&path[..cut]);
        for s in &path[cut..] {
            v = accumulate(&v, &Step {
                mode: s.mode,
                travel_s: s.travel,
                wait_s: s.wait,
                wait_counts_as_travel: true,
                fare_cents: s.fare,
                node_scores: &[s.score],
            }).unwrap();
        }
        prop_assert_eq!(v, whole);
    }

    #[test]
    fn alice_ranks_modes_by_weight(seconds in 1u32..20_000) {
        let p = alice();
        let cost = |m: Mode| {
            let mut v = StateVars::empty(&[]);
            v.time_s[m.index()] = seconds;
            pcf(&v, &p)
        };
        let order = [Mode::Public, Mode::Taxi, Mode::Car, Mode::Bike, Mode::Walk];
        for w in order.windows(2) {
            prop_assert!(cost(w[0]) < cost(w[1]));
        }
    }
}
