//! Trajectory state variables, the preferential cost function and
//! coefficient elicitation.
//!
//! Cost is a monetary value:
//!
//! ```text
//! cost = beta_time * sum_M(alpha_M * hours_M) + sum_M(fare_M) + sum_d(beta_d * aux_sum_d)
//! ```
//!
//! Times are tracked in integer seconds and fares in integer cents; the
//! time term converts seconds to hours because `beta_time` is elicited in
//! dollars per hour.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::mode::Mode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PcfError {
    #[error("answer `{field}` must be positive, got {value}")]
    NonpositiveAnswer { field: String, value: f64 },
    #[error("missing answer `{0}`")]
    MissingAnswer(String),
    #[error("negative {quantity} in trajectory step: {value}")]
    NegativeQuantity { quantity: &'static str, value: i64 },
    #[error("step carries {got} aux scores but the state tracks {expected} datasets")]
    AuxArity { expected: usize, got: usize },
}

/// Running aggregates of one auxiliary dataset over the visited nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxAggregate {
    pub dataset: Arc<str>,
    pub sum: f64,
    pub max: f64,
    pub min: f64,
}

/// State variables of a trajectory prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVars {
    pub time_s: [u32; Mode::COUNT],
    pub fare_cents: [i64; Mode::COUNT],
    /// Seconds since departure.
    pub clock_s: u32,
    pub visited: u32,
    pub aux: Vec<AuxAggregate>,
}

impl StateVars {
    /// No time, fare or visited nodes yet.
    pub fn empty(datasets: &[Arc<str>]) -> Self {
        StateVars {
            time_s: [0; Mode::COUNT],
            fare_cents: [0; Mode::COUNT],
            clock_s: 0,
            visited: 0,
            aux: datasets
                .iter()
                .map(|d| AuxAggregate {
                    dataset: d.clone(),
                    sum: 0.0,
                    max: f64::NEG_INFINITY,
                    min: f64::INFINITY,
                })
                .collect(),
        }
    }

    /// State at the trip origin: the origin node counts as visited.
    pub fn at_origin(datasets: &[Arc<str>], origin_scores: &[f64]) -> Result<Self, PcfError> {
        let mut vars = Self::empty(datasets);
        vars.enter_node(origin_scores)?;
        Ok(vars)
    }

    pub fn time(&self, mode: Mode) -> u32 {
        self.time_s[mode.index()]
    }

    pub fn fare(&self, mode: Mode) -> i64 {
        self.fare_cents[mode.index()]
    }

    pub fn total_fare_cents(&self) -> i64 {
        self.fare_cents.iter().sum()
    }

    pub fn total_time_s(&self) -> u64 {
        self.time_s.iter().map(|&t| u64::from(t)).sum()
    }

    pub fn aux_index(&self, dataset: &str) -> Option<usize> {
        self.aux.iter().position(|a| &*a.dataset == dataset)
    }

    pub fn aux_avg(&self, i: usize) -> f64 {
        if self.visited == 0 {
            0.0
        } else {
            self.aux[i].sum / f64::from(self.visited)
        }
    }

    fn enter_node(&mut self, scores: &[f64]) -> Result<(), PcfError> {
        if scores.len() != self.aux.len() {
            return Err(PcfError::AuxArity {
                expected: self.aux.len(),
                got: scores.len(),
            });
        }
        for (agg, &s) in self.aux.iter_mut().zip(scores) {
            agg.sum += s;
            agg.max = agg.max.max(s);
            agg.min = agg.min.min(s);
        }
        self.visited += 1;
        Ok(())
    }
}

/// One move along a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct Step<'a> {
    pub mode: Mode,
    pub travel_s: i64,
    /// Time spent waiting before boarding; advances the clock.
    pub wait_s: i64,
    /// Whether waiting also counts towards the mode's travel time.
    pub wait_counts_as_travel: bool,
    pub fare_cents: i64,
    /// Scores of the node entered by this step, one per tracked dataset.
    pub node_scores: &'a [f64],
}

/// Folds one step into the state variables.
pub fn accumulate(vars: &StateVars, step: &Step<'_>) -> Result<StateVars, PcfError> {
    for (quantity, value) in [
        ("duration", step.travel_s),
        ("wait", step.wait_s),
        ("fare", step.fare_cents),
    ] {
        if value < 0 {
            return Err(PcfError::NegativeQuantity { quantity, value });
        }
    }
    let mut next = vars.clone();
    let m = step.mode.index();
    let attributed = step.travel_s + if step.wait_counts_as_travel { step.wait_s } else { 0 };
    next.time_s[m] = next.time_s[m].saturating_add(clamp_u32(attributed));
    if !step.mode.is_fare_free() {
        next.fare_cents[m] += step.fare_cents;
    }
    next.clock_s = next.clock_s.saturating_add(clamp_u32(step.travel_s + step.wait_s));
    next.enter_node(step.node_scores)?;
    Ok(next)
}

fn clamp_u32(v: i64) -> u32 {
    u32::try_from(v).unwrap_or(u32::MAX)
}

/// Elicited weights of the cost function.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile {
    /// Dimensionless per-mode weights relative to driving, by [`Mode::index`].
    pub alpha: [f64; Mode::COUNT],
    /// Dollars per hour of travel.
    pub beta_time: f64,
    /// Dollars per unit of auxiliary score, per dataset name.
    pub beta_aux: BTreeMap<String, f64>,
}

impl CoefficientProfile {
    /// Every mode weighted like driving.
    pub fn uniform(beta_time: f64) -> Self {
        CoefficientProfile {
            alpha: [1.0; Mode::COUNT],
            beta_time,
            beta_aux: BTreeMap::new(),
        }
    }

    pub fn alpha(&self, mode: Mode) -> f64 {
        self.alpha[mode.index()]
    }

    pub fn beta_aux(&self, dataset: &str) -> f64 {
        self.beta_aux.get(dataset).copied().unwrap_or(0.0)
    }
}

/// Answers to the two elicitation questions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ElicitationAnswers {
    /// Hours of driving judged equivalent to one hour of each other mode.
    pub hours_equivalent: BTreeMap<Mode, f64>,
    pub dollars_per_hour: f64,
    pub dollars_per_aux: BTreeMap<String, f64>,
}

pub fn derive_coefficients(answers: &ElicitationAnswers) -> Result<CoefficientProfile, PcfError> {
    let mut alpha = [0.0; Mode::COUNT];
    alpha[Mode::Car.index()] = 1.0;
    for mode in Mode::ALL.into_iter().filter(|&m| m != Mode::Car) {
        let value = *answers
            .hours_equivalent
            .get(&mode)
            .ok_or_else(|| PcfError::MissingAnswer(alloc::format!("hours_equivalent.{mode}")))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(PcfError::NonpositiveAnswer {
                field: alloc::format!("hours_equivalent.{mode}"),
                value,
            });
        }
        // one hour of `mode` equals `value` hours of driving: alpha_M * 1 = alpha_car * value
        alpha[mode.index()] = alpha[Mode::Car.index()] * value;
    }
    if !(answers.dollars_per_hour.is_finite() && answers.dollars_per_hour > 0.0) {
        return Err(PcfError::NonpositiveAnswer {
            field: "dollars_per_hour".into(),
            value: answers.dollars_per_hour,
        });
    }
    let mut beta_aux = BTreeMap::new();
    for (name, &value) in &answers.dollars_per_aux {
        if !(value.is_finite() && value >= 0.0) {
            return Err(PcfError::NonpositiveAnswer {
                field: alloc::format!("dollars_per_aux.{name}"),
                value,
            });
        }
        beta_aux.insert(name.clone(), value);
    }
    Ok(CoefficientProfile {
        alpha,
        beta_time: answers.dollars_per_hour,
        beta_aux,
    })
}

/// Preferential cost of a state, in dollars.
pub fn pcf(vars: &StateVars, profile: &CoefficientProfile) -> f64 {
    let weighted_seconds: f64 = Mode::ALL
        .iter()
        .map(|&m| profile.alpha(m) * f64::from(vars.time(m)))
        .sum();
    let fares = vars.total_fare_cents() as f64 / 100.0;
    let aux: f64 = vars
        .aux
        .iter()
        .map(|a| profile.beta_aux(&a.dataset) * a.sum)
        .sum();
    profile.beta_time * weighted_seconds / 3600.0 + fares + aux
}

/// Dollars rounded to whole cents.
pub fn to_cents(dollars: f64) -> i64 {
    libm::round(dollars * 100.0) as i64
}

/// Rates for the modes whose fare depends on distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FareConfig {
    pub taxi_base_usd: f64,
    pub taxi_per_km_usd: f64,
    pub car_per_km_usd: f64,
}

impl Default for FareConfig {
    fn default() -> Self {
        FareConfig {
            taxi_base_usd: 2.00,
            taxi_per_km_usd: 1.50,
            car_per_km_usd: 0.40,
        }
    }
}

impl FareConfig {
    /// Distance-based fare for one edge; the taxi base fare is charged
    /// separately on boarding.
    pub fn distance_fare_cents(&self, mode: Mode, length_m: f64) -> i64 {
        let per_km = match mode {
            Mode::Taxi => self.taxi_per_km_usd,
            Mode::Car => self.car_per_km_usd,
            _ => return 0,
        };
        to_cents(per_km * length_m / 1000.0)
    }

    pub fn taxi_base_cents(&self) -> i64 {
        to_cents(self.taxi_base_usd)
    }
}
