//! Constraints on the wire: either constraint text or a JSON tree.
//!
//! ```json
//! {"and": [{"always": {"not": {"mode": "car"}}},
//!          {"eventually": {"var": "time", "mode": "bike", "op": ">=", "value": 1200}}]}
//! ```
//!
//! Connectives are `not`, `next`, `always`, `eventually` (one operand),
//! `and`, `or` (two or more, folded to the right) and `after` (`[trigger,
//! then]`); `true` and `false` are JSON booleans. Fares are in dollars, as in
//! the text syntax.

use serde_json::{json, Map, Value};

use tripplan_core::ltl::{parse, Atom, AuxAgg, Bound, CmpOp, Comparison, LtlError, LtlFormula, StateVar};
use tripplan_core::mode::Mode;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintError {
    #[error(transparent)]
    Text(#[from] LtlError),
    /// `path` is a JSON pointer into the constraint tree.
    #[error("constraint tree at `{path}`: {message}")]
    Tree { path: String, message: String },
}

/// Text or tree, whichever `doc` holds.
pub fn read_constraint(doc: &Value) -> Result<LtlFormula, ConstraintError> {
    match doc {
        Value::String(text) => Ok(parse(text)?),
        other => from_json(other),
    }
}

/// A constraint file: JSON if it starts with `{`, otherwise constraint text.
pub fn read_constraint_file(text: &str) -> Result<LtlFormula, ConstraintError> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| tree_error("", e.to_string()))?;
        from_json(&doc)
    } else {
        Ok(parse(text.trim())?)
    }
}

fn tree_error(path: &str, message: impl Into<String>) -> ConstraintError {
    ConstraintError::Tree {
        path: path.to_string(),
        message: message.into(),
    }
}

pub fn from_json(doc: &Value) -> Result<LtlFormula, ConstraintError> {
    let f = node(doc, "")?;
    if let Err(e) = check_triggers(&f) {
        return Err(tree_error("", e));
    }
    Ok(f)
}

fn check_triggers(f: &LtlFormula) -> Result<(), &'static str> {
    if f.is_progressable() {
        Ok(())
    } else {
        Err("the trigger of `after` must not contain temporal operators")
    }
}

fn node(doc: &Value, path: &str) -> Result<LtlFormula, ConstraintError> {
    let obj = match doc {
        Value::Bool(true) => return Ok(LtlFormula::True),
        Value::Bool(false) => return Ok(LtlFormula::False),
        Value::Object(o) => o,
        _ => return Err(tree_error(path, "expected an object or a boolean")),
    };
    if obj.contains_key("var") {
        return comparison(obj, path).map(LtlFormula::Atom);
    }
    if let Some(m) = obj.get("mode") {
        if obj.len() != 1 {
            return Err(tree_error(path, "a mode atom has only the `mode` key"));
        }
        return Ok(LtlFormula::atom(Atom::ModeIs(mode(m, &format!("{path}/mode"))?)));
    }
    let mut keys = obj.keys();
    let (Some(op), None) = (keys.next(), keys.next()) else {
        return Err(tree_error(path, "expected exactly one connective"));
    };
    let arg = &obj[op];
    let sub = format!("{path}/{op}");
    let unary = |wrap: fn(LtlFormula) -> LtlFormula| node(arg, &sub).map(wrap);
    match op.as_str() {
        "not" => unary(LtlFormula::not),
        "next" => unary(LtlFormula::next),
        "always" => unary(LtlFormula::always),
        "eventually" => unary(LtlFormula::eventually),
        "and" | "or" => {
            let items = arg
                .as_array()
                .filter(|a| a.len() >= 2)
                .ok_or_else(|| tree_error(&sub, "expected an array of at least two formulas"))?;
            let mut parts = items
                .iter()
                .enumerate()
                .map(|(i, x)| node(x, &format!("{sub}/{i}")))
                .collect::<Result<Vec<_>, _>>()?;
            let join = if op == "and" { LtlFormula::and } else { LtlFormula::or };
            let mut acc = parts.pop().expect("at least two parts");
            while let Some(p) = parts.pop() {
                acc = join(p, acc);
            }
            Ok(acc)
        }
        "after" => {
            let items = arg
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| tree_error(&sub, "expected [trigger, then]"))?;
            Ok(LtlFormula::after(
                node(&items[0], &format!("{sub}/0"))?,
                node(&items[1], &format!("{sub}/1"))?,
            ))
        }
        other => Err(tree_error(path, format!("unknown connective `{other}`"))),
    }
}

fn mode(v: &Value, path: &str) -> Result<Mode, ConstraintError> {
    v.as_str()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| tree_error(path, "expected one of walk, bike, car, public, taxi"))
}

fn comparison(obj: &Map<String, Value>, path: &str) -> Result<Atom, ConstraintError> {
    let get = |k: &str| obj.get(k).ok_or_else(|| tree_error(path, format!("missing `{k}`")));
    let text = |k: &str| -> Result<&str, ConstraintError> {
        get(k)?
            .as_str()
            .ok_or_else(|| tree_error(&format!("{path}/{k}"), "expected a string"))
    };
    let op = CmpOp::parse(text("op")?).ok_or_else(|| tree_error(&format!("{path}/op"), "expected <, <=, =, >= or >"))?;
    let value = get("value")?
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or_else(|| tree_error(&format!("{path}/value"), "expected a number"))?;
    let whole = |v: f64, what: &str| -> Result<i64, ConstraintError> {
        if v.fract() == 0.0 && v.abs() < 9e15 {
            Ok(v as i64)
        } else {
            Err(tree_error(&format!("{path}/value"), format!("expected whole {what}")))
        }
    };
    let (var, bound, allowed): (StateVar, Bound, &[&str]) = match text("var")? {
        "time" => (
            StateVar::Time(mode(get("mode")?, &format!("{path}/mode"))?),
            Bound::Int(whole(value, "seconds")?),
            &["var", "mode", "op", "value"],
        ),
        "fare" => (
            StateVar::Fare(mode(get("mode")?, &format!("{path}/mode"))?),
            Bound::Int(whole((value * 100.0 * 1e6).round() / 1e6, "cents")?),
            &["var", "mode", "op", "value"],
        ),
        "clock" => (StateVar::Clock, Bound::Int(whole(value, "seconds")?), &["var", "op", "value"]),
        "aux" => {
            let agg = AuxAgg::parse(text("agg")?)
                .ok_or_else(|| tree_error(&format!("{path}/agg"), "expected sum, max, min or avg"))?;
            (
                StateVar::Aux {
                    dataset: text("dataset")?.to_string(),
                    agg,
                },
                Bound::Real(tripplan_core::ltl::Real::new(value)),
                &["var", "dataset", "agg", "op", "value"],
            )
        }
        "aux_here" => (
            StateVar::AuxHere {
                dataset: text("dataset")?.to_string(),
            },
            Bound::Real(tripplan_core::ltl::Real::new(value)),
            &["var", "dataset", "op", "value"],
        ),
        other => return Err(tree_error(&format!("{path}/var"), format!("unknown variable `{other}`"))),
    };
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(tree_error(path, format!("unexpected key `{k}`")));
    }
    Ok(Atom::VarCmp(Comparison { var, op, bound }))
}

/// The tree form of `f`; [`from_json`] inverts it exactly.
pub fn to_json(f: &LtlFormula) -> Value {
    match f {
        LtlFormula::True => Value::Bool(true),
        LtlFormula::False => Value::Bool(false),
        LtlFormula::Atom(Atom::ModeIs(m)) => json!({ "mode": m.name() }),
        LtlFormula::Atom(Atom::VarCmp(c)) => {
            let mut o = Map::new();
            match &c.var {
                StateVar::Time(m) => {
                    o.insert("var".into(), "time".into());
                    o.insert("mode".into(), m.name().into());
                }
                StateVar::Fare(m) => {
                    o.insert("var".into(), "fare".into());
                    o.insert("mode".into(), m.name().into());
                }
                StateVar::Clock => {
                    o.insert("var".into(), "clock".into());
                }
                StateVar::Aux { dataset, agg } => {
                    o.insert("var".into(), "aux".into());
                    o.insert("dataset".into(), dataset.as_str().into());
                    o.insert("agg".into(), agg.name().into());
                }
                StateVar::AuxHere { dataset } => {
                    o.insert("var".into(), "aux_here".into());
                    o.insert("dataset".into(), dataset.as_str().into());
                }
            }
            o.insert("op".into(), c.op.symbol().into());
            let value = match (&c.var, c.bound) {
                (StateVar::Fare(_), Bound::Int(cents)) => json!(cents as f64 / 100.0),
                (_, Bound::Int(v)) => json!(v),
                (_, Bound::Real(r)) => json!(r.get()),
            };
            o.insert("value".into(), value);
            Value::Object(o)
        }
        LtlFormula::Not(x) => json!({ "not": to_json(x) }),
        LtlFormula::Next(x) => json!({ "next": to_json(x) }),
        LtlFormula::Always(x) => json!({ "always": to_json(x) }),
        LtlFormula::Eventually(x) => json!({ "eventually": to_json(x) }),
        LtlFormula::And(a, b) => json!({ "and": [to_json(a), to_json(b)] }),
        LtlFormula::Or(a, b) => json!({ "or": [to_json(a), to_json(b)] }),
        LtlFormula::After(a, b) => json!({ "after": [to_json(a), to_json(b)] }),
    }
}
