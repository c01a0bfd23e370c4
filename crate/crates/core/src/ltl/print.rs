use alloc::string::String;
use core::fmt::{self, Write};

use super::ast::{Atom, Bound, Comparison, LtlFormula, StateVar};

// Binding strength, loosest first.
const AFTER: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const UNARY: u8 = 4;

fn prec(f: &LtlFormula) -> u8 {
    match f {
        LtlFormula::After(..) => AFTER,
        LtlFormula::Or(..) => OR,
        LtlFormula::And(..) => AND,
        _ => UNARY,
    }
}

/// Canonical constraint text; [`super::parse`] reads it back to the same tree.
pub fn print(f: &LtlFormula) -> String {
    let mut out = String::new();
    write_formula(&mut out, f, 0).expect("writing to a String cannot fail");
    out
}

impl fmt::Display for LtlFormula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(out, self, 0)
    }
}

fn write_formula(out: &mut impl Write, f: &LtlFormula, min_prec: u8) -> fmt::Result {
    let paren = prec(f) < min_prec;
    if paren {
        out.write_char('(')?;
    }
    match f {
        LtlFormula::True => out.write_str("true")?,
        LtlFormula::False => out.write_str("false")?,
        LtlFormula::Atom(a) => write_atom(out, a)?,
        LtlFormula::Not(x) => write_unary(out, "!", x)?,
        LtlFormula::Next(x) => write_unary(out, "X", x)?,
        LtlFormula::Always(x) => write_unary(out, "G", x)?,
        LtlFormula::Eventually(x) => write_unary(out, "F", x)?,
        LtlFormula::And(a, b) => write_binary(out, a, " & ", b, AND, AND + 1)?,
        LtlFormula::Or(a, b) => write_binary(out, a, " | ", b, OR, OR + 1)?,
        // Junctions next to AFTER are parenthesized for readability even
        // though precedence would not require it.
        LtlFormula::After(a, b) => {
            let right = if matches!(**b, LtlFormula::After(..)) { AFTER } else { UNARY };
            write_binary(out, a, " AFTER ", b, UNARY, right)?
        }
    }
    if paren {
        out.write_char(')')?;
    }
    Ok(())
}

fn write_unary(out: &mut impl Write, op: &str, x: &LtlFormula) -> fmt::Result {
    out.write_str(op)?;
    out.write_char('(')?;
    write_formula(out, x, 0)?;
    out.write_char(')')
}

fn write_binary(
    out: &mut impl Write,
    a: &LtlFormula,
    op: &str,
    b: &LtlFormula,
    left: u8,
    right: u8,
) -> fmt::Result {
    write_formula(out, a, left)?;
    out.write_str(op)?;
    write_formula(out, b, right)
}

fn write_atom(out: &mut impl Write, a: &Atom) -> fmt::Result {
    match a {
        Atom::ModeIs(m) => write!(out, "mode={m}"),
        Atom::VarCmp(Comparison { var, op, bound }) => {
            match var {
                StateVar::Time(m) => write!(out, "time({m})")?,
                StateVar::Fare(m) => write!(out, "fare({m})")?,
                StateVar::Aux { dataset, agg } => write!(out, "aux({dataset},{})", agg.name())?,
                StateVar::AuxHere { dataset } => write!(out, "aux_here({dataset})")?,
                StateVar::Clock => out.write_str("clock")?,
            }
            write!(out, " {} ", op.symbol())?;
            match (var, bound) {
                (StateVar::Fare(_), Bound::Int(c)) => {
                    let sign = if *c < 0 { "-" } else { "" };
                    write!(out, "{sign}{}.{:02}", c.unsigned_abs() / 100, c.unsigned_abs() % 100)
                }
                (_, Bound::Int(v)) => write!(out, "{v}"),
                (_, Bound::Real(r)) => write!(out, "{}", r.get()),
            }
        }
    }
}
