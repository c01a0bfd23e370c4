//! Recursive-descent parser for the constraint language.
//!
//! ```text
//! formula := or ("AFTER" formula)?             right associative
//! or      := and ("|" and)*
//! and     := unary ("&" unary)*
//! unary   := "!" unary | ("X" | "G" | "F") unary | primary
//! primary := "(" formula ")" | "true" | "false" | atom
//! atom    := "mode" "=" MODE
//!          | "time" "(" MODE ")" OP INT          seconds
//!          | "fare" "(" MODE ")" OP DECIMAL      dollars, at most two decimals
//!          | "aux" "(" NAME "," AGG ")" OP NUMBER
//!          | "aux_here" "(" NAME ")" OP NUMBER
//!          | "clock" OP INT                      seconds since departure
//! ```

use alloc::string::{String, ToString};

use super::ast::{Atom, AuxAgg, CmpOp, LtlFormula};
use super::LtlError;
use crate::mode::Mode;

#[derive(Debug, Clone, PartialEq)]
enum Tok<'s> {
    Ident(&'s str),
    Number(&'s str),
    LParen,
    RParen,
    Comma,
    Bang,
    Amp,
    Pipe,
    Cmp(CmpOp),
    Eof,
}

struct Lexer<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Lexer<'s> {
    fn skip_ws(&mut self) {
        let rest = &self.src[self.pos..];
        self.pos += rest.len() - rest.trim_start().len();
    }

    /// Next token and its byte offset.
    fn next(&mut self) -> Result<(Tok<'s>, usize), LtlError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let Some(&c) = bytes.get(start) else {
            return Ok((Tok::Eof, start));
        };
        let single = |t| Ok((t, start));
        self.pos += 1;
        match c {
            b'(' => single(Tok::LParen),
            b')' => single(Tok::RParen),
            b',' => single(Tok::Comma),
            b'&' => single(Tok::Amp),
            b'|' => single(Tok::Pipe),
            b'!' => single(Tok::Bang),
            b'=' => single(Tok::Cmp(CmpOp::Eq)),
            b'<' | b'>' => {
                let strict = if c == b'<' { CmpOp::Lt } else { CmpOp::Gt };
                if bytes.get(self.pos) == Some(&b'=') {
                    self.pos += 1;
                    single(if c == b'<' { CmpOp::Le } else { CmpOp::Ge }.into())
                } else {
                    single(strict.into())
                }
            }
            b'-' | b'0'..=b'9' | b'.' => {
                while self
                    .src
                    .as_bytes()
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit() || *b == b'.')
                {
                    self.pos += 1;
                }
                Ok((Tok::Number(&self.src[start..self.pos]), start))
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while self
                    .src
                    .as_bytes()
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_' || *b == b'-')
                {
                    self.pos += 1;
                }
                Ok((Tok::Ident(&self.src[start..self.pos]), start))
            }
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                Err(LtlError::syntax(start, alloc::format!("unexpected character `{ch}`")))
            }
        }
    }
}

impl From<CmpOp> for Tok<'_> {
    fn from(op: CmpOp) -> Self {
        Tok::Cmp(op)
    }
}

struct Parser<'s> {
    lexer: Lexer<'s>,
    tok: Tok<'s>,
    at: usize,
}

/// Parses constraint text into a formula.
pub fn parse(text: &str) -> Result<LtlFormula, LtlError> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let (tok, at) = lexer.next()?;
    let mut p = Parser { lexer, tok, at };
    let f = p.formula()?;
    if p.tok != Tok::Eof {
        return Err(LtlError::syntax(p.at, "unexpected trailing input"));
    }
    Ok(f)
}

impl<'s> Parser<'s> {
    fn bump(&mut self) -> Result<(Tok<'s>, usize), LtlError> {
        let (tok, at) = self.lexer.next()?;
        let prev = core::mem::replace(&mut self.tok, tok);
        let prev_at = core::mem::replace(&mut self.at, at);
        Ok((prev, prev_at))
    }

    fn expect(&mut self, want: Tok<'static>, what: &str) -> Result<(), LtlError> {
        if self.tok == want {
            self.bump()?;
            Ok(())
        } else {
            Err(LtlError::syntax(self.at, alloc::format!("expected {what}")))
        }
    }

    fn formula(&mut self) -> Result<LtlFormula, LtlError> {
        let start = self.at;
        let lhs = self.or()?;
        if self.tok == Tok::Ident("AFTER") {
            self.bump()?;
            if !lhs.is_state_formula() {
                return Err(LtlError::UnsupportedProgression { position: Some(start) });
            }
            let rhs = self.formula()?;
            return Ok(LtlFormula::after(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<LtlFormula, LtlError> {
        let mut f = self.and()?;
        while self.tok == Tok::Pipe {
            self.bump()?;
            f = LtlFormula::or(f, self.and()?);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<LtlFormula, LtlError> {
        let mut f = self.unary()?;
        while self.tok == Tok::Amp {
            self.bump()?;
            f = LtlFormula::and(f, self.unary()?);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<LtlFormula, LtlError> {
        let wrap: fn(LtlFormula) -> LtlFormula = match self.tok {
            Tok::Bang => LtlFormula::not,
            Tok::Ident("X") => LtlFormula::next,
            Tok::Ident("G") => LtlFormula::always,
            Tok::Ident("F") => LtlFormula::eventually,
            _ => return self.primary(),
        };
        self.bump()?;
        Ok(wrap(self.unary()?))
    }

    fn primary(&mut self) -> Result<LtlFormula, LtlError> {
        match self.tok.clone() {
            Tok::LParen => {
                self.bump()?;
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::Ident("true") => {
                self.bump()?;
                Ok(LtlFormula::True)
            }
            Tok::Ident("false") => {
                self.bump()?;
                Ok(LtlFormula::False)
            }
            Tok::Ident(name) => self.atom(name).map(LtlFormula::Atom),
            Tok::Eof => Err(LtlError::syntax(self.at, "expected a formula, found end of input")),
            _ => Err(LtlError::syntax(self.at, "expected a formula")),
        }
    }

    fn atom(&mut self, name: &'s str) -> Result<Atom, LtlError> {
        let name_at = self.at;
        match name {
            "mode" => {
                self.bump()?;
                self.expect(Tok::Cmp(CmpOp::Eq), "`=` after `mode`")?;
                Ok(Atom::ModeIs(self.mode()?))
            }
            "time" | "fare" => {
                self.bump()?;
                self.expect(Tok::LParen, "`(`")?;
                let mode = self.mode()?;
                self.expect(Tok::RParen, "`)`")?;
                let op = self.cmp_op()?;
                if name == "time" {
                    Ok(Atom::time(mode, op, self.integer()?))
                } else {
                    Ok(Atom::fare(mode, op, self.cents()?))
                }
            }
            "aux" => {
                self.bump()?;
                self.expect(Tok::LParen, "`(`")?;
                let dataset = self.name("dataset name")?;
                self.expect(Tok::Comma, "`,`")?;
                let agg_at = self.at;
                let agg_name = self.name("aggregate")?;
                let agg = AuxAgg::parse(&agg_name).ok_or_else(|| {
                    LtlError::syntax(agg_at, "expected one of sum, max, min, avg")
                })?;
                self.expect(Tok::RParen, "`)`")?;
                let op = self.cmp_op()?;
                Ok(Atom::aux(dataset, agg, op, self.real()?))
            }
            "aux_here" => {
                self.bump()?;
                self.expect(Tok::LParen, "`(`")?;
                let dataset = self.name("dataset name")?;
                self.expect(Tok::RParen, "`)`")?;
                let op = self.cmp_op()?;
                Ok(Atom::aux_here(dataset, op, self.real()?))
            }
            "clock" => {
                self.bump()?;
                let op = self.cmp_op()?;
                Ok(Atom::clock(op, self.integer()?))
            }
            "X" | "G" | "F" | "AFTER" => Err(LtlError::syntax(name_at, "expected a formula")),
            other => Err(LtlError::UnknownVariable {
                position: name_at,
                name: other.to_string(),
            }),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, LtlError> {
        match self.tok {
            Tok::Ident(s) => {
                self.bump()?;
                Ok(s.to_string())
            }
            _ => Err(LtlError::syntax(self.at, alloc::format!("expected {what}"))),
        }
    }

    fn mode(&mut self) -> Result<Mode, LtlError> {
        let at = self.at;
        let name = self.name("a transportation mode")?;
        name.parse().map_err(|_| LtlError::UnknownMode { position: at, name })
    }

    fn cmp_op(&mut self) -> Result<CmpOp, LtlError> {
        match self.tok {
            Tok::Cmp(op) => {
                self.bump()?;
                Ok(op)
            }
            _ => Err(LtlError::syntax(self.at, "expected a comparison operator")),
        }
    }

    fn number(&mut self) -> Result<(&'s str, usize), LtlError> {
        match self.tok {
            Tok::Number(s) => {
                let at = self.at;
                self.bump()?;
                Ok((s, at))
            }
            _ => Err(LtlError::syntax(self.at, "expected a number")),
        }
    }

    fn integer(&mut self) -> Result<i64, LtlError> {
        let (s, at) = self.number()?;
        s.parse().map_err(|_| LtlError::syntax(at, "expected an integer number of seconds"))
    }

    fn cents(&mut self) -> Result<i64, LtlError> {
        let (s, at) = self.number()?;
        parse_cents(s).ok_or_else(|| LtlError::syntax(at, "expected dollars with at most two decimals"))
    }

    fn real(&mut self) -> Result<f64, LtlError> {
        let (s, at) = self.number()?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(LtlError::syntax(at, "expected a number")),
        }
    }
}

/// Exact decimal dollars to cents, e.g. `"2.5"` to 250.
pub(crate) fn parse_cents(s: &str) -> Option<i64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) || frac.len() > 2 {
        return None;
    }
    if body.contains('.') && frac.is_empty() {
        return None;
    }
    let whole: i64 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
    let mut f: i64 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    if frac.len() == 1 {
        f *= 10;
    }
    let cents = whole.checked_mul(100)?.checked_add(f)?;
    Some(if neg { -cents } else { cents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::ast::LtlFormula as L;

    fn car() -> L {
        L::atom(Atom::ModeIs(Mode::Car))
    }

    #[test]
    fn never_drive() {
        assert_eq!(parse("G(!(mode=car))").unwrap(), L::always(L::not(car())));
        assert_eq!(parse("G !mode = car").unwrap(), L::always(L::not(car())));
    }

    #[test]
    fn no_car_after_bike_or_transit() {
        let f = parse("(mode=bike | mode=public) AFTER G(!(mode=car))").unwrap();
        let trigger = L::or(L::atom(Atom::ModeIs(Mode::Bike)), L::atom(Atom::ModeIs(Mode::Public)));
        assert_eq!(f, L::after(trigger, L::always(L::not(car()))));
    }

    #[test]
    fn bike_between_one_and_two_hours() {
        let f = parse("F(time(bike) >= 3600) & G(time(bike) <= 7200)").unwrap();
        assert_eq!(
            f,
            L::and(
                L::eventually(L::atom(Atom::time(Mode::Bike, CmpOp::Ge, 3600))),
                L::always(L::atom(Atom::time(Mode::Bike, CmpOp::Le, 7200)))
            )
        );
    }

    #[test]
    fn precedence_and_associativity() {
        let a = || L::atom(Atom::ModeIs(Mode::Walk));
        let b = || L::atom(Atom::ModeIs(Mode::Bike));
        let c = || L::atom(Atom::ModeIs(Mode::Car));
        assert_eq!(parse("mode=walk | mode=bike & mode=car").unwrap(), L::or(a(), L::and(b(), c())));
        assert_eq!(parse("mode=walk & mode=bike & mode=car").unwrap(), L::and(L::and(a(), b()), c()));
        assert_eq!(parse("G mode=walk & mode=bike").unwrap(), L::and(L::always(a()), b()));
        assert_eq!(
            parse("mode=walk AFTER mode=bike AFTER mode=car").unwrap(),
            L::after(a(), L::after(b(), c()))
        );
        assert_eq!(parse("mode=walk | mode=bike AFTER mode=car").unwrap(), L::after(L::or(a(), b()), c()));
    }

    #[test]
    fn atoms() {
        assert_eq!(
            parse("fare(public) <= 2.5").unwrap(),
            L::atom(Atom::fare(Mode::Public, CmpOp::Le, 250))
        );
        assert_eq!(
            parse("aux(crime,sum) < 12.5").unwrap(),
            L::atom(Atom::aux("crime", AuxAgg::Sum, CmpOp::Lt, 12.5))
        );
        assert_eq!(
            parse("aux_here(crime) <= 15").unwrap(),
            L::atom(Atom::aux_here("crime", CmpOp::Le, 15.0))
        );
        assert_eq!(parse("clock > 600").unwrap(), L::atom(Atom::clock(CmpOp::Gt, 600)));
        assert_eq!(parse("true & !false").unwrap(), L::and(L::True, L::not(L::False)));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(parse("G(").unwrap_err().position(), Some(2));
        assert!(matches!(parse("G(speed > 3)"), Err(LtlError::UnknownVariable { position: 2, .. })));
        assert!(matches!(parse("mode=train"), Err(LtlError::UnknownMode { position: 5, .. })));
        assert!(matches!(parse("time(bike) >= 1.5"), Err(LtlError::Syntax { position: 14, .. })));
        assert!(matches!(parse("fare(taxi) < 1.234"), Err(LtlError::Syntax { .. })));
        assert!(matches!(parse("aux(crime, median) < 1"), Err(LtlError::Syntax { position: 11, .. })));
        assert!(matches!(parse("mode=car mode=bike"), Err(LtlError::Syntax { position: 9, .. })));
        assert!(matches!(parse("mode=car $"), Err(LtlError::Syntax { position: 9, .. })));
        assert!(matches!(parse(""), Err(LtlError::Syntax { position: 0, .. })));
    }

    #[test]
    fn temporal_trigger_is_rejected() {
        assert!(matches!(
            parse("G(mode=car) AFTER mode=bike"),
            Err(LtlError::UnsupportedProgression { position: Some(0) })
        ));
    }

    #[test]
    fn cents() {
        assert_eq!(parse_cents("2"), Some(200));
        assert_eq!(parse_cents("2.5"), Some(250));
        assert_eq!(parse_cents("0.05"), Some(5));
        assert_eq!(parse_cents(".75"), Some(75));
        assert_eq!(parse_cents("-1.25"), Some(-125));
        assert_eq!(parse_cents("1."), None);
        assert_eq!(parse_cents("1.001"), None);
        assert_eq!(parse_cents("1.2.3"), None);
    }
}
