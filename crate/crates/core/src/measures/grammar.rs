//! Text grammar for measure specs.
//!
//! ```text
//! expr    := term ('*' term)*
//! term    := primary ('^' power)*
//! primary := 'mp' '(' number ')' | 'as' | 'id'
//!          | 'rat' '(' number (',' number)* ';' number (',' number)* ')'
//!          | '(' expr ')'
//! power   := integer | '(' number ')'
//! number  := ['+'|'-'] digits ['.' digits] ['/' digits]
//! ```
//! Rational coefficients in `rat(...)` are listed lowest degree first.

use num_bigint::BigInt;
use num_traits::Zero;

use super::{FactorKind, MeasureSpec};
use crate::error::{Error, Result};
use crate::poly::{Rat, RatPoly};

pub(super) fn parse(input: &str) -> Result<MeasureSpec> {
    let mut p = Parser {
        src: input.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty measure spec"));
    }
    let spec = p.expr()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(spec)
}

pub(super) fn parse_number_str(input: &str) -> Result<Rat> {
    let mut p = Parser {
        src: input.as_bytes(),
        pos: 0,
    };
    p.skip_ws();
    let r = p.number()?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error("unexpected trailing input after number"));
    }
    Ok(r)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<MeasureSpec> {
        let mut acc = self.term()?;
        while self.eat(b'*') {
            let rhs = self.term()?;
            acc = acc.boxtimes(&rhs);
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<MeasureSpec> {
        let mut base = self.primary()?;
        while self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            let s = if self.eat(b'(') {
                let s = self.number()?;
                self.expect(b')')?;
                s
            } else {
                self.unsigned_integer()?
            };
            base = base.free_power(&s).map_err(|e| Error::Parse {
                position: start,
                message: e.to_string(),
            })?;
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<MeasureSpec> {
        self.skip_ws();
        if self.eat(b'(') {
            let inner = self.expr()?;
            self.expect(b')')?;
            return Ok(inner);
        }
        let start = self.pos;
        let ident = self.identifier();
        match ident.as_str() {
            "mp" => {
                self.expect(b'(')?;
                let arg_pos = self.pos;
                let c = self.number()?;
                self.expect(b')')?;
                let kind = FactorKind::mp(c).map_err(|e| Error::Parse {
                    position: arg_pos,
                    message: e.to_string(),
                })?;
                Ok(MeasureSpec::from_kind(kind))
            }
            "as" => Ok(MeasureSpec::arcsine()),
            "id" => Ok(MeasureSpec::identity()),
            "rat" => {
                self.expect(b'(')?;
                let numer = self.number_list()?;
                self.expect(b';')?;
                let denom = self.number_list()?;
                self.expect(b')')?;
                let kind = FactorKind::rational(RatPoly::new(numer), RatPoly::new(denom)).map_err(
                    |e| Error::Parse {
                        position: start,
                        message: e.to_string(),
                    },
                )?;
                Ok(MeasureSpec::from_kind(kind))
            }
            "" => Err(self.error("expected a factor: mp(c), as, rat(...;...) or '('")),
            other => {
                self.pos = start;
                Err(self.error(&format!("unknown factor '{other}'")))
            }
        }
    }

    fn identifier(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).to_ascii_lowercase()
    }

    fn number_list(&mut self) -> Result<Vec<Rat>> {
        let mut out = vec![self.number()?];
        while self.eat(b',') {
            out.push(self.number()?);
        }
        Ok(out)
    }

    fn digits(&mut self) -> Option<String> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn unsigned_integer(&mut self) -> Result<Rat> {
        self.skip_ws();
        let d = self
            .digits()
            .ok_or_else(|| self.error("expected an integer exponent or '(' rational ')'"))?;
        Ok(Rat::from_integer(d.parse::<BigInt>().unwrap()))
    }

    fn number(&mut self) -> Result<Rat> {
        self.skip_ws();
        let negative = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            if self.peek() == Some(b'+') {
                self.pos += 1;
            }
            false
        };
        let int_part = self.digits();
        let mut value = match &int_part {
            Some(d) => Rat::from_integer(d.parse::<BigInt>().unwrap()),
            None => Rat::zero(),
        };
        let mut saw_digits = int_part.is_some();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if let Some(frac) = self.digits() {
                let scale = BigInt::from(10).pow(frac.len() as u32);
                value += Rat::new(frac.parse::<BigInt>().unwrap(), scale);
                saw_digits = true;
            }
        }
        if !saw_digits {
            return Err(self.error("expected a number"));
        }
        self.skip_ws();
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let d = self
                .digits()
                .ok_or_else(|| self.error("expected a denominator"))?;
            let d = d.parse::<BigInt>().unwrap();
            if d.is_zero() {
                return Err(self.error("zero denominator"));
            }
            value /= Rat::from_integer(d);
        }
        if negative {
            value = -value;
        }
        Ok(value)
    }
}
