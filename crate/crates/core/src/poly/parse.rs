//! Recursive-descent parser for the polynomial text format.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := number | 'i' | var | '(' expr ')'
//! number := int | int '/' int | decimal
//! ```
//!
//! A leading unary minus is also accepted so that printed output with a
//! negative first term parses back.

use super::Polynomial;
use crate::error::{Error, Result};
use crate::C64;

/// Parses `text` over the variables `var_names`, returning the expanded
/// polynomial.
pub fn parse_poly<S: AsRef<str>>(text: &str, var_names: &[S]) -> Result<Polynomial> {
    let vars: Vec<String> = var_names.iter().map(|s| s.as_ref().to_string()).collect();
    let mut parser = Parser {
        src: text.as_bytes(),
        pos: 0,
        vars: &vars,
    };
    let p = parser.expr()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(p)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = if self.peek() == Some(b'-') {
            self.pos += 1;
            -&self.term()?
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.factor()?;
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Polynomial> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            let k = self.digits();
            if k.is_empty() {
                return Err(self.error("expected unsigned exponent after '^'"));
            }
            let k: u32 = k
                .parse()
                .map_err(|_| Error::Syntax {
                    pos: start,
                    msg: "exponent out of range".into(),
                })?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Polynomial> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(-&self.factor()?)
            }
            Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
                let value = self.number()?;
                Ok(Polynomial::constant(self.vars, C64::new(value, 0.0)))
            }
            Some(ch) if ch.is_ascii_alphabetic() || ch == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if let Some(j) = self.vars.iter().position(|v| v == name) {
                    Ok(Polynomial::var(self.vars, j))
                } else if name == "i" {
                    Ok(Polynomial::constant(self.vars, C64::new(0.0, 1.0)))
                } else {
                    Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        pos: start,
                    })
                }
            }
            Some(_) => Err(self.error("expected number, variable, 'i' or '('")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default()
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let int_part = self.digits().to_string();
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let frac = self.digits().to_string();
            if int_part.is_empty() && frac.is_empty() {
                return Err(Error::Syntax {
                    pos: start,
                    msg: "malformed decimal".into(),
                });
            }
            let text = format!("{}.{}", if int_part.is_empty() { "0" } else { &int_part }, frac);
            return text.parse().map_err(|_| Error::Syntax {
                pos: start,
                msg: "malformed decimal".into(),
            });
        }
        let numer: f64 = int_part.parse().map_err(|_| Error::Syntax {
            pos: start,
            msg: "malformed integer".into(),
        })?;
        let save = self.pos;
        if self.peek() == Some(b'/') {
            self.pos += 1;
            self.skip_ws();
            let den = self.digits().to_string();
            if den.is_empty() {
                return Err(self.error("expected integer denominator"));
            }
            let den: f64 = den.parse().map_err(|_| self.error("malformed denominator"))?;
            if den == 0.0 {
                return Err(Error::Syntax {
                    pos: save,
                    msg: "zero denominator".into(),
                });
            }
            return Ok(numer / den);
        }
        self.pos = save;
        Ok(numer)
    }
}
