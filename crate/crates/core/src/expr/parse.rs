//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | ident | ident '(' sum ')' | '(' sum ')'
//! ```

use super::{Expr, ExprError, Num, Symbol};

pub fn parse(source: &str) -> Result<Expr, ExprError> {
    let mut p = Parser { src: source, pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek_raw() {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek_raw(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.peek_raw()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.product()?;
        loop {
            if self.eat(b'+') {
                acc = Expr::add(acc, self.product()?);
            } else if self.eat(b'-') {
                acc = Expr::sub(acc, self.product()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = Expr::mul(acc, self.unary()?);
            } else if self.peek() == Some(b'/') {
                let at = self.pos;
                self.pos += 1;
                let den = self.unary()?;
                acc = Expr::checked_div(acc, den).ok_or(ExprError::Syntax {
                    offset: at,
                    message: "division by literal zero".into(),
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let at = self.pos;
        let exponent = self.unary()?;
        let n = exponent
            .as_const()
            .and_then(Num::to_i64)
            .and_then(|n| i32::try_from(n).ok())
            .ok_or(ExprError::Syntax {
                offset: at,
                message: "exponent must be an integer constant".into(),
            })?;
        if n < 0 && base.is_zero_const() {
            return Err(ExprError::Syntax {
                offset: at,
                message: "negative power of literal zero".into(),
            });
        }
        Ok(Expr::pow(base, n))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let text = &self.src[start..end];
        let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = end;
        Ok(Expr::num(exact_literal(text, value)))
    }

    fn ident(&mut self) -> Result<Expr, ExprError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut end = start;
        while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
            end += 1;
        }
        let name = &self.src[start..end];
        self.pos = end;
        let func: Option<fn(Expr) -> Expr> = match name {
            "sin" => Some(Expr::sin),
            "cos" => Some(Expr::cos),
            "exp" => Some(Expr::exp),
            _ => None,
        };
        if let Some(func) = func {
            if !self.eat(b'(') {
                return Err(self.error(&format!("expected `(` after `{name}`")));
            }
            let arg = self.sum()?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(func(arg));
        }
        if name == "tau" {
            return Ok(Expr::tau());
        }
        Symbol::from_name(name)
            .map(Expr::sym)
            .ok_or_else(|| ExprError::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            })
    }
}

/// Plain decimals become exact rationals when that loses nothing.
fn exact_literal(text: &str, value: f64) -> Num {
    const LIMIT: i64 = 1 << 53;
    if text.contains(['e', 'E']) {
        return Num::from_f64(value);
    }
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
    let digits = format!("{int_part}{frac_part}");
    let numer = digits.trim_start_matches('0');
    let Ok(numer) = (if numer.is_empty() { Ok(0) } else { numer.parse::<i64>() }) else {
        return Num::Float(value);
    };
    let Some(denom) = 10i64.checked_pow(frac_part.len() as u32) else {
        return Num::Float(value);
    };
    if numer > LIMIT || denom > LIMIT {
        return Num::Float(value);
    }
    let exact = Num::ratio(numer, denom);
    if exact.to_f64() == value {
        exact
    } else {
        Num::Float(value)
    }
}
