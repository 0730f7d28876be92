//! A small surface syntax for closed combinatory terms.
//!
//! ```text
//! e ::= \*x. e | a a ...        (application to the left)
//! a ::= S | K | #n | 'tag | name | x | ( e )
//! ```
//!
//! `name` is one of the encodings in [`crate::encode::NAMES`]; any other
//! identifier must be bound by an enclosing `\*`.

use crate::encode::{encode_num, named};
use crate::{lambda_star, PcaError, PcaTerm};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SyntaxError {
    #[error("at offset {0}: {1}")]
    Parse(usize, String),
    #[error(transparent)]
    Scope(#[from] PcaError),
}

pub fn parse(src: &str) -> Result<PcaTerm, SyntaxError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, bound: Vec::new() };
    let t = p.expr()?;
    p.ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected input"));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    bound: Vec<String>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> SyntaxError {
        SyntaxError::Parse(self.pos, msg.to_string())
    }

    fn ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, s: &str) -> bool {
        self.ws();
        if self.src[self.pos..].starts_with(s.as_bytes()) {
            self.pos += s.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        self.ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_alphanumeric() || c == b'_' || (self.pos > start && c == b'\'') {
                self.pos += 1;
            } else {
                break;
            }
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn expr(&mut self) -> Result<PcaTerm, SyntaxError> {
        if self.eat("\\*") || self.eat("\\") {
            let x = self.ident().ok_or_else(|| self.err("expected a variable"))?;
            if !self.eat(".") {
                return Err(self.err("expected `.`"));
            }
            self.bound.push(x.clone());
            let body = self.expr();
            self.bound.pop();
            return Ok(lambda_star(&x, &body?));
        }
        let mut t = self.atom()?.ok_or_else(|| self.err("expected a term"))?;
        loop {
            if self.peek() == Some(b'\\') {
                let arg = self.expr()?;
                return Ok(t.app(arg));
            }
            match self.atom()? {
                Some(a) => t = t.app(a),
                None => return Ok(t),
            }
        }
    }

    fn atom(&mut self) -> Result<Option<PcaTerm>, SyntaxError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let t = self.expr()?;
                if !self.eat(")") {
                    return Err(self.err("expected `)`"));
                }
                Ok(Some(t))
            }
            Some(b'#') => {
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let n: u64 = digits.parse().map_err(|_| self.err("expected a numeral"))?;
                Ok(Some(encode_num(n)))
            }
            Some(b'\'') => {
                self.pos += 1;
                let tag = self.ident().ok_or_else(|| self.err("expected a tag"))?;
                Ok(Some(PcaTerm::opaque(&tag)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                let x = self.ident().expect("starts with a letter");
                Ok(Some(if self.bound.contains(&x) {
                    PcaTerm::var(&x)
                } else if x == "S" {
                    PcaTerm::S
                } else if x == "K" {
                    PcaTerm::K
                } else if let Some(t) = named(&x) {
                    t
                } else {
                    self.pos = start;
                    return Err(PcaError::UnboundVariable(x).into());
                }))
            }
            _ => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{eval, identity};

    #[test]
    fn basics() {
        assert_eq!(parse("S K K").unwrap(), identity());
        assert_eq!(parse(r"\*x. x").unwrap(), identity());
        assert_eq!(parse(r"\*x. K").unwrap(), PcaTerm::K.app(PcaTerm::K));
        assert_eq!(parse("#2").unwrap(), encode_num(2));
        assert_eq!(parse("K 'a 'b").unwrap().to_string(), "K 'a 'b");
        assert_eq!(parse("K ('a 'b)").unwrap().to_string(), "K ('a 'b)");
    }

    #[test]
    fn evaluates() {
        let t = parse(r"(\*x. \*y. y x) 'a 'f").unwrap();
        assert_eq!(eval(&t, 100).value().unwrap().to_string(), "'f 'a");
        let t = parse(r"K \*x. x").unwrap();
        assert_eq!(t, PcaTerm::K.app(identity()));
    }

    #[test]
    fn errors() {
        assert_eq!(parse("x"), Err(SyntaxError::Scope(PcaError::UnboundVariable("x".into()))));
        assert!(matches!(parse("(S K"), Err(SyntaxError::Parse(4, _))));
        assert!(matches!(parse(r"\*. x"), Err(SyntaxError::Parse(..))));
        assert!(matches!(parse("S )"), Err(SyntaxError::Parse(2, _))));
    }

    #[test]
    fn printing_round_trips() {
        for src in ["S (K 'a) (S K K)", "'f ('g 'h) 'k", "#3", "mult #2 #3"] {
            let t = parse(src).unwrap();
            assert_eq!(parse(&t.to_string()).unwrap(), t);
        }
    }
}
