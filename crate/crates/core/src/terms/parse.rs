//! Single-line term grammar.
//!
//! ```text
//! join   := meet ( "\/" meet )*
//! meet   := sum ( "/\" sum )*
//! sum    := unary ( ("+" | "-") unary )*
//! unary  := "-" unary | product
//! product:= factor ( "*" factor )*
//! factor := number | "d(" "[" number ("," number)* "]" ")" | "|" join "|" | "(" join ")"
//! ```
//!
//! A product holds at most one non-numeric factor; numbers scale it from the
//! left, nested to the right. A product of numbers alone must be zero and
//! denotes the zero element. A `-` directly followed by a digit is part of a
//! number literal.

use super::Term;
use crate::error::{Error, Result};
use crate::spaces::Space;

/// Parses `text` as a term over `space`.
pub fn parse(text: &str, space: Space) -> Result<Term> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, space };
    let t = p.join()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error(format!("unexpected '{}'", p.src[p.pos] as char)));
    }
    Ok(t)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    space: Space,
}

enum Factor {
    Number(f64),
    Term(Term),
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.into() }
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

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{token}'")))
        }
    }

    fn join(&mut self) -> Result<Term> {
        let mut t = self.meet()?;
        while self.eat("\\/") {
            t = Term::join(t, self.meet()?);
        }
        Ok(t)
    }

    fn meet(&mut self) -> Result<Term> {
        let mut t = self.sum()?;
        while self.eat("/\\") {
            t = Term::meet(t, self.sum()?);
        }
        Ok(t)
    }

    fn sum(&mut self) -> Result<Term> {
        let mut t = self.unary()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    t = Term::sum(t, self.unary()?);
                }
                // "-" that starts "/\" cannot occur here; "\/" neither.
                Some(b'-') => {
                    self.pos += 1;
                    t = Term::sum(t, Term::neg(self.unary()?));
                }
                _ => return Ok(t),
            }
        }
    }

    fn negative_literal_ahead(&self) -> bool {
        self.src.get(self.pos) == Some(&b'-')
            && self.src.get(self.pos + 1).is_some_and(|c| c.is_ascii_digit() || *c == b'.')
    }

    fn unary(&mut self) -> Result<Term> {
        if self.peek() == Some(b'-') && !self.negative_literal_ahead() {
            self.pos += 1;
            return Ok(Term::neg(self.unary()?));
        }
        self.product()
    }

    fn product(&mut self) -> Result<Term> {
        let start = self.pos;
        let mut numbers = Vec::new();
        let mut term = None;
        loop {
            match self.factor()? {
                Factor::Number(c) => numbers.push(c),
                Factor::Term(t) => {
                    if term.is_some() {
                        return Err(self.error("product of two terms is not a lattice operation"));
                    }
                    term = Some(t);
                }
            }
            if !self.eat("*") {
                break;
            }
        }
        let t = match term {
            Some(t) => t,
            None if numbers.iter().all(|&c| c == 0.0) && numbers.len() == 1 => return Ok(Term::zero(self.space)),
            None => return Err(Error::Syntax { pos: start, msg: "numeric product without a term".into() }),
        };
        Ok(numbers.into_iter().rev().fold(t, |t, c| Term::scale(c, t)))
    }

    fn factor(&mut self) -> Result<Factor> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let t = self.join()?;
                self.expect(")")?;
                Ok(Factor::Term(t))
            }
            Some(b'|') => {
                self.pos += 1;
                let t = self.join()?;
                self.expect("|")?;
                Ok(Factor::Term(Term::abs(t)))
            }
            Some(b'd') => {
                self.pos += 1;
                let at = self.pos;
                self.expect("(")?;
                let coords = self.array()?;
                self.expect(")")?;
                if coords.len() != self.space.dim() {
                    return Err(Error::Syntax {
                        pos: at,
                        msg: format!(
                            "generator has {} coordinates but space {} has dimension {}",
                            coords.len(),
                            self.space,
                            self.space.dim()
                        ),
                    });
                }
                Ok(Factor::Term(Term::Gen(self.space.vector(coords)?)))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' || self.negative_literal_ahead() => {
                Ok(Factor::Number(self.number()?))
            }
            Some(c) => Err(self.error(format!("unexpected '{}'", c as char))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn array(&mut self) -> Result<Vec<f64>> {
        self.expect("[")?;
        let mut out = vec![self.number()?];
        while self.eat(",") {
            out.push(self.number()?);
        }
        self.expect("]")?;
        Ok(out)
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        if i < s.len() && (s[i] == b'-' || s[i] == b'+') {
            i += 1;
        }
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'-' || s[j] == b'+') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).expect("ascii");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => {
                self.pos = i;
                Ok(v)
            }
            _ => Err(Error::Syntax { pos: start, msg: format!("invalid number '{text}'") }),
        }
    }
}

// Precedence levels, loosest first.
const JOIN: u8 = 0;
const MEET: u8 = 1;
const SUM: u8 = 2;
const UNARY: u8 = 3;
const PRODUCT: u8 = 4;
const ATOM: u8 = 5;

/// Renders `t` so that [`parse`] rebuilds the same tree.
pub fn print(t: &Term) -> String {
    render(t, JOIN)
}

fn level(t: &Term) -> u8 {
    if t.as_abs().is_some() {
        return ATOM;
    }
    match t {
        Term::Gen(_) => ATOM,
        Term::Scale(..) => PRODUCT,
        Term::Neg(_) => UNARY,
        Term::Sum(..) => SUM,
        Term::Meet(..) => MEET,
        Term::Join(..) => JOIN,
    }
}

fn render(t: &Term, min: u8) -> String {
    let body = render_bare(t);
    if level(t) < min {
        format!("({body})")
    } else {
        body
    }
}

fn render_bare(t: &Term) -> String {
    if let Some(a) = t.as_abs() {
        return format!("|{}|", render(a, JOIN));
    }
    match t {
        Term::Gen(v) => {
            if v.coords().iter().all(|c| c.to_bits() == 0) {
                "0".to_string()
            } else {
                let parts: Vec<String> = v.coords().iter().map(|c| format!("{c}")).collect();
                format!("d([{}])", parts.join(","))
            }
        }
        Term::Scale(c, inner) => format!("{c}*{}", render(inner, PRODUCT)),
        Term::Neg(inner) => {
            let s = render(inner, UNARY);
            if s.starts_with(|c: char| c.is_ascii_digit()) {
                format!("-({s})")
            } else {
                format!("-{s}")
            }
        }
        Term::Sum(a, b) => match b.as_ref() {
            Term::Neg(nb) => format!("{} - {}", render(a, SUM), render(nb, UNARY)),
            _ => format!("{} + {}", render(a, SUM), render(b, UNARY)),
        },
        Term::Meet(a, b) => format!("{} /\\ {}", render(a, MEET), render(b, SUM)),
        Term::Join(a, b) => format!("{} \\/ {}", render(a, JOIN), render(b, MEET)),
    }
}
