//! Text formats: diagram encodings, TL element expressions, numeric `δ`
//! expressions and alternating polynomials.
//!
//! TL expressions are sums of products. A product may mix rationals, powers
//! of `d` (the loop parameter) and diagram atoms; diagram factors are
//! multiplied with `∧_0` in order. Atoms are `cup`, `cupcup`, `nest`, `id`
//! (the empty diagram) and literal encodings such as `2:[(1,4),(2,3)]`.
//! Example: `2*cup^3 - 1/2*d*nest + 3:[(1,6),(2,3),(4,5)]`.

use num::bigint::BigInt;
use num::{One, Zero};

use crate::error::{Error, Result};
use crate::poly::{AltMonomial, Letter, PolyElement};
use crate::scalar::{DeltaScalar, Rational};
use crate::tangle::wedge;
use crate::tl::{TLDiagram, TLElement};

struct Cursor<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    /// Next byte without skipping whitespace.
    fn peek_raw(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
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
            Err(self.error(format!("expected '{}'", c as char)))
        }
    }

    fn error(&self, msg: impl Into<String>) -> Error {
        let found = match self.bytes.get(self.pos) {
            Some(_) => format!(" near {:?}", &self.src[self.pos..self.src.len().min(self.pos + 8)]),
            None => " at end of input".to_string(),
        };
        Error::parse(self.pos, format!("{}{found}", msg.into()))
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    fn uint(&mut self) -> Result<usize> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| Error::parse(start, "integer out of range"))
    }

    fn ident(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        (self.pos > start).then(|| &self.src[start..self.pos])
    }

    /// Integer with optional `/denominator`.
    fn rational(&mut self) -> Result<Rational> {
        let start = self.pos;
        let n = self.uint()?;
        let mut r = Rational::from_integer(BigInt::from(n));
        if self.peek_raw() == Some(b'/') {
            self.pos += 1;
            let d = self.uint()?;
            if d == 0 {
                return Err(Error::parse(start, "zero denominator"));
            }
            r /= Rational::from_integer(BigInt::from(d));
        }
        Ok(r)
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = self.eat(b'-');
        let v = self.uint()? as i64;
        Ok(if neg { -v } else { v })
    }
}

/// Parses `k:[(a,b),...]` (1-based points).
pub fn parse_diagram(text: &str) -> Result<TLDiagram> {
    let mut c = Cursor::new(text);
    let d = diagram_literal(&mut c)?;
    if !c.at_end() {
        return Err(c.error("trailing input after diagram"));
    }
    Ok(d)
}

fn diagram_literal(c: &mut Cursor) -> Result<TLDiagram> {
    let start = c.pos;
    let k = c.uint()?;
    c.expect(b':')?;
    c.expect(b'[')?;
    let mut pairs = Vec::new();
    if !c.eat(b']') {
        loop {
            c.expect(b'(')?;
            let a = c.uint()?;
            c.expect(b',')?;
            let b = c.uint()?;
            c.expect(b')')?;
            if a == 0 || b == 0 {
                return Err(c.error("points are numbered from 1"));
            }
            pairs.push((a - 1, b - 1));
            if c.eat(b']') {
                break;
            }
            c.expect(b',')?;
        }
    }
    TLDiagram::from_pairs(k, &pairs).map_err(|e| Error::parse(start, e.to_string()))
}

/// Parses a TL element expression.
pub fn parse_tl(text: &str) -> Result<TLElement> {
    let mut c = Cursor::new(text);
    let e = tl_sum(&mut c)?;
    if !c.at_end() {
        return Err(c.error("unexpected input"));
    }
    Ok(e)
}

fn tl_sum(c: &mut Cursor) -> Result<TLElement> {
    let mut negate = c.eat(b'-');
    let mut acc = TLElement::zero();
    loop {
        let t = tl_product(c)?;
        acc = if negate { &acc - &t } else { &acc + &t };
        if c.eat(b'+') {
            negate = false;
        } else if c.eat(b'-') {
            negate = true;
        } else {
            return Ok(acc);
        }
    }
}

fn tl_product(c: &mut Cursor) -> Result<TLElement> {
    let mut acc = tl_power(c)?;
    while c.eat(b'*') || c.eat(b'.') {
        let rhs = tl_power(c)?;
        acc = wedge(0, &acc, &rhs)?;
    }
    Ok(acc)
}

fn tl_power(c: &mut Cursor) -> Result<TLElement> {
    let base = tl_atom(c)?;
    if c.eat(b'^') {
        let start = c.pos;
        let e = c.signed_int()?;
        // negative powers only make sense for the scalar d
        if e < 0 {
            let scalar_d = TLElement::from_term(TLDiagram::empty(), DeltaScalar::power(1));
            if base != scalar_d {
                return Err(Error::parse(start, "negative powers are allowed only on d"));
            }
            return Ok(TLElement::from_term(TLDiagram::empty(), DeltaScalar::power(e as i32)));
        }
        let mut acc = TLElement::unit();
        for _ in 0..e {
            acc = wedge(0, &acc, &base)?;
        }
        return Ok(acc);
    }
    Ok(base)
}

fn tl_atom(c: &mut Cursor) -> Result<TLElement> {
    match c.peek() {
        Some(b'(') => {
            c.pos += 1;
            let e = tl_sum(c)?;
            c.expect(b')')?;
            Ok(e)
        }
        Some(ch) if ch.is_ascii_digit() => {
            // a diagram literal has ':' right after its size
            let save = c.pos;
            let _ = c.uint()?;
            let is_diagram = c.peek() == Some(b':');
            c.pos = save;
            if is_diagram {
                Ok(TLElement::from_diagram(diagram_literal(c)?))
            } else {
                let r = c.rational()?;
                Ok(TLElement::from_term(TLDiagram::empty(), DeltaScalar::constant(r)))
            }
        }
        Some(_) => {
            let start = c.pos;
            let name = c.ident().ok_or_else(|| c.error("expected a term"))?;
            let d = match name {
                "cup" => TLDiagram::cup(),
                "cupcup" => TLDiagram::from_pairs(2, &[(0, 1), (2, 3)])?,
                "nest" => TLDiagram::nested(2),
                "id" | "empty" => TLDiagram::empty(),
                "d" | "delta" => {
                    return Ok(TLElement::from_term(TLDiagram::empty(), DeltaScalar::power(1)))
                }
                other => return Err(Error::parse(start, format!("unknown name '{other}'"))),
            };
            Ok(TLElement::from_diagram(d))
        }
        None => Err(c.error("expected a term")),
    }
}

/// Parses a numeric expression for `δ`, e.g. `2`, `2.5`, `sqrt(2)`, `2cos(pi/5)`.
pub fn parse_real(text: &str) -> Result<f64> {
    let mut c = Cursor::new(text);
    let v = real_sum(&mut c)?;
    if !c.at_end() {
        return Err(c.error("unexpected input"));
    }
    if !v.is_finite() {
        return Err(Error::parse(0, "expression is not finite"));
    }
    Ok(v)
}

fn real_sum(c: &mut Cursor) -> Result<f64> {
    let mut acc = real_product(c)?;
    loop {
        if c.eat(b'+') {
            acc += real_product(c)?;
        } else if c.eat(b'-') {
            acc -= real_product(c)?;
        } else {
            return Ok(acc);
        }
    }
}

fn real_product(c: &mut Cursor) -> Result<f64> {
    let mut acc = real_unary(c)?;
    loop {
        if c.eat(b'*') {
            acc *= real_unary(c)?;
        } else if c.eat(b'/') {
            acc /= real_unary(c)?;
        } else if matches!(c.peek(), Some(ch) if ch.is_ascii_alphabetic() || ch == b'(') {
            // implicit product, as in 2cos(pi/5)
            acc *= real_unary(c)?;
        } else {
            return Ok(acc);
        }
    }
}

fn real_unary(c: &mut Cursor) -> Result<f64> {
    if c.eat(b'-') {
        return Ok(-real_unary(c)?);
    }
    let base = real_primary(c)?;
    if c.eat(b'^') {
        return Ok(base.powf(real_unary(c)?));
    }
    Ok(base)
}

fn real_primary(c: &mut Cursor) -> Result<f64> {
    match c.peek() {
        Some(b'(') => {
            c.pos += 1;
            let v = real_sum(c)?;
            c.expect(b')')?;
            Ok(v)
        }
        Some(ch) if ch.is_ascii_digit() || ch == b'.' => {
            let start = c.pos;
            while c.pos < c.bytes.len()
                && (c.bytes[c.pos].is_ascii_digit() || c.bytes[c.pos] == b'.' || c.bytes[c.pos] == b'e')
            {
                c.pos += 1;
            }
            c.src[start..c.pos]
                .parse::<f64>()
                .map_err(|_| Error::parse(start, "malformed number"))
        }
        Some(_) => {
            let start = c.pos;
            let name = c.ident().ok_or_else(|| c.error("expected a number"))?;
            match name {
                "pi" => Ok(std::f64::consts::PI),
                "phi" => Ok((1.0 + 5f64.sqrt()) / 2.0),
                "sqrt" | "cos" | "sin" => {
                    c.expect(b'(')?;
                    let v = real_sum(c)?;
                    c.expect(b')')?;
                    Ok(match name {
                        "sqrt" => v.sqrt(),
                        "cos" => v.cos(),
                        _ => v.sin(),
                    })
                }
                other => Err(Error::parse(start, format!("unknown name '{other}'"))),
            }
        }
        None => Err(c.error("expected a number")),
    }
}

/// Parses an alternating polynomial, e.g. `X1 X1* + 2*X1 X2* X2 X1*`.
/// A `*` glued to a letter marks the adjoint; `1` is the empty monomial.
pub fn parse_poly(text: &str) -> Result<PolyElement> {
    let mut c = Cursor::new(text);
    let mut acc = PolyElement::zero();
    let mut negate = c.eat(b'-');
    loop {
        let (coef, mono) = poly_term(&mut c)?;
        let coef = if negate { -coef } else { coef };
        acc.add_term(mono, coef);
        if c.eat(b'+') {
            negate = false;
        } else if c.eat(b'-') {
            negate = true;
        } else {
            break;
        }
    }
    if !c.at_end() {
        return Err(c.error("unexpected input"));
    }
    Ok(acc)
}

/// Parses a single monomial token stream such as `X1 X1* X2 X2*`.
pub fn parse_monomial(text: &str) -> Result<AltMonomial> {
    let mut c = Cursor::new(text);
    let (coef, mono) = poly_term(&mut c)?;
    if !c.at_end() {
        return Err(c.error("unexpected input"));
    }
    if !coef.is_one() {
        return Err(Error::parse(0, "a monomial takes no coefficient"));
    }
    Ok(mono)
}

fn poly_term(c: &mut Cursor) -> Result<(Rational, AltMonomial)> {
    let start = c.pos;
    let mut coef = Rational::one();
    let mut saw_coef = false;
    if matches!(c.peek(), Some(ch) if ch.is_ascii_digit()) {
        coef = c.rational()?;
        saw_coef = true;
        if !c.eat(b'*') && matches!(c.peek(), Some(b'X')) {
            return Err(c.error("expected '*' between coefficient and letters"));
        }
    }
    let mut letters = Vec::new();
    while c.peek() == Some(b'X') {
        c.pos += 1;
        let lpos = c.pos;
        let index = c.uint()?;
        if index == 0 {
            return Err(Error::parse(lpos, "letter indices start at 1"));
        }
        let star = c.peek_raw() == Some(b'*');
        if star {
            c.pos += 1;
        }
        letters.push(Letter {
            index: index as u32,
            star,
        });
    }
    if letters.is_empty() && !saw_coef {
        return Err(c.error("expected a monomial"));
    }
    if coef.is_zero() {
        coef = Rational::zero();
    }
    let mono = AltMonomial::new(letters).map_err(|e| Error::parse(start, e.to_string()))?;
    Ok((coef, mono))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tangle::wedge_power;

    #[test]
    fn tl_expressions() {
        assert_eq!(parse_tl("cup").unwrap(), TLElement::cup());
        assert_eq!(parse_tl("cup^3").unwrap(), wedge_power(&TLElement::cup(), 3).unwrap());
        assert_eq!(parse_tl("cup*cup").unwrap(), parse_tl("cupcup").unwrap());
        assert_eq!(parse_tl("2:[(1,4),(2,3)]").unwrap(), parse_tl("nest").unwrap());
        let e = parse_tl("2*cup - 1/2*d*nest + d^-1").unwrap();
        assert_eq!(e.len(), 3);
        assert_eq!(
            e.coeff(&TLDiagram::empty()),
            DeltaScalar::power(-1)
        );
        assert!(parse_tl("cup - cup").unwrap().is_zero());
    }

    #[test]
    fn tl_errors_carry_positions() {
        match parse_tl("cup + bogus") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_tl("2:[(1,3),(2,4)]"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tl("cup +"), Err(Error::Parse { .. })));
        assert!(matches!(parse_tl("cup^-1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn reals() {
        assert_eq!(parse_real("2").unwrap(), 2.0);
        assert_eq!(parse_real("2.5").unwrap(), 2.5);
        assert!((parse_real("sqrt(2)").unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let phi = parse_real("2cos(pi/5)").unwrap();
        assert!((phi - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert_eq!(parse_real("2*cos(pi/3)").unwrap(), 2.0 * (std::f64::consts::PI / 3.0).cos());
        assert!(parse_real("2 +").is_err());
    }

    #[test]
    fn polynomials() {
        let m = parse_monomial("X1 X1* X2 X2*").unwrap();
        assert_eq!(m.degree(), 4);
        assert!(parse_monomial("X1 X1 X2 X2*").is_err());
        assert!(parse_monomial("X1*X1").is_err());
        let p = parse_poly("X1 X1* + 2*X2 X2* - X1 X1*").unwrap();
        assert_eq!(p.len(), 1);
        let unit = parse_poly("1").unwrap();
        assert_eq!(unit.coeff(&AltMonomial::unit()), Rational::one());
    }
}
