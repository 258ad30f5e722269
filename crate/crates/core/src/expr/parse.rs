//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr     = term { ("+" | "-") term } ;
//! term     = unary { ("*" | "/") unary } ;
//! unary    = ("-" | "+") unary | power ;
//! power    = primary [ "^" exponent ] ;
//! exponent = ["-"] power ;                     (must fold to a rational)
//! primary  = number | ident | ident "(" expr ")" | "(" expr ")" ;
//! number   = digits [ "." digits ] [ ("e" | "E") ["+" | "-"] digits ] ;
//! ```
//!
//! Identifiers resolve to coordinates, then parameters, then the constant
//! `pi`. Function names: sin cos tan exp log sqrt.

use num_traits::Zero;

use super::build::simplify_expr;
use super::intern::make;
use super::{Expr, ExprError, Func, Kind, Rational};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Expr),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax { offset, message: message.into() }
}

/// Parse a decimal literal exactly; falls back to a float literal when the
/// exact value does not fit in 128-bit rationals.
fn number_literal(text: &str) -> Option<Expr> {
    let (mant, exp) = match text.find(['e', 'E']) {
        Some(i) => (&text[..i], text[i + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let exact = (|| {
        let digits = format!("{int_part}{frac_part}");
        let mut num: i128 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        let mut den: i128 = 1;
        let shift = exp - frac_part.len() as i32;
        if shift >= 0 {
            num = num.checked_mul(10i128.checked_pow(shift as u32)?)?;
        } else {
            den = 10i128.checked_pow((-shift) as u32)?;
        }
        Some(Expr::rational(Rational::new(num, den)))
    })();
    match exact {
        Some(e) => Some(e),
        None => text.parse::<f64>().ok().map(Expr::from_f64),
    }
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if start >= bytes.len() {
            return Ok((Tok::End, start));
        }
        let c = bytes[start];
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
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
            if text.matches('.').count() > 1 || text == "." {
                return Err(syntax(start, format!("malformed number `{text}`")));
            }
            self.pos = end;
            let e = number_literal(text).ok_or_else(|| syntax(start, format!("malformed number `{text}`")))?;
            return Ok((Tok::Num(e), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((Tok::Ident(self.src[start..end].to_string()), start));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(syntax(start, format!("unexpected character `{ch}`")))
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    coords: &'a [&'a str],
    params: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn offset(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    let t = self.term()?;
                    terms.push(make(Kind::Neg(t)));
                }
                _ => break,
            }
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term")
        } else {
            make(Kind::Sum(terms.into_boxed_slice()))
        })
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut factors = vec![self.unary()?];
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    factors.push(self.unary()?);
                }
                Tok::Slash => {
                    let (_, at) = self.bump();
                    if matches!(self.peek(), Tok::End | Tok::RParen | Tok::Plus | Tok::Star | Tok::Slash | Tok::Caret) {
                        return Err(ExprError::EmptyDenominator { offset: at });
                    }
                    let den = self.unary()?;
                    let num = collapse_product(std::mem::take(&mut factors));
                    factors.push(make(Kind::Quotient(num, den)));
                }
                _ => break,
            }
        }
        Ok(collapse_product(factors))
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                let inner = self.unary()?;
                Ok(make(Kind::Neg(inner)))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let (_, at) = self.bump();
        let negate = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let exp_start = self.offset();
        let raw = self.power()?;
        let folded = simplify_expr(&raw);
        let mut q = match folded.kind() {
            Kind::Rational(q) => *q,
            Kind::Float(x) if x.fract() == 0.0 && x.abs() < 1e15 => Rational::from_integer(*x as i128),
            _ => {
                return Err(syntax(
                    exp_start.max(at),
                    "exponent must be a constant rational number",
                ))
            }
        };
        if negate {
            q = -q;
        }
        if q.is_zero() && base.is_zero() {
            return Err(syntax(at, "0^0 is undefined"));
        }
        Ok(make(Kind::Pow(base, q)))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(e) => Ok(e),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let f = Func::from_name(&name)
                        .ok_or(ExprError::UnknownIdentifier { name: name.clone(), offset: at })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(make(Kind::Func(f, arg)));
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr::coord(i));
                }
                if self.params.contains(&name.as_str()) {
                    return Ok(Expr::param(&name));
                }
                if name == "pi" {
                    return Ok(Expr::pi());
                }
                Err(ExprError::UnknownIdentifier { name, offset: at })
            }
            Tok::End => Err(syntax(at, "unexpected end of input")),
            other => Err(syntax(at, format!("unexpected token {}", describe(&other)))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.bump() {
            (Tok::RParen, _) => Ok(()),
            (_, at) => Err(syntax(at, "expected `)`")),
        }
    }
}

fn describe(t: &Tok) -> &'static str {
    match t {
        Tok::Num(_) => "number",
        Tok::Ident(_) => "identifier",
        Tok::Plus => "`+`",
        Tok::Minus => "`-`",
        Tok::Star => "`*`",
        Tok::Slash => "`/`",
        Tok::Caret => "`^`",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
        Tok::End => "end of input",
    }
}

fn collapse_product(mut factors: Vec<Expr>) -> Expr {
    if factors.len() == 1 {
        factors.pop().expect("one factor")
    } else {
        make(Kind::Product(factors.into_boxed_slice()))
    }
}

/// Parse `source` against coordinate and parameter names. The result keeps
/// the written shape; call [`super::simplify_expr`] to normalise it.
pub fn parse_expr(source: &str, coords: &[&str], params: &[&str]) -> Result<Expr, ExprError> {
    if source.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let mut lexer = Lexer { src: source, pos: 0 };
    let mut toks = Vec::new();
    loop {
        let (t, at) = lexer.next()?;
        let end = t == Tok::End;
        toks.push((t, at));
        if end {
            break;
        }
    }
    let mut p = Parser { toks, at: 0, coords, params };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(syntax(p.offset(), format!("unexpected {}", describe(p.peek()))));
    }
    Ok(e)
}
