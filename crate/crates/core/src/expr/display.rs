//! Printing in the input grammar, so printed expressions parse back.

use std::fmt;

use num_traits::Signed;

use super::{Expr, Kind, Rational};

/// An expression paired with coordinate names for printing.
pub struct Named<'a> {
    pub expr: &'a Expr,
    pub coords: &'a [String],
}

impl Expr {
    pub fn named<'a>(&'a self, coords: &'a [String]) -> Named<'a> {
        Named { expr: self, coords }
    }
}

// binding strength of the outermost operator
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e.kind() {
        // negative and fractional literals print parenthesised
        Kind::Rational(_) | Kind::Float(_) => ATOM,
        Kind::Coord(_) | Kind::Param(_) | Kind::Func(..) => ATOM,
        Kind::Sum(_) => SUM,
        Kind::Product(_) | Kind::Quotient(..) => PRODUCT,
        Kind::Neg(_) => UNARY,
        Kind::Pow(..) => POWER,
    }
}

fn write_rational(f: &mut fmt::Formatter<'_>, q: &Rational) -> fmt::Result {
    if q.is_integer() && !q.is_negative() {
        write!(f, "{}", q.numer())
    } else if q.is_integer() {
        write!(f, "({})", q.numer())
    } else {
        write!(f, "({}/{})", q.numer(), q.denom())
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr, names: Option<&[String]>) -> fmt::Result {
    let child = |f: &mut fmt::Formatter<'_>, c: &Expr, min: u8| -> fmt::Result {
        if prec(c) < min {
            write!(f, "(")?;
            write_expr(f, c, names)?;
            write!(f, ")")
        } else {
            write_expr(f, c, names)
        }
    };
    match e.kind() {
        Kind::Rational(q) => write_rational(f, q),
        Kind::Float(x) => {
            if *x < 0.0 {
                write!(f, "({})", x)
            } else {
                write!(f, "{}", x)
            }
        }
        Kind::Coord(i) => match names.and_then(|n| n.get(*i)) {
            Some(name) => write!(f, "{}", name),
            None => write!(f, "x{}", i),
        },
        Kind::Param(p) => write!(f, "{}", p),
        Kind::Sum(xs) => {
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    write!(f, " + ")?;
                }
                child(f, x, SUM + 1)?;
            }
            Ok(())
        }
        Kind::Product(xs) => {
            for (k, x) in xs.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                child(f, x, PRODUCT + 1)?;
            }
            Ok(())
        }
        Kind::Quotient(a, b) => {
            child(f, a, PRODUCT)?;
            write!(f, "/")?;
            child(f, b, PRODUCT + 1)
        }
        Kind::Neg(a) => {
            write!(f, "-")?;
            child(f, a, POWER)
        }
        Kind::Pow(b, p) => {
            child(f, b, ATOM)?;
            if p.is_integer() && p.is_positive() {
                write!(f, "^{}", p.numer())
            } else if p.is_integer() {
                write!(f, "^({})", p.numer())
            } else {
                write!(f, "^({}/{})", p.numer(), p.denom())
            }
        }
        Kind::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a, names)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, None)
    }
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self.expr, Some(self.coords))
    }
}
