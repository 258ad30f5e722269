//! Smart constructors and the simplification pass.

use std::collections::HashMap;

use num_traits::{CheckedAdd, CheckedMul, One, Signed, ToPrimitive, Zero};

use super::intern::{make, rational};
use super::{rational_to_f64, Expr, Func, Kind, Rational};

/// A folded numeric constant: exact while it fits, float after overflow or
/// once a float literal is involved.
#[derive(Clone, Copy, Debug)]
enum Num {
    Q(Rational),
    F(f64),
}

impl Num {
    fn of(e: &Expr) -> Option<Num> {
        match e.kind() {
            Kind::Rational(q) => Some(Num::Q(*q)),
            Kind::Float(x) => Some(Num::F(*x)),
            _ => None,
        }
    }

    fn to_f64(self) -> f64 {
        match self {
            Num::Q(q) => rational_to_f64(&q),
            Num::F(x) => x,
        }
    }

    fn add(self, o: Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => match a.checked_add(&b) {
                Some(s) => Num::Q(s),
                None => Num::F(rational_to_f64(&a) + rational_to_f64(&b)),
            },
            _ => Num::F(self.to_f64() + o.to_f64()),
        }
    }

    fn mul(self, o: Num) -> Num {
        match (self, o) {
            (Num::Q(a), Num::Q(b)) => match a.checked_mul(&b) {
                Some(s) => Num::Q(s),
                None => Num::F(rational_to_f64(&a) * rational_to_f64(&b)),
            },
            _ => Num::F(self.to_f64() * o.to_f64()),
        }
    }

    fn is_zero(self) -> bool {
        match self {
            Num::Q(q) => q.is_zero(),
            Num::F(x) => x == 0.0,
        }
    }

    fn is_one(self) -> bool {
        match self {
            Num::Q(q) => q.is_one(),
            Num::F(x) => x == 1.0,
        }
    }

    fn expr(self) -> Expr {
        match self {
            Num::Q(q) => rational(q),
            Num::F(x) => Expr::from_f64(x),
        }
    }
}

fn checked_ipow(base: Rational, exp: u32) -> Option<Rational> {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc = acc.checked_mul(&base)?;
    }
    Some(acc)
}

/// Exact k-th root of a non-negative integer, if it exists.
fn exact_root(v: i128, k: u32) -> Option<i128> {
    if v < 0 {
        return None;
    }
    if v < 2 {
        return Some(v);
    }
    let guess = (v as f64).powf(1.0 / k as f64).round() as i128;
    for c in [guess - 1, guess, guess + 1] {
        if c >= 0 && c.checked_pow(k) == Some(v) {
            return Some(c);
        }
    }
    None
}

/// Split a term into (numeric coefficient, non-constant rest).
fn split_coeff(e: &Expr) -> (Num, Option<Expr>) {
    if let Some(c) = Num::of(e) {
        return (c, None);
    }
    if let Kind::Product(fs) = e.kind() {
        if let Some(c) = Num::of(&fs[0]) {
            let rest = if fs.len() == 2 {
                fs[1].clone()
            } else {
                make(Kind::Product(fs[1..].to_vec().into_boxed_slice()))
            };
            return (c, Some(rest));
        }
    }
    (Num::Q(Rational::one()), Some(e.clone()))
}

/// Coefficient times a constant-free term, without re-running collection.
fn scale(c: Num, rest: Expr) -> Expr {
    if c.is_zero() {
        return Expr::zero();
    }
    if c.is_one() {
        return rest;
    }
    let mut fs = vec![c.expr()];
    match rest.kind() {
        Kind::Product(inner) => fs.extend(inner.iter().cloned()),
        _ => fs.push(rest),
    }
    make(Kind::Product(fs.into_boxed_slice()))
}

fn sort_by_hash(xs: &mut [Expr]) {
    xs.sort_by(|a, b| {
        a.structural_hash()
            .cmp(&b.structural_hash())
            .then(a.id().cmp(&b.id()))
    });
}

impl Expr {
    pub fn rational(q: Rational) -> Expr {
        rational(q)
    }

    pub fn int(v: i64) -> Expr {
        rational(Rational::from_integer(v as i128))
    }

    pub fn frac(n: i64, d: i64) -> Expr {
        rational(Rational::new(n as i128, d as i128))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    /// Float literal. Integral values that fit exactly become rationals.
    pub fn from_f64(x: f64) -> Expr {
        if x.is_finite() && x.fract() == 0.0 && x.abs() < 9.0e15 {
            return rational(Rational::from_integer(x as i128));
        }
        make(Kind::Float(x))
    }

    pub fn pi() -> Expr {
        make(Kind::Float(std::f64::consts::PI))
    }

    pub fn coord(i: usize) -> Expr {
        make(Kind::Coord(i))
    }

    pub fn param(name: &str) -> Expr {
        make(Kind::Param(name.into()))
    }

    /// Sum with flattening, constant folding and like-term collection.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut flat = Vec::new();
        let mut stack: Vec<Expr> = terms.into_iter().collect();
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.kind() {
                Kind::Sum(xs) => {
                    for x in xs.iter().rev() {
                        stack.push(x.clone());
                    }
                }
                Kind::Neg(a) => flat.push(Expr::product([Expr::int(-1), a.clone()])),
                _ => flat.push(t),
            }
        }
        let mut constant = Num::Q(Rational::zero());
        let mut order: Vec<u64> = Vec::new();
        let mut coeffs: HashMap<u64, (Num, Expr)> = HashMap::new();
        for t in flat {
            let (c, rest) = split_coeff(&t);
            match rest {
                None => constant = constant.add(c),
                Some(r) => {
                    let id = r.id();
                    match coeffs.get_mut(&id) {
                        Some(entry) => entry.0 = entry.0.add(c),
                        None => {
                            order.push(id);
                            coeffs.insert(id, (c, r));
                        }
                    }
                }
            }
        }
        let mut out: Vec<Expr> = Vec::new();
        for id in order {
            let (c, r) = coeffs.remove(&id).expect("collected term");
            if !c.is_zero() {
                out.push(scale(c, r));
            }
        }
        sort_by_hash(&mut out);
        if !constant.is_zero() {
            out.insert(0, constant.expr());
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().expect("one term"),
            _ => make(Kind::Sum(out.into_boxed_slice())),
        }
    }

    /// Product with flattening, constant folding, 0/1 absorption and merging
    /// of powers with a common base.
    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut constant = Num::Q(Rational::one());
        let mut order: Vec<u64> = Vec::new();
        let mut powers: HashMap<u64, (Expr, Rational)> = HashMap::new();
        let mut stack: Vec<Expr> = factors.into_iter().collect();
        stack.reverse();
        while let Some(f) = stack.pop() {
            if let Some(c) = Num::of(&f) {
                constant = constant.mul(c);
                continue;
            }
            let (base, e) = match f.kind() {
                Kind::Product(xs) => {
                    for x in xs.iter().rev() {
                        stack.push(x.clone());
                    }
                    continue;
                }
                Kind::Neg(a) => {
                    constant = constant.mul(Num::Q(-Rational::one()));
                    stack.push(a.clone());
                    continue;
                }
                Kind::Pow(b, e) => (b.clone(), *e),
                _ => (f.clone(), Rational::one()),
            };
            let id = base.id();
            match powers.get_mut(&id) {
                Some(entry) => entry.1 += e,
                None => {
                    order.push(id);
                    powers.insert(id, (base, e));
                }
            }
        }
        if constant.is_zero() {
            return Expr::zero();
        }
        let mut out: Vec<Expr> = Vec::new();
        for id in order {
            let (b, e) = powers.remove(&id).expect("collected factor");
            if e.is_zero() {
                continue;
            }
            let p = b.pow(e);
            if let Some(c) = Num::of(&p) {
                constant = constant.mul(c);
            } else if let Kind::Product(xs) = p.kind() {
                // a power that distributed into a product
                for x in xs.iter() {
                    if let Some(c) = Num::of(x) {
                        constant = constant.mul(c);
                    } else {
                        out.push(x.clone());
                    }
                }
            } else {
                out.push(p);
            }
        }
        sort_by_hash(&mut out);
        if out.is_empty() {
            return constant.expr();
        }
        if constant.is_one() && out.len() == 1 {
            return out.pop().expect("one factor");
        }
        if !constant.is_one() {
            out.insert(0, constant.expr());
        }
        make(Kind::Product(out.into_boxed_slice()))
    }

    pub fn add(&self, other: &Expr) -> Expr {
        Expr::sum([self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Expr {
        Expr::sum([self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Expr {
        Expr::product([self.clone(), other.clone()])
    }

    pub fn div(&self, other: &Expr) -> Expr {
        Expr::product([self.clone(), other.pow(-Rational::one())])
    }

    pub fn neg(&self) -> Expr {
        Expr::product([Expr::int(-1), self.clone()])
    }

    pub fn scale_by(&self, c: Rational) -> Expr {
        Expr::product([rational(c), self.clone()])
    }

    pub fn powi(&self, e: i64) -> Expr {
        self.pow(Rational::from_integer(e as i128))
    }

    pub fn pow(&self, e: Rational) -> Expr {
        if e.is_zero() {
            return Expr::one();
        }
        if e.is_one() {
            return self.clone();
        }
        let integral = e.is_integer();
        match self.kind() {
            Kind::Rational(q) => {
                if q.is_zero() {
                    if e.is_positive() {
                        return Expr::zero();
                    }
                    return make(Kind::Pow(self.clone(), e));
                }
                if q.is_one() {
                    return Expr::one();
                }
                let num = *e.numer();
                let den = *e.denom();
                if let (Some(nabs), Some(d)) = (num.abs().to_u32(), den.to_u32()) {
                    // exact d-th root, then integer power
                    let root = if d == 1 {
                        Some(*q)
                    } else if q.is_positive() {
                        match (exact_root(*q.numer(), d), exact_root(*q.denom(), d)) {
                            (Some(a), Some(b)) => Some(Rational::new(a, b)),
                            _ => None,
                        }
                    } else {
                        None
                    };
                    if let Some(r) = root {
                        if let Some(p) = checked_ipow(r, nabs) {
                            return rational(if num < 0 { p.recip() } else { p });
                        }
                        if integral {
                            return Expr::from_f64(rational_to_f64(&r).powi(num as i32));
                        }
                    }
                }
                make(Kind::Pow(self.clone(), e))
            }
            Kind::Float(x) => {
                let v = x.powf(rational_to_f64(&e));
                if v.is_finite() && (integral || *x >= 0.0) {
                    Expr::from_f64(v)
                } else {
                    make(Kind::Pow(self.clone(), e))
                }
            }
            Kind::Pow(b, e1) if integral => b.pow(e1 * e),
            Kind::Product(fs) if integral => Expr::product(fs.iter().map(|f| f.pow(e))),
            Kind::Neg(a) if integral => {
                let p = a.pow(e);
                if e.numer() % 2 == 0 {
                    p
                } else {
                    p.neg()
                }
            }
            _ => make(Kind::Pow(self.clone(), e)),
        }
    }

    pub fn sqrt(&self) -> Expr {
        self.pow(Rational::new(1, 2))
    }

    pub fn func(f: Func, arg: &Expr) -> Expr {
        if f == Func::Sqrt {
            return arg.sqrt();
        }
        if arg.is_zero() {
            match f {
                Func::Sin | Func::Tan => return Expr::zero(),
                Func::Cos | Func::Exp => return Expr::one(),
                _ => {}
            }
        }
        if f == Func::Log {
            if arg.is_one() {
                return Expr::zero();
            }
            if let Kind::Func(Func::Exp, inner) = arg.kind() {
                return inner.clone();
            }
        }
        if let Kind::Float(x) = arg.kind() {
            let v = eval_func(f, *x);
            if v.is_finite() {
                return Expr::from_f64(v);
            }
        }
        make(Kind::Func(f, arg.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::func(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::func(Func::Cos, self)
    }

    pub fn tan(&self) -> Expr {
        Expr::func(Func::Tan, self)
    }

    pub fn exp(&self) -> Expr {
        Expr::func(Func::Exp, self)
    }

    pub fn ln(&self) -> Expr {
        Expr::func(Func::Log, self)
    }
}

pub(crate) fn eval_func(f: Func, x: f64) -> f64 {
    match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => x.tan(),
        Func::Exp => x.exp(),
        Func::Log => x.ln(),
        Func::Sqrt => x.sqrt(),
    }
}

impl std::ops::Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        Expr::add(self, rhs)
    }
}

impl std::ops::Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        Expr::sub(self, rhs)
    }
}

impl std::ops::Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        Expr::mul(self, rhs)
    }
}

impl std::ops::Div for &Expr {
    type Output = Expr;
    fn div(self, rhs: &Expr) -> Expr {
        Expr::div(self, rhs)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

/// Node-count guard for the fixpoint loop: stop if a pass grows the DAG past
/// this multiple of the input size.
const GROWTH_GUARD: usize = 4;
const MAX_PASSES: usize = 16;

/// Rebuild an expression through the smart constructors until it stops
/// changing. Semantics-preserving on the expression's real domain; not a
/// canonical form.
pub fn simplify_expr(e: &Expr) -> Expr {
    let start = e.node_count();
    let mut cur = e.clone();
    for _ in 0..MAX_PASSES {
        let next = rebuild(&cur);
        if next == cur {
            break;
        }
        if next.node_count() > GROWTH_GUARD * start + 16 {
            break;
        }
        cur = next;
    }
    cur
}

fn rebuild(e: &Expr) -> Expr {
    let mut memo: HashMap<u64, Expr> = HashMap::new();
    // iterative post-order so deep parse trees cannot overflow the stack
    let mut stack = vec![(e.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if memo.contains_key(&node.id()) {
            continue;
        }
        if !expanded {
            stack.push((node.clone(), true));
            for c in node.children() {
                if !memo.contains_key(&c.id()) {
                    stack.push((c, false));
                }
            }
            continue;
        }
        let m = |x: &Expr| memo[&x.id()].clone();
        let out = match node.kind() {
            Kind::Rational(_) | Kind::Coord(_) | Kind::Param(_) => node.clone(),
            Kind::Float(x) => Expr::from_f64(*x),
            Kind::Sum(xs) => Expr::sum(xs.iter().map(m)),
            Kind::Product(xs) => Expr::product(xs.iter().map(m)),
            Kind::Quotient(a, b) => m(a).div(&m(b)),
            Kind::Pow(a, p) => m(a).pow(*p),
            Kind::Neg(a) => m(a).neg(),
            Kind::Func(f, a) => Expr::func(*f, &m(a)),
        };
        memo.insert(node.id(), out);
    }
    memo[&e.id()].clone()
}
