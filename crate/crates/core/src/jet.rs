//! Truncated multivariate Taylor jets.
//!
//! A jet of order `k` at a point `a` stores the coefficients `c_α = ∂^α f(a) / α!`
//! for all multi-indices with `|α| ≤ k`. Monomials are kept in graded order,
//! so truncating a jet to a lower order is a prefix of its coefficient vector.
//! Differentiation lowers the order by one; products take the smaller order.

use std::collections::HashMap;

use crate::expr::{ExprError, Func, Op, Tape};

/// Monomial tables for a fixed number of variables and maximal order.
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    /// `prefix[d]` = number of monomials of degree ≤ d.
    prefix: Vec<usize>,
    /// Product triples (a, b, out) sorted by degree of `out`.
    mul: Vec<(u32, u32, u32)>,
    /// `mul_end[d]` = number of triples with output degree ≤ d.
    mul_end: Vec<usize>,
    /// Per variable: (dst, src, factor) for ∂_v, sorted by dst degree.
    deriv: Vec<Vec<(u32, u32, f64)>>,
    deriv_end: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub order: usize,
    pub c: Vec<f64>,
}

impl JetSpace {
    pub fn new(nvars: usize, order: usize) -> JetSpace {
        let mut exps: Vec<Vec<u8>> = Vec::new();
        let mut prefix = Vec::with_capacity(order + 1);
        for d in 0..=order {
            let mut cur = vec![0u8; nvars];
            monomials_of_degree(nvars, d, 0, &mut cur, &mut exps);
            prefix.push(exps.len());
        }
        let index: HashMap<Vec<u8>, usize> = exps.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
        let deg = |e: &[u8]| e.iter().map(|&x| x as usize).sum::<usize>();

        let mut mul = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                if deg(a) + deg(b) > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                mul.push((i as u32, j as u32, index[&s] as u32));
            }
        }
        mul.sort_by_key(|&(_, _, o)| o);
        let mut mul_end = vec![0; order + 1];
        for d in 0..=order {
            mul_end[d] = mul.partition_point(|&(_, _, o)| (o as usize) < prefix[d]);
        }

        let mut deriv = Vec::with_capacity(nvars);
        let mut deriv_end = Vec::with_capacity(nvars);
        for v in 0..nvars {
            let mut tab = Vec::new();
            for (dst, e) in exps.iter().enumerate() {
                if deg(e) + 1 > order {
                    continue;
                }
                let mut up = e.clone();
                up[v] += 1;
                tab.push((dst as u32, index[&up] as u32, up[v] as f64));
            }
            let ends = (0..=order)
                .map(|d| tab.partition_point(|&(dst, _, _)| (dst as usize) < prefix[d]))
                .collect();
            deriv.push(tab);
            deriv_end.push(ends);
        }
        JetSpace { nvars, order, exps, prefix, mul, mul_end, deriv, deriv_end }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exponents(&self, k: usize) -> &[u8] {
        &self.exps[k]
    }

    /// Index of the monomial with the given exponents.
    pub fn index_of(&self, e: &[u8]) -> Option<usize> {
        self.exps.iter().position(|x| x.as_slice() == e)
    }

    pub fn constant(&self, v: f64) -> Jet {
        let mut c = vec![0.0; self.len()];
        c[0] = v;
        Jet { order: self.order, c }
    }

    pub fn zero(&self) -> Jet {
        self.constant(0.0)
    }

    /// The jet of the coordinate function `x_var` at value `v`.
    pub fn variable(&self, var: usize, v: f64) -> Jet {
        let mut j = self.constant(v);
        if self.order >= 1 {
            j.c[1 + var] = 1.0;
        }
        j
    }

    fn live(&self, order: usize) -> usize {
        self.prefix[order]
    }

    pub fn is_zero(&self, a: &Jet) -> bool {
        a.c[..self.live(a.order)].iter().all(|&x| x == 0.0)
    }

    pub fn add(&self, a: &Jet, b: &Jet) -> Jet {
        let order = a.order.min(b.order);
        let mut out = vec![0.0; self.len()];
        for k in 0..self.live(order) {
            out[k] = a.c[k] + b.c[k];
        }
        Jet { order, c: out }
    }

    /// `acc += s * a`, lowering the order of `acc` if needed.
    pub fn axpy(&self, acc: &mut Jet, s: f64, a: &Jet) {
        if s == 0.0 {
            return;
        }
        acc.order = acc.order.min(a.order);
        for k in 0..self.live(acc.order) {
            acc.c[k] += s * a.c[k];
        }
    }

    pub fn sub(&self, a: &Jet, b: &Jet) -> Jet {
        let mut out = a.clone();
        self.axpy(&mut out, -1.0, b);
        out
    }

    pub fn scale(&self, a: &Jet, s: f64) -> Jet {
        let mut out = a.clone();
        out.c.iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        let order = a.order.min(b.order);
        let mut out = Jet { order, c: vec![0.0; self.len()] };
        self.mul_acc(&mut out, 1.0, a, b);
        out
    }

    /// `acc += s * a * b`.
    pub fn mul_acc(&self, acc: &mut Jet, s: f64, a: &Jet, b: &Jet) {
        acc.order = acc.order.min(a.order).min(b.order);
        if s == 0.0 || self.is_zero(a) || self.is_zero(b) {
            return;
        }
        // constant factors are common; handle them without the triple table
        let a_const = a.c[1..self.live(acc.order)].iter().all(|&x| x == 0.0);
        if a_const {
            let f = s * a.c[0];
            for k in 0..self.live(acc.order) {
                acc.c[k] += f * b.c[k];
            }
            return;
        }
        for &(i, j, o) in &self.mul[..self.mul_end[acc.order]] {
            acc.c[o as usize] += s * a.c[i as usize] * b.c[j as usize];
        }
    }

    /// Partial derivative in variable `var`; order drops by one.
    pub fn deriv(&self, a: &Jet, var: usize) -> Jet {
        assert!(a.order >= 1, "cannot differentiate an order-0 jet");
        let order = a.order - 1;
        let mut out = Jet { order, c: vec![0.0; self.len()] };
        for &(dst, src, f) in &self.deriv[var][..self.deriv_end[var][order]] {
            out.c[dst as usize] = f * a.c[src as usize];
        }
        out
    }

    /// Drop to a lower order.
    pub fn truncate(&self, a: &Jet, order: usize) -> Jet {
        let order = order.min(a.order);
        let mut out = a.clone();
        out.order = order;
        for x in &mut out.c[self.live(order)..] {
            *x = 0.0;
        }
        out
    }

    /// `Σ_k t[k] (a − a₀)^k`, where `t[k] = φ^(k)(a₀)/k!` for a univariate φ.
    pub fn compose(&self, a: &Jet, t: &[f64]) -> Jet {
        let mut h = a.clone();
        h.c[0] = 0.0;
        let k = a.order.min(t.len() - 1);
        let mut out = self.constant(t[k]);
        out.order = a.order;
        for i in (0..k).rev() {
            out = self.mul(&out, &h);
            out.c[0] += t[i];
        }
        out
    }

    pub fn recip(&self, a: &Jet) -> Jet {
        self.powf(a, -1.0)
    }

    pub fn powf(&self, a: &Jet, p: f64) -> Jet {
        let a0 = a.c[0];
        let mut t = vec![0.0; a.order + 1];
        let mut binom = 1.0;
        for (k, tk) in t.iter_mut().enumerate() {
            *tk = binom * a0.powf(p - k as f64);
            binom *= (p - k as f64) / (k as f64 + 1.0);
        }
        self.compose(a, &t)
    }

    pub fn powi(&self, a: &Jet, e: i32) -> Jet {
        if e < 0 {
            return self.powi(&self.recip(a), -e);
        }
        let mut result = self.constant(1.0);
        result.order = a.order;
        let mut base = a.clone();
        let mut e = e as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mul(&result, &base);
            }
            e >>= 1;
            if e > 0 {
                base = self.mul(&base, &base);
            }
        }
        result
    }

    pub fn func(&self, f: Func, a: &Jet) -> Jet {
        let a0 = a.c[0];
        let n = a.order + 1;
        let mut fact = 1.0;
        let mut t = vec![0.0; n];
        match f {
            Func::Exp => {
                for (k, tk) in t.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *tk = a0.exp() / fact;
                }
            }
            Func::Sin | Func::Cos => {
                let (sn, cs) = a0.sin_cos();
                // derivative cycles of sin and cos
                let cycle = if f == Func::Sin { [sn, cs, -sn, -cs] } else { [cs, -sn, -cs, sn] };
                for (k, tk) in t.iter_mut().enumerate() {
                    if k > 0 {
                        fact *= k as f64;
                    }
                    *tk = cycle[k % 4] / fact;
                }
            }
            Func::Log => {
                t[0] = a0.ln();
                for (k, tk) in t.iter_mut().enumerate().skip(1) {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    *tk = sign / (k as f64 * a0.powi(k as i32));
                }
            }
            Func::Sqrt => return self.powf(a, 0.5),
            Func::Tan => {
                let s = self.func(Func::Sin, a);
                let c = self.func(Func::Cos, a);
                return self.mul(&s, &self.recip(&c));
            }
        }
        self.compose(a, &t)
    }
}

fn monomials_of_degree(nvars: usize, d: usize, at: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if nvars == 0 {
        if d == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if at == nvars - 1 {
        cur[at] = d as u8;
        out.push(cur.clone());
        cur[at] = 0;
        return;
    }
    for k in (0..=d).rev() {
        cur[at] = k as u8;
        monomials_of_degree(nvars, d - k, at + 1, cur, out);
    }
    cur[at] = 0;
}

/// Evaluate every root of `tape` as a jet at `point`. `active[i]` maps chart
/// coordinate `i` to its jet variable; passive coordinates are held fixed.
pub fn eval_tape_jets(
    tape: &Tape,
    space: &JetSpace,
    point: &[f64],
    active: &[Option<usize>],
    bound: &[f64],
) -> Result<Vec<Jet>, ExprError> {
    if point.len() != tape.dim {
        return Err(ExprError::PointDimension { expected: tape.dim, got: point.len() });
    }
    let mut vals: Vec<Jet> = Vec::with_capacity(tape.len());
    for (k, op) in tape.ops.iter().enumerate() {
        let v = match *op {
            Op::Const(c) => space.constant(c),
            Op::Coord(i) => match active[i] {
                Some(v) => space.variable(v, point[i]),
                None => space.constant(point[i]),
            },
            Op::Param(i) => space.constant(bound[i]),
            Op::Sum(ref xs) => {
                let mut acc = space.zero();
                for &x in xs.iter() {
                    space.axpy(&mut acc, 1.0, &vals[x]);
                }
                acc
            }
            Op::Product(ref xs) => {
                let mut acc = vals[xs[0]].clone();
                for &x in &xs[1..] {
                    acc = space.mul(&acc, &vals[x]);
                }
                acc
            }
            Op::Div(a, b) => {
                if vals[b].c[0] == 0.0 {
                    return Err(tape.domain_error(k, "division by zero"));
                }
                space.mul(&vals[a], &space.recip(&vals[b]))
            }
            Op::PowI(a, e) => {
                if e < 0 && vals[a].c[0] == 0.0 {
                    return Err(tape.domain_error(k, "division by zero"));
                }
                space.powi(&vals[a], e)
            }
            Op::PowF(a, e) => {
                if vals[a].c[0] <= 0.0 {
                    return Err(tape.domain_error(k, "fractional power of a non-positive number"));
                }
                space.powf(&vals[a], e)
            }
            Op::Neg(a) => space.scale(&vals[a], -1.0),
            Op::Func(f, a) => {
                let x = vals[a].c[0];
                match f {
                    Func::Log if x <= 0.0 => return Err(tape.domain_error(k, "logarithm of a non-positive number")),
                    Func::Sqrt if x <= 0.0 => return Err(tape.domain_error(k, "square root of a non-positive number")),
                    _ => space.func(f, &vals[a]),
                }
            }
        };
        if !v.c[0].is_finite() {
            return Err(tape.domain_error(k, "non-finite value"));
        }
        vals.push(v);
    }
    Ok(tape.roots.iter().map(|&r| vals[r].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse_expr, ParamValues};

    fn factorial(k: u8) -> f64 {
        (1..=k as u64).product::<u64>() as f64
    }

    #[test]
    fn space_sizes() {
        // C(n+k, k) monomials
        assert_eq!(JetSpace::new(6, 5).len(), 462);
        assert_eq!(JetSpace::new(2, 3).len(), 10);
        assert_eq!(JetSpace::new(0, 4).len(), 1);
    }

    #[test]
    fn product_of_variables() {
        let s = JetSpace::new(2, 3);
        let x = s.variable(0, 1.0);
        let y = s.variable(1, 2.0);
        let p = s.mul(&x, &y);
        // (1+h)(2+k) = 2 + 2h + k + hk
        assert_eq!(p.c[0], 2.0);
        assert_eq!(p.c[s.index_of(&[1, 0]).unwrap()], 2.0);
        assert_eq!(p.c[s.index_of(&[0, 1]).unwrap()], 1.0);
        assert_eq!(p.c[s.index_of(&[1, 1]).unwrap()], 1.0);
    }

    #[test]
    fn tape_jets_match_repeated_derivatives() {
        use crate::expr::Differentiator;
        let src = "exp(sin(x)*y) / (2 + cos(x - y)) + log(3 + x*y)^2 + (1+x^2)^(1/3) * tan(y/3)";
        let e = parse_expr(src, &["x", "y"], &[]).unwrap();
        let tape = Tape::compile(std::slice::from_ref(&e), 2).unwrap();
        let space = JetSpace::new(2, 4);
        let pt = [0.3, -0.7];
        let jets = eval_tape_jets(&tape, &space, &pt, &[Some(0), Some(1)], &[]).unwrap();
        let mut d = Differentiator::new();
        for k in 0..space.len() {
            let ex = space.exponents(k).to_vec();
            let mut vars = vec![0; ex[0] as usize];
            vars.extend(vec![1; ex[1] as usize]);
            let de = d.d_multi(&e, &vars);
            let want = crate::expr::eval_expr(&de, &pt, &ParamValues::new()).unwrap() / (factorial(ex[0]) * factorial(ex[1]));
            let got = jets[0].c[k];
            assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{ex:?}: {got} vs {want}");
        }
    }

    #[test]
    fn derivative_lowers_order() {
        let s = JetSpace::new(1, 4);
        let x = s.variable(0, 0.5);
        let e = s.func(Func::Exp, &x);
        let de = s.deriv(&e, 0);
        assert_eq!(de.order, 3);
        // d/dx e^x = e^x on the surviving coefficients
        for k in 0..4 {
            assert!((de.c[k] - e.c[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn passive_coordinate_is_constant() {
        let e = parse_expr("x*y", &["x", "y"], &[]).unwrap();
        let tape = Tape::compile(std::slice::from_ref(&e), 2).unwrap();
        let space = JetSpace::new(1, 2);
        let j = eval_tape_jets(&tape, &space, &[2.0, 3.0], &[None, Some(0)], &[]).unwrap();
        assert_eq!(j[0].c, vec![6.0, 2.0, 0.0]);
    }
}
