use std::collections::HashMap;

use num_traits::One;

use super::{Expr, Func, Kind, Rational};

/// Memoized symbolic differentiation. Reuse one instance across many
/// derivatives of related expressions: results are cached per (node, coordinate).
#[derive(Default)]
pub struct Differentiator {
    memo: HashMap<(u64, usize), Expr>,
}

impl Differentiator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Partial derivative of `e` with respect to coordinate `var`.
    pub fn d(&mut self, e: &Expr, var: usize) -> Expr {
        if !e.depends_on(var) {
            return Expr::zero();
        }
        if let Some(hit) = self.memo.get(&(e.id(), var)) {
            return hit.clone();
        }
        // Children first, iteratively, so that very deep chains do not
        // recurse through the whole tree at once.
        let mut pending = vec![(e.clone(), false)];
        while let Some((node, ready)) = pending.pop() {
            if self.memo.contains_key(&(node.id(), var)) {
                continue;
            }
            if !ready {
                pending.push((node.clone(), true));
                for c in node.children() {
                    if c.depends_on(var) && !self.memo.contains_key(&(c.id(), var)) {
                        pending.push((c, false));
                    }
                }
                continue;
            }
            let out = self.rule(&node, var);
            self.memo.insert((node.id(), var), out);
        }
        self.memo[&(e.id(), var)].clone()
    }

    /// Mixed partial along a sequence of coordinates.
    pub fn d_multi(&mut self, e: &Expr, vars: &[usize]) -> Expr {
        vars.iter().fold(e.clone(), |acc, &v| self.d(&acc, v))
    }

    fn get(&self, e: &Expr, var: usize) -> Expr {
        if !e.depends_on(var) {
            return Expr::zero();
        }
        self.memo[&(e.id(), var)].clone()
    }

    fn rule(&self, e: &Expr, var: usize) -> Expr {
        match e.kind() {
            Kind::Rational(_) | Kind::Float(_) | Kind::Param(_) => Expr::zero(),
            Kind::Coord(i) => {
                if *i == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Kind::Sum(xs) => Expr::sum(xs.iter().map(|x| self.get(x, var))),
            Kind::Product(xs) => {
                let mut terms = Vec::new();
                for (i, x) in xs.iter().enumerate() {
                    if !x.depends_on(var) {
                        continue;
                    }
                    let mut fs: Vec<Expr> = Vec::with_capacity(xs.len());
                    for (j, y) in xs.iter().enumerate() {
                        if i != j {
                            fs.push(y.clone());
                        }
                    }
                    fs.push(self.get(x, var));
                    terms.push(Expr::product(fs));
                }
                Expr::sum(terms)
            }
            Kind::Quotient(a, b) => {
                let da = self.get(a, var);
                let db = self.get(b, var);
                let num = da.mul(b).sub(&a.mul(&db));
                num.div(&b.powi(2))
            }
            Kind::Pow(b, p) => {
                let db = self.get(b, var);
                Expr::product([Expr::rational(*p), b.pow(p - Rational::one()), db])
            }
            Kind::Neg(a) => self.get(a, var).neg(),
            Kind::Func(f, a) => {
                let da = self.get(a, var);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Tan => a.cos().powi(-2),
                    Func::Exp => e.clone(),
                    Func::Log => a.powi(-1),
                    Func::Sqrt => a.pow(Rational::new(-1, 2)).scale_by(Rational::new(1, 2)),
                };
                outer.mul(&da)
            }
        }
    }
}

/// Exact symbolic partial derivative with respect to coordinate `coord`.
pub fn diff_expr(e: &Expr, coord: usize) -> Expr {
    Differentiator::new().d(e, coord)
}
