//! Compilation of expression DAGs into flat instruction tapes.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::build::eval_func;
use super::{rational_to_f64, Expr, ExprError, Func, Kind};

/// Named parameter values.
pub type ParamValues = BTreeMap<String, f64>;

#[derive(Clone, Debug)]
pub(crate) enum Op {
    Const(f64),
    Coord(usize),
    Param(usize),
    Sum(Box<[usize]>),
    Product(Box<[usize]>),
    Div(usize, usize),
    /// Integer power.
    PowI(usize, i32),
    /// Non-integer rational power.
    PowF(usize, f64),
    Neg(usize),
    Func(Func, usize),
}

/// A compiled set of expressions. Shared subexpressions are evaluated once.
#[derive(Clone)]
pub struct Tape {
    pub(crate) ops: Vec<Op>,
    pub(crate) exprs: Vec<Expr>,
    pub(crate) roots: Vec<usize>,
    pub(crate) params: Vec<Arc<str>>,
    pub(crate) dim: usize,
}

impl Tape {
    /// Compile `roots` for evaluation on points of dimension `dim`.
    pub fn compile(roots: &[Expr], dim: usize) -> Result<Tape, ExprError> {
        let mut slot: HashMap<u64, usize> = HashMap::new();
        let mut ops = Vec::new();
        let mut exprs = Vec::new();
        let mut params: Vec<Arc<str>> = Vec::new();
        for r in roots {
            if let Some(m) = r.max_coord() {
                if m >= dim {
                    return Err(ExprError::CoordOutOfRange { index: m, dim });
                }
            }
        }
        for root in roots {
            let mut stack = vec![(root.clone(), false)];
            while let Some((node, ready)) = stack.pop() {
                if slot.contains_key(&node.id()) {
                    continue;
                }
                if !ready {
                    stack.push((node.clone(), true));
                    for c in node.children() {
                        if !slot.contains_key(&c.id()) {
                            stack.push((c, false));
                        }
                    }
                    continue;
                }
                let s = |x: &Expr| slot[&x.id()];
                let op = match node.kind() {
                    Kind::Rational(q) => Op::Const(rational_to_f64(q)),
                    Kind::Float(x) => Op::Const(*x),
                    Kind::Coord(i) => Op::Coord(*i),
                    Kind::Param(p) => {
                        let idx = match params.iter().position(|q| q == p) {
                            Some(i) => i,
                            None => {
                                params.push(p.clone());
                                params.len() - 1
                            }
                        };
                        Op::Param(idx)
                    }
                    Kind::Sum(xs) => Op::Sum(xs.iter().map(s).collect()),
                    Kind::Product(xs) => Op::Product(xs.iter().map(s).collect()),
                    Kind::Quotient(a, b) => Op::Div(s(a), s(b)),
                    Kind::Pow(a, e) => {
                        if e.is_integer() && e.numer().abs() < i32::MAX as i128 {
                            Op::PowI(s(a), *e.numer() as i32)
                        } else {
                            Op::PowF(s(a), rational_to_f64(e))
                        }
                    }
                    Kind::Neg(a) => Op::Neg(s(a)),
                    Kind::Func(f, a) => Op::Func(*f, s(a)),
                };
                slot.insert(node.id(), ops.len());
                ops.push(op);
                exprs.push(node);
            }
        }
        let roots = roots.iter().map(|r| slot[&r.id()]).collect();
        Ok(Tape { ops, exprs, roots, params, dim })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn num_roots(&self) -> usize {
        self.roots.len()
    }

    pub fn param_names(&self) -> &[Arc<str>] {
        &self.params
    }

    pub(crate) fn bind(&self, values: &ParamValues) -> Result<Vec<f64>, ExprError> {
        self.params
            .iter()
            .map(|p| {
                values
                    .get(&**p)
                    .copied()
                    .ok_or_else(|| ExprError::UnboundParam(p.to_string()))
            })
            .collect()
    }

    pub(crate) fn domain_error(&self, slot: usize, message: &str) -> ExprError {
        ExprError::Domain { message: message.to_string(), subexpr: self.exprs[slot].to_string() }
    }

    /// Evaluate every root at `point`.
    pub fn eval(&self, point: &[f64], values: &ParamValues) -> Result<Vec<f64>, ExprError> {
        let bound = self.bind(values)?;
        let mut scratch = vec![0.0; self.ops.len()];
        self.eval_with(point, &bound, &mut scratch)?;
        Ok(self.roots.iter().map(|&r| scratch[r]).collect())
    }

    /// Evaluate with pre-bound parameters into a caller-owned scratch buffer;
    /// root values are read back with [`Tape::root_value`].
    pub fn eval_with(&self, point: &[f64], bound: &[f64], scratch: &mut Vec<f64>) -> Result<(), ExprError> {
        if point.len() != self.dim {
            return Err(ExprError::PointDimension { expected: self.dim, got: point.len() });
        }
        scratch.resize(self.ops.len(), 0.0);
        for (k, op) in self.ops.iter().enumerate() {
            let v = match op {
                Op::Const(c) => *c,
                Op::Coord(i) => point[*i],
                Op::Param(i) => bound[*i],
                Op::Sum(xs) => xs.iter().map(|&x| scratch[x]).sum(),
                Op::Product(xs) => xs.iter().map(|&x| scratch[x]).product(),
                Op::Div(a, b) => {
                    if scratch[*b] == 0.0 {
                        return Err(self.domain_error(k, "division by zero"));
                    }
                    scratch[*a] / scratch[*b]
                }
                Op::PowI(a, e) => {
                    if *e < 0 && scratch[*a] == 0.0 {
                        return Err(self.domain_error(k, "division by zero"));
                    }
                    scratch[*a].powi(*e)
                }
                Op::PowF(a, e) => {
                    let b = scratch[*a];
                    if b < 0.0 {
                        return Err(self.domain_error(k, "fractional power of a negative number"));
                    }
                    if b == 0.0 && *e < 0.0 {
                        return Err(self.domain_error(k, "division by zero"));
                    }
                    b.powf(*e)
                }
                Op::Neg(a) => -scratch[*a],
                Op::Func(f, a) => {
                    let x = scratch[*a];
                    match f {
                        Func::Log if x <= 0.0 => {
                            return Err(self.domain_error(k, "logarithm of a non-positive number"))
                        }
                        Func::Sqrt if x < 0.0 => {
                            return Err(self.domain_error(k, "square root of a negative number"))
                        }
                        _ => eval_func(*f, x),
                    }
                }
            };
            if !v.is_finite() {
                return Err(self.domain_error(k, "non-finite value"));
            }
            scratch[k] = v;
        }
        Ok(())
    }

    pub fn root_value(&self, scratch: &[f64], root: usize) -> f64 {
        scratch[self.roots[root]]
    }
}

/// Evaluate a single expression at a point.
pub fn eval_expr(e: &Expr, point: &[f64], values: &ParamValues) -> Result<f64, ExprError> {
    let tape = Tape::compile(std::slice::from_ref(e), point.len())?;
    Ok(tape.eval(point, values)?[0])
}
