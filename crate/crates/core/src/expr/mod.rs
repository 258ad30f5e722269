//! Closed-form expressions over chart coordinates.
//!
//! Expressions are immutable, hash-consed DAG nodes: two structurally equal
//! expressions built anywhere in the process share one allocation, so
//! equality is pointer equality and memoized passes (differentiation, tape
//! compilation) see maximal sharing.
//!
//! The smart constructors ([`Expr::add`], [`Expr::mul`], [`Expr::pow`], ...)
//! apply the local rewrite rules (constant folding, identity absorption,
//! like-term collection, power merging). The parser builds raw nodes so
//! that printing a parsed expression reproduces its shape.

mod build;
mod diff;
mod display;
mod eval;
mod intern;
mod parse;

use std::fmt;
use std::sync::Arc;

pub use diff::{diff_expr, Differentiator};
pub use display::Named;
pub use eval::{eval_expr, ParamValues, Tape};
pub(crate) use eval::Op;
pub use build::simplify_expr;
pub use parse::parse_expr;

/// Exact rational used for literals and exponents.
pub type Rational = num_rational::Ratio<i128>;

/// Elementary functions available in the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

/// Node payload.
#[derive(Clone, Debug)]
pub enum Kind {
    Rational(Rational),
    Float(f64),
    Coord(usize),
    Param(Arc<str>),
    Sum(Box<[Expr]>),
    Product(Box<[Expr]>),
    Quotient(Expr, Expr),
    Pow(Expr, Rational),
    Neg(Expr),
    Func(Func, Expr),
}

pub(crate) struct Node {
    id: u64,
    hash: u64,
    /// Bit i set when coordinate i occurs below this node.
    deps: u64,
    kind: Kind,
}

/// A shared, immutable expression node.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

/// Largest supported chart dimension (coordinate dependency masks are 64-bit).
pub const MAX_COORDS: usize = 64;

impl Expr {
    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    /// Process-unique node id. Structurally equal expressions share an id.
    pub fn id(&self) -> u64 {
        self.0.id
    }

    /// Structural hash, independent of construction order.
    pub fn structural_hash(&self) -> u64 {
        self.0.hash
    }

    /// Bit mask of coordinates this expression depends on.
    pub fn coord_mask(&self) -> u64 {
        self.0.deps
    }

    pub fn depends_on(&self, coord: usize) -> bool {
        coord < MAX_COORDS && self.0.deps & (1u64 << coord) != 0
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_coord(&self) -> Option<usize> {
        if self.0.deps == 0 {
            None
        } else {
            Some(63 - self.0.deps.leading_zeros() as usize)
        }
    }

    pub fn as_rational(&self) -> Option<Rational> {
        match self.kind() {
            Kind::Rational(q) => Some(*q),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind(), Kind::Rational(q) if *q == Rational::from_integer(0))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.kind(), Kind::Rational(q) if *q == Rational::from_integer(1))
    }

    /// Numeric value when the node is a literal constant.
    pub fn constant_value(&self) -> Option<f64> {
        match self.kind() {
            Kind::Rational(q) => Some(rational_to_f64(q)),
            Kind::Float(x) => Some(*x),
            _ => None,
        }
    }

    /// Number of distinct nodes reachable from this expression.
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            stack.extend(e.children().into_iter());
        }
        seen.len()
    }

    pub fn children(&self) -> Vec<Expr> {
        match self.kind() {
            Kind::Rational(_) | Kind::Float(_) | Kind::Coord(_) | Kind::Param(_) => Vec::new(),
            Kind::Sum(xs) | Kind::Product(xs) => xs.to_vec(),
            Kind::Quotient(a, b) => vec![a.clone(), b.clone()],
            Kind::Pow(a, _) | Kind::Neg(a) | Kind::Func(_, a) => vec![a.clone()],
        }
    }

    /// Names of all parameters occurring in the expression.
    pub fn params(&self) -> Vec<Arc<str>> {
        let mut seen = std::collections::HashSet::new();
        let mut out: Vec<Arc<str>> = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if !seen.insert(e.id()) {
                continue;
            }
            if let Kind::Param(name) = e.kind() {
                if !out.iter().any(|p| p == name) {
                    out.push(name.clone());
                }
            }
            stack.extend(e.children());
        }
        out.sort();
        out
    }

    /// Replace named parameters by constants, rebuilding through the smart
    /// constructors.
    pub fn bind_params(&self, values: &ParamValues) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.rewrite(&mut memo, &|e| match e.kind() {
            Kind::Param(name) => values.get(&**name).map(|v| Expr::from_f64(*v)),
            _ => None,
        })
    }

    /// Renumber coordinates: coordinate `i` becomes `map[i]`.
    pub fn remap_coords(&self, map: &[usize]) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.rewrite(&mut memo, &|e| match e.kind() {
            Kind::Coord(i) => Some(Expr::coord(map[*i])),
            _ => None,
        })
    }

    /// Substitute expressions for coordinates.
    pub fn substitute_coords(&self, subs: &[Expr]) -> Expr {
        let mut memo = std::collections::HashMap::new();
        self.rewrite(&mut memo, &|e| match e.kind() {
            Kind::Coord(i) => subs.get(*i).cloned(),
            _ => None,
        })
    }

    /// Bottom-up rebuild. `leaf` may replace any node outright; otherwise the
    /// node is rebuilt from rewritten children with the smart constructors.
    fn rewrite(
        &self,
        memo: &mut std::collections::HashMap<u64, Expr>,
        leaf: &dyn Fn(&Expr) -> Option<Expr>,
    ) -> Expr {
        if let Some(hit) = memo.get(&self.id()) {
            return hit.clone();
        }
        let out = if let Some(r) = leaf(self) {
            r
        } else {
            match self.kind() {
                Kind::Rational(_) | Kind::Float(_) | Kind::Coord(_) | Kind::Param(_) => self.clone(),
                Kind::Sum(xs) => Expr::sum(xs.iter().map(|x| x.rewrite(memo, leaf))),
                Kind::Product(xs) => Expr::product(xs.iter().map(|x| x.rewrite(memo, leaf))),
                Kind::Quotient(a, b) => a.rewrite(memo, leaf).div(&b.rewrite(memo, leaf)),
                Kind::Pow(a, e) => a.rewrite(memo, leaf).pow(*e),
                Kind::Neg(a) => a.rewrite(memo, leaf).neg(),
                Kind::Func(f, a) => Expr::func(*f, &a.rewrite(memo, leaf)),
            }
        };
        memo.insert(self.id(), out.clone());
        out
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl Eq for Expr {}

impl std::hash::Hash for Expr {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.id.hash(state);
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({})", self)
    }
}

pub(crate) fn rational_to_f64(q: &Rational) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

/// Errors raised while parsing or evaluating expressions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("division at byte {offset} has an empty denominator")]
    EmptyDenominator { offset: usize },
    #[error("domain error in `{subexpr}`: {message}")]
    Domain { message: String, subexpr: String },
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
    #[error("coordinate index {index} out of range for dimension {dim}")]
    CoordOutOfRange { index: usize, dim: usize },
}

#[cfg(test)]
mod tests;
