//! Metric charts and the curvature engine.
//!
//! Sign conventions: `R^ρ_σμν = ∂_μΓ^ρ_νσ − ∂_νΓ^ρ_μσ + Γ^ρ_μλΓ^λ_νσ − Γ^ρ_νλΓ^λ_μσ`,
//! lowered on the first slot, so the unit sphere has `R_ijij > 0` and
//! `Ric = (n−1)g`. Ricci contracts slots 1 and 3: `Ric_jl = g^{ik} R_ijkl`.
//!
//! Two evaluation paths exist. The symbolic path keeps Γ, Ricci and the
//! scalar curvature as expressions (used for identity left-hand sides and
//! user scalar fields). The bundle path propagates truncated Taylor jets of
//! the metric through the same formulas, which gives exact derivatives of
//! every curvature quantity up to fifth order of the metric without the
//! expression swell of nested symbolic differentiation.

mod bundle;
mod symbolic;

use std::sync::OnceLock;

use serde::Serialize;

use crate::expr::{simplify_expr, Expr, ExprError, ParamValues, Tape};
use crate::jet::JetSpace;
use crate::tensor::{cholesky, TensorValue};

pub use bundle::{q_coefficients, scalar_jets, CurvatureBundle, JetTensor, LocalJets, FULL_ORDER};
pub use symbolic::{covariant_derivative, laplacian_scalar, SymTensor, SymbolicGeometry};

/// Largest chart dimension accepted.
pub const MAX_DIM: usize = 10;
/// Highest jet order kept per chart.
const MAX_JET_ORDER: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoordSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    /// Periodic coordinates identify `lo` with `hi`.
    pub periodic: bool,
    /// Polar angle of a closed manifold: the endpoints are coordinate
    /// singularities where the metric degenerates.
    pub polar: bool,
}

impl CoordSpec {
    pub fn range(name: &str, lo: f64, hi: f64) -> Self {
        CoordSpec { name: name.to_string(), lo, hi, periodic: false, polar: false }
    }

    pub fn polar(name: &str, lo: f64, hi: f64) -> Self {
        CoordSpec { name: name.to_string(), lo, hi, periodic: false, polar: true }
    }

    pub fn periodic(name: &str, period: f64) -> Self {
        CoordSpec { name: name.to_string(), lo: 0.0, hi: period, periodic: true, polar: false }
    }

    pub fn period(&self) -> Option<f64> {
        self.periodic.then_some(self.hi - self.lo)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("invalid chart: {0}")]
    InvalidChart(String),
    #[error("metric is not symmetric: g[{i}][{j}] differs from g[{j}][{i}]")]
    NotSymmetric { i: usize, j: usize },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("metric is not periodic in coordinate `{coord}`")]
    NotPeriodic { coord: String },
    #[error("metric determinant vanishes identically")]
    SingularMetric,
    #[error("coordinate `{coord}` = {value} lies outside [{lo}, {hi}]")]
    OutsideDomain { coord: String, value: f64, lo: f64, hi: f64 },
    #[error("point has {got} coordinates, chart dimension is {expected}")]
    PointDimension { expected: usize, got: usize },
    #[error("{what} needs dimension at least {need}, chart has {got}")]
    DimensionTooSmall { what: &'static str, need: usize, got: usize },
    #[error("{0}")]
    Tensor(#[from] crate::tensor::TensorError),
}

/// Coordinates `start..start+len` on which the isometry group acts
/// transitively, so invariant quantities do not depend on them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HomogeneousBlock {
    pub start: usize,
    pub len: usize,
    pub kind: BlockKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Angle coordinates of a round sphere as laid out by the catalog.
    SphereAngles,
    /// Periodic coordinates of a flat torus factor.
    FlatTorus,
}

/// A Riemannian metric on a coordinate box.
pub struct MetricChart {
    pub name: String,
    pub coords: Vec<CoordSpec>,
    /// Row-major `n x n` metric, parameters already substituted.
    pub metric: Vec<Expr>,
    pub params: ParamValues,
    /// Symmetry hints used by quadrature; empty unless set by the builder.
    pub homogeneous: Vec<HomogeneousBlock>,
    tape: Tape,
    /// Chart coordinate -> jet variable for coordinates the metric depends on.
    active: Vec<Option<usize>>,
    spaces: [OnceLock<JetSpace>; MAX_JET_ORDER + 1],
    symbolic: OnceLock<Result<SymbolicGeometry, GeometryError>>,
}

impl std::fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MetricChart").field("name", &self.name).field("dim", &self.dim()).finish()
    }
}

impl MetricChart {
    /// Build and validate a chart. `metric` is row-major and may refer to
    /// parameters, which are bound from `params`.
    pub fn new(
        name: &str,
        coords: Vec<CoordSpec>,
        metric: Vec<Expr>,
        params: ParamValues,
    ) -> Result<MetricChart, GeometryError> {
        let n = coords.len();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(GeometryError::InvalidChart(format!("dimension {n} outside 2..={MAX_DIM}")));
        }
        if metric.len() != n * n {
            return Err(GeometryError::InvalidChart(format!("metric has {} entries, expected {}", metric.len(), n * n)));
        }
        for c in &coords {
            if !(c.lo.is_finite() && c.hi.is_finite() && c.lo < c.hi) {
                return Err(GeometryError::InvalidChart(format!("coordinate `{}` has empty domain", c.name)));
            }
        }
        for (i, a) in coords.iter().enumerate() {
            if coords[..i].iter().any(|b| b.name == a.name) {
                return Err(GeometryError::InvalidChart(format!("duplicate coordinate `{}`", a.name)));
            }
        }
        let metric: Vec<Expr> = metric.iter().map(|e| simplify_expr(&e.bind_params(&params))).collect();
        for e in &metric {
            if let Some(p) = e.params().first() {
                return Err(ExprError::UnboundParam(p.to_string()).into());
            }
        }
        for i in 0..n {
            for j in 0..i {
                if metric[i * n + j] != metric[j * n + i] {
                    return Err(GeometryError::NotSymmetric { i, j });
                }
            }
        }
        let tape = Tape::compile(&metric, n)?;
        let mask = metric.iter().fold(0u64, |m, e| m | e.coord_mask());
        let mut next = 0;
        let active = (0..n)
            .map(|i| {
                (mask & (1 << i) != 0).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let chart = MetricChart {
            name: name.to_string(),
            coords,
            metric,
            params,
            homogeneous: Vec::new(),
            tape,
            active,
            spaces: Default::default(),
            symbolic: OnceLock::new(),
        };
        chart.probe()?;
        Ok(chart)
    }

    /// Positive definiteness on a 3-per-axis grid, plus periodicity of the
    /// metric across each periodic coordinate. Polar axes are probed inside
    /// their range since the metric degenerates at the poles.
    fn probe(&self) -> Result<(), GeometryError> {
        let n = self.dim();
        let nodes: Vec<[f64; 3]> = self
            .coords
            .iter()
            .map(|c| {
                let w = c.width();
                if c.periodic {
                    [c.lo, c.lo + w / 3.0, c.lo + 2.0 * w / 3.0]
                } else if c.polar {
                    [c.lo + w / 6.0, c.lo + w / 2.0, c.hi - w / 6.0]
                } else {
                    [c.lo, 0.5 * (c.lo + c.hi), c.hi]
                }
            })
            .collect();
        let empty = ParamValues::new();
        let mut idx = vec![0usize; n];
        let mut point = vec![0.0; n];
        for _ in 0..3usize.pow(n as u32) {
            for d in 0..n {
                point[d] = nodes[d][idx[d]];
            }
            let g = self.tape.eval(&point, &empty)?;
            if cholesky(&g, n).is_none() {
                return Err(GeometryError::NotPositiveDefinite { point: point.clone() });
            }
            for d in (0..n).rev() {
                idx[d] += 1;
                if idx[d] < 3 {
                    break;
                }
                idx[d] = 0;
            }
        }
        let mid: Vec<f64> = nodes.iter().map(|v| v[1]).collect();
        for (d, c) in self.coords.iter().enumerate() {
            if let Some(p) = c.period() {
                let g0 = self.tape.eval(&mid, &empty)?;
                let mut shifted = mid.clone();
                shifted[d] += p;
                let g1 = self.tape.eval(&shifted, &empty)?;
                let scale = g0.iter().fold(1.0f64, |m, v| m.max(v.abs()));
                if g0.iter().zip(&g1).any(|(a, b)| (a - b).abs() > 1e-9 * scale) {
                    return Err(GeometryError::NotPeriodic { coord: c.name.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Attach symmetry hints. Blocks must lie inside the chart and not
    /// overlap; torus blocks must be periodic axes.
    pub fn with_homogeneous(mut self, blocks: Vec<HomogeneousBlock>) -> Result<Self, GeometryError> {
        let mut used = vec![false; self.dim()];
        for b in &blocks {
            if b.len == 0 || b.start + b.len > self.dim() {
                return Err(GeometryError::InvalidChart(format!("homogeneous block {}..{} out of range", b.start, b.start + b.len)));
            }
            for i in b.start..b.start + b.len {
                if std::mem::replace(&mut used[i], true) {
                    return Err(GeometryError::InvalidChart("homogeneous blocks overlap".into()));
                }
                if b.kind == BlockKind::FlatTorus && !self.coords[i].periodic {
                    return Err(GeometryError::InvalidChart(format!("torus block axis `{}` is not periodic", self.coords[i].name)));
                }
            }
        }
        self.homogeneous = blocks;
        Ok(self)
    }

    pub fn coord_names(&self) -> Vec<String> {
        self.coords.iter().map(|c| c.name.clone()).collect()
    }

    pub fn g(&self, i: usize, j: usize) -> &Expr {
        &self.metric[i * self.dim() + j]
    }

    /// Number of coordinates the metric actually depends on.
    pub fn active_count(&self) -> usize {
        self.active.iter().flatten().count()
    }

    pub fn active_map(&self) -> &[Option<usize>] {
        &self.active
    }

    pub(crate) fn metric_tape(&self) -> &Tape {
        &self.tape
    }

    pub(crate) fn jet_space(&self, order: usize) -> &JetSpace {
        assert!(order <= MAX_JET_ORDER, "jet order {order} exceeds {MAX_JET_ORDER}");
        self.spaces[order].get_or_init(|| JetSpace::new(self.active_count(), order))
    }

    pub fn check_point(&self, point: &[f64]) -> Result<(), GeometryError> {
        if point.len() != self.dim() {
            return Err(GeometryError::PointDimension { expected: self.dim(), got: point.len() });
        }
        for (c, &x) in self.coords.iter().zip(point) {
            if c.periodic {
                if !x.is_finite() {
                    return Err(GeometryError::OutsideDomain { coord: c.name.clone(), value: x, lo: c.lo, hi: c.hi });
                }
            } else if !(c.lo..=c.hi).contains(&x) {
                return Err(GeometryError::OutsideDomain { coord: c.name.clone(), value: x, lo: c.lo, hi: c.hi });
            }
        }
        Ok(())
    }

    pub fn metric_at(&self, point: &[f64]) -> Result<TensorValue, GeometryError> {
        self.check_point(point)?;
        let g = self.tape.eval(point, &ParamValues::new())?;
        Ok(TensorValue::from_matrix(self.dim(), &g))
    }

    /// Point at fractional position `u ∈ [0,1]^n` of the central `frac` of the box.
    pub fn interior_point(&self, u: &[f64], frac: f64) -> Vec<f64> {
        self.coords
            .iter()
            .zip(u)
            .map(|(c, &t)| {
                let mid = 0.5 * (c.lo + c.hi);
                mid + (t - 0.5) * frac * c.width()
            })
            .collect()
    }

    /// True when every axis is periodic or polar, so the box covers a
    /// closed manifold up to measure zero.
    pub fn is_closed(&self) -> bool {
        self.coords.iter().all(|c| c.periodic || c.polar)
    }

    /// Cached symbolic Γ, Ricci and scalar curvature.
    pub fn symbolic(&self) -> Result<&SymbolicGeometry, GeometryError> {
        self.symbolic
            .get_or_init(|| SymbolicGeometry::build(self))
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Symbolic Christoffel symbols `Γ^k_ij`, stored `[k][i][j]`.
    pub fn christoffel(&self) -> Result<&SymTensor, GeometryError> {
        Ok(&self.symbolic()?.gamma)
    }

    /// Symbolic all-covariant Riemann tensor.
    pub fn riemann(&self) -> Result<&SymTensor, GeometryError> {
        Ok(self.symbolic()?.riemann())
    }

    /// Curvature bundle with every field that needs at most five metric
    /// derivatives.
    pub fn curvature_bundle(&self, point: &[f64]) -> Result<CurvatureBundle, GeometryError> {
        CurvatureBundle::compute(self, point, FULL_ORDER)
    }

    /// Bundle computed from metric jets of the given order; fields that
    /// need more derivatives are left empty.
    pub fn bundle_at_order(&self, point: &[f64], order: usize) -> Result<CurvatureBundle, GeometryError> {
        CurvatureBundle::compute(self, point, order)
    }

    pub fn q_curvature(&self, point: &[f64]) -> Result<f64, GeometryError> {
        if self.dim() < 3 {
            return Err(GeometryError::DimensionTooSmall { what: "Q-curvature", need: 3, got: self.dim() });
        }
        let b = CurvatureBundle::compute(self, point, 4)?;
        Ok(b.q.expect("order 4 bundle carries Q"))
    }
}

/// Diagonal metric chart with entries given as expressions.
pub fn diagonal_metric(entries: Vec<Expr>) -> Vec<Expr> {
    let n = entries.len();
    let mut m = vec![Expr::zero(); n * n];
    for (i, e) in entries.into_iter().enumerate() {
        m[i * n + i] = e;
    }
    m
}

#[cfg(test)]
mod tests;
