//! Quadrature over closed charts and the integral quantities of the
//! rigidity argument.
//!
//! Periodic axes use the trapezoid rule at half-step offsets, polar axes
//! Gauss–Legendre, so no node sits on a coordinate singularity. Coordinates
//! in a homogeneous block of the chart are collapsed to one representative
//! point: any isometry-invariant integrand is constant along the block, so
//! its integral there is the value times the block volume. Each collapsed
//! grid carries probe points at other block positions and integration
//! refuses integrands that are not constant along the block.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use serde::Serialize;

use crate::expr::{Expr, ExprError, ParamValues, Tape};
use crate::geometry::{BlockKind, CurvatureBundle, GeometryError, HomogeneousBlock, MetricChart};
use crate::identities::{IdentityReport, Residuals};
use crate::simplexlab::dimension_constants;
use crate::tensor::generalized_eigenvalues;

/// Largest number of nodes a grid may have.
pub const MAX_NODES: usize = 4_000_000;
/// Relative change allowed between a resolution and its double.
pub const CONVERGENCE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, thiserror::Error)]
pub enum QuadratureError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("chart is not closed: axis `{0}` is neither periodic nor polar")]
    NotClosed(String),
    #[error("resolution {0} is below the minimum of 8")]
    Resolution(usize),
    #[error("grid would have {0} nodes (limit {MAX_NODES})")]
    TooLarge(usize),
    #[error("{0} varies along a homogeneous block ({1:e} vs {2:e})")]
    NotInvariant(&'static str, f64, f64),
    #[error("non-finite integrand at {0:?}")]
    NonFinite(Vec<f64>),
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub resolution: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Coordinates collapsed by homogeneous blocks.
    pub collapsed: Vec<usize>,
    /// `(node index, same node moved elsewhere along every block)`.
    pub probes: Vec<(usize, Vec<f64>)>,
}

impl QuadratureGrid {
    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Volume of the unit `k`-sphere.
pub fn unit_sphere_volume(k: usize) -> f64 {
    match k {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (k as f64 - 1.0) * unit_sphere_volume(k - 2),
    }
}

/// Grid honouring the chart's homogeneous blocks.
pub fn build_grid(chart: &MetricChart, resolution: usize) -> Result<QuadratureGrid, QuadratureError> {
    build_grid_with(chart, resolution, &chart.homogeneous)
}

/// Full tensor-product grid, ignoring symmetry hints.
pub fn build_full_grid(chart: &MetricChart, resolution: usize) -> Result<QuadratureGrid, QuadratureError> {
    build_grid_with(chart, resolution, &[])
}

fn block_density(b: &HomogeneousBlock, x: &[f64]) -> f64 {
    match b.kind {
        BlockKind::FlatTorus => 1.0,
        // Angle j of S^k carries sin^{k-1-j}.
        BlockKind::SphereAngles => {
            (0..b.len.saturating_sub(1)).map(|j| x[b.start + j].sin().powi((b.len - 1 - j) as i32)).product()
        }
    }
}

fn block_volume(b: &HomogeneousBlock, chart: &MetricChart) -> f64 {
    match b.kind {
        BlockKind::FlatTorus => (b.start..b.start + b.len).map(|i| chart.coords[i].width()).product(),
        BlockKind::SphereAngles => unit_sphere_volume(b.len),
    }
}

/// Position inside a block at fraction `t` of every axis.
fn block_point(chart: &MetricChart, b: &HomogeneousBlock, x: &mut [f64], t: f64) {
    for i in b.start..b.start + b.len {
        let c = &chart.coords[i];
        x[i] = c.lo + t * c.width();
    }
}

fn axis_rule(chart: &MetricChart, axis: usize, resolution: usize) -> Result<Vec<(f64, f64)>, QuadratureError> {
    let c = &chart.coords[axis];
    if c.periodic {
        let h = c.width() / resolution as f64;
        Ok((0..resolution).map(|j| (c.lo + (j as f64 + 0.5) * h, h)).collect())
    } else if c.polar {
        let gl = GaussLegendre::new(NonZeroUsize::new(resolution).expect("resolution ≥ 8"));
        let half = 0.5 * c.width();
        let mid = 0.5 * (c.lo + c.hi);
        Ok(gl.as_node_weight_pairs().iter().map(|&(x, w)| (mid + half * x, half * w)).collect())
    } else {
        Err(QuadratureError::NotClosed(c.name.clone()))
    }
}

/// Grid that collapses the given blocks instead of the chart's own.
pub fn build_grid_with(
    chart: &MetricChart,
    resolution: usize,
    blocks: &[HomogeneousBlock],
) -> Result<QuadratureGrid, QuadratureError> {
    if resolution < 8 {
        return Err(QuadratureError::Resolution(resolution));
    }
    let n = chart.dim();
    for c in &chart.coords {
        if !(c.periodic || c.polar) {
            return Err(QuadratureError::NotClosed(c.name.clone()));
        }
    }
    let mut in_block = vec![false; n];
    for b in blocks {
        in_block[b.start..b.start + b.len].iter_mut().for_each(|f| *f = true);
    }
    let free: Vec<usize> = (0..n).filter(|&i| !in_block[i]).collect();
    let rules = free.iter().map(|&a| axis_rule(chart, a, resolution)).collect::<Result<Vec<_>, _>>()?;
    let count = rules.iter().map(Vec::len).try_fold(1usize, |acc, l| acc.checked_mul(l)).unwrap_or(usize::MAX);
    if count > MAX_NODES {
        return Err(QuadratureError::TooLarge(count));
    }
    let block_vol: f64 = blocks.iter().map(|b| block_volume(b, chart)).product();

    let mut base = vec![0.0; n];
    for b in blocks {
        block_point(chart, b, &mut base, 0.5);
    }
    let mut nodes = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    let mut idx = vec![0usize; free.len()];
    for _ in 0..count {
        let mut x = base.clone();
        let mut w = block_vol;
        for (k, &a) in free.iter().enumerate() {
            let (xa, wa) = rules[k][idx[k]];
            x[a] = xa;
            w *= wa;
        }
        let dens: f64 = blocks.iter().map(|b| block_density(b, &x)).product();
        w *= volume_density(chart, &x)? / dens;
        nodes.push(x);
        weights.push(w);
        for k in (0..free.len()).rev() {
            idx[k] += 1;
            if idx[k] < rules[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }

    let mut probes = Vec::new();
    if !blocks.is_empty() {
        for &i in [0, count / 2].iter().take(count.min(2)) {
            let mut alt = nodes[i].clone();
            for (bi, b) in blocks.iter().enumerate() {
                block_point(chart, b, &mut alt, 0.23 + 0.11 * bi as f64);
            }
            let ratio = |x: &[f64]| -> Result<f64, QuadratureError> {
                let d: f64 = blocks.iter().map(|b| block_density(b, x)).product();
                Ok(volume_density(chart, x)? / d)
            };
            let (r0, r1) = (ratio(&nodes[i])?, ratio(&alt)?);
            if (r0 - r1).abs() > 1e-9 * r0.abs().max(r1.abs()) {
                return Err(QuadratureError::NotInvariant("volume density", r0, r1));
            }
            probes.push((i, alt));
        }
    }
    let mut collapsed: Vec<usize> = (0..n).filter(|&i| in_block[i]).collect();
    collapsed.sort_unstable();
    Ok(QuadratureGrid { dim: n, resolution, nodes, weights, collapsed, probes })
}

fn volume_density(chart: &MetricChart, x: &[f64]) -> Result<f64, QuadratureError> {
    let g = chart.metric_at(x)?;
    let n = chart.dim();
    let l = crate::tensor::cholesky(&g.data, n).ok_or(GeometryError::NotPositiveDefinite { point: x.to_vec() })?;
    Ok((0..n).map(|i| l[i * n + i]).product())
}

/// Deterministic pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// `Σ w f` for several integrands evaluated together. Also returns
/// `Σ w |f|` per integrand as a magnitude reference.
pub fn integrate_many<F>(grid: &QuadratureGrid, count: usize, mut f: F) -> Result<(Vec<f64>, Vec<f64>), QuadratureError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, QuadratureError>,
{
    let mut cols = vec![Vec::with_capacity(grid.len()); count];
    let mut abs = vec![Vec::with_capacity(grid.len()); count];
    let mut at_probe = vec![None; grid.len()];
    for (i, alt) in &grid.probes {
        at_probe[*i] = Some(alt);
    }
    for ((x, &w), probe) in grid.nodes.iter().zip(&grid.weights).zip(&at_probe) {
        let v = f(x)?;
        assert_eq!(v.len(), count, "integrand returned the wrong number of values");
        if v.iter().any(|y| !y.is_finite()) {
            return Err(QuadratureError::NonFinite(x.clone()));
        }
        if let Some(alt) = probe {
            let va = f(alt)?;
            for (a, b) in v.iter().zip(&va) {
                if (a - b).abs() > 1e-8 * (a.abs() + b.abs()) + 1e-10 {
                    return Err(QuadratureError::NotInvariant("integrand", *a, *b));
                }
            }
        }
        for k in 0..count {
            cols[k].push(w * v[k]);
            abs[k].push(w * v[k].abs());
        }
    }
    Ok((cols.iter().map(|c| pairwise_sum(c)).collect(), abs.iter().map(|c| pairwise_sum(c)).collect()))
}

pub fn integrate<F>(grid: &QuadratureGrid, mut f: F) -> Result<f64, QuadratureError>
where
    F: FnMut(&[f64]) -> Result<f64, QuadratureError>,
{
    Ok(integrate_many(grid, 1, |x| Ok(vec![f(x)?]))?.0[0])
}

/// Integral of an expression in the chart's coordinates and parameters.
pub fn integrate_expr(grid: &QuadratureGrid, chart: &MetricChart, e: &Expr) -> Result<f64, QuadratureError> {
    let tape = Tape::compile(&[e.bind_params(&chart.params)], chart.dim())?;
    let none = ParamValues::new();
    integrate(grid, |x| Ok(tape.eval(x, &none)?[0]))
}

/// Integrals at a resolution and at its double.
#[derive(Clone, Debug, Serialize)]
pub struct Converged {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// `Σ w|f|` on the fine grid.
    pub magnitude: Vec<f64>,
    pub converged: Vec<bool>,
}

impl Converged {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

pub fn integrate_converged<F>(
    chart: &MetricChart,
    resolution: usize,
    count: usize,
    mut f: F,
) -> Result<Converged, QuadratureError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, QuadratureError>,
{
    let coarse_grid = build_grid(chart, resolution)?;
    let fine_grid = build_grid(chart, 2 * resolution)?;
    let (coarse, _) = integrate_many(&coarse_grid, count, &mut f)?;
    let (fine, magnitude) = integrate_many(&fine_grid, count, &mut f)?;
    let converged = (0..count)
        .map(|k| (fine[k] - coarse[k]).abs() <= CONVERGENCE_TOL * magnitude[k].max(1e-300) || fine[k] == coarse[k])
        .collect();
    Ok(Converged { coarse, fine, magnitude, converged })
}

fn hess_contract(b: &CurvatureBundle) -> (f64, f64, f64, f64) {
    let n = b.dim;
    let gi = &b.inverse_metric.data;
    let gr = &b.grad_r.as_ref().expect("order ≥ 3").data;
    let up: Vec<f64> = (0..n).map(|i| (0..n).map(|a| gi[i * n + a] * gr[a]).sum()).collect();
    let grad_sq: f64 = (0..n).map(|i| up[i] * gr[i]).sum();
    let ric_grad: f64 =
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| b.ricci.data[i * n + j] * up[i] * up[j]).sum();
    let ric_hess = match &b.hess_r {
        Some(h) => crate::tensor::inner(&b.ricci, h, &b.inverse_metric),
        None => 0.0,
    };
    let hess_sq = match &b.hess_r {
        Some(h) => crate::tensor::tensor_norm(h, &b.metric, &b.inverse_metric).unwrap_or(f64::NAN),
        None => 0.0,
    };
    (grad_sq, ric_grad, ric_hess, hess_sq)
}

#[derive(Clone, Debug, Serialize)]
pub struct PartsReport {
    pub identity: IdentityReport,
    /// `∫ R_ij R_,ij R`.
    pub lhs: f64,
    /// `−½∫|∇R|²R − ∫Ric(∇R,∇R)`.
    pub rhs: f64,
    /// `∫(ΔR)² − n/(n−1) ∫Ric(∇R,∇R)`, reported when Ric ≥ 0 at every node.
    pub bochner_slack: Option<f64>,
    pub ricci_nonnegative: bool,
    pub converged: bool,
    pub resolution: usize,
}

/// Integration-by-parts identity for `∫R_ij R_,ij R` and the integrated
/// Bochner inequality, each side by its own quadrature.
pub fn parts_identity_check(chart: &MetricChart, resolution: usize, tol: f64) -> Result<PartsReport, QuadratureError> {
    let n = chart.dim() as f64;
    let mut min_eig = f64::INFINITY;
    let c = integrate_converged(chart, resolution, 5, |x| {
        let b = CurvatureBundle::compute(chart, x, 4)?;
        let (grad_sq, ric_grad, ric_hess, _) = hess_contract(&b);
        let eig = generalized_eigenvalues(&b.ricci, &b.metric).map_err(GeometryError::from)?;
        min_eig = min_eig.min(eig.eigenvalues[0]);
        let lap = b.lap_r.expect("order 4");
        Ok(vec![ric_hess * b.scalar, -0.5 * grad_sq * b.scalar, -ric_grad, lap * lap, ric_grad])
    })?;
    let lhs = c.fine[0];
    let rhs = c.fine[1] + c.fine[2];
    // Compared as volume averages so the absolute floor means the same as
    // for pointwise identities.
    let vol = build_grid(chart, 2 * resolution)?.volume();
    let mut acc = Residuals::new("integration_by_parts", tol);
    acc.compare(lhs / vol, rhs / vol, &[c.magnitude[0] / vol, c.magnitude[1] / vol, c.magnitude[2] / vol]);
    acc.point();
    let mut identity = acc.finish();
    let converged = c.converged[..3].iter().all(|&b| b);
    if !converged {
        identity.pass = false;
        identity.note = Some("integrals moved by more than the convergence tolerance under refinement".into());
    }
    let ricci_nonnegative = min_eig >= -1e-10;
    let bochner_slack = ricci_nonnegative.then(|| c.fine[3] - n / (n - 1.0) * c.fine[4]);
    Ok(PartsReport { identity, lhs, rhs, bochner_slack, ricci_nonnegative, converged, resolution })
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityIntegrals {
    /// `∫∇R·∇Q`.
    pub grad_r_dot_grad_q: f64,
    /// `∫(ΔR)²`.
    pub lap_r_sq: f64,
    /// `∫|∇R|²R`.
    pub grad_r_sq_r: f64,
    /// `∫Ric(∇R,∇R)`.
    pub ricci_grad_r: f64,
    /// `∫|∇Ric|²R`.
    pub grad_ricci_sq_r: f64,
    /// `∫B_ij R_ij R`, only for n > 3.
    pub bach_ricci_r: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityFlags {
    /// `∫∇R·∇Q ≤ 0` up to quadrature noise.
    pub condition: bool,
    pub ricci_nonnegative: bool,
    pub weyl_vanishes: bool,
    /// Dimension at least 6, where every coefficient has the sign the
    /// argument needs.
    pub dimension_regime: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityReport {
    pub chart: String,
    pub dim: usize,
    pub resolution: usize,
    pub nodes: usize,
    pub volume: f64,
    pub integrals: RigidityIntegrals,
    /// Same integrals on the coarse grid.
    pub integrals_coarse: RigidityIntegrals,
    pub converged: bool,
    /// `∫∇R·∇Q − l_n∫|∇R|²R + κ_n∫Ric(∇R,∇R)` with
    /// `κ_n = (n−2)/(n−1)·b_n − n/(n−1)·a_n`; nonnegative under the
    /// hypotheses.
    pub combined_slack: f64,
    /// `∫(ΔR)² − n/(n−1)∫Ric(∇R,∇R)`.
    pub bochner_slack: f64,
    pub flags: RigidityFlags,
    pub max_grad_ricci: f64,
    pub scalar_range: (f64, f64),
    /// `∇Ric ≈ 0` and `R` constant over the nodes.
    pub signature: bool,
    pub verdict: String,
}

fn integrals_from(v: &[f64], n: usize) -> RigidityIntegrals {
    RigidityIntegrals {
        grad_r_dot_grad_q: v[0],
        lap_r_sq: v[1],
        grad_r_sq_r: v[2],
        ricci_grad_r: v[3],
        grad_ricci_sq_r: v[4],
        bach_ricci_r: (n > 3).then(|| v[5]),
    }
}

pub fn rigidity_report(chart: &MetricChart, resolution: usize) -> Result<RigidityReport, QuadratureError> {
    let n = chart.dim();
    if n < 3 {
        return Err(GeometryError::DimensionTooSmall { what: "rigidity report", need: 3, got: n }.into());
    }
    let mut min_eig = f64::INFINITY;
    let mut max_weyl = 0.0f64;
    let mut max_grad_ric = 0.0f64;
    let mut curv_scale = 0.0f64;
    let (mut r_lo, mut r_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let c = integrate_converged(chart, resolution, 6, |x| {
        let b = CurvatureBundle::compute(chart, x, 5)?;
        let (grad_sq, ric_grad, _, _) = hess_contract(&b);
        let gi = &b.inverse_metric.data;
        let gr = &b.grad_r.as_ref().unwrap().data;
        let gq = &b.grad_q.as_ref().unwrap().data;
        let dot: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| gi[i * n + j] * gr[i] * gq[j]).sum();
        let nric = b.nabla_ricci.as_ref().unwrap();
        let nric_sq = crate::tensor::tensor_norm(nric, &b.metric, &b.inverse_metric).unwrap_or(f64::NAN);
        let bach = match &b.bach {
            Some(bt) => crate::tensor::inner(bt, &b.ricci, &b.inverse_metric) * b.scalar,
            None => 0.0,
        };
        let eig = generalized_eigenvalues(&b.ricci, &b.metric).map_err(GeometryError::from)?;
        min_eig = min_eig.min(eig.eigenvalues[0]);
        max_weyl = max_weyl.max(b.weyl.max_abs() / (1.0 + b.riemann.max_abs()));
        max_grad_ric = max_grad_ric.max(nric_sq.max(0.0).sqrt());
        curv_scale = curv_scale.max(b.riemann.max_abs());
        r_lo = r_lo.min(b.scalar);
        r_hi = r_hi.max(b.scalar);
        let lap = b.lap_r.unwrap();
        Ok(vec![dot, lap * lap, grad_sq * b.scalar, ric_grad, nric_sq * b.scalar, bach])
    })?;
    let grid = build_grid(chart, 2 * resolution)?;
    let volume = grid.volume();
    let integrals = integrals_from(&c.fine, n);
    let integrals_coarse = integrals_from(&c.coarse, n);

    let k = dimension_constants(n).expect("n ≥ 3");
    let l_n = crate::simplexlab::to_f64(&k.l);
    let a_n = crate::simplexlab::to_f64(&k.a);
    let b_n = crate::simplexlab::to_f64(&k.b);
    let nf = n as f64;
    let kappa = (nf - 2.0) / (nf - 1.0) * b_n - nf / (nf - 1.0) * a_n;
    let combined_slack = integrals.grad_r_dot_grad_q - l_n * integrals.grad_r_sq_r + kappa * integrals.ricci_grad_r;
    let bochner_slack = integrals.lap_r_sq - nf / (nf - 1.0) * integrals.ricci_grad_r;

    let noise = 1e-10 * volume * (1.0 + curv_scale.powi(3));
    let flags = RigidityFlags {
        condition: integrals.grad_r_dot_grad_q <= noise,
        ricci_nonnegative: min_eig >= -1e-10,
        weyl_vanishes: max_weyl <= 1e-8,
        dimension_regime: n >= 6,
    };
    let signature = max_grad_ric <= 1e-8 * (1.0 + curv_scale) && (r_hi - r_lo) <= 1e-8 * (1.0 + r_hi.abs());
    let converged = c.all_converged();
    let verdict = if !(flags.condition && flags.ricci_nonnegative && flags.weyl_vanishes) {
        "hypotheses not met".to_string()
    } else if signature {
        "hypotheses met; parallel Ricci and constant scalar curvature observed".to_string()
    } else {
        "hypotheses met but the conclusion signature fails".to_string()
    };
    Ok(RigidityReport {
        chart: chart.name.clone(),
        dim: n,
        resolution,
        nodes: grid.len(),
        volume,
        integrals,
        integrals_coarse,
        converged,
        combined_slack,
        bochner_slack,
        flags,
        max_grad_ricci: max_grad_ric,
        scalar_range: (r_lo, r_hi),
        signature,
        verdict,
    })
}
