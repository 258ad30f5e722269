//! Conformal changes of metric: transformation laws for Ricci and scalar
//! curvature, the Paneitz operator and Q-curvature covariance, the Schoen
//! integral inequality, and the periodic Yamabe profile on `S^1(T) × S^{n-1}`.

use serde::Serialize;

use crate::expr::{Differentiator, Expr, ExprError, ParamValues, Rational, Tape};
use crate::geometry::{CurvatureBundle, GeometryError, MetricChart};
use crate::identities::{sample_points, IdentityReport, Residuals};
use crate::quadrature::{build_grid_with, integrate_many, QuadratureError};

#[derive(Clone, Debug, thiserror::Error)]
pub enum ConformalError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("{what} needs dimension at least {need}, got {got}")]
    Dimension { what: &'static str, need: usize, got: usize },
    #[error("conformal function u = {value:e} is not positive at {point:?}")]
    NonPositive { point: Vec<f64>, value: f64 },
    #[error("scalar curvature is not constant (spread {spread:e} around {mean})")]
    NonConstantScalar { mean: f64, spread: f64 },
    #[error("shooting did not converge after {0} bisection steps")]
    NoConvergence(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// How the new metric is written in terms of the old one.
#[derive(Clone, Debug)]
pub enum ConformalFactor {
    /// `ĝ = e^{2f} g`.
    Exponent(Expr),
    /// `ĝ = u^{4/(n−2)} g`.
    ScalarU(Expr),
    /// `ĝ = u^{4/(n−4)} g`.
    PaneitzU(Expr),
}

impl ConformalFactor {
    pub fn convention(&self) -> &'static str {
        match self {
            Self::Exponent(_) => "exp",
            Self::ScalarU(_) => "scalar_u",
            Self::PaneitzU(_) => "paneitz_u",
        }
    }

    fn expr(&self) -> &Expr {
        match self {
            Self::Exponent(e) | Self::ScalarU(e) | Self::PaneitzU(e) => e,
        }
    }

    /// Power of `u` with `u^p = e^{2f}`.
    fn u_power(&self, n: usize) -> Result<Option<Rational>, ConformalError> {
        match self {
            Self::Exponent(_) => Ok(None),
            Self::ScalarU(_) => {
                if n < 3 {
                    return Err(ConformalError::Dimension { what: "u^{4/(n-2)} convention", need: 3, got: n });
                }
                Ok(Some(Rational::new(4, n as i128 - 2)))
            }
            Self::PaneitzU(_) => {
                if n < 5 {
                    return Err(ConformalError::Dimension { what: "u^{4/(n-4)} convention", need: 5, got: n });
                }
                Ok(Some(Rational::new(4, n as i128 - 4)))
            }
        }
    }

    /// The exponent `f` with `ĝ = e^{2f} g`, parameters bound.
    pub fn exponent(&self, chart: &MetricChart) -> Result<Expr, ConformalError> {
        let e = self.expr().bind_params(&chart.params);
        Ok(match self.u_power(chart.dim())? {
            None => e,
            Some(p) => e.ln().scale_by(p / 2),
        })
    }

    /// The multiplier `e^{2f}`, parameters bound.
    pub fn multiplier(&self, chart: &MetricChart) -> Result<Expr, ConformalError> {
        let e = self.expr().bind_params(&chart.params);
        Ok(match self.u_power(chart.dim())? {
            None => e.scale_by(2.into()).exp(),
            Some(p) => e.pow(p),
        })
    }
}

/// Reject `u`-convention factors that fail to be positive on sample points.
fn check_positive(chart: &MetricChart, factor: &ConformalFactor) -> Result<(), ConformalError> {
    if let ConformalFactor::Exponent(_) = factor {
        return Ok(());
    }
    let u = factor.expr().bind_params(&chart.params);
    let tape = Tape::compile(&[u], chart.dim())?;
    let none = ParamValues::new();
    let mut pts = sample_points(chart, 64, 0x5eed);
    pts.push(chart.interior_point(&vec![0.5; chart.dim()], 0.0));
    for p in pts {
        let v = tape.eval(&p, &none)?[0];
        if !(v > 0.0) {
            return Err(ConformalError::NonPositive { point: p, value: v });
        }
    }
    Ok(())
}

/// The chart with metric `e^{2f} g`. Homogeneous blocks survive only when
/// the factor does not depend on their coordinates.
pub fn conformal_metric(chart: &MetricChart, factor: &ConformalFactor) -> Result<MetricChart, ConformalError> {
    check_positive(chart, factor)?;
    let m = factor.multiplier(chart)?;
    let metric: Vec<Expr> = chart.metric.iter().map(|g| if g.is_zero() { g.clone() } else { g.mul(&m) }).collect();
    let mask = m.coord_mask();
    let blocks = chart
        .homogeneous
        .iter()
        .filter(|b| (b.start..b.start + b.len).all(|i| mask & (1 << i) == 0))
        .cloned()
        .collect();
    let out = MetricChart::new(&format!("{}_conformal", chart.name), chart.coords.clone(), metric, chart.params.clone())?;
    Ok(out.with_homogeneous(blocks)?)
}

/// Values of `f`, its gradient and its coordinate Hessian at a point.
struct ScalarDerivs {
    f: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

fn scalar_derivs(tape: &Tape, n: usize, point: &[f64]) -> Result<ScalarDerivs, ConformalError> {
    let v = tape.eval(point, &ParamValues::new())?;
    Ok(ScalarDerivs { f: v[0], grad: v[1..=n].to_vec(), hess: v[1 + n..].to_vec() })
}

fn derivative_tape(f: &Expr, n: usize) -> Result<Tape, ConformalError> {
    let mut d = Differentiator::new();
    let grad: Vec<Expr> = (0..n).map(|i| d.d(f, i)).collect();
    let mut roots = vec![f.clone()];
    roots.extend(grad.iter().cloned());
    for i in 0..n {
        for j in 0..n {
            roots.push(d.d(&grad[i], j));
        }
    }
    Ok(Tape::compile(&roots, n)?)
}

/// Ricci and scalar curvature of `ĝ = e^{2f}g` computed directly against
/// the transformation laws
/// `R̂ic = Ric − (n−2)(∇²f − df⊗df) − (Δf + (n−2)|∇f|²) g` and
/// `R̂ = e^{−2f}(R − 2(n−1)Δf − (n−1)(n−2)|∇f|²)`,
/// plus the trace-free form of the first law. When `R` is constant over the
/// points, also checks `δR̊ic = 0` and the pointwise identity
/// `e^{−f}⟨R̊ic_ĝ, R̊ic⟩ = e^{−f}|R̊ic|² − (n−2)(e^{−f} R̊ic^{ij} f_i)_{,j}`.
///
/// The note records the residual of the Ricci law with the opposite sign
/// on the `(n−2)` terms, which fails the trace check against the scalar law.
pub fn verify_conformal_laws(
    chart: &MetricChart,
    factor: &ConformalFactor,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, ConformalError> {
    let n = chart.dim();
    if n < 3 {
        return Err(ConformalError::Dimension { what: "conformal laws", need: 3, got: n });
    }
    let nf = n as f64;
    let hat = conformal_metric(chart, factor)?;
    let f = factor.exponent(chart)?;
    let tape = derivative_tape(&f, n)?;
    let bundles = points.iter().map(|p| CurvatureBundle::compute(chart, p, 3)).collect::<Result<Vec<_>, _>>()?;
    let r_mean = bundles.iter().map(|b| b.scalar).sum::<f64>() / bundles.len().max(1) as f64;
    let r_constant = bundles.iter().all(|b| (b.scalar - r_mean).abs() <= 1e-6 * r_mean.abs().max(1.0));
    let mut acc = Residuals::new("conformal_laws", tol);
    let mut flipped = 0.0f64;
    let mut flipped_scale = 0.0f64;
    for (p, b) in points.iter().zip(&bundles) {
        let bh = CurvatureBundle::compute(&hat, p, 2)?;
        let s = scalar_derivs(&tape, n, p)?;
        let gi = &b.inverse_metric.data;
        let g = &b.metric.data;
        let gamma = &b.gamma.data;
        let raise2 = |t: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] = (0..n)
                        .flat_map(|a| (0..n).map(move |c| (a, c)))
                        .map(|(a, c)| gi[i * n + a] * gi[j * n + c] * t[a * n + c])
                        .sum();
                }
            }
            out
        };
        let mut hess = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let corr: f64 = (0..n).map(|k| gamma[(k * n + i) * n + j] * s.grad[k]).sum();
                hess[i * n + j] = s.hess[i * n + j] - corr;
            }
        }
        let lap: f64 = (0..n * n).map(|k| gi[k] * hess[k]).sum();
        let grad_sq: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| gi[i * n + j] * s.grad[i] * s.grad[j]).sum();
        // Hessian minus df⊗df and its trace-free part.
        let h: Vec<f64> = (0..n * n).map(|k| hess[k] - s.grad[k / n] * s.grad[k % n]).collect();
        let h_trace = lap - grad_sq;
        let ric0: Vec<f64> = (0..n * n).map(|k| b.ricci.data[k] - b.scalar / nf * g[k]).collect();
        let ric0_hat: Vec<f64> = (0..n * n).map(|k| bh.ricci.data[k] - bh.scalar / nf * bh.metric.data[k]).collect();
        for i in 0..n {
            for j in i..n {
                let k = i * n + j;
                let t_hess = -(nf - 2.0) * hess[k];
                let t_df = (nf - 2.0) * s.grad[i] * s.grad[j];
                let t_g = -(lap + (nf - 2.0) * grad_sq) * g[k];
                let rhs = b.ricci.data[k] + t_hess + t_df + t_g;
                acc.compare(bh.ricci.data[k], rhs, &[b.ricci.data[k], t_hess, t_df, t_g]);
                let printed = b.ricci.data[k] - t_hess - t_df + t_g;
                flipped = flipped.max((bh.ricci.data[k] - printed).abs());
                flipped_scale = flipped_scale.max(t_hess.abs().max(t_df.abs()));

                let t0 = -(nf - 2.0) * (h[k] - h_trace / nf * g[k]);
                acc.compare(ric0_hat[k], ric0[k] + t0, &[ric0[k], t0]);
            }
        }
        let e2f = (-2.0 * s.f).exp();
        let terms = [b.scalar, -2.0 * (nf - 1.0) * lap, -(nf - 1.0) * (nf - 2.0) * grad_sq];
        let rhs = e2f * terms.iter().sum::<f64>();
        acc.compare(bh.scalar, rhs, &terms.map(|t| e2f * t));

        if r_constant {
            let nr = &b.nabla_ricci.as_ref().expect("order 3 gives ∇Ric").data;
            let up = raise2(&ric0);
            let r_j: Vec<f64> = (0..n)
                .map(|j| (0..n * n).map(|xy| gi[xy] * nr[xy * n + j]).sum())
                .collect();
            // (R̊ic^{ij})_{,j} = g^{ia} g^{jc} (R_ac,j − R_,j g_ac / n).
            let div: Vec<f64> = (0..n)
                .map(|i| {
                    let mut s = 0.0;
                    for a in 0..n {
                        for c in 0..n {
                            for j in 0..n {
                                s += gi[i * n + a] * gi[j * n + c] * (nr[(a * n + c) * n + j] - r_j[j] * g[a * n + c] / nf);
                            }
                        }
                    }
                    s
                })
                .collect();
            // ∇Ric may vanish identically, so its roundoff is measured
            // against the size of Ric itself.
            let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let div_scale = (max_abs(nr) + max_abs(&b.ricci.data)) * max_abs(gi).powi(2);
            for d in &div {
                acc.compare(*d, 0.0, &[div_scale]);
            }
            let w = (-s.f).exp();
            let inner = |a: &[f64], c: &[f64]| -> f64 { (0..n * n).map(|k| a[k] * c[k]).sum() };
            let lhs = w * inner(&raise2(&ric0_hat), &ric0);
            let norm = w * inner(&up, &ric0);
            let divergence = w * ((0..n).map(|i| div[i] * s.grad[i]).sum::<f64>() + inner(&up, &h));
            acc.compare(lhs, norm - (nf - 2.0) * divergence, &[lhs, norm, (nf - 2.0) * divergence]);
        }
        acc.point();
    }
    let mut report = acc.finish();
    if flipped_scale > 0.0 {
        report.note = Some(format!(
            "opposite sign on the (n-2) Hessian and df⊗df terms leaves residual {flipped:.3e} (term scale {flipped_scale:.3e}){}",
            if r_constant { "; constant R: trace-free divergence checked" } else { "" }
        ));
    }
    Ok(report)
}

/// `(P_g u)(x) = Δ²u − div(α R ∇u − β Ric(∇u,·)) + (n−4)/2 Q u` with
/// `α = ((n−2)²+4)/(2(n−1)(n−2))` and `β = 4/(n−2)`.
pub fn paneitz_apply(chart: &MetricChart, u: &Expr, point: &[f64]) -> Result<f64, ConformalError> {
    let n = chart.dim();
    if n <= 4 {
        return Err(ConformalError::Dimension { what: "Paneitz operator", need: 5, got: n });
    }
    chart.check_point(point)?;
    let nf = n as f64;
    let u = u.bind_params(&chart.params);
    let sym = chart.symbolic()?;
    let lap = sym.laplacian_expr(&u);
    let bilap = sym.laplacian_expr(&lap);
    let alpha = Expr::from_f64(((nf - 2.0).powi(2) + 4.0) / (2.0 * (nf - 1.0) * (nf - 2.0)));
    let beta = Expr::from_f64(4.0 / (nf - 2.0));
    let mut d = Differentiator::new();
    let du: Vec<Expr> = (0..n).map(|k| d.d(&u, k)).collect();
    // Covector α R du − β Ric(∇u, ·), then raised.
    let raised_du: Vec<Expr> = (0..n).map(|b| Expr::sum((0..n).map(|c| sym.ginv(b, c).mul(&du[c])))).collect();
    let x: Vec<Expr> = (0..n)
        .map(|a| {
            let ric_term = Expr::sum((0..n).map(|b| sym.ricci.comps[a * n + b].mul(&raised_du[b])));
            alpha.mul(&sym.scalar).mul(&du[a]).sub(&beta.mul(&ric_term))
        })
        .collect();
    let v: Vec<Expr> = (0..n).map(|j| Expr::sum((0..n).map(|a| sym.ginv(j, a).mul(&x[a])))).collect();
    let div = Expr::sum((0..n).map(|j| {
        let trace_gamma = Expr::sum((0..n).map(|k| sym.gamma.comps[(k * n + k) * n + j].clone()));
        d.d(&v[j], j).add(&trace_gamma.mul(&v[j]))
    }));
    let tape = Tape::compile(&[bilap, div, u], n)?;
    let vals = tape.eval(point, &ParamValues::new())?;
    let q = CurvatureBundle::compute(chart, point, 4)?.q.expect("order 4 gives Q");
    Ok(vals[0] - vals[1] + 0.5 * (nf - 4.0) * q * vals[2])
}

/// Compares `Q(ĝ)` for `ĝ = u^{4/(n−4)} g` with
/// `2/(n−4) · u^{−(n+4)/(n−4)} · P_g u`.
pub fn q_conformal_check(
    chart: &MetricChart,
    u: &Expr,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<IdentityReport, ConformalError> {
    let n = chart.dim();
    if n <= 4 {
        return Err(ConformalError::Dimension { what: "Q-curvature covariance", need: 5, got: n });
    }
    let nf = n as f64;
    let factor = ConformalFactor::PaneitzU(u.clone());
    let hat = conformal_metric(chart, &factor)?;
    let ut = Tape::compile(&[u.bind_params(&chart.params)], n)?;
    let mut acc = Residuals::new("q_covariance", tol);
    for p in points {
        let uv = ut.eval(p, &ParamValues::new())?[0];
        if !(uv > 0.0) {
            return Err(ConformalError::NonPositive { point: p.clone(), value: uv });
        }
        let q_hat = CurvatureBundle::compute(&hat, p, 4)?.q.expect("order 4 gives Q");
        let pu = paneitz_apply(chart, u, p)?;
        let rhs = 2.0 / (nf - 4.0) * uv.powf(-(nf + 4.0) / (nf - 4.0)) * pu;
        acc.compare(q_hat, rhs, &[q_hat, rhs]);
        acc.point();
    }
    Ok(acc.finish())
}

#[derive(Clone, Debug, Serialize)]
pub struct SchoenReport {
    /// `∫ e^{−f} |R̊ic_g|²_g dV_g`.
    pub lhs: f64,
    /// `∫ e^{−f} |R̊ic_ĝ|²_g dV_g`.
    pub rhs: f64,
    pub scale: f64,
    pub holds: bool,
    pub nodes: usize,
    pub scalar_curvature: f64,
}

/// Schoen's integral comparison for `ĝ = e^{2f} g` on a closed chart of
/// constant scalar curvature.
pub fn schoen_check(chart: &MetricChart, f: &Expr, resolution: usize) -> Result<SchoenReport, ConformalError> {
    let n = chart.dim();
    let probes = sample_points(chart, 12, 0x5c0e);
    let rs = probes
        .iter()
        .map(|p| Ok(CurvatureBundle::compute(chart, p, 2)?.scalar))
        .collect::<Result<Vec<f64>, GeometryError>>()?;
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    let spread = rs.iter().fold(0.0f64, |m, r| m.max((r - mean).abs()));
    if spread > 1e-6 * mean.abs().max(1.0) {
        return Err(ConformalError::NonConstantScalar { mean, spread });
    }
    let factor = ConformalFactor::Exponent(f.clone());
    let hat = conformal_metric(chart, &factor)?;
    let ft = Tape::compile(&[f.bind_params(&chart.params)], n)?;
    // dV_g on the blocks that the factor leaves homogeneous.
    let grid = build_grid_with(chart, resolution, &hat.homogeneous)?;
    let traceless_norm = |b: &CurvatureBundle, ric: &[f64], r: f64, metric: &[f64]| -> f64 {
        let t: Vec<f64> = (0..n * n).map(|k| ric[k] - r / n as f64 * metric[k]).collect();
        let gi = &b.inverse_metric.data;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for c in 0..n {
                        s += gi[i * n + a] * gi[j * n + c] * t[i * n + j] * t[a * n + c];
                    }
                }
            }
        }
        s
    };
    let (vals, mags) = integrate_many(&grid, 2, |x| {
        let b = CurvatureBundle::compute(chart, x, 2)?;
        let bh = CurvatureBundle::compute(&hat, x, 2)?;
        let w = (-ft.eval(x, &ParamValues::new())?[0]).exp();
        Ok(vec![
            w * traceless_norm(&b, &b.ricci.data, b.scalar, &b.metric.data),
            w * traceless_norm(&b, &bh.ricci.data, bh.scalar, &bh.metric.data),
        ])
    })?;
    let scale = mags[0].max(mags[1]).max(grid.volume() * 1e-12);
    Ok(SchoenReport {
        lhs: vals[0],
        rhs: vals[1],
        scale,
        holds: vals[0] <= vals[1] + 1e-8 * scale,
        nodes: grid.len(),
        scalar_curvature: mean,
    })
}

/// Default steps per period for the Yamabe profile.
pub const YAMABE_STEPS: usize = 10_000;
/// Amplitude samples in the shooting sweep.
pub const YAMABE_SWEEP: usize = 400;
pub const YAMABE_MAX_BISECTIONS: usize = 200;

/// A `T`-periodic solution of
/// `−4(n−1)/(n−2) u'' + (n−1)(n−2) u = n(n−1) u^{(n+2)/(n−2)}`.
#[derive(Clone, Debug, Serialize)]
pub struct YamabeSolution {
    pub n: usize,
    pub period: f64,
    /// `u(0)`, an extremum of the profile.
    pub amplitude: f64,
    pub constant_value: f64,
    /// Samples at `t_k = kT/N`, `k = 0..=N`.
    pub samples: Vec<f64>,
    /// `u(t) = Σ a_k cos(2πkt/T)`, fitted to the samples.
    pub cosine_coefficients: Vec<f64>,
    /// RMS of the equation on the samples with a fourth-order stencil.
    pub residual: f64,
    /// `max(|u(T) − u(0)|, |u'(T) − u'(0)|)`.
    pub periodicity_error: f64,
    /// Amplitudes of the non-constant branch found by the sweep.
    pub branch_amplitudes: Vec<f64>,
    pub constant: bool,
}

impl YamabeSolution {
    pub fn value(&self, t: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI / self.period;
        self.cosine_coefficients.iter().enumerate().map(|(k, a)| a * (w * k as f64 * t).cos()).sum()
    }

    /// The profile as an expression in chart coordinate `coord`.
    pub fn to_expr(&self, coord: usize) -> Expr {
        let w = 2.0 * std::f64::consts::PI / self.period;
        let t = Expr::coord(coord);
        Expr::sum(self.cosine_coefficients.iter().enumerate().map(|(k, &a)| {
            if k == 0 {
                Expr::from_f64(a)
            } else {
                Expr::from_f64(a).mul(&Expr::from_f64(w * k as f64).mul(&t).cos())
            }
        }))
    }
}

struct YamabeOde {
    p: f64,
    c: f64,
    nf: f64,
}

impl YamabeOde {
    fn new(n: usize) -> Self {
        let nf = n as f64;
        YamabeOde { p: (nf + 2.0) / (nf - 2.0), c: (nf - 2.0) / 4.0, nf }
    }

    /// `u'' = (n−2)/4 · ((n−2)u − n u^p)`.
    fn accel(&self, u: f64) -> f64 {
        self.c * ((self.nf - 2.0) * u - self.nf * u.powf(self.p))
    }

    fn step(&self, (u, v): (f64, f64), h: f64) -> (f64, f64) {
        let k1 = (v, self.accel(u));
        let k2 = (v + 0.5 * h * k1.1, self.accel(u + 0.5 * h * k1.0));
        let k3 = (v + 0.5 * h * k2.1, self.accel(u + 0.5 * h * k2.0));
        let k4 = (v + h * k3.1, self.accel(u + h * k3.0));
        (u + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
    }

    /// First time `u'` vanishes after leaving `(a, 0)`, searched up to
    /// `t_max`; `+∞` when it does not turn in time and `None` when `u` stops
    /// being positive.
    fn half_period(&self, a: f64, h: f64, t_max: f64) -> Option<f64> {
        let mut y = (a, 0.0);
        let sign = -(a - ((self.nf - 2.0) / self.nf).powf(1.0 / (self.p - 1.0))).signum();
        let mut t = 0.0;
        while t < t_max {
            let next = self.step(y, h);
            if !(next.0 > 0.0) || !next.1.is_finite() {
                return None;
            }
            if next.1 * sign <= 0.0 {
                // Bisect on the length of the final step.
                let (mut lo, mut hi) = (0.0, h);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if self.step(y, mid).1 * sign > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(t + 0.5 * (lo + hi));
            }
            y = next;
            t += h;
        }
        Some(f64::INFINITY)
    }
}

/// Solve the periodic Yamabe equation by shooting from an extremum: find
/// `A` such that the orbit through `(A, 0)` has half period `T/2`. Returns
/// the constant solution with `constant = true` when the amplitude sweep
/// finds no non-constant branch.
pub fn yamabe_ode_solve(n: usize, period: f64, steps: usize) -> Result<YamabeSolution, ConformalError> {
    if n < 3 {
        return Err(ConformalError::Dimension { what: "Yamabe equation", need: 3, got: n });
    }
    if !(period > 0.0 && period.is_finite()) {
        return Err(ConformalError::Invalid(format!("period {period} must be positive")));
    }
    if steps < 16 {
        return Err(ConformalError::Invalid(format!("{steps} steps per period is too coarse")));
    }
    let nf = n as f64;
    let ode = YamabeOde::new(n);
    let u0 = ((nf - 2.0) / nf).powf((nf - 2.0) / 4.0);
    let half = 0.5 * period;
    let h = period / steps as f64;

    // Geometric sweep over [0.1 u0, 10 u0], skipping a neighbourhood of u0.
    let amps: Vec<f64> = (0..YAMABE_SWEEP)
        .map(|k| u0 * 10f64.powf(-1.0 + 2.0 * k as f64 / (YAMABE_SWEEP - 1) as f64))
        .filter(|a| (a - u0).abs() > 1e-3 * u0)
        .collect();
    let t_max = period;
    // Orbits outside the homoclinic loop reach u = 0 without turning, so
    // they count as an infinite half period.
    let gap = |a: f64| ode.half_period(a, h, t_max).map_or(f64::INFINITY, |t| t - half);
    let vals: Vec<f64> = amps.iter().map(|&a| gap(a)).collect();
    let mut roots = Vec::new();
    for k in 0..amps.len().saturating_sub(1) {
        let (f0, f1) = (vals[k], vals[k + 1]);
        if (amps[k] - u0) * (amps[k + 1] - u0) < 0.0 || (f0 > 0.0) == (f1 > 0.0) {
            continue;
        }
        let (mut lo, mut hi, flo) = (amps[k], amps[k + 1], f0);
        let mut steps = 0;
        while hi - lo > 1e-14 * lo {
            if steps == YAMABE_MAX_BISECTIONS {
                return Err(ConformalError::NoConvergence(YAMABE_MAX_BISECTIONS));
            }
            steps += 1;
            let mid = 0.5 * (lo + hi);
            let fm = gap(mid);
            if (fm > 0.0) == (flo > 0.0) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }

    let (amplitude, constant) = match roots.first() {
        Some(&a) => (a, false),
        None => (u0, true),
    };
    let mut samples = Vec::with_capacity(steps + 1);
    let mut y = (amplitude, 0.0);
    samples.push(y.0);
    for _ in 0..steps {
        // The constant solution is kept exact rather than integrated.
        if !constant {
            y = ode.step(y, h);
        }
        samples.push(y.0);
    }
    let periodicity_error = (y.0 - amplitude).abs().max(y.1.abs());

    // Fourth-order periodic stencil for u''.
    let m = steps;
    let at = |i: isize| samples[i.rem_euclid(m as isize) as usize];
    let mut sq = 0.0;
    for i in 0..m as isize {
        let u = at(i);
        let d = |k: isize| at(i + k) - u;
        let upp = (16.0 * (d(-1) + d(1)) - d(-2) - d(2)) / (12.0 * h * h);
        let r = -4.0 * (nf - 1.0) / (nf - 2.0) * upp + (nf - 1.0) * (nf - 2.0) * u - nf * (nf - 1.0) * u.powf(ode.p);
        sq += r * r;
    }
    let residual = (sq / m as f64).sqrt();

    let mut coeffs = Vec::new();
    let w = 2.0 * std::f64::consts::PI / m as f64;
    let mean = samples[..m].iter().sum::<f64>() / m as f64;
    coeffs.push(mean);
    for k in 1..=200 {
        let a = 2.0 / m as f64 * samples[..m].iter().enumerate().map(|(i, u)| u * (w * (k * i) as f64).cos()).sum::<f64>();
        if a.abs() < 1e-15 * mean.abs() {
            break;
        }
        coeffs.push(a);
    }
    Ok(YamabeSolution {
        n,
        period,
        amplitude,
        constant_value: u0,
        samples,
        cosine_coefficients: coeffs,
        residual,
        periodicity_error,
        branch_amplitudes: roots,
        constant,
    })
}
