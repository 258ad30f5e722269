//! Hypersurfaces in the space forms `N^{n+1}(c)`.
//!
//! The sphere and hyperbolic space are realized as the quadrics `⟨x,x⟩ = 1`
//! in `R^{n+2}` and `⟨x,x⟩ = −1` in Minkowski space (first coordinate
//! timelike). The second fundamental form is `h_ij = ⟨∂_i∂_j X, N⟩`: the
//! quadric's own normal component of `∂_i∂_j X` is along `X`, which is
//! orthogonal to `N`, so no correction term is needed. `H` is the
//! unnormalized trace `Σκ_i`.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::{simplify_expr, Differentiator, Expr, ExprError, ParamValues, Rational, Tape};
use crate::geometry::{CoordSpec, GeometryError, MetricChart};
use crate::identities::{IdentityReport, Residuals, DEFAULT_TOLERANCE};
use crate::tensor::{generalized_eigenvalues, invert, TensorError, TensorValue};

/// Tolerance for the immersion constraints on probe points.
const CONSTRAINT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, thiserror::Error)]
pub enum ImmersionError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("invalid immersion: {0}")]
    Invalid(String),
    #[error("induced metric is degenerate at {0:?}")]
    Degenerate(Vec<f64>),
    #[error("{what} needs {need} ≤ m ≤ {max}, got m = {got}")]
    SplitOutOfRange { what: &'static str, need: usize, max: usize, got: usize },
}

/// A parametrized hypersurface with explicit ambient position and unit
/// normal.
pub struct Immersion {
    pub name: String,
    /// Curvature of the ambient space form: −1, 0 or 1.
    pub c: i32,
    pub coords: Vec<CoordSpec>,
    pub position: Vec<Expr>,
    pub normal: Vec<Expr>,
    pub params: ParamValues,
    /// Roots: X, N, ∂_iX for each i, ∂_i∂_jX for i ≤ j.
    tape: Tape,
    induced: OnceLock<Result<MetricChart, GeometryError>>,
}

impl std::fmt::Debug for Immersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Immersion").field("name", &self.name).field("c", &self.c).field("n", &self.dim()).finish()
    }
}

impl Immersion {
    pub fn new(
        name: &str,
        c: i32,
        coords: Vec<CoordSpec>,
        position: Vec<Expr>,
        normal: Vec<Expr>,
        params: ParamValues,
    ) -> Result<Immersion, ImmersionError> {
        let n = coords.len();
        if !(-1..=1).contains(&c) {
            return Err(ImmersionError::Invalid(format!("ambient curvature must be -1, 0 or 1, got {c}")));
        }
        if !(2..=crate::geometry::MAX_DIM).contains(&n) {
            return Err(ImmersionError::Invalid(format!("dimension {n} outside 2..={}", crate::geometry::MAX_DIM)));
        }
        let amb = if c == 0 { n + 1 } else { n + 2 };
        if position.len() != amb || normal.len() != amb {
            return Err(ImmersionError::Invalid(format!(
                "ambient dimension is {amb}; got {} position and {} normal components",
                position.len(),
                normal.len()
            )));
        }
        let bind = |v: &[Expr]| v.iter().map(|e| simplify_expr(&e.bind_params(&params))).collect::<Vec<_>>();
        let (position, normal) = (bind(&position), bind(&normal));
        for e in position.iter().chain(&normal) {
            if let Some(p) = e.params().first() {
                return Err(ImmersionError::Expr(ExprError::UnboundParam(p.to_string())));
            }
            if e.max_coord().is_some_and(|k| k >= n) {
                return Err(ImmersionError::Invalid("expression refers to a coordinate beyond the chart".into()));
            }
        }
        let mut d = Differentiator::new();
        let mut roots: Vec<Expr> = position.iter().chain(&normal).cloned().collect();
        for i in 0..n {
            roots.extend(position.iter().map(|x| d.d(x, i)));
        }
        for i in 0..n {
            for j in i..n {
                roots.extend(position.iter().map(|x| d.d_multi(x, &[i, j])));
            }
        }
        let tape = Tape::compile(&roots, n)?;
        let im = Immersion {
            name: name.to_string(),
            c,
            coords,
            position,
            normal,
            params,
            tape,
            induced: OnceLock::new(),
        };
        im.check_constraints()?;
        Ok(im)
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.position.len()
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        if self.c < 0 {
            s - 2.0 * a[0] * b[0]
        } else {
            s
        }
    }

    fn dot_expr(&self, a: &[Expr], b: &[Expr]) -> Expr {
        Expr::sum(a.iter().zip(b).enumerate().map(|(k, (x, y))| {
            let t = x.mul(y);
            if self.c < 0 && k == 0 {
                t.neg()
            } else {
                t
            }
        }))
    }

    /// Position, normal, tangents and second derivatives at a point.
    fn frames(&self, point: &[f64]) -> Result<Frames, ImmersionError> {
        let n = self.dim();
        if point.len() != n {
            return Err(GeometryError::PointDimension { expected: n, got: point.len() }.into());
        }
        let v = self.tape.eval(point, &ParamValues::new())?;
        let a = self.ambient_dim();
        let chunk = |k: usize| v[k * a..(k + 1) * a].to_vec();
        let tangents = (0..n).map(|i| chunk(2 + i)).collect();
        let mut second = vec![Vec::new(); n * n];
        let mut k = 2 + n;
        for i in 0..n {
            for j in i..n {
                second[i * n + j] = chunk(k);
                second[j * n + i] = chunk(k);
                k += 1;
            }
        }
        Ok(Frames { x: chunk(0), normal: chunk(1), tangents, second })
    }

    /// Quadric, unit-normal and orthogonality constraints on seeded
    /// interior probe points.
    fn check_constraints(&self) -> Result<(), ImmersionError> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for probe in 0..32 {
            let u: Vec<f64> = (0..n).map(|_| if probe == 0 { 0.5 } else { rng.gen::<f64>() }).collect();
            let p = self.interior_point(&u, 0.9);
            let f = self.frames(&p)?;
            let scale = 1.0 + f.x.iter().map(|x| x * x).sum::<f64>();
            let fail = |what: &str, val: f64| -> Result<(), ImmersionError> {
                if val.abs() > CONSTRAINT_TOL * scale || !val.is_finite() {
                    return Err(ImmersionError::Invalid(format!("{what} off by {val:e} at {p:?}")));
                }
                Ok(())
            };
            if self.c != 0 {
                fail("quadric constraint", self.dot(&f.x, &f.x) - self.c as f64)?;
                fail("normal tangent to the quadric", self.dot(&f.normal, &f.x))?;
            }
            fail("normal length", self.dot(&f.normal, &f.normal) - 1.0)?;
            for t in &f.tangents {
                let tn = self.dot(t, t).sqrt().max(1.0);
                fail("normal orthogonality", self.dot(t, &f.normal) / tn)?;
            }
        }
        Ok(())
    }

    /// Point at fractional position `u` of the central `frac` of the box.
    pub fn interior_point(&self, u: &[f64], frac: f64) -> Vec<f64> {
        self.coords.iter().zip(u).map(|(c, &t)| 0.5 * (c.lo + c.hi) + (t - 0.5) * frac * c.width()).collect()
    }

    /// The induced metric `⟨∂_iX, ∂_jX⟩` as a chart, for intrinsic
    /// curvature.
    pub fn induced_chart(&self) -> Result<&MetricChart, ImmersionError> {
        let r = self.induced.get_or_init(|| {
            let n = self.dim();
            let mut d = Differentiator::new();
            let tangents: Vec<Vec<Expr>> =
                (0..n).map(|i| self.position.iter().map(|x| d.d(x, i)).collect()).collect();
            let mut metric = vec![Expr::zero(); n * n];
            for i in 0..n {
                for j in i..n {
                    let e = simplify_expr(&self.dot_expr(&tangents[i], &tangents[j]));
                    metric[i * n + j] = e.clone();
                    metric[j * n + i] = e;
                }
            }
            MetricChart::new(&format!("{} (induced)", self.name), self.coords.clone(), metric, ParamValues::new())
        });
        r.as_ref().map_err(|e| e.clone().into())
    }

    pub fn fundamental_forms(&self, point: &[f64]) -> Result<ShapeData, ImmersionError> {
        let n = self.dim();
        let f = self.frames(point)?;
        let mut g = vec![0.0; n * n];
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = self.dot(&f.tangents[i], &f.tangents[j]);
                h[i * n + j] = self.dot(&f.second[i * n + j], &f.normal);
            }
        }
        ShapeData::from_forms(point.to_vec(), self.c, TensorValue::from_matrix(n, &g), TensorValue::from_matrix(n, &h))
    }

    /// Gauss equations for Riemann, Ricci and scalar curvature: intrinsic
    /// curvature of the induced chart against the shape-operator formulas.
    pub fn gauss_residuals(&self, points: &[Vec<f64>]) -> Result<IdentityReport, ImmersionError> {
        self.gauss_residuals_tol(points, DEFAULT_TOLERANCE)
    }

    pub fn gauss_residuals_tol(&self, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport, ImmersionError> {
        let n = self.dim();
        let chart = self.induced_chart()?;
        let c = self.c as f64;
        let mut acc = Residuals::new("gauss_equations", tol);
        for p in points {
            let sd = self.fundamental_forms(p)?;
            let b = chart.bundle_at_order(p, 2)?;
            let (g, h) = (&sd.first_form, &sd.second_form);
            let gi = invert(&g.data, n).ok_or_else(|| ImmersionError::Degenerate(p.clone()))?;
            let scale = b.riemann.max_abs().max(sd.h_norm_sq).max(c.abs());
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let rhs = c * (g.get(&[i, k]) * g.get(&[j, l]) - g.get(&[i, l]) * g.get(&[j, k]))
                                + h.get(&[i, k]) * h.get(&[j, l])
                                - h.get(&[i, l]) * h.get(&[j, k]);
                            acc.record(b.riemann.get(&[i, j, k, l]) - rhs, scale);
                        }
                    }
                }
            }
            for j in 0..n {
                for l in 0..n {
                    let mut hh = 0.0;
                    for k in 0..n {
                        for m in 0..n {
                            hh += h.get(&[j, k]) * gi[k * n + m] * h.get(&[m, l]);
                        }
                    }
                    let rhs = (n as f64 - 1.0) * c * g.get(&[j, l]) + sd.mean_curvature * h.get(&[j, l]) - hh;
                    acc.record(b.ricci.get(&[j, l]) - rhs, scale.max(b.ricci.max_abs()));
                }
            }
            let nf = n as f64;
            let rhs = nf * (nf - 1.0) * c + sd.mean_curvature.powi(2) - sd.h_norm_sq;
            acc.compare(b.scalar, rhs, &[sd.mean_curvature.powi(2), sd.h_norm_sq, nf * (nf - 1.0) * c]);
            acc.point();
        }
        Ok(acc.finish())
    }
}

struct Frames {
    x: Vec<f64>,
    normal: Vec<f64>,
    tangents: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

/// First and second fundamental forms at a point with derived spectra.
#[derive(Clone, Debug, Serialize)]
pub struct ShapeData {
    pub point: Vec<f64>,
    pub c: i32,
    pub first_form: TensorValue,
    pub second_form: TensorValue,
    pub mean_curvature: f64,
    pub h_norm_sq: f64,
    /// Principal curvatures, ascending.
    pub kappa: Vec<f64>,
    /// `λ_i = (n−1)c + Hκ_i − κ_i²`.
    pub lambda: Vec<f64>,
    /// `μ_i = κ_i − H/n`.
    pub mu: Vec<f64>,
    /// `|Z|² = |h|² − H²/n`.
    pub z_norm_sq: f64,
}

impl ShapeData {
    pub fn from_forms(point: Vec<f64>, c: i32, g: TensorValue, h: TensorValue) -> Result<ShapeData, ImmersionError> {
        let n = g.dim;
        let gi = invert(&g.data, n).ok_or_else(|| ImmersionError::Degenerate(point.clone()))?;
        let eig = generalized_eigenvalues(&h, &g).map_err(|e| match e {
            TensorError::Singular | TensorError::NotSymmetric(..) => ImmersionError::Degenerate(point.clone()),
            e => e.into(),
        })?;
        let mut hmix = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                hmix[i * n + j] = (0..n).map(|k| gi[i * n + k] * h.data[k * n + j]).sum();
            }
        }
        let mean: f64 = (0..n).map(|i| hmix[i * n + i]).sum();
        let norm: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| hmix[i * n + j] * hmix[j * n + i]).sum();
        Ok(Self::assemble(point, c, g, h, eig.eigenvalues, mean, norm))
    }

    /// Shape data of a diagonal second form in an orthonormal frame.
    pub fn from_kappa(kappa: &[f64], c: i32) -> ShapeData {
        let n = kappa.len();
        let g = TensorValue::identity(n);
        let h = TensorValue::from_fn(n, 2, |idx| if idx[0] == idx[1] { kappa[idx[0]] } else { 0.0 });
        let mut k = kappa.to_vec();
        k.sort_by(f64::total_cmp);
        let mean = k.iter().sum();
        let norm = k.iter().map(|x| x * x).sum();
        Self::assemble(Vec::new(), c, g, h, k, mean, norm)
    }

    fn assemble(point: Vec<f64>, c: i32, g: TensorValue, h: TensorValue, kappa: Vec<f64>, mean: f64, norm: f64) -> ShapeData {
        let nf = kappa.len() as f64;
        let lambda = kappa.iter().map(|&k| (nf - 1.0) * c as f64 + mean * k - k * k).collect();
        let mu = kappa.iter().map(|&k| k - mean / nf).collect();
        ShapeData {
            point,
            c,
            first_form: g,
            second_form: h,
            mean_curvature: mean,
            h_norm_sq: norm,
            kappa,
            lambda,
            mu,
            z_norm_sq: norm - mean * mean / nf,
        }
    }

    pub fn dim(&self) -> usize {
        self.kappa.len()
    }
}

/// The λ spectrum and the combination `(Σκλ)² − HΣκλ²`.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaReport {
    pub lambdas: Vec<f64>,
    pub dhy: f64,
    /// Magnitude of the two terms of `dhy`.
    pub dhy_scale: f64,
    /// c = 0, H > 0 and every λ ≥ 0, where `dhy ≤ 0` is claimed.
    pub sign_claim_applies: bool,
    pub dhy_nonpositive: bool,
    /// Nonzero κ entries share a single λ (the Cauchy equality pattern).
    pub equality_pattern: bool,
    pub umbilic: bool,
    pub two_valued: bool,
    /// `c + κ_iκ_j = 0` across every pair with distinct λ; `None` when all
    /// λ coincide.
    pub cartan: Option<bool>,
}

const PATTERN_TOL: f64 = 1e-8;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= PATTERN_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Distinct values of a sorted list, merged within the pattern tolerance.
fn clusters(sorted: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for &x in sorted {
        if out.last().is_none_or(|&l| !close(l, x)) {
            out.push(x);
        }
    }
    out
}

pub fn lambda_quantities(sd: &ShapeData, c: i32) -> LambdaReport {
    let nf = sd.dim() as f64;
    let h = sd.mean_curvature;
    let lambdas: Vec<f64> = sd.kappa.iter().map(|&k| (nf - 1.0) * c as f64 + h * k - k * k).collect();
    let s1: f64 = sd.kappa.iter().zip(&lambdas).map(|(k, l)| k * l).sum();
    let s2: f64 = sd.kappa.iter().zip(&lambdas).map(|(k, l)| k * l * l).sum();
    let dhy = s1 * s1 - h * s2;
    let dhy_scale = (s1 * s1).max((h * s2).abs());
    let sign_claim_applies = c == 0 && h > 0.0 && lambdas.iter().all(|&l| l >= -1e-12);
    let nonzero: Vec<f64> = sd
        .kappa
        .iter()
        .zip(&lambdas)
        .filter(|(k, _)| k.abs() > PATTERN_TOL)
        .map(|(_, &l)| l)
        .collect();
    let equality_pattern = nonzero.windows(2).all(|w| close(w[0], w[1]));
    let kc = clusters(&sd.kappa);
    let mut cartan = None;
    for i in 0..lambdas.len() {
        for j in i + 1..lambdas.len() {
            if !close(lambdas[i], lambdas[j]) {
                let ok = (c as f64 + sd.kappa[i] * sd.kappa[j]).abs() <= PATTERN_TOL * (1.0 + sd.kappa[i].abs() * sd.kappa[j].abs());
                cartan = Some(cartan.unwrap_or(true) && ok);
            }
        }
    }
    LambdaReport {
        lambdas,
        dhy,
        dhy_scale,
        sign_claim_applies,
        dhy_nonpositive: dhy <= 1e-10 * dhy_scale.max(1.0),
        equality_pattern,
        umbilic: kc.len() == 1,
        two_valued: kc.len() == 2,
        cartan,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureSign {
    Zero,
    Nonnegative,
    Nonpositive,
    Mixed,
}

/// Membership in the window `H²/n ≤ |h|² ≤ H²/(n−1)` and its consequences.
#[derive(Clone, Debug, Serialize)]
pub struct PinchingReport {
    pub h_norm_sq: f64,
    pub lower: f64,
    pub upper: f64,
    pub in_window: bool,
    pub z_norm_sq: f64,
    pub z_bound: f64,
    pub z_bound_holds: bool,
    pub mu_bound: f64,
    pub mu_bound_holds: bool,
    pub sign: CurvatureSign,
}

pub fn pinching_check(sd: &ShapeData) -> PinchingReport {
    let nf = sd.dim() as f64;
    let h2 = sd.mean_curvature * sd.mean_curvature;
    let slack = 1e-12 * (1.0 + h2.max(sd.h_norm_sq));
    let (lower, upper) = (h2 / nf, h2 / (nf - 1.0));
    let z_bound = h2 / (nf * (nf - 1.0));
    let mu_bound = sd.mean_curvature.abs() / nf;
    let tiny = 1e-12 * (1.0 + sd.kappa.iter().fold(0.0f64, |m, k| m.max(k.abs())));
    let sign = if sd.kappa.iter().all(|k| k.abs() <= tiny) {
        CurvatureSign::Zero
    } else if sd.kappa.iter().all(|&k| k >= -tiny) {
        CurvatureSign::Nonnegative
    } else if sd.kappa.iter().all(|&k| k <= tiny) {
        CurvatureSign::Nonpositive
    } else {
        CurvatureSign::Mixed
    };
    PinchingReport {
        h_norm_sq: sd.h_norm_sq,
        lower,
        upper,
        in_window: sd.h_norm_sq >= lower - slack && sd.h_norm_sq <= upper + slack,
        z_norm_sq: sd.z_norm_sq,
        z_bound,
        z_bound_holds: sd.z_norm_sq <= z_bound + slack,
        mu_bound,
        mu_bound_holds: sd.mu.iter().all(|m| m.abs() <= mu_bound + slack.sqrt().min(1e-9)),
        sign,
    }
}

/// Closed-form isoparametric data with two principal curvatures `κ` (of
/// multiplicity m) and `t`, taking the upper sign: `κ > 0 > t`.
#[derive(Clone, Debug, Serialize)]
pub struct CliffordData {
    pub n: usize,
    pub m: usize,
    pub kappa: f64,
    pub t: f64,
    pub lambda: f64,
    /// `κ² = (n−m−1)/(m−1)` exactly.
    #[serde(serialize_with = "ser_rational")]
    pub kappa_sq: Rational,
    /// `t² = (m−1)/(n−m−1)` exactly.
    #[serde(serialize_with = "ser_rational")]
    pub t_sq: Rational,
}

fn ser_rational<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

impl CliffordData {
    /// `κt = −1`: the squares multiply to one and the signs differ.
    pub fn product_is_minus_one(&self) -> bool {
        self.kappa_sq * self.t_sq == Rational::from_integer(1) && self.kappa > 0.0 && self.t < 0.0
    }

    /// `(m−1)κ + (n−m−1)t = 0`, checked on squares since the two terms
    /// have opposite signs.
    pub fn trace_vanishes(&self) -> bool {
        let a = Rational::from_integer((self.m as i128 - 1).pow(2)) * self.kappa_sq;
        let b = Rational::from_integer((self.n as i128 - self.m as i128 - 1).pow(2)) * self.t_sq;
        a == b
    }

    /// `λ = n − 1 + κt = n − 2`.
    pub fn lambda_matches(&self) -> bool {
        self.product_is_minus_one() && self.lambda == self.n as f64 - 2.0
    }
}

pub fn isoparametric_clifford_data(n: usize, m: usize) -> Result<CliffordData, ImmersionError> {
    if n < 4 || m < 2 || m + 2 > n {
        return Err(ImmersionError::SplitOutOfRange { what: "isoparametric data", need: 2, max: n.saturating_sub(2), got: m });
    }
    let kappa_sq = Rational::new((n - m - 1) as i128, (m - 1) as i128);
    let t_sq = Rational::new((m - 1) as i128, (n - m - 1) as i128);
    let kappa = ((n - m - 1) as f64 / (m - 1) as f64).sqrt();
    let t = -((m - 1) as f64 / (n - m - 1) as f64).sqrt();
    Ok(CliffordData { n, m, kappa, t, lambda: n as f64 - 2.0, kappa_sq, t_sq })
}

#[cfg(test)]
mod tests;
