//! Pointwise checks of the curvature identities used in the rigidity
//! argument. Left-hand sides come from the symbolic curvature expressions
//! (differentiated by Taylor-mode evaluation), right-hand sides from the
//! jet bundle, so the two never share a code path beyond the metric itself.
//!
//! Index notation follows the usual comma convention: `T_{ij,k}` is
//! `∇_k T_ij` and repeated indices are contracted with the inverse metric.

mod report;
mod symside;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::{CurvatureBundle, GeometryError, MetricChart};
use crate::tensor::{cholesky, lower_inverse, sym_eigen, tensor_norm, TensorValue};

pub use report::{IdentityReport, Residuals, ABSOLUTE_FLOOR, DEFAULT_TOLERANCE};
use symside::SymSide;

#[derive(Clone, Debug, thiserror::Error)]
pub enum IdentityError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{identity} needs dimension {need}, chart has {got}")]
    Dimension { identity: &'static str, need: &'static str, got: usize },
    #[error("precondition of {identity} fails at {point:?}: {reason}")]
    Precondition { identity: &'static str, point: Vec<f64>, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma21Variant {
    General,
    Lcf,
    DivWeylFree,
}

impl Lemma21Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::General => "general",
            Self::Lcf => "lcf",
            Self::DivWeylFree => "div_weyl_free",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "general" => Some(Self::General),
            "lcf" => Some(Self::Lcf),
            "div_weyl_free" => Some(Self::DivWeylFree),
            _ => None,
        }
    }
}

/// `count` points drawn uniformly from the central 80% of the chart box.
pub fn sample_points(chart: &MetricChart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: Vec<f64> = (0..chart.dim()).map(|_| rng.gen()).collect();
            chart.interior_point(&u, 0.8)
        })
        .collect()
}

fn need_dim(identity: &'static str, chart: &MetricChart, min: usize, need: &'static str) -> Result<(), IdentityError> {
    if chart.dim() < min {
        return Err(IdentityError::Dimension { identity, need, got: chart.dim() });
    }
    Ok(())
}

/// Numeric helpers on bundle tensors in coordinates.
struct Frame<'b> {
    n: usize,
    b: &'b CurvatureBundle,
    gi: &'b [f64],
}

impl<'b> Frame<'b> {
    fn new(b: &'b CurvatureBundle) -> Self {
        Frame { n: b.dim, b, gi: &b.inverse_metric.data }
    }

    /// `T^{ij}` of a covariant 2-tensor.
    fn up2(&self, t: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut half = vec![0.0; n * n];
        for i in 0..n {
            for b in 0..n {
                half[i * n + b] = (0..n).map(|a| self.gi[i * n + a] * t[a * n + b]).sum();
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|b| half[i * n + b] * self.gi[b * n + j]).sum();
            }
        }
        out
    }

    /// `T^i_j` of a covariant 2-tensor.
    fn mixed(&self, t: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|a| self.gi[i * n + a] * t[a * n + j]).sum();
            }
        }
        out
    }

    fn dot2(&self, a: &[f64], b: &[f64]) -> f64 {
        let bu = self.up2(b);
        a.iter().zip(&bu).map(|(x, y)| x * y).sum()
    }

    fn dot1(&self, a: &[f64], b: &[f64]) -> f64 {
        let n = self.n;
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.gi[i * n + j] * a[i] * b[j]).sum()
    }

    /// `tr(M³)` for the mixed Ricci tensor.
    fn ricci_cubed(&self) -> f64 {
        let n = self.n;
        let m = self.mixed(&self.b.ricci.data);
        let mut t = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t += m[i * n + j] * m[j * n + k] * m[k * n + i];
                }
            }
        }
        t
    }

    /// `T_{ikjl} Ric^{kl} Ric^{ij}`; for `T = Riem` this is `R_ijkl R^ik R^jl`.
    fn four_ricci_ricci(&self, t: &[f64]) -> f64 {
        let n = self.n;
        let ru = self.up2(&self.b.ricci.data);
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let rij = ru[i * n + j];
                    if rij == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        s += t[((i * n + k) * n + j) * n + l] * ru[k * n + l] * rij;
                    }
                }
            }
        }
        s
    }

    /// `∇A` from the bundle's `∇Ric` and `∇R`, derivative index last.
    fn nabla_schouten(&self) -> Vec<f64> {
        let n = self.n;
        let nf = n as f64;
        let nr = self.b.nabla_ricci.as_ref().expect("order ≥ 3");
        let gr = self.b.grad_r.as_ref().expect("order ≥ 3");
        let g = &self.b.metric.data;
        let mut out = vec![0.0; n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out[(i * n + j) * n + k] =
                        (nr.data[(i * n + j) * n + k] - gr.data[k] * g[i * n + j] / (2.0 * (nf - 1.0))) / (nf - 2.0);
                }
            }
        }
        out
    }

    /// `∇²A`, derivative indices last in order of application.
    fn nabla2_schouten(&self) -> Vec<f64> {
        let n = self.n;
        let nf = n as f64;
        let n2 = self.b.nabla2_ricci.as_ref().expect("order ≥ 4");
        let h = self.b.hess_r.as_ref().expect("order ≥ 4");
        let g = &self.b.metric.data;
        let mut out = vec![0.0; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for a in 0..n {
                    for c in 0..n {
                        let k = ((i * n + j) * n + a) * n + c;
                        out[k] = (n2.data[k] - h.data[a * n + c] * g[i * n + j] / (2.0 * (nf - 1.0))) / (nf - 2.0);
                    }
                }
            }
        }
        out
    }
}

/// The three forms of the `Δ|Ric|²` formula.
pub fn verify_lemma21(
    chart: &MetricChart,
    points: &[Vec<f64>],
    variant: Lemma21Variant,
    tol: f64,
) -> Result<IdentityReport, IdentityError> {
    const ID: &str = "laplacian_ricci_norm";
    need_dim(ID, chart, 4, "n > 3")?;
    let n = chart.dim();
    let nf = n as f64;
    let mut acc = Residuals::new(&format!("{ID}_{}", variant.name()), tol);
    for p in points {
        let b = CurvatureBundle::compute(chart, p, 4)?;
        let f = Frame::new(&b);
        let riem_scale = 1.0 + b.riemann.max_abs();
        match variant {
            Lemma21Variant::Lcf if b.weyl.max_abs() > 1e-8 * riem_scale => {
                return Err(IdentityError::Precondition {
                    identity: ID,
                    point: p.clone(),
                    reason: format!("|W| = {:e} is not zero", b.weyl.max_abs()),
                });
            }
            Lemma21Variant::DivWeylFree => {
                let d2w = b.div2_weyl.as_ref().expect("order 4").max_abs();
                let scale = 1.0 + b.nabla2_ricci.as_ref().expect("order 4").max_abs();
                if d2w > 1e-8 * scale {
                    return Err(IdentityError::Precondition {
                        identity: ID,
                        point: p.clone(),
                        reason: format!("|δ²W| = {d2w:e} is not zero"),
                    });
                }
            }
            _ => {}
        }

        let sym = SymSide::new(chart, p, 2, false)?;
        let lhs = sym.laplacian(&sym.ricci_norm_sq());

        let r = b.scalar;
        let rn = b.ricci_norm_sq;
        let t_grad = 2.0 * tensor_norm(b.nabla_ricci.as_ref().unwrap(), &b.metric, &b.inverse_metric).unwrap();
        let t_hess = (nf - 2.0) / (nf - 1.0) * f.dot2(&b.ricci.data, &b.hess_r.as_ref().unwrap().data);
        let t_lap = r * b.lap_r.unwrap() / (nf - 1.0);
        let cube = f.ricci_cubed();
        let mut terms = vec![t_grad, t_hess, t_lap];
        match variant {
            Lemma21Variant::General | Lemma21Variant::Lcf => {
                let i_terms = [nf / (nf - 2.0) * cube, -(2.0 * nf - 1.0) / ((nf - 2.0) * (nf - 1.0)) * r * rn, r.powi(3) / ((nf - 1.0) * (nf - 2.0))];
                terms.extend(i_terms.iter().map(|t| 2.0 * t));
                if variant == Lemma21Variant::General {
                    terms.push(-4.0 * f.four_ricci_ricci(&b.weyl.data));
                    terms.push(2.0 * (nf - 2.0) * f.dot2(&b.bach.as_ref().unwrap().data, &b.ricci.data));
                }
            }
            Lemma21Variant::DivWeylFree => {
                terms.push(2.0 * cube);
                terms.push(-2.0 * f.four_ricci_ricci(&b.riemann.data));
            }
        }
        let rhs: f64 = terms.iter().sum();
        acc.compare(lhs, rhs, &terms);
        acc.point();
    }
    Ok(acc.finish())
}

/// `A_{ik,k} = R_{,i} / (2(n−1))`.
pub fn verify_schouten_div(chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport, IdentityError> {
    need_dim("schouten_divergence", chart, 3, "n > 2")?;
    let n = chart.dim();
    let mut acc = Residuals::new("schouten_divergence", tol);
    for p in points {
        let sym = SymSide::new(chart, p, 1, false)?;
        let na = sym.covd(&sym.schouten(), 2);
        let b = CurvatureBundle::compute(chart, p, 3)?;
        let gr = &b.grad_r.as_ref().unwrap().data;
        let scale = gr.iter().fold(0.0f64, |m, x| m.max(x.abs())) / (2.0 * (n as f64 - 1.0));
        for i in 0..n {
            let mut lhs = 0.0;
            for k in 0..n {
                for l in 0..n {
                    lhs += sym.ginv[k * n + l].c[0] * na[(i * n + k) * n + l].c[0];
                }
            }
            let rhs = gr[i] / (2.0 * (n as f64 - 1.0));
            acc.compare(lhs, rhs, &[scale]);
        }
        acc.point();
    }
    Ok(acc.finish())
}

/// `W_{ikjl,l} = (n−3)(A_{ij,k} − A_{jk,i})`.
pub fn verify_div_weyl(chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport, IdentityError> {
    need_dim("weyl_divergence", chart, 4, "n > 3")?;
    let n = chart.dim();
    let nf = n as f64;
    let mut acc = Residuals::new("weyl_divergence", tol);
    for p in points {
        let sym = SymSide::new(chart, p, 1, true)?;
        let nw = sym.covd(&sym.weyl(), 4);
        let b = CurvatureBundle::compute(chart, p, 3)?;
        let na = Frame::new(&b).nabla_schouten();
        let a_scale = na.iter().fold(0.0f64, |m, x| m.max(x.abs())) * (nf - 3.0);
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let mut lhs = 0.0;
                    for l in 0..n {
                        for m in 0..n {
                            let gi = sym.ginv[l * n + m].c[0];
                            if gi != 0.0 {
                                lhs += gi * nw[(((i * n + k) * n + j) * n + l) * n + m].c[0];
                            }
                        }
                    }
                    let rhs = (nf - 3.0) * (na[(i * n + j) * n + k] - na[(j * n + k) * n + i]);
                    acc.compare(lhs, rhs, &[a_scale]);
                }
            }
        }
        acc.point();
    }
    Ok(acc.finish())
}

/// `A_{jk,ik} = A_{jk,ki} − (R_{ikjl} A_{lk} − R_{il} A_{jl})`.
pub fn verify_commutation(chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport, IdentityError> {
    need_dim("derivative_commutation", chart, 3, "n > 2")?;
    let n = chart.dim();
    let mut acc = Residuals::new("derivative_commutation", tol);
    for p in points {
        let sym = SymSide::new(chart, p, 2, false)?;
        let nna = sym.covd(&sym.covd(&sym.schouten(), 2), 3);
        let b = CurvatureBundle::compute(chart, p, 4)?;
        let f = Frame::new(&b);
        let n2a = f.nabla2_schouten();
        let a = &b.schouten.as_ref().unwrap().data;
        let gi = f.gi;
        let riem = &b.riemann.data;
        let ric = &b.ricci.data;
        for j in 0..n {
            for i in 0..n {
                let (mut lhs, mut swapped, mut curv1, mut curv2) = (0.0, 0.0, 0.0, 0.0);
                for k in 0..n {
                    for c in 0..n {
                        let g = gi[k * n + c];
                        if g == 0.0 {
                            continue;
                        }
                        // ∇_c ∇_i A_jk and ∇_i ∇_c A_jk, traced over k and c
                        lhs += g * sym.space().truncate(&nna[((j * n + k) * n + i) * n + c], 0).c[0];
                        swapped += g * n2a[((j * n + k) * n + c) * n + i];
                        for l in 0..n {
                            for d in 0..n {
                                curv1 += g * gi[l * n + d] * riem[((i * n + k) * n + j) * n + l] * a[d * n + c];
                            }
                        }
                    }
                }
                for l in 0..n {
                    for d in 0..n {
                        curv2 += gi[l * n + d] * ric[i * n + l] * a[j * n + d];
                    }
                }
                let rhs = swapped - (curv1 - curv2);
                acc.compare(lhs, rhs, &[swapped, curv1, curv2]);
            }
        }
        acc.point();
    }
    Ok(acc.finish())
}

/// `½Δ|∇R|² = |∇²R|² + ⟨∇R, ∇ΔR⟩ + Ric(∇R, ∇R)`.
pub fn verify_bochner(chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport, IdentityError> {
    let mut acc = Residuals::new("bochner", tol);
    for p in points {
        let sym = SymSide::new(chart, p, 3, false)?;
        let lhs = 0.5 * sym.laplacian(&sym.grad_scalar_sq());
        let b = CurvatureBundle::compute(chart, p, 5)?;
        let f = Frame::new(&b);
        let gr = &b.grad_r.as_ref().unwrap().data;
        let t1 = tensor_norm(b.hess_r.as_ref().unwrap(), &b.metric, &b.inverse_metric).unwrap();
        let t2 = f.dot1(gr, &b.grad_lap_r.as_ref().unwrap().data);
        let gu: Vec<f64> = (0..b.dim).map(|i| (0..b.dim).map(|a| f.gi[i * b.dim + a] * gr[a]).sum()).collect();
        let t3: f64 = (0..b.dim)
            .flat_map(|i| (0..b.dim).map(move |j| (i, j)))
            .map(|(i, j)| b.ricci.data[i * b.dim + j] * gu[i] * gu[j])
            .sum();
        acc.compare(lhs, t1 + t2 + t3, &[t1, t2, t3]);
        acc.point();
    }
    Ok(acc.finish())
}

/// Orthonormal Ricci eigenframe: eigenvalues and frame vectors (column k of
/// the row-major matrix is `e_k`).
fn ricci_eigenframe(b: &CurvatureBundle) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    let n = b.dim;
    let l = cholesky(&b.metric.data, n).ok_or_else(|| GeometryError::NotPositiveDefinite { point: b.point.clone() })?;
    let li = lower_inverse(&l, n);
    // S = L⁻¹ Ric L⁻ᵀ
    let mut tmp = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            tmp[i * n + j] = (0..n).map(|a| li[i * n + a] * b.ricci.data[a * n + j]).sum();
        }
    }
    let mut s = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|a| tmp[i * n + a] * li[j * n + a]).sum();
            s[i * n + j] = v;
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = 0.5 * (s[i * n + j] + s[j * n + i]);
            s[i * n + j] = m;
            s[j * n + i] = m;
        }
    }
    let eig = sym_eigen(&TensorValue::from_matrix(n, &s)).map_err(GeometryError::Tensor)?;
    // e_k = L⁻ᵀ v_k
    let mut e = vec![0.0; n * n];
    for a in 0..n {
        for k in 0..n {
            e[a * n + k] = (0..n).map(|c| li[c * n + a] * eig.eigenvectors[c * n + k]).sum();
        }
    }
    Ok((eig.eigenvalues, e))
}

/// `R_ijR_jkR_ki − R_ijklR_ikR_jl = ½ Σ R_ijij (λ_i − λ_j)²` in a Ricci
/// eigenframe.
pub fn verify_eigen_identity(chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Result<IdentityReport, IdentityError> {
    let n = chart.dim();
    let mut acc = Residuals::new("ricci_eigenframe", tol);
    for p in points {
        let b = CurvatureBundle::compute(chart, p, 2)?;
        let f = Frame::new(&b);
        let cube = f.ricci_cubed();
        let quad = f.four_ricci_ricci(&b.riemann.data);
        let (lam, e) = ricci_eigenframe(&b)?;
        let mut rhs = 0.0;
        let mut rhs_scale = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut k_ij = 0.0;
                for a in 0..n {
                    for bb in 0..n {
                        for c in 0..n {
                            for d in 0..n {
                                let r = b.riemann.data[((a * n + bb) * n + c) * n + d];
                                if r != 0.0 {
                                    k_ij += r * e[a * n + i] * e[bb * n + j] * e[c * n + i] * e[d * n + j];
                                }
                            }
                        }
                    }
                }
                let t = 0.5 * k_ij * (lam[i] - lam[j]).powi(2);
                rhs += t;
                rhs_scale = rhs_scale.max(t.abs());
            }
        }
        acc.compare(cube - quad, rhs, &[cube, quad, rhs_scale]);
        acc.point();
    }
    Ok(acc.finish())
}

/// Minimum slack of `|∇Ric|² ≥ |∇R|²/n` and, where Ric ≥ 0 and W = 0, of
/// `Δ|Ric|² ≥ 2|∇Ric|² + (n−2)/(n−1)⟨Ric, ∇²R⟩ + RΔR/(n−1)`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub points: usize,
    pub gradient_min_slack: f64,
    pub gradient_scale: f64,
    pub gradient_holds: bool,
    pub laplacian_points: usize,
    pub laplacian_skipped: usize,
    pub laplacian_min_slack: Option<f64>,
    pub laplacian_scale: f64,
    pub laplacian_holds: Option<bool>,
    pub pass: bool,
}

pub fn verify_pointwise_bounds(chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Result<BoundsReport, IdentityError> {
    need_dim("pointwise_bounds", chart, 3, "n ≥ 3")?;
    let n = chart.dim();
    let nf = n as f64;
    let mut grad_min = f64::INFINITY;
    let mut grad_scale = 0.0f64;
    let mut grad_ok = true;
    let mut lap_min: Option<f64> = None;
    let mut lap_scale = 0.0f64;
    let mut lap_ok = true;
    let (mut used, mut skipped) = (0, 0);
    for p in points {
        let order = if n > 3 { 4 } else { 3 };
        let b = CurvatureBundle::compute(chart, p, order.max(4))?;
        let nric = tensor_norm(b.nabla_ricci.as_ref().unwrap(), &b.metric, &b.inverse_metric).unwrap();
        let gr = &b.grad_r.as_ref().unwrap().data;
        let f = Frame::new(&b);
        let ngr = f.dot1(gr, gr);
        let slack = nric - ngr / nf;
        grad_min = grad_min.min(slack);
        grad_scale = grad_scale.max(nric);
        grad_ok &= slack >= -ABSOLUTE_FLOOR.max(tol * nric);

        let (lam, _) = ricci_eigenframe(&b)?;
        let lcf = b.weyl.max_abs() <= 1e-8 * (1.0 + b.riemann.max_abs());
        if lam[0] < -1e-10 || !lcf {
            skipped += 1;
            continue;
        }
        used += 1;
        let sym = SymSide::new(chart, p, 2, false)?;
        let lhs = sym.laplacian(&sym.ricci_norm_sq());
        let terms = [
            2.0 * nric,
            (nf - 2.0) / (nf - 1.0) * f.dot2(&b.ricci.data, &b.hess_r.as_ref().unwrap().data),
            b.scalar * b.lap_r.unwrap() / (nf - 1.0),
        ];
        let s = lhs - terms.iter().sum::<f64>();
        let sc = terms.iter().fold(lhs.abs(), |m, t| m.max(t.abs()));
        lap_scale = lap_scale.max(sc);
        lap_min = Some(lap_min.map_or(s, |m| m.min(s)));
        // When every term is roundoff the curvature size sets the noise level.
        lap_ok &= s >= -(tol * sc).max(1e-10 * (1.0 + b.ricci_norm_sq));
    }
    let laplacian_holds = lap_min.map(|_| lap_ok);
    Ok(BoundsReport {
        points: points.len(),
        gradient_min_slack: grad_min,
        gradient_scale: grad_scale,
        gradient_holds: grad_ok,
        laplacian_points: used,
        laplacian_skipped: skipped,
        laplacian_min_slack: lap_min,
        laplacian_scale: lap_scale,
        laplacian_holds,
        pass: grad_ok && laplacian_holds.unwrap_or(true),
    })
}

/// Names accepted by [`verify_by_name`].
pub const IDENTITY_NAMES: [&str; 8] = [
    "lemma21_general",
    "lemma21_lcf",
    "lemma21_div_weyl_free",
    "schouten_div",
    "div_weyl",
    "commutation",
    "bochner",
    "eigen_identity",
];

pub fn verify_by_name(name: &str, chart: &MetricChart, points: &[Vec<f64>], tol: f64) -> Option<Result<IdentityReport, IdentityError>> {
    Some(match name {
        "lemma21_general" => verify_lemma21(chart, points, Lemma21Variant::General, tol),
        "lemma21_lcf" => verify_lemma21(chart, points, Lemma21Variant::Lcf, tol),
        "lemma21_div_weyl_free" => verify_lemma21(chart, points, Lemma21Variant::DivWeylFree, tol),
        "schouten_div" => verify_schouten_div(chart, points, tol),
        "div_weyl" => verify_div_weyl(chart, points, tol),
        "commutation" => verify_commutation(chart, points, tol),
        "bochner" => verify_bochner(chart, points, tol),
        "eigen_identity" => verify_eigen_identity(chart, points, tol),
        _ => return None,
    })
}

#[cfg(test)]
mod tests;
