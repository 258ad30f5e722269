//! Symbolic tensor fields over a chart.

use std::collections::HashMap;
use std::sync::OnceLock;

use crate::expr::{simplify_expr, Differentiator, Expr, ParamValues, Tape};
use crate::tensor::TensorValue;

use super::{GeometryError, MetricChart};

/// A tensor field whose components are expressions, row-major by slot.
#[derive(Clone, Debug)]
pub struct SymTensor {
    pub dim: usize,
    pub rank: usize,
    pub comps: Vec<Expr>,
}

impl SymTensor {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        SymTensor { dim, rank, comps: vec![Expr::zero(); dim.pow(rank as u32)] }
    }

    pub fn scalar(e: Expr, dim: usize) -> Self {
        SymTensor { dim, rank: 0, comps: vec![e] }
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.comps[idx.iter().fold(0, |a, &i| a * self.dim + i)]
    }

    pub fn eval(&self, point: &[f64]) -> Result<TensorValue, GeometryError> {
        let tape = Tape::compile(&self.comps, point.len())?;
        let data = tape.eval(point, &ParamValues::new())?;
        Ok(TensorValue { dim: self.dim, variance: vec![crate::tensor::Variance::Covariant; self.rank], data })
    }
}

/// Symbolic Γ, Ricci and scalar curvature of a chart. Riemann is built on
/// first use.
pub struct SymbolicGeometry {
    n: usize,
    metric: Vec<Expr>,
    pub inverse_metric: Vec<Expr>,
    /// `Γ^k_ij` stored `[k][i][j]`.
    pub gamma: SymTensor,
    pub ricci: SymTensor,
    pub scalar: Expr,
    riemann: OnceLock<SymTensor>,
}

impl SymbolicGeometry {
    pub(crate) fn build(chart: &MetricChart) -> Result<SymbolicGeometry, GeometryError> {
        let n = chart.dim();
        let g = chart.metric.clone();
        let (det, cof) = cofactors(&g, n);
        if det.is_zero() {
            return Err(GeometryError::SingularMetric);
        }
        let inv_det = det.powi(-1);
        let mut ginv = vec![Expr::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let e = simplify_expr(&cof[j * n + i].mul(&inv_det));
                ginv[i * n + j] = e.clone();
                ginv[j * n + i] = e;
            }
        }

        let mut d = Differentiator::new();
        // dg[k][i][j] = ∂_k g_ij
        let mut dg = vec![Expr::zero(); n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    dg[(k * n + i) * n + j] = d.d(&g[i * n + j], k);
                }
            }
        }
        let dgk = |k: usize, i: usize, j: usize| &dg[(k * n + i) * n + j];
        let mut gamma = SymTensor::zeros(n, 3);
        for i in 0..n {
            for j in i..n {
                let first: Vec<Expr> = (0..n)
                    .map(|l| dgk(i, j, l).add(dgk(j, i, l)).sub(dgk(l, i, j)).scale_by((1, 2).into()))
                    .collect();
                for k in 0..n {
                    let e = Expr::sum((0..n).map(|l| ginv[k * n + l].mul(&first[l])));
                    gamma.comps[(k * n + i) * n + j] = e.clone();
                    gamma.comps[(k * n + j) * n + i] = e;
                }
            }
        }

        // Ric_σν = ∂_ρΓ^ρ_νσ − ∂_νΓ^ρ_ρσ + Γ^ρ_ρλΓ^λ_νσ − Γ^ρ_νλΓ^λ_ρσ
        let gm = |k: usize, i: usize, j: usize| &gamma.comps[(k * n + i) * n + j];
        let trace_gamma: Vec<Expr> = (0..n).map(|l| Expr::sum((0..n).map(|r| gm(r, r, l).clone()))).collect();
        let mut ricci = SymTensor::zeros(n, 2);
        for s in 0..n {
            for v in s..n {
                let mut terms = Vec::new();
                for r in 0..n {
                    terms.push(d.d(gm(r, v, s), r));
                }
                terms.push(d.d(&trace_gamma[s], v).neg());
                for l in 0..n {
                    terms.push(trace_gamma[l].mul(gm(l, v, s)));
                    for r in 0..n {
                        terms.push(gm(r, v, l).mul(gm(l, r, s)).neg());
                    }
                }
                let e = Expr::sum(terms);
                ricci.comps[s * n + v] = e.clone();
                ricci.comps[v * n + s] = e;
            }
        }
        let scalar = Expr::sum((0..n * n).map(|k| ginv[k].mul(&ricci.comps[k])));
        Ok(SymbolicGeometry { n, metric: g, inverse_metric: ginv, gamma, ricci, scalar, riemann: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn ginv(&self, i: usize, j: usize) -> &Expr {
        &self.inverse_metric[i * self.n + j]
    }

    /// All-covariant `R_ijkl`.
    pub fn riemann(&self) -> &SymTensor {
        self.riemann.get_or_init(|| {
            let n = self.n;
            let gm = |k: usize, i: usize, j: usize| &self.gamma.comps[(k * n + i) * n + j];
            let mut d = Differentiator::new();
            // R^ρ_σμν for μ < ν
            let mut up = vec![Expr::zero(); n * n * n * n];
            for r in 0..n {
                for s in 0..n {
                    for m in 0..n {
                        for v in m + 1..n {
                            let mut terms = vec![d.d(gm(r, v, s), m), d.d(gm(r, m, s), v).neg()];
                            for l in 0..n {
                                terms.push(gm(r, m, l).mul(gm(l, v, s)));
                                terms.push(gm(r, v, l).mul(gm(l, m, s)).neg());
                            }
                            let e = Expr::sum(terms);
                            up[((r * n + s) * n + v) * n + m] = e.neg();
                            up[((r * n + s) * n + m) * n + v] = e;
                        }
                    }
                }
            }
            let mut out = SymTensor::zeros(n, 4);
            for r in 0..n {
                for s in 0..n {
                    for m in 0..n {
                        for v in 0..n {
                            out.comps[((r * n + s) * n + m) * n + v] =
                                Expr::sum((0..n).map(|a| self.metric[r * n + a].mul(&up[((a * n + s) * n + m) * n + v])));
                        }
                    }
                }
            }
            out
        })
    }

    /// `Δf = g^{ij}(∂_i∂_j f − Γ^k_ij ∂_k f)`.
    pub fn laplacian_expr(&self, f: &Expr) -> Expr {
        let n = self.n;
        let mut d = Differentiator::new();
        let grad: Vec<Expr> = (0..n).map(|k| d.d(f, k)).collect();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let gij = self.ginv(i, j);
                if gij.is_zero() {
                    continue;
                }
                let hess = d.d(&grad[i], j);
                let corr = Expr::sum((0..n).map(|k| self.gamma.comps[(k * n + i) * n + j].mul(&grad[k])));
                terms.push(gij.mul(&hess.sub(&corr)));
            }
        }
        Expr::sum(terms)
    }
}

/// Determinant and cofactor matrix by Laplace expansion with memoized minors.
fn cofactors(g: &[Expr], n: usize) -> (Expr, Vec<Expr>) {
    let mut memo: HashMap<(u32, u32), Expr> = HashMap::new();
    let all = (1u32 << n) - 1;
    let det = minor(g, n, all, all, &mut memo);
    let mut cof = vec![Expr::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            let m = minor(g, n, all & !(1 << i), all & !(1 << j), &mut memo);
            cof[i * n + j] = if (i + j) % 2 == 0 { m } else { m.neg() };
        }
    }
    (det, cof)
}

fn minor(g: &[Expr], n: usize, rows: u32, cols: u32, memo: &mut HashMap<(u32, u32), Expr>) -> Expr {
    if rows == 0 {
        return Expr::one();
    }
    if let Some(e) = memo.get(&(rows, cols)) {
        return e.clone();
    }
    let r = rows.trailing_zeros() as usize;
    let mut terms = Vec::new();
    let mut sign_pos = 0;
    for c in 0..n {
        if cols & (1 << c) == 0 {
            continue;
        }
        let entry = &g[r * n + c];
        if !entry.is_zero() {
            let sub = minor(g, n, rows & !(1 << r), cols & !(1 << c), memo);
            if !sub.is_zero() {
                let t = entry.mul(&sub);
                terms.push(if sign_pos % 2 == 0 { t } else { t.neg() });
            }
        }
        sign_pos += 1;
    }
    let e = Expr::sum(terms);
    memo.insert((rows, cols), e.clone());
    e
}

/// Covariant derivative of an all-covariant symbolic field; the new slot is
/// appended last.
pub fn covariant_derivative(chart: &MetricChart, field: &SymTensor) -> Result<SymTensor, GeometryError> {
    let n = chart.dim();
    if field.dim != n {
        return Err(GeometryError::InvalidChart(format!("field dimension {} on a chart of dimension {n}", field.dim)));
    }
    let sym = chart.symbolic()?;
    let gm = |k: usize, i: usize, j: usize| &sym.gamma.comps[(k * n + i) * n + j];
    let rank = field.rank;
    let mut d = Differentiator::new();
    let mut out = SymTensor::zeros(n, rank + 1);
    let mut idx = vec![0usize; rank];
    for o in 0..field.comps.len() {
        for k in 0..n {
            let mut terms = vec![d.d(&field.comps[o], k)];
            for s in 0..rank {
                let stride = n.pow((rank - 1 - s) as u32);
                let base = o - idx[s] * stride;
                for m in 0..n {
                    let c = gm(m, k, idx[s]);
                    if !c.is_zero() {
                        terms.push(c.mul(&field.comps[base + m * stride]).neg());
                    }
                }
            }
            out.comps[o * n + k] = Expr::sum(terms);
        }
        for s in (0..rank).rev() {
            idx[s] += 1;
            if idx[s] < n {
                break;
            }
            idx[s] = 0;
        }
    }
    Ok(out)
}

/// `Δf` at a point, by symbolic differentiation of `f`.
pub fn laplacian_scalar(chart: &MetricChart, f: &Expr, point: &[f64]) -> Result<f64, GeometryError> {
    chart.check_point(point)?;
    let f = f.bind_params(&chart.params);
    let lap = chart.symbolic()?.laplacian_expr(&f);
    Ok(crate::expr::eval_expr(&lap, point, &ParamValues::new())?)
}
