//! Pointwise curvature from metric jets.

use serde::Serialize;

use crate::jet::{eval_tape_jets, Jet, JetSpace};
use crate::tensor::{invert, TensorValue, Variance};

use super::{GeometryError, MetricChart};

/// Metric jet order needed for every bundle field (∇Q and Bach).
pub const FULL_ORDER: usize = 5;

/// Dense tensor of jets, all slots covariant unless noted.
#[derive(Clone, Debug)]
pub struct JetTensor {
    pub dim: usize,
    pub rank: usize,
    pub comps: Vec<Jet>,
}

impl JetTensor {
    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[idx.iter().fold(0, |a, &i| a * self.dim + i)]
    }

    /// Point values.
    pub fn values(&self) -> TensorValue {
        TensorValue {
            dim: self.dim,
            variance: vec![Variance::Covariant; self.rank],
            data: self.comps.iter().map(|j| j.c[0]).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(|j| j.order).min().unwrap_or(0)
    }
}

/// Jets of the metric and its first curvature quantities at one point.
pub struct LocalJets<'a> {
    pub space: &'a JetSpace,
    active: &'a [Option<usize>],
    pub n: usize,
    pub g: JetTensor,
    pub ginv: JetTensor,
    /// `Γ^k_ij` stored `[k][i][j]`.
    pub gamma: JetTensor,
    gamma_nz: Vec<bool>,
    /// `R^ρ_σμν`.
    pub riemann_up: JetTensor,
    pub riemann: JetTensor,
    pub ricci: JetTensor,
    pub scalar: Jet,
}

impl<'a> LocalJets<'a> {
    pub fn compute(chart: &'a MetricChart, point: &[f64], order: usize) -> Result<LocalJets<'a>, GeometryError> {
        chart.check_point(point)?;
        if order < 2 {
            return Err(GeometryError::InvalidChart("curvature needs metric jets of order at least 2".into()));
        }
        let n = chart.dim();
        let space = chart.jet_space(order);
        let active = chart.active_map();
        let gj = eval_tape_jets(chart.metric_tape(), space, point, active, &[])?;
        let g = JetTensor { dim: n, rank: 2, comps: gj };

        // g⁻¹ = Σ_m (−G₀⁻¹H)^m G₀⁻¹ with H = g − g(p); H is nilpotent in jet order.
        let g0: Vec<f64> = g.comps.iter().map(|j| j.c[0]).collect();
        let g0inv = invert(&g0, n).ok_or(GeometryError::SingularMetric)?;
        let mut h = g.comps.clone();
        for j in &mut h {
            j.c[0] = 0.0;
        }
        let mut m = vec![space.zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    space.axpy(&mut m[i * n + j], -g0inv[i * n + k], &h[k * n + j]);
                }
            }
        }
        let mut term: Vec<Jet> = g0inv.iter().map(|&v| space.constant(v)).collect();
        let mut ginv = term.clone();
        for _ in 0..order {
            let mut next = vec![space.zero(); n * n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        space.mul_acc(&mut next[i * n + j], 1.0, &m[i * n + k], &term[k * n + j]);
                    }
                }
            }
            for (a, b) in ginv.iter_mut().zip(&next) {
                space.axpy(a, 1.0, b);
            }
            term = next;
        }
        let ginv = JetTensor { dim: n, rank: 2, comps: ginv };

        let mut lj = LocalJets {
            space,
            active,
            n,
            g,
            ginv,
            gamma: JetTensor { dim: n, rank: 3, comps: Vec::new() },
            gamma_nz: Vec::new(),
            riemann_up: JetTensor { dim: n, rank: 4, comps: Vec::new() },
            riemann: JetTensor { dim: n, rank: 4, comps: Vec::new() },
            ricci: JetTensor { dim: n, rank: 2, comps: Vec::new() },
            scalar: space.zero(),
        };

        // dg[k][i][j] = ∂_k g_ij
        let mut dg = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for ij in 0..n * n {
                dg.push(lj.d(&lj.g.comps[ij], k));
            }
        }
        let dgk = |k: usize, i: usize, j: usize| &dg[(k * n + i) * n + j];
        let mut gamma = vec![space.zero(); n * n * n];
        for i in 0..n {
            for j in i..n {
                let first: Vec<Jet> = (0..n)
                    .map(|l| {
                        let mut t = dgk(i, j, l).clone();
                        space.axpy(&mut t, 1.0, dgk(j, i, l));
                        space.axpy(&mut t, -1.0, dgk(l, i, j));
                        space.scale(&t, 0.5)
                    })
                    .collect();
                for k in 0..n {
                    let mut acc = space.zero();
                    for l in 0..n {
                        space.mul_acc(&mut acc, 1.0, &lj.ginv.comps[k * n + l], &first[l]);
                    }
                    gamma[(k * n + j) * n + i] = acc.clone();
                    gamma[(k * n + i) * n + j] = acc;
                }
            }
        }
        lj.gamma_nz = gamma.iter().map(|j| !space.is_zero(j)).collect();
        lj.gamma = JetTensor { dim: n, rank: 3, comps: gamma };

        let gm = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
        let mut up = vec![space.zero(); n * n * n * n];
        for r in 0..n {
            for s in 0..n {
                for mu in 0..n {
                    for nu in mu + 1..n {
                        let mut acc = lj.d(&lj.gamma.comps[gm(r, nu, s)], mu);
                        let t = lj.d(&lj.gamma.comps[gm(r, mu, s)], nu);
                        space.axpy(&mut acc, -1.0, &t);
                        for l in 0..n {
                            if lj.gamma_nz[gm(r, mu, l)] && lj.gamma_nz[gm(l, nu, s)] {
                                space.mul_acc(&mut acc, 1.0, &lj.gamma.comps[gm(r, mu, l)], &lj.gamma.comps[gm(l, nu, s)]);
                            }
                            if lj.gamma_nz[gm(r, nu, l)] && lj.gamma_nz[gm(l, mu, s)] {
                                space.mul_acc(&mut acc, -1.0, &lj.gamma.comps[gm(r, nu, l)], &lj.gamma.comps[gm(l, mu, s)]);
                            }
                        }
                        up[((r * n + s) * n + nu) * n + mu] = space.scale(&acc, -1.0);
                        up[((r * n + s) * n + mu) * n + nu] = acc;
                    }
                }
            }
        }
        // zero jets on the diagonal μ = ν must carry the right order
        let rorder = order - 2;
        for j in &mut up {
            j.order = j.order.min(rorder);
        }
        let mut low = vec![space.zero(); n * n * n * n];
        for r in 0..n {
            for rest in 0..n * n * n {
                let mut acc = space.zero();
                acc.order = rorder;
                for a in 0..n {
                    space.mul_acc(&mut acc, 1.0, &lj.g.comps[r * n + a], &up[a * n * n * n + rest]);
                }
                low[r * n * n * n + rest] = acc;
            }
        }
        let mut ricci = vec![space.zero(); n * n];
        for s in 0..n {
            for v in 0..n {
                let mut acc = space.zero();
                acc.order = rorder;
                for r in 0..n {
                    space.axpy(&mut acc, 1.0, &up[((r * n + s) * n + r) * n + v]);
                }
                ricci[s * n + v] = acc;
            }
        }
        let mut scalar = space.zero();
        scalar.order = rorder;
        for k in 0..n * n {
            space.mul_acc(&mut scalar, 1.0, &lj.ginv.comps[k], &ricci[k]);
        }
        lj.riemann_up = JetTensor { dim: n, rank: 4, comps: up };
        lj.riemann = JetTensor { dim: n, rank: 4, comps: low };
        lj.ricci = JetTensor { dim: n, rank: 2, comps: ricci };
        lj.scalar = scalar;
        Ok(lj)
    }

    /// Partial derivative along chart coordinate `k`.
    pub fn d(&self, f: &Jet, k: usize) -> Jet {
        match self.active[k] {
            Some(v) => self.space.deriv(f, v),
            None => {
                let mut z = self.space.zero();
                z.order = f.order - 1;
                z
            }
        }
    }

    pub fn gradient(&self, f: &Jet) -> JetTensor {
        JetTensor { dim: self.n, rank: 1, comps: (0..self.n).map(|k| self.d(f, k)).collect() }
    }

    /// Covariant derivative of an all-covariant jet tensor; new slot last.
    pub fn cov(&self, t: &JetTensor) -> JetTensor {
        let n = self.n;
        let rank = t.rank;
        let space = self.space;
        let mut out = Vec::with_capacity(t.comps.len() * n);
        let mut idx = vec![0usize; rank];
        for o in 0..t.comps.len() {
            for k in 0..n {
                let mut acc = self.d(&t.comps[o], k);
                for s in 0..rank {
                    let stride = n.pow((rank - 1 - s) as u32);
                    let base = o - idx[s] * stride;
                    for m in 0..n {
                        let gi = (m * n + k) * n + idx[s];
                        if self.gamma_nz[gi] {
                            space.mul_acc(&mut acc, -1.0, &self.gamma.comps[gi], &t.comps[base + m * stride]);
                        }
                    }
                }
                out.push(acc);
            }
            for s in (0..rank).rev() {
                idx[s] += 1;
                if idx[s] < n {
                    break;
                }
                idx[s] = 0;
            }
        }
        JetTensor { dim: n, rank: rank + 1, comps: out }
    }

    /// Contract slots `a < b` through the inverse metric.
    pub fn trace(&self, t: &JetTensor, a: usize, b: usize) -> JetTensor {
        assert!(a < b && b < t.rank);
        let n = self.n;
        let rank = t.rank;
        let out_len = n.pow((rank - 2) as u32);
        let sa = n.pow((rank - 1 - a) as u32);
        let sb = n.pow((rank - 1 - b) as u32);
        let t_order = t.order();
        let mut out = Vec::with_capacity(out_len);
        let mut idx = vec![0usize; rank - 2];
        for _ in 0..out_len {
            // offset with slots a, b set to zero
            let mut full = Vec::with_capacity(rank);
            let mut it = idx.iter();
            for s in 0..rank {
                full.push(if s == a || s == b { 0 } else { *it.next().expect("index") });
            }
            let base = full.iter().fold(0, |acc, &i| acc * n + i);
            let mut acc = self.space.zero();
            acc.order = t_order;
            for p in 0..n {
                for q in 0..n {
                    let w = &self.ginv.comps[p * n + q];
                    space_mul(self.space, &mut acc, w, &t.comps[base + p * sa + q * sb]);
                }
            }
            out.push(acc);
            for s in (0..rank - 2).rev() {
                idx[s] += 1;
                if idx[s] < n {
                    break;
                }
                idx[s] = 0;
            }
        }
        JetTensor { dim: n, rank: rank - 2, comps: out }
    }

    /// `Δf = g^{ij} ∇_i∇_j f`.
    pub fn laplacian(&self, f: &Jet) -> Jet {
        let h = self.cov(&self.gradient(f));
        self.trace(&h, 0, 1).comps.pop().expect("scalar")
    }

    /// `g^{ac} g^{bd} t_ab s_cd` for 2-tensors.
    pub fn inner2(&self, t: &JetTensor, s: &JetTensor) -> Jet {
        let up = self.raise2(t);
        let mut acc = self.space.zero();
        acc.order = up.order().min(s.order());
        for k in 0..self.n * self.n {
            self.space.mul_acc(&mut acc, 1.0, &up.comps[k], &s.comps[k]);
        }
        acc
    }

    /// Both slots of a 2-tensor raised.
    pub fn raise2(&self, t: &JetTensor) -> JetTensor {
        let n = self.n;
        let sp = self.space;
        let t_order = t.order();
        let mut half = vec![sp.zero(); n * n];
        for a in 0..n {
            for d in 0..n {
                let acc = &mut half[a * n + d];
                acc.order = t_order;
                for b in 0..n {
                    space_mul(sp, acc, &self.ginv.comps[d * n + b], &t.comps[a * n + b]);
                }
            }
        }
        let mut out = vec![sp.zero(); n * n];
        for c in 0..n {
            for d in 0..n {
                let acc = &mut out[c * n + d];
                acc.order = t_order;
                for a in 0..n {
                    space_mul(sp, acc, &self.ginv.comps[c * n + a], &half[a * n + d]);
                }
            }
        }
        JetTensor { dim: n, rank: 2, comps: out }
    }
}

fn space_mul(sp: &JetSpace, acc: &mut Jet, a: &Jet, b: &Jet) {
    sp.mul_acc(acc, 1.0, a, b);
}

/// Curvature quantities at a point. Fields needing more metric derivatives
/// than were propagated are `None`.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureBundle {
    pub point: Vec<f64>,
    pub dim: usize,
    /// Metric jet order the bundle was computed from.
    pub order: usize,
    pub metric: TensorValue,
    pub inverse_metric: TensorValue,
    /// `Γ^k_ij` stored `[k][i][j]`.
    pub gamma: TensorValue,
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
    pub ricci_norm_sq: f64,
    pub traceless_ricci: TensorValue,
    /// Undefined in dimension 2.
    pub schouten: Option<TensorValue>,
    pub weyl: TensorValue,
    pub grad_r: Option<TensorValue>,
    /// `R_ij,k`, derivative slot last.
    pub nabla_ricci: Option<TensorValue>,
    /// `W_ijkl,l`.
    pub div_weyl: Option<TensorValue>,
    pub hess_r: Option<TensorValue>,
    pub lap_r: Option<f64>,
    /// `R_ij,kl`.
    pub nabla2_ricci: Option<TensorValue>,
    /// `W_ikjl,lk`.
    pub div2_weyl: Option<TensorValue>,
    pub bach: Option<TensorValue>,
    /// Why Bach is missing when the order sufficed.
    pub bach_absent_reason: Option<String>,
    pub q: Option<f64>,
    pub grad_q: Option<TensorValue>,
    pub grad_lap_r: Option<TensorValue>,
}

/// Q-curvature coefficients `(a, b, c)` in `Q = −aΔR − b|Ric|² + cR²`.
pub fn q_coefficients(n: usize) -> (f64, f64, f64) {
    let n = n as f64;
    let a = 1.0 / (2.0 * (n - 1.0));
    let b = 2.0 / ((n - 2.0) * (n - 2.0));
    let c = (n * n * n - 4.0 * n * n + 16.0 * n - 16.0) / (8.0 * (n - 1.0).powi(2) * (n - 2.0).powi(2));
    (a, b, c)
}

impl CurvatureBundle {
    pub fn compute(chart: &MetricChart, point: &[f64], order: usize) -> Result<CurvatureBundle, GeometryError> {
        let lj = LocalJets::compute(chart, point, order)?;
        Ok(CurvatureBundle::from_jets(&lj, point))
    }

    pub fn from_jets(lj: &LocalJets<'_>, point: &[f64]) -> CurvatureBundle {
        let n = lj.n;
        let nf = n as f64;
        let sp = lj.space;
        let order = lj.g.order();
        let g = lj.g.values();
        let ginv = lj.ginv.values();
        let ricci = lj.ricci.values();
        let scalar = lj.scalar.c[0];
        let traceless = ricci.sub(&g.scaled(scalar / nf));

        // Schouten and Weyl as jets, so that their derivatives are exact.
        let schouten_jets = (n > 2).then(|| {
            let mut comps = Vec::with_capacity(n * n);
            for k in 0..n * n {
                let mut a = lj.ricci.comps[k].clone();
                let mut rg = sp.mul(&lj.scalar, &lj.g.comps[k]);
                rg = sp.scale(&rg, -1.0 / (2.0 * (nf - 1.0)));
                sp.axpy(&mut a, 1.0, &rg);
                comps.push(sp.scale(&a, 1.0 / (nf - 2.0)));
            }
            JetTensor { dim: n, rank: 2, comps }
        });
        let weyl_jets = match (&schouten_jets, n) {
            (Some(a), 4..) => {
                let mut comps = Vec::with_capacity(n.pow(4));
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                let mut w = lj.riemann.get(&[i, j, k, l]).clone();
                                let gg = |x: usize, y: usize| &lj.g.comps[x * n + y];
                                let aa = |x: usize, y: usize| &a.comps[x * n + y];
                                sp.mul_acc(&mut w, -1.0, aa(i, k), gg(j, l));
                                sp.mul_acc(&mut w, -1.0, aa(j, l), gg(i, k));
                                sp.mul_acc(&mut w, 1.0, aa(i, l), gg(j, k));
                                sp.mul_acc(&mut w, 1.0, aa(j, k), gg(i, l));
                                comps.push(w);
                            }
                        }
                    }
                }
                Some(JetTensor { dim: n, rank: 4, comps })
            }
            _ => None,
        };
        let weyl = match &weyl_jets {
            Some(w) => w.values(),
            None => TensorValue::zeros(n, 4),
        };
        let schouten = schouten_jets.as_ref().map(|a| a.values());

        let ricci_norm_sq_jet = lj.inner2(&lj.ricci, &lj.ricci);
        let ricci_up = lj.raise2(&lj.ricci);

        let mut b = CurvatureBundle {
            point: point.to_vec(),
            dim: n,
            order,
            metric: g,
            inverse_metric: ginv,
            gamma: lj.gamma.values(),
            riemann: lj.riemann.values(),
            ricci,
            scalar,
            ricci_norm_sq: ricci_norm_sq_jet.c[0],
            traceless_ricci: traceless,
            schouten,
            weyl,
            grad_r: None,
            nabla_ricci: None,
            div_weyl: None,
            hess_r: None,
            lap_r: None,
            nabla2_ricci: None,
            div2_weyl: None,
            bach: None,
            bach_absent_reason: None,
            q: None,
            grad_q: None,
            grad_lap_r: None,
        };
        if order < 3 {
            return b;
        }
        let grad_r = lj.gradient(&lj.scalar);
        b.grad_r = Some(grad_r.values());
        let nabla_ricci = lj.cov(&lj.ricci);
        b.nabla_ricci = Some(nabla_ricci.values());
        let div_weyl = weyl_jets.as_ref().map(|w| lj.trace(&lj.cov(w), 3, 4));
        b.div_weyl = Some(match &div_weyl {
            Some(d) => d.values(),
            None => TensorValue::zeros(n, 3),
        });
        if order < 4 {
            return b;
        }
        let hess = lj.cov(&grad_r);
        let lap = lj.trace(&hess, 0, 1).comps.pop().expect("scalar");
        b.hess_r = Some(hess.values());
        b.lap_r = Some(lap.c[0]);
        b.nabla2_ricci = Some(lj.cov(&nabla_ricci).values());
        let q_jet = (n >= 3).then(|| {
            let (qa, qb, qc) = q_coefficients(n);
            let mut q = sp.scale(&lap, -qa);
            sp.axpy(&mut q, -qb, &ricci_norm_sq_jet);
            sp.mul_acc(&mut q, qc, &lj.scalar, &lj.scalar);
            q
        });
        b.q = q_jet.as_ref().map(|q| q.c[0]);
        match &div_weyl {
            Some(dw) => {
                // δ²W_ij = g^{kp} ∇_p δW_ikj
                let d2 = lj.trace(&lj.cov(dw), 1, 3).values();
                let w = &b.weyl;
                let mut bach = TensorValue::zeros(n, 2);
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            for l in 0..n {
                                s += ricci_up.comps[k * n + l].c[0] * w.get(&[i, k, j, l]);
                            }
                        }
                        bach.set(&[i, j], d2.get(&[i, j]) / (nf - 3.0) + s / (nf - 2.0));
                    }
                }
                b.div2_weyl = Some(d2);
                b.bach = Some(bach);
            }
            None => {
                b.div2_weyl = Some(TensorValue::zeros(n, 2));
                b.bach_absent_reason = Some(format!("Bach tensor needs dimension at least 4, chart has {n}"));
            }
        }
        if order < 5 {
            return b;
        }
        b.grad_lap_r = Some(lj.gradient(&lap).values());
        b.grad_q = q_jet.map(|q| lj.gradient(&q).values());
        b
    }
}

/// Jets of scalar fields on the chart's jet space. The fields may only
/// depend on coordinates the metric depends on, and must carry no
/// parameters; fields derived from the symbolic geometry satisfy both.
pub fn scalar_jets<'a>(
    chart: &'a MetricChart,
    exprs: &[crate::expr::Expr],
    point: &[f64],
    order: usize,
) -> Result<(&'a JetSpace, Vec<Jet>), GeometryError> {
    for e in exprs {
        if let Some(p) = e.params().first() {
            return Err(crate::expr::ExprError::UnboundParam(p.to_string()).into());
        }
        if (0..chart.dim()).any(|i| e.depends_on(i) && chart.active_map()[i].is_none()) {
            return Err(GeometryError::InvalidChart("scalar field depends on a coordinate the metric does not".into()));
        }
    }
    chart.check_point(point)?;
    let space = chart.jet_space(order);
    let tape = crate::expr::Tape::compile(exprs, chart.dim())?;
    let jets = eval_tape_jets(&tape, space, point, chart.active_map(), &[])?;
    Ok((space, jets))
}
