//! Curvature from the symbolic path, differentiated by Taylor-mode
//! evaluation of the symbolic expressions. Covariant derivatives here use
//! the symbolic Christoffel symbols and are written independently of the
//! bundle code.

use crate::expr::Expr;
use crate::geometry::{scalar_jets, GeometryError, MetricChart};
use crate::jet::{Jet, JetSpace};

pub(crate) struct SymSide<'a> {
    sp: &'a JetSpace,
    active: &'a [Option<usize>],
    pub n: usize,
    pub g: Vec<Jet>,
    pub ginv: Vec<Jet>,
    /// `Γ^k_ij` at `[k][i][j]`.
    pub gamma: Vec<Jet>,
    pub ric: Vec<Jet>,
    pub scalar: Jet,
    /// Empty unless requested.
    pub riem: Vec<Jet>,
}

impl<'a> SymSide<'a> {
    pub fn new(chart: &'a MetricChart, point: &[f64], order: usize, with_riemann: bool) -> Result<Self, GeometryError> {
        let n = chart.dim();
        let sym = chart.symbolic()?;
        let mut roots: Vec<Expr> = chart.metric.clone();
        roots.extend(sym.inverse_metric.iter().cloned());
        roots.extend(sym.gamma.comps.iter().cloned());
        roots.extend(sym.ricci.comps.iter().cloned());
        roots.push(sym.scalar.clone());
        if with_riemann {
            roots.extend(sym.riemann().comps.iter().cloned());
        }
        let (sp, mut jets) = scalar_jets(chart, &roots, point, order)?;
        let riem = if with_riemann { jets.split_off(2 * n * n + n * n * n + n * n + 1) } else { Vec::new() };
        let scalar = jets.pop().expect("scalar root");
        let ric = jets.split_off(2 * n * n + n * n * n);
        let gamma = jets.split_off(2 * n * n);
        let ginv = jets.split_off(n * n);
        Ok(SymSide { sp, active: chart.active_map(), n, g: jets, ginv, gamma, ric, scalar, riem })
    }

    pub fn space(&self) -> &JetSpace {
        self.sp
    }

    /// Partial derivative along chart coordinate `k`.
    pub fn d(&self, f: &Jet, k: usize) -> Jet {
        match self.active[k] {
            Some(v) => self.sp.deriv(f, v),
            None => {
                let mut z = self.sp.zero();
                z.order = f.order.saturating_sub(1);
                z
            }
        }
    }

    /// Covariant derivative of a covariant tensor stored row-major; the new
    /// index goes last.
    pub fn covd(&self, t: &[Jet], rank: usize) -> Vec<Jet> {
        let n = self.n;
        let sp = self.sp;
        let mut out = Vec::with_capacity(t.len() * n);
        let mut idx = vec![0usize; rank];
        for (o, comp) in t.iter().enumerate() {
            let mut rem = o;
            for s in (0..rank).rev() {
                idx[s] = rem % n;
                rem /= n;
            }
            for k in 0..n {
                let mut acc = self.d(comp, k);
                for s in 0..rank {
                    let stride = n.pow((rank - 1 - s) as u32);
                    let base = o - idx[s] * stride;
                    for m in 0..n {
                        let gam = &self.gamma[(m * n + k) * n + idx[s]];
                        let other = &t[base + m * stride];
                        sp.mul_acc(&mut acc, -1.0, gam, other);
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    /// Value of `g^{ij}(∂_i∂_j f − Γ^k_ij ∂_k f)`.
    pub fn laplacian(&self, f: &Jet) -> f64 {
        let n = self.n;
        let grad: Vec<Jet> = (0..n).map(|k| self.d(f, k)).collect();
        let mut out = 0.0;
        for i in 0..n {
            for j in 0..n {
                let gij = self.ginv[i * n + j].c[0];
                if gij == 0.0 {
                    continue;
                }
                let mut t = self.d(&grad[i], j).c[0];
                for k in 0..n {
                    t -= self.gamma[(k * n + i) * n + j].c[0] * grad[k].c[0];
                }
                out += gij * t;
            }
        }
        out
    }

    /// `Ric^i_j` as jets.
    pub fn ricci_mixed(&self) -> Vec<Jet> {
        let n = self.n;
        let mut m = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = self.sp.zero();
                for a in 0..n {
                    self.sp.mul_acc(&mut acc, 1.0, &self.ginv[i * n + a], &self.ric[a * n + j]);
                }
                m.push(acc);
            }
        }
        m
    }

    /// `|Ric|²` as a jet.
    pub fn ricci_norm_sq(&self) -> Jet {
        let n = self.n;
        let m = self.ricci_mixed();
        let mut acc = self.sp.zero();
        for i in 0..n {
            for j in 0..n {
                self.sp.mul_acc(&mut acc, 1.0, &m[i * n + j], &m[j * n + i]);
            }
        }
        acc
    }

    /// `|∇R|² = g^{ij} ∂_iR ∂_jR` as a jet.
    pub fn grad_scalar_sq(&self) -> Jet {
        let n = self.n;
        let grad: Vec<Jet> = (0..n).map(|k| self.d(&self.scalar, k)).collect();
        let mut acc = self.sp.zero();
        for i in 0..n {
            for j in 0..n {
                let mut t = self.sp.mul(&self.ginv[i * n + j], &grad[i]);
                t = self.sp.mul(&t, &grad[j]);
                self.sp.axpy(&mut acc, 1.0, &t);
            }
        }
        acc
    }

    /// Schouten tensor `(Ric − R g/(2(n−1)))/(n−2)`.
    pub fn schouten(&self) -> Vec<Jet> {
        let nf = self.n as f64;
        (0..self.n * self.n)
            .map(|k| {
                let rg = self.sp.mul(&self.scalar, &self.g[k]);
                let mut a = self.ric[k].clone();
                self.sp.axpy(&mut a, -1.0 / (2.0 * (nf - 1.0)), &rg);
                self.sp.scale(&a, 1.0 / (nf - 2.0))
            })
            .collect()
    }

    /// Weyl tensor `Riem − A⊙g`; needs the Riemann jets.
    pub fn weyl(&self) -> Vec<Jet> {
        let n = self.n;
        let a = self.schouten();
        let sp = self.sp;
        let mut w = Vec::with_capacity(n * n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut t = self.riem[((i * n + j) * n + k) * n + l].clone();
                        sp.mul_acc(&mut t, -1.0, &a[i * n + k], &self.g[j * n + l]);
                        sp.mul_acc(&mut t, -1.0, &a[j * n + l], &self.g[i * n + k]);
                        sp.mul_acc(&mut t, 1.0, &a[i * n + l], &self.g[j * n + k]);
                        sp.mul_acc(&mut t, 1.0, &a[j * n + k], &self.g[i * n + l]);
                        w.push(t);
                    }
                }
            }
        }
        w
    }
}
