//! Dense tensors at a point and the index algebra used on them.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Covariant,
    Contravariant,
}

/// Optional symmetry metadata checked by [`TensorValue::stamp`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Symmetries {
    pub symmetric: Vec<(usize, usize)>,
    pub antisymmetric: Vec<(usize, usize)>,
    pub pair_interchange: bool,
}

impl Symmetries {
    pub fn riemann() -> Self {
        Symmetries { symmetric: vec![], antisymmetric: vec![(0, 1), (2, 3)], pair_interchange: true }
    }

    pub fn symmetric2() -> Self {
        Symmetries { symmetric: vec![(0, 1)], ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TensorValue {
    pub dim: usize,
    pub variance: Vec<Variance>,
    /// Row-major components, `dim^rank` of them.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TensorError {
    #[error("slot {slot} out of range for rank {rank}")]
    SlotOutOfRange { slot: usize, rank: usize },
    #[error("slots must be distinct")]
    SameSlot,
    #[error("contracting two {0:?} slots needs a metric")]
    NeedsMetric(Variance),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (asymmetry {0:.3e})")]
    NotSymmetric(f64),
    #[error("tensor must be all-covariant")]
    NotCovariant,
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("symmetry violated: {0}")]
    Symmetry(String),
}

impl TensorValue {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        TensorValue { dim, variance: vec![Variance::Covariant; rank], data: vec![0.0; dim.pow(rank as u32)] }
    }

    pub fn scalar(v: f64) -> Self {
        TensorValue { dim: 1, variance: vec![], data: vec![v] }
    }

    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = TensorValue::zeros(dim, rank);
        let mut idx = vec![0usize; rank];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            increment(&mut idx, dim);
        }
        t
    }

    pub fn identity(dim: usize) -> Self {
        TensorValue::from_fn(dim, 2, |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    /// Row-major `dim x dim` matrix as a covariant 2-tensor.
    pub fn from_matrix(dim: usize, m: &[f64]) -> Self {
        assert_eq!(m.len(), dim * dim);
        TensorValue { dim, variance: vec![Variance::Covariant; 2], data: m.to_vec() }
    }

    pub fn with_variance(mut self, v: Vec<Variance>) -> Self {
        assert_eq!(v.len(), self.variance.len());
        self.variance = v;
        self
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, o: &TensorValue) -> TensorValue {
        let mut t = self.clone();
        for (a, b) in t.data.iter_mut().zip(&o.data) {
            *a += b;
        }
        t
    }

    pub fn sub(&self, o: &TensorValue) -> TensorValue {
        let mut t = self.clone();
        for (a, b) in t.data.iter_mut().zip(&o.data) {
            *a -= b;
        }
        t
    }

    pub fn scaled(&self, c: f64) -> TensorValue {
        let mut t = self.clone();
        t.data.iter_mut().for_each(|v| *v *= c);
        t
    }

    /// Apply a 2-tensor `m` to one slot: out[.. a ..] = sum_b m[a][b] t[.. b ..].
    fn transform_slot(&self, slot: usize, m: &TensorValue, v: Variance) -> TensorValue {
        let n = self.dim;
        let rank = self.rank();
        let stride = n.pow((rank - 1 - slot) as u32);
        let mut out = self.clone();
        out.variance[slot] = v;
        for (k, o) in out.data.iter_mut().enumerate() {
            let a = (k / stride) % n;
            let base = k - a * stride;
            let mut s = 0.0;
            for b in 0..n {
                s += m.data[a * n + b] * self.data[base + b * stride];
            }
            *o = s;
        }
        out
    }

    /// Raise one covariant slot with the inverse metric.
    pub fn raise(&self, slot: usize, inverse_metric: &TensorValue) -> Result<TensorValue, TensorError> {
        self.check_slot(slot)?;
        Ok(self.transform_slot(slot, inverse_metric, Variance::Contravariant))
    }

    /// Lower one contravariant slot with the metric.
    pub fn lower(&self, slot: usize, metric: &TensorValue) -> Result<TensorValue, TensorError> {
        self.check_slot(slot)?;
        Ok(self.transform_slot(slot, metric, Variance::Covariant))
    }

    fn check_slot(&self, slot: usize) -> Result<(), TensorError> {
        if slot >= self.rank() {
            return Err(TensorError::SlotOutOfRange { slot, rank: self.rank() });
        }
        Ok(())
    }

    /// Trace over two slots of opposite variance (no metric involved).
    fn trace(&self, a: usize, b: usize) -> TensorValue {
        let n = self.dim;
        let rank = self.rank();
        let keep: Vec<usize> = (0..rank).filter(|&s| s != a && s != b).collect();
        let mut out = TensorValue::zeros(n, rank - 2);
        out.variance = keep.iter().map(|&s| self.variance[s]).collect();
        let mut full = vec![0usize; rank];
        let mut idx = vec![0usize; rank - 2];
        for k in 0..out.data.len() {
            for (p, &s) in keep.iter().enumerate() {
                full[s] = idx[p];
            }
            let mut s = 0.0;
            for i in 0..n {
                full[a] = i;
                full[b] = i;
                s += self.get(&full);
            }
            out.data[k] = s;
            increment(&mut idx, n);
        }
        out
    }
}

fn increment(idx: &mut [usize], n: usize) {
    for d in (0..idx.len()).rev() {
        idx[d] += 1;
        if idx[d] < n {
            return;
        }
        idx[d] = 0;
    }
}

/// Contract two slots. Same-variance slots are contracted through the
/// inverse metric (covariant) or the metric (contravariant).
pub fn contract(
    t: &TensorValue,
    slot_a: usize,
    slot_b: usize,
    metric: Option<&TensorValue>,
    inverse_metric: Option<&TensorValue>,
) -> Result<TensorValue, TensorError> {
    t.check_slot(slot_a)?;
    t.check_slot(slot_b)?;
    if slot_a == slot_b {
        return Err(TensorError::SameSlot);
    }
    let va = t.variance[slot_a];
    let vb = t.variance[slot_b];
    if va != vb {
        return Ok(t.trace(slot_a, slot_b));
    }
    let raised = match va {
        Variance::Covariant => {
            let ginv = inverse_metric.ok_or(TensorError::NeedsMetric(va))?;
            check_dims(t, ginv)?;
            t.raise(slot_a, ginv)?
        }
        Variance::Contravariant => {
            let g = metric.ok_or(TensorError::NeedsMetric(va))?;
            check_dims(t, g)?;
            t.lower(slot_a, g)?
        }
    };
    Ok(raised.trace(slot_a, slot_b))
}

fn check_dims(a: &TensorValue, b: &TensorValue) -> Result<(), TensorError> {
    if a.dim != b.dim {
        return Err(TensorError::DimensionMismatch(a.dim, b.dim));
    }
    Ok(())
}

/// Kulkarni–Nomizu product of two symmetric 2-tensors:
/// (a⊙b)_ijkl = a_ik b_jl + a_jl b_ik − a_il b_jk − a_jk b_il.
pub fn kulkarni_nomizu(a: &TensorValue, b: &TensorValue) -> Result<TensorValue, TensorError> {
    check_dims(a, b)?;
    for t in [a, b] {
        if t.rank() != 2 {
            return Err(TensorError::RankMismatch { expected: 2, got: t.rank() });
        }
    }
    let n = a.dim;
    let m = |t: &TensorValue, i: usize, j: usize| t.data[i * n + j];
    Ok(TensorValue::from_fn(n, 4, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        m(a, i, k) * m(b, j, l) + m(a, j, l) * m(b, i, k) - m(a, i, l) * m(b, j, k) - m(a, j, k) * m(b, i, l)
    }))
}

/// Squared norm of an all-covariant tensor, every slot contracted through
/// the inverse metric.
pub fn tensor_norm(t: &TensorValue, metric: &TensorValue, inverse_metric: &TensorValue) -> Result<f64, TensorError> {
    check_dims(t, metric)?;
    check_dims(t, inverse_metric)?;
    if t.variance.iter().any(|v| *v != Variance::Covariant) {
        return Err(TensorError::NotCovariant);
    }
    let mut up = t.clone();
    for s in 0..t.rank() {
        up = up.raise(s, inverse_metric)?;
    }
    Ok(up.data.iter().zip(&t.data).map(|(a, b)| a * b).sum())
}

/// Full contraction ⟨a, b⟩ of two all-covariant tensors of equal rank.
pub fn inner(a: &TensorValue, b: &TensorValue, inverse_metric: &TensorValue) -> f64 {
    let mut up = a.clone();
    for s in 0..a.rank() {
        up = up.transform_slot(s, inverse_metric, Variance::Contravariant);
    }
    up.data.iter().zip(&b.data).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigenData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Row-major; column k is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Vec<f64>,
    pub dim: usize,
}

impl EigenData {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.eigenvectors[i * self.dim + k]).collect()
    }
}

const JACOBI_THRESHOLD: f64 = 1e-12;
const JACOBI_SWEEPS: usize = 50;
const SYMMETRY_TOL: f64 = 1e-8;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(s: &TensorValue) -> Result<EigenData, TensorError> {
    if s.rank() != 2 {
        return Err(TensorError::RankMismatch { expected: 2, got: s.rank() });
    }
    let n = s.dim;
    let scale = s.max_abs().max(1e-300);
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((s.data[i * n + j] - s.data[j * n + i]).abs());
        }
    }
    if asym > SYMMETRY_TOL * scale.max(1.0) {
        return Err(TensorError::NotSymmetric(asym));
    }
    let mut a: Vec<f64> = (0..n * n)
        .map(|k| 0.5 * (s.data[k] + s.data[(k % n) * n + k / n]))
        .collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    for _ in 0..JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_THRESHOLD * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - sn * akq;
                    a[k * n + q] = sn * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - sn * aqk;
                    a[q * n + k] = sn * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[x * n + x].total_cmp(&a[y * n + y]));
    let eigenvalues = order.iter().map(|&k| a[k * n + k]).collect();
    let mut eigenvectors = vec![0.0; n * n];
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            eigenvectors[i * n + col] = v[i * n + k];
        }
    }
    Ok(EigenData { eigenvalues, eigenvectors, dim: n })
}

/// Generalised eigenvalues of `h v = κ g v` for symmetric `h` and positive
/// definite `g`, via Cholesky congruence.
pub fn generalized_eigenvalues(h: &TensorValue, g: &TensorValue) -> Result<EigenData, TensorError> {
    let n = g.dim;
    let l = cholesky(&g.data, n).ok_or(TensorError::Singular)?;
    let linv = lower_inverse(&l, n);
    // C = L^-1 h L^-T
    let mut tmp = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            tmp[i * n + j] = (0..n).map(|k| linv[i * n + k] * h.data[k * n + j]).sum();
        }
    }
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            c[i * n + j] = (0..n).map(|k| tmp[i * n + k] * linv[j * n + k]).sum();
        }
    }
    sym_eigen(&TensorValue::from_matrix(n, &c))
}

/// Lower-triangular Cholesky factor, row-major.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let d = a[i * n + i] - s;
                if d <= 0.0 || !d.is_finite() {
                    return None;
                }
                l[i * n + i] = d.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - s) / l[j * n + j];
            }
        }
    }
    Some(l)
}

pub fn lower_inverse(l: &[f64], n: usize) -> Vec<f64> {
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        for i in 0..n {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (0..i).map(|k| l[i * n + k] * inv[k * n + col]).sum();
            inv[i * n + col] = (rhs - s) / l[i * n + i];
        }
    }
    inv
}

/// Inverse by Gauss–Jordan with partial pivoting.
pub fn invert(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut m = a.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x * n + col].abs().total_cmp(&m[y * n + col].abs()))?;
        if m[piv * n + col].abs() < 1e-300 {
            return None;
        }
        for k in 0..n {
            m.swap(col * n + k, piv * n + k);
            inv.swap(col * n + k, piv * n + k);
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        m[r * n + k] -= f * m[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

impl TensorValue {
    /// Verify declared symmetries to `tol` relative to the largest component.
    pub fn stamp(&self, sym: &Symmetries, tol: f64) -> Result<(), TensorError> {
        let scale = self.max_abs().max(1.0);
        let rank = self.rank();
        let mut idx = vec![0usize; rank];
        for k in 0..self.data.len() {
            let v = self.data[k];
            let check = |w: f64, sign: f64, what: &str| -> Result<(), TensorError> {
                if (v - sign * w).abs() > tol * scale {
                    return Err(TensorError::Symmetry(format!("{what} at {idx:?}")));
                }
                Ok(())
            };
            for &(a, b) in &sym.symmetric {
                let mut j = idx.clone();
                j.swap(a, b);
                check(self.get(&j), 1.0, "symmetric pair")?;
            }
            for &(a, b) in &sym.antisymmetric {
                let mut j = idx.clone();
                j.swap(a, b);
                check(self.get(&j), -1.0, "antisymmetric pair")?;
            }
            if sym.pair_interchange && rank == 4 {
                let j = [idx[2], idx[3], idx[0], idx[1]];
                check(self.get(&j), 1.0, "pair interchange")?;
            }
            increment(&mut idx, self.dim);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contract_delta_delta_over_middle_slots() {
        let n = 4;
        let g = TensorValue::identity(n);
        let gg = TensorValue::from_fn(n, 4, |i| g.get(&i[0..2]) * g.get(&i[2..4]));
        let c = contract(&gg, 1, 2, Some(&g), Some(&g)).unwrap();
        assert_eq!(c, TensorValue::identity(n));
    }

    #[test]
    fn contract_errors() {
        let t = TensorValue::zeros(3, 2);
        assert!(matches!(contract(&t, 0, 2, None, None), Err(TensorError::SlotOutOfRange { .. })));
        assert!(matches!(contract(&t, 0, 0, None, None), Err(TensorError::SameSlot)));
        assert!(matches!(contract(&t, 0, 1, None, None), Err(TensorError::NeedsMetric(_))));
        let mixed = t.clone().with_variance(vec![Variance::Covariant, Variance::Contravariant]);
        assert!(contract(&mixed, 0, 1, None, None).is_ok());
    }

    #[test]
    fn kn_half_g_gives_unit_curvature_pattern() {
        let g = TensorValue::identity(3);
        let r = kulkarni_nomizu(&g.scaled(0.5), &g).unwrap();
        assert_eq!(r.get(&[0, 1, 0, 1]), 1.0);
        assert_eq!(r.get(&[0, 1, 1, 0]), -1.0);
        r.stamp(&Symmetries::riemann(), 1e-12).unwrap();
        let z = kulkarni_nomizu(&TensorValue::zeros(3, 2), &g).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&TensorValue::identity(5)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 5]);
        let d = TensorValue::from_matrix(3, &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let e = sym_eigen(&d).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let m = TensorValue::from_matrix(2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(sym_eigen(&m), Err(TensorError::NotSymmetric(_))));
    }

    #[test]
    fn norm_of_metric_is_dimension() {
        let g = TensorValue::from_matrix(2, &[2.0, 0.5, 0.5, 1.0]);
        let ginv = TensorValue::from_matrix(2, &invert(&g.data, 2).unwrap());
        assert!((tensor_norm(&g, &g, &ginv).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(tensor_norm(&TensorValue::zeros(2, 3), &g, &ginv).unwrap(), 0.0);
    }

    #[test]
    fn generalized_eigen_of_scaled_metric() {
        let g = TensorValue::from_matrix(2, &[4.0, 1.0, 1.0, 3.0]);
        let e = generalized_eigenvalues(&g.scaled(0.5), &g).unwrap();
        for k in e.eigenvalues {
            assert!((k - 0.5).abs() < 1e-12);
        }
    }
}
