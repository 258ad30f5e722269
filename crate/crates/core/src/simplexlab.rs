//! The simplex inequality `n Σx³ + 1/(n−1) ≥ (2n−1)/(n−1) Σx²`, its
//! critical points, and the dimension constants of the rigidity argument.

use serde::Serialize;

use crate::expr::Rational;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SimplexError {
    #[error("dimension {got} outside {lo}..={hi}")]
    Dimension { got: usize, lo: usize, hi: usize },
    #[error("grid depth {0} below 20")]
    Depth(usize),
    #[error("not a simplex point: {0}")]
    NotOnSimplex(String),
}

fn ser_q<S: serde::Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn q(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn qi(n: usize) -> Rational {
    Rational::from_integer(n as i128)
}

pub fn to_f64(x: &Rational) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// The constants of the rigidity argument as exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionConstants {
    pub n: usize,
    #[serde(serialize_with = "ser_q")]
    pub a: Rational,
    #[serde(serialize_with = "ser_q")]
    pub b: Rational,
    #[serde(serialize_with = "ser_q")]
    pub c: Rational,
    #[serde(serialize_with = "ser_q")]
    pub d: Rational,
    #[serde(serialize_with = "ser_q")]
    pub l: Rational,
    #[serde(serialize_with = "ser_q")]
    pub beta: Rational,
}

pub fn dimension_constants(n: usize) -> Result<DimensionConstants, SimplexError> {
    if n < 3 || n > 1000 {
        return Err(SimplexError::Dimension { got: n, lo: 3, hi: 1000 });
    }
    let m = n as i128;
    let cubic = m * m * m - 6 * m * m + 16 * m - 8;
    Ok(DimensionConstants {
        n,
        a: q(1, 2 * (m - 1)),
        b: q(2, (m - 2) * (m - 2)),
        c: q(m * m * m - 4 * m * m + 16 * m - 16, 8 * (m - 1) * (m - 1) * (m - 2) * (m - 2)),
        d: q((m - 2) * cubic, 64 * m * (m - 1) * (m - 1)),
        l: q(cubic, 4 * m * (m - 1) * (m - 1) * (m - 2)),
        beta: q(2 * (2 * m - 1), 3 * m * (m - 1)),
    })
}

impl DimensionConstants {
    /// `((n+2)/(2(n−1)) − 2/n) b − 2c`, which should equal `−l`.
    pub fn l_combination(&self) -> Rational {
        let n = self.n as i128;
        (q(n + 2, 2 * (n - 1)) - q(2, n)) * self.b - self.c * 2
    }

    /// `(n−2)/(n−1) b − n/(n−1) a`, negative for n ≥ 6.
    pub fn gradient_coefficient(&self) -> Rational {
        let n = self.n as i128;
        q(n - 2, n - 1) * self.b - q(n, n - 1) * self.a
    }

    /// Closed form of [`Self::gradient_coefficient`]: `(−n²+6n−4)/(2(n−1)²(n−2))`.
    pub fn gradient_coefficient_closed(&self) -> Rational {
        let n = self.n as i128;
        q(-n * n + 6 * n - 4, 2 * (n - 1) * (n - 1) * (n - 2))
    }

    /// The exact consistency identities; all must hold.
    pub fn consistent(&self) -> bool {
        self.l_combination() == -self.l
            && self.gradient_coefficient() == self.gradient_coefficient_closed()
            && self.l > Rational::from_integer(0)
            && (self.n < 6 || self.gradient_coefficient() < Rational::from_integer(0))
    }
}

/// A point of the standard simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexPoint {
    pub x: Vec<f64>,
}

impl SimplexPoint {
    pub fn new(x: Vec<f64>) -> Result<SimplexPoint, SimplexError> {
        let s: f64 = x.iter().sum();
        if x.len() < 2 || x.iter().any(|&v| !(v >= 0.0)) || (s - 1.0).abs() > 1e-12 {
            return Err(SimplexError::NotOnSimplex(format!("{x:?}")));
        }
        Ok(SimplexPoint { x })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }
}

/// `f_n(x) = nΣx³ + 1/(n−1) − (2n−1)/(n−1)·Σx²`.
pub fn f_n_eval(p: &SimplexPoint) -> f64 {
    f_float(&p.x)
}

fn f_float(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s2: f64 = x.iter().map(|v| v * v).sum();
    let s3: f64 = x.iter().map(|v| v * v * v).sum();
    n * s3 + 1.0 / (n - 1.0) - (2.0 * n - 1.0) / (n - 1.0) * s2
}

/// Exact `f_n` on rational coordinates.
pub fn f_n_exact(x: &[Rational]) -> Rational {
    let n = x.len();
    let s2: Rational = x.iter().map(|v| v * v).sum();
    let s3: Rational = x.iter().map(|v| v * v * v).sum();
    qi(n) * s3 + q(1, n as i128 - 1) - q(2 * n as i128 - 1, n as i128 - 1) * s2
}

/// `(n−1)D³ f_n(k/D)` for integer parts `k` summing to `D`.
fn lattice_numerator(n: i128, d: i128, s2: i128, s3: i128) -> i128 {
    n * (n - 1) * s3 + d * d * d - (2 * n - 1) * d * s2
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchResult {
    pub n: usize,
    pub depth: usize,
    /// Lattice points examined, one per orbit of the symmetric group.
    pub orbits: usize,
    #[serde(serialize_with = "ser_q")]
    pub lattice_min: Rational,
    pub lattice_min_f64: f64,
    /// Sorted (descending) lattice minimizers.
    pub argmins: Vec<SimplexPoint>,
    /// Every minimizer lies within `2/depth` of an equality family.
    pub argmins_in_families: bool,
    pub refined: SimplexPoint,
    pub refined_value: f64,
}

/// Which equality family a sorted point is close to, if any: all
/// coordinates `1/n`, or `n−1` coordinates `1/(n−1)` and one zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityFamily {
    Uniform,
    OneZero,
}

pub fn equality_family(x: &[f64], tol: f64) -> Option<EqualityFamily> {
    let n = x.len();
    let mut s = x.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let near = |target: &dyn Fn(usize) -> f64| s.iter().enumerate().all(|(i, &v)| (v - target(i)).abs() <= tol);
    if near(&|_| 1.0 / n as f64) {
        Some(EqualityFamily::Uniform)
    } else if near(&|i| if i + 1 < n { 1.0 / (n as f64 - 1.0) } else { 0.0 }) {
        Some(EqualityFamily::OneZero)
    } else {
        None
    }
}

/// Exhaustive lattice minimum of `f_n` over the simplex with spacing
/// `1/depth`, followed by float refinement from the best lattice point.
/// `f_n` is symmetric, so only non-increasing lattice points are visited.
pub fn simplex_min_search(n: usize, depth: usize) -> Result<SearchResult, SimplexError> {
    if !(3..=12).contains(&n) {
        return Err(SimplexError::Dimension { got: n, lo: 3, hi: 12 });
    }
    if depth < 20 {
        return Err(SimplexError::Depth(depth));
    }
    struct Walk {
        n: usize,
        d: i128,
        parts: Vec<i128>,
        best: i128,
        argmins: Vec<Vec<i128>>,
        orbits: usize,
    }
    fn rec(w: &mut Walk, remaining: i128, max_part: i128, s2: i128, s3: i128) {
        if w.parts.len() == w.n || remaining == 0 {
            if remaining != 0 {
                return;
            }
            w.orbits += 1;
            let f = lattice_numerator(w.n as i128, w.d, s2, s3);
            if f < w.best {
                w.best = f;
                w.argmins.clear();
            }
            if f == w.best {
                let mut p = w.parts.clone();
                p.resize(w.n, 0);
                w.argmins.push(p);
            }
            return;
        }
        let slots = (w.n - w.parts.len()) as i128;
        // parts are non-increasing, so the rest cannot exceed slots·k
        let lo = (remaining + slots - 1) / slots;
        for k in (lo..=max_part.min(remaining)).rev() {
            w.parts.push(k);
            rec(w, remaining - k, k, s2 + k * k, s3 + k * k * k);
            w.parts.pop();
        }
    }
    let d = depth as i128;
    let mut w = Walk { n, d, parts: Vec::with_capacity(n), best: i128::MAX, argmins: Vec::new(), orbits: 0 };
    rec(&mut w, d, d, 0, 0);

    let lattice_min = Rational::new(w.best, (n as i128 - 1) * d * d * d);
    let argmins: Vec<SimplexPoint> = w
        .argmins
        .iter()
        .map(|p| SimplexPoint { x: p.iter().map(|&k| k as f64 / depth as f64).collect() })
        .collect();
    let tol = 2.0 / depth as f64;
    let argmins_in_families = argmins.iter().all(|p| equality_family(&p.x, tol).is_some());
    let (refined, refined_value) = refine(&argmins[0].x);
    Ok(SearchResult {
        n,
        depth,
        orbits: w.orbits,
        lattice_min_f64: to_f64(&lattice_min),
        lattice_min,
        argmins,
        argmins_in_families,
        refined: SimplexPoint { x: refined },
        refined_value,
    })
}

/// Pairwise mass-transfer descent on the simplex, halving the step down to
/// a 1e-10 floor.
fn refine(start: &[f64]) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut x = start.to_vec();
    let mut fx = f_float(&x);
    let mut step = 1.0 / 64.0;
    while step >= 1e-10 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || x[j] < step {
                    continue;
                }
                x[i] += step;
                x[j] -= step;
                let f = f_float(&x);
                if f < fx {
                    fx = f;
                    improved = true;
                } else {
                    x[i] -= step;
                    x[j] += step;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalKind {
    InteriorMin,
    InteriorOther,
    Boundary,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalPointData {
    /// Number of reduced coordinates equal to α.
    pub m: usize,
    #[serde(serialize_with = "ser_q")]
    pub alpha: Rational,
    /// Full simplex point: `m+1` entries α and `n−1−m` entries `β−α`.
    pub point: Vec<String>,
    pub value: f64,
    #[serde(serialize_with = "ser_q")]
    pub value_exact: Rational,
    /// The closed form `(n − n²β/2)(α² − βα) + 1/(n−1) − nβ²/2`.
    #[serde(serialize_with = "ser_q")]
    pub value_closed_form: Rational,
    pub classification: CriticalKind,
}

/// Critical points of `f_n` with all reduced coordinates in `{α, β−α}`.
/// The branch `2m = n−2` is skipped; points leaving the simplex are
/// dropped.
pub fn critical_points(n: usize) -> Result<Vec<CriticalPointData>, SimplexError> {
    let dc = dimension_constants(n)?;
    let (ni, beta) = (n as i128, dc.beta);
    let zero = Rational::from_integer(0);
    let mut out = Vec::new();
    for m in 0..n {
        let denom = 2 * m as i128 - (ni - 2);
        if denom == 0 {
            continue;
        }
        let alpha = beta / 2 + q(ni - 2, 3 * (ni - 1) * denom);
        let other = beta - alpha;
        let mut x = vec![alpha; m + 1];
        x.extend(vec![other; n - 1 - m]);
        if x.iter().any(|v| *v < zero) {
            continue;
        }
        let value_exact = f_n_exact(&x);
        let value_closed_form = (qi(n) - qi(n * n) * beta / 2) * (alpha * alpha - beta * alpha) + q(1, ni - 1)
            - qi(n) * beta * beta / 2;
        let classification = if x.iter().any(|v| *v == zero) {
            CriticalKind::Boundary
        } else if value_exact == zero {
            CriticalKind::InteriorMin
        } else {
            CriticalKind::InteriorOther
        };
        out.push(CriticalPointData {
            m,
            alpha,
            point: x.iter().map(|v| v.to_string()).collect(),
            value: to_f64(&value_exact),
            value_exact,
            value_closed_form,
            classification,
        });
    }
    Ok(out)
}

/// The cubic Ricci invariant on a spectrum:
/// `(nΣλ³ − (2n−1)/(n−1)·RΣλ² + R³/(n−1))/(n−2)`.
pub fn i_from_eigenvalues(n: usize, lambdas: &[f64]) -> Result<f64, SimplexError> {
    if n < 3 || lambdas.len() != n {
        return Err(SimplexError::Dimension { got: n, lo: 3, hi: lambdas.len().max(3) });
    }
    let nf = n as f64;
    let r: f64 = lambdas.iter().sum();
    let s2: f64 = lambdas.iter().map(|l| l * l).sum();
    let s3: f64 = lambdas.iter().map(|l| l * l * l).sum();
    Ok((nf * s3 - (2.0 * nf - 1.0) / (nf - 1.0) * r * s2 + r * r * r / (nf - 1.0)) / (nf - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constants_at_six() {
        let c = dimension_constants(6).unwrap();
        assert_eq!(c.a, q(1, 10));
        assert_eq!(c.b, q(1, 8));
        assert_eq!(c.c, q(19, 400));
        assert_eq!(c.l, q(11, 300));
        assert_eq!(c.d, q(11, 300));
        assert_eq!(c.beta, q(22, 90));
        assert!(dimension_constants(2).is_err());
    }

    #[test]
    fn constants_consistent() {
        for n in 3..=60 {
            let c = dimension_constants(n).unwrap();
            assert!(c.consistent(), "n = {n}");
        }
        // the gradient coefficient changes sign between 5 and 6
        assert!(dimension_constants(5).unwrap().gradient_coefficient() > Rational::from_integer(0));
    }

    #[test]
    fn f_examples() {
        for n in 3..=12 {
            assert!(f_n_exact(&vec![q(1, n as i128); n]) == Rational::from_integer(0));
            let mut x = vec![q(1, n as i128 - 1); n];
            x[n - 1] = Rational::from_integer(0);
            assert!(f_n_exact(&x) == Rational::from_integer(0));
        }
        assert_eq!(f_n_exact(&[q(1, 2), q(1, 2), q(0, 1)]), Rational::from_integer(0));
        assert_eq!(f_n_exact(&[q(4, 9), q(4, 9), q(1, 9)]), q(1, 81));
        let p = SimplexPoint::new(vec![4.0 / 9.0, 4.0 / 9.0, 1.0 / 9.0]).unwrap();
        assert!((f_n_eval(&p) - 1.0 / 81.0).abs() < 1e-15);
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn search_n3() {
        let r = simplex_min_search(3, 60).unwrap();
        assert_eq!(r.lattice_min, Rational::from_integer(0));
        assert_eq!(r.argmins.len(), 2);
        let fams: Vec<_> = r.argmins.iter().map(|p| equality_family(&p.x, 1e-12)).collect();
        assert!(fams.contains(&Some(EqualityFamily::Uniform)) && fams.contains(&Some(EqualityFamily::OneZero)));
        assert!(r.refined_value.abs() < 1e-12);
    }

    #[test]
    fn search_n6() {
        let r = simplex_min_search(6, 30).unwrap();
        assert_eq!(r.lattice_min, Rational::from_integer(0));
        assert_eq!(r.argmins[0].x, vec![0.2, 0.2, 0.2, 0.2, 0.2, 0.0]);
        assert_eq!(r.argmins[1].x, vec![1.0 / 6.0; 6]);
    }

    #[test]
    fn search_nonnegative_up_to_ten() {
        for n in 3..=10 {
            let r = simplex_min_search(n, 40).unwrap();
            assert!(r.lattice_min_f64 >= -1e-12, "n = {n}");
            assert!(r.argmins_in_families, "n = {n}: {:?}", r.argmins);
            assert!(r.refined_value >= -1e-12 && r.refined_value < 1e-9);
        }
        let r = simplex_min_search(4, 40).unwrap();
        // 40 is divisible by 4 but not by 3
        assert_eq!(r.argmins.len(), 1);
        assert_eq!(equality_family(&r.argmins[0].x, 1e-12), Some(EqualityFamily::Uniform));
    }

    #[test]
    fn search_errors() {
        assert!(simplex_min_search(2, 40).is_err());
        assert!(simplex_min_search(13, 40).is_err());
        assert!(simplex_min_search(4, 10).is_err());
    }

    #[test]
    fn critical_points_n3() {
        let cps = critical_points(3).unwrap();
        assert_eq!(cps.len(), 3);
        for cp in &cps {
            assert_eq!(cp.value_exact, cp.value_closed_form);
        }
        let uniform = cps.iter().find(|c| c.m == 2).unwrap();
        assert_eq!(uniform.alpha, q(1, 3));
        assert_eq!(uniform.classification, CriticalKind::InteriorMin);
        let m0 = cps.iter().find(|c| c.m == 0).unwrap();
        assert_eq!(m0.point, vec!["1/9", "4/9", "4/9"]);
        assert_eq!(m0.value_exact, q(1, 81));
        let m1 = cps.iter().find(|c| c.m == 1).unwrap();
        assert_eq!(m1.point, vec!["4/9", "4/9", "1/9"]);
        assert_eq!(m1.classification, CriticalKind::InteriorOther);
    }

    #[test]
    fn critical_points_general() {
        for n in 3..=14 {
            let cps = critical_points(n).unwrap();
            let top = cps.iter().find(|c| c.m == n - 1).unwrap();
            assert_eq!(top.alpha, q(1, n as i128));
            assert_eq!(top.value_exact, Rational::from_integer(0));
            let m0 = cps.iter().find(|c| c.m == 0).unwrap();
            let want = q(1, n as i128 - 1) - q(1, 3 * (n * (n - 1)) as i128);
            assert_eq!(m0.point[1], want.to_string());
            assert!(m0.value_exact > Rational::from_integer(0));
            for cp in &cps {
                assert_eq!(cp.value_exact, cp.value_closed_form, "n = {n}, m = {}", cp.m);
                if n % 2 == 0 {
                    assert_ne!(2 * cp.m, n - 2);
                }
            }
        }
        assert_eq!(critical_points(6).unwrap().iter().find(|c| c.m == 0).unwrap().point[1], "17/90");
    }

    #[test]
    fn i_examples() {
        assert!(i_from_eigenvalues(6, &[2.5; 6]).unwrap().abs() < 1e-12);
        assert!(i_from_eigenvalues(6, &[0.0, 4.0, 4.0, 4.0, 4.0, 4.0]).unwrap().abs() < 1e-11);
        assert!((i_from_eigenvalues(3, &[1.0, 2.0, 3.0]).unwrap() - 6.0).abs() < 1e-12);
        assert!(i_from_eigenvalues(2, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn i_nonnegative_on_many_random_spectra() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 3..=10 {
            for _ in 0..100_000 {
                let mut l: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().ln()).collect();
                let s: f64 = l.iter().sum();
                l.iter_mut().for_each(|v| *v /= s);
                let i = i_from_eigenvalues(n, &l).unwrap();
                assert!(i >= -1e-14, "n = {n}: {l:?} gives {i}");
                if i.abs() < 1e-10 {
                    assert!(equality_family(&l, 1e-4).is_some(), "{l:?}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn i_is_cubic_homogeneous(l in proptest::collection::vec(-5.0f64..5.0, 6), c in -3.0f64..3.0) {
            let a = i_from_eigenvalues(6, &l).unwrap();
            let scaled: Vec<f64> = l.iter().map(|v| v * c).collect();
            let b = i_from_eigenvalues(6, &scaled).unwrap();
            // magnitude of the largest summand of I(cλ)
            let r: f64 = l.iter().map(|v| v.abs()).sum();
            let s2: f64 = l.iter().map(|v| v * v).sum();
            let s3: f64 = l.iter().map(|v| v.abs().powi(3)).sum();
            let terms = (6.0 * s3).max(2.2 * r * s2).max(r.powi(3)) * c.abs().powi(3);
            prop_assert!((b - c.powi(3) * a).abs() <= 1e-12 * terms);
        }

        #[test]
        fn i_matches_simplex_function(l in proptest::collection::vec(0.01f64..5.0, 3..=10)) {
            let n = l.len();
            let r: f64 = l.iter().sum();
            let x: Vec<f64> = l.iter().map(|v| v / r).collect();
            let i = i_from_eigenvalues(n, &l).unwrap();
            let f = f_float(&x) * r.powi(3) / (n as f64 - 2.0);
            prop_assert!((i - f).abs() <= 1e-10 * r.powi(3));
        }

        #[test]
        fn f_nonnegative(raw in proptest::collection::vec(0.0f64..1.0, 3..=12)) {
            let s: f64 = raw.iter().sum();
            prop_assume!(s > 1e-6);
            let x: Vec<f64> = raw.iter().map(|v| v / s).collect();
            prop_assert!(f_float(&x) >= -1e-12);
        }
    }
}
