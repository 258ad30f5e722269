//! Model spaces with known invariants, and a random conformally flat metric
//! generator for property tests.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::expr::{Expr, ParamValues};
use crate::geometry::{diagonal_metric, q_coefficients, BlockKind, CoordSpec, GeometryError, HomogeneousBlock, MetricChart};
use crate::hypersurface::{Immersion, ImmersionError};

pub const METRIC_NAMES: [&str; 7] =
    ["euclidean", "sphere", "hyperbolic", "cylinder", "flat_torus", "product_spheres", "circle_times_sphere"];
pub const IMMERSION_NAMES: [&str; 3] = ["round_sphere_in_rn1", "clifford_in_sn1", "geodesic_sphere_in_hn1"];

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    UnknownName(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("`{0}` has no closed chart")]
    NotClosed(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Immersion(#[from] ImmersionError),
}

/// Exact invariant values of a catalog entry, with a note on where each
/// one comes from.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Expected {
    pub scalar: Option<f64>,
    pub q: Option<f64>,
    pub ricci_norm_sq: Option<f64>,
    pub weyl_zero: Option<bool>,
    pub einstein: Option<bool>,
    /// Eigenvalues of Ric relative to g, ascending.
    pub ricci_eigenvalues: Option<Vec<f64>>,
    pub notes: BTreeMap<String, String>,
}

impl Expected {
    fn note(&mut self, key: &str, text: &str) {
        self.notes.insert(key.to_string(), text.to_string());
    }

    /// Fill every field from the Ricci spectrum of a locally symmetric
    /// space (parallel Ricci, so ΔR = 0).
    fn from_ricci_spectrum(n: usize, mut eig: Vec<f64>, weyl_zero: bool) -> Expected {
        eig.sort_by(f64::total_cmp);
        let r: f64 = eig.iter().sum();
        let rn: f64 = eig.iter().map(|x| x * x).sum();
        let einstein = eig.iter().all(|&x| (x - eig[0]).abs() <= 1e-12 * (1.0 + eig[0].abs()));
        let q = if n >= 3 {
            let (_, b, c) = q_coefficients(n);
            Some(-b * rn + c * r * r)
        } else {
            None
        };
        Expected {
            scalar: Some(r),
            q,
            ricci_norm_sq: Some(rn),
            weyl_zero: Some(weyl_zero),
            einstein: Some(einstein),
            ricci_eigenvalues: Some(eig),
            notes: BTreeMap::new(),
        }
    }
}

pub struct CatalogEntry {
    pub name: String,
    pub chart: MetricChart,
    pub expected: Expected,
}

fn get_param(params: &ParamValues, key: &str, default: f64) -> f64 {
    params.get(key).copied().unwrap_or(default)
}

fn check_keys(name: &str, params: &ParamValues, allowed: &[&str]) -> Result<(), CatalogError> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(CatalogError::InvalidParam(format!("`{name}` takes no parameter `{k}` (allowed: {allowed:?})")));
        }
    }
    Ok(())
}

fn positive(key: &str, v: f64) -> Result<f64, CatalogError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CatalogError::InvalidParam(format!("`{key}` must be positive, got {v}")))
    }
}

fn split(key: &str, v: f64, n: usize) -> Result<usize, CatalogError> {
    if v.fract() == 0.0 && v >= 1.0 && (v as usize) < n {
        Ok(v as usize)
    } else {
        Err(CatalogError::InvalidParam(format!("`{key}` must be an integer in 1..={}, got {v}", n - 1)))
    }
}

fn check_dim(n: usize) -> Result<(), CatalogError> {
    if !(2..=crate::geometry::MAX_DIM).contains(&n) {
        return Err(CatalogError::InvalidParam(format!("dimension {n} outside 2..={}", crate::geometry::MAX_DIM)));
    }
    Ok(())
}

/// Coordinates `first..first+k` as angles on `S^k`: polar angles then one
/// periodic azimuth. Returns the coordinate specs and the unit-sphere
/// diagonal metric entries.
pub fn sphere_angles(k: usize, first: usize, prefix: &str) -> (Vec<CoordSpec>, Vec<Expr>) {
    let mut coords = Vec::with_capacity(k);
    let mut diag = Vec::with_capacity(k);
    let mut factor = Expr::one();
    for j in 0..k {
        diag.push(factor.clone());
        if j + 1 < k {
            coords.push(CoordSpec::polar(&format!("{prefix}{}", j + 1), 0.0, PI));
            factor = factor.mul(&Expr::coord(first + j).sin().powi(2));
        } else {
            coords.push(CoordSpec::periodic(&format!("{prefix}{}", j + 1), 2.0 * PI));
        }
    }
    (coords, diag)
}

/// The unit vector `ω ∈ S^k ⊂ R^{k+1}` in the angle coordinates of
/// [`sphere_angles`].
pub fn sphere_embedding(k: usize, first: usize) -> Vec<Expr> {
    let mut out = Vec::with_capacity(k + 1);
    let mut prod = Expr::one();
    for j in 0..k {
        let a = Expr::coord(first + j);
        if j + 1 < k {
            out.push(prod.mul(&a.cos()));
            prod = prod.mul(&a.sin());
        } else {
            out.push(prod.mul(&a.cos()));
            out.push(prod.mul(&a.sin()));
        }
    }
    out
}

fn conformal_box(n: usize, half: f64, sign: i64) -> (Vec<CoordSpec>, Vec<Expr>) {
    let coords: Vec<CoordSpec> = (1..=n).map(|i| CoordSpec::range(&format!("x{i}"), -half, half)).collect();
    let r2 = Expr::param("r").powi(2);
    let s = Expr::sum((0..n).map(|i| Expr::coord(i).powi(2)));
    let denom = if sign > 0 { r2.add(&s) } else { r2.sub(&s) };
    let factor = Expr::int(4).mul(&Expr::param("r").powi(4)).mul(&denom.powi(-2));
    (coords, diagonal_metric(vec![factor; n]))
}

fn bind_r(r: f64) -> ParamValues {
    ParamValues::from([("r".to_string(), r)])
}

/// Build a catalog metric with its exact invariants.
pub fn builtin_metric(name: &str, n: usize, params: &ParamValues) -> Result<CatalogEntry, CatalogError> {
    check_dim(n)?;
    let nf = n as f64;
    let (chart, expected) = match name {
        "euclidean" => {
            check_keys(name, params, &[])?;
            let coords = (1..=n).map(|i| CoordSpec::range(&format!("x{i}"), -1.0, 1.0)).collect();
            let chart = MetricChart::new(name, coords, diagonal_metric(vec![Expr::one(); n]), ParamValues::new())?;
            let mut e = Expected::from_ricci_spectrum(n, vec![0.0; n], true);
            e.note("all", "flat metric");
            (chart, e)
        }
        "flat_torus" => {
            check_keys(name, params, &["L"])?;
            let l = positive("L", get_param(params, "L", 2.0 * PI))?;
            let coords = (1..=n).map(|i| CoordSpec::periodic(&format!("x{i}"), l)).collect();
            let chart = MetricChart::new(name, coords, diagonal_metric(vec![Expr::one(); n]), ParamValues::new())?;
            let mut e = Expected::from_ricci_spectrum(n, vec![0.0; n], true);
            e.note("all", "flat metric");
            (chart, e)
        }
        "sphere" | "hyperbolic" => {
            check_keys(name, params, &["r"])?;
            let r = positive("r", get_param(params, "r", 1.0))?;
            let sign = if name == "sphere" { 1 } else { -1 };
            let half = if sign > 0 { 2.0 * r } else { 0.9 * r / nf.sqrt() };
            let (coords, metric) = conformal_box(n, half, sign);
            let chart = MetricChart::new(name, coords, metric, bind_r(r))?;
            let k = sign as f64 / (r * r);
            let mut e = Expected::from_ricci_spectrum(n, vec![(nf - 1.0) * k; n], true);
            e.note("scalar", "R = n(n-1)K for constant sectional curvature K");
            e.note("q", "Q = n(n^2-4)K^2/8 for constant sectional curvature K");
            e.note("weyl_zero", "space forms are conformally flat");
            (chart, e)
        }
        "cylinder" | "circle_times_sphere" => {
            let allowed: &[&str] = if name == "cylinder" { &["r"] } else { &["r", "T"] };
            check_keys(name, params, allowed)?;
            let r = positive("r", get_param(params, "r", 1.0))?;
            let first = if name == "cylinder" {
                CoordSpec::range("t", -1.0, 1.0)
            } else {
                CoordSpec::periodic("t", positive("T", get_param(params, "T", 2.0 * PI))?)
            };
            let chart = sphere_product_chart(name, first, n - 1, r)?;
            let mut eig = vec![(nf - 2.0) / (r * r); n];
            eig[0] = 0.0;
            let mut e = Expected::from_ricci_spectrum(n, eig, true);
            e.note("scalar", "R = (n-1)(n-2)/r^2");
            e.note("q", "Q = (n^3-4n^2)/(8 r^4)");
            e.note("ricci_eigenvalues", "Ric vanishes along the line factor");
            e.note("weyl_zero", "a line times a round sphere is conformally flat");
            (chart, e)
        }
        "product_spheres" => {
            check_keys(name, params, &["k", "r1", "r2"])?;
            let k = split("k", get_param(params, "k", (n / 2) as f64), n)?;
            let r1 = positive("r1", get_param(params, "r1", 1.0))?;
            let r2 = positive("r2", get_param(params, "r2", 1.0))?;
            let (mut coords, mut d1) = sphere_angles(k, 0, "a");
            let (c2, d2) = sphere_angles(n - k, k, "b");
            coords.extend(c2);
            d1.iter_mut().for_each(|e| *e = e.mul(&Expr::param("r1").powi(2)));
            d1.extend(d2.into_iter().map(|e| e.mul(&Expr::param("r2").powi(2))));
            let p = ParamValues::from([("r1".to_string(), r1), ("r2".to_string(), r2)]);
            let chart = MetricChart::new(name, coords, diagonal_metric(d1), p)?;
            let mut eig = vec![(k as f64 - 1.0) / (r1 * r1); k];
            eig.extend(vec![(nf - k as f64 - 1.0) / (r2 * r2); n - k]);
            let mut e = Expected::from_ricci_spectrum(n, eig, n <= 3 || k == 1 || n - k == 1);
            e.note("ricci_eigenvalues", "each factor contributes (dim-1)/radius^2");
            e.note("einstein", "Einstein iff both factor Ricci constants agree");
            e.note("weyl_zero", "conformally flat only when a factor is a circle");
            (chart, e)
        }
        _ => return Err(CatalogError::UnknownName(name.to_string())),
    };
    Ok(CatalogEntry { name: name.to_string(), chart, expected })
}

/// `line-or-circle × S^k(r)` with angle coordinates on the sphere factor.
fn sphere_product_chart(name: &str, first: CoordSpec, k: usize, r: f64) -> Result<MetricChart, CatalogError> {
    let mut coords = vec![first];
    let (c, d) = sphere_angles(k, 1, "a");
    coords.extend(c);
    let mut diag = vec![Expr::one()];
    diag.extend(d.into_iter().map(|e| e.mul(&Expr::param("r").powi(2))));
    Ok(MetricChart::new(name, coords, diagonal_metric(diag), bind_r(r))?)
}

/// A chart of the entry covering the whole closed manifold, for
/// integration. Spheres switch to angle coordinates and the cylinder is
/// replaced by its quotient `S^1(T) × S^{n-1}(r)`.
pub fn closed_chart(name: &str, n: usize, params: &ParamValues) -> Result<MetricChart, CatalogError> {
    check_dim(n)?;
    let sphere = |start, len| HomogeneousBlock { start, len, kind: BlockKind::SphereAngles };
    let torus = |start, len| HomogeneousBlock { start, len, kind: BlockKind::FlatTorus };
    let (chart, blocks) = match name {
        "sphere" => {
            check_keys(name, params, &["r"])?;
            let r = positive("r", get_param(params, "r", 1.0))?;
            let (coords, d) = sphere_angles(n, 0, "a");
            let diag = d.into_iter().map(|e| e.mul(&Expr::param("r").powi(2))).collect();
            (MetricChart::new(name, coords, diagonal_metric(diag), bind_r(r))?, vec![sphere(0, n)])
        }
        "cylinder" => {
            check_keys(name, params, &["r", "T"])?;
            let mut p = params.clone();
            p.entry("T".to_string()).or_insert(2.0 * PI);
            return closed_chart("circle_times_sphere", n, &p);
        }
        "circle_times_sphere" => (builtin_metric(name, n, params)?.chart, vec![torus(0, 1), sphere(1, n - 1)]),
        "product_spheres" => {
            let chart = builtin_metric(name, n, params)?.chart;
            // The first factor's dimension is the index of the `b1` axis.
            let k = chart.coords.iter().position(|c| c.name == "b1").expect("second factor");
            (chart, vec![sphere(0, k), sphere(k, n - k)])
        }
        "flat_torus" => (builtin_metric(name, n, params)?.chart, vec![torus(0, n)]),
        "euclidean" | "hyperbolic" => return Err(CatalogError::NotClosed(name.to_string())),
        _ => return Err(CatalogError::UnknownName(name.to_string())),
    };
    Ok(chart.with_homogeneous(blocks)?)
}

/// `e^{2f} δ` on the torus `[0, 2π)^n`, where `f` mixes the first two
/// Fourier modes of every axis with a coupling between neighbouring axes.
/// Every coefficient is drawn uniformly from `[-amplitude, amplitude]`.
pub fn random_lcf_metric(n: usize, seed: u64, amplitude: f64) -> Result<MetricChart, CatalogError> {
    if !(3..=crate::geometry::MAX_DIM).contains(&n) {
        return Err(CatalogError::InvalidParam(format!("dimension {n} outside 3..={}", crate::geometry::MAX_DIM)));
    }
    if !(0.0..=0.3).contains(&amplitude) {
        return Err(CatalogError::InvalidParam(format!("amplitude {amplitude} outside [0, 0.3]")));
    }
    let f = random_trig_polynomial(n, seed, amplitude);
    let factor = f.scale_by(2.into()).exp();
    let coords = (1..=n).map(|i| CoordSpec::periodic(&format!("x{i}"), 2.0 * PI)).collect();
    Ok(MetricChart::new("random_lcf", coords, diagonal_metric(vec![factor; n]), ParamValues::new())?)
}

/// The random function `f` used by [`random_lcf_metric`].
pub fn random_trig_polynomial(n: usize, seed: u64, amplitude: f64) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || if amplitude > 0.0 { rng.gen_range(-amplitude..=amplitude) } else { 0.0 };
    let mut terms = Vec::new();
    for i in 0..n {
        let x = Expr::coord(i);
        for k in 1..=2 {
            let kx = x.scale_by(k.into());
            terms.push(Expr::from_f64(draw()).mul(&kx.cos()));
            terms.push(Expr::from_f64(draw()).mul(&kx.sin()));
        }
        let y = Expr::coord((i + 1) % n);
        terms.push(Expr::from_f64(draw()).mul(&x.sub(&y).cos()));
    }
    Expr::sum(terms)
}

/// Build a catalog immersion.
pub fn builtin_immersion(name: &str, n: usize, params: &ParamValues) -> Result<Immersion, CatalogError> {
    if !(2..=crate::geometry::MAX_DIM).contains(&n) {
        return Err(CatalogError::InvalidParam(format!("dimension {n} outside 2..={}", crate::geometry::MAX_DIM)));
    }
    match name {
        "round_sphere_in_rn1" => {
            check_keys(name, params, &["r"])?;
            let r = positive("r", get_param(params, "r", 1.0))?;
            let (coords, _) = sphere_angles(n, 0, "a");
            let w = sphere_embedding(n, 0);
            let rr = Expr::param("r");
            let position = w.iter().map(|e| rr.mul(e)).collect();
            let normal = w.iter().map(Expr::neg).collect();
            Ok(Immersion::new(name, 0, coords, position, normal, bind_r(r))?)
        }
        "clifford_in_sn1" => {
            check_keys(name, params, &["m", "r", "s"])?;
            let m = split("m", get_param(params, "m", (n / 2) as f64), n)?;
            let r = positive("r", get_param(params, "r", (m as f64 / n as f64).sqrt()))?;
            let s = match params.get("s") {
                Some(&s) => positive("s", s)?,
                None if r < 1.0 => (1.0 - r * r).sqrt(),
                None => return Err(CatalogError::InvalidParam(format!("radius r = {r} must be below 1"))),
            };
            if (r * r + s * s - 1.0).abs() > 1e-12 {
                return Err(CatalogError::InvalidParam(format!("radii must satisfy r^2 + s^2 = 1, got {}", r * r + s * s)));
            }
            let (mut coords, _) = sphere_angles(m, 0, "a");
            coords.extend(sphere_angles(n - m, m, "b").0);
            let (w1, w2) = (sphere_embedding(m, 0), sphere_embedding(n - m, m));
            let (re, se) = (Expr::param("r"), Expr::param("s"));
            let position = w1.iter().map(|e| re.mul(e)).chain(w2.iter().map(|e| se.mul(e))).collect();
            let normal = w1.iter().map(|e| se.mul(e).neg()).chain(w2.iter().map(|e| re.mul(e))).collect();
            let p = ParamValues::from([("r".to_string(), r), ("s".to_string(), s)]);
            Ok(Immersion::new(name, 1, coords, position, normal, p)?)
        }
        "geodesic_sphere_in_hn1" => {
            check_keys(name, params, &["rho"])?;
            let rho = positive("rho", get_param(params, "rho", 1.0))?;
            let (coords, _) = sphere_angles(n, 0, "a");
            let w = sphere_embedding(n, 0);
            let (ep, em) = (Expr::param("rho").exp(), Expr::param("rho").neg().exp());
            let cosh = ep.add(&em).scale_by((1, 2).into());
            let sinh = ep.sub(&em).scale_by((1, 2).into());
            let mut position = vec![cosh.clone()];
            position.extend(w.iter().map(|e| sinh.mul(e)));
            let mut normal = vec![sinh.neg()];
            normal.extend(w.iter().map(|e| cosh.mul(e).neg()));
            let p = ParamValues::from([("rho".to_string(), rho)]);
            Ok(Immersion::new(name, -1, coords, position, normal, p)?)
        }
        _ => Err(CatalogError::UnknownName(name.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::generalized_eigenvalues;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / (1.0 + b.abs())
    }

    fn check_entry(entry: &CatalogEntry, points: usize) {
        let n = entry.chart.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..points {
            let u: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let p = entry.chart.interior_point(&u, 0.8);
            let b = entry.chart.bundle_at_order(&p, 4).unwrap();
            let e = &entry.expected;
            if let Some(r) = e.scalar {
                assert!(rel(b.scalar, r) < 1e-8, "{}: R {} vs {r}", entry.name, b.scalar);
            }
            if let Some(q) = e.q {
                assert!(rel(b.q.unwrap(), q) < 1e-8, "{}: Q {} vs {q}", entry.name, b.q.unwrap());
            }
            if let Some(rn) = e.ricci_norm_sq {
                assert!(rel(b.ricci_norm_sq, rn) < 1e-8);
            }
            if let Some(wz) = e.weyl_zero {
                assert_eq!(b.weyl.max_abs() < 1e-8 * (1.0 + b.riemann.max_abs()), wz, "{}", entry.name);
            }
            if let Some(eig) = &e.ricci_eigenvalues {
                let got = generalized_eigenvalues(&b.ricci, &b.metric).unwrap().eigenvalues;
                for (a, x) in got.iter().zip(eig) {
                    assert!(rel(*a, *x) < 1e-8, "{}: {got:?} vs {eig:?}", entry.name);
                }
            }
        }
    }

    #[test]
    fn every_metric_entry_matches_its_expectations() {
        for name in METRIC_NAMES {
            for n in [3, 4, 6] {
                let entry = builtin_metric(name, n, &ParamValues::new()).unwrap();
                check_entry(&entry, 10);
            }
        }
    }

    #[test]
    fn cylinder_constants() {
        let e = builtin_metric("cylinder", 6, &ParamValues::new()).unwrap();
        assert_eq!(e.expected.scalar, Some(20.0));
        assert_eq!(e.expected.q, Some(9.0));
        assert_eq!(e.expected.ricci_eigenvalues.as_deref(), Some(&[0.0, 4.0, 4.0, 4.0, 4.0, 4.0][..]));
        assert_eq!(e.expected.einstein, Some(false));
        check_entry(&e, 3);
    }

    #[test]
    fn sphere_constants_and_radius() {
        let e = builtin_metric("sphere", 6, &ParamValues::new()).unwrap();
        assert!(rel(e.expected.q.unwrap(), 24.0) < 1e-15);
        assert_eq!(e.expected.scalar, Some(30.0));
        let p = ParamValues::from([("r".to_string(), 2.0)]);
        let e = builtin_metric("hyperbolic", 4, &p).unwrap();
        assert!(rel(e.expected.scalar.unwrap(), -3.0) < 1e-15);
        check_entry(&e, 3);
    }

    #[test]
    fn einstein_product() {
        let p = ParamValues::from([("k".to_string(), 2.0), ("r1".to_string(), 1.0), ("r2".to_string(), 3f64.sqrt())]);
        let e = builtin_metric("product_spheres", 6, &p).unwrap();
        assert_eq!(e.expected.einstein, Some(true));
        assert_eq!(e.expected.weyl_zero, Some(false));
        check_entry(&e, 3);
    }

    #[test]
    fn circle_times_sphere_matches_cylinder() {
        let p = ParamValues::from([("T".to_string(), 10.0)]);
        let a = builtin_metric("circle_times_sphere", 6, &p).unwrap();
        let b = builtin_metric("cylinder", 6, &ParamValues::new()).unwrap();
        assert_eq!(a.expected.scalar, b.expected.scalar);
        assert_eq!(a.expected.q, b.expected.q);
        assert_eq!(a.chart.coords[0].period(), Some(10.0));
    }

    #[test]
    fn closed_charts() {
        for name in ["sphere", "cylinder", "flat_torus", "product_spheres", "circle_times_sphere"] {
            assert!(closed_chart(name, 4, &ParamValues::new()).unwrap().is_closed(), "{name}");
        }
        assert!(matches!(closed_chart("hyperbolic", 4, &ParamValues::new()), Err(CatalogError::NotClosed(_))));
        let s = closed_chart("sphere", 6, &ParamValues::new()).unwrap();
        let b = s.bundle_at_order(&s.interior_point(&[0.3, 0.6, 0.2, 0.7, 0.4, 0.5], 0.9), 4).unwrap();
        assert!(rel(b.scalar, 30.0) < 1e-9 && rel(b.q.unwrap(), 24.0) < 1e-9);
    }

    #[test]
    fn parameter_errors() {
        let bad = |name: &str, k: &str, v: f64| {
            let p = ParamValues::from([(k.to_string(), v)]);
            builtin_metric(name, 4, &p).is_err()
        };
        assert!(bad("sphere", "r", -1.0));
        assert!(bad("sphere", "q", 1.0));
        assert!(bad("product_spheres", "k", 4.0));
        assert!(bad("product_spheres", "k", 1.5));
        assert!(bad("circle_times_sphere", "T", 0.0));
        assert!(matches!(builtin_metric("klein", 4, &ParamValues::new()), Err(CatalogError::UnknownName(_))));
        assert!(builtin_metric("sphere", 1, &ParamValues::new()).is_err());
    }

    #[test]
    fn random_lcf_is_deterministic_and_flat_at_zero() {
        let a = random_lcf_metric(4, 11, 0.2).unwrap();
        let b = random_lcf_metric(4, 11, 0.2).unwrap();
        assert_eq!(a.metric, b.metric);
        let c = random_lcf_metric(4, 12, 0.2).unwrap();
        assert_ne!(a.metric, c.metric);
        let flat = random_lcf_metric(4, 11, 0.0).unwrap();
        assert!(flat.metric.iter().enumerate().all(|(k, e)| if k % 5 == 0 { e.is_one() } else { e.is_zero() }));
        assert!(random_lcf_metric(2, 1, 0.1).is_err());
        assert!(random_lcf_metric(4, 1, 0.5).is_err());
    }

    #[test]
    fn random_lcf_has_vanishing_weyl() {
        for seed in 0..3 {
            let chart = random_lcf_metric(4, seed, 0.3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let p: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
                let b = chart.bundle_at_order(&p, 2).unwrap();
                assert!(b.weyl.max_abs() <= 1e-8 * (1.0 + b.riemann.max_abs()));
                assert!(b.riemann.max_abs() > 1e-3);
            }
        }
    }

    #[test]
    fn immersion_errors() {
        let p = ParamValues::from([("m".to_string(), 0.0)]);
        assert!(builtin_immersion("clifford_in_sn1", 4, &p).is_err());
        let p = ParamValues::from([("r".to_string(), 0.6), ("s".to_string(), 0.6)]);
        assert!(builtin_immersion("clifford_in_sn1", 4, &p).is_err());
        assert!(builtin_immersion("torus_in_r3", 2, &ParamValues::new()).is_err());
    }
}
