//! Property tests for cross-module invariants. Geometry-backed properties
//! run few cases since each one builds symbolic curvature.

use std::f64::consts::PI;

use proptest::prelude::*;
use qcurv::catalog::{
    builtin_immersion, builtin_metric, closed_chart, random_lcf_metric, random_trig_polynomial, METRIC_NAMES,
};
use qcurv::conformal::{paneitz_apply, schoen_check, verify_conformal_laws, ConformalFactor};
use qcurv::expr::{Expr, ParamValues, Rational};
use qcurv::geometry::CurvatureBundle;
use qcurv::identities::sample_points;
use qcurv::simplexlab::dimension_constants;
use qcurv::tensor::{contract, generalized_eigenvalues, invert, kulkarni_nomizu, sym_eigen, Symmetries, TensorValue};

fn params(kv: &[(&str, f64)]) -> ParamValues {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn symmetric(n: usize, raw: &[f64]) -> TensorValue {
    TensorValue::from_fn(n, 2, |ix| raw[ix[0].min(ix[1]) * n + ix[0].max(ix[1])])
}

/// A positive definite matrix `AᵀA + I`.
fn spd(n: usize, raw: &[f64]) -> TensorValue {
    TensorValue::from_fn(n, 2, |ix| {
        let s: f64 = (0..n).map(|k| raw[k * n + ix[0]] * raw[k * n + ix[1]]).sum();
        s + if ix[0] == ix[1] { 1.0 } else { 0.0 }
    })
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

proptest! {
    #[test]
    fn kulkarni_nomizu_has_curvature_symmetries(n in 2usize..6, a in prop::collection::vec(-2.0f64..2.0, 36), b in prop::collection::vec(-2.0f64..2.0, 36)) {
        let kn = kulkarni_nomizu(&symmetric(n, &a), &symmetric(n, &b)).unwrap();
        prop_assert!(kn.stamp(&Symmetries::riemann(), 1e-12).is_ok());
    }

    #[test]
    fn contraction_uses_the_inverse_metric(n in 2usize..5, t in prop::collection::vec(-1.0f64..1.0, 64), g in prop::collection::vec(-1.0f64..1.0, 16)) {
        let g = spd(n, &g);
        let ginv = TensorValue::from_matrix(n, &invert(&g.data, n).unwrap());
        let t3 = TensorValue::from_fn(n, 3, |ix| t[(ix[0] * n + ix[1]) * n + ix[2]]);
        let c = contract(&t3, 0, 2, Some(&g), Some(&ginv)).unwrap();
        for j in 0..n {
            let mut want = 0.0;
            for a in 0..n {
                for b in 0..n {
                    want += ginv.get(&[a, b]) * t3.get(&[a, j, b]);
                }
            }
            prop_assert!((c.get(&[j]) - want).abs() <= 1e-10 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn eigenvalues_sum_to_trace(n in 1usize..8, raw in prop::collection::vec(-5.0f64..5.0, 64)) {
        let s = symmetric(n, &raw);
        let e = sym_eigen(&s).unwrap();
        let tr: f64 = (0..n).map(|i| s.get(&[i, i])).sum();
        let sum: f64 = e.eigenvalues.iter().sum();
        prop_assert!((sum - tr).abs() <= 1e-10 * (1.0 + s.max_abs() * n as f64));
    }

    #[test]
    fn dimension_constants_are_consistent(n in 3usize..=400) {
        let d = dimension_constants(n).unwrap();
        prop_assert!(d.consistent());
        prop_assert!(d.l > Rational::from_integer(0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn lcf_metrics_have_vanishing_weyl(n in 4usize..=6, seed in 0u64..1000, pt in 0u64..1000) {
        let chart = random_lcf_metric(n, seed, 0.2).unwrap();
        for p in sample_points(&chart, 2, pt) {
            let b = CurvatureBundle::compute(&chart, &p, 2).unwrap();
            prop_assert!(b.weyl.max_abs() <= 1e-8 * (1.0 + b.riemann.max_abs()));
            let tr: f64 = (0..n * n).map(|k| b.inverse_metric.data[k] * b.ricci.data[k]).sum();
            prop_assert!(rel(b.scalar, tr) <= 1e-10);
        }
    }

    #[test]
    fn catalog_expectations_hold(which in 0usize..METRIC_NAMES.len(), n in 3usize..=6, pt in 0u64..1000) {
        let name = METRIC_NAMES[which];
        let e = builtin_metric(name, n, &ParamValues::new()).unwrap();
        for p in sample_points(&e.chart, 3, pt) {
            let b = CurvatureBundle::compute(&e.chart, &p, 4).unwrap();
            prop_assert!(rel(b.scalar, e.expected.scalar.unwrap()) <= 1e-9, "{name}{n}: R {}", b.scalar);
            prop_assert!(rel(b.q.unwrap(), e.expected.q.unwrap()) <= 1e-8, "{name}{n}: Q {:?}", b.q);
            let eig = generalized_eigenvalues(&b.ricci, &b.metric).unwrap().eigenvalues;
            for (x, y) in eig.iter().zip(e.expected.ricci_eigenvalues.as_ref().unwrap()) {
                prop_assert!(rel(*x, *y) <= 1e-9, "{name}{n}: eig {eig:?}");
            }
        }
    }

    #[test]
    fn conformal_laws_on_perturbed_tori(n in 3usize..=5, seed in 0u64..1000) {
        let base = random_lcf_metric(n, seed, 0.1).unwrap();
        let f = random_trig_polynomial(n, seed + 1, 0.1);
        let r = verify_conformal_laws(&base, &ConformalFactor::Exponent(f), &sample_points(&base, 4, seed), 1e-6).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }

    #[test]
    fn paneitz_scales_constants(which in 0usize..3, n in 5usize..=7, c in -3.0f64..3.0, pt in 0u64..1000) {
        let (name, p) = [("sphere", params(&[("r", 1.3)])), ("hyperbolic", params(&[])), ("flat_torus", params(&[]))][which].clone();
        let e = builtin_metric(name, n, &p).unwrap();
        let want = (n as f64 - 4.0) / 2.0 * e.expected.q.unwrap() * c;
        for x in sample_points(&e.chart, 2, pt) {
            let got = paneitz_apply(&e.chart, &Expr::from_f64(c), &x).unwrap();
            prop_assert!(rel(got, want) <= 1e-9, "{name}{n}: {got} vs {want}");
        }
    }

    #[test]
    fn gauss_equations_at_random_parameters(which in 0usize..3, n in 3usize..=6, s in 0.2f64..0.8, pt in 0u64..1000) {
        let (name, p) = match which {
            0 => ("round_sphere_in_rn1", params(&[("r", 0.5 + 3.0 * s)])),
            1 => ("clifford_in_sn1", params(&[("m", 1.0 + ((n - 2) as f64 * s).floor()), ("r", s)])),
            _ => ("geodesic_sphere_in_hn1", params(&[("rho", 2.0 * s)])),
        };
        let im = builtin_immersion(name, n, &p).unwrap();
        let pts = sample_points(im.induced_chart().unwrap(), 3, pt);
        let r = im.gauss_residuals_tol(&pts, 1e-7).unwrap();
        prop_assert!(r.pass, "{name}{n}: {r:?}");
        // The lambda spectrum is the Ricci spectrum of the induced metric.
        for x in &pts {
            let sd = im.fundamental_forms(x).unwrap();
            let b = CurvatureBundle::compute(im.induced_chart().unwrap(), x, 2).unwrap();
            let eig = generalized_eigenvalues(&b.ricci, &b.metric).unwrap().eigenvalues;
            let mut lam = sd.lambda.clone();
            lam.sort_by(f64::total_cmp);
            for (a, b) in lam.iter().zip(&eig) {
                prop_assert!(rel(*a, *b) <= 1e-7, "{lam:?} vs {eig:?}");
            }
        }
    }

    #[test]
    fn schoen_never_inverts(a in -0.15f64..0.15, b in -0.15f64..0.15, k in 1i128..3) {
        let chart = closed_chart("circle_times_sphere", 3, &params(&[("T", 2.0 * PI)])).unwrap();
        let t = Expr::coord(0);
        let f = t.scale_by(k.into()).sin().mul(&Expr::from_f64(a)).add(&t.cos().mul(&Expr::coord(1).cos()).mul(&Expr::from_f64(b)));
        let r = schoen_check(&chart, &f, 10).unwrap();
        prop_assert!(r.lhs <= r.rhs + 1e-8 * r.scale, "{r:?}");
    }
}
