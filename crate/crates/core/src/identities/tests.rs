use super::*;
use crate::catalog::{builtin_metric, random_lcf_metric};
use crate::expr::{diff_expr, eval_expr, Expr, ParamValues};
use crate::geometry::{diagonal_metric, CoordSpec};

fn params(kv: &[(&str, f64)]) -> ParamValues {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn chart(name: &str, n: usize, kv: &[(&str, f64)]) -> MetricChart {
    builtin_metric(name, n, &params(kv)).unwrap().chart
}

fn product_s2_s4() -> MetricChart {
    chart("product_spheres", 6, &[("k", 2.0), ("r1", 1.0), ("r2", 1.7)])
}

fn assert_pass(r: &IdentityReport) {
    assert!(r.pass, "{r:?}");
}

/// Stereographic unit sphere times `e^{2εf}`: conformally flat, Ricci
/// positive for small ε.
fn perturbed_sphere(n: usize, eps: f64) -> MetricChart {
    let r2 = Expr::sum((0..n).map(|i| Expr::coord(i).powi(2)));
    let base = Expr::int(4).div(&Expr::one().add(&r2).powi(2));
    let f = Expr::sum((0..n).map(|i| Expr::coord(i).scale_by((i as i128 + 1).into()).sin()));
    let factor = base.mul(&Expr::from_f64(2.0 * eps).mul(&f).exp());
    let coords = (1..=n).map(|i| CoordSpec::range(&format!("x{i}"), -1.0, 1.0)).collect();
    MetricChart::new("perturbed_sphere", coords, diagonal_metric(vec![factor; n]), ParamValues::new()).unwrap()
}

#[test]
fn sphere_everything_vanishes() {
    let s = chart("sphere", 5, &[]);
    let pts = sample_points(&s, 4, 1);
    for v in [Lemma21Variant::General, Lemma21Variant::Lcf, Lemma21Variant::DivWeylFree] {
        let r = verify_lemma21(&s, &pts, v, DEFAULT_TOLERANCE).unwrap();
        assert_pass(&r);
        assert!(r.max_abs_residual < 1e-8, "{r:?}");
    }
    assert_pass(&verify_schouten_div(&s, &pts, DEFAULT_TOLERANCE).unwrap());
    assert_pass(&verify_bochner(&s, &pts, DEFAULT_TOLERANCE).unwrap());
    let e = verify_eigen_identity(&s, &pts, DEFAULT_TOLERANCE).unwrap();
    assert_pass(&e);
    assert!(e.max_abs_residual < 1e-9);
    let b = verify_pointwise_bounds(&s, &pts, DEFAULT_TOLERANCE).unwrap();
    assert!(b.gradient_min_slack.abs() < 1e-10, "{b:?}");
    assert!(b.pass, "{b:?}");
}

#[test]
fn euclidean_trivial() {
    let e = chart("euclidean", 4, &[]);
    let pts = sample_points(&e, 3, 2);
    for r in [
        verify_schouten_div(&e, &pts, DEFAULT_TOLERANCE).unwrap(),
        verify_div_weyl(&e, &pts, DEFAULT_TOLERANCE).unwrap(),
        verify_commutation(&e, &pts, DEFAULT_TOLERANCE).unwrap(),
    ] {
        assert_pass(&r);
        assert_eq!(r.max_abs_residual, 0.0);
    }
}

#[test]
fn random_lcf_suite() {
    let c = random_lcf_metric(6, 11, 0.1).unwrap();
    let pts = sample_points(&c, 4, 3);
    for v in [Lemma21Variant::General, Lemma21Variant::Lcf, Lemma21Variant::DivWeylFree] {
        let r = verify_lemma21(&c, &pts, v, 1e-6).unwrap();
        assert_pass(&r);
        assert!(r.scale > 1e-3, "nontrivial input: {r:?}");
    }
    assert_pass(&verify_schouten_div(&c, &pts, 1e-7).unwrap());
    assert_pass(&verify_div_weyl(&c, &pts, 1e-7).unwrap());
    assert_pass(&verify_commutation(&c, &pts, 1e-6).unwrap());
    assert_pass(&verify_eigen_identity(&c, &pts, 1e-7).unwrap());
}

#[test]
fn random_lcf_bochner() {
    let c = random_lcf_metric(4, 5, 0.1).unwrap();
    let pts = sample_points(&c, 2, 4);
    let r = verify_bochner(&c, &pts, 1e-6).unwrap();
    assert_pass(&r);
    assert!(r.scale > 1e-3);
}

#[test]
fn cylinder_algebraic_terms_cancel() {
    let c = chart("cylinder", 6, &[]);
    let pts = sample_points(&c, 5, 5);
    let r = verify_lemma21(&c, &pts, Lemma21Variant::General, 1e-8).unwrap();
    assert_pass(&r);
    assert!(r.max_abs_residual < 1e-8, "{r:?}");
    assert!(r.scale > 1.0);
    let e = verify_eigen_identity(&c, &pts, 1e-9).unwrap();
    assert_pass(&e);
    assert!(e.scale > 1.0, "{e:?}");
    // The cylinder is conformally flat but not Ricci-parallel-free of Weyl in
    // the lcf sense only if W vanishes, which it does.
    assert_pass(&verify_lemma21(&c, &pts, Lemma21Variant::Lcf, 1e-8).unwrap());
}

#[test]
fn product_nonzero_weyl_divergence_terms() {
    let c = product_s2_s4();
    let pts = sample_points(&c, 3, 6);
    let r = verify_div_weyl(&c, &pts, 1e-7).unwrap();
    assert_pass(&r);
    let m = verify_commutation(&c, &pts, 1e-6).unwrap();
    assert_pass(&m);
    assert!(m.scale > 1e-3, "{m:?}");
    // Weyl is nonzero here, so the lcf variant must refuse.
    assert!(matches!(
        verify_lemma21(&c, &pts, Lemma21Variant::Lcf, 1e-6),
        Err(IdentityError::Precondition { .. })
    ));
    assert_pass(&verify_lemma21(&c, &pts, Lemma21Variant::General, 1e-6).unwrap());
}

#[test]
fn dimension_errors() {
    let s3 = chart("sphere", 3, &[]);
    let p = sample_points(&s3, 1, 0);
    assert!(matches!(
        verify_lemma21(&s3, &p, Lemma21Variant::General, 1e-6),
        Err(IdentityError::Dimension { .. })
    ));
    assert!(matches!(verify_div_weyl(&s3, &p, 1e-6), Err(IdentityError::Dimension { .. })));
    let s2 = chart("sphere", 2, &[]);
    assert!(verify_schouten_div(&s2, &sample_points(&s2, 1, 0), 1e-6).is_err());
    assert!(verify_eigen_identity(&s2, &sample_points(&s2, 1, 0), 1e-6).unwrap().pass);
}

#[test]
fn bochner_on_sine() {
    // u = sin x₁ on flat R³: ½Δ|∇u|² = −cos 2x₁ and the right side is
    // sin² x₁ − cos² x₁.
    let u = Expr::coord(0).sin();
    let grad: Vec<Expr> = (0..3).map(|i| diff_expr(&u, i)).collect();
    let g2 = Expr::sum(grad.iter().map(|d| d.mul(d)));
    let lap = |f: &Expr| Expr::sum((0..3).map(|i| diff_expr(&diff_expr(f, i), i)));
    let lhs = lap(&g2).scale_by((1, 2).into());
    let hess_sq = Expr::sum((0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| {
        let h = diff_expr(&grad[i], j);
        h.mul(&h)
    }));
    let lap_u = lap(&u);
    let cross = Expr::sum((0..3).map(|i| grad[i].mul(&diff_expr(&lap_u, i))));
    let rhs = hess_sq.add(&cross);
    let none = ParamValues::new();
    for x in [0.1, 0.7, 1.3, 2.9] {
        let p = [x, 0.4, -0.2];
        let l = eval_expr(&lhs, &p, &none).unwrap();
        let r = eval_expr(&rhs, &p, &none).unwrap();
        assert!((l + (2.0 * x).cos()).abs() < 1e-12);
        assert!((r - (x.sin().powi(2) - x.cos().powi(2))).abs() < 1e-12);
    }
}

#[test]
fn lemma23_on_perturbed_sphere() {
    let c = perturbed_sphere(4, 0.02);
    let pts = sample_points(&c, 6, 9);
    let b = verify_pointwise_bounds(&c, &pts, 1e-6).unwrap();
    assert!(b.gradient_min_slack >= -1e-10, "{b:?}");
    assert!(b.laplacian_points > 0, "{b:?}");
    assert!(b.laplacian_min_slack.unwrap() >= -1e-8, "{b:?}");
    assert!(b.pass);
}

#[test]
fn dispatcher_knows_every_name() {
    let s = chart("sphere", 4, &[]);
    let p = sample_points(&s, 1, 0);
    for name in IDENTITY_NAMES {
        assert!(verify_by_name(name, &s, &p, 1e-6).unwrap().unwrap().pass, "{name}");
    }
    assert!(verify_by_name("nope", &s, &p, 1e-6).is_none());
}

#[test]
fn sample_points_deterministic_and_central() {
    let s = chart("sphere", 3, &[]);
    let a = sample_points(&s, 10, 42);
    assert_eq!(a, sample_points(&s, 10, 42));
    for p in &a {
        for (x, c) in p.iter().zip(&s.coords) {
            let mid = 0.5 * (c.lo + c.hi);
            assert!((x - mid).abs() <= 0.4 * (c.hi - c.lo) + 1e-12);
        }
    }
}
