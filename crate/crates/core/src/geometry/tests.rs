use super::*;
use crate::expr::parse_expr;
use crate::tensor::{sym_eigen, Symmetries};

fn names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn chart_from(name: &str, coords: Vec<CoordSpec>, entries: &[&str]) -> MetricChart {
    let names: Vec<String> = coords.iter().map(|c| c.name.clone()).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let metric = entries.iter().map(|s| parse_expr(s, &refs, &[]).unwrap()).collect();
    MetricChart::new(name, coords, metric, ParamValues::new()).unwrap()
}

/// Round sphere of radius 1 (K = 1) or hyperbolic ball (K = −1) in
/// stereographic coordinates.
fn space_form(n: usize, k: i32) -> MetricChart {
    let nm = names(n);
    let r2 = nm.iter().map(|x| format!("{x}^2")).collect::<Vec<_>>().join(" + ");
    let sign = if k > 0 { "+" } else { "-" };
    let f = format!("4/(1 {sign} ({r2}))^2");
    let h = if k > 0 { 1.0 } else { 0.9 / (n as f64).sqrt() };
    let coords = nm.iter().map(|x| CoordSpec::range(x, -h, h)).collect();
    let mut entries = vec!["0".to_string(); n * n];
    for i in 0..n {
        entries[i * n + i] = f.clone();
    }
    let refs: Vec<&str> = entries.iter().map(|s| s.as_str()).collect();
    chart_from("space_form", coords, &refs)
}

fn assert_close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol * b.abs().max(1.0), "{a} vs {b}");
}

#[test]
fn sphere2_at_origin() {
    let c = space_form(2, 1);
    let b = c.bundle_at_order(&[0.0, 0.0], 2).unwrap();
    assert!(b.gamma.max_abs() < 1e-15);
    assert_close(b.riemann.get(&[0, 1, 0, 1]), 16.0, 1e-14);
    assert_close(b.scalar, 2.0, 1e-14);
    let ric = crate::tensor::contract(&b.riemann, 1, 3, None, Some(&b.inverse_metric)).unwrap();
    // Ric = (n−1) K g with g = 4δ
    assert_close(ric.get(&[0, 0]), 4.0, 1e-14);
    let e = crate::tensor::generalized_eigenvalues(&b.ricci, &b.metric).unwrap();
    for v in e.eigenvalues {
        assert_close(v, 1.0, 1e-14);
    }
}

#[test]
fn sphere6_invariants_away_from_origin() {
    let c = space_form(6, 1);
    let p = [0.1, -0.2, 0.05, 0.3, -0.1, 0.2];
    let b = c.curvature_bundle(&p).unwrap();
    assert_close(b.scalar, 30.0, 1e-10);
    assert_close(b.q.unwrap(), 24.0, 1e-9);
    assert!(b.weyl.max_abs() < 1e-9 * b.riemann.max_abs());
    assert!(b.grad_r.as_ref().unwrap().max_abs() < 1e-9);
    assert!(b.grad_q.as_ref().unwrap().max_abs() < 1e-7);
    assert!(b.bach.as_ref().unwrap().max_abs() < 1e-7);
    assert!(b.lap_r.unwrap().abs() < 1e-8);
    assert!(b.nabla_ricci.as_ref().unwrap().max_abs() < 1e-9);
    assert_close(b.ricci_norm_sq, 6.0 * 25.0, 1e-10);
}

#[test]
fn hyperbolic_sectional_curvature() {
    let c = space_form(4, -1);
    let b = c.bundle_at_order(&[0.0; 4], 2).unwrap();
    // R_1212 = K (g11 g22 − g12²) with g = 4δ
    assert_close(b.riemann.get(&[0, 1, 0, 1]), -16.0, 1e-13);
    assert_close(b.scalar, -12.0, 1e-13);
    assert_close(c.q_curvature(&[0.05, 0.0, -0.1, 0.1]).unwrap(), 6.0, 1e-9);
}

#[test]
fn flat_torus_is_flat() {
    let coords = (1..=3).map(|i| CoordSpec::periodic(&format!("x{i}"), 2.0 * std::f64::consts::PI)).collect();
    let c = chart_from("torus", coords, &["1", "0", "0", "0", "1", "0", "0", "0", "1"]);
    assert_eq!(c.active_count(), 0);
    let b = c.curvature_bundle(&[0.3, 1.0, 5.0]).unwrap();
    assert_eq!(b.scalar, 0.0);
    assert_eq!(b.q, Some(0.0));
    assert_eq!(b.ricci.max_abs(), 0.0);
    assert!(b.bach.is_none());
    assert!(b.bach_absent_reason.is_some());
}

/// A dense, non-conformally-flat metric used to compare the two paths.
fn dense3() -> MetricChart {
    let coords = (1..=3).map(|i| CoordSpec::range(&format!("x{i}"), -0.5, 0.5)).collect();
    chart_from(
        "dense",
        coords,
        &[
            "2 + sin(x1*x2)", "x3/5", "0.1*cos(x1)",
            "x3/5", "1 + x1^2", "x2*x3/10",
            "0.1*cos(x1)", "x2*x3/10", "exp(x2/3)",
        ],
    )
}

#[test]
fn symbolic_and_jet_paths_agree() {
    let c = dense3();
    let p = [0.2, -0.1, 0.3];
    let b = c.bundle_at_order(&p, 2).unwrap();
    let sym = c.symbolic().unwrap();
    let gamma = sym.gamma.eval(&p).unwrap();
    let ric = sym.ricci.eval(&p).unwrap();
    let riem = c.riemann().unwrap().eval(&p).unwrap();
    let r = crate::expr::eval_expr(&sym.scalar, &p, &ParamValues::new()).unwrap();
    for (a, e) in [(&b.gamma, &gamma), (&b.ricci, &ric), (&b.riemann, &riem)] {
        assert!(a.sub(e).max_abs() < 1e-12 * e.max_abs().max(1.0));
    }
    assert_close(b.scalar, r, 1e-12);
    let ginv = crate::tensor::invert(&b.metric.data, 3).unwrap();
    for (k, v) in ginv.iter().enumerate() {
        let s = crate::expr::eval_expr(&sym.inverse_metric[k], &p, &ParamValues::new()).unwrap();
        assert_close(s, *v, 1e-12);
    }
}

#[test]
fn bundle_symmetries() {
    let c = dense3();
    let b = c.bundle_at_order(&[0.1, 0.2, -0.3], 3).unwrap();
    b.riemann.stamp(&Symmetries::riemann(), 1e-10).unwrap();
    let n = 3;
    let scale = b.riemann.max_abs();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let s = b.riemann.get(&[i, j, k, l]) + b.riemann.get(&[j, k, i, l]) + b.riemann.get(&[k, i, j, l]);
                    assert!(s.abs() < 1e-10 * scale);
                }
            }
        }
    }
    // n = 3: Weyl vanishes identically
    assert_eq!(b.weyl.max_abs(), 0.0);
    let tr: f64 = (0..n * n).map(|k| b.inverse_metric.data[k] * b.traceless_ricci.data[k]).sum();
    assert!(tr.abs() < 1e-12 * b.ricci.max_abs());
}

#[test]
fn weyl_trace_free_on_product() {
    // S²×S² style product is not conformally flat in general; use S²(1)×S²(2).
    let c = chart_from(
        "s2s2",
        vec![
            CoordSpec::range("a", 0.3, 2.8),
            CoordSpec::periodic("b", 2.0 * std::f64::consts::PI),
            CoordSpec::range("c", 0.3, 2.8),
            CoordSpec::periodic("d", 2.0 * std::f64::consts::PI),
        ],
        &[
            "1", "0", "0", "0",
            "0", "sin(a)^2", "0", "0",
            "0", "0", "4", "0",
            "0", "0", "0", "4*sin(c)^2",
        ],
    );
    let b = c.curvature_bundle(&[1.0, 0.5, 1.2, 2.0]).unwrap();
    assert!(b.weyl.max_abs() > 0.1);
    for (a, bb) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)] {
        let t = crate::tensor::contract(&b.weyl, a, bb, None, Some(&b.inverse_metric)).unwrap();
        assert!(t.max_abs() < 1e-10, "trace ({a},{bb})");
    }
    // scalar curvature 2/1 + 2/4
    assert_close(b.scalar, 2.5, 1e-12);
    assert!(b.grad_q.as_ref().unwrap().max_abs() < 1e-9);
}

fn fd4(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h)
}

#[test]
fn gradients_match_finite_differences() {
    let c = dense3();
    let p = [0.1, -0.2, 0.15];
    let b = c.curvature_bundle(&p).unwrap();
    let h = 1e-3;
    for k in 0..3 {
        let at = |t: f64| {
            let mut q = p;
            q[k] += t;
            c.bundle_at_order(&q, 4).unwrap()
        };
        let dq = fd4(|t| at(t).q.unwrap(), h);
        let dr = fd4(|t| at(t).scalar, h);
        assert_close(b.grad_q.as_ref().unwrap().data[k], dq, 1e-6);
        assert_close(b.grad_r.as_ref().unwrap().data[k], dr, 1e-8);
    }
}

#[test]
fn lap_r_matches_symbolic_laplacian() {
    let c = dense3();
    let p = [-0.2, 0.1, 0.05];
    let b = c.bundle_at_order(&p, 4).unwrap();
    let r = c.symbolic().unwrap().scalar.clone();
    let lap = laplacian_scalar(&c, &r, &p).unwrap();
    assert_close(b.lap_r.unwrap(), lap, 1e-10);
}

#[test]
fn laplacian_examples() {
    let coords = (1..=3).map(|i| CoordSpec::range(&format!("x{i}"), -1.0, 1.0)).collect();
    let e3 = chart_from("euclid", coords, &["1", "0", "0", "0", "1", "0", "0", "0", "1"]);
    let f = parse_expr("x1^2", &["x1", "x2", "x3"], &[]).unwrap();
    assert_eq!(laplacian_scalar(&e3, &f, &[0.3, 0.1, 0.2]).unwrap(), 2.0);
    let coords = vec![CoordSpec::periodic("t", 2.0 * std::f64::consts::PI), CoordSpec::periodic("s", 1.0)];
    let torus = chart_from("torus", coords, &["1", "0", "0", "1"]);
    let f = parse_expr("sin(t)", &["t", "s"], &[]).unwrap();
    let t = std::f64::consts::FRAC_PI_3;
    assert_close(laplacian_scalar(&torus, &f, &[t, 0.0]).unwrap(), -t.sin(), 1e-15);
    let s = space_form(4, 1);
    let r = s.symbolic().unwrap().scalar.clone();
    assert!(laplacian_scalar(&s, &r, &[0.1, 0.2, 0.0, -0.1]).unwrap().abs() < 1e-9);
}

#[test]
fn covariant_derivative_examples() {
    let c = dense3();
    let p = [0.2, 0.1, -0.2];
    let g = SymTensor { dim: 3, rank: 2, comps: c.metric.clone() };
    let ng = covariant_derivative(&c, &g).unwrap().eval(&p).unwrap();
    assert!(ng.max_abs() < 1e-12);
    let coords = (1..=3).map(|i| CoordSpec::range(&format!("x{i}"), -1.0, 1.0)).collect();
    let e3 = chart_from("euclid", coords, &["1", "0", "0", "0", "1", "0", "0", "0", "1"]);
    let x1 = SymTensor::scalar(crate::expr::Expr::coord(0), 3);
    let d = covariant_derivative(&e3, &x1).unwrap().eval(&p).unwrap();
    assert_eq!(d.data, vec![1.0, 0.0, 0.0]);
}

#[test]
fn nabla_ricci_matches_symbolic_covariant_derivative() {
    let c = dense3();
    let p = [0.05, 0.2, -0.1];
    let b = c.bundle_at_order(&p, 3).unwrap();
    let ric = c.symbolic().unwrap().ricci.clone();
    let sym = covariant_derivative(&c, &ric).unwrap().eval(&p).unwrap();
    let jet = b.nabla_ricci.unwrap();
    assert!(sym.sub(&jet).max_abs() < 1e-10 * sym.max_abs().max(1.0));
}

#[test]
fn eigen_of_sphere_ricci() {
    let c = space_form(3, 1);
    let b = c.bundle_at_order(&[0.0; 3], 2).unwrap();
    let e = sym_eigen(&b.ricci).unwrap();
    // Ric = 2g = 8δ at the origin
    for v in e.eigenvalues {
        assert_close(v, 8.0, 1e-13);
    }
}

#[test]
fn chart_validation() {
    let coords = || vec![CoordSpec::range("x", -1.0, 1.0), CoordSpec::range("y", -1.0, 1.0)];
    let p = |s: &str| parse_expr(s, &["x", "y"], &[]).unwrap();
    let bad = MetricChart::new("a", coords(), vec![p("1"), p("x"), p("0"), p("1")], ParamValues::new());
    assert!(matches!(bad, Err(GeometryError::NotSymmetric { .. })));
    let bad = MetricChart::new("a", coords(), vec![p("x"), p("0"), p("0"), p("1")], ParamValues::new());
    assert!(matches!(bad, Err(GeometryError::NotPositiveDefinite { .. })));
    let bad = MetricChart::new(
        "a",
        vec![CoordSpec::periodic("x", 1.0), CoordSpec::range("y", -1.0, 1.0)],
        vec![p("2 + sin(x)"), p("0"), p("0"), p("1")],
        ParamValues::new(),
    );
    assert!(matches!(bad, Err(GeometryError::NotPeriodic { .. })));
    let bad = MetricChart::new("a", coords(), vec![p("1")], ParamValues::new());
    assert!(matches!(bad, Err(GeometryError::InvalidChart(_))));
    let ok = MetricChart::new("a", coords(), vec![p("1"), p("0"), p("0"), p("1")], ParamValues::new()).unwrap();
    assert!(matches!(ok.curvature_bundle(&[2.0, 0.0]), Err(GeometryError::OutsideDomain { .. })));
    assert!(matches!(ok.curvature_bundle(&[0.0]), Err(GeometryError::PointDimension { .. })));
    assert!(matches!(ok.q_curvature(&[0.0, 0.0]), Err(GeometryError::DimensionTooSmall { .. })));
}

#[test]
fn params_are_bound() {
    let coords = vec![CoordSpec::range("x", -1.0, 1.0), CoordSpec::range("y", -1.0, 1.0)];
    let a = parse_expr("a^2", &["x", "y"], &["a"]).unwrap();
    let z = crate::expr::Expr::zero();
    let mut params = ParamValues::new();
    params.insert("a".into(), 3.0);
    let c = MetricChart::new("p", coords.clone(), vec![a.clone(), z.clone(), z.clone(), a.clone()], params).unwrap();
    assert_eq!(c.metric_at(&[0.0, 0.0]).unwrap().data, vec![9.0, 0.0, 0.0, 9.0]);
    let missing = MetricChart::new("p", coords, vec![a.clone(), z.clone(), z, a], ParamValues::new());
    assert!(matches!(missing, Err(GeometryError::Expr(crate::expr::ExprError::UnboundParam(_)))));
}
