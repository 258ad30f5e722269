use super::*;
use proptest::prelude::*;

fn p(src: &str, coords: &[&str]) -> Expr {
    parse_expr(src, coords, &[]).unwrap()
}

fn ev(e: &Expr, x: &[f64]) -> f64 {
    eval_expr(e, x, &ParamValues::new()).unwrap()
}

#[test]
fn parse_examples() {
    let e = p("4/(1+x1^2+x2^2)^2", &["x1", "x2"]);
    assert_eq!(ev(&e, &[0.0, 0.0]), 4.0);
    assert_eq!(ev(&p("sin(t)^2", &["t"]), &[0.0]), 0.0);
    let e = parse_expr("r^2*sin(th)^2", &["th", "ph"], &["r"]).unwrap();
    let mut vals = ParamValues::new();
    vals.insert("r".into(), 2.0);
    let v = eval_expr(&e, &[std::f64::consts::FRAC_PI_2, 0.3], &vals).unwrap();
    assert!((v - 4.0).abs() < 1e-15);
}

#[test]
fn precedence() {
    // power binds tighter than unary minus
    assert_eq!(ev(&p("-x^2", &["x"]), &[3.0]), -9.0);
    assert_eq!(ev(&p("2*3^2", &[]), &[]), 18.0);
    assert_eq!(ev(&p("8/2/2", &[]), &[]), 2.0);
    assert_eq!(ev(&p("1-2-3", &[]), &[]), -4.0);
    assert_eq!(ev(&p("2^-1", &[]), &[]), 0.5);
    assert_eq!(ev(&p("2^3^2", &[]), &[]), 512.0);
}

#[test]
fn parse_errors() {
    assert!(matches!(parse_expr("1 + y", &["x"], &[]), Err(ExprError::UnknownIdentifier { offset: 4, .. })));
    assert!(matches!(parse_expr("1/", &[], &[]), Err(ExprError::EmptyDenominator { offset: 1 })));
    assert!(matches!(parse_expr("(1/)", &[], &[]), Err(ExprError::EmptyDenominator { .. })));
    assert!(matches!(parse_expr("1 + * 2", &[], &[]), Err(ExprError::Syntax { offset: 4, .. })));
    assert!(matches!(parse_expr("", &[], &[]), Err(ExprError::Syntax { .. })));
    assert!(matches!(parse_expr("x^y", &["x", "y"], &[]), Err(ExprError::Syntax { .. })));
    assert!(matches!(parse_expr("foo(1)", &[], &[]), Err(ExprError::UnknownIdentifier { .. })));
    assert!(matches!(parse_expr("(1", &[], &[]), Err(ExprError::Syntax { .. })));
}

#[test]
fn exact_literals() {
    assert_eq!(p("0.25", &[]).as_rational(), Some(Rational::new(1, 4)));
    assert_eq!(p("1e3", &[]).as_rational(), Some(Rational::from_integer(1000)));
    assert_eq!(p("x^(3/2)", &["x"]).to_string(), "x0^(3/2)");
}

#[test]
fn diff_examples() {
    let x = Expr::coord(0);
    assert_eq!(diff_expr(&x.powi(2), 0), Expr::int(2).mul(&x));
    let e = p("4/(1+x^2)^2", &["x"]);
    let d = diff_expr(&e, 0);
    assert!((ev(&d, &[1.0]) + 2.0).abs() < 1e-14);
    // finite-difference oracle, central stencil
    let h = 1e-5;
    let fd = (ev(&e, &[1.0 + h]) - ev(&e, &[1.0 - h])) / (2.0 * h);
    assert!((fd - ev(&d, &[1.0])).abs() < 1e-8);
    assert_eq!(ev(&diff_expr(&p("sin(t)", &["t"]), 0), &[0.0]), 1.0);
    assert!(diff_expr(&p("sin(t)", &["t"]), 1).is_zero());
}

#[test]
fn eval_examples() {
    assert_eq!(ev(&Expr::int(7), &[1.0, 2.0]), 7.0);
    assert_eq!(ev(&p("exp(0)", &[]), &[]), 1.0);
    let err = eval_expr(&p("1/x", &["x"]), &[0.0], &ParamValues::new()).unwrap_err();
    match err {
        ExprError::Domain { subexpr, .. } => assert_eq!(subexpr, "1/x0"),
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        eval_expr(&p("log(x)", &["x"]), &[-1.0], &ParamValues::new()),
        Err(ExprError::Domain { .. })
    ));
    assert!(matches!(
        eval_expr(&p("x^(1/2)", &["x"]), &[-1.0], &ParamValues::new()),
        Err(ExprError::Domain { .. })
    ));
    let tape = Tape::compile(&[p("x", &["x"])], 1).unwrap();
    assert!(matches!(
        tape.eval(&[1.0, 2.0], &ParamValues::new()),
        Err(ExprError::PointDimension { expected: 1, got: 2 })
    ));
    assert!(matches!(
        eval_expr(&parse_expr("a", &[], &["a"]).unwrap(), &[], &ParamValues::new()),
        Err(ExprError::UnboundParam(_))
    ));
    assert!(matches!(Tape::compile(&[Expr::coord(3)], 2), Err(ExprError::CoordOutOfRange { index: 3, dim: 2 })));
}

#[test]
fn simplify_examples() {
    let s = |src: &str| simplify_expr(&p(src, &["x", "y"]));
    assert_eq!(s("0*x + 1*y"), Expr::coord(1));
    assert_eq!(s("x^2 * x^3"), Expr::coord(0).powi(5));
    assert_eq!(s("(1+0)^2"), Expr::one());
    assert_eq!(s("x - x"), Expr::zero());
    assert_eq!(s("x + x"), Expr::int(2).mul(&Expr::coord(0)));
}

#[test]
fn hash_consing_shares_structure() {
    let a = p("sin(x)*y + 1", &["x", "y"]);
    let b = simplify_expr(&p("1 + y*sin(x)", &["x", "y"]));
    assert_eq!(simplify_expr(&a), b);
    assert_eq!(Expr::coord(2).coord_mask(), 0b100);
}

#[test]
fn params_bind_and_list() {
    let e = parse_expr("a*x + b", &["x"], &["a", "b"]).unwrap();
    assert_eq!(e.params().iter().map(|s| s.to_string()).collect::<Vec<_>>(), ["a", "b"]);
    let mut v = ParamValues::new();
    v.insert("a".into(), 2.0);
    v.insert("b".into(), 3.0);
    let bound = e.bind_params(&v);
    assert!(bound.params().is_empty());
    assert_eq!(ev(&bound, &[1.5]), 6.0);
}

// Random expressions are produced as source text so that the parser builds
// raw trees and simplification has real work to do. Every construction keeps
// its argument inside the real domain.
fn arb_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(|i| ["x", "y", "z"][i].to_string()),
        (-5i32..6).prop_map(|k| format!("({k})")),
        (1i32..9, 1i32..9).prop_map(|(a, b)| format!("({a}/{b})")),
        Just("0".to_string()),
        Just("1".to_string()),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a}) / (2 + sin({b}))")),
            (inner.clone(), 1u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), 1i32..4, 1i32..4).prop_map(|(a, n, d)| format!("(1 + ({a})^2)^({n}/{d})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{a}*{b}")),
            inner.clone().prop_map(|a| format!("-({a})")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("log(2 + cos({a}))")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.prop_map(|a| format!("tan(sin({a})/2)")),
        ]
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

const COORDS: [&str; 3] = ["x", "y", "z"];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn simplify_preserves_value(src in arb_source(), pt in prop::array::uniform3(-1.5f64..1.5)) {
        let e = p(&src, &COORDS);
        let s = simplify_expr(&e);
        let (a, b) = (ev(&e, &pt), ev(&s, &pt));
        prop_assert!(close(a, b, 1e-12), "{src}: {a} vs {b} (simplified {s})");
    }

    #[test]
    fn print_parse_round_trip(src in arb_source(), pt in prop::array::uniform3(-1.5f64..1.5)) {
        let e = p(&src, &COORDS);
        let names: Vec<String> = COORDS.iter().map(|c| c.to_string()).collect();
        for form in [e.clone(), simplify_expr(&e)] {
            let printed = form.named(&names).to_string();
            let back = p(&printed, &COORDS);
            prop_assert!(close(ev(&form, &pt), ev(&back, &pt), 1e-12), "{printed}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn derivative_matches_finite_difference(src in arb_source(), pt in prop::array::uniform3(-1.0f64..1.0), i in 0usize..3) {
        let e = simplify_expr(&p(&src, &COORDS));
        let d = diff_expr(&e, i);
        let scale = pt[i].abs().max(1.0);
        let h = 1e-4 * scale;
        let at = |t: f64| { let mut q = pt; q[i] += t; ev(&e, &q) };
        let fd = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
        let exact = ev(&d, &pt);
        // magnitude of the function bounds the roundoff in the stencil
        let noise = 1e-12 * [at(2.0*h), at(h), at(-h), at(-2.0*h)].iter().fold(0.0f64, |m, v| m.max(v.abs())) / h;
        prop_assert!((fd - exact).abs() <= 1e-7 * exact.abs().max(1.0) + 10.0 * noise,
            "{src} d{i}: fd {fd} vs {exact}");
    }

    #[test]
    fn mixed_partials_commute(src in arb_source(), pt in prop::array::uniform3(-1.0f64..1.0), i in 0usize..3, j in 0usize..3) {
        let e = simplify_expr(&p(&src, &COORDS));
        let mut dd = Differentiator::new();
        let (di, dj) = (dd.d(&e, i), dd.d(&e, j));
        let a = dd.d(&di, j);
        let b = dd.d(&dj, i);
        prop_assert!(close(ev(&a, &pt), ev(&b, &pt), 1e-10));
    }
}
