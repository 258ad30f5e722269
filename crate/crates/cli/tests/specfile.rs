use qcurv::expr::{eval_expr, ParamValues};
use qcurv_cli::specfile::{ManifoldSpec, SpecError};

fn data(name: &str) -> String {
    std::fs::read_to_string(format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn field_of(e: SpecError) -> String {
    match e {
        SpecError::Field { field, .. } => field,
        SpecError::Syntax { line, msg } => panic!("expected a field error, got line {line}: {msg}"),
    }
}

#[test]
fn round_sphere_spec() {
    let s = ManifoldSpec::parse(&data("round_s2.qspec")).unwrap();
    assert_eq!(s.name, "round_s2");
    assert_eq!(s.dim(), 2);
    assert!(s.coords[0].polar && !s.coords[0].periodic);
    assert!(s.coords[1].periodic);
    assert!((s.coords[1].hi - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(s.params["r"], 1.5);
    let chart = s.chart().unwrap();
    let none = ParamValues::new();
    let p = [0.7, 1.1];
    assert!((eval_expr(&chart.metric[0], &p, &none).unwrap() - 2.25).abs() < 1e-15);
    let g22 = eval_expr(&chart.metric[3], &p, &none).unwrap();
    assert!((g22 - 2.25 * 0.7f64.sin().powi(2)).abs() < 1e-15);
    assert!(chart.metric[1].is_zero() && chart.metric[2].is_zero());
}

#[test]
fn off_diagonal_entries_are_mirrored() {
    let text = "name = shear\n[coords]\nx = range 0 1\ny = range 0 1\n[metric]\ng11 = 2\ng12 = x/4\ng22 = 3\n";
    let chart = ManifoldSpec::parse(text).unwrap().chart().unwrap();
    let none = ParamValues::new();
    for k in [1, 2] {
        assert_eq!(eval_expr(&chart.metric[k], &[0.5, 0.1], &none).unwrap(), 0.125);
    }
}

#[test]
fn two_digit_indices_need_an_underscore() {
    let mut text = String::from("name = big\n[coords]\n");
    for i in 1..=10 {
        text.push_str(&format!("x{i} = periodic 1\n"));
    }
    text.push_str("[metric]\n");
    for i in 1..=10 {
        text.push_str(&format!("g{i}_{i} = 1\n"));
    }
    text.push_str("g1_10 = 0.1\n");
    let s = ManifoldSpec::parse(&text).unwrap();
    assert_eq!(s.metric[&(0, 9)], "0.1");
    let bad = text.replace("g1_10", "g110");
    assert_eq!(field_of(ManifoldSpec::parse(&bad).unwrap_err()), "metric.g110");
}

#[test]
fn lower_triangle_rejected() {
    let e = ManifoldSpec::parse(&data("bad_metric_key.qspec")).unwrap_err();
    assert_eq!(field_of(e), "metric.g21");
}

#[test]
fn field_errors_name_the_field() {
    let base = "name = t\n[coords]\nx = periodic 1\ny = periodic 1\n[metric]\ng11 = 1\ng22 = 1\n";
    let cases = [
        (base.replace("name = t", "name = t\ncolour = red"), "colour"),
        (base.replace("g22 = 1\n", ""), "metric.g2_2"),
        (base.replace("name = t", "name = t\ndim = 3"), "dim"),
        (base.replace("x = periodic 1", "x = circle 1"), "coords.x"),
        (base.replace("x = periodic 1", "x = range 2 1"), "coords.x"),
        (format!("{base}[conformal]\nf = x\nu = y\n"), "conformal.u"),
        (format!("{base}[conformal]\nconvention = weird\nu = 1\n"), "conformal.convention"),
        (format!("{base}[params]\nx = 2\n"), "params.x"),
        (format!("{base}[params]\nk = 1/0\n"), "params.k"),
        (format!("{base}[immersion]\nspace_form = 0\nposition = x, y, 0\nnormal = 0, 0, 1\n"), "metric"),
        (base.replace("name = t", "format = 2\nname = t"), "format"),
        (base.replace("name = t\n", ""), "name"),
    ];
    for (text, want) in cases {
        assert_eq!(field_of(ManifoldSpec::parse(&text).unwrap_err()), want, "{text}");
    }
}

#[test]
fn syntax_errors_carry_line_numbers() {
    let cases = [
        ("name = a\n[coords]\nx = periodic 1\n[extra]\n", 4),
        ("name = a\n[coords\n", 2),
        ("name = a\nname = b\n", 2),
        ("name = a\n[coords]\nx periodic 1\n", 3),
        ("name = a\n[coords]\n[coords]\n", 3),
    ];
    for (text, want) in cases {
        match ManifoldSpec::parse(text) {
            Err(SpecError::Syntax { line, .. }) => assert_eq!(line, want, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn comments_and_constant_expressions() {
    let text = "# header\nname = c # trailing\n[coords]\nt = periodic 2*pi  # circle\nz = polar\n[metric]\ng11 = 1\ng22 = 1\n";
    let s = ManifoldSpec::parse(text).unwrap();
    assert!((s.coords[0].hi - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    assert!(s.coords[1].polar && (s.coords[1].hi - std::f64::consts::PI).abs() < 1e-15);
}

#[test]
fn bad_expressions_report_their_entry() {
    let text = "name = e\n[coords]\nx = periodic 1\ny = periodic 1\n[metric]\ng11 = 1 + z\ng22 = 1\n";
    let s = ManifoldSpec::parse(text).unwrap();
    assert_eq!(field_of(s.chart().unwrap_err()), "metric.g1_1");
}

#[test]
fn conformal_section() {
    let s = ManifoldSpec::parse(&data("torus_conformal.qspec")).unwrap();
    let c = s.conformal.as_ref().unwrap();
    assert_eq!(c.convention, "paneitz_u");
    assert_eq!(s.conformal_factor().unwrap().unwrap().convention(), "paneitz_u");
    let f_only = "name = a\n[coords]\nx = periodic 1\ny = periodic 1\n[metric]\ng11 = 1\ng22 = 1\n[conformal]\nf = sin(x)\n";
    assert_eq!(ManifoldSpec::parse(f_only).unwrap().conformal.unwrap().convention, "exp");
}

#[test]
fn immersion_section() {
    let s = ManifoldSpec::parse(&data("sphere_in_r3.qspec")).unwrap();
    let im = s.immersion().unwrap();
    assert_eq!(im.c, 0);
    assert_eq!(im.position.len(), 3);
    // The induced metric of a radius-2 sphere.
    let chart = s.chart().unwrap();
    let g11 = eval_expr(&chart.metric[0], &[0.4, 0.3], &ParamValues::new()).unwrap();
    assert!((g11 - 4.0).abs() < 1e-12);
}
