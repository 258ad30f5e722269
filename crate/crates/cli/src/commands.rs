use std::f64::consts::PI;

use serde_json::{json, Value};

use qcurv::catalog::{
    builtin_immersion, builtin_metric, closed_chart, CatalogError, Expected, IMMERSION_NAMES, METRIC_NAMES,
};
use qcurv::conformal::{
    conformal_metric, q_conformal_check, schoen_check, verify_conformal_laws, yamabe_ode_solve, ConformalError,
    ConformalFactor,
};
use qcurv::expr::{parse_expr, ParamValues};
use qcurv::geometry::{CurvatureBundle, GeometryError, MetricChart};
use qcurv::hypersurface::{isoparametric_clifford_data, lambda_quantities, pinching_check, Immersion};
use qcurv::identities::{sample_points, verify_by_name, verify_pointwise_bounds, IdentityError, IDENTITY_NAMES};
use qcurv::quadrature::{parts_identity_check, rigidity_report};
use qcurv::simplexlab::{critical_points, dimension_constants, equality_family, simplex_min_search, SimplexError};
use qcurv::tensor::{generalized_eigenvalues, tensor_norm};

use crate::args::{Sampling, Source};
use crate::report::digest;
use crate::specfile::{make_factor, ManifoldSpec};

/// An input problem, reported with the flag or spec field it concerns.
#[derive(Debug, thiserror::Error)]
#[error("{field}: {msg}")]
pub struct CliError {
    pub field: String,
    pub msg: String,
}

pub fn input(field: &str, msg: impl ToString) -> CliError {
    CliError { field: field.to_string(), msg: msg.to_string() }
}

/// Results of one subcommand: parameters echoed back, results, verdict.
pub struct Outcome {
    pub input_digest: String,
    pub parameters: Value,
    pub results: Value,
    pub pass: bool,
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn params_of(list: &[(String, f64)]) -> ParamValues {
    list.iter().cloned().collect()
}

fn catalog_digest(kind: &str, name: &str, dim: usize, params: &ParamValues) -> String {
    let mut s = format!("{kind}={name}\ndim={dim}\n");
    for (k, v) in params {
        s.push_str(&format!("{k}={v:?}\n"));
    }
    digest(s.as_bytes())
}

struct Loaded {
    chart: MetricChart,
    expected: Option<Expected>,
    spec: Option<ManifoldSpec>,
    digest: String,
    label: Value,
}

fn read_spec(path: &std::path::Path) -> Result<(ManifoldSpec, String), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input("--spec", format!("{}: {e}", path.display())))?;
    let spec = ManifoldSpec::parse(&text).map_err(|e| input("--spec", e))?;
    Ok((spec, digest(text.as_bytes())))
}

fn catalog_selection(src: &Source) -> Result<(&str, usize, ParamValues), CliError> {
    let name = src.catalog.as_deref().ok_or_else(|| input("--spec", "give --spec FILE or --catalog NAME"))?;
    let dim = src.dim.ok_or_else(|| input("--dim", "required with --catalog"))?;
    Ok((name, dim, params_of(&src.params)))
}

fn catalog_error(e: CatalogError) -> CliError {
    match e {
        CatalogError::UnknownName(_) => input("--catalog", e),
        CatalogError::InvalidParam(_) => input("--param", e),
        CatalogError::NotClosed(_) => input("--catalog", e),
        CatalogError::Geometry(_) | CatalogError::Immersion(_) => input("--dim", e),
    }
}

/// The chart named by `--spec` or `--catalog`. With `closed`, catalog
/// entries use their closed angle chart.
fn load_chart(src: &Source, closed: bool) -> Result<Loaded, CliError> {
    if let Some(path) = &src.spec {
        if src.dim.is_some() || !src.params.is_empty() {
            return Err(input("--spec", "--dim and --param apply to catalog entries only"));
        }
        let (spec, d) = read_spec(path)?;
        let chart = spec.chart().map_err(|e| input("--spec", e))?;
        let label = json!({ "spec": path.display().to_string(), "name": spec.name });
        return Ok(Loaded { chart, expected: None, spec: Some(spec), digest: d, label });
    }
    let (name, dim, params) = catalog_selection(src)?;
    let entry = builtin_metric(name, dim, &params).map_err(catalog_error)?;
    let chart = if closed { closed_chart(name, dim, &params).map_err(catalog_error)? } else { entry.chart };
    let label = json!({ "catalog": name, "dim": dim, "params": params });
    Ok(Loaded {
        chart,
        expected: Some(entry.expected),
        spec: None,
        digest: catalog_digest("catalog", name, dim, &params),
        label,
    })
}

fn points(chart: &MetricChart, s: &Sampling) -> Result<Vec<Vec<f64>>, CliError> {
    if s.points == 0 {
        return Err(input("--points", "must be at least 1"));
    }
    Ok(sample_points(chart, s.points, s.seed))
}

fn geometry_error(e: GeometryError) -> CliError {
    input("metric", e)
}

fn coords_of(chart: &MetricChart) -> Vec<String> {
    chart.coords.iter().map(|c| c.name.clone()).collect()
}

fn check(name: &str, expected: Value, observed: f64, deviation: f64, tol: f64) -> (Value, bool) {
    let pass = deviation <= tol;
    (json!({ "name": name, "expected": expected, "worst": observed, "deviation": deviation, "pass": pass }), pass)
}

pub fn invariants(src: &Source, sampling: &Sampling, tol: f64) -> Result<Outcome, CliError> {
    let l = load_chart(src, false)?;
    let n = l.chart.dim();
    let pts = points(&l.chart, sampling)?;
    let mut rows = Vec::new();
    let mut worst: Vec<(f64, f64)> = Vec::new();
    for p in &pts {
        let b = CurvatureBundle::compute(&l.chart, p, 4).map_err(geometry_error)?;
        let norm = |t| tensor_norm(t, &b.metric, &b.inverse_metric).map(f64::sqrt).map_err(|e| input("metric", e));
        let weyl = norm(&b.weyl)?;
        let traceless = norm(&b.traceless_ricci)?;
        let eig = generalized_eigenvalues(&b.ricci, &b.metric).map_err(|e| input("metric", e))?.eigenvalues;
        let bach = b.bach.as_ref().map(norm).transpose()?;
        let grad_r = b.grad_r.as_ref().map(|g| {
            let gi = &b.inverse_metric.data;
            (0..n * n).map(|k| gi[k] * g.data[k / n] * g.data[k % n]).sum::<f64>().sqrt()
        });
        rows.push(json!({
            "point": p,
            "scalar": b.scalar,
            "q": b.q,
            "ricci_norm_sq": b.ricci_norm_sq,
            "ricci_eigenvalues": eig,
            "weyl_norm": weyl,
            "traceless_ricci_norm": traceless,
            "lap_r": b.lap_r,
            "grad_r_norm": grad_r,
            "bach_norm": bach,
        }));
        worst.push((b.scalar, b.ricci_norm_sq.sqrt()));
    }
    let mut checks = Vec::new();
    let mut pass = true;
    if let Some(e) = &l.expected {
        let rel = |v: f64, t: f64| (v - t).abs() / t.abs().max(1.0);
        let field = |k: &str| -> Vec<f64> { rows.iter().map(|r| r[k].as_f64().unwrap_or(f64::NAN)).collect() };
        let mut add = |c: (Value, bool)| {
            pass &= c.1;
            checks.push(c.0);
        };
        let worst_of = |k: &str, t: f64| {
            field(k).into_iter().map(|v| (v, rel(v, t))).fold((f64::NAN, -1.0f64), |a, b| if !(b.1 <= a.1) { b } else { a })
        };
        for (k, t) in [("scalar", e.scalar), ("q", e.q), ("ricci_norm_sq", e.ricci_norm_sq)] {
            if let Some(t) = t {
                let (v, d) = worst_of(k, t);
                add(check(k, json!(t), v, d, tol));
            }
        }
        // Norms that should vanish are measured against the Ricci size.
        let scale = worst.iter().fold(1.0f64, |m, w| m.max(w.1));
        for (k, flag, label) in [("weyl_norm", e.weyl_zero, "weyl_zero"), ("traceless_ricci_norm", e.einstein, "einstein")] {
            if flag == Some(true) {
                let v = field(k).into_iter().fold(0.0f64, |m, x| m.max(x));
                add(check(label, json!(0.0), v, v / scale, tol));
            }
        }
        if let Some(t) = &e.ricci_eigenvalues {
            let mut dev = 0.0f64;
            for r in &rows {
                for (i, x) in r["ricci_eigenvalues"].as_array().into_iter().flatten().enumerate() {
                    dev = dev.max(rel(x.as_f64().unwrap_or(f64::NAN), t[i]));
                }
            }
            add(check("ricci_eigenvalues", json!(t), f64::NAN, dev, tol));
        }
    }
    Ok(Outcome {
        input_digest: l.digest,
        parameters: json!({ "source": l.label, "points": sampling.points, "seed": sampling.seed, "tolerance": tol }),
        results: json!({
            "chart": l.chart.name,
            "dim": n,
            "coords": coords_of(&l.chart),
            "points": rows,
            "expected": l.expected,
            "checks": checks,
        }),
        pass,
    })
}

pub const BOUNDS_NAME: &str = "pointwise_bounds";

pub fn verify(src: &Source, sampling: &Sampling, names: &[String], tol: f64) -> Result<Outcome, CliError> {
    let l = load_chart(src, false)?;
    let pts = points(&l.chart, sampling)?;
    let all: Vec<String> = IDENTITY_NAMES.iter().map(|s| s.to_string()).chain([BOUNDS_NAME.to_string()]).collect();
    let chosen: Vec<String> = if names.is_empty() { all.clone() } else { names.to_vec() };
    for name in &chosen {
        if !all.contains(name) {
            return Err(input("--identity", format!("unknown identity `{name}`; known: {}", all.join(", "))));
        }
    }
    let mut reports = Vec::new();
    let mut pass = true;
    for name in &chosen {
        let outcome = if name == BOUNDS_NAME {
            verify_pointwise_bounds(&l.chart, &pts, tol).map(|r| (to_value(&r), r.pass))
        } else {
            verify_by_name(name, &l.chart, &pts, tol).expect("name checked above").map(|r| (to_value(&r), r.pass))
        };
        match outcome {
            Ok((mut v, ok)) => {
                pass &= ok;
                v["identity"] = json!(name);
                reports.push(v);
            }
            Err(IdentityError::Geometry(e)) => return Err(geometry_error(e)),
            Err(e) => reports.push(json!({ "identity": name, "skipped": e.to_string() })),
        }
    }
    Ok(Outcome {
        input_digest: l.digest,
        parameters: json!({
            "source": l.label, "points": sampling.points, "seed": sampling.seed,
            "tolerance": tol, "identities": chosen,
        }),
        results: json!({ "chart": l.chart.name, "dim": l.chart.dim(), "reports": reports }),
        pass,
    })
}

fn simplex_error(e: SimplexError) -> CliError {
    match e {
        SimplexError::Depth(_) => input("--depth", e),
        _ => input("--dim", e),
    }
}

pub fn inequality(n: usize, depth: usize) -> Result<Outcome, CliError> {
    let search = simplex_min_search(n, depth).map_err(simplex_error)?;
    let constants = dimension_constants(n).map_err(simplex_error)?;
    let crit = critical_points(n).map_err(simplex_error)?;
    let tol = 2.0 / depth as f64;
    let families: Vec<Value> = search.argmins.iter().map(|p| to_value(&equality_family(&p.x, tol))).collect();
    let nonneg = *search.lattice_min.numer() >= 0;
    Ok(Outcome {
        input_digest: digest(format!("inequality\ndim={n}\ndepth={depth}\n").as_bytes()),
        parameters: json!({ "dim": n, "depth": depth }),
        results: json!({
            "search": search,
            "lattice_min_nonnegative": nonneg,
            "argmin_families": families,
            "dimension_constants": constants,
            "constants_consistent": constants.consistent(),
            "critical_points": crit,
        }),
        pass: nonneg && search.argmins_in_families && constants.consistent(),
    })
}

fn conformal_error(e: ConformalError, field: &str) -> CliError {
    match e {
        ConformalError::Geometry(g) => geometry_error(g),
        other => input(field, other),
    }
}

pub struct FactorArgs<'a> {
    pub f: Option<&'a str>,
    pub u: Option<&'a str>,
    pub convention: Option<&'a str>,
}

fn factor_for(l: &Loaded, fa: &FactorArgs) -> Result<ConformalFactor, CliError> {
    let from_flags = fa.f.or(fa.u);
    match (from_flags, &l.spec) {
        (None, Some(spec)) if spec.conformal.is_some() => {
            if fa.convention.is_some() {
                return Err(input("--convention", "the spec file's [conformal] section already sets it"));
            }
            Ok(spec.conformal_factor().map_err(|e| input("--spec", e))?.expect("section present"))
        }
        (None, _) => Err(input("--f", "give --f EXPR, --u EXPR or a [conformal] section")),
        (Some(text), _) => {
            let (flag, default) = if fa.f.is_some() { ("--f", "exp") } else { ("--u", "scalar_u") };
            let convention = fa.convention.unwrap_or(default);
            if (convention == "exp") != fa.f.is_some() {
                return Err(input("--convention", format!("`{convention}` does not go with {flag}")));
            }
            let coords: Vec<&str> = l.chart.coords.iter().map(|c| c.name.as_str()).collect();
            let params: Vec<&str> = l.chart.params.keys().map(String::as_str).collect();
            let e = parse_expr(text, &coords, &params).map_err(|e| input(flag, e))?;
            make_factor(convention, e).map_err(|m| input("--convention", m))
        }
    }
}

pub fn conformal(
    src: &Source,
    sampling: &Sampling,
    fa: &FactorArgs,
    resolution: usize,
    tol: f64,
) -> Result<Outcome, CliError> {
    let l = load_chart(src, true)?;
    let n = l.chart.dim();
    let factor = factor_for(&l, fa)?;
    let field = if fa.f.is_some() { "--f" } else if fa.u.is_some() { "--u" } else { "--spec" };
    let pts = points(&l.chart, sampling)?;
    let laws = verify_conformal_laws(&l.chart, &factor, &pts, tol).map_err(|e| conformal_error(e, field))?;
    let mut pass = laws.pass;
    let q_cov = match &factor {
        ConformalFactor::PaneitzU(u) => {
            let r = q_conformal_check(&l.chart, u, &pts, tol).map_err(|e| conformal_error(e, field))?;
            pass &= r.pass;
            to_value(&r)
        }
        _ => json!({ "skipped": "needs the paneitz_u convention" }),
    };
    let schoen = if !l.chart.is_closed() {
        json!({ "skipped": "chart is not closed" })
    } else {
        let f = factor.exponent(&l.chart).map_err(|e| conformal_error(e, field))?;
        match schoen_check(&l.chart, &f, resolution) {
            Ok(r) => {
                pass &= r.holds;
                to_value(&r)
            }
            Err(e @ ConformalError::NonConstantScalar { .. }) => json!({ "skipped": e.to_string() }),
            Err(ConformalError::Quadrature(e)) => return Err(input("--resolution", e)),
            Err(e) => return Err(conformal_error(e, field)),
        }
    };
    let hat = conformal_metric(&l.chart, &factor).map_err(|e| conformal_error(e, field))?;
    let scalar_hat: Vec<f64> = pts
        .iter()
        .map(|p| CurvatureBundle::compute(&hat, p, 2).map(|b| b.scalar))
        .collect::<Result<_, _>>()
        .map_err(geometry_error)?;
    let (kind, text) = match &factor {
        ConformalFactor::Exponent(e) | ConformalFactor::ScalarU(e) | ConformalFactor::PaneitzU(e) => {
            (factor.convention(), e.named(&coords_of(&l.chart)).to_string())
        }
    };
    Ok(Outcome {
        input_digest: digest(format!("{}\nconvention={kind}\nfactor={text}\n", l.digest).as_bytes()),
        parameters: json!({
            "source": l.label, "points": sampling.points, "seed": sampling.seed, "tolerance": tol,
            "resolution": resolution, "convention": kind, "factor": text,
        }),
        results: json!({
            "chart": l.chart.name,
            "dim": n,
            "coords": coords_of(&l.chart),
            "laws": laws,
            "q_covariance": q_cov,
            "schoen": schoen,
            "scalar_curvature_conformal": scalar_hat,
        }),
        pass,
    })
}

pub fn yamabe(n: usize, period: Option<f64>, steps: usize, sampling: &Sampling, tol: f64) -> Result<Outcome, CliError> {
    let t = period.unwrap_or(2.0 * PI);
    let s = yamabe_ode_solve(n, t, steps).map_err(|e| match e {
        ConformalError::Dimension { .. } => input("--dim", e),
        ConformalError::Invalid(ref m) if m.contains("steps") => input("--steps", e),
        ConformalError::Invalid(_) => input("--period", e),
        other => input("--period", other),
    })?;
    let nf = n as f64;
    let params = ParamValues::from([("T".to_string(), t)]);
    let base = closed_chart("circle_times_sphere", n, &params).map_err(catalog_error)?;
    let u = s.to_expr(0);
    let chart = conformal_metric(&base, &ConformalFactor::ScalarU(u)).map_err(|e| conformal_error(e, "--period"))?;
    let pts = points(&chart, sampling)?;
    let mut probes = Vec::new();
    let (mut r_dev, mut qs) = (0.0f64, Vec::new());
    for p in &pts {
        let b = CurvatureBundle::compute(&chart, p, 4).map_err(geometry_error)?;
        let q = b.q.unwrap_or(f64::NAN);
        r_dev = r_dev.max((b.scalar - nf * (nf - 1.0)).abs() / (nf * (nf - 1.0)));
        qs.push(q);
        probes.push(json!({ "point": p, "scalar": b.scalar, "q": q }));
    }
    let mean = qs.iter().sum::<f64>() / qs.len() as f64;
    let sd = if qs.len() > 1 {
        (qs.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (qs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    let q_spread = sd / mean.abs().max(f64::MIN_POSITIVE);
    let (lo, hi) = s.samples.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    let mut checks = vec![
        check("ode_residual", json!(0.0), s.residual, s.residual, 1e-8).0,
        check("periodicity", json!(0.0), s.periodicity_error, s.periodicity_error, 1e-8).0,
        check("scalar_curvature", json!(nf * (nf - 1.0)), f64::NAN, r_dev, tol).0,
    ];
    let mut pass = s.residual <= 1e-8 && s.periodicity_error <= 1e-8 && r_dev <= tol;
    if !s.constant {
        let ok = q_spread > 1e-3;
        pass &= ok;
        checks.push(json!({ "name": "q_nonconstant", "relative_std": q_spread, "threshold": 1e-3, "pass": ok }));
    }
    Ok(Outcome {
        input_digest: digest(format!("yamabe\ndim={n}\nperiod={t:?}\nsteps={steps}\n").as_bytes()),
        parameters: json!({
            "dim": n, "period": t, "steps": steps, "points": sampling.points, "seed": sampling.seed, "tolerance": tol,
        }),
        results: json!({
            "constant": s.constant,
            "constant_value": s.constant_value,
            "amplitude": s.amplitude,
            "min": lo,
            "max": hi,
            "branch_amplitudes": s.branch_amplitudes,
            "threshold_period": 2.0 * PI / (nf - 2.0).sqrt(),
            "residual": s.residual,
            "periodicity_error": s.periodicity_error,
            "cosine_coefficients": s.cosine_coefficients,
            "probes": probes,
            "q_relative_std": q_spread,
            "checks": checks,
        }),
        pass,
    })
}

pub fn hypersurface(src: &Source, sampling: &Sampling, tol: f64) -> Result<Outcome, CliError> {
    let (im, d, label, clifford): (Immersion, String, Value, Option<(usize, usize)>) = match &src.spec {
        Some(path) => {
            if src.dim.is_some() || !src.params.is_empty() {
                return Err(input("--spec", "--dim and --param apply to catalog entries only"));
            }
            let (spec, d) = read_spec(path)?;
            if spec.immersion.is_none() {
                return Err(input("--spec", "spec file has no [immersion] section"));
            }
            let im = spec.immersion().map_err(|e| input("--spec", e))?;
            (im, d, json!({ "spec": path.display().to_string(), "name": spec.name }), None)
        }
        None => {
            let (name, dim, params) = catalog_selection(src)?;
            if !IMMERSION_NAMES.contains(&name) {
                return Err(input("--catalog", format!("unknown immersion `{name}`; known: {}", IMMERSION_NAMES.join(", "))));
            }
            let im = builtin_immersion(name, dim, &params).map_err(catalog_error)?;
            let m = params.get("m").map(|&m| m as usize).unwrap_or(dim / 2);
            let cl = (name == "clifford_in_sn1").then_some((dim, m));
            (im, catalog_digest("immersion", name, dim, &params), json!({ "catalog": name, "dim": dim, "params": params }), cl)
        }
    };
    let chart = im.induced_chart().map_err(|e| input("immersion", e))?;
    let pts = points(chart, sampling)?;
    let gauss = im.gauss_residuals_tol(&pts, tol).map_err(|e| input("immersion", e))?;
    let mut pass = gauss.pass;
    let mut shapes = Vec::new();
    for p in &pts {
        let sd = im.fundamental_forms(p).map_err(|e| input("immersion", e))?;
        let lambda = lambda_quantities(&sd, im.c);
        let pinch = pinching_check(&sd);
        shapes.push(json!({
            "point": p,
            "kappa": sd.kappa,
            "mean_curvature": sd.mean_curvature,
            "h_norm_sq": sd.h_norm_sq,
            "z_norm_sq": sd.z_norm_sq,
            "lambda": lambda,
            "pinching": pinch,
        }));
    }
    let cl = match clifford {
        Some((n, m)) => {
            let c = isoparametric_clifford_data(n, m).map_err(|e| input("--param", e))?;
            let ok = c.product_is_minus_one() && c.trace_vanishes() && c.lambda_matches();
            pass &= ok;
            json!({ "data": c, "identities_hold": ok })
        }
        None => Value::Null,
    };
    Ok(Outcome {
        input_digest: d,
        parameters: json!({ "source": label, "points": sampling.points, "seed": sampling.seed, "tolerance": tol }),
        results: json!({
            "immersion": im.name,
            "dim": im.dim(),
            "space_form": im.c,
            "gauss": gauss,
            "shapes": shapes,
            "isoparametric": cl,
        }),
        pass,
    })
}

pub fn rigidity(src: &Source, resolution: usize, parts: bool, tol: f64) -> Result<Outcome, CliError> {
    let l = load_chart(src, true)?;
    let quad_err = |e: qcurv::quadrature::QuadratureError| {
        use qcurv::quadrature::QuadratureError as Q;
        match e {
            Q::Resolution(_) | Q::TooLarge(_) => input("--resolution", e),
            Q::NotClosed(_) => input(if l.spec.is_some() { "--spec" } else { "--catalog" }, e),
            Q::Geometry(g) => geometry_error(g),
            other => input("metric", other),
        }
    };
    let r = rigidity_report(&l.chart, resolution).map_err(quad_err)?;
    let signature_fails = r.verdict == "hypotheses met but the conclusion signature fails";
    let mut pass = r.converged && !signature_fails;
    let parts_v = if parts {
        let p = parts_identity_check(&l.chart, resolution, tol).map_err(quad_err)?;
        pass &= p.identity.pass && p.converged;
        to_value(&p)
    } else {
        Value::Null
    };
    Ok(Outcome {
        input_digest: l.digest,
        parameters: json!({ "source": l.label, "resolution": resolution, "parts": parts, "tolerance": tol }),
        results: json!({ "rigidity": r, "parts": parts_v }),
        pass,
    })
}

fn describe_metric(name: &str, n: usize, params: &ParamValues, full: bool) -> Value {
    match builtin_metric(name, n, params) {
        Ok(e) => {
            let coords = coords_of(&e.chart);
            let mut v = json!({
                "name": name,
                "kind": "metric",
                "dim": n,
                "coords": coords,
                "closed_chart": closed_chart(name, n, params).ok().map(|c| coords_of(&c)),
                "expected": e.expected,
            });
            if full {
                let m: Vec<String> = e.chart.metric.iter().map(|x| x.named(&coords).to_string()).collect();
                v["metric"] = json!(m);
            }
            v
        }
        Err(e) => json!({ "name": name, "kind": "metric", "dim": n, "error": e.to_string() }),
    }
}

fn describe_immersion(name: &str, n: usize, params: &ParamValues) -> Value {
    match builtin_immersion(name, n, params) {
        Ok(im) => json!({
            "name": name,
            "kind": "immersion",
            "dim": n,
            "space_form": im.c,
            "coords": im.coords.iter().map(|c| c.name.clone()).collect::<Vec<_>>(),
        }),
        Err(e) => json!({ "name": name, "kind": "immersion", "dim": n, "error": e.to_string() }),
    }
}

pub fn catalog(name: Option<&str>, n: usize, params: &[(String, f64)]) -> Result<Outcome, CliError> {
    let p = params_of(params);
    let results = match name {
        Some(name) if METRIC_NAMES.contains(&name) => {
            let v = describe_metric(name, n, &p, true);
            if let Some(e) = v.get("error") {
                return Err(input("--param", e.as_str().unwrap_or_default()));
            }
            v
        }
        Some(name) if IMMERSION_NAMES.contains(&name) => {
            let v = describe_immersion(name, n, &p);
            if let Some(e) = v.get("error") {
                return Err(input("--param", e.as_str().unwrap_or_default()));
            }
            v
        }
        Some(other) => return Err(input("--catalog", CatalogError::UnknownName(other.to_string()))),
        None => {
            if !p.is_empty() {
                return Err(input("--param", "parameters need --catalog NAME"));
            }
            json!({
                "metrics": METRIC_NAMES.iter().map(|m| describe_metric(m, n, &p, false)).collect::<Vec<_>>(),
                "immersions": IMMERSION_NAMES.iter().map(|m| describe_immersion(m, n, &p)).collect::<Vec<_>>(),
            })
        }
    };
    Ok(Outcome {
        input_digest: catalog_digest("catalog", name.unwrap_or("*"), n, &p),
        parameters: json!({ "catalog": name, "dim": n, "params": p }),
        results,
        pass: true,
    })
}
