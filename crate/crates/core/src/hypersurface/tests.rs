use super::*;
use crate::catalog::{builtin_immersion, IMMERSION_NAMES};
use proptest::prelude::{prop_assert, prop_assume, proptest};

fn params(kv: &[(&str, f64)]) -> ParamValues {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn probes(im: &Immersion, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| im.interior_point(&(0..im.dim()).map(|_| rng.gen()).collect::<Vec<_>>(), 0.8)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

#[test]
fn round_sphere_is_umbilic() {
    let im = builtin_immersion("round_sphere_in_rn1", 6, &params(&[("r", 2.0)])).unwrap();
    for p in probes(&im, 5, 1) {
        let sd = im.fundamental_forms(&p).unwrap();
        assert!(sd.kappa.iter().all(|&k| rel(k, 0.5) < 1e-10), "{:?}", sd.kappa);
        assert!(rel(sd.mean_curvature, 3.0) < 1e-10);
        assert!(rel(sd.h_norm_sq, 6.0 / 4.0) < 1e-10);
        assert!(sd.z_norm_sq.abs() < 1e-10);
    }
}

#[test]
fn unit_sphere_gauss_scalar() {
    let im = builtin_immersion("round_sphere_in_rn1", 6, &ParamValues::new()).unwrap();
    let p = probes(&im, 1, 2).remove(0);
    let sd = im.fundamental_forms(&p).unwrap();
    // 0 + 36 - 6
    assert!(rel(sd.mean_curvature.powi(2) - sd.h_norm_sq, 30.0) < 1e-10);
    let b = im.induced_chart().unwrap().bundle_at_order(&p, 2).unwrap();
    assert!(rel(b.scalar, 30.0) < 1e-9);
}

#[test]
fn clifford_principal_curvatures() {
    for (n, m) in [(4, 1), (4, 2), (6, 2), (6, 3)] {
        let im = builtin_immersion("clifford_in_sn1", n, &params(&[("m", m as f64)])).unwrap();
        let (r, s) = ((m as f64 / n as f64).sqrt(), ((n - m) as f64 / n as f64).sqrt());
        for p in probes(&im, 3, 3) {
            let sd = im.fundamental_forms(&p).unwrap();
            let mut want = vec![-r / s; n - m];
            want.extend(vec![s / r; m]);
            for (k, w) in sd.kappa.iter().zip(&want) {
                assert!(rel(*k, *w) < 1e-9, "{:?} vs {want:?}", sd.kappa);
            }
            assert!(sd.mean_curvature.abs() < 1e-9);
            let lq = lambda_quantities(&sd, 1);
            assert_eq!(lq.cartan, if m == n - m { None } else { Some(true) });
            assert!(lq.two_valued);
        }
        // intrinsic scalar of S^m(r) x S^{n-m}(s)
        let intrinsic = (m * (m - 1)) as f64 / (r * r) + ((n - m) * (n - m - 1)) as f64 / (s * s);
        let hn = m as f64 * (s / r).powi(2) + (n - m) as f64 * (r / s).powi(2);
        assert!(rel((n * (n - 1)) as f64 - hn, intrinsic) < 1e-12);
        let rep = im.gauss_residuals(&probes(&im, 3, 4)).unwrap();
        assert!(rep.pass, "{rep:?}");
    }
}

#[test]
fn clifford_cartan_with_distinct_lambdas() {
    // non-minimal Clifford: λ differs across the two blocks
    let im = builtin_immersion("clifford_in_sn1", 5, &params(&[("m", 2.0), ("r", 0.8)])).unwrap();
    let sd = im.fundamental_forms(&probes(&im, 1, 5)[0]).unwrap();
    let lq = lambda_quantities(&sd, 1);
    assert_eq!(lq.cartan, Some(true));
    assert!(rel(sd.kappa[0] * sd.kappa[4], -1.0) < 1e-10);
}

#[test]
fn geodesic_sphere_curvature() {
    for rho in [0.5, 1.0, 2.0] {
        let im = builtin_immersion("geodesic_sphere_in_hn1", 4, &params(&[("rho", rho)])).unwrap();
        let coth = rho.cosh() / rho.sinh();
        for p in probes(&im, 3, 6) {
            let sd = im.fundamental_forms(&p).unwrap();
            assert!(sd.kappa.iter().all(|&k| rel(k, coth) < 1e-10 && k > 1.0));
        }
        assert!(im.gauss_residuals(&probes(&im, 3, 7)).unwrap().pass);
    }
}

#[test]
fn plane_patch_is_flat() {
    let coords = vec![CoordSpec::range("u", -1.0, 1.0), CoordSpec::range("v", -1.0, 1.0)];
    let position = vec![Expr::coord(0), Expr::coord(1), Expr::zero()];
    let normal = vec![Expr::zero(), Expr::zero(), Expr::one()];
    let im = Immersion::new("plane", 0, coords, position, normal, ParamValues::new()).unwrap();
    let rep = im.gauss_residuals(&probes(&im, 4, 8)).unwrap();
    assert!(rep.pass && rep.max_abs_residual == 0.0, "{rep:?}");
    let sd = im.fundamental_forms(&[0.1, 0.2]).unwrap();
    assert_eq!(pinching_check(&sd).sign, CurvatureSign::Zero);
}

#[test]
fn constraint_violations_are_rejected() {
    let coords = vec![CoordSpec::range("u", -1.0, 1.0), CoordSpec::range("v", -1.0, 1.0)];
    let position = vec![Expr::coord(0), Expr::coord(1), Expr::zero()];
    let tilted = vec![Expr::zero(), Expr::frac(3, 5), Expr::frac(4, 5)];
    assert!(Immersion::new("bad", 0, coords.clone(), position.clone(), tilted, ParamValues::new()).is_err());
    let long = vec![Expr::zero(), Expr::zero(), Expr::int(2)];
    assert!(Immersion::new("bad", 0, coords.clone(), position.clone(), long, ParamValues::new()).is_err());
    let n = vec![Expr::zero(), Expr::zero(), Expr::one()];
    assert!(Immersion::new("bad", 1, coords.clone(), position.clone(), n.clone(), ParamValues::new()).is_err());
    assert!(Immersion::new("bad", 2, coords, position, n, ParamValues::new()).is_err());
}

#[test]
fn catalog_immersions_satisfy_gauss_at_random_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in IMMERSION_NAMES {
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let p = match name {
                "round_sphere_in_rn1" => params(&[("r", rng.gen_range(0.3..3.0))]),
                "clifford_in_sn1" => params(&[("m", rng.gen_range(1..n) as f64), ("r", rng.gen_range(0.2..0.95))]),
                _ => params(&[("rho", rng.gen_range(0.2..2.5))]),
            };
            let im = builtin_immersion(name, n, &p).unwrap();
            let pts = probes(&im, 1, rng.gen());
            let rep = im.gauss_residuals_tol(&pts, 1e-7).unwrap();
            assert!(rep.pass, "{name} {p:?}: {rep:?}");
            // λ from the formula against the Ricci spectrum of the induced metric
            let sd = im.fundamental_forms(&pts[0]).unwrap();
            let b = im.induced_chart().unwrap().bundle_at_order(&pts[0], 2).unwrap();
            let ric = generalized_eigenvalues(&b.ricci, &b.metric).unwrap().eigenvalues;
            let mut lam = sd.lambda.clone();
            lam.sort_by(f64::total_cmp);
            for (a, b) in ric.iter().zip(&lam) {
                assert!((a - b).abs() <= 1e-7 * (1.0 + b.abs()), "{name}: {ric:?} vs {lam:?}");
            }
        }
    }
}

#[test]
fn lambda_examples() {
    let r = 1.7;
    let sd = ShapeData::from_kappa(&[1.0 / r; 5], 0);
    let lq = lambda_quantities(&sd, 0);
    assert!(lq.lambdas.iter().all(|&l| rel(l, 4.0 / (r * r)) < 1e-14));
    assert!(lq.dhy.abs() <= 1e-12 * lq.dhy_scale);
    assert!(lq.umbilic && lq.equality_pattern && lq.sign_claim_applies);

    let sd = ShapeData::from_kappa(&[1.0, 1.0, 1.0, 1.0, 0.0], 0);
    let lq = lambda_quantities(&sd, 0);
    // H = 4: λ = 4 - 1 = 3 on the unit entries, 0 on the zero entry
    assert_eq!(lq.lambdas, vec![0.0, 3.0, 3.0, 3.0, 3.0]);
    assert!(lq.sign_claim_applies && lq.dhy_nonpositive && lq.equality_pattern);
    assert_eq!(lq.dhy, 0.0);
}

#[test]
fn pinching_examples() {
    let sd = ShapeData::from_kappa(&[0.5; 4], 0);
    let p = pinching_check(&sd);
    assert!(p.in_window && p.z_bound_holds && p.mu_bound_holds);
    assert_eq!(p.h_norm_sq, p.lower);
    assert_eq!(p.sign, CurvatureSign::Nonnegative);

    let sd = ShapeData::from_kappa(&[2.0, -1.0], 0);
    let p = pinching_check(&sd);
    assert_eq!((sd.mean_curvature, sd.h_norm_sq), (1.0, 5.0));
    assert!(!p.in_window);
    assert_eq!(p.sign, CurvatureSign::Mixed);
    assert_eq!(pinching_check(&ShapeData::from_kappa(&[-1.0, -2.0, 0.0], 0)).sign, CurvatureSign::Nonpositive);
}

#[test]
fn isoparametric_examples() {
    let d = isoparametric_clifford_data(6, 3).unwrap();
    assert_eq!((d.kappa, d.t, d.lambda), (1.0, -1.0, 4.0));
    let d = isoparametric_clifford_data(6, 2).unwrap();
    assert!((d.kappa - 3f64.sqrt()).abs() < 1e-15 && (d.t + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    assert!((d.kappa - 3.0 * -d.t).abs() < 1e-15);
    assert!(isoparametric_clifford_data(6, 1).is_err());
    assert!(isoparametric_clifford_data(6, 5).is_err());
}

proptest! {
    #[test]
    fn isoparametric_identities_are_exact(n in 4usize..=40, frac in 0.0f64..1.0) {
        let m = 2 + ((n - 3) as f64 * frac) as usize;
        let m = m.min(n - 2);
        let d = isoparametric_clifford_data(n, m).unwrap();
        prop_assert!(d.product_is_minus_one());
        prop_assert!(d.trace_vanishes());
        prop_assert!(d.lambda_matches());
        prop_assert!(((m - 1) as f64 * d.kappa + (n - m - 1) as f64 * d.t).abs() < 1e-12 * n as f64);
    }

    #[test]
    fn shape_invariants(kappa in proptest::collection::vec(-3.0f64..3.0, 2..8), c in -1i32..=1) {
        let sd = ShapeData::from_kappa(&kappa, c);
        let sum: f64 = kappa.iter().sum();
        let sq: f64 = kappa.iter().map(|k| k * k).sum();
        prop_assert!((sd.mean_curvature - sum).abs() <= 1e-9 * (1.0 + sum.abs()));
        prop_assert!((sd.h_norm_sq - sq).abs() <= 1e-12 * (1.0 + sq));
        let p = pinching_check(&sd);
        // |Z|² ≥ 0 always, so the lower edge of the window always holds
        prop_assert!(sd.h_norm_sq >= p.lower - 1e-12 * (1.0 + sq));
    }

    #[test]
    fn dhy_nonpositive_for_nonnegative_ricci(kappa in proptest::collection::vec(0.0f64..2.0, 2..8)) {
        let sd = ShapeData::from_kappa(&kappa, 0);
        let lq = lambda_quantities(&sd, 0);
        prop_assume!(lq.sign_claim_applies);
        prop_assert!(lq.dhy <= 1e-10 * lq.dhy_scale.max(1.0), "dhy = {}", lq.dhy);
        if lq.dhy.abs() <= 1e-10 * lq.dhy_scale.max(1e-300) {
            prop_assert!(lq.equality_pattern);
        }
    }

    #[test]
    fn general_forms_match_eigen_data(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0, s in 0.1f64..0.5) {
        // congruent forms: g = I + sE, h symmetric
        let g = TensorValue::from_matrix(2, &[1.0, s, s, 1.0 + s]);
        let h = TensorValue::from_matrix(2, &[a, c, c, b]);
        let sd = ShapeData::from_forms(vec![], 0, g, h).unwrap();
        let k: f64 = sd.kappa.iter().sum();
        prop_assert!((k - sd.mean_curvature).abs() <= 1e-9 * (1.0 + k.abs()));
        let q: f64 = sd.kappa.iter().map(|x| x * x).sum();
        prop_assert!((q - sd.h_norm_sq).abs() <= 1e-9 * (1.0 + q));
    }
}
