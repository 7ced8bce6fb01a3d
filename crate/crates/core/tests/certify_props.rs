use lyapcert::certify::{
    build_nested_family, certify_stability, check_quasi_isolated, sign_condition, tilde_sign_condition,
    FamilyParams, NestedFamily, QuasiParams, QuasiVerdict, SignParams, Verdict,
};
use lyapcert::expr::{gradient, make_gradient_system, make_hamiltonian_system, parse_expression, Variables, VectorFieldDef};
use lyapcert::geometry::{build_grid, GridSpec};
use proptest::prelude::*;

fn family(src: &str, vars: Variables, res: usize, a0: f64) -> NestedFamily {
    let f = parse_expression(src, vars).unwrap();
    let grid = build_grid(&f, &GridSpec::centered(&vec![0.0; vars.dim()], 2.0, res)).unwrap();
    let params = FamilyParams {
        count: 5,
        a0: Some(a0),
        ..FamilyParams::default()
    };
    build_nested_family(&f, &vec![0.0; vars.dim()], &grid, &params).unwrap()
}

/// Positive definite quadratic plus a small quartic term.
fn bowl(p: f64, q: f64, r: f64, names: [&str; 2]) -> String {
    let [u, v] = names;
    format!("{p}*{u}^2+{q}*{u}*{v}+{r}*{v}^2+0.1*{u}^4")
}

fn linear_field(m: [f64; 4]) -> VectorFieldDef {
    VectorFieldDef::parse(
        &[format!("{}*x+{}*y", m[0], m[1]), format!("{}*x+{}*y", m[2], m[3])],
        Variables::cartesian(2),
    )
    .unwrap()
}

#[test]
fn quasi_isolation_oracle_suite() {
    let cases = [
        ("x^2+y^2", QuasiVerdict::QuasiIsolated),
        ("x^2+y^4", QuasiVerdict::QuasiIsolated),
        ("x^4+y^4", QuasiVerdict::QuasiIsolated),
        ("x^2", QuasiVerdict::NotQuasiIsolated),
        ("x*y", QuasiVerdict::NotQuasiIsolated),
        ("x^3-3*x*y^2", QuasiVerdict::NotQuasiIsolated),
        ("x^2-y^2", QuasiVerdict::NotQuasiIsolated),
    ];
    for (src, expected) in cases {
        let f = parse_expression(src, Variables::cartesian(2)).unwrap();
        let grid = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 1.0, 256)).unwrap();
        let r = check_quasi_isolated(&f, &[0.0, 0.0], &grid, &QuasiParams::default()).unwrap();
        assert_eq!(r.verdict, expected, "{src}: {:?}", r.diameters);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn verdict_is_scale_invariant(
        p in 0.5f64..2.0, q in -0.5f64..0.5, r in 0.5f64..2.0,
        m in prop::array::uniform4(-1.0f64..1.0),
        k in -4i32..5,
        c in 0.01f64..100.0,
    ) {
        let fam = family(&bowl(p, q, r, ["x", "y"]), Variables::cartesian(2), 96, 0.5);
        let f = linear_field(m);
        let base = certify_stability(&f, &fam, &SignParams::default());
        // exact scaling by a power of two keeps every S bit-for-bit proportional
        let exact = certify_stability(&f.scaled(2f64.powi(k)), &fam, &SignParams::default());
        prop_assert_eq!(base.verdict, exact.verdict);
        for (a, b) in base.surfaces.iter().zip(&exact.surfaces) {
            prop_assert_eq!(&a.argmin, &b.argmin);
            prop_assert_eq!(a.violations, b.violations);
            prop_assert_eq!(a.min_s.signum(), b.min_s.signum());
        }
        let scaled = certify_stability(&f.scaled(c), &fam, &SignParams::default());
        prop_assert_eq!(base.verdict, scaled.verdict);
    }

    #[test]
    fn tilde_and_plain_signs_agree(
        p in 0.5f64..2.0, q in -0.5f64..0.5, r in 0.5f64..2.0,
        m in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let fam = family(&bowl(p, q, r, ["x", "y"]), Variables::cartesian(2), 96, 0.5);
        let f = linear_field(m);
        let params = SignParams::default();
        for s in &fam.surfaces {
            let plain = sign_condition(&f, &s.surface, 0.0, &params).unwrap();
            let tilde = tilde_sign_condition(&fam.function, &f, &s.surface, &params).unwrap();
            for (a, b) in plain.values.iter().zip(&tilde.report.values) {
                if a.abs() > plain.tol_s && b.abs() > tilde.report.tol_s {
                    prop_assert_eq!(a.signum(), b.signum());
                }
            }
        }
    }

    #[test]
    fn hamiltonian_sign_vanishes(p in 0.5f64..2.0, q in -0.5f64..0.5, r in 0.5f64..2.0) {
        let src = bowl(p, q, r, ["y", "z"]);
        let vars = Variables::canonical(1);
        let fam = family(&src, vars, 96, 0.5);
        let field = make_hamiltonian_system(&fam.function, 1).unwrap();
        for s in &fam.surfaces {
            let rep = sign_condition(&field, &s.surface, 0.0, &SignParams::default()).unwrap();
            prop_assert!(rep.max_abs() <= 1e-9, "{:e}", rep.max_abs());
        }
    }

    #[test]
    fn gradient_sign_equals_gradient_norm(p in 0.5f64..2.0, q in -0.5f64..0.5, r in 0.5f64..2.0) {
        let fam = family(&bowl(p, q, r, ["x", "y"]), Variables::cartesian(2), 96, 0.5);
        let descent = make_gradient_system(&fam.function, false).unwrap();
        let grad = gradient(&fam.function).unwrap();
        for s in &fam.surfaces {
            let rep = sign_condition(&descent, &s.surface, 0.0, &SignParams::default()).unwrap();
            for (v, sv) in s.surface.vertices.iter().zip(&rep.values) {
                let g = grad.evaluate(&v[..2]).unwrap();
                let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
                prop_assert!((sv.abs() - gn).abs() <= 1e-9 * gn.max(1.0));
                // a minimum: descent points inward
                prop_assert!(*sv > 0.0);
            }
        }
    }

    #[test]
    fn family_diameters_and_distances_decrease(p in 0.5f64..2.0, q in -0.5f64..0.5, r in 0.5f64..2.0, quartic in any::<bool>()) {
        let src = if quartic { format!("{p}*x^4+{r}*y^4+{q}*x^2*y^2") } else { bowl(p, q, r, ["x", "y"]) };
        let fam = family(&src, Variables::cartesian(2), 96, 0.5);
        prop_assert!(fam.surfaces.len() >= 5);
        for w in fam.surfaces.windows(2) {
            prop_assert!(w[1].d_to_x0 < w[0].d_to_x0);
            prop_assert!(w[1].surface.diameter < w[0].surface.diameter);
        }
    }
}

#[test]
fn certified_families_of_stable_linear_systems() {
    // x' = A x with A + A^T negative semidefinite: F = |x|^2 never increases
    let fam = family("x^2+y^2", Variables::cartesian(2), 128, 1.0);
    for m in [[-1.0, 1.0, -1.0, -1.0], [0.0, 1.0, -1.0, 0.0], [-0.5, 2.0, -2.0, 0.0]] {
        let cert = certify_stability(&linear_field(m), &fam, &SignParams::default());
        assert_eq!(cert.verdict, Verdict::CertifiedStable, "{m:?}: {:?}", cert.reasons);
    }
    let cert = certify_stability(&linear_field([1.0, 0.0, 0.0, -1.0]), &fam, &SignParams::default());
    assert_eq!(cert.verdict, Verdict::Violated);
}
