use lyapcert::certify::{build_nested_family, FamilyParams, NestedFamily};
use lyapcert::dynamics::{
    containment_test, epsilon_delta_probe, escape_time, integrate, FalsifyConfig, IntegratorConfig, ProbeConfig,
};
use lyapcert::expr::{parse_expression, Variables, VectorFieldDef};
use lyapcert::geometry::{build_grid, GridSpec};
use proptest::prelude::*;

fn field(src: &[&str]) -> VectorFieldDef {
    VectorFieldDef::parse(src, Variables::cartesian(src.len())).unwrap()
}

fn circles() -> NestedFamily {
    let f = parse_expression("x^2+y^2", Variables::cartesian(2)).unwrap();
    let grid = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 2.0, 128)).unwrap();
    let params = FamilyParams {
        a0: Some(1.0),
        ..FamilyParams::default()
    };
    build_nested_family(&f, &[0.0, 0.0], &grid, &params).unwrap()
}

fn harmonic_error(cfg: &IntegratorConfig) -> f64 {
    let t = 2.0 * std::f64::consts::PI;
    let tr = integrate(&field(&["y", "-x"]), &[1.0, 0.0], t, cfg).unwrap();
    let end = tr.last();
    ((end[0] - 1.0).powi(2) + end[1].powi(2)).sqrt()
}

#[test]
fn fixed_step_order_is_at_least_three() {
    let mut prev = None;
    for h in [0.2, 0.1, 0.05] {
        let err = harmonic_error(&IntegratorConfig {
            fixed_step: Some(h),
            ..IntegratorConfig::default()
        });
        if let Some(p) = prev {
            let ratio: f64 = p / err;
            assert!(ratio >= 8.0, "h={h}: ratio {ratio}");
        }
        prev = Some(err);
    }
}

#[test]
fn adaptive_error_tracks_tolerance() {
    let err = |tol: f64| {
        harmonic_error(&IntegratorConfig {
            rel_tol: tol,
            abs_tol: tol,
            ..IntegratorConfig::default()
        })
    };
    for tol in [1e-5, 1e-7] {
        let ratio = err(tol) / err(tol / 16.0);
        assert!(ratio >= 8.0, "tol {tol:e}: ratio {ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn forward_then_backward_returns(
        which in 0usize..4,
        x in -1.0f64..1.0,
        y in -1.0f64..1.0,
    ) {
        let systems: [[&str; 2]; 4] = [
            ["y", "-x-y"],
            ["y", "-sin(x)"],
            ["y", "(1-x^2)*y-x"],
            ["-x+y^2", "-2*y+x*y"],
        ];
        let f = field(&systems[which]);
        let cfg = IntegratorConfig { rel_tol: 1e-11, abs_tol: 1e-12, ..IntegratorConfig::default() };
        let fwd = integrate(&f, &[x, y], 3.0, &cfg).unwrap();
        let back = integrate(&f.negated(), fwd.last(), 3.0, &cfg).unwrap();
        let end = back.last();
        let err = ((end[0] - x).powi(2) + (end[1] - y).powi(2)).sqrt();
        prop_assert!(err <= 1e-5, "{:?} from ({}, {}): {:e}", systems[which], x, y, err);
    }
}

#[test]
fn stable_systems_never_escape() {
    let fam = circles();
    for src in [["y", "-x-y"], ["y", "-x"]] {
        let (report, _) = containment_test(&field(&src), &fam, &FalsifyConfig::default()).unwrap();
        assert_eq!(report.trials, 200);
        assert_eq!(report.escapes, 0, "{src:?}");
        assert!(report.max_excursion_ratio <= 1.0 + 1e-2, "{}", report.max_excursion_ratio);
    }
}

#[test]
fn source_escapes_at_the_analytic_time() {
    let fam = circles();
    let f = field(&["x", "y"]);
    let (report, _) = containment_test(&f, &fam, &FalsifyConfig::default()).unwrap();
    assert!(report.escapes as f64 >= 0.95 * report.trials as f64, "{}", report.escapes);
    let outer = fam.outermost().unwrap();
    let cfg = IntegratorConfig {
        sample_spacing: Some(outer.cell),
        ..IntegratorConfig::default()
    };
    let (_, t) = escape_time(&f, outer, &[0.1, 0.0], 100.0, &cfg).unwrap();
    let t = t.expect("escapes");
    assert!((t - 10f64.ln()).abs() <= 0.1, "{t}");
}

#[test]
fn epsilon_delta_probe_separates_center_and_source() {
    let eps = [0.5, 0.1];
    let cfg = ProbeConfig {
        horizon: 20.0,
        ..ProbeConfig::default()
    };
    for row in epsilon_delta_probe(&field(&["y", "-x"]), &[0.0, 0.0], &eps, &cfg).unwrap() {
        // orbits are circles: every start inside eps stays inside
        assert!(row.delta >= 0.99 * row.eps, "{row:?}");
    }
    for row in epsilon_delta_probe(&field(&["x", "y"]), &[0.0, 0.0], &eps, &cfg).unwrap() {
        assert!(row.effectively_zero, "{row:?}");
    }
    assert!(epsilon_delta_probe(&field(&["1", "0"]), &[0.0, 0.0], &eps, &cfg).is_err());
}
