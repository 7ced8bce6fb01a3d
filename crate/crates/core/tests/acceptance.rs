//! Acceptance criteria with analytic oracles. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::collections::HashMap;
use std::time::Instant;

use lyapcert::certify::{
    check_quasi_isolated, classify_gradient_system, sign_condition, CertifyParams, GradientVerdict, QuasiParams,
    QuasiVerdict, SignParams, Verdict,
};
use lyapcert::config::{System, SystemConfig};
use lyapcert::dynamics::{containment_test, escape_time, FalsifyConfig, IntegratorConfig};
use lyapcert::expr::{gradient, parse_expression, Func, Node, ScalarExpr, Variables};
use lyapcert::geometry::{bounds_point, build_grid, classify_closed, extract_level_components, orient_inward, GridSpec};
use lyapcert::pipeline::{run_certify, RunOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn system(field: &str, function: &str, extra: &str) -> System {
    let text = format!(
        "field = {field}\nfunction = \"{function}\"\nequilibrium = [0.0, 0.0]\n\
         [grid]\nlo = [-2.0, -2.0]\nhi = [2.0, 2.0]\nresolution = 256\n\
         [family]\ncount = 6\na0 = 1.0\n{extra}"
    );
    SystemConfig::from_toml(&text).unwrap().validate().unwrap()
}

fn damped_oscillator() -> Outcome {
    let sys = system(r#"["y", "-x-y"]"#, "x^2+y^2", "");
    let start = Instant::now();
    let out = run_certify(&sys, &RunOptions::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let c = &out.certificate;
    let min_s = c.surfaces.iter().map(|s| s.min_s).fold(f64::INFINITY, f64::min);
    outcome(
        c.verdict == Verdict::CertifiedStable && c.surfaces.len() == 6 && min_s >= -1e-4 && secs < 10.0,
        format!(
            "verdict {}, {} surfaces, min S {min_s:.3e} (>= -1e-4), {secs:.2} s (< 10 s)",
            c.verdict,
            c.surfaces.len()
        ),
    )
}

fn harmonic_oscillator() -> Outcome {
    let sys = system(r#"["y", "-x"]"#, "x^2+y^2", "");
    let c = run_certify(&sys, &RunOptions::default()).unwrap().certificate;
    let max_abs = c
        .surfaces
        .iter()
        .map(|s| s.min_s.abs().max(s.max_s.abs()))
        .fold(0.0, f64::max);
    outcome(
        c.verdict == Verdict::CertifiedStable && c.surfaces.len() == 6 && max_abs <= 1e-4,
        format!("verdict {}, max |S| {max_abs:.3e} (<= 1e-4)", c.verdict),
    )
}

fn source_violation() -> Outcome {
    let sys = system(r#"["x", "y"]"#, "x^2+y^2", "[falsify]\ntrials = 200\nhorizon = 100.0\n");
    let out = run_certify(&sys, &RunOptions::default()).unwrap();
    let c = &out.certificate;
    let family = out.family.as_ref().unwrap();
    let (report, _) = containment_test(&out.field, family, &FalsifyConfig::default()).unwrap();
    let rate = report.escapes as f64 / report.trials as f64;
    let outer = family.outermost().unwrap();
    let cfg = IntegratorConfig {
        sample_spacing: Some(outer.cell),
        ..IntegratorConfig::default()
    };
    let (_, t) = escape_time(&out.field, outer, &[0.1, 0.0], 100.0, &cfg).unwrap();
    let t = t.unwrap_or(f64::NAN);
    let ws = c.witness.as_ref().map_or(f64::NAN, |w| w.s);
    outcome(
        c.verdict == Verdict::Violated && ws <= -0.2 && rate >= 0.95 && (t - 2.303).abs() <= 0.1,
        format!(
            "verdict {}, witness S {ws:.3} (<= -0.2), escapes {}/{} (>= 95%), escape time {t:.4} (2.303 +- 0.1)",
            c.verdict, report.escapes, report.trials
        ),
    )
}

fn quasi_isolation() -> Outcome {
    let cases = [
        ("x^2+y^2", QuasiVerdict::QuasiIsolated),
        ("x^2+y^4", QuasiVerdict::QuasiIsolated),
        ("x^4+y^4", QuasiVerdict::QuasiIsolated),
        ("x^2", QuasiVerdict::NotQuasiIsolated),
        ("x*y", QuasiVerdict::NotQuasiIsolated),
        ("x^3-3*x*y^2", QuasiVerdict::NotQuasiIsolated),
        ("x^2-y^2", QuasiVerdict::NotQuasiIsolated),
    ];
    let mut wrong = Vec::new();
    for (src, expected) in cases {
        let f = parse_expression(src, Variables::cartesian(2)).unwrap();
        let grid = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 2.0, 256)).unwrap();
        let got = check_quasi_isolated(&f, &[0.0, 0.0], &grid, &QuasiParams::default()).map(|r| r.verdict);
        if got.as_ref() != Ok(&expected) {
            wrong.push(format!("{src}: {got:?}"));
        }
    }
    let right = cases.len() - wrong.len();
    outcome(
        wrong.is_empty(),
        format!("{right}/{} listed functions classified correctly {wrong:?}", cases.len()),
    )
}

fn gradient_theorem() -> Outcome {
    let params = CertifyParams::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for (src, expected) in [
        ("x^2+y^2", GradientVerdict::StableForF),
        ("-(x^2+y^2)", GradientVerdict::StableForMinusF),
    ] {
        let f = parse_expression(src, Variables::cartesian(2)).unwrap();
        let grid = build_grid(&f, &GridSpec::centered(&[0.0, 0.0], 2.0, 256)).unwrap();
        match classify_gradient_system(&f, &[0.0, 0.0], &grid, &params) {
            Ok(c) => {
                let definite = c.positive.is_empty() || c.negative.is_empty();
                let ok = c.verdict == expected && c.certificate.verdict == Verdict::CertifiedStable && definite;
                pass &= ok;
                notes.push(format!(
                    "{src}: {} with sub-certificate {} ({}+/{}-)",
                    c.verdict,
                    c.certificate.verdict,
                    c.positive.len(),
                    c.negative.len()
                ));
            }
            Err(e) => {
                pass = false;
                notes.push(format!("{src}: {e}"));
            }
        }
    }
    outcome(pass, notes.join("; "))
}

fn pendulum() -> Outcome {
    let text = "mode = \"hamiltonian\"\nfunction = \"z^2/2-cos(y)\"\nequilibrium = [0.0, 0.0]\n\
                [grid]\nlo = [-2.0, -2.0]\nhi = [2.0, 2.0]\nresolution = 256\n\
                [tolerances]\ntol_h = 1e-6\n";
    let sys = SystemConfig::from_toml(text).unwrap().validate().unwrap();
    let out = run_certify(&sys, &RunOptions::default()).unwrap();
    let c = &out.certificate;
    // recompute S at the vertices with gradient normals, independent of the report
    let family = out.family.as_ref().unwrap();
    let mut max_abs = 0.0f64;
    for s in &family.surfaces {
        let rep = sign_condition(&out.field, &s.surface, 0.0, &SignParams::default()).unwrap();
        max_abs = max_abs.max(rep.max_abs());
    }
    outcome(
        c.verdict == Verdict::CertifiedStable && max_abs <= 1e-6,
        format!("verdict {}, {} surfaces, max |S| {max_abs:.3e} (<= 1e-6)", c.verdict, family.surfaces.len()),
    )
}

fn geometry() -> Outcome {
    let circle = parse_expression("x^2+y^2", Variables::cartesian(2)).unwrap();
    let mut residuals = Vec::new();
    let mut pass = true;
    for res in [128usize, 256] {
        let grid = build_grid(&circle, &GridSpec::centered(&[0.0, 0.0], 2.0, res)).unwrap();
        let comps = extract_level_components(&grid, 1.0).unwrap();
        let h = classify_closed(&comps[0]).unwrap();
        let r = h
            .vertices
            .iter()
            .map(|v| ((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs())
            .fold(0.0, f64::max);
        pass &= r <= 4.0 / (res * res) as f64;
        residuals.push(r);
    }
    pass &= residuals[1] <= residuals[0] / 2.0;

    let grid = build_grid(&circle, &GridSpec::centered(&[0.0, 0.0], 2.0, 128)).unwrap();
    let h = orient_inward(
        &classify_closed(&extract_level_components(&grid, 1.0).unwrap()[0]).unwrap(),
        &[0.0, 0.0],
        None,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut total) = (0, 0);
    while total < 1000 {
        let p: [f64; 2] = [rng.random_range(-1.9..1.9), rng.random_range(-1.9..1.9)];
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        if (r - 1.0).abs() <= h.cell {
            continue;
        }
        total += 1;
        if bounds_point(&h, &p).ok() == Some(r < 1.0) {
            agree += 1;
        }
    }
    pass &= agree == total;

    let sphere = parse_expression("x^2+y^2+z^2", Variables::cartesian(3)).unwrap();
    let grid = build_grid(&sphere, &GridSpec::centered(&[0.0, 0.0, 0.0], 2.0, 64)).unwrap();
    let comps = extract_level_components(&grid, 1.0).unwrap();
    let watertight = match classify_closed(&comps[0]) {
        Ok(h) => {
            let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
            for t in h.triangles() {
                for e in 0..3 {
                    *directed.entry((t[e], t[(e + 1) % 3])).or_default() += 1;
                }
            }
            let paired = directed.iter().all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1));
            let euler = h.vertex_count() as i64 - (directed.len() / 2) as i64 + h.triangles().len() as i64;
            paired && euler == 2
        }
        Err(_) => false,
    };
    pass &= watertight;
    outcome(
        pass,
        format!(
            "radial residual {:.3e} @128 (<= {:.3e}), {:.3e} @256 (<= {:.3e}), ratio {:.2} (>= 2); \
             bounds_point {agree}/{total}; sphere res 64 watertight: {watertight}",
            residuals[0],
            4.0 / 128f64.powi(2),
            residuals[1],
            4.0 / 256f64.powi(2),
            residuals[0] / residuals[1]
        ),
    )
}

fn random_smooth(rng: &mut ChaCha8Rng, depth: u32, dim: usize) -> Node {
    let b = Box::new;
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.6) {
            Node::Var(rng.random_range(0..dim))
        } else {
            Node::Const(rng.random_range(-2.0..2.0))
        };
    }
    let mut sub = || random_smooth(rng, depth - 1, dim);
    let (x, y) = (sub(), sub());
    match rng.random_range(0..8) {
        0 => Node::Add(b(x), b(y)),
        1 => Node::Sub(b(x), b(y)),
        2 => Node::Mul(b(x), b(y)),
        3 => Node::Div(b(x), b(Node::Add(b(Node::Const(2.0)), b(Node::Call(Func::Cos, b(y)))))),
        4 => Node::Pow(b(x), b(Node::Const(rng.random_range(2..4) as f64))),
        5 => Node::Neg(b(x)),
        6 => Node::Call([Func::Sin, Func::Cos, Func::Tanh][rng.random_range(0..3)], b(x)),
        _ => Node::Call(Func::Exp, b(Node::Call(Func::Sin, b(x)))),
    }
}

fn derivative_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let h = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dim = rng.random_range(2..4);
        let e = ScalarExpr::new(random_smooth(&mut rng, 5, dim), Variables::cartesian(dim));
        let g = gradient(&e).unwrap();
        let p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let exact = g.evaluate(&p).unwrap();
        for i in 0..dim {
            let mut q = p.clone();
            q[i] += h;
            let up = e.eval_raw(&q);
            q[i] -= 2.0 * h;
            let fd = (up - e.eval_raw(&q)) / (2.0 * h);
            worst = worst.max((fd - exact[i]).abs() / exact[i].abs().max(1.0));
        }
    }
    outcome(worst <= 1e-5, format!("100 expressions, worst relative error {worst:.3e} (<= 1e-5)"))
}

fn determinism() -> Outcome {
    let sys = system(r#"["x-y", "x+y"]"#, "x^2+y^2", "[falsify]\ntrials = 50\nhorizon = 5.0\n");
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_certify(&sys, &RunOptions::default()).unwrap().certificate.to_json())
    };
    let docs = [run(1), run(4), run(4)];
    let same = docs.iter().all(|d| d == &docs[0]);
    outcome(same, format!("3 runs (1, 4, 4 threads), {} bytes, identical: {same}", docs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("damped oscillator certified", damped_oscillator),
        ("harmonic oscillator tangent case", harmonic_oscillator),
        ("source field violation", source_violation),
        ("quasi-isolation oracle", quasi_isolation),
        ("gradient classification", gradient_theorem),
        ("pendulum hamiltonian", pendulum),
        ("geometry oracles", geometry),
        ("symbolic derivatives", derivative_check),
        ("byte-identical certificates", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {}: {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
