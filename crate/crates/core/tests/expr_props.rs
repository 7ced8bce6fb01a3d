use lyapcert::expr::{
    gradient, make_gradient_system, make_hamiltonian_system, parse_expression, Func, Node, ScalarExpr, Variables,
};
use proptest::prelude::*;

fn b(n: Node) -> Box<Node> {
    Box::new(n)
}

/// Arbitrary trees over every node kind, for printing round trips.
fn any_tree(dim: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (-1e3f64..1e3).prop_map(Node::Const),
        prop::sample::select(vec![0.0, 1.0, 2.0, 0.5, 1e-9, 3e20]).prop_map(Node::Const),
        (0..dim).prop_map(Node::Var),
    ];
    leaf.prop_recursive(6, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Mul(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Div(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Pow(b(x), b(y))),
            (prop::sample::select(Func::ALL.to_vec()), inner).prop_map(|(f, a)| Node::Call(f, b(a))),
        ]
    })
}

/// Smooth, moderately scaled trees on `[-1, 1]^dim`.
fn smooth_tree(dim: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![(-2.0f64..2.0).prop_map(Node::Const), (0..dim).prop_map(Node::Var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Add(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Sub(b(x), b(y))),
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Mul(b(x), b(y))),
            // denominator bounded away from zero
            (inner.clone(), inner.clone()).prop_map(|(x, y)| Node::Div(
                b(x),
                b(Node::Add(b(Node::Const(2.0)), b(Node::Call(Func::Sin, b(y)))))
            )),
            (inner.clone(), 2u8..4).prop_map(|(x, k)| Node::Pow(b(x), b(Node::Const(k as f64)))),
            (prop::sample::select(vec![Func::Sin, Func::Cos, Func::Tanh]), inner.clone())
                .prop_map(|(f, a)| Node::Call(f, b(a))),
            inner.prop_map(|a| Node::Call(Func::Exp, b(Node::Call(Func::Sin, b(a))))),
        ]
    })
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim)
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

fn central(e: &ScalarExpr, p: &[f64], i: usize, h: f64) -> f64 {
    let mut q = p.to_vec();
    q[i] = p[i] + h;
    let up = e.eval_raw(&q);
    q[i] = p[i] - h;
    (up - e.eval_raw(&q)) / (2.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn print_parse_round_trip(tree in any_tree(3), pts in prop::collection::vec(point(3), 20)) {
        let vars = Variables::cartesian(3);
        let e = ScalarExpr::new(tree, vars);
        let text = e.to_string();
        let back = parse_expression(&text, vars).unwrap();
        for p in &pts {
            prop_assert!(same(back.eval_raw(p), e.eval_raw(p)), "{} at {:?}", text, p);
        }
    }

    #[test]
    fn canonical_names_round_trip(tree in any_tree(4), p in point(4)) {
        let vars = Variables::canonical(2);
        let e = ScalarExpr::new(tree, vars);
        let back = parse_expression(&e.to_string(), vars).unwrap();
        prop_assert!(same(back.eval_raw(&p), e.eval_raw(&p)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn derivative_matches_central_difference(tree in smooth_tree(3), p in point(3)) {
        let e = ScalarExpr::new(tree, Variables::cartesian(3));
        let g = gradient(&e).unwrap();
        let exact = g.evaluate(&p).unwrap();
        for i in 0..3 {
            let d1 = central(&e, &p, i, 1e-3);
            let d2 = central(&e, &p, i, 1e-4);
            let scale = exact[i].abs().max(e.eval_raw(&p).abs()).max(1.0);
            prop_assert!((d2 - exact[i]).abs() <= 1e-5 * scale, "{} d/dx{}: {} vs {}", e, i, exact[i], d2);
            // truncation error is O(h^2): the coarse step stays within 100x
            // of the fine one, up to rounding
            prop_assert!((d1 - exact[i]).abs() <= 1e-3 * scale, "{} d/dx{}: {} vs {}", e, i, exact[i], d1);
        }
    }

    #[test]
    fn differentiation_is_linear(t1 in smooth_tree(2), t2 in smooth_tree(2), a in -3.0f64..3.0, p in point(2)) {
        let vars = Variables::cartesian(2);
        let combo = ScalarExpr::new(
            Node::Add(b(Node::Mul(b(Node::Const(a)), b(t1.clone()))), b(t2.clone())),
            vars,
        );
        let (e1, e2) = (ScalarExpr::new(t1, vars), ScalarExpr::new(t2, vars));
        for i in 0..2 {
            let lhs = combo.differentiate(i).unwrap().eval_raw(&p);
            let rhs = a * e1.differentiate(i).unwrap().eval_raw(&p) + e2.differentiate(i).unwrap().eval_raw(&p);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0), "{} vs {}", lhs, rhs);
        }
    }

    #[test]
    fn hamiltonian_field_is_orthogonal_to_gradient(tree in smooth_tree(4), p in point(4)) {
        let f = ScalarExpr::new(tree, Variables::canonical(2));
        let field = make_hamiltonian_system(&f, 2).unwrap().evaluate(&p).unwrap();
        let g = gradient(&f).unwrap().evaluate(&p).unwrap();
        let dot: f64 = field.iter().zip(&g).map(|(a, b)| a * b).sum();
        let scale: f64 = g.iter().map(|x| x * x).sum::<f64>().max(1.0);
        prop_assert!(dot.abs() <= 1e-12 * scale, "{}", dot);
    }

    #[test]
    fn gradient_system_is_minus_gradient(tree in smooth_tree(2), p in point(2)) {
        let f = ScalarExpr::new(tree, Variables::cartesian(2));
        let descent = make_gradient_system(&f, false).unwrap().evaluate(&p).unwrap();
        let ascent = make_gradient_system(&f, true).unwrap().evaluate(&p).unwrap();
        let g = gradient(&f).unwrap().evaluate(&p).unwrap();
        for i in 0..2 {
            prop_assert!(same(descent[i], -g[i]) || (descent[i] + g[i]).abs() <= 1e-14 * g[i].abs());
            prop_assert!(same(ascent[i], g[i]) || (ascent[i] - g[i]).abs() <= 1e-14 * g[i].abs());
        }
    }
}
