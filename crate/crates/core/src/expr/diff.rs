//! Symbolic differentiation. Results are built through folding constructors
//! that evaluate constant subtrees and drop additive zeros and unit factors.

use super::{Func, Node};

fn as_const(n: &Node) -> Option<f64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

fn folded(v: f64, fallback: impl FnOnce() -> Node) -> Node {
    if v.is_finite() {
        Node::Const(v)
    } else {
        fallback()
    }
}

pub(super) fn neg(a: Node) -> Node {
    match a {
        Node::Const(c) => Node::Const(-c),
        Node::Neg(inner) => *inner,
        other => Node::Neg(Box::new(other)),
    }
}

pub(super) fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x + y, || Node::Add(Box::new(a), Box::new(b))),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Node::Add(Box::new(a), Box::new(b)),
    }
}

pub(super) fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x - y, || Node::Sub(Box::new(a), Box::new(b))),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Node::Sub(Box::new(a), Box::new(b)),
    }
}

pub(super) fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x * y, || Node::Mul(Box::new(a), Box::new(b))),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Node::Const(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        (Some(x), _) if x == -1.0 => neg(b),
        (_, Some(y)) if y == -1.0 => neg(a),
        _ => Node::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(x / y, || Node::Div(Box::new(a), Box::new(b))),
        (Some(x), _) if x == 0.0 => Node::Const(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Node::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => folded(Node::Pow(Box::new(Node::Const(x)), Box::new(Node::Const(y))).eval(&[]), || {
            Node::Pow(Box::new(a), Box::new(b))
        }),
        (_, Some(y)) if y == 1.0 => a,
        (_, Some(y)) if y == 0.0 => Node::Const(1.0),
        _ => Node::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Node) -> Node {
    match as_const(&a) {
        Some(x) => folded(Node::Call(f, Box::new(Node::Const(x))).eval(&[]), || {
            Node::Call(f, Box::new(a))
        }),
        None => Node::Call(f, Box::new(a)),
    }
}

pub(super) fn derivative(node: &Node, i: usize) -> Node {
    if !node.depends_on(i) {
        return Node::Const(0.0);
    }
    match node {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(j) => Node::Const(if *j == i { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative(a, i)),
        Node::Add(a, b) => add(derivative(a, i), derivative(b, i)),
        Node::Sub(a, b) => sub(derivative(a, i), derivative(b, i)),
        Node::Mul(a, b) => add(
            mul(derivative(a, i), (**b).clone()),
            mul((**a).clone(), derivative(b, i)),
        ),
        Node::Div(a, b) => {
            if !b.depends_on(i) {
                return div(derivative(a, i), (**b).clone());
            }
            let num = sub(
                mul(derivative(a, i), (**b).clone()),
                mul((**a).clone(), derivative(b, i)),
            );
            div(num, pow((**b).clone(), Node::Const(2.0)))
        }
        Node::Pow(base, exponent) => {
            if !exponent.depends_on(i) {
                // c * u^(c-1) * u'
                let lowered = sub((**exponent).clone(), Node::Const(1.0));
                let outer = mul((**exponent).clone(), pow((**base).clone(), lowered));
                return mul(outer, derivative(base, i));
            }
            // u^v * (v' ln u + v u'/u)
            let log_term = mul(derivative(exponent, i), call(Func::Ln, (**base).clone()));
            let ratio = div(
                mul((**exponent).clone(), derivative(base, i)),
                (**base).clone(),
            );
            mul(node.clone(), add(log_term, ratio))
        }
        Node::Call(f, a) => {
            let inner = derivative(a, i);
            let u = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, u),
                Func::Cos => neg(call(Func::Sin, u)),
                Func::Exp => call(Func::Exp, u),
                Func::Ln => return div(inner, u),
                Func::Sqrt => {
                    return div(inner, mul(Node::Const(2.0), call(Func::Sqrt, u)));
                }
                Func::Abs => call(Func::Sign, u),
                Func::Tanh => sub(
                    Node::Const(1.0),
                    pow(call(Func::Tanh, u), Node::Const(2.0)),
                ),
                Func::Sign => return Node::Const(0.0),
            };
            mul(outer, inner)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expression, Variables};

    fn d(src: &str, i: usize) -> String {
        parse_expression(src, Variables::cartesian(2))
            .unwrap()
            .differentiate(i)
            .unwrap()
            .to_string()
    }

    #[test]
    fn chain_rule_shapes() {
        assert_eq!(d("exp(2*x)", 0), "exp(2*x)*2");
        assert_eq!(d("ln(x)", 0), "1/x");
        assert_eq!(d("cos(y)", 1), "-sin(y)");
        assert_eq!(d("x^3", 0), "3*x^2");
        assert_eq!(d("x/y", 0), "1/y");
        assert_eq!(d("7", 0), "0");
        assert_eq!(d("y^2", 0), "0");
    }

    #[test]
    fn general_power_rule_evaluates() {
        let v = Variables::cartesian(2);
        let e = parse_expression("x^y", v).unwrap();
        let dx = e.differentiate(0).unwrap();
        let dy = e.differentiate(1).unwrap();
        let p = [1.7, 0.6];
        let expect_dx = 0.6 * 1.7f64.powf(-0.4);
        let expect_dy = 1.7f64.powf(0.6) * 1.7f64.ln();
        assert!((dx.eval_raw(&p) - expect_dx).abs() < 1e-14);
        assert!((dy.eval_raw(&p) - expect_dy).abs() < 1e-14);
    }
}
