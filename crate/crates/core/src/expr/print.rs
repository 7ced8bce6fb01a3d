//! Printing with the minimum parentheses needed for the parser to rebuild
//! the identical tree.

use super::{Node, Variables};

const EXPR: u8 = 0;
const TERM: u8 = 1;
const UNARY: u8 = 2;
const POWER: u8 = 3;
const PRIMARY: u8 = 4;

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Add(..) | Node::Sub(..) => EXPR,
        Node::Mul(..) | Node::Div(..) => TERM,
        Node::Neg(_) => UNARY,
        Node::Pow(..) => POWER,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => PRIMARY,
    }
}

fn number(v: f64, out: &mut String) {
    if v.is_nan() {
        out.push_str("(0/0)");
        return;
    }
    if v.is_infinite() {
        out.push_str(if v > 0.0 { "(1/0)" } else { "(-1/0)" });
        return;
    }
    let neg = v.is_sign_negative();
    let mag = v.abs();
    let body = if mag == 0.0 || (1e-6..1e16).contains(&mag) {
        format!("{mag}")
    } else {
        format!("{mag:e}")
    };
    if neg {
        out.push_str("(-");
        out.push_str(&body);
        out.push(')');
    } else {
        out.push_str(&body);
    }
}

fn write(node: &Node, min: u8, vars: &Variables, out: &mut String) {
    let wrap = precedence(node) < min;
    if wrap {
        out.push('(');
    }
    match node {
        Node::Const(v) => number(*v, out),
        Node::Var(i) => out.push_str(&vars.name(*i)),
        Node::Neg(a) => {
            out.push('-');
            write(a, UNARY, vars, out);
        }
        Node::Add(a, b) | Node::Sub(a, b) => {
            write(a, EXPR, vars, out);
            out.push(if matches!(node, Node::Add(..)) { '+' } else { '-' });
            write(b, TERM, vars, out);
        }
        Node::Mul(a, b) | Node::Div(a, b) => {
            write(a, TERM, vars, out);
            out.push(if matches!(node, Node::Mul(..)) { '*' } else { '/' });
            write(b, UNARY, vars, out);
        }
        Node::Pow(a, b) => {
            write(a, PRIMARY, vars, out);
            out.push('^');
            write(b, UNARY, vars, out);
        }
        Node::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write(a, EXPR, vars, out);
            out.push(')');
        }
    }
    if wrap {
        out.push(')');
    }
}

pub(super) fn render(node: &Node, vars: &Variables) -> String {
    let mut out = String::new();
    write(node, EXPR, vars, &mut out);
    out
}
