//! Scalar expressions over `n` real variables and the vector fields built
//! from them.
//!
//! Expressions are immutable trees. Evaluation is pure, so a single
//! [`ScalarExpr`] can be shared across threads.

mod diff;
mod field;
mod parse;
mod print;

pub use field::{gradient, make_gradient_system, make_hamiltonian_system, VectorFieldDef};
pub use parse::parse_expression;

use std::fmt;

use thiserror::Error;

/// Arguments closer than this to a kink (`abs`, `sign`) or to the boundary
/// of a domain (`sqrt`, fractional powers) are flagged as non-smooth.
pub const NONSMOOTH_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: found {found}, expected {}", expected.join(" or "))]
    Syntax {
        pos: usize,
        found: String,
        expected: Vec<&'static str>,
    },
    #[error("unknown variable `{name}` at {pos}")]
    UnknownVariable { name: String, pos: usize },
    #[error("unknown function `{name}` at {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("variable `{name}` at {pos} refers to index {index} but the dimension is {dim}")]
    DimensionMismatch {
        name: String,
        pos: usize,
        index: usize,
        dim: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("point has {got} coordinates, expression expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point {point:?} has a non-finite coordinate")]
    NonFinitePoint { point: Vec<f64> },
    #[error("`{subexpr}` is not finite at {point:?}")]
    NonFinite { subexpr: String, point: Vec<f64> },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("hamiltonian systems need an even dimension, got {0}")]
    OddDimension(usize),
    #[error("expression has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("variable index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("component count {components} does not match dimension {dim}")]
    ComponentCount { components: usize, dim: usize },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Built-in unary functions. `Sign` only appears as the derivative of `abs`
/// but is accepted by the parser so printed derivatives read back.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
    Sign,
}

impl Func {
    pub const ALL: [Func; 8] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
        Func::Tanh,
        Func::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sqrt => v.sqrt(),
            Func::Abs => v.abs(),
            Func::Tanh => v.tanh(),
            Func::Sign => {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// How variables are spelled in source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Naming {
    /// `x, y, z` for dimension up to 3, `x1..xn` above.
    Cartesian,
    /// Canonical coordinates of a Hamiltonian system: `y, z` for one degree
    /// of freedom, `y1..yk, z1..zk` otherwise.
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Variables {
    dim: usize,
    naming: Naming,
}

impl Variables {
    pub fn cartesian(dim: usize) -> Self {
        Variables {
            dim,
            naming: Naming::Cartesian,
        }
    }

    /// Canonical `(y, z)` coordinates with `dof` degrees of freedom.
    pub fn canonical(dof: usize) -> Self {
        Variables {
            dim: 2 * dof,
            naming: Naming::Canonical,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn naming(&self) -> Naming {
        self.naming
    }

    pub fn name(&self, index: usize) -> String {
        match self.naming {
            Naming::Cartesian if self.dim <= 3 => ["x", "y", "z"][index].to_string(),
            Naming::Cartesian => format!("x{}", index + 1),
            Naming::Canonical => {
                let k = self.dim / 2;
                let (letter, j) = if index < k {
                    ("y", index)
                } else {
                    ("z", index - k)
                };
                if k == 1 {
                    letter.to_string()
                } else {
                    format!("{letter}{}", j + 1)
                }
            }
        }
    }

    /// Resolves an identifier to a variable index. Generic `x1`/`x_1`
    /// spellings are accepted under every naming. Returns `Some(index)`
    /// even when the index is out of range so the caller can report a
    /// dimension mismatch rather than an unknown name.
    pub fn lookup(&self, ident: &str) -> Option<usize> {
        if let Some(rest) = ident.strip_prefix('x') {
            let digits = rest.strip_prefix('_').unwrap_or(rest);
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let k: usize = digits.parse().ok()?;
                return k.checked_sub(1);
            }
        }
        match self.naming {
            Naming::Cartesian => match ident {
                "x" => Some(0),
                "y" => Some(1),
                "z" => Some(2),
                _ => None,
            },
            Naming::Canonical => {
                let k = self.dim / 2;
                let mut chars = ident.chars();
                let offset = match chars.next()? {
                    'y' => 0,
                    'z' => k,
                    _ => return None,
                };
                let rest = chars.as_str();
                if rest.is_empty() {
                    return (k == 1).then_some(offset);
                }
                let digits = rest.strip_prefix('_').unwrap_or(rest);
                let j: usize = digits.parse().ok()?;
                if j == 0 || j > k {
                    return None;
                }
                Some(offset + j - 1)
            }
        }
    }
}

/// A parsed scalar expression together with its variable declaration.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarExpr {
    root: Node,
    vars: Variables,
}

impl ScalarExpr {
    pub fn new(root: Node, vars: Variables) -> Self {
        ScalarExpr { root, vars }
    }

    pub fn constant(value: f64, vars: Variables) -> Self {
        ScalarExpr::new(Node::Const(value), vars)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> Variables {
        self.vars
    }

    pub fn dim(&self) -> usize {
        self.vars.dim
    }

    /// Evaluates without any finiteness checks.
    pub fn eval_raw(&self, p: &[f64]) -> f64 {
        self.root.eval(p)
    }

    /// Evaluates at `p`, reporting the first (innermost) subexpression that
    /// produces a non-finite value.
    pub fn evaluate(&self, p: &[f64]) -> Result<f64, EvalError> {
        if p.len() != self.vars.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.vars.dim,
                got: p.len(),
            });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(EvalError::NonFinitePoint { point: p.to_vec() });
        }
        let v = self.root.eval(p);
        if v.is_finite() {
            return Ok(v);
        }
        let culprit = self.root.first_non_finite(p).unwrap_or(&self.root);
        Err(EvalError::NonFinite {
            subexpr: print::render(culprit, &self.vars),
            point: p.to_vec(),
        })
    }

    /// Exact symbolic partial derivative with respect to variable `index`.
    /// Derivatives of `abs` are expressed through `sign`; see
    /// [`ScalarExpr::nonsmooth_at`] for where they are unreliable.
    pub fn differentiate(&self, index: usize) -> Result<ScalarExpr, FieldError> {
        if index >= self.vars.dim {
            return Err(FieldError::IndexOutOfRange {
                index,
                dim: self.vars.dim,
            });
        }
        Ok(ScalarExpr::new(diff::derivative(&self.root, index), self.vars))
    }

    /// True when the expression contains a construct that is not C¹
    /// everywhere (`abs`, `sign`, `sqrt`, or a non-integer power).
    pub fn has_nonsmooth_parts(&self) -> bool {
        self.root.has_nonsmooth_parts()
    }

    /// Returns the first non-smooth construct whose argument sits at its
    /// kink or domain boundary at `p`.
    pub fn nonsmooth_at(&self, p: &[f64]) -> Option<String> {
        self.root
            .nonsmooth_at(p)
            .map(|n| print::render(n, &self.vars))
    }

    pub fn depends_on(&self, index: usize) -> bool {
        self.root.depends_on(index)
    }

    /// `self - c`, used to normalise a function so that `F(x0) = 0`.
    pub fn shifted(&self, c: f64) -> ScalarExpr {
        if c == 0.0 {
            return self.clone();
        }
        ScalarExpr::new(
            Node::Sub(Box::new(self.root.clone()), Box::new(Node::Const(c))),
            self.vars,
        )
    }

    pub fn negated(&self) -> ScalarExpr {
        ScalarExpr::new(diff::neg(self.root.clone()), self.vars)
    }

    pub fn scaled(&self, c: f64) -> ScalarExpr {
        ScalarExpr::new(diff::mul(Node::Const(c), self.root.clone()), self.vars)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print::render(&self.root, &self.vars))
    }
}

fn integer_exponent(e: &Node) -> Option<i32> {
    match e {
        Node::Const(c) if c.fract() == 0.0 && c.abs() < 1e9 => Some(*c as i32),
        _ => None,
    }
}

impl Node {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Var(i) => p[*i],
            Node::Neg(a) => -a.eval(p),
            Node::Add(a, b) => a.eval(p) + b.eval(p),
            Node::Sub(a, b) => a.eval(p) - b.eval(p),
            Node::Mul(a, b) => a.eval(p) * b.eval(p),
            Node::Div(a, b) => a.eval(p) / b.eval(p),
            Node::Pow(a, b) => {
                let base = a.eval(p);
                match integer_exponent(b) {
                    Some(k) => base.powi(k),
                    None => base.powf(b.eval(p)),
                }
            }
            Node::Call(f, a) => f.apply(a.eval(p)),
        }
    }

    fn children(&self) -> (Option<&Node>, Option<&Node>) {
        match self {
            Node::Const(_) | Node::Var(_) => (None, None),
            Node::Neg(a) | Node::Call(_, a) => (Some(a), None),
            Node::Add(a, b)
            | Node::Sub(a, b)
            | Node::Mul(a, b)
            | Node::Div(a, b)
            | Node::Pow(a, b) => (Some(a), Some(b)),
        }
    }

    fn first_non_finite(&self, p: &[f64]) -> Option<&Node> {
        let (a, b) = self.children();
        for child in [a, b].into_iter().flatten() {
            if let Some(n) = child.first_non_finite(p) {
                return Some(n);
            }
        }
        (!self.eval(p).is_finite()).then_some(self)
    }

    pub fn depends_on(&self, index: usize) -> bool {
        match self {
            Node::Var(i) => *i == index,
            _ => {
                let (a, b) = self.children();
                a.is_some_and(|n| n.depends_on(index)) || b.is_some_and(|n| n.depends_on(index))
            }
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            _ => {
                let (a, b) = self.children();
                a.and_then(Node::max_var).max(b.and_then(Node::max_var))
            }
        }
    }

    fn has_nonsmooth_parts(&self) -> bool {
        match self {
            Node::Call(Func::Abs | Func::Sign | Func::Sqrt, _) => true,
            Node::Pow(_, e) if integer_exponent(e).is_none() => true,
            _ => {
                let (a, b) = self.children();
                a.is_some_and(Node::has_nonsmooth_parts) || b.is_some_and(Node::has_nonsmooth_parts)
            }
        }
    }

    fn nonsmooth_at(&self, p: &[f64]) -> Option<&Node> {
        let (a, b) = self.children();
        for child in [a, b].into_iter().flatten() {
            if let Some(n) = child.nonsmooth_at(p) {
                return Some(n);
            }
        }
        let flagged = match self {
            Node::Call(Func::Abs | Func::Sign, arg) => arg.eval(p).abs() <= NONSMOOTH_EPS,
            Node::Call(Func::Sqrt, arg) => arg.eval(p) <= NONSMOOTH_EPS,
            Node::Pow(base, e) => match integer_exponent(e) {
                Some(k) => k < 0 && base.eval(p).abs() <= NONSMOOTH_EPS,
                None => {
                    let ev = e.eval(p);
                    ev < 1.0 && base.eval(p) <= NONSMOOTH_EPS
                }
            },
            Node::Div(_, den) => den.eval(p).abs() <= NONSMOOTH_EPS,
            Node::Call(Func::Ln, arg) => arg.eval(p) <= NONSMOOTH_EPS,
            _ => false,
        };
        flagged.then_some(self)
    }
}
