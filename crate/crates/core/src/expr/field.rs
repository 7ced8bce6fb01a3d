use super::{parse_expression, EvalError, FieldError, ScalarExpr, Variables};

/// The right-hand side `f` of an autonomous system `dx/dt = f(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFieldDef {
    components: Vec<ScalarExpr>,
}

impl VectorFieldDef {
    pub fn new(components: Vec<ScalarExpr>) -> Result<Self, FieldError> {
        let dim = components.len();
        if dim < 2 {
            return Err(FieldError::DimensionTooSmall(dim));
        }
        for c in &components {
            if c.dim() != dim {
                return Err(FieldError::ComponentCount {
                    components: dim,
                    dim: c.dim(),
                });
            }
        }
        Ok(VectorFieldDef { components })
    }

    /// Parses one expression per component.
    pub fn parse<S: AsRef<str>>(sources: &[S], vars: Variables) -> Result<Self, FieldError> {
        if sources.len() != vars.dim() {
            return Err(FieldError::ComponentCount {
                components: sources.len(),
                dim: vars.dim(),
            });
        }
        let components = sources
            .iter()
            .map(|s| parse_expression(s.as_ref(), vars))
            .collect::<Result<Vec<_>, _>>()?;
        VectorFieldDef::new(components)
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.components
    }

    pub fn vars(&self) -> Variables {
        self.components[0].vars()
    }

    pub fn sources(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.components.iter().map(|c| c.evaluate(p)).collect()
    }

    /// Unchecked evaluation into a caller-provided buffer.
    pub fn eval_into(&self, p: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval_raw(p);
        }
    }

    pub fn negated(&self) -> VectorFieldDef {
        VectorFieldDef {
            components: self.components.iter().map(ScalarExpr::negated).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> VectorFieldDef {
        VectorFieldDef {
            components: self.components.iter().map(|e| e.scaled(c)).collect(),
        }
    }

    pub fn nonsmooth_at(&self, p: &[f64]) -> Option<String> {
        self.components.iter().find_map(|c| c.nonsmooth_at(p))
    }
}

/// `grad F = (dF/dx_1, ..., dF/dx_n)`.
pub fn gradient(f: &ScalarExpr) -> Result<VectorFieldDef, FieldError> {
    let components = (0..f.dim())
        .map(|i| f.differentiate(i))
        .collect::<Result<Vec<_>, _>>()?;
    VectorFieldDef::new(components)
}

/// The gradient system `dx/dt = -grad F`, or that of `-F` when `negate_f`
/// is set (which is `+grad F`).
pub fn make_gradient_system(f: &ScalarExpr, negate_f: bool) -> Result<VectorFieldDef, FieldError> {
    if f.dim() < 2 {
        return Err(FieldError::DimensionTooSmall(f.dim()));
    }
    let source = if negate_f { f.negated() } else { f.clone() };
    Ok(gradient(&source)?.negated())
}

/// The Hamiltonian system with `dof` degrees of freedom: the first `dof`
/// variables are positions `y`, the last `dof` are momenta `z`, and
/// `dy/dt = dF/dz`, `dz/dt = -dF/dy`.
pub fn make_hamiltonian_system(f: &ScalarExpr, dof: usize) -> Result<VectorFieldDef, FieldError> {
    let dim = f.dim();
    if !dim.is_multiple_of(2) {
        return Err(FieldError::OddDimension(dim));
    }
    if dim != 2 * dof {
        return Err(FieldError::DimensionMismatch {
            expected: 2 * dof,
            got: dim,
        });
    }
    let mut components = Vec::with_capacity(dim);
    for j in 0..dof {
        components.push(f.differentiate(dof + j)?);
    }
    for j in 0..dof {
        components.push(f.differentiate(j)?.negated());
    }
    VectorFieldDef::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &VectorFieldDef, expected: &[&str], p: &[f64]) {
        let want = VectorFieldDef::parse(expected, a.vars()).unwrap();
        let got = a.evaluate(p).unwrap();
        let exp = want.evaluate(p).unwrap();
        for (g, e) in got.iter().zip(&exp) {
            assert!((g - e).abs() <= 1e-14 * (1.0 + e.abs()), "{got:?} vs {exp:?}");
        }
    }

    #[test]
    fn gradient_examples() {
        let v = Variables::cartesian(2);
        let g = gradient(&parse_expression("x^2+y^2", v).unwrap()).unwrap();
        assert_eq!(g.sources(), vec!["2*x", "2*y"]);
        let g = gradient(&parse_expression("x*y", v).unwrap()).unwrap();
        assert_eq!(g.sources(), vec!["y", "x"]);
        let g = gradient(&parse_expression("exp(x)", v).unwrap()).unwrap();
        assert_eq!(g.sources(), vec!["exp(x)", "0"]);
    }

    #[test]
    fn gradient_system_signs() {
        let v = Variables::cartesian(2);
        let f = parse_expression("x^2+y^2", v).unwrap();
        assert_eq!(make_gradient_system(&f, false).unwrap().sources(), vec!["-(2*x)", "-(2*y)"]);
        assert_eq!(make_gradient_system(&f, true).unwrap().sources(), vec!["2*x", "2*y"]);
        let one_d = parse_expression("x^3", Variables::cartesian(1)).unwrap();
        assert_eq!(
            make_gradient_system(&one_d, false),
            Err(FieldError::DimensionTooSmall(1))
        );
    }

    #[test]
    fn hamiltonian_examples() {
        let v = Variables::canonical(1);
        let f = parse_expression("(y^2+z^2)/2", v).unwrap();
        let h = make_hamiltonian_system(&f, 1).unwrap();
        for p in [[0.3, -1.2], [2.0, 0.5], [-0.7, 0.1]] {
            close(&h, &["z", "-y"], &p);
        }
        let f = parse_expression("z^2/2 - cos(y)", v).unwrap();
        let h = make_hamiltonian_system(&f, 1).unwrap();
        for p in [[0.3, -1.2], [2.0, 0.5], [-0.7, 0.1]] {
            close(&h, &["z", "-sin(y)"], &p);
        }
        let odd = parse_expression("x+y+z", Variables::cartesian(3)).unwrap();
        assert_eq!(make_hamiltonian_system(&odd, 1), Err(FieldError::OddDimension(3)));
    }
}
