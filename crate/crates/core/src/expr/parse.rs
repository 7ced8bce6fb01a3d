//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | variable | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Unary minus binds looser than `^`, so `-x^2` is `-(x^2)` and `x^-2` is
//! `x^(-2)`. The parser builds the tree exactly as written; no folding.

use super::{Func, Node, ParseError, ScalarExpr, Variables};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    pos: start,
                    found: format!("malformed number `{text}`"),
                    expected: vec!["number"],
                })?;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    pos: start,
                    found: format!("character `{ch}`"),
                    expected: vec!["expression"],
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    vars: &'a Variables,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, expected: Vec<&'static str>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            found: self.peek().describe(),
            expected,
        })
    }

    fn expect(&mut self, tok: Tok, what: &'static str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.fail(vec![what])
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::UnknownFunction {
                        name: name.clone(),
                        pos,
                    })?;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, "`)`")?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match self.vars.lookup(&name) {
                    Some(index) if index < self.vars.dim() => Ok(Node::Var(index)),
                    Some(index) => Err(ParseError::DimensionMismatch {
                        name,
                        pos,
                        index,
                        dim: self.vars.dim(),
                    }),
                    None if Func::from_name(&name).is_some() => {
                        self.fail(vec!["`(` after function name"])
                    }
                    None => Err(ParseError::UnknownVariable { name, pos }),
                }
            }
            _ => self.fail(vec!["number", "variable", "function", "`(`", "`-`"]),
        }
    }
}

/// Parses `source` as an expression over the variables in `vars`.
pub fn parse_expression(source: &str, vars: Variables) -> Result<ScalarExpr, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser {
        toks,
        at: 0,
        vars: &vars,
    };
    let root = parser.expr()?;
    if *parser.peek() != Tok::End {
        return parser.fail(vec!["operator", "end of input"]);
    }
    Ok(ScalarExpr::new(root, vars))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize) -> Box<Node> {
        Box::new(Node::Var(i))
    }

    fn c(v: f64) -> Box<Node> {
        Box::new(Node::Const(v))
    }

    #[test]
    fn parses_sum_of_squares() {
        let e = parse_expression("x^2 + y^2", Variables::cartesian(2)).unwrap();
        assert_eq!(
            *e.root(),
            Node::Add(
                Box::new(Node::Pow(var(0), c(2.0))),
                Box::new(Node::Pow(var(1), c(2.0)))
            )
        );
    }

    #[test]
    fn parses_call_times_variable() {
        let e = parse_expression("sin(x)*z", Variables::cartesian(3)).unwrap();
        assert_eq!(
            *e.root(),
            Node::Mul(Box::new(Node::Call(Func::Sin, var(0))), var(2))
        );
    }

    #[test]
    fn rejects_unknown_variable() {
        let err = parse_expression("x + w", Variables::cartesian(2)).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownVariable {
                name: "w".into(),
                pos: 4
            }
        );
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let err = parse_expression("x + z", Variables::cartesian(2)).unwrap_err();
        assert!(matches!(err, ParseError::DimensionMismatch { index: 2, dim: 2, .. }));
        let err = parse_expression("x7", Variables::cartesian(4)).unwrap_err();
        assert!(matches!(err, ParseError::DimensionMismatch { index: 6, .. }));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_expression("x + * y", Variables::cartesian(2)).unwrap_err() {
            ParseError::Syntax { pos, .. } => assert_eq!(pos, 4),
            e => panic!("{e:?}"),
        }
        match parse_expression("sin(x, y)", Variables::cartesian(2)).unwrap_err() {
            ParseError::Syntax { pos, expected, .. } => {
                assert_eq!(pos, 5);
                assert_eq!(expected, vec!["`)`"]);
            }
            e => panic!("{e:?}"),
        }
        assert!(matches!(
            parse_expression("foo(x)", Variables::cartesian(2)),
            Err(ParseError::UnknownFunction { .. })
        ));
        assert!(matches!(
            parse_expression("(x", Variables::cartesian(2)),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expression("x y", Variables::cartesian(2)),
            Err(ParseError::Syntax { pos: 2, .. })
        ));
    }

    #[test]
    fn precedence() {
        let v = Variables::cartesian(2);
        let e = parse_expression("-x^2", v).unwrap();
        assert_eq!(e.eval_raw(&[3.0, 0.0]), -9.0);
        let e = parse_expression("2^-1", v).unwrap();
        assert_eq!(e.eval_raw(&[0.0, 0.0]), 0.5);
        let e = parse_expression("2^3^2", v).unwrap();
        assert_eq!(e.eval_raw(&[0.0, 0.0]), 512.0);
        let e = parse_expression("1 - 2 - 3", v).unwrap();
        assert_eq!(e.eval_raw(&[0.0, 0.0]), -4.0);
        let e = parse_expression("8/4/2", v).unwrap();
        assert_eq!(e.eval_raw(&[0.0, 0.0]), 1.0);
        let e = parse_expression("1.5e2 + .5 + 2E-1", v).unwrap();
        assert_eq!(e.eval_raw(&[0.0, 0.0]), 150.7);
    }
}
