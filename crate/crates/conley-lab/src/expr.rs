//! A small expression language with symbolic differentiation.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, the constant `pi`,
//! the functions `sin cos exp sqrt`, and variables resolved by the caller.
//! `^` is right-associative and binds tighter than unary minus, so `-x^2 = -(x^2)`.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Sin(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    Sqrt(Box<Node>),
    Ln(Box<Node>),
}

use Node::*;

fn c(v: f64) -> Node {
    Const(v)
}

fn add(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x + y),
        (Const(x), _) if *x == 0.0 => b,
        (_, Const(y)) if *y == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x - y),
        (_, Const(y)) if *y == 0.0 => a,
        (Const(x), _) if *x == 0.0 => neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x * y),
        (Const(x), _) | (_, Const(x)) if *x == 0.0 => c(0.0),
        (Const(x), _) if *x == 1.0 => b,
        (_, Const(y)) if *y == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x / y),
        (Const(x), _) if *x == 0.0 => c(0.0),
        (_, Const(y)) if *y == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match (&a, &b) {
        (Const(x), Const(y)) => c(x.powf(*y)),
        (_, Const(y)) if *y == 1.0 => a,
        (_, Const(y)) if *y == 0.0 => c(1.0),
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Node) -> Node {
    match a {
        Const(x) => c(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn unary(f: fn(Box<Node>) -> Node, eval: fn(f64) -> f64, a: Node) -> Node {
    match a {
        Const(x) => c(eval(x)),
        other => f(Box::new(other)),
    }
}

impl Node {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            Const(x) => *x,
            Var(i) => v[*i],
            Add(a, b) => a.eval(v) + b.eval(v),
            Sub(a, b) => a.eval(v) - b.eval(v),
            Mul(a, b) => a.eval(v) * b.eval(v),
            Div(a, b) => a.eval(v) / b.eval(v),
            Pow(a, b) => {
                let base = a.eval(v);
                match **b {
                    Const(e) if e.fract() == 0.0 && e.abs() < 64.0 => base.powi(e as i32),
                    _ => base.powf(b.eval(v)),
                }
            }
            Neg(a) => -a.eval(v),
            Sin(a) => a.eval(v).sin(),
            Cos(a) => a.eval(v).cos(),
            Exp(a) => a.eval(v).exp(),
            Sqrt(a) => a.eval(v).sqrt(),
            Ln(a) => a.eval(v).ln(),
        }
    }

    pub fn derivative(&self, var: usize) -> Node {
        match self {
            Const(_) => c(0.0),
            Var(i) => c(if *i == var { 1.0 } else { 0.0 }),
            Add(a, b) => add(a.derivative(var), b.derivative(var)),
            Sub(a, b) => sub(a.derivative(var), b.derivative(var)),
            Mul(a, b) => add(
                mul(a.derivative(var), (**b).clone()),
                mul((**a).clone(), b.derivative(var)),
            ),
            Div(a, b) => div(
                sub(mul(a.derivative(var), (**b).clone()), mul((**a).clone(), b.derivative(var))),
                pow((**b).clone(), c(2.0)),
            ),
            Pow(a, b) => {
                if let Const(e) = **b {
                    mul(mul(c(e), pow((**a).clone(), c(e - 1.0))), a.derivative(var))
                } else {
                    // d(a^b) = a^b (b' ln a + b a'/a)
                    let t1 = mul(b.derivative(var), unary(Ln, f64::ln, (**a).clone()));
                    let t2 = div(mul((**b).clone(), a.derivative(var)), (**a).clone());
                    mul(self.clone(), add(t1, t2))
                }
            }
            Neg(a) => neg(a.derivative(var)),
            Sin(a) => mul(unary(Cos, f64::cos, (**a).clone()), a.derivative(var)),
            Cos(a) => neg(mul(unary(Sin, f64::sin, (**a).clone()), a.derivative(var))),
            Exp(a) => mul(self.clone(), a.derivative(var)),
            Sqrt(a) => div(a.derivative(var), mul(c(2.0), self.clone())),
            Ln(a) => div(a.derivative(var), (**a).clone()),
        }
    }

    pub fn depends_on(&self, var: usize) -> bool {
        match self {
            Const(_) => false,
            Var(i) => *i == var,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.depends_on(var) || b.depends_on(var),
            Neg(a) | Sin(a) | Cos(a) | Exp(a) | Sqrt(a) | Ln(a) => a.depends_on(var),
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(x) => write!(f, "{x}"),
            Var(i) => write!(f, "v{i}"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Neg(a) => write!(f, "(-{a})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
            Sqrt(a) => write!(f, "sqrt({a})"),
            Ln(a) => write!(f, "ln({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| Error::Parse { pos: start, msg: format!("bad number '{s}'") })?;
            out.push((start, Tok::Num(v)));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
        } else if "+-*/^()".contains(ch) {
            out.push((i, Tok::Op(ch)));
            i += 1;
        } else {
            return Err(Error::Parse { pos: i, msg: format!("unexpected character '{ch}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    len: usize,
    resolve: &'a dyn Fn(&str) -> Option<usize>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |t| t.0)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = add(lhs, self.term()?);
            } else if self.eat('-') {
                lhs = sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = mul(lhs, self.unary()?);
            } else if self.eat('/') {
                lhs = div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat('-') {
            return Ok(neg(self.unary()?));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.primary()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(pow(base, e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node> {
        let at = self.here();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(c(v))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::Parse { pos: self.here(), msg: "expected ')'".into() });
                }
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Op('(')) {
                    let f: (fn(Box<Node>) -> Node, fn(f64) -> f64) = match name.as_str() {
                        "sin" => (Sin, f64::sin),
                        "cos" => (Cos, f64::cos),
                        "exp" => (Exp, f64::exp),
                        "sqrt" => (Sqrt, f64::sqrt),
                        _ => return Err(Error::Parse { pos: at, msg: format!("unknown function '{name}'") }),
                    };
                    self.pos += 1;
                    let arg = self.expr()?;
                    if !self.eat(')') {
                        return Err(Error::Parse { pos: self.here(), msg: "expected ')'".into() });
                    }
                    return Ok(unary(f.0, f.1, arg));
                }
                if let Some(i) = (self.resolve)(&name) {
                    return Ok(Var(i));
                }
                if name == "pi" {
                    return Ok(c(std::f64::consts::PI));
                }
                Err(Error::Parse { pos: at, msg: format!("unknown variable '{name}'") })
            }
            Some(Tok::Op(o)) => Err(Error::Parse { pos: at, msg: format!("unexpected '{o}'") }),
            None => Err(Error::Parse { pos: at, msg: "unexpected end of input".into() }),
        }
    }
}

/// Parses `src`, resolving identifiers to variable slots through `resolve`.
pub fn parse(src: &str, resolve: &dyn Fn(&str) -> Option<usize>) -> Result<Node> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, len: src.len(), resolve };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse { pos: p.here(), msg: "trailing input".into() });
    }
    Ok(e)
}

/// Compiled scalar function of `vars` with symbolic gradient and Hessian.
#[derive(Clone, Debug)]
pub struct Function {
    pub source: String,
    pub vars: Vec<String>,
    value: Arc<Node>,
    grad: Arc<Vec<Node>>,
    hess: Arc<Vec<Vec<Node>>>,
}

impl Function {
    /// `aliases` map extra names onto slots, e.g. `("x", 0)`.
    pub fn new(src: &str, vars: &[String], aliases: &[(&str, usize)]) -> Result<Self> {
        let resolve = |name: &str| {
            vars.iter().position(|v| v == name).or_else(|| aliases.iter().find(|a| a.0 == name).map(|a| a.1))
        };
        let value = parse(src, &resolve)?;
        Ok(Self::from_node(src, vars, value))
    }

    pub fn from_node(src: &str, vars: &[String], value: Node) -> Self {
        let m = vars.len();
        let grad: Vec<Node> = (0..m).map(|i| value.derivative(i)).collect();
        let hess: Vec<Vec<Node>> = (0..m).map(|i| (0..m).map(|j| grad[i].derivative(j)).collect()).collect();
        Function { source: src.to_string(), vars: vars.to_vec(), value: Arc::new(value), grad: Arc::new(grad), hess: Arc::new(hess) }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        self.value.eval(v)
    }

    pub fn grad(&self, v: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(v)).collect()
    }

    pub fn partial(&self, i: usize, v: &[f64]) -> f64 {
        self.grad[i].eval(v)
    }

    pub fn second(&self, i: usize, j: usize, v: &[f64]) -> f64 {
        self.hess[i][j].eval(v)
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.value.depends_on(var)
    }

    pub fn node(&self) -> &Node {
        &self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precedence_and_associativity() {
        let f = Function::new("-x^2 + 2*3^2^0.5 - 8/4/2", &vars(&["x"]), &[]).unwrap();
        let expected = -9.0 + 2.0 * 3f64.powf(2f64.powf(0.5)) - 1.0;
        assert!((f.eval(&[3.0]) - expected).abs() < 1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let f = Function::new("sin(x1*y1) + exp(-t)*cos(x1)^3 + sqrt(1 + y1^2) / (2 + x1)", &vars(&["x1", "y1", "t"]), &[])
            .unwrap();
        let p = [0.3, -0.7, 0.4];
        for i in 0..3 {
            let mut a = p;
            let mut b = p;
            let h = 1e-6;
            a[i] += h;
            b[i] -= h;
            let fd = (f.eval(&a) - f.eval(&b)) / (2.0 * h);
            assert!((fd - f.partial(i, &p)).abs() < 1e-8, "d/d{i}");
            for j in 0..3 {
                let mut a = p;
                let mut b = p;
                a[j] += h;
                b[j] -= h;
                let fd2 = (f.partial(i, &a) - f.partial(i, &b)) / (2.0 * h);
                assert!((fd2 - f.second(i, j, &p)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn variable_exponent() {
        let f = Function::new("x^y", &vars(&["x", "y"]), &[]).unwrap();
        let p = [1.7, 0.6];
        assert!((f.partial(1, &p) - 1.7f64.powf(0.6) * 1.7f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn aliases_and_constants() {
        let f = Function::new("x*pi + y", &vars(&["x1", "y1"]), &[("x", 0), ("y", 1)]).unwrap();
        assert!((f.eval(&[1.0, 2.0]) - (std::f64::consts::PI + 2.0)).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_positions() {
        let v = vars(&["x"]);
        assert!(matches!(Function::new("x +", &v, &[]), Err(Error::Parse { .. })));
        assert!(matches!(Function::new("tan(x)", &v, &[]), Err(Error::Parse { pos: 0, .. })));
        match Function::new("x * q", &v, &[]) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Function::new("(x", &v, &[]), Err(Error::Parse { .. })));
        assert!(matches!(Function::new("x $ 2", &v, &[]), Err(Error::Parse { .. })));
    }

    #[test]
    fn scientific_notation() {
        let f = Function::new("1e-3*x + 2.5E2", &vars(&["x"]), &[]).unwrap();
        assert_eq!(f.eval(&[1000.0]), 251.0);
    }
}
