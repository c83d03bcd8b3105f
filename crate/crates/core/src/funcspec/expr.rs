//! Expression trees for scalar maps with exact symbolic differentiation.

use std::fmt;

use thiserror::Error;

/// Unary function nodes accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Neg,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Neg => "neg",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "neg" => Func::Neg,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Neg => -v,
            Func::Exp => v.exp(),
            Func::Ln => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

/// A node of an expression tree over the variables `x0 .. x{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(usize),
    Unary(Func, Box<Expr>),
    /// Power with a real exponent. Integer exponents evaluate by repeated
    /// multiplication; other exponents need a non-negative base.
    Pow(Box<Expr>, f64),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Evaluation failed because an argument left the domain of a node.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ln of non-positive argument {0}")]
    LnDomain(f64),
    #[error("non-integer power {exponent} of negative base {base}")]
    PowDomain { base: f64, exponent: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable x{index} out of range for input of length {len}")]
    VariableOutOfRange { index: usize, len: usize },
    #[error("non-finite value produced")]
    NonFinite,
}

pub(crate) fn is_integer(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() <= i32::MAX as f64
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    // Constructors below fold constant-only subtrees and nothing else.

    pub fn unary(f: Func, a: Expr) -> Expr {
        if let Expr::Const(c) = a {
            let v = f.apply(c);
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
        Expr::Unary(f, Box::new(a))
    }

    pub fn pow(a: Expr, p: f64) -> Expr {
        if let Expr::Const(c) = a {
            let v = if is_integer(p) { c.powi(p as i32) } else { c.powf(p) };
            if v.is_finite() && (c >= 0.0 || is_integer(p)) {
                return Expr::Const(v);
            }
        }
        Expr::Pow(Box::new(a), p)
    }

    pub fn binary(op: BinOp, a: Expr, b: Expr) -> Expr {
        if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
            let v = op.apply(*x, *y);
            if v.is_finite() {
                return Expr::Const(v);
            }
        }
        Expr::Binary(op, Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::unary(Func::Neg, a)
    }
    pub fn exp(a: Expr) -> Expr {
        Expr::unary(Func::Exp, a)
    }
    pub fn ln(a: Expr) -> Expr {
        Expr::unary(Func::Ln, a)
    }
    pub fn sin(a: Expr) -> Expr {
        Expr::unary(Func::Sin, a)
    }
    pub fn cos(a: Expr) -> Expr {
        Expr::unary(Func::Cos, a)
    }
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Add, a, b)
    }
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Sub, a, b)
    }
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Mul, a, b)
    }
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::binary(BinOp::Div, a, b)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.max_var(),
            Expr::Binary(_, a, b) => match (a.max_var(), b.max_var()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    pub fn references(&self, index: usize) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(i) => *i == index,
            Expr::Unary(_, a) | Expr::Pow(a, _) => a.references(index),
            Expr::Binary(_, a, b) => a.references(index) || b.references(index),
        }
    }

    /// Variables appearing directly as the base of a non-integer power.
    pub fn fractional_power_vars(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Pow(a, p) => {
                if let (Expr::Var(i), false) = (a.as_ref(), is_integer(*p)) {
                    out.push(*i);
                }
                a.fractional_power_vars(out);
            }
            Expr::Unary(_, a) => a.fractional_power_vars(out),
            Expr::Binary(_, a, b) => {
                a.fractional_power_vars(out);
                b.fractional_power_vars(out);
            }
            Expr::Const(_) | Expr::Var(_) => {}
        }
    }

    /// Rename variables: `Var(i)` becomes `Var(map(i))`.
    pub fn remap_vars(&self, map: &impl Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => Expr::Var(map(*i)),
            Expr::Unary(f, a) => Expr::Unary(*f, Box::new(a.remap_vars(map))),
            Expr::Pow(a, p) => Expr::Pow(Box::new(a.remap_vars(map)), *p),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.remap_vars(map)), Box::new(b.remap_vars(map)))
            }
        }
    }

    /// Replace every variable by the corresponding expression.
    pub fn substitute(&self, args: &[Expr]) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(i) => args[*i].clone(),
            Expr::Unary(f, a) => Expr::unary(*f, a.substitute(args)),
            Expr::Pow(a, p) => Expr::pow(a.substitute(args), *p),
            Expr::Binary(op, a, b) => Expr::binary(*op, a.substitute(args), b.substitute(args)),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => *x.get(*i).ok_or(EvalError::VariableOutOfRange {
                index: *i,
                len: x.len(),
            })?,
            Expr::Unary(f, a) => {
                let v = a.eval(x)?;
                if *f == Func::Ln && v <= 0.0 {
                    return Err(EvalError::LnDomain(v));
                }
                f.apply(v)
            }
            Expr::Pow(a, p) => {
                let base = a.eval(x)?;
                if is_integer(*p) {
                    if base == 0.0 && *p < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    base.powi(*p as i32)
                } else {
                    if base < 0.0 {
                        return Err(EvalError::PowDomain { base, exponent: *p });
                    }
                    base.powf(*p)
                }
            }
            Expr::Binary(op, a, b) => {
                let l = a.eval(x)?;
                let r = b.eval(x)?;
                if *op == BinOp::Div && r == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                op.apply(l, r)
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    /// Exact symbolic partial derivative with respect to `x{wrt}`.
    pub fn diff(&self, wrt: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(i) => Expr::Const(if *i == wrt { 1.0 } else { 0.0 }),
            Expr::Unary(f, a) => {
                let da = a.diff(wrt);
                if is_zero(&da) {
                    return Expr::Const(0.0);
                }
                let a = a.as_ref().clone();
                match f {
                    Func::Neg => d_neg(da),
                    Func::Exp => d_mul(Expr::exp(a), da),
                    Func::Ln => d_div(da, a),
                    Func::Sin => d_mul(Expr::cos(a), da),
                    Func::Cos => d_neg(d_mul(Expr::sin(a), da)),
                }
            }
            Expr::Pow(a, p) => {
                let da = a.diff(wrt);
                if is_zero(&da) {
                    return Expr::Const(0.0);
                }
                let inner = if *p - 1.0 == 1.0 {
                    a.as_ref().clone()
                } else if *p - 1.0 == 0.0 {
                    Expr::Const(1.0)
                } else {
                    Expr::pow(a.as_ref().clone(), *p - 1.0)
                };
                d_mul(d_mul(Expr::Const(*p), inner), da)
            }
            Expr::Binary(op, a, b) => {
                let da = a.diff(wrt);
                let db = b.diff(wrt);
                let (a, b) = (a.as_ref().clone(), b.as_ref().clone());
                match op {
                    BinOp::Add => d_add(da, db),
                    BinOp::Sub => d_sub(da, db),
                    BinOp::Mul => d_add(d_mul(da, b), d_mul(a, db)),
                    BinOp::Div => {
                        if is_zero(&db) {
                            d_div(da, b)
                        } else {
                            let num = d_sub(d_mul(da, b.clone()), d_mul(a, db));
                            d_div(num, Expr::pow(b, 2.0))
                        }
                    }
                }
            }
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Unary(_, a) | Expr::Pow(a, _) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    e.as_const() == Some(0.0)
}

fn is_one(e: &Expr) -> bool {
    e.as_const() == Some(1.0)
}

// Derivative builders drop additive zeros and multiplicative ones so that
// repeated differentiation does not grow the tree with dead branches.

fn d_add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        b
    } else if is_zero(&b) {
        a
    } else {
        Expr::add(a, b)
    }
}

fn d_sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        a
    } else if is_zero(&a) {
        d_neg(b)
    } else {
        Expr::sub(a, b)
    }
}

fn d_neg(a: Expr) -> Expr {
    match a {
        Expr::Unary(Func::Neg, inner) => *inner,
        other => Expr::neg(other),
    }
}

fn d_mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        Expr::Const(0.0)
    } else if is_one(&a) {
        b
    } else if is_one(&b) {
        a
    } else {
        Expr::mul(a, b)
    }
}

fn d_div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        Expr::Const(0.0)
    } else if is_one(&b) {
        a
    } else {
        Expr::div(a, b)
    }
}

pub(crate) fn fmt_number(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c == 0.0 {
        write!(f, "0")
    } else {
        write!(f, "{c}")
    }
}

/// Fully parenthesized canonical form, re-parseable by [`crate::funcspec::parse_expr`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => {
                write!(f, "neg(")?;
                fmt_number(-c, f)?;
                write!(f, ")")
            }
            Expr::Const(c) => fmt_number(*c, f),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Pow(a, p) => {
                write!(f, "({a}^")?;
                fmt_number(*p, f)?;
                write!(f, ")")
            }
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}
