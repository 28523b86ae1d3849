//! Univariate coefficient expressions.
//!
//! Every coefficient function in the crate (`f(y)`, `k(y)`, `p(x)`, ...) is an
//! [`Expr`]: a small immutable tree over a single free variable. Expressions
//! can be parsed from text, evaluated with explicit domain errors, printed
//! back in parseable form, differentiated symbolically and lightly simplified.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("-" | "+") unary | power ;
//! power   = atom [ "^" unary ] ;            (* right associative *)
//! atom    = number | "pi" | "e" | var | func "(" expr ")" | "(" expr ")" ;
//! var     = "x" | "y" ;
//! func    = "sin" | "cos" | "tan" | "exp" | "ln" | "sqrt" | "tanh"
//!         | "atan" | "atanh" | "abs" | "sign" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ```

mod diff;
mod parse;

use std::fmt;
use std::ops;

use thiserror::Error;

pub use parse::{parse, parse_in, ParseError};

/// The free variable an expression is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Variable {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::X => "x",
            Variable::Y => "y",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Tanh,
    Atan,
    Atanh,
    Abs,
    /// Derivative of `abs`; undefined at zero.
    Sign,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Tanh,
        Func::Atan,
        Func::Atanh,
        Func::Abs,
        Func::Sign,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
            Func::Atan => "atan",
            Func::Atanh => "atanh",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, a: f64) -> Result<f64, DomainKind> {
        let value = match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Tan => a.tan(),
            Func::Exp => a.exp(),
            Func::Ln => {
                if a <= 0.0 {
                    return Err(DomainKind::LogNonPositive);
                }
                a.ln()
            }
            Func::Sqrt => {
                if a < 0.0 {
                    return Err(DomainKind::SqrtNegative);
                }
                a.sqrt()
            }
            Func::Tanh => a.tanh(),
            Func::Atan => a.atan(),
            Func::Atanh => {
                if a <= -1.0 || a >= 1.0 {
                    return Err(DomainKind::AtanhOutside);
                }
                a.atanh()
            }
            Func::Abs => a.abs(),
            Func::Sign => {
                if a == 0.0 {
                    return Err(DomainKind::SignAtZero);
                }
                a.signum()
            }
        };
        Ok(value)
    }
}

/// Why an evaluation left the real domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    LogNonPositive,
    SqrtNegative,
    DivisionByZero,
    AtanhOutside,
    /// Non-integer power of a non-positive base.
    NegativeBase,
    SignAtZero,
    NonFinite,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            DomainKind::LogNonPositive => "logarithm of a non-positive value",
            DomainKind::SqrtNegative => "square root of a negative value",
            DomainKind::DivisionByZero => "division by zero",
            DomainKind::AtanhOutside => "atanh argument outside (-1, 1)",
            DomainKind::NegativeBase => "non-integer power of a non-positive base",
            DomainKind::SignAtZero => "sign (derivative of abs) at zero",
            DomainKind::NonFinite => "non-finite intermediate value",
        };
        f.write_str(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("domain error at {at}: {kind}")]
pub struct EvalError {
    pub kind: DomainKind,
    pub at: f64,
}

/// Expression tree over one free variable.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Neg(Box<Expr>),
    Call(Func, Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        Expr::Const(value)
    }

    pub fn zero() -> Expr {
        Expr::Const(0.0)
    }

    pub fn one() -> Expr {
        Expr::Const(1.0)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn call(self, func: Func) -> Expr {
        Expr::Call(func, Box::new(self))
    }

    pub fn pow(self, exponent: impl Into<Expr>) -> Expr {
        Expr::Pow(Box::new(self), Box::new(exponent.into()))
    }

    pub fn powf(self, exponent: f64) -> Expr {
        self.pow(Expr::Const(exponent))
    }

    pub fn sqrt(self) -> Expr {
        self.call(Func::Sqrt)
    }

    pub fn ln(self) -> Expr {
        self.call(Func::Ln)
    }

    pub fn abs(self) -> Expr {
        self.call(Func::Abs)
    }

    pub fn exp(self) -> Expr {
        self.call(Func::Exp)
    }

    /// True when the tree references the free variable.
    pub fn depends_on_var(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_var(),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => a.depends_on_var() || b.depends_on_var(),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Structurally the constant zero (after simplification this also
    /// catches e.g. `0*y`).
    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Evaluates the expression at `at`.
    pub fn eval(&self, at: f64) -> Result<f64, EvalError> {
        self.eval_inner(at).map_err(|kind| EvalError { kind, at })
    }

    fn eval_inner(&self, at: f64) -> Result<f64, DomainKind> {
        let value = match self {
            Expr::Const(c) => *c,
            Expr::Var => at,
            Expr::Neg(a) => -a.eval_inner(at)?,
            Expr::Call(func, a) => func.apply(a.eval_inner(at)?)?,
            Expr::Add(a, b) => a.eval_inner(at)? + b.eval_inner(at)?,
            Expr::Sub(a, b) => a.eval_inner(at)? - b.eval_inner(at)?,
            Expr::Mul(a, b) => a.eval_inner(at)? * b.eval_inner(at)?,
            Expr::Div(a, b) => {
                let num = a.eval_inner(at)?;
                let den = b.eval_inner(at)?;
                if den == 0.0 {
                    return Err(DomainKind::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, b) => real_pow(a.eval_inner(at)?, b.eval_inner(at)?)?,
        };
        if value.is_finite() {
            Ok(value)
        } else {
            Err(DomainKind::NonFinite)
        }
    }

    /// Exact symbolic derivative with respect to the free variable,
    /// simplified.
    pub fn derivative(&self) -> Expr {
        diff::derivative(self).simplify()
    }

    /// Constant folding and 0/1 identity removal.
    pub fn simplify(&self) -> Expr {
        diff::simplify(self)
    }

    /// Printable form using `var` as the name of the free variable.
    pub fn display(&self, var: Variable) -> Display<'_> {
        Display { expr: self, var }
    }
}

/// Real power: integer exponents allow any base, other exponents need a
/// positive base (or zero base with positive exponent).
pub fn real_pow(base: f64, exponent: f64) -> Result<f64, DomainKind> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(DomainKind::DivisionByZero);
        }
        return Ok(base.powi(exponent as i32));
    }
    if base > 0.0 {
        Ok(base.powf(exponent))
    } else if base == 0.0 && exponent > 0.0 {
        Ok(0.0)
    } else {
        Err(DomainKind::NegativeBase)
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::Const(value)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $variant:ident) => {
        impl ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs))
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::$variant(Box::new(self), Box::new(Expr::Const(rhs)))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(Expr::Const(self)), Box::new(rhs))
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$variant(Box::new(self), Box::new(rhs.clone()))
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$variant(Box::new(self.clone()), Box::new(rhs))
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$variant(Box::new(self.clone()), Box::new(rhs.clone()))
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self.clone()))
    }
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => PREC_UNARY,
        Expr::Const(_) | Expr::Var | Expr::Call(..) => PREC_ATOM,
        Expr::Neg(_) => PREC_UNARY,
        Expr::Add(..) | Expr::Sub(..) => PREC_SUM,
        Expr::Mul(..) | Expr::Div(..) => PREC_PRODUCT,
        Expr::Pow(..) => PREC_POWER,
    }
}

/// Helper returned by [`Expr::display`].
pub struct Display<'a> {
    expr: &'a Expr,
    var: Variable,
}

impl Display<'_> {
    fn child(&self, f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
        let inner = Display { expr: e, var: self.var };
        if precedence(e) < min_prec {
            write!(f, "({inner})")
        } else {
            write!(f, "{inner}")
        }
    }
}

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.expr {
            // Debug formatting is the shortest representation that parses back
            // to the same bits.
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var => f.write_str(self.var.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                self.child(f, a, PREC_UNARY)
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                self.child(f, a, 0)?;
                f.write_str(")")
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                self.child(f, a, PREC_SUM)?;
                f.write_str(if matches!(self.expr, Expr::Add(..)) { " + " } else { " - " })?;
                self.child(f, b, PREC_SUM + 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                self.child(f, a, PREC_PRODUCT)?;
                f.write_str(if matches!(self.expr, Expr::Mul(..)) { "*" } else { "/" })?;
                self.child(f, b, PREC_PRODUCT + 1)
            }
            Expr::Pow(a, b) => {
                self.child(f, a, PREC_ATOM)?;
                f.write_str("^")?;
                self.child(f, b, PREC_UNARY)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(Variable::Y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(text: &str, at: f64) -> Result<f64, EvalError> {
        parse(text).unwrap().eval(at)
    }

    #[test]
    fn evaluates_basic_examples() {
        assert_eq!(eval("y^2", 3.0).unwrap(), 9.0);
        assert_eq!(eval("-1/(6*y+1)", 0.0).unwrap(), -1.0);
        assert_eq!(eval("exp(-2*y)", 0.0).unwrap(), 1.0);
        assert_eq!(eval("sqrt(y)", 4.0).unwrap(), 2.0);
    }

    #[test]
    fn domain_errors_are_reported() {
        assert_eq!(eval("ln(y)", -1.0).unwrap_err().kind, DomainKind::LogNonPositive);
        assert_eq!(eval("sqrt(y)", -1.0).unwrap_err().kind, DomainKind::SqrtNegative);
        assert_eq!(eval("1/y", 0.0).unwrap_err().kind, DomainKind::DivisionByZero);
        assert_eq!(eval("atanh(y)", 1.0).unwrap_err().kind, DomainKind::AtanhOutside);
        assert_eq!(eval("y^0.5", -4.0).unwrap_err().kind, DomainKind::NegativeBase);
        assert_eq!(eval("exp(y)", 1000.0).unwrap_err().kind, DomainKind::NonFinite);
    }

    #[test]
    fn integer_powers_accept_negative_bases() {
        assert_eq!(eval("y^3", -2.0).unwrap(), -8.0);
        assert_eq!(eval("y^-2", -2.0).unwrap(), 0.25);
        assert_eq!(eval("y^0.5", 0.0).unwrap(), 0.0);
        assert_eq!(eval("y^-1", 0.0).unwrap_err().kind, DomainKind::DivisionByZero);
    }

    #[test]
    fn precedence_of_unary_minus_and_power() {
        assert_eq!(eval("-y^2", 3.0).unwrap(), -9.0);
        assert_eq!(eval("2^3^2", 0.0).unwrap(), 512.0);
        assert_eq!(eval("2^-1", 0.0).unwrap(), 0.5);
        assert_eq!(eval("8/4/2", 0.0).unwrap(), 1.0);
        assert_eq!(eval("8-4-2", 0.0).unwrap(), 2.0);
    }

    #[test]
    fn display_reparses_to_the_same_tree() {
        for text in ["-y^2", "(-y)^2", "1 - (y - 2)", "y/(2*y)", "2^(y^2)", "-(-y)", "(y^2)^3"] {
            let e = parse(text).unwrap();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap(), e, "{text} -> {printed}");
        }
    }

    #[test]
    fn negative_constants_print_with_parentheses_where_needed() {
        let e = Expr::Const(-2.0).pow(Expr::Const(2.0));
        assert_eq!(e.to_string(), "(-2.0)^2.0");
        assert_eq!(e.eval(0.0).unwrap(), 4.0);
    }
}
