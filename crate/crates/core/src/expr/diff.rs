use super::{Expr, Func};

pub(super) fn derivative(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) => Expr::zero(),
        Expr::Var => Expr::one(),
        Expr::Neg(a) => -derivative(a),
        Expr::Add(a, b) => derivative(a) + derivative(b),
        Expr::Sub(a, b) => derivative(a) - derivative(b),
        Expr::Mul(a, b) => derivative(a) * (**b).clone() + (**a).clone() * derivative(b),
        Expr::Div(a, b) => {
            let num = derivative(a) * (**b).clone() - (**a).clone() * derivative(b);
            num / (**b).clone().powf(2.0)
        }
        Expr::Pow(a, b) => {
            if !b.depends_on_var() {
                let lowered = match b.as_const() {
                    Some(c) => Expr::Const(c - 1.0),
                    None => (**b).clone() - 1.0,
                };
                (**b).clone() * (**a).clone().pow(lowered) * derivative(a)
            } else {
                // d(a^b) = a^b (b' ln a + b a'/a)
                let log_part = derivative(b) * (**a).clone().ln();
                let ratio = (**b).clone() * derivative(a) / (**a).clone();
                e.clone() * (log_part + ratio)
            }
        }
        Expr::Call(func, a) => {
            let inner = (**a).clone();
            let outer = match func {
                Func::Sin => inner.call(Func::Cos),
                Func::Cos => -inner.call(Func::Sin),
                Func::Tan => 1.0 / inner.call(Func::Cos).powf(2.0),
                Func::Exp => inner.exp(),
                Func::Ln => 1.0 / inner,
                Func::Sqrt => 0.5 / inner.sqrt(),
                Func::Tanh => 1.0 - inner.call(Func::Tanh).powf(2.0),
                Func::Atan => 1.0 / (1.0 + inner.powf(2.0)),
                Func::Atanh => 1.0 / (1.0 - inner.powf(2.0)),
                Func::Abs => inner.call(Func::Sign),
                Func::Sign => return Expr::zero(),
            };
            outer * derivative(a)
        }
    }
}

fn fold(e: Expr) -> Expr {
    if e.depends_on_var() {
        return e;
    }
    match e.eval(0.0) {
        Ok(v) => Expr::Const(v),
        Err(_) => e,
    }
}

pub(super) fn simplify(e: &Expr) -> Expr {
    let out = match e {
        Expr::Const(_) | Expr::Var => return e.clone(),
        Expr::Neg(a) => match simplify(a) {
            Expr::Neg(inner) => *inner,
            Expr::Const(c) => Expr::Const(-c),
            other => -other,
        },
        Expr::Call(func, a) => simplify(a).call(*func),
        Expr::Add(a, b) => match (simplify(a), simplify(b)) {
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, Expr::Neg(b)) => a - *b,
            (a, b) => a + b,
        },
        Expr::Sub(a, b) => match (simplify(a), simplify(b)) {
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => simplify(&-b),
            (a, Expr::Neg(b)) => a + *b,
            (a, Expr::Const(c)) if c < 0.0 => a + Expr::Const(-c),
            (a, b) => a - b,
        },
        Expr::Mul(a, b) => match (simplify(a), simplify(b)) {
            (a, b) if a.is_zero() || b.is_zero() => Expr::zero(),
            (Expr::Const(c1), Expr::Const(c2)) => Expr::Const(c1 * c2),
            (Expr::Const(c), b) if c == 1.0 => b,
            (a, Expr::Const(c)) if c == 1.0 => a,
            (Expr::Const(c), b) if c == -1.0 => simplify(&-b),
            (a, Expr::Const(c)) if c == -1.0 => simplify(&-a),
            // Collect constant factors at the front: c1*(c2*b) -> (c1 c2)*b.
            (Expr::Const(c1), Expr::Mul(inner_a, inner_b)) if inner_a.as_const().is_some() => {
                Expr::Const(c1 * inner_a.as_const().unwrap_or(1.0)) * *inner_b
            }
            (a, Expr::Const(c)) => simplify(&(Expr::Const(c) * a)),
            (a, b) => a * b,
        },
        Expr::Div(a, b) => match (simplify(a), simplify(b)) {
            (a, Expr::Const(c)) if c == 1.0 => a,
            (a, b) if a.is_zero() && !b.is_zero() => Expr::zero(),
            (a, b) => a / b,
        },
        Expr::Pow(a, b) => match (simplify(a), simplify(b)) {
            (a, Expr::Const(c)) if c == 1.0 => a,
            (_, Expr::Const(c)) if c == 0.0 => Expr::one(),
            (Expr::Const(c), _) if c == 1.0 => Expr::one(),
            (a, b) => a.pow(b),
        },
    };
    fold(out)
}
