use crate::expr::Expr;
use crate::numerics::Tolerances;

use super::{eval_named, Domain, ExprIntegral, ModelError, QuadraticCubic};

/// Worst residual of `v_p' = k + f v_p + g v_p^2 + h v_p^3` on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticularResidual {
    pub max_abs: f64,
    /// Residual divided by `max(|k|, |f v_p|, |g v_p^2|, |h v_p^3|, 1)`.
    pub max_rel: f64,
    pub at: f64,
}

pub fn particular_residual(eq: &QuadraticCubic, v_p: &Expr, domain: &Domain) -> Result<ParticularResidual, ModelError> {
    let dv = v_p.derivative();
    let mut worst = ParticularResidual {
        max_abs: 0.0,
        max_rel: 0.0,
        at: domain.min,
    };
    for y in domain.grid() {
        let v = eval_named("v_p", v_p, y)?;
        let terms = eq.terms(y, v)?;
        let lhs = eval_named("v_p'", &dv, y)?;
        let res = (lhs - terms.iter().sum::<f64>()).abs();
        let scale = terms.iter().fold(1.0f64, |a, t| a.max(t.abs()));
        let rel = res / scale;
        if rel > worst.max_rel {
            worst = ParticularResidual {
                max_abs: res,
                max_rel: rel,
                at: y,
            };
        }
    }
    Ok(worst)
}

/// `v = v_p + F`, `F = E w` with `E = exp ∫ (f + 2 g v_p + 3 h v_p^2)`,
/// which leaves `w' = (g + 3 h v_p) E w^2 + h E^2 w^3`.
#[derive(Debug, Clone)]
pub struct ParticularReduction {
    pub v_p: Expr,
    /// `f + 2 g v_p + 3 h v_p^2`, the linear coefficient of the `F` equation.
    pub exponent: Expr,
    /// `g + 3 h v_p`.
    pub quadratic_coeff: Expr,
    /// `h`.
    pub cubic_coeff: Expr,
    log_e: ExprIntegral,
}

impl ParticularReduction {
    /// `E(y)`, normalized to 1 at the left end of the domain.
    pub fn e(&self, y: f64) -> Result<f64, ModelError> {
        Ok(self.log_e.eval(y)?.exp())
    }

    pub fn ln_e(&self, y: f64) -> Result<f64, ModelError> {
        self.log_e.eval(y)
    }

    /// Coefficients `(A, B)` of `w' = A w^2 + B w^3`.
    pub fn w_coefficients(&self, y: f64) -> Result<(f64, f64), ModelError> {
        let e = self.e(y)?;
        let a = eval_named("g+3h*v_p", &self.quadratic_coeff, y)? * e;
        let b = eval_named("h", &self.cubic_coeff, y)? * e * e;
        Ok((a, b))
    }

    /// Right-hand side of the equation for `F = v - v_p`.
    pub fn f_rhs(&self, y: f64, big_f: f64) -> Result<f64, ModelError> {
        let lin = eval_named("exponent", &self.exponent, y)?;
        let quad = eval_named("g+3h*v_p", &self.quadratic_coeff, y)?;
        let cub = eval_named("h", &self.cubic_coeff, y)?;
        Ok(big_f * (lin + big_f * (quad + big_f * cub)))
    }

    /// `U = E w`, i.e. back from `w` to `F`.
    pub fn big_f_from_w(&self, y: f64, w: f64) -> Result<f64, ModelError> {
        Ok(self.e(y)? * w)
    }
}

/// Verifies `v_p` against the first-kind equation to relative tolerance
/// `rel_tol` and builds the reduced equation.
pub fn reduce_by_particular(
    eq: &QuadraticCubic,
    v_p: &Expr,
    rel_tol: f64,
    tol: &Tolerances,
) -> Result<ParticularReduction, ModelError> {
    let res = particular_residual(eq, v_p, &eq.domain)?;
    if res.max_rel > rel_tol {
        return Err(ModelError::NotParticular {
            residual: res.max_abs,
            relative: res.max_rel,
            at: res.at,
        });
    }
    let f = &eq.linear;
    let g = &eq.quadratic;
    let h = &eq.cubic;
    let exponent = (f + 2.0 * g.clone() * v_p + 3.0 * h.clone() * v_p * v_p).simplify();
    let quadratic_coeff = (g + 3.0 * h.clone() * v_p).simplify();
    let log_e = ExprIntegral::new(exponent.clone(), &eq.domain, tol)?;
    Ok(ParticularReduction {
        v_p: v_p.clone(),
        exponent,
        quadratic_coeff,
        cubic_coeff: h.clone(),
        log_e,
    })
}
