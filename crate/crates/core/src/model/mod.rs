//! Equation types and the exact transformations between the second-order
//! Liénard form, its first-order Abel form in `v = 1/y'`, and the reduction
//! of a first-kind Abel equation by a known particular solution.

use thiserror::Error;

use crate::expr::{real_pow, EvalError, Expr};
use crate::numerics::{integrate_adaptive, NumericsError, Tolerances};

mod reduction;

pub use reduction::{particular_residual, reduce_by_particular, ParticularReduction, ParticularResidual};

/// Default relative tolerance for accepting a particular solution.
pub const PARTICULAR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("exponents must satisfy n > 0, m > 0 and n != m (got n = {n}, m = {m})")]
    InvalidExponents { n: f64, m: f64 },
    #[error("invalid domain [{min}, {max}] with {samples} samples")]
    InvalidDomain { min: f64, max: f64, samples: usize },
    #[error("coefficient {name}: {source}")]
    Coefficient {
        name: &'static str,
        #[source]
        source: EvalError,
    },
    #[error("expected exponents (alpha, beta) = (1, 0), got ({alpha}, {beta})")]
    Shape { alpha: f64, beta: f64 },
    #[error("p vanishes identically on the domain")]
    LeadingCoefficientZero,
    #[error("not a particular solution: residual {residual:e} (relative {relative:e}) at {at}")]
    NotParticular { residual: f64, relative: f64, at: f64 },
    #[error("power v^{exponent} undefined at v = {v}")]
    Power { exponent: f64, v: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Closed interval with a uniform sample grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    201
}

impl Domain {
    pub fn new(min: f64, max: f64, samples: usize) -> Result<Domain, ModelError> {
        let d = Domain { min, max, samples };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max && self.samples >= 2) {
            return Err(ModelError::InvalidDomain {
                min: self.min,
                max: self.max,
                samples: self.samples,
            });
        }
        Ok(())
    }

    /// `samples` equally spaced points including both endpoints.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.samples;
        let step = (self.max - self.min) / (n - 1) as f64;
        (0..n)
            .map(|i| if i + 1 == n { self.max } else { self.min + i as f64 * step })
            .collect()
    }

    pub fn with_samples(&self, samples: usize) -> Domain {
        Domain { samples, ..*self }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.min && t <= self.max
    }
}

pub(crate) fn eval_named(name: &'static str, e: &Expr, at: f64) -> Result<f64, ModelError> {
    e.eval(at).map_err(|source| ModelError::Coefficient { name, source })
}

fn check_on_grid(named: &[(&'static str, &Expr)], domain: &Domain) -> Result<(), ModelError> {
    for t in domain.grid() {
        for (name, e) in named {
            eval_named(name, e, t)?;
        }
    }
    Ok(())
}

/// `y'' + f(y) y'^n + k(y) y'^m + g(y) y' + h(y) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LienardProblem {
    pub n: f64,
    pub m: f64,
    pub f: Expr,
    pub k: Expr,
    pub g: Expr,
    pub h: Expr,
    pub domain: Domain,
}

impl LienardProblem {
    /// Validates exponents, the domain, and that every coefficient evaluates
    /// on the sample grid.
    pub fn new(n: f64, m: f64, f: Expr, k: Expr, g: Expr, h: Expr, domain: Domain) -> Result<Self, ModelError> {
        if !(n > 0.0 && m > 0.0 && n != m && n.is_finite() && m.is_finite()) {
            return Err(ModelError::InvalidExponents { n, m });
        }
        domain.validate()?;
        check_on_grid(&[("f", &f), ("k", &k), ("g", &g), ("h", &h)], &domain)?;
        Ok(LienardProblem {
            n,
            m,
            f,
            k,
            g,
            h,
            domain,
        })
    }

    /// The four force terms `[f u^n, k u^m, g u, h]` at `(y, u = y')`.
    pub fn terms(&self, y: f64, u: f64) -> Result<[f64; 4], ModelError> {
        Ok([
            coeff_power("f", &self.f, y, u, self.n)?,
            coeff_power("k", &self.k, y, u, self.m)?,
            eval_named("g", &self.g, y)? * u,
            eval_named("h", &self.h, y)?,
        ])
    }

    /// `f u^n + k u^m + g u + h`, so that `y'' = -force`.
    pub fn force(&self, y: f64, u: f64) -> Result<f64, ModelError> {
        Ok(self.terms(y, u)?.iter().sum())
    }
}

// `c(y) * v^p`, skipping identically-zero coefficients so that their power
// never needs to be defined.
fn coeff_power(name: &'static str, c: &Expr, y: f64, v: f64, p: f64) -> Result<f64, ModelError> {
    if c.is_zero() {
        return Ok(0.0);
    }
    let cv = eval_named(name, c, y)?;
    let pv = real_pow(v, p).map_err(|_| ModelError::Power { exponent: p, v })?;
    Ok(cv * pv)
}

/// `dv/dy = f v^alpha + k v^beta + g v^2 + h v^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedAbel {
    pub alpha: f64,
    pub beta: f64,
    pub f: Expr,
    pub k: Expr,
    pub g: Expr,
    pub h: Expr,
    pub domain: Domain,
}

impl GeneralizedAbel {
    /// The four right-hand-side terms at `(y, v)`.
    pub fn terms(&self, y: f64, v: f64) -> Result<[f64; 4], ModelError> {
        Ok([
            coeff_power("f", &self.f, y, v, self.alpha)?,
            coeff_power("k", &self.k, y, v, self.beta)?,
            eval_named("g", &self.g, y)? * v * v,
            eval_named("h", &self.h, y)? * v * v * v,
        ])
    }

    pub fn rhs(&self, y: f64, v: f64) -> Result<f64, ModelError> {
        Ok(self.terms(y, v)?.iter().sum())
    }

    /// Whether both exponents are integers, so negative `v` is admissible.
    pub fn integer_exponents(&self) -> bool {
        self.alpha.fract() == 0.0 && self.beta.fract() == 0.0
    }
}

/// Substitutes `u = y'`, `v = 1/u`; exponents become `alpha = 3 - n`,
/// `beta = 3 - m`.
pub fn lienard_to_abel(prob: &LienardProblem) -> GeneralizedAbel {
    GeneralizedAbel {
        alpha: 3.0 - prob.n,
        beta: 3.0 - prob.m,
        f: prob.f.clone(),
        k: prob.k.clone(),
        g: prob.g.clone(),
        h: prob.h.clone(),
        domain: prob.domain,
    }
}

/// First-kind Abel equation in `y`: `dv/dy = free + linear v + quadratic v^2 + cubic v^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCubic {
    pub free: Expr,
    pub linear: Expr,
    pub quadratic: Expr,
    pub cubic: Expr,
    pub domain: Domain,
}

impl QuadraticCubic {
    pub fn terms(&self, y: f64, v: f64) -> Result<[f64; 4], ModelError> {
        Ok([
            eval_named("k", &self.free, y)?,
            eval_named("f", &self.linear, y)? * v,
            eval_named("g", &self.quadratic, y)? * v * v,
            eval_named("h", &self.cubic, y)? * v * v * v,
        ])
    }

    pub fn rhs(&self, y: f64, v: f64) -> Result<f64, ModelError> {
        Ok(self.terms(y, v)?.iter().sum())
    }
}

/// The `(alpha, beta) = (1, 0)` case viewed as a first-kind Abel equation.
pub fn quadratic_cubic_form(ab: &GeneralizedAbel) -> Result<QuadraticCubic, ModelError> {
    if ab.alpha != 1.0 || ab.beta != 0.0 {
        return Err(ModelError::Shape {
            alpha: ab.alpha,
            beta: ab.beta,
        });
    }
    Ok(QuadraticCubic {
        free: ab.k.clone(),
        linear: ab.f.clone(),
        quadratic: ab.g.clone(),
        cubic: ab.h.clone(),
        domain: ab.domain,
    })
}

/// `dy/dx = p y^3 + q y^2 + r y + s` in the independent variable `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalAbel {
    pub p: Expr,
    pub q: Expr,
    pub r: Expr,
    pub s: Expr,
    pub domain: Domain,
}

impl ClassicalAbel {
    pub fn new(p: Expr, q: Expr, r: Expr, s: Expr, domain: Domain) -> Result<Self, ModelError> {
        domain.validate()?;
        check_on_grid(&[("p", &p), ("q", &q), ("r", &r), ("s", &s)], &domain)?;
        let mut all_zero = true;
        for t in domain.grid() {
            all_zero &= eval_named("p", &p, t)? == 0.0;
        }
        if all_zero {
            return Err(ModelError::LeadingCoefficientZero);
        }
        Ok(ClassicalAbel { p, q, r, s, domain })
    }

    pub fn terms(&self, x: f64, y: f64) -> Result<[f64; 4], ModelError> {
        Ok([
            eval_named("p", &self.p, x)? * y * y * y,
            eval_named("q", &self.q, x)? * y * y,
            eval_named("r", &self.r, x)? * y,
            eval_named("s", &self.s, x)?,
        ])
    }

    pub fn rhs(&self, x: f64, y: f64) -> Result<f64, ModelError> {
        Ok(self.terms(x, y)?.iter().sum())
    }
}

/// `t ↦ ∫_{domain.min}^t e`, with cumulative values cached on the grid.
#[derive(Debug, Clone)]
pub struct ExprIntegral {
    integrand: Expr,
    knots: Vec<f64>,
    values: Vec<f64>,
    tol: Tolerances,
}

impl ExprIntegral {
    pub fn new(integrand: Expr, domain: &Domain, tol: &Tolerances) -> Result<Self, ModelError> {
        let knots = domain.grid();
        let mut values = Vec::with_capacity(knots.len());
        values.push(0.0);
        let mut acc = 0.0;
        for w in knots.windows(2) {
            acc += integrate_expr(&integrand, w[0], w[1], tol)?;
            values.push(acc);
        }
        Ok(ExprIntegral {
            integrand,
            knots,
            values,
            tol: *tol,
        })
    }

    pub fn eval(&self, t: f64) -> Result<f64, ModelError> {
        let idx = match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => return Ok(self.values[i]),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        Ok(self.values[idx] + integrate_expr(&self.integrand, self.knots[idx], t, &self.tol)?)
    }

    pub fn integrand(&self) -> &Expr {
        &self.integrand
    }
}

/// `∫_a^b e` by adaptive quadrature; domain errors inside become
/// [`NumericsError::SingularIntegrand`].
pub fn integrate_expr(e: &Expr, a: f64, b: f64, tol: &Tolerances) -> Result<f64, ModelError> {
    if let Some(c) = e.as_const() {
        return Ok(c * (b - a));
    }
    Ok(integrate_adaptive(|t| e.eval(t).unwrap_or(f64::NAN), a, b, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Expr {
        Expr::constant(v)
    }

    fn unit_domain() -> Domain {
        Domain::new(0.0, 1.0, 11).unwrap()
    }

    #[test]
    fn exponents_map_to_abel_form() {
        let p = LienardProblem::new(2.0, 3.0, c(1.0), c(-1.0), c(3.0), c(1.0), unit_domain()).unwrap();
        let ab = lienard_to_abel(&p);
        assert_eq!((ab.alpha, ab.beta), (1.0, 0.0));
        let p = LienardProblem::new(3.0, 1.0, c(1.0), c(1.0), c(0.0), c(0.0), unit_domain()).unwrap();
        let ab = lienard_to_abel(&p);
        assert_eq!((ab.alpha, ab.beta), (0.0, 2.0));
        assert!(matches!(quadratic_cubic_form(&ab), Err(ModelError::Shape { .. })));
    }

    #[test]
    fn equal_exponents_rejected() {
        let err = LienardProblem::new(2.0, 2.0, c(1.0), c(1.0), c(0.0), c(0.0), unit_domain()).unwrap_err();
        assert!(matches!(err, ModelError::InvalidExponents { .. }));
        let err = LienardProblem::new(-1.0, 2.0, c(1.0), c(1.0), c(0.0), c(0.0), unit_domain()).unwrap_err();
        assert!(matches!(err, ModelError::InvalidExponents { .. }));
    }

    #[test]
    fn coefficients_must_evaluate_on_domain() {
        let f: Expr = "ln(y)".parse().unwrap();
        let err = LienardProblem::new(2.0, 3.0, f, c(0.0), c(0.0), c(1.0), unit_domain()).unwrap_err();
        assert!(matches!(err, ModelError::Coefficient { name: "f", .. }));
    }

    #[test]
    fn quadratic_cubic_view() {
        let p = LienardProblem::new(2.0, 3.0, c(1.0), c(-1.0), c(3.0), c(1.0), unit_domain()).unwrap();
        let qc = quadratic_cubic_form(&lienard_to_abel(&p)).unwrap();
        assert_eq!(qc.rhs(0.3, -1.0).unwrap(), 0.0);
        assert_eq!(qc.rhs(0.3, 2.0).unwrap(), -1.0 + 2.0 + 12.0 + 8.0);

        let y: Expr = "y".parse().unwrap();
        let p = LienardProblem::new(2.0, 3.0, y.clone(), y, c(0.0), c(0.0), unit_domain()).unwrap();
        let qc = quadratic_cubic_form(&lienard_to_abel(&p)).unwrap();
        assert!((qc.rhs(0.5, 3.0).unwrap() - (0.5 + 1.5)).abs() < 1e-15);
    }

    #[test]
    fn abel_rhs_matches_scaled_force() {
        let f: Expr = "sin(y)".parse().unwrap();
        let k: Expr = "1+y^2".parse().unwrap();
        let g: Expr = "exp(-y)".parse().unwrap();
        let h: Expr = "y-0.5".parse().unwrap();
        let p = LienardProblem::new(1.5, 2.5, f, k, g, h, unit_domain()).unwrap();
        let ab = lienard_to_abel(&p);
        for (y, u) in [(0.1, 0.7), (0.9, 3.0), (0.4, 0.05)] {
            let lhs = ab.rhs(y, 1.0 / u).unwrap();
            let rhs = p.force(y, u).unwrap() / (u * u * u);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
        assert!(matches!(ab.rhs(0.5, -1.0), Err(ModelError::Power { .. })));
    }

    #[test]
    fn classical_abel_needs_nonzero_p() {
        let err = ClassicalAbel::new(c(0.0), c(1.0), c(0.0), c(0.0), unit_domain()).unwrap_err();
        assert_eq!(err, ModelError::LeadingCoefficientZero);
    }

    #[test]
    fn domain_grid_hits_endpoints() {
        let d = Domain::new(1.0, 2.0, 4).unwrap();
        let g = d.grid();
        assert_eq!(g.len(), 4);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[3], 2.0);
        assert!(Domain::new(1.0, 1.0, 4).is_err());
    }

    #[test]
    fn expr_integral_between_knots() {
        let d = Domain::new(0.0, 1.0, 5).unwrap();
        let e: Expr = "exp(-2*y)".parse().unwrap();
        let ig = ExprIntegral::new(e, &d, &Tolerances::default()).unwrap();
        for t in [0.0f64, 0.1, 0.5, 0.93, 1.0] {
            let exact = (1.0 - (-2.0 * t).exp()) / 2.0;
            assert!((ig.eval(t).unwrap() - exact).abs() < 1e-13);
        }
    }
}
