//! Relative and absolute invariants of `y' = p y³ + q y² + r y + s`, its
//! normal form, and the reduction through a particular solution.

use thiserror::Error;

use crate::expr::Expr;
use crate::model::{eval_named, ClassicalAbel, ExprIntegral, ModelError};
use crate::numerics::{Antiderivative, NumericsError, Tolerances};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("need at least {needed} relative invariants, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("p vanishes or changes sign near x = {at}")]
    LeadingVanishes { at: f64 },
    #[error("y1 is not a particular solution: residual {residual:e} (relative {relative:e}) at x = {at}")]
    NotParticular { residual: f64, relative: f64, at: f64 },
    #[error("{what} is undefined on the whole grid")]
    Undefined { what: &'static str },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which closed form produced `S3`.
#[cfg(not(feature = "literature-s3"))]
pub const S3_FORMULA: &str = "s p^3 + (1/3)(2 q^2/9 - r q p + p q' - q p')";
#[cfg(feature = "literature-s3")]
pub const S3_FORMULA: &str = "s p^2 - r q p/3 + 2 q^3/27 + (p q' - q p')/3";

/// `S3` as a symbolic expression in `x`.
pub fn s3_expr(eq: &ClassicalAbel) -> Expr {
    let (p, q, r, s) = (&eq.p, &eq.q, &eq.r, &eq.s);
    let bracket = p.clone() * q.derivative() - q.clone() * p.derivative();
    #[cfg(not(feature = "literature-s3"))]
    let e = s.clone() * p.clone() * p * p
        + (2.0 / 9.0 * q.clone() * q - r.clone() * q * p + bracket) / 3.0;
    #[cfg(feature = "literature-s3")]
    let e = s.clone() * p.clone() * p - r.clone() * q * p / 3.0 + 2.0 / 27.0 * q.clone() * q * q + bracket / 3.0;
    e.simplify()
}

/// `S3, S5, …` on the domain grid, with weights `3, 5, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct InvariantSequence {
    pub xs: Vec<f64>,
    pub exprs: Vec<Expr>,
    pub values: Vec<Vec<f64>>,
    pub weights: Vec<u32>,
    pub formula: &'static str,
}

impl InvariantSequence {
    /// Values of `S_{weight}`.
    pub fn get(&self, weight: u32) -> Option<&[f64]> {
        self.weights.iter().position(|w| *w == weight).map(|i| self.values[i].as_slice())
    }
}

/// `S3` and `S_{2m+1} = p S'_{2m-1} - (2m-1) S_{2m-1} (p' + r p - q²/3)`,
/// differentiated symbolically and then sampled.
pub fn relative_invariants(eq: &ClassicalAbel, count: usize) -> Result<InvariantSequence, InvariantError> {
    if count < 2 {
        return Err(InvariantError::TooShort { needed: 2, got: count });
    }
    let factor = (eq.p.derivative() + eq.r.clone() * &eq.p - eq.q.clone() * &eq.q / 3.0).simplify();
    let mut exprs = vec![s3_expr(eq)];
    for m in 2..=count {
        let prev = exprs.last().expect("nonempty");
        let next = eq.p.clone() * prev.derivative() - (2 * m - 1) as f64 * prev.clone() * &factor;
        exprs.push(next.simplify());
    }
    let xs = eq.domain.grid();
    let mut values = Vec::with_capacity(count);
    for e in &exprs {
        values.push(xs.iter().map(|&x| eval_named("S", e, x)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(InvariantSequence {
        xs,
        exprs,
        values,
        weights: (1..=count as u32).map(|m| 2 * m + 1).collect(),
        formula: S3_FORMULA,
    })
}

/// One absolute invariant on the grid; excluded points (vanishing
/// denominator) hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsoluteInvariant {
    pub values: Vec<f64>,
    pub excluded: Vec<f64>,
    /// `None` when undefined everywhere.
    pub constant: Option<bool>,
}

impl AbsoluteInvariant {
    fn ratio(num: impl Fn(usize) -> f64, den: &[f64], xs: &[f64], tol: f64) -> AbsoluteInvariant {
        let den_scale = den.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        let mut values = Vec::with_capacity(den.len());
        let mut excluded = Vec::new();
        for i in 0..den.len() {
            if den[i].abs() <= 1e-14 * den_scale || den[i] == 0.0 {
                values.push(f64::NAN);
                excluded.push(xs[i]);
            } else {
                values.push(num(i) / den[i]);
            }
        }
        let defined: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        let constant = if defined.is_empty() {
            None
        } else {
            let (lo, hi) = defined.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            Some(hi - lo <= tol * hi.abs().max(lo.abs()).max(1.0))
        };
        AbsoluteInvariant {
            values,
            excluded,
            constant,
        }
    }

    pub fn is_defined(&self) -> bool {
        self.constant.is_some()
    }

    /// Mean over the defined points.
    pub fn mean(&self) -> Option<f64> {
        let defined: Vec<f64> = self.values.iter().copied().filter(|v| !v.is_nan()).collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    }
}

/// `I1 = S5³/S3⁵`, `I2 = S3 S7/S5²`, `I3 = S9/S3²`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsoluteInvariants {
    pub i1: AbsoluteInvariant,
    pub i2: AbsoluteInvariant,
    pub i3: AbsoluteInvariant,
}

/// Needs `S3 … S9`. Constancy means `max - min <= tol · max(|I|, 1)`.
pub fn absolute_invariants(seq: &InvariantSequence, tol: f64) -> Result<AbsoluteInvariants, InvariantError> {
    let (Some(s3), Some(s5), Some(s7), Some(s9)) = (seq.get(3), seq.get(5), seq.get(7), seq.get(9)) else {
        return Err(InvariantError::TooShort {
            needed: 4,
            got: seq.values.len(),
        });
    };
    let s3_5: Vec<f64> = s3.iter().map(|v| v.powi(5)).collect();
    let s5_2: Vec<f64> = s5.iter().map(|v| v * v).collect();
    let s3_2: Vec<f64> = s3.iter().map(|v| v * v).collect();
    Ok(AbsoluteInvariants {
        i1: AbsoluteInvariant::ratio(|i| s5[i].powi(3), &s3_5, &seq.xs, tol),
        i2: AbsoluteInvariant::ratio(|i| s3[i] * s7[i], &s5_2, &seq.xs, tol),
        i3: AbsoluteInvariant::ratio(|i| s9[i], &s3_2, &seq.xs, tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchVerdict {
    /// Invariant profiles agree; equivalence is possible, not proven.
    Candidate,
    Distinct,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMatch {
    pub verdict: MatchVerdict,
    /// Largest invariant difference that was compared (NaN if none).
    pub gap: f64,
    pub note: String,
}

fn defined_pairs(a: &AbsoluteInvariant, b: &AbsoluteInvariant) -> Vec<(f64, f64)> {
    a.values.iter().zip(&b.values).filter(|(x, y)| !x.is_nan() && !y.is_nan()).map(|(x, y)| (*x, *y)).collect()
}

// (I1, I2) samples sorted by I1, if I1 is strictly monotone.
fn monotone_curve(inv: &AbsoluteInvariants) -> Option<Vec<(f64, f64)>> {
    let pairs = defined_pairs(&inv.i1, &inv.i2);
    if pairs.len() < 2 {
        return None;
    }
    let increasing = pairs[1].0 > pairs[0].0;
    if !pairs.windows(2).all(|w| (w[1].0 > w[0].0) == increasing && w[1].0 != w[0].0) {
        return None;
    }
    let mut pairs = pairs;
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(pairs)
}

fn interpolate(curve: &[(f64, f64)], t: f64) -> Option<f64> {
    let i = curve.partition_point(|p| p.0 < t);
    if i == 0 {
        return (curve[0].0 == t).then_some(curve[0].1);
    }
    if i == curve.len() {
        return None;
    }
    let (a, b) = (curve[i - 1], curve[i]);
    Some(a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0))
}

/// Compares the absolute-invariant profiles of two equations.
///
/// Constant `I1` on both sides is compared directly (and `I2` when defined on
/// both). For non-constant profiles the curve `I1 ↦ I2`, which does not
/// depend on the parametrization, is compared on the overlapping `I1` range.
pub fn invariant_profile_match(a: &ClassicalAbel, b: &ClassicalAbel, tol: f64) -> Result<ProfileMatch, InvariantError> {
    let ia = absolute_invariants(&relative_invariants(a, 4)?, tol)?;
    let ib = absolute_invariants(&relative_invariants(b, 4)?, tol)?;
    let (Some(ca), Some(cb)) = (ia.i1.constant, ib.i1.constant) else {
        return Err(InvariantError::Undefined { what: "I1" });
    };
    let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0);
    match (ca, cb) {
        (true, true) => {
            let (x, y) = (ia.i1.mean().unwrap_or(f64::NAN), ib.i1.mean().unwrap_or(f64::NAN));
            let mut gap = (x - y).abs();
            let mut same = close(x, y);
            if let (Some(x2), Some(y2)) = (ia.i2.mean(), ib.i2.mean()) {
                gap = gap.max((x2 - y2).abs());
                same &= close(x2, y2);
            }
            Ok(ProfileMatch {
                verdict: if same { MatchVerdict::Candidate } else { MatchVerdict::Distinct },
                gap,
                note: format!("constant I1: {x} vs {y}"),
            })
        }
        (true, false) | (false, true) => Ok(ProfileMatch {
            verdict: MatchVerdict::Distinct,
            gap: f64::NAN,
            note: "I1 is constant for only one equation".to_string(),
        }),
        (false, false) => {
            let pairs = defined_pairs(&ia.i1, &ib.i1);
            if !pairs.is_empty() && pairs.iter().all(|(x, y)| close(*x, *y)) {
                let gap = pairs.iter().fold(0.0f64, |g, (x, y)| g.max((x - y).abs()));
                return Ok(ProfileMatch {
                    verdict: MatchVerdict::Candidate,
                    gap,
                    note: "I1 profiles coincide pointwise".to_string(),
                });
            }
            let (Some(curve_a), Some(curve_b)) = (monotone_curve(&ia), monotone_curve(&ib)) else {
                return Ok(ProfileMatch {
                    verdict: MatchVerdict::Inconclusive,
                    gap: f64::NAN,
                    note: "I1 is not monotone or I2 is undefined".to_string(),
                });
            };
            let lo = curve_a[0].0.max(curve_b[0].0);
            let hi = curve_a[curve_a.len() - 1].0.min(curve_b[curve_b.len() - 1].0);
            if lo > hi {
                return Ok(ProfileMatch {
                    verdict: MatchVerdict::Distinct,
                    gap: lo - hi,
                    note: "I1 ranges are disjoint".to_string(),
                });
            }
            let mut gap = 0.0f64;
            let mut same = true;
            for &(t, v) in curve_a.iter().filter(|p| p.0 >= lo && p.0 <= hi) {
                if let Some(w) = interpolate(&curve_b, t) {
                    gap = gap.max((v - w).abs());
                    same &= (v - w).abs() <= 1e-6 * v.abs().max(w.abs()).max(1.0);
                }
            }
            Ok(ProfileMatch {
                verdict: if same { MatchVerdict::Candidate } else { MatchVerdict::Distinct },
                gap,
                note: format!("I2 compared as a function of I1 on [{lo}, {hi}]"),
            })
        }
    }
}

fn leading_nonzero(p: &Expr, xs: &[f64]) -> Result<Vec<f64>, InvariantError> {
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        let v = eval_named("p", p, x)?;
        if v == 0.0 || out.last().is_some_and(|prev: &f64| prev.signum() != v.signum()) {
            return Err(InvariantError::LeadingVanishes { at: x });
        }
        out.push(v);
    }
    Ok(out)
}

/// `ω = exp ∫(r - q²/3p)`, `ξ = ∫ p ω²` (both from the left end of the
/// domain) and `I` with `p ω³ I = s + (1/3)(q/p)' - r q/(3p) + 2q³/(27p²)`,
/// the invariant of the normal form `dη/dξ = η³ + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormRecord {
    pub xs: Vec<f64>,
    pub omega: Vec<f64>,
    pub xi: Vec<f64>,
    pub invariant: Vec<f64>,
    /// `I` constant to the requested tolerance: integrable by quadrature.
    pub constant: bool,
}

pub fn normal_form(eq: &ClassicalAbel, tol: &Tolerances, const_tol: f64) -> Result<NormalFormRecord, InvariantError> {
    let xs = eq.domain.grid();
    let pv = leading_nonzero(&eq.p, &xs)?;
    let (p, q, r, s) = (&eq.p, &eq.q, &eq.r, &eq.s);
    let log_omega = ExprIntegral::new((r - q.clone() * q / (3.0 * p.clone())).simplify(), &eq.domain, tol)?;
    let numerator = (s + (q / p).derivative() / 3.0 - r.clone() * q / (3.0 * p.clone())
        + 2.0 * q.clone() * q * q / (27.0 * p.clone() * p))
        .simplify();
    let omega: Vec<f64> = xs.iter().map(|&x| log_omega.eval(x).map(f64::exp)).collect::<Result<_, _>>()?;
    let xi_integrand = |t: f64| match (p.eval(t), log_omega.eval(t)) {
        (Ok(pt), Ok(lw)) => pt * (2.0 * lw).exp(),
        _ => f64::NAN,
    };
    let xi = Antiderivative::new(xi_integrand, &xs, tol)?.values().to_vec();
    let mut invariant = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        invariant.push(eval_named("normal-form numerator", &numerator, xs[i])? / (pv[i] * omega[i].powi(3)));
    }
    let (lo, hi) = invariant.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    let constant = hi - lo <= const_tol * hi.abs().max(lo.abs()).max(1.0);
    Ok(NormalFormRecord {
        xs,
        omega,
        xi,
        invariant,
        constant,
    })
}

/// `y = y1 + E/u` with `E = exp ∫(3p y1² + 2q y1 + r)` turns the equation
/// into `u' + Φ1/u + Φ2 = 0`, `Φ1 = p E²`, `Φ2 = (3p y1 + q) E`.
#[derive(Debug, Clone)]
pub struct ClassicalReduction {
    pub y1: Expr,
    pub xs: Vec<f64>,
    pub e: Vec<f64>,
    pub phi1: Vec<f64>,
    pub phi2: Vec<f64>,
    /// `Φ2 ≡ 0` (`y1 = -q/3p`): the `u` equation separates.
    pub separable: bool,
    /// `∫ Φ1` from the left end of the domain.
    pub phi1_integral: Vec<f64>,
    pub particular_residual: f64,
}

impl ClassicalReduction {
    /// For separable reductions, `u = ±√(c - 2∫Φ1)` and the corresponding
    /// `y = y1 + E/u` on the grid; `None` where the radicand is not positive.
    pub fn separable_solution(&self, c: f64, sign: f64) -> Option<Vec<Option<f64>>> {
        if !self.separable {
            return None;
        }
        let mut out = Vec::with_capacity(self.xs.len());
        for i in 0..self.xs.len() {
            let radicand = c - 2.0 * self.phi1_integral[i];
            out.push((radicand > 0.0).then(|| {
                let u = sign * radicand.sqrt();
                self.y1.eval(self.xs[i]).map(|y1| y1 + self.e[i] / u).unwrap_or(f64::NAN)
            }));
        }
        Some(out)
    }
}

pub fn classical_particular_reduction(
    eq: &ClassicalAbel,
    y1: &Expr,
    rel_tol: f64,
    tol: &Tolerances,
) -> Result<ClassicalReduction, InvariantError> {
    let xs = eq.domain.grid();
    let dy1 = y1.derivative();
    let mut worst = (0.0f64, 0.0f64, eq.domain.min);
    for &x in &xs {
        let y = eval_named("y1", y1, x)?;
        let terms = eq.terms(x, y)?;
        let res = (eval_named("y1'", &dy1, x)? - terms.iter().sum::<f64>()).abs();
        let rel = res / terms.iter().fold(1.0f64, |a, t| a.max(t.abs()));
        if rel > worst.1 {
            worst = (res, rel, x);
        }
    }
    if worst.1 > rel_tol {
        return Err(InvariantError::NotParticular {
            residual: worst.0,
            relative: worst.1,
            at: worst.2,
        });
    }
    let (p, q, r) = (&eq.p, &eq.q, &eq.r);
    let exponent = (3.0 * p.clone() * y1 * y1 + 2.0 * q.clone() * y1 + r).simplify();
    let log_e = ExprIntegral::new(exponent, &eq.domain, tol)?;
    let linear = (3.0 * p.clone() * y1 + q).simplify();

    let mut e = Vec::with_capacity(xs.len());
    let mut phi1 = Vec::with_capacity(xs.len());
    let mut phi2 = Vec::with_capacity(xs.len());
    let mut linear_scale = 0.0f64;
    let mut linear_max = 0.0f64;
    for &x in &xs {
        let ex = log_e.eval(x)?.exp();
        let lin = eval_named("3p y1 + q", &linear, x)?;
        let qv = eval_named("q", q, x)?;
        let py = eval_named("p", p, x)? * eval_named("y1", y1, x)?;
        linear_scale = linear_scale.max(qv.abs()).max(3.0 * py.abs());
        linear_max = linear_max.max(lin.abs());
        e.push(ex);
        phi1.push(eval_named("p", p, x)? * ex * ex);
        phi2.push(lin * ex);
    }
    let separable = linear.is_zero() || linear_max <= 1e-12 * linear_scale.max(1.0);
    let phi1_integrand = |t: f64| match (p.eval(t), log_e.eval(t)) {
        (Ok(pt), Ok(le)) => pt * (2.0 * le).exp(),
        _ => f64::NAN,
    };
    let phi1_integral = Antiderivative::new(phi1_integrand, &xs, tol)?.values().to_vec();
    Ok(ClassicalReduction {
        y1: y1.clone(),
        xs,
        e,
        phi1,
        phi2,
        separable,
        phi1_integral,
        particular_residual: worst.1,
    })
}

#[cfg(test)]
mod tests;
