use crate::conditions::check_generalized_chiellini;
use crate::expr::{real_pow, Expr};
use crate::model::{eval_named, ExprIntegral, LienardProblem};
use crate::numerics::{find_root, integrate_adaptive, Tolerances};

use super::chiellini::{invert_on_segment, Segment};
use super::{require_close, CurveBuilder, SolutionCurve, SolveOptions, SolverError, TheoremId};

/// Reference point of [`theorem4_h`]: `H(THETA_REF) = 0`.
pub const THETA_REF: f64 = 1.0;

// Largest |θ| the inversion explores.
const THETA_CAP: f64 = 1e12;
// Sub-samples per doubling when scanning the denominator for roots.
const SCAN_DENSITY: f64 = 16.0;

/// `D(θ) = P^(m-n) θ^(3-n) + θ^(3-m) - S θ`; NaN where a real power is
/// undefined (negative θ with a non-integer exponent).
pub fn theorem4_denominator(theta: f64, n: f64, m: f64, s: f64, p: f64) -> f64 {
    match (real_pow(theta, 3.0 - n), real_pow(theta, 3.0 - m)) {
        (Ok(a), Ok(b)) => p.powf(m - n) * a + b - s * theta,
        _ => f64::NAN,
    }
}

fn integer_exponents(n: f64, m: f64) -> bool {
    n.fract() == 0.0 && m.fract() == 0.0
}

fn h_integral(a: f64, b: f64, n: f64, m: f64, s: f64, p: f64, tol: &Tolerances) -> Result<f64, SolverError> {
    Ok(integrate_adaptive(|t| 1.0 / theorem4_denominator(t, n, m, s, p), a, b, tol)?)
}

/// `∫_a^b dθ / D(θ)`; fails if `D` vanishes or changes sign on `[a, b]`.
pub fn theorem4_h_between(a: f64, b: f64, n: f64, m: f64, s: f64, p: f64, tol: &Tolerances) -> Result<f64, SolverError> {
    const SAMPLES: usize = 64;
    let d = |t: f64| theorem4_denominator(t, n, m, s, p);
    let mut prev = (a, d(a));
    for i in 0..=SAMPLES {
        let t = a + (b - a) * i as f64 / SAMPLES as f64;
        let dt = d(t);
        if dt == 0.0 {
            return Err(SolverError::DenominatorRoot { theta: t });
        }
        if dt.is_nan() {
            return Err(SolverError::Invalid(format!("D(theta) undefined at theta = {t}")));
        }
        if dt.signum() != prev.1.signum() {
            let (lo, hi) = if prev.0 < t { (prev.0, t) } else { (t, prev.0) };
            let root = find_root(d, lo, hi, tol)?;
            return Err(SolverError::DenominatorRoot { theta: root });
        }
        prev = (t, dt);
    }
    h_integral(a, b, n, m, s, p, tol)
}

/// `H(θ) = ∫_{THETA_REF}^θ dt / D(t)`.
pub fn theorem4_h(theta: f64, n: f64, m: f64, s: f64, p: f64, tol: &Tolerances) -> Result<f64, SolverError> {
    theorem4_h_between(THETA_REF, theta, n, m, s, p, tol)
}

// Largest interval around θa on which D keeps its sign, capped at THETA_CAP.
// Non-integer exponents confine θ to θ > 0.
fn denominator_segment(theta_a: f64, n: f64, m: f64, s: f64, p: f64, tol: &Tolerances) -> Result<Segment, SolverError> {
    let d = |t: f64| theorem4_denominator(t, n, m, s, p);
    let lo_bound = if integer_exponents(n, m) { -THETA_CAP } else { 0.0 };
    let sign = d(theta_a).signum();
    let scan = |bound: f64| -> Result<f64, SolverError> {
        let mut prev = theta_a;
        for j in 1.. {
            let frac = 2f64.powf(-(j as f64) / SCAN_DENSITY);
            let t = if bound == 0.0 {
                theta_a * frac
            } else {
                let t = theta_a + (bound - theta_a).signum() * (theta_a.abs() + 1.0) * (1.0 / frac - 1.0);
                if (t - bound) * (theta_a - bound) <= 0.0 {
                    return Ok(bound);
                }
                t
            };
            if t == prev || t == 0.0 && bound == 0.0 {
                return Ok(bound);
            }
            let dt = d(t);
            if dt == 0.0 {
                return Ok(t);
            }
            if !dt.is_finite() || dt.signum() != sign {
                let (a, b) = if prev < t { (prev, t) } else { (t, prev) };
                let inner = if prev < t { a } else { b };
                return Ok(find_root(|x| d(x) * sign, a, b, tol).unwrap_or(inner));
            }
            prev = t;
        }
        unreachable!()
    };
    Ok(Segment {
        lo: scan(lo_bound)?,
        hi: scan(THETA_CAP)?,
    })
}

/// Solution for `g = h = 0` under the generalized Chiellini condition:
/// `v = P (f/k)^(1/(n-m)) θ` with `H(θ) - H(θ_a) = P^(2-m) ∫_{y_a}^y k (f/k)^((2-m)/(n-m))`.
///
/// θ is continued grid point by grid point from the anchor and never leaves
/// the interval around `θ_a` on which `D(θ)` keeps its sign.
pub fn solve_theorem4(
    prob: &LienardProblem,
    s: f64,
    p: f64,
    anchor: (f64, f64),
    x0: f64,
    opts: &SolveOptions,
) -> Result<SolutionCurve, SolverError> {
    if s == 0.0 {
        return Err(SolverError::ZeroS);
    }
    let report = check_generalized_chiellini(prob, p, &opts.check)?;
    if !report.satisfied() {
        return Err(SolverError::ConditionViolated {
            condition: report.condition,
            relative: report.relative_residual(),
        });
    }
    require_close("S", s, report.constant("S").unwrap_or(f64::NAN), 1e-6)?;
    let (n, m) = (prob.n, prob.m);
    let (y_a, theta_a) = anchor;
    if !prob.domain.contains(y_a) {
        return Err(SolverError::AnchorOutside { y: y_a });
    }
    let d_a = theorem4_denominator(theta_a, n, m, s, p);
    if d_a == 0.0 {
        return Err(SolverError::DenominatorRoot { theta: theta_a });
    }
    if !d_a.is_finite() || (theta_a <= 0.0 && !integer_exponents(n, m)) {
        return Err(SolverError::Invalid(format!(
            "D is undefined at the anchor theta = {theta_a} (non-integer exponents need theta > 0)"
        )));
    }
    let tol = &opts.check.numerics;
    let seg = denominator_segment(theta_a, n, m, s, p, tol)?;

    let ratio = (&prob.f / &prob.k).simplify();
    let scale = ratio.clone().pow(Expr::constant(1.0 / (n - m)));
    let driver = (Expr::constant(p.powf(2.0 - m)) * &prob.k * ratio.pow(Expr::constant((2.0 - m) / (n - m)))).simplify();
    let y_side = ExprIntegral::new(driver, &prob.domain, tol)?;
    let base = y_side.eval(y_a)?;

    let grid = prob.domain.grid();
    let mut thetas = vec![f64::NAN; grid.len()];
    let start = grid.partition_point(|&y| y < y_a);
    let forward: Vec<usize> = (start..grid.len()).collect();
    let backward: Vec<usize> = (0..start).rev().collect();
    for order in [forward, backward] {
        let (mut theta, mut level) = (theta_a, base);
        for i in order {
            let y = grid[i];
            let target = y_side.eval(y)?;
            let step = target - level;
            let next = invert_on_segment(|t| h_integral(theta, t, n, m, s, p, tol), step, seg, theta, tol)?.ok_or(
                SolverError::ThetaOutOfRange {
                    at: y,
                    target: target - base,
                },
            )?;
            thetas[i] = next;
            theta = next;
            level = target;
        }
    }

    let mut vs = Vec::with_capacity(grid.len());
    for (i, &y) in grid.iter().enumerate() {
        vs.push(p * eval_named("(f/k)^(1/(n-m))", &scale, y)? * thetas[i]);
    }
    CurveBuilder::new(TheoremId::T4)
        .constant("S", s)
        .constant("P", p)
        .constant("y_a", y_a)
        .constant("theta_a", theta_a)
        .note(format!("theta on ({}, {})", seg.lo, seg.hi))
        .build(grid, vs, x0, &[])
}
