use crate::conditions::{check_theorem1, check_theorem2, check_theorem3, ConditionError, ConditionId, ConditionReport};
use crate::expr::Expr;
use crate::model::{
    eval_named, lienard_to_abel, particular_residual, quadratic_cubic_form, ExprIntegral, LienardProblem, PARTICULAR_TOL,
};
use crate::numerics::Antiderivative;

use super::chiellini::{chiellini_g, half_line_segment, invert_on_segment, segment_of, Segment};
use super::{require_close, Branch, CurveBuilder, SolutionCurve, SolveOptions, SolverError, TheoremId};

fn require_satisfied(report: &ConditionReport) -> Result<(), SolverError> {
    if !report.satisfied() {
        return Err(SolverError::ConditionViolated {
            condition: report.condition,
            relative: report.relative_residual(),
        });
    }
    Ok(())
}

fn seed_of(seg: Segment) -> f64 {
    match (seg.lo.is_finite(), seg.hi.is_finite()) {
        (true, true) => 0.5 * (seg.lo + seg.hi),
        (true, false) => seg.lo + 1.0,
        (false, true) => seg.hi - 1.0,
        (false, false) => 0.0,
    }
}

/// General solution when `v_p0 = -g/(3h)` is a particular solution:
/// `v = ±E/(√2 √(C - ∫h E²)) - g/(3h)` with `E = exp ∫(f - g²/(3h))`.
///
/// `E` is anchored at the domain minimum. The outer antiderivative of
/// `h E²` is offset by `h E²/(2λ)` at the minimum (`λ = f - g²/(3h)`, no
/// offset when `λ` vanishes there), which makes `C = 0` the stationary
/// solution whenever `h` and `λ` are constant.
pub fn solve_theorem1(
    prob: &LienardProblem,
    c: f64,
    branch: Branch,
    x0: f64,
    opts: &SolveOptions,
) -> Result<SolutionCurve, SolverError> {
    require_satisfied(&check_theorem1(prob, &opts.check)?)?;
    let tol = &opts.check.numerics;
    let domain = prob.domain;
    let grid = domain.grid();
    let lambda = (&prob.f - prob.g.clone() * &prob.g / (3.0 * prob.h.clone())).simplify();
    let log_e = ExprIntegral::new(lambda.clone(), &domain, tol)?;

    let h_min = eval_named("h", &prob.h, domain.min)?;
    let lambda_min = eval_named("f - g^2/(3h)", &lambda, domain.min)?;
    let offset = if lambda_min != 0.0 { h_min / (2.0 * lambda_min) } else { 0.0 };

    let h = &prob.h;
    let integrand = |t: f64| -> f64 {
        match (h.eval(t), log_e.eval(t)) {
            (Ok(hv), Ok(le)) => hv * (2.0 * le).exp(),
            _ => f64::NAN,
        }
    };
    let outer = Antiderivative::new(integrand, &grid, tol)?;

    let sign = branch.sign();
    let mut vs = Vec::with_capacity(grid.len());
    for (i, &y) in grid.iter().enumerate() {
        let radicand = c - (offset + outer.values()[i]);
        if !(radicand > 0.0) {
            return Err(SolverError::Radicand { at: y, value: radicand });
        }
        let e = log_e.eval(y)?.exp();
        let g = eval_named("g", &prob.g, y)?;
        let hv = eval_named("h", &prob.h, y)?;
        vs.push(sign * e / (2.0f64.sqrt() * radicand.sqrt()) - g / (3.0 * hv));
    }
    CurveBuilder::new(TheoremId::T1)
        .constant("C", c)
        .branch(branch)
        .note(format!("antiderivative of h E^2 offset by {offset} at the domain minimum"))
        .build(grid, vs, x0, &[])
}

/// Solution through the particular solution
/// `v_p = (-g ± √(g² - 3fh))/(3h)` (for which `E ≡ 1`). θ solves
/// `K0⁻¹ e^{G(θ,S)} = h/A` with `A = g + 3h v_p`, and
/// `v = v_p + (A/h) θ`.
///
/// The root of the quadratic is the one that satisfies the particular
/// solution equation; `branch` selects θ > 0 (`+`) or θ < 0 (`-`).
pub fn solve_theorem2(
    prob: &LienardProblem,
    s: f64,
    k0: f64,
    branch: Branch,
    x0: f64,
    opts: &SolveOptions,
) -> Result<SolutionCurve, SolverError> {
    if s == 0.0 {
        return Err(SolverError::ZeroS);
    }
    let report = check_theorem2(prob, &opts.check)?;
    require_satisfied(&report)?;
    require_close("S", s, report.constant("S").unwrap_or(f64::NAN), 1e-6)?;
    let tol = &opts.check.numerics;

    let qc = quadratic_cubic_form(&lienard_to_abel(prob))?;
    let root = (prob.g.clone() * &prob.g - 3.0 * prob.f.clone() * &prob.h).sqrt();
    let mut best: Option<(f64, Expr, f64)> = None;
    for sigma in [1.0, -1.0] {
        let v_p = ((-prob.g.clone() + sigma * root.clone()) / (3.0 * prob.h.clone())).simplify();
        let res = particular_residual(&qc, &v_p, &prob.domain)?;
        if best.as_ref().is_none_or(|b| res.max_rel < b.2) {
            best = Some((sigma, v_p, res.max_rel));
        }
    }
    let (sigma, v_p, residual) = best.expect("two candidates");
    if residual > PARTICULAR_TOL {
        return Err(ConditionError::NotParticular {
            relative: residual,
            at: f64::NAN,
        }
        .into());
    }

    let seg = half_line_segment(s, branch == Branch::Plus);
    let seed = seed_of(seg);
    let grid = prob.domain.grid();
    let mut vs = Vec::with_capacity(grid.len());
    for &y in &grid {
        let h = eval_named("h", &prob.h, y)?;
        let a = sigma * eval_named("sqrt(g^2-3fh)", &root, y)?;
        let ratio = h / a;
        let scaled = k0 * ratio;
        if !(scaled > 0.0) {
            return Err(SolverError::ThetaOutOfRange { at: y, target: ratio });
        }
        let g_star = scaled.ln();
        let theta = invert_on_segment(|t| chiellini_g(t, s), g_star, seg, seed, tol)?
            .ok_or(SolverError::ThetaOutOfRange { at: y, target: ratio })?;
        vs.push(eval_named("v_p", &v_p, y)? + a / h * theta);
    }
    CurveBuilder::new(TheoremId::T2)
        .constant("S", s)
        .constant("K0", k0)
        .constant("C0", report.constant("C0").unwrap_or(f64::NAN))
        .branch(branch)
        .note(format!("particular solution v_p = {v_p} (root sign {sigma:+}) selected by residual {residual:.1e}"))
        .note(format!("theta on ({}, {})", seg.lo, seg.hi))
        .build(grid, vs, x0, &[])
}

/// Solution through a general particular solution `v_p`: θ solves
/// `G(θ) - G(θ_a) = S ∫_{y_a}^y (g + 3h v_p)²/h` on the monotone segment of
/// `θ(θ² + θ + S)` containing `θ_a`, and `v = (g/h + 3v_p) θ + v_p`.
pub fn solve_theorem3(
    prob: &LienardProblem,
    v_p: &Expr,
    s: f64,
    anchor: (f64, f64),
    x0: f64,
    opts: &SolveOptions,
) -> Result<SolutionCurve, SolverError> {
    if s == 0.0 {
        return Err(SolverError::ZeroS);
    }
    let report = check_theorem3(prob, v_p, &opts.check)?;
    require_satisfied(&report)?;
    require_close("S", s, report.constant("S").unwrap_or(f64::NAN), 1e-6)?;
    let (y_a, theta_a) = anchor;
    if !prob.domain.contains(y_a) {
        return Err(SolverError::AnchorOutside { y: y_a });
    }
    let tol = &opts.check.numerics;

    let quad = (&prob.g + 3.0 * prob.h.clone() * v_p).simplify();
    if quad.is_zero() {
        return Err(SolverError::Degenerate { what: "g + 3 h v_p" });
    }
    let phi = (&prob.g / &prob.h + 3.0 * v_p.clone()).simplify();
    let rhs = ExprIntegral::new((quad.clone() * &quad / &prob.h).simplify(), &prob.domain, tol)?;
    let r_a = rhs.eval(y_a)?;
    let seg = segment_of(theta_a, s)?;
    let g_a = chiellini_g(theta_a, s)?;

    let grid = prob.domain.grid();
    let mut vs = Vec::with_capacity(grid.len());
    for &y in &grid {
        let target = g_a + s * (rhs.eval(y)? - r_a);
        let theta = invert_on_segment(|t| chiellini_g(t, s), target, seg, theta_a, tol)?
            .ok_or(SolverError::ThetaOutOfRange { at: y, target })?;
        vs.push(eval_named("g/h+3v_p", &phi, y)? * theta + eval_named("v_p", v_p, y)?);
    }
    let _ = ConditionId::T3;
    CurveBuilder::new(TheoremId::T3)
        .constant("S", s)
        .constant("y_a", y_a)
        .constant("theta_a", theta_a)
        .note(format!("theta on ({}, {})", seg.lo, seg.hi))
        .build(grid, vs, x0, &[])
}
