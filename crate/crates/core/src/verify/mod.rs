//! Back-substitution residuals of solution curves and an independent
//! Runge–Kutta comparison.

use std::ops::Range;

use thiserror::Error;

use crate::model::{GeneralizedAbel, LienardProblem, ModelError};
use crate::numerics::{fd_weights, ode_solve_at, NumericsError, Stencil, Tolerances};
use crate::solvers::SolutionCurve;

const ABEL_WIDTH: usize = 5;
const LIENARD_WIDTH: usize = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("need at least {needed} samples in a segment, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("v changes sign or vanishes inside the segment at y = {at}")]
    SignChange { at: f64 },
    #[error("x is not strictly monotone inside the segment at y = {at}")]
    NotMonotone { at: f64 },
    #[error("reference integration failed near x = {at}: {source}")]
    Oracle { at: f64, source: NumericsError },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Worst and mean residuals over the checked samples.
///
/// `pointwise[i]` is the relative residual at curve sample `i` (NaN where the
/// sample was not checked).
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub max_abs: f64,
    pub max_rel: f64,
    pub rms_rel: f64,
    pub worst_point: f64,
    pub scale: f64,
    pub n_points: usize,
    pub pointwise: Vec<f64>,
}

impl ResidualReport {
    fn from_residuals(len: usize, entries: &[(usize, f64, f64)], scale: f64) -> ResidualReport {
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let mut pointwise = vec![f64::NAN; len];
        let (mut max_abs, mut worst_point, mut sum_sq) = (0.0, f64::NAN, 0.0);
        for &(i, at, r) in entries {
            let r = r.abs();
            pointwise[i] = r / scale;
            sum_sq += r * r;
            if r > max_abs || worst_point.is_nan() {
                max_abs = r;
                worst_point = at;
            }
        }
        let n = entries.len();
        ResidualReport {
            max_abs,
            max_rel: max_abs / scale,
            rms_rel: (sum_sq / n.max(1) as f64).sqrt() / scale,
            worst_point,
            scale,
            n_points: n,
            pointwise,
        }
    }

    pub fn passes(&self, bound: f64) -> bool {
        self.max_rel <= bound
    }
}

/// Residual of `dv/dy = f v^α + k v^β + g v² + h v³` with `dv/dy` from
/// five-point stencils inside each piece (one-sided at the piece ends).
/// The scale is the largest right-hand-side term over the grid.
pub fn abel_residual(curve: &SolutionCurve, ab: &GeneralizedAbel) -> Result<ResidualReport, VerifyError> {
    let mut entries = Vec::new();
    let mut scale = 0.0f64;
    for piece in &curve.pieces {
        if piece.len() < ABEL_WIDTH {
            continue;
        }
        for i in piece.clone() {
            let st = Stencil::around(i, ABEL_WIDTH, piece.start, piece.end).expect("piece is wide enough");
            let range = st.indices();
            let w = &fd_weights(curve.ys[i], &curve.ys[range.clone()], 1)[1];
            let dv: f64 = w.iter().zip(&curve.vs[range]).map(|(a, b)| a * b).sum();
            let terms = ab.terms(curve.ys[i], curve.vs[i])?;
            scale = terms.iter().fold(scale, |s, t| s.max(t.abs()));
            entries.push((i, curve.ys[i], dv - terms.iter().sum::<f64>()));
        }
    }
    if entries.len() < ABEL_WIDTH {
        return Err(VerifyError::TooFewSamples {
            needed: ABEL_WIDTH,
            got: entries.len(),
        });
    }
    Ok(ResidualReport::from_residuals(curve.len(), &entries, scale))
}

fn check_segment(curve: &SolutionCurve, seg: &Range<usize>, needed: usize) -> Result<(), VerifyError> {
    if seg.len() < needed {
        return Err(VerifyError::TooFewSamples { needed, got: seg.len() });
    }
    let sign = curve.vs[seg.start].signum();
    for i in seg.clone() {
        if curve.vs[i] == 0.0 || curve.vs[i].signum() != sign {
            return Err(VerifyError::SignChange { at: curve.ys[i] });
        }
    }
    for i in seg.start + 1..seg.end {
        if (curve.xs[i] - curve.xs[i - 1]) * sign <= 0.0 {
            return Err(VerifyError::NotMonotone { at: curve.ys[i] });
        }
    }
    Ok(())
}

fn lienard_segment(
    curve: &SolutionCurve,
    prob: &LienardProblem,
    seg: &Range<usize>,
    entries: &mut Vec<(usize, f64, f64)>,
    scale: &mut f64,
) -> Result<(), VerifyError> {
    check_segment(curve, seg, LIENARD_WIDTH)?;
    for i in seg.clone() {
        let st = Stencil::around(i, LIENARD_WIDTH, seg.start, seg.end).expect("segment is wide enough");
        let range = st.indices();
        let w = fd_weights(curve.xs[i], &curve.xs[range.clone()], 2);
        let ys = &curve.ys[range];
        let d1: f64 = w[1].iter().zip(ys).map(|(a, b)| a * b).sum();
        let d2: f64 = w[2].iter().zip(ys).map(|(a, b)| a * b).sum();
        let terms = prob.terms(curve.ys[i], d1)?;
        *scale = terms.iter().fold(scale.max(d2.abs()), |s, t| s.max(t.abs()));
        entries.push((i, curve.ys[i], d2 + terms.iter().sum::<f64>()));
    }
    Ok(())
}

/// Residual of `y'' + f y'^n + k y'^m + g y' + h` on one monotone segment,
/// with `y'` and `y''` from seven-point stencils in `x`.
pub fn lienard_residual_on(
    curve: &SolutionCurve,
    prob: &LienardProblem,
    seg: Range<usize>,
) -> Result<ResidualReport, VerifyError> {
    let (mut entries, mut scale) = (Vec::new(), 0.0);
    lienard_segment(curve, prob, &seg, &mut entries, &mut scale)?;
    Ok(ResidualReport::from_residuals(curve.len(), &entries, scale))
}

/// [`lienard_residual_on`] over every monotone segment long enough for the
/// stencil.
pub fn lienard_residual(curve: &SolutionCurve, prob: &LienardProblem) -> Result<ResidualReport, VerifyError> {
    let (mut entries, mut scale) = (Vec::new(), 0.0);
    let mut longest = 0;
    for seg in curve.monotone_segments() {
        longest = longest.max(seg.len());
        if seg.len() >= LIENARD_WIDTH {
            lienard_segment(curve, prob, &seg, &mut entries, &mut scale)?;
        }
    }
    if entries.is_empty() {
        return Err(VerifyError::TooFewSamples {
            needed: LIENARD_WIDTH,
            got: longest,
        });
    }
    Ok(ResidualReport::from_residuals(curve.len(), &entries, scale))
}

/// Integrates the Liénard equation as `(y, u)` from the first sample of
/// each monotone segment and reports `max |y_curve - y_ode| / (1 + |y_ode|)`
/// (`scale = 1`).
pub fn crosscheck_reference(
    curve: &SolutionCurve,
    prob: &LienardProblem,
    tol: &Tolerances,
) -> Result<ResidualReport, VerifyError> {
    let mut entries = Vec::new();
    for seg in curve.monotone_segments() {
        if seg.len() < 2 {
            continue;
        }
        check_segment(curve, &seg, 2)?;
        let start = seg.start;
        let state0 = [curve.ys[start], 1.0 / curve.vs[start]];
        let outputs = &curve.xs[start + 1..seg.end];
        let rhs = |_: f64, s: &[f64], d: &mut [f64]| {
            d[0] = s[1];
            d[1] = prob.force(s[0], s[1]).map(|f| -f).unwrap_or(f64::NAN);
        };
        let states = ode_solve_at(rhs, curve.xs[start], &state0, outputs, tol).map_err(|source| {
            let at = match source {
                NumericsError::StepUnderflow { at } | NumericsError::TooManySteps { at, .. } => at,
                _ => f64::NAN,
            };
            VerifyError::Oracle { at, source }
        })?;
        entries.push((start, curve.ys[start], 0.0));
        for (j, state) in states.iter().enumerate() {
            let i = start + 1 + j;
            entries.push((i, curve.ys[i], (curve.ys[i] - state[0]) / (1.0 + state[0].abs())));
        }
    }
    if entries.is_empty() {
        return Err(VerifyError::TooFewSamples { needed: 2, got: 0 });
    }
    Ok(ResidualReport::from_residuals(curve.len(), &entries, 1.0))
}

#[cfg(test)]
mod tests;
