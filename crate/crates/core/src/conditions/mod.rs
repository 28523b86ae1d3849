//! Pointwise checks of the integrability conditions on a sample grid, with
//! estimation of their free constants.
//!
//! Every check evaluates both sides of its identity at the grid points,
//! estimates the constant (median of pointwise ratios, or a least-squares
//! fit where the condition is affine in the constant), and then verifies the
//! identity at every point with that constant. The verdict is
//! `satisfied` iff `residual_max <= rel_tol * scale`, where `scale` is the
//! largest term magnitude seen on the grid.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::expr::Expr;
use crate::model::{
    eval_named, lienard_to_abel, particular_residual, quadratic_cubic_form, Domain, ExprIntegral, LienardProblem,
    ModelError, PARTICULAR_TOL,
};
use crate::numerics::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum ConditionId {
    #[serde(rename = "chiellini")]
    Chiellini,
    T1,
    T2,
    T3,
    T4a,
    T4b,
    #[serde(rename = "riccati")]
    Riccati,
}

impl ConditionId {
    pub fn as_str(self) -> &'static str {
        match self {
            ConditionId::Chiellini => "chiellini",
            ConditionId::T1 => "T1",
            ConditionId::T2 => "T2",
            ConditionId::T3 => "T3",
            ConditionId::T4a => "T4a",
            ConditionId::T4b => "T4b",
            ConditionId::Riccati => "riccati",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Satisfied,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated => "violated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, f64>,
    pub residual_max: f64,
    pub residual_rms: f64,
    pub scale: f64,
    pub grid_size: usize,
    #[serde(skip)]
    pub grid: Vec<f64>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn satisfied(&self) -> bool {
        self.verdict == Verdict::Satisfied
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    /// `residual_max / scale`, or 0 for an exactly-zero identity.
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual_max / self.scale
        } else {
            self.residual_max
        }
    }

    /// One-line summary, e.g. `T1 satisfied, residual 0.0e0`.
    pub fn summary(&self) -> String {
        let mut line = format!("{} {}, residual {:.1e}", self.condition, self.verdict, self.residual_max);
        for (name, value) in &self.constants {
            line.push_str(&format!(", {name} = {value}"));
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error("condition {condition} needs (n, m) = {expected:?}, got ({n}, {m})")]
    WrongExponents {
        condition: ConditionId,
        expected: (f64, f64),
        n: f64,
        m: f64,
    },
    #[error("{what} vanishes at {at}")]
    Vanishes { what: &'static str, at: f64 },
    #[error("discriminant g^2 - 3 f h = {value} is not positive at {at}")]
    NegativeDiscriminant { at: f64, value: f64 },
    #[error("{what} = {value} is not positive at {at}")]
    NotPositive { what: &'static str, at: f64, value: f64 },
    #[error("{what} is not identically zero (value {value} at {at})")]
    NotAbsent { what: &'static str, at: f64, value: f64 },
    #[error("degenerate condition: both sides vanish identically, the constant S = 0 is excluded")]
    Degenerate,
    #[error("v_p is not a particular solution: relative residual {relative:e} at {at}")]
    NotParticular { relative: f64, at: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Relative tolerance of the verdict plus numerical tolerances for the
/// quadratures some checks need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub rel_tol: f64,
    pub numerics: Tolerances,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            rel_tol: 1e-6,
            numerics: Tolerances::default(),
        }
    }
}

// Grid points whose denominator is below this fraction of the largest one
// are left out of ratio estimates.
const EXCLUDE_FRACTION: f64 = 1e-10;

fn sample(name: &'static str, e: &Expr, grid: &[f64]) -> Result<Vec<f64>, ModelError> {
    grid.iter().map(|&t| eval_named(name, e, t)).collect()
}

fn nonzero(what: &'static str, values: &[f64], grid: &[f64]) -> Result<(), ConditionError> {
    match values.iter().position(|v| *v == 0.0) {
        Some(i) => Err(ConditionError::Vanishes { what, at: grid[i] }),
        None => Ok(()),
    }
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn median(mut values: Vec<f64>) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

/// Median of `num / den` over points where `den` is not negligible.
fn ratio_estimate(num: &[f64], den: &[f64]) -> Option<f64> {
    let cutoff = EXCLUDE_FRACTION * max_abs(den);
    let ratios = num
        .iter()
        .zip(den)
        .filter(|(_, d)| d.abs() > cutoff && **d != 0.0)
        .map(|(n, d)| n / d)
        .collect();
    median(ratios)
}

struct Residuals {
    values: Vec<f64>,
    scale: f64,
}

impl Residuals {
    fn new() -> Self {
        Residuals {
            values: Vec::new(),
            scale: 0.0,
        }
    }

    fn push(&mut self, residual: f64, terms: &[f64]) {
        self.values.push(residual.abs());
        for t in terms {
            self.scale = self.scale.max(t.abs());
        }
    }

    fn report(
        self,
        condition: ConditionId,
        constants: BTreeMap<String, f64>,
        grid: Vec<f64>,
        rel_tol: f64,
        mut notes: Vec<String>,
        force_violated: bool,
    ) -> ConditionReport {
        let residual_max = max_abs(&self.values);
        let n = self.values.len().max(1) as f64;
        let residual_rms = (self.values.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
        let ok = residual_max.is_finite() && residual_max <= rel_tol * self.scale;
        let verdict = if ok && !force_violated {
            Verdict::Satisfied
        } else {
            Verdict::Violated
        };
        if !ok {
            notes.push(format!(
                "relative residual {:.3e} exceeds tolerance {:.1e}",
                if self.scale > 0.0 { residual_max / self.scale } else { residual_max },
                rel_tol
            ));
        }
        ConditionReport {
            condition,
            verdict,
            constants,
            residual_max,
            residual_rms,
            scale: self.scale,
            grid_size: grid.len(),
            grid,
            notes,
        }
    }
}

fn require_exponents(prob: &LienardProblem, condition: ConditionId, n: f64, m: f64) -> Result<(), ConditionError> {
    if prob.n != n || prob.m != m {
        return Err(ConditionError::WrongExponents {
            condition,
            expected: (n, m),
            n: prob.n,
            m: prob.m,
        });
    }
    Ok(())
}

/// `d/dx (p/q) = S q` with constant `S != 0`, the integrability condition of
/// `y' = p y^3 + q y^2`.
pub fn check_chiellini(p: &Expr, q: &Expr, domain: &Domain, opts: &CheckOptions) -> Result<ConditionReport, ConditionError> {
    let grid = domain.grid();
    let qv = sample("q", q, &grid)?;
    nonzero("q", &qv, &grid)?;
    let lhs = sample("(p/q)'", &(p / q).derivative(), &grid)?;

    let lhs_scale = max_abs(&lhs);
    if lhs_scale <= 1e-14 * max_abs(&sample("p/q", &(p / q).simplify(), &grid)?).max(1.0) {
        return Err(ConditionError::Degenerate);
    }
    let s = ratio_estimate(&lhs, &qv).unwrap_or(0.0);

    let mut res = Residuals::new();
    for i in 0..grid.len() {
        res.push(lhs[i] - s * qv[i], &[s * qv[i]]);
    }
    let mut notes = Vec::new();
    let zero_s = s == 0.0;
    if zero_s {
        notes.push("estimated S = 0 is excluded".to_string());
    }
    let constants = BTreeMap::from([("S".to_string(), s)]);
    Ok(res.report(ConditionId::Chiellini, constants, grid, opts.rel_tol, notes, zero_s))
}

/// `(g/h)' = -3k + f g/h - (2/9) g^3/h^2` for `n = 2`, `m = 3`; no free
/// constants.
pub fn check_theorem1(prob: &LienardProblem, opts: &CheckOptions) -> Result<ConditionReport, ConditionError> {
    require_exponents(prob, ConditionId::T1, 2.0, 3.0)?;
    let grid = prob.domain.grid();
    let hv = sample("h", &prob.h, &grid)?;
    nonzero("h", &hv, &grid)?;
    let ratio = (&prob.g / &prob.h).simplify();
    let lhs = sample("(g/h)'", &ratio.derivative(), &grid)?;
    let fv = sample("f", &prob.f, &grid)?;
    let gv = sample("g", &prob.g, &grid)?;
    let kv = sample("k", &prob.k, &grid)?;

    let mut res = Residuals::new();
    for i in 0..grid.len() {
        let r = gv[i] / hv[i];
        let terms = [-3.0 * kv[i], fv[i] * r, -(2.0 / 9.0) * r * r * gv[i]];
        let rhs: f64 = terms.iter().sum();
        res.push(lhs[i] - rhs, &[lhs[i], terms[0], terms[1], terms[2]]);
    }
    Ok(res.report(ConditionId::T1, BTreeMap::new(), grid, opts.rel_tol, Vec::new(), false))
}

/// `g^2/(3h^2) - f/h = 1 / (6 S ∫h + C0/3)`, fitted as a straight line in
/// `H(y) = ∫_{y_min}^y h`.
pub fn check_theorem2(prob: &LienardProblem, opts: &CheckOptions) -> Result<ConditionReport, ConditionError> {
    require_exponents(prob, ConditionId::T2, 2.0, 3.0)?;
    let grid = prob.domain.grid();
    let hv = sample("h", &prob.h, &grid)?;
    nonzero("h", &hv, &grid)?;
    let fv = sample("f", &prob.f, &grid)?;
    let gv = sample("g", &prob.g, &grid)?;
    let big_h = ExprIntegral::new(prob.h.clone(), &prob.domain, &opts.numerics)?;

    let mut xs = Vec::with_capacity(grid.len());
    let mut ys = Vec::with_capacity(grid.len());
    for (i, &y) in grid.iter().enumerate() {
        let disc = gv[i] * gv[i] - 3.0 * fv[i] * hv[i];
        if !(disc > 0.0) {
            return Err(ConditionError::NegativeDiscriminant { at: y, value: disc });
        }
        let d = disc / (3.0 * hv[i] * hv[i]);
        xs.push(big_h.eval(y)?);
        ys.push(1.0 / d);
    }

    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let s = slope / 6.0;

    let mut res = Residuals::new();
    for i in 0..xs.len() {
        let fit = slope * xs[i] + intercept;
        res.push(ys[i] - fit, &[ys[i], fit]);
    }
    let mut notes = vec!["fit of 1/(g^2/3h^2 - f/h) = 6 S H(y) + C0/3 with H anchored at the domain minimum".to_string()];
    // A flat line means S = 0, which is excluded.
    let flat = slope.abs() * (xs[xs.len() - 1] - xs[0]).abs() <= opts.rel_tol * res.scale;
    if flat {
        notes.push("slope vanishes: S = 0 is excluded".to_string());
    }
    let constants = BTreeMap::from([("S".to_string(), s), ("C0".to_string(), 3.0 * intercept)]);
    Ok(res.report(ConditionId::T2, constants, grid, opts.rel_tol, notes, flat))
}

/// `f + 2 g v_p + 3 h v_p^2 = (ln|φ|)' + S h φ^2` with `φ = g/h + 3 v_p`,
/// i.e. the Chiellini condition of the equation left after subtracting the
/// particular solution `v_p`. `S` is fitted by least squares through the
/// origin.
pub fn check_theorem3(prob: &LienardProblem, v_p: &Expr, opts: &CheckOptions) -> Result<ConditionReport, ConditionError> {
    require_exponents(prob, ConditionId::T3, 2.0, 3.0)?;
    let qc = quadratic_cubic_form(&lienard_to_abel(prob))?;
    let pr = particular_residual(&qc, v_p, &prob.domain)?;
    if pr.max_rel > PARTICULAR_TOL {
        return Err(ConditionError::NotParticular {
            relative: pr.max_rel,
            at: pr.at,
        });
    }
    let grid = prob.domain.grid();
    let hv = sample("h", &prob.h, &grid)?;
    nonzero("h", &hv, &grid)?;
    let phi = (&prob.g / &prob.h + 3.0 * v_p.clone()).simplify();
    let phiv = sample("g/h+3v_p", &phi, &grid)?;
    nonzero("g + 3 h v_p", &phiv, &grid)?;
    let dphi = sample("(g/h+3v_p)'", &phi.derivative(), &grid)?;
    let lambda = (&prob.f + 2.0 * prob.g.clone() * v_p + 3.0 * prob.h.clone() * v_p * v_p).simplify();
    let lamv = sample("f+2g v_p+3h v_p^2", &lambda, &grid)?;

    let mut lhs = Vec::with_capacity(grid.len());
    let mut basis = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        lhs.push(lamv[i] - dphi[i] / phiv[i]);
        basis.push(hv[i] * phiv[i] * phiv[i]);
    }
    let bb: f64 = basis.iter().map(|b| b * b).sum();
    let s = if bb > 0.0 {
        lhs.iter().zip(&basis).map(|(l, b)| l * b).sum::<f64>() / bb
    } else {
        0.0
    };

    let mut res = Residuals::new();
    for i in 0..grid.len() {
        res.push(lhs[i] - s * basis[i], &[lamv[i], dphi[i] / phiv[i], s * basis[i]]);
    }
    let mut notes = vec!["S is the Chiellini constant of w' = A w^2 + B w^3 (same normalization for both forms of the condition)".to_string()];
    let zero_s = s.abs() * max_abs(&basis) <= opts.rel_tol * res.scale.max(f64::MIN_POSITIVE);
    if zero_s {
        notes.push("S = 0 is excluded".to_string());
    }
    let constants = BTreeMap::from([("S".to_string(), s)]);
    Ok(res.report(ConditionId::T3, constants, grid, opts.rel_tol, notes, zero_s))
}

struct TwoTerm {
    grid: Vec<f64>,
    lhs: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

fn two_term_setup(prob: &LienardProblem, p: f64) -> Result<TwoTerm, ConditionError> {
    let grid = prob.domain.grid();
    for (what, e) in [("g", &prob.g), ("h", &prob.h)] {
        for &y in &grid {
            let value = eval_named(what, e, y)?;
            if value != 0.0 {
                return Err(ConditionError::NotAbsent { what, at: y, value });
            }
        }
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(ConditionError::NotPositive {
            what: "P",
            at: f64::NAN,
            value: p,
        });
    }
    let fv = sample("f", &prob.f, &grid)?;
    let kv = sample("k", &prob.k, &grid)?;
    nonzero("k", &kv, &grid)?;
    for i in 0..grid.len() {
        let ratio = fv[i] / kv[i];
        if !(ratio > 0.0) {
            return Err(ConditionError::NotPositive {
                what: "f/k",
                at: grid[i],
                value: ratio,
            });
        }
    }
    let a = 1.0 / (prob.n - prob.m);
    let power = (&prob.f / &prob.k).pow(Expr::constant(a));
    let lhs = sample("d/dy (f/k)^(1/(n-m))", &power.derivative(), &grid)?;
    let pf = p.powf(2.0 - prob.m);
    let mut first = Vec::with_capacity(grid.len());
    let mut second = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let r = fv[i] / kv[i];
        first.push(pf * fv[i] * r.powf((3.0 - prob.n) * a));
        second.push(pf * kv[i] * r.powf((3.0 - prob.m) * a));
    }
    Ok(TwoTerm {
        grid,
        lhs,
        first,
        second,
    })
}

fn two_term_report(
    t: TwoTerm,
    basis: &[f64],
    p: f64,
    condition: ConditionId,
    opts: &CheckOptions,
) -> ConditionReport {
    let s = ratio_estimate(&t.lhs, basis).unwrap_or(0.0);
    let mut res = Residuals::new();
    for i in 0..t.grid.len() {
        res.push(t.lhs[i] - s * basis[i], &[t.lhs[i], s * basis[i]]);
    }
    let degenerate = max_abs(&t.lhs) <= 1e-14 * max_abs(basis).max(1.0);
    let mut notes = vec!["only S P^(2-m) is identifiable; P is fixed by the caller".to_string()];
    if degenerate {
        notes.push("left side vanishes identically: S = 0 is excluded".to_string());
    }
    let constants = BTreeMap::from([("S".to_string(), s), ("P".to_string(), p)]);
    res.report(condition, constants, t.grid, opts.rel_tol, notes, degenerate)
}

/// Generalized Chiellini condition for `g = h = 0`:
/// `d/dy (f/k)^(1/(n-m)) = S P^(2-m) f (f/k)^((3-n)/(n-m))`.
pub fn check_generalized_chiellini(prob: &LienardProblem, p: f64, opts: &CheckOptions) -> Result<ConditionReport, ConditionError> {
    let t = two_term_setup(prob, p)?;
    let basis = t.first.clone();
    Ok(two_term_report(t, &basis, p, ConditionId::T4a, opts))
}

/// The same condition in its second form,
/// `d/dy (f/k)^(1/(n-m)) = S P^(2-m) k (f/k)^((3-m)/(n-m))`.
pub fn check_generalized_chiellini_second(
    prob: &LienardProblem,
    p: f64,
    opts: &CheckOptions,
) -> Result<ConditionReport, ConditionError> {
    let t = two_term_setup(prob, p)?;
    let basis = t.second.clone();
    Ok(two_term_report(t, &basis, p, ConditionId::T4b, opts))
}

/// `d/dy sqrt(f/k) = K f` for `v' = f + k v^2`; `K = 0` is allowed.
pub fn check_riccati(f: &Expr, k: &Expr, domain: &Domain, opts: &CheckOptions) -> Result<ConditionReport, ConditionError> {
    let grid = domain.grid();
    let fv = sample("f", f, &grid)?;
    let kv = sample("k", k, &grid)?;
    nonzero("k", &kv, &grid)?;
    for i in 0..grid.len() {
        let ratio = fv[i] / kv[i];
        if !(ratio > 0.0) {
            return Err(ConditionError::NotPositive {
                what: "f/k",
                at: grid[i],
                value: ratio,
            });
        }
    }
    let lhs = sample("d/dy sqrt(f/k)", &(f / k).sqrt().derivative(), &grid)?;
    let big_k = ratio_estimate(&lhs, &fv).unwrap_or(0.0);
    let mut res = Residuals::new();
    for i in 0..grid.len() {
        res.push(lhs[i] - big_k * fv[i], &[lhs[i], big_k * fv[i]]);
    }
    let constants = BTreeMap::from([("K".to_string(), big_k)]);
    Ok(res.report(ConditionId::Riccati, constants, grid, opts.rel_tol, Vec::new(), false))
}
