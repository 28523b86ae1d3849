//! Closed-form and quadrature solutions of the integrable cases.
//!
//! Every solver returns a [`SolutionCurve`]: samples `(y, v, x)` on the
//! problem grid with `v = 1/y'` and `x = x0 + ∫ v dy`. All indefinite
//! integrals are anchored at the left end of the domain unless an explicit
//! anchor is given; integration constants are always caller inputs.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

use crate::conditions::{CheckOptions, ConditionError, ConditionId};
use crate::model::ModelError;
use crate::numerics::{fd_weights, NumericsError};

mod chiellini;
mod generalized;
mod riccati;
mod theorems;

pub use chiellini::{
    chiellini_g, chiellini_g_continuous, chiellini_g_prime, chiellini_theta, half_line_segment, segment_of,
    singular_points, Regime, Segment,
};
pub use generalized::{solve_theorem4, theorem4_denominator, theorem4_h, theorem4_h_between, THETA_REF};
pub use riccati::{riccati_theta, solve_riccati, RiccatiForm};
pub use theorems::{solve_theorem1, solve_theorem2, solve_theorem3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("condition {condition} is violated (relative residual {relative:e})")]
    ConditionViolated { condition: ConditionId, relative: f64 },
    #[error("constant {name} = {given} does not match the estimate {estimated}")]
    ConstantMismatch {
        name: &'static str,
        given: f64,
        estimated: f64,
    },
    #[error("S = 0 is excluded")]
    ZeroS,
    #[error("radicand {value} is not positive at y = {at}")]
    Radicand { at: f64, value: f64 },
    #[error("theta = {theta} is a singular point of theta (theta^2 + theta + S) with S = {s}")]
    ThetaSingular { theta: f64, s: f64 },
    #[error("bracket [{lo}, {hi}] contains a singular point of G")]
    NonMonotoneBracket { lo: f64, hi: f64 },
    #[error("theta equation has no solution on the monotone segment at y = {at} (target {target}): the solution leaves the segment")]
    ThetaOutOfRange { at: f64, target: f64 },
    #[error("denominator of H vanishes at theta = {theta}")]
    DenominatorRoot { theta: f64 },
    #[error("anchor y = {y} lies outside the domain")]
    AnchorOutside { y: f64 },
    #[error("{what} vanishes identically; the reduction degenerates")]
    Degenerate { what: &'static str },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum TheoremId {
    T1,
    T2,
    T3,
    T4,
    T5,
}

impl TheoremId {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremId::T1 => "T1",
            TheoremId::T2 => "T2",
            TheoremId::T3 => "T3",
            TheoremId::T4 => "T4",
            TheoremId::T5 => "T5",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(TheoremId::T1),
            "t2" => Ok(TheoremId::T2),
            "t3" => Ok(TheoremId::T3),
            "t4" => Ok(TheoremId::T4),
            "t5" | "riccati" => Ok(TheoremId::T5),
            other => Err(format!("unknown theorem `{other}` (expected T1..T5 or riccati)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        }
    }
}

impl FromStr for Branch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            other => Err(format!("unknown branch `{other}` (expected + or -)")),
        }
    }
}

/// Options shared by all solvers.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    pub check: CheckOptions,
}

/// Sampled solution `(y_i, v_i, x_i)` of a Liénard/Abel problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCurve {
    pub theorem: TheoremId,
    pub ys: Vec<f64>,
    pub vs: Vec<f64>,
    pub xs: Vec<f64>,
    pub constants: BTreeMap<String, f64>,
    pub branch: Option<Branch>,
    /// Index ranges between poles of `v`; `x` restarts at `x0` in each.
    pub pieces: Vec<Range<usize>>,
    pub notes: Vec<String>,
}

impl SolutionCurve {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.len()).map(move |i| (self.ys[i], self.vs[i], self.xs[i]))
    }

    pub fn constant(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }

    /// Maximal index ranges inside one piece on which `v` keeps a fixed,
    /// nonzero sign, so `y(x)` is single valued there.
    pub fn monotone_segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        for piece in &self.pieces {
            let mut run: Option<(usize, f64)> = None;
            for i in piece.clone() {
                let v = self.vs[i];
                let sign = if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                if let Some((start, run_sign)) = run {
                    if run_sign == sign {
                        continue;
                    }
                    out.push(start..i);
                }
                run = (sign != 0.0).then_some((i, sign));
            }
            if let Some((start, _)) = run {
                out.push(start..piece.end);
            }
        }
        out
    }
}

// Gauss–Legendre 4-point rule on [-1, 1].
const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
    (-0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_26, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_86),
];

/// Cumulative `∫_{ys[0]}^{ys[i]} v` from samples: each interval integrates
/// the interpolating polynomial through the (up to) eight nearest samples.
pub fn cumulative_integral(ys: &[f64], vs: &[f64]) -> Vec<f64> {
    let n = ys.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let width = n.min(8);
    for i in 0..n - 1 {
        let first = (i + 1).saturating_sub(width / 2).min(n - width);
        let nodes = &ys[first..first + width];
        let (a, b) = (ys[i], ys[i + 1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut acc = 0.0;
        for (z, w) in GL4 {
            let lagrange = &fd_weights(mid + half * z, nodes, 0)[0];
            let value: f64 = lagrange.iter().zip(&vs[first..first + width]).map(|(l, v)| l * v).sum();
            acc += w * value;
        }
        out[i + 1] = out[i] + acc * half;
    }
    out
}

pub(crate) struct CurveBuilder {
    theorem: TheoremId,
    constants: BTreeMap<String, f64>,
    branch: Option<Branch>,
    notes: Vec<String>,
}

impl CurveBuilder {
    pub(crate) fn new(theorem: TheoremId) -> Self {
        CurveBuilder {
            theorem,
            constants: BTreeMap::new(),
            branch: None,
            notes: Vec::new(),
        }
    }

    pub(crate) fn constant(mut self, name: &str, value: f64) -> Self {
        self.constants.insert(name.to_string(), value);
        self
    }

    pub(crate) fn branch(mut self, branch: Branch) -> Self {
        self.branch = Some(branch);
        self
    }

    pub(crate) fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Splits the samples into pieces at `breaks` (sorted pole locations),
    /// integrates `v` within each piece starting from `x0`.
    pub(crate) fn build(self, ys: Vec<f64>, vs: Vec<f64>, x0: f64, breaks: &[f64]) -> Result<SolutionCurve, SolverError> {
        if let Some(i) = vs.iter().position(|v| !v.is_finite()) {
            return Err(SolverError::Invalid(format!("non-finite v at y = {}", ys[i])));
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        for &b in breaks {
            let end = ys.partition_point(|&y| y < b);
            if end > start {
                pieces.push(start..end);
            }
            start = end;
        }
        if start < ys.len() {
            pieces.push(start..ys.len());
        }
        let mut xs = vec![0.0; ys.len()];
        for piece in &pieces {
            let cum = cumulative_integral(&ys[piece.clone()], &vs[piece.clone()]);
            for (j, c) in cum.into_iter().enumerate() {
                xs[piece.start + j] = x0 + c;
            }
        }
        let mut constants = self.constants;
        constants.insert("x0".to_string(), x0);
        let mut notes = self.notes;
        if pieces.len() > 1 {
            notes.push(format!("v has {} pole(s); x restarts at x0 in each piece", pieces.len() - 1));
        }
        Ok(SolutionCurve {
            theorem: self.theorem,
            ys,
            vs,
            xs,
            constants,
            branch: self.branch,
            pieces,
            notes,
        })
    }
}

fn require_close(name: &'static str, given: f64, estimated: f64, rel: f64) -> Result<(), SolverError> {
    if (given - estimated).abs() > rel * estimated.abs().max(1.0) {
        return Err(SolverError::ConstantMismatch { name, given, estimated });
    }
    Ok(())
}
