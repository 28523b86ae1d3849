use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::conditions::CheckOptions;
use crate::expr::Expr;
use crate::model::{ClassicalAbel, Domain, LienardProblem};
use crate::numerics::Tolerances;
use crate::solvers::SolveOptions;

use super::CliError;

/// Problem description read from a TOML file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub equation: Option<EquationBlock>,
    pub classical: Option<ClassicalBlock>,
    pub domain: Domain,
    pub particular: Option<ParticularBlock>,
    pub solve: Option<SolveBlock>,
    #[serde(default)]
    pub tolerances: ToleranceBlock,
}

fn zero() -> String {
    "0".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationBlock {
    pub n: f64,
    pub m: f64,
    #[serde(default = "zero")]
    pub f: String,
    #[serde(default = "zero")]
    pub k: String,
    #[serde(default = "zero")]
    pub g: String,
    #[serde(default = "zero")]
    pub h: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalBlock {
    pub p: String,
    #[serde(default = "zero")]
    pub q: String,
    #[serde(default = "zero")]
    pub r: String,
    #[serde(default = "zero")]
    pub s: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticularBlock {
    pub v_p: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub theorem: String,
    pub branch: Option<String>,
    pub x0: Option<f64>,
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    /// `[y_a, theta_a]`.
    pub anchor: Option<[f64; 2]>,
    #[serde(rename = "P")]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceBlock {
    pub rel_tol: Option<f64>,
    pub quad_rel: Option<f64>,
    pub quad_abs: Option<f64>,
    pub root_abs: Option<f64>,
    pub ode_rel: Option<f64>,
    pub ode_abs: Option<f64>,
    pub max_iter: Option<usize>,
    /// Constancy tolerance for invariants.
    pub invariant: Option<f64>,
}

impl ToleranceBlock {
    pub fn numerics(&self) -> Result<Tolerances, CliError> {
        let d = Tolerances::default();
        let tol = Tolerances {
            quad_rel: self.quad_rel.unwrap_or(d.quad_rel),
            quad_abs: self.quad_abs.unwrap_or(d.quad_abs),
            root_abs: self.root_abs.unwrap_or(d.root_abs),
            ode_rel: self.ode_rel.unwrap_or(d.ode_rel),
            ode_abs: self.ode_abs.unwrap_or(d.ode_abs),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
        };
        tol.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(tol)
    }

    pub fn check(&self) -> Result<CheckOptions, CliError> {
        let rel_tol = self.rel_tol.unwrap_or(CheckOptions::default().rel_tol);
        if !(rel_tol > 0.0 && rel_tol.is_finite()) {
            return Err(CliError::Input(format!("rel_tol must be positive, got {rel_tol}")));
        }
        Ok(CheckOptions {
            rel_tol,
            numerics: self.numerics()?,
        })
    }

    pub fn solve(&self) -> Result<SolveOptions, CliError> {
        Ok(SolveOptions { check: self.check()? })
    }

    pub fn invariant(&self) -> f64 {
        self.invariant.unwrap_or(1e-9)
    }
}

pub fn parse_expr(what: &str, text: &str) -> Result<Expr, CliError> {
    text.parse().map_err(|e| CliError::Input(format!("{what}: {e}")))
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<ProblemFile, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<ProblemFile, CliError> {
        let file: ProblemFile = toml::from_str(text).map_err(|e| CliError::Input(e.to_string()))?;
        file.domain.validate().map_err(|e| CliError::Input(e.to_string()))?;
        if file.equation.is_none() && file.classical.is_none() {
            return Err(CliError::Input("need an [equation] or a [classical] block".to_string()));
        }
        Ok(file)
    }

    pub fn lienard(&self) -> Result<LienardProblem, CliError> {
        let eq = self
            .equation
            .as_ref()
            .ok_or_else(|| CliError::Input("missing [equation] block".to_string()))?;
        let prob = LienardProblem::new(
            eq.n,
            eq.m,
            parse_expr("f", &eq.f)?,
            parse_expr("k", &eq.k)?,
            parse_expr("g", &eq.g)?,
            parse_expr("h", &eq.h)?,
            self.domain,
        )?;
        Ok(prob)
    }

    pub fn classical(&self) -> Result<ClassicalAbel, CliError> {
        let c = self
            .classical
            .as_ref()
            .ok_or_else(|| CliError::Input("missing [classical] block".to_string()))?;
        Ok(ClassicalAbel::new(
            parse_expr("p", &c.p)?,
            parse_expr("q", &c.q)?,
            parse_expr("r", &c.r)?,
            parse_expr("s", &c.s)?,
            self.domain,
        )?)
    }

    pub fn particular(&self) -> Result<Option<Expr>, CliError> {
        self.particular.as_ref().map(|b| parse_expr("v_p", &b.v_p)).transpose()
    }

    pub fn solve_block(&self) -> Result<&SolveBlock, CliError> {
        self.solve.as_ref().ok_or_else(|| CliError::Input("missing [solve] block".to_string()))
    }
}

impl SolveBlock {
    pub fn constant(&self, name: &str) -> Result<f64, CliError> {
        self.constants
            .get(name)
            .copied()
            .ok_or_else(|| CliError::Input(format!("[solve] constants needs {name}")))
    }

    pub fn anchor(&self) -> Result<(f64, f64), CliError> {
        self.anchor
            .map(|[y, t]| (y, t))
            .ok_or_else(|| CliError::Input("[solve] needs anchor = [y_a, theta_a]".to_string()))
    }
}
