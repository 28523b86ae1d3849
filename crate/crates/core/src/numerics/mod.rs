//! Numerical kernel: quadrature, bracketed roots, adaptive Runge–Kutta and
//! finite differences.

mod fd;
mod ode;
mod quad;
mod root;

use thiserror::Error;

pub use fd::{derivative_fd, fd_weights, Stencil};
pub use ode::{ode_solve, ode_solve_at, Trajectory};
pub use quad::{integrate_adaptive, Antiderivative};
pub use root::find_root;

/// Tolerances shared by every numerical routine.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quad_rel: f64,
    pub quad_abs: f64,
    pub root_abs: f64,
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quad_rel: 1e-10,
            quad_abs: 1e-12,
            root_abs: 1e-12,
            ode_rel: 1e-9,
            ode_abs: 1e-12,
            max_iter: 200,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), NumericsError> {
        let reals = [
            ("quad_rel", self.quad_rel),
            ("quad_abs", self.quad_abs),
            ("root_abs", self.root_abs),
            ("ode_rel", self.ode_rel),
            ("ode_abs", self.ode_abs),
        ];
        for (name, value) in reals {
            if !(value > 0.0 && value.is_finite()) {
                return Err(NumericsError::InvalidTolerance { name, value });
            }
        }
        if self.max_iter == 0 {
            return Err(NumericsError::InvalidTolerance {
                name: "max_iter",
                value: 0.0,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("quadrature did not converge after {iterations} subdivisions (estimate {estimate}, error {error})")]
    QuadNonConvergence {
        iterations: usize,
        estimate: f64,
        error: f64,
    },
    #[error("integrand is not finite at {at}")]
    SingularIntegrand { at: f64 },
    #[error("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("function is not finite at {at} during root search")]
    RootNonFinite { at: f64 },
    #[error("root search exceeded {iterations} iterations")]
    RootMaxIterations { iterations: usize },
    #[error("ODE step size underflow at x = {at} (solution blow-up or singular right-hand side)")]
    StepUnderflow { at: f64 },
    #[error("ODE integration exceeded {steps} steps at x = {at}")]
    TooManySteps { steps: usize, at: f64 },
    #[error("invalid tolerance {name} = {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
}
