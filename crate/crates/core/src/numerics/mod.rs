//! Root finding, ODE integration, quadrature and finite-difference
//! residuals.

pub mod fd;
pub mod grid;
pub mod implicit;
pub mod newton;
pub mod ode;
pub mod quad;

use thiserror::Error;

use crate::expr::EvalError;

pub use fd::{fd_residual, richardson_ratio, FdReport, Stencil};
pub use grid::{Axis, Grid};
pub use implicit::ImplicitSolution;
pub use newton::{newton_solve, safeguarded_newton, NewtonOptions, NewtonResult};
pub use ode::{integrate_ode, rk4, Trajectory};
pub use quad::{adaptive_simpson, IntegralSampler, Quadrature};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum NumericsError {
    #[error("evaluation failed at {at:?}: {source}")]
    Eval { at: Vec<f64>, source: EvalError },
    #[error("Newton iteration did not converge in {0} steps")]
    Divergence(usize),
    #[error("derivative vanishes at x = {0}")]
    DerivativeZero(f64),
    #[error("no sign change on [{0}, {1}]")]
    NoBracket(f64, f64),
    #[error("quadrature tolerance not reached within the subdivision budget")]
    QuadratureBudget,
    #[error("unsupported derivative order {0:?}")]
    Order(Vec<usize>),
    #[error("grid has no admissible nodes")]
    EmptyGrid,
}
