//! Hardy–Schatten norms of stable linear stochastic systems and the
//! quadratic-cost functionals built on them.
//!
//! For `dX = AX dt + B dW`, `Z = CX` with transfer function
//! `F(s) = C(sI − A)⁻¹B` and spectral density `S = FF*`, the norms
//! `‖F‖₂ₖ^{2k} = (1/2π)∫Tr S(ω)ᵏ dω` are computed three ways:
//!
//! * [`wick`]: a cascade of Lyapunov equations realizing a spectral factor of `Sᵏ`;
//! * [`riccati`]: Taylor coefficients of the risk-sensitive Riccati solution in `θ`;
//! * [`costshape`]: adaptive quadrature over frequency.
//!
//! [`simcheck`] checks the asymptotic cost statistics by simulation and
//! Toeplitz-trace evaluation.

pub mod costshape;
pub mod error;
pub mod fixtures;
pub mod matlin;
pub mod quadrature;
pub mod riccati;
pub mod settings;
pub mod simcheck;
pub mod sysmodel;
pub mod wick;

pub use error::{Error, ErrorKind, Result};
pub use matlin::{CMat, HermitianMatrix, Mat};
pub use settings::{LyapunovMethod, NumericSettings};
pub use sysmodel::{HinfBracket, NormMethod, NormReport, StateSpaceSystem};
