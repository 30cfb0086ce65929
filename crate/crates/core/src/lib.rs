//! Robust factor analysis for heavy-tailed panels.
//!
//! Factor loadings are estimated from the leading eigenvectors of the sample
//! spatial Kendall's tau matrix and factor scores by cross-sectional least
//! squares (the robust two-step, or RTS, estimator). A covariance-based PCA
//! baseline, seeded samplers for elliptical and stable laws, a Monte Carlo
//! harness, and a minimum-variance backtest are provided alongside.

pub mod distributions;
pub mod error;
pub mod factor;
pub mod kendall;
pub mod linalg;
pub mod portfolio;
pub mod simulation;

mod par;

pub use error::{Error, Result};
pub use factor::{DataPanel, FactorFit, Method};
pub use kendall::KendallMatrix;
pub use linalg::{EigenDecomposition, SymMatrix};
