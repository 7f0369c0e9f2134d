//! Quantum Ziv-Zakai lower bounds on the prior-weighted RMSE of phase
//! estimation, for arbitrary prior distributions.
//!
//! The crate is organized bottom-up:
//!
//! - [`quadrature`]: adaptive Gauss-Kronrod integration, bisection, golden section.
//! - [`priors`]: prior densities and the overlap function `E(z)`.
//! - [`speedlimit`]: fidelity lower bounds (`alpha^-1`, Bhattacharyya, coherent states).
//! - [`bounds`]: the Ziv-Zakai bound and its speed-limit, variance and
//!   hypothesis-testing variants, plus the asymptotic constants.
//! - [`analysis`]: regime scans, gain maximization, Monte-Carlo RMSE baselines
//!   and figure data.

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bounds;
pub mod error;
pub mod priors;
pub mod quadrature;
pub mod speedlimit;
mod table;

pub use analysis::{
    EstimatorSpec, FigureData, FigureId, MaxGain, RmseEstimate, ScanAxis, ScanResult, ScanRow,
};
pub use bounds::{BoundKind, BoundRequest, BoundResult};
pub use error::{Error, Result};
pub use priors::{Moments, PriorDistribution, PriorFamily, PriorShape, TabulatedDensity};
pub use quadrature::{Integral, QuadratureConfig};
pub use speedlimit::{FidelityModel, FidelityTable};
