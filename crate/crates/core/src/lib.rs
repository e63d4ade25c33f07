//! Numerics laboratory for 1+1 dimensional lattice directed polymers in the
//! intermediate disorder regime.
//!
//! The crate is organized around the pipeline
//!
//! * [`environment`] — quenched random weight fields (exp-tilted, log-Gamma,
//!   two-point and constant families), strip modifications and the bounded
//!   weight event,
//! * [`partition`] — exact log-domain dynamic programming for point-to-point
//!   partition functions plus an enumeration oracle,
//! * [`sampler`] — exact backward sampling from the quenched polymer measure
//!   and path geometry queries (transversal fluctuation, steepness),
//! * [`scaling`] — closed-form constants of the intermediate-disorder
//!   regime: digamma/psi'' evaluation, theta(beta), weight moments and
//!   moment gaps, free energy centering and rescaling,
//! * [`tracy_widom`] — the Tracy-Widom GUE distribution via a Nystrom
//!   discretization of the Airy-kernel Fredholm determinant, plus
//!   Kolmogorov-Smirnov statistics,
//! * [`fluct`] — transversal fluctuation and steep-path mass experiments
//!   with exact cut-line routes and Monte Carlo routes,
//! * [`lindeberg`] — the vertex replacement machinery: W/V decomposition,
//!   per-vertex replacement errors, strip sweeps and the distribution
//!   transfer experiment.

pub mod environment;
pub mod fluct;
pub mod lindeberg;
pub mod logdomain;
pub mod partition;
pub mod rng;
pub mod sampler;
pub mod scaling;
pub mod special;
pub mod tracy_widom;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid weight family: {0}")]
    InvalidFamily(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("strip [{a}, {b}] out of range [0, {max}]")]
    StripOutOfRange { a: usize, b: usize, max: usize },
    #[error("vertex ({0}, {1}) outside the grid")]
    VertexOutsideGrid(usize, usize),
    #[error("path count {count} exceeds enumeration guard {guard}")]
    PathCountExceeded { count: u128, guard: u128 },
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("computation did not converge: {0}")]
    NonConvergent(String),
    #[error("malformed file: {0}")]
    BadFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// A lattice vertex `(i, j)`; `i` runs along `e1`, `j` along `e2`.
pub type Vertex = (usize, usize);
