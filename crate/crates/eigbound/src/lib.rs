//! Guaranteed a posteriori error bounds for periodic Schrödinger eigenproblems
//! discretized by an interior-penalty discontinuous Galerkin method over
//! adaptive local basis functions.
//!
//! The library solves
//!
//! ```text
//! -Δu + V u = λ u    on a periodic box Ω,     ‖u‖_Ω = 1,
//! ```
//!
//! by building, per mesh element, a small set of basis functions adapted to
//! the potential `V` (restrictions of eigenfunctions of local problems on
//! extended elements), coupling them with an interior-penalty bilinear form,
//! and then certifying the computed eigenpairs: for each pair it produces a
//! fully computable upper bound `η` and lower bound `ξ` on the energy-norm
//! eigenfunction error, together with eigenvalue bounds, with *no unknown
//! constants* — every constant in the estimators is itself computed from
//! small local eigenvalue problems.
//!
//! # Pipeline
//!
//! ```text
//! mesh ─► spectral (reference + local solves) ─► basis ─► constants
//!   └────────────────────────► dg ─► estimators ─► report
//! ```
//!
//! * [`mesh`] — uniform periodic tensor partitions and Gauss–Lobatto–Legendre
//!   quadrature on elements and faces.
//! * [`fields`] — element-wise (broken) grid functions, jump/average traces,
//!   broken norms.
//! * [`fourier`] — trigonometric interpolation: evaluate a periodic Fourier
//!   representation (values, gradients, Laplacians) anywhere.
//! * [`spectral`] — Gaussian-bump potentials and dense planewave collocation
//!   solves; provides both the reference spectrum oracle and the local solves
//!   behind basis generation.
//! * [`basis`] — adaptive local basis generation and per-element projections.
//! * [`constants`] — the computable trace/norm constants (`a_κ`, `b_κ`,
//!   `d_κ`) and the penalty parameters derived from them.
//! * [`dg`] — assembly of the interior-penalty operator, the generalized
//!   eigensolve, energy norms, and bilinear-form evaluation.
//! * [`estimators`] — residual/flux/jump estimators, bubble-function lower
//!   bound machinery, higher-order terms, and eigenvalue bounds.
//! * [`report`] — alignment of discrete eigenvectors against the reference,
//!   true error measurement, and effectivity tables.
//! * [`run`] — end-to-end driver: configuration, presets, and artifact
//!   output used by the command-line interface.
//!
//! # Example
//!
//! Certify the three bound states of a 1-D triple-well potential:
//!
//! ```
//! use eigbound::run::{RunConfig, run};
//!
//! let mut config = RunConfig::preset_1d().expect("built-in preset parses");
//! // Shrink the run so the doc-test stays quick: coarse reference, 3 pairs.
//! config.reference.wavecount = 129;
//! config.basis.wavecount = 65;
//! config.pairs = 3;
//! let outcome = run(&config).expect("pipeline runs");
//! for row in &outcome.report.rows {
//!     let err = row.err_energy.expect("reference was run");
//!     // Upper bound really bounds, lower bound really lower-bounds.
//!     assert!(row.eta >= err);
//!     assert!(row.xi <= err);
//! }
//! ```

pub mod basis;
pub mod constants;
pub mod dg;
pub mod estimators;
pub mod fields;
pub mod fourier;
pub mod linalg;
pub mod mesh;
pub mod report;
pub mod run;
pub mod spectral;

use std::fmt;

/// Errors produced by the library.
///
/// Variants are deliberately coarse: callers either recover by fixing their
/// configuration (`InvalidArgument`, `Config`) or they cannot recover at all
/// (`Numerical` means a factorization or eigensolve failed on data that
/// should have been well-conditioned).
#[derive(Debug)]
pub enum Error {
    /// A precondition on arguments was violated (sizes, parities, ranges).
    InvalidArgument(String),
    /// Two objects that must share a discretization do not.
    ShapeMismatch(String),
    /// A factorization or eigensolve failed, or produced non-finite values.
    Numerical(String),
    /// A requested quantity needs data that was not computed or stored.
    MissingData(String),
    /// Configuration file or preset could not be parsed or validated.
    Config(String),
    /// Underlying I/O failure (reading configs, writing reports).
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::ShapeMismatch(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::MissingData(msg) => write!(f, "missing data: {msg}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Helper for constructing `Error::InvalidArgument` from format strings.
macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::Error::InvalidArgument(format!($($arg)*))
    };
}
pub(crate) use invalid;
