//! Reconstruction of a one-dimensional dielectric profile from time-domain
//! backscatter measured at a single point.
//!
//! The medium is described by a coefficient `c(x) >= 1` entering the wave
//! equation `c(x) u_tt = u_xx`. A point impulse is fired at the origin, the
//! response `g0(t) = u(eps, t)` is recorded just in front of the region of
//! interest, and the task is to recover `c` on `[eps, xmax]` from `g0` alone.
//!
//! The solver works in travel-time coordinates. With
//! `tau(x) = int_0^x sqrt(c)` the shifted field `q(x, t) = u(x, t + tau(x))`
//! satisfies a quasilinear PDE whose trace at `t = 0` encodes the unknown
//! coefficient through `c(x) = (2 q(x, 0))^{-4}`. Each outer iteration
//! freezes the nonlinearity at the previous iterate and minimizes a
//! least-squares functional over the space-time rectangle, weighted by the
//! exponential `exp(-2 lambda (x + alpha t))` that privileges the region
//! near the measurement point. The weight makes the iteration contract
//! toward the true profile regardless of the initial guess, so no starting
//! model close to the target is needed.
//!
//! Modules:
//!
//! * [`model`]: grids, coefficient profiles, travel time, the mollified
//!   impulse, and the exponential weight.
//! * [`forward`]: implicit finite-difference solver for the wave equation
//!   with absorbing ends, data extraction, near-origin correction, and
//!   multiplicative measurement noise.
//! * [`preprocess`]: stabilized differentiation of noisy traces, device
//!   calibration, and envelope extraction for measured (non-synthetic) data.
//! * [`carleman`]: assembly of the weighted least-squares functionals, the
//!   clamp that keeps reconstructions in `[1, cmax]`, and the outer
//!   iteration driver.
//! * [`optim`]: minimizers for the assembled quadratic functionals (banded
//!   normal equations, gradient descent, projected gradient descent).
//! * [`cli`]: configuration files and the `simulate` / `invert` /
//!   `experiment` / `reproduce` subcommands.
//!
//! # Example
//!
//! Reconstruct a step inclusion from synthetic noisy data:
//!
//! ```no_run
//! use waveinv::cli::{run_test_case, RunConfig};
//!
//! let cfg = RunConfig::default();
//! let outcome = run_test_case(3, &cfg).unwrap();
//! let c = outcome.trace.final_profile();
//! let peak = c.values.iter().cloned().fold(f64::MIN, f64::max);
//! assert!(peak > 1.0);
//! ```

pub mod carleman;
pub mod cli;
pub mod forward;
pub mod model;
pub mod optim;
pub mod preprocess;

use std::fmt;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug)]
pub enum Error {
    /// A caller-supplied value violates a documented precondition.
    InvalidInput(String),
    /// A numerical routine failed to produce a usable result
    /// (loss of positive definiteness, divergence, empty data, ...).
    Numerical(String),
    /// An I/O failure while reading or writing data files.
    Io(std::io::Error),
    /// A malformed row in a CSV input, with its 1-based line number.
    Parse { line: usize, msg: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Parse { line, msg } => write!(f, "parse error at line {line}: {msg}"),
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

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
