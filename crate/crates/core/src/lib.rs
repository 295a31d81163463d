//! Measurement and statistical testing of phase transitions in sparse
//! recovery by ℓ1 minimization and linear programming.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: dense LU and least squares.
//! * [`lp`]: two-phase revised simplex, plus the nonnegative (LP) and
//!   basis-pursuit (P1) reductions to standard form.
//! * [`rng`] and [`ensembles`]: reproducible matrix ensembles and sparse
//!   coefficient vectors.
//! * [`experiment`]: Monte Carlo recovery trials and the `E N n k M S`
//!   record file.
//! * [`stats`]: special functions, binomial GLMs, OLS and F-tests.
//! * [`phase`]: LD50, transition width and dose-response fits per slice.
//! * [`inference`]: two-sample Z-scores and the universality models.
//! * [`oracle`]: exhaustive small-instance face survival and spark.
//! * [`cli`]: the `sparsephase` command line.

pub mod cli;
pub mod ensembles;
mod error;
pub mod experiment;
pub mod inference;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod phase;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, FitResult};
