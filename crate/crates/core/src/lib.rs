//! Strategy-shift timing for two-parameter threshold matrices.
//!
//! Two decision parameters accrue marked Poisson arrivals and are observed at
//! the epochs of a delayed renewal process. The crate provides
//!
//! - seeded path generation and exit-index extraction ([`process`]),
//! - transforms and truncated power-series operational calculus ([`series`],
//!   [`transform`]),
//! - closed-form evaluation of the joint exit functional, exit-index PGFs and
//!   shift-moment means ([`analytics`]),
//! - threshold strategy matrices including the BCG growth-share matrix
//!   ([`matrix`]),
//! - a brute-force Monte Carlo oracle and conformance table ([`oracle`]),
//! - the command-line workflows ([`cli`]).

pub mod analytics;
pub mod cli;
pub mod error;
pub mod matrix;
pub mod oracle;
pub mod process;
pub mod series;
pub mod transform;

pub use error::{Axis, Error, Result};
