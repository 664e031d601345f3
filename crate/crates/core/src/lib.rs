//! Forward models and inverse fits for matter-wave diffraction from
//! nano-transmission gratings.
//!
//! The crate is split along the data flow of an experiment:
//!
//! - [`model`]: closed-form intensities of a grating of `N` slits, the order
//!   angles of a de Broglie wave, the slit envelope, and the extended
//!   order-intensity law with effective slit width `s_eff`, contrast length
//!   `delta` and damping length `sigma`. A brute-force phasor/quadrature
//!   reference lives in [`model::oracle`].
//! - [`synthesis`]: seeded synthetic detector scans of cluster mixtures.
//! - [`fit`]: order-intensity extraction, damped least-squares fits, the
//!   `s_eff` versus `1/sqrt(v)` regression, the dimer bond length and cluster
//!   mass assignment.
//!
//! Batch work runs on rayon when the `parallel` feature is enabled (the
//! default); [`Execution`] selects the path explicitly at call sites that
//! accept it.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
mod error;
mod exec;
pub mod fit;
pub mod model;
pub mod synthesis;

pub use error::{Error, Result};
pub use exec::Execution;
