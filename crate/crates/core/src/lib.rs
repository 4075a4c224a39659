//! Continuous-variable entanglement of counterpropagating photon pairs
//! generated by a pulsed pump in a lossy coupled-resonator optical waveguide.
//!
//! Pipeline: tight-binding [`dispersion`] → Gaussian-pump [`biphoton`]
//! amplitude on a Brillouin-zone grid → [`schmidt`] decomposition (via the
//! in-house [`svd`]) → lossy cavity-space [`evolution`] of photon numbers
//! and the Duan correlation variance. [`oracle`] holds independent
//! cross-checks, [`config`] and [`cli`] the batch front end.

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biphoton;
pub mod cli;
pub mod config;
pub mod dispersion;
pub mod error;
pub mod evolution;
pub mod oracle;
pub mod schmidt;
pub mod svd;

pub use error::{Error, Result};
