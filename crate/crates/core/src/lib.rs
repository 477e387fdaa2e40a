//! Localization criterion for non-Hermitian skin effects, applied to the
//! interacting fermionic Hatano-Nelson chain.

// `!(x > 0.0)` guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criterion;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod fockspace;
pub mod io;
pub mod models;
pub mod properties;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
pub use faer::c64;
