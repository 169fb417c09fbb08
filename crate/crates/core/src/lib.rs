//! Exponential asymptotics of the discrete Airy equation
//! `(y(x+σε) − 2y(x) + y(x−σε))/σ² = x·y(x)`, posed on the lattice
//! `x_m = x_0 + mσε` as `(y_{m+1} − 2y_m + y_{m−1})/σ² = x_m·y_m`.

pub mod core;
pub mod descent;
pub mod error;
pub mod lateorder;
pub mod lattice;
pub mod saddle;
pub mod stokes;
pub mod transseries;

pub use crate::core::{Branch, BranchState, Params, SaddleId, C64};
pub use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
