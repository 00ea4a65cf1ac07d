//! Computational ergodic theory on subshifts of finite type.

pub mod approx;
pub mod curve;
pub mod error;
pub mod ldp;
pub mod lorenz;
pub mod numerics;
pub mod suspension;
pub mod symbolic;
pub mod thermo;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
