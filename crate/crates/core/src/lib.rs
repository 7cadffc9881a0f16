//! All-at-once SQP solvers for parameter identification in the
//! Schnakenberg reaction-diffusion model.

pub mod error;
pub mod fem;
pub mod forward;
pub mod harness;
pub mod io;
pub mod krylov;
pub mod model;
pub mod sparse;
pub mod sqp;
pub mod system;
pub mod trajectory;

pub use error::{Error, Result};
