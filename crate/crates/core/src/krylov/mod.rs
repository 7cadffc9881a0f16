//! Iterative and direct linear algebra used by the all-at-once solvers.

mod amg;
mod chebyshev;
mod direct;
mod minres;
mod operator;
pub mod vecops;

pub use amg::{MgConfig, MgHierarchy, Smoother};
pub use chebyshev::{chebyshev_error_bound, ChebyshevMass};
pub use direct::{BandedCholesky, BandedLu, DenseCholesky};
pub use minres::{minres, minres_with_norm, MinresOutcome, MinresStatus, ResidualNorm};
pub use operator::{FnOperator, IdentityOperator, LinearOperator};
