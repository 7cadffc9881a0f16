//! All-at-once optimality systems and their preconditioners.
//!
//! Unknowns are ordered as `[-p, -q, u, v]`, each family stored as `K`
//! consecutive time blocks of `N_x` nodal values. With this sign convention
//! the system is symmetric, `[[A, B^T], [B, -C]]`, with `A` block-diagonal
//! positive definite.

mod bwe;
mod precond;
mod sv;

pub use bwe::BweSystem;
pub use precond::{MatchedSchurPreconditioner, PrecondConfig};
pub use sv::SvSystem;

use crate::error::Result;
use crate::fem::FemSpace;
use crate::krylov::LinearOperator;
use crate::model::SchnakenbergParams;
use crate::trajectory::{ProblemData, Scheme, Trajectory};

/// Block layout of an all-at-once system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_x: usize,
    /// Time blocks per variable family.
    pub blocks: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        4 * self.blocks * self.n_x
    }

    /// Range of time block `k` of family `fam` (0: -p, 1: -q, 2: u, 3: v).
    pub fn range(&self, fam: usize, k: usize) -> std::ops::Range<usize> {
        let start = (fam * self.blocks + k) * self.n_x;
        start..start + self.n_x
    }
}

/// Common interface of the time-discretized optimality systems.
pub trait AllAtOnceSystem: LinearOperator {
    fn layout(&self) -> Layout;

    fn rhs(&self) -> &[f64];

    /// Packs the interior unknowns of a trajectory into a system vector.
    fn pack(&self, traj: &Trajectory) -> Result<Vec<f64>>;

    /// Builds the full trajectory from a solution vector: signs are
    /// restored, boundary-time values recovered and controls computed.
    fn unpack(&self, w: &[f64]) -> Result<Trajectory>;

    fn preconditioner(&self, cfg: &PrecondConfig) -> Result<MatchedSchurPreconditioner>;
}

/// Assembles the all-at-once system of `scheme` linearized at `lin`.
pub fn assemble<'a>(
    scheme: Scheme,
    space: &'a FemSpace,
    params: &SchnakenbergParams,
    lin: &Trajectory,
    data: &ProblemData,
) -> Result<Box<dyn AllAtOnceSystem + 'a>> {
    Ok(match scheme {
        Scheme::StormerVerlet => Box::new(SvSystem::assemble(space, params, lin, data)?),
        Scheme::BackwardEuler => Box::new(BweSystem::assemble(space, params, lin, data)?),
    })
}

pub(crate) fn negated(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

pub(crate) fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}
