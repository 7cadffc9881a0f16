//! Convergence and identification studies built on the SQP solver.

mod convergence;
mod datadriven;

pub use convergence::{
    convergence_study, level_mesh_size, level_steps, manufactured_problem, weighted_error, ConvergenceConfig,
    ConvergenceRow, LevelErrors,
};
pub use datadriven::{control_means, cost_terms, identify, CostTerms, Identification, IdentifyConfig};
