//! P1 finite elements on the unit square.

mod assembly;
mod mesh;
pub mod quadrature;
mod transfer;

pub use assembly::{
    assemble_function_load, assemble_load, assemble_mass, assemble_product_load, assemble_product_mass, assemble_stiffness,
    assemble_weighted_mass, product_mass_values,
};
pub use mesh::MeshP1;
pub use transfer::{interpolate_nodal, prolong, restrict_inject};

use crate::error::{Error, Result};
use crate::krylov::BandedCholesky;
use crate::sparse::CsrMatrix;

/// Nodal coefficients of a P1 function; length equals the mesh node count.
pub type NodalField = Vec<f64>;

/// A mesh together with its mass and stiffness matrices.
#[derive(Debug, Clone)]
pub struct FemSpace {
    pub mesh: MeshP1,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
}

impl FemSpace {
    pub fn new(n: usize) -> Result<Self> {
        let mesh = MeshP1::new(n)?;
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        Ok(Self {
            mesh,
            mass,
            stiffness,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.mesh.num_nodes()
    }

    /// `M f`.
    pub fn load(&self, f: &[f64]) -> Vec<f64> {
        self.mass.mul_vec(f)
    }

    pub fn product_mass_values(&self, factors: &[&[f64]]) -> Result<Vec<f64>> {
        product_mass_values(&self.mesh, factors)
    }

    pub fn product_load(&self, factors: &[&[f64]]) -> Result<Vec<f64>> {
        assemble_product_load(&self.mesh, factors)
    }

    /// L2 projection of a pointwise-defined function: solves `M x = int g phi`.
    pub fn project<F>(&self, g: F) -> Result<NodalField>
    where
        F: Fn(f64, f64) -> f64,
    {
        let mut x = assemble_function_load(&self.mesh, g);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain("non-finite load in L2 projection".into()));
        }
        BandedCholesky::from_csr(&self.mass)?.solve_in_place(&mut x);
        Ok(x)
    }

    /// `f^T M g`.
    pub fn mass_inner(&self, f: &[f64], g: &[f64]) -> f64 {
        let mg = self.mass.mul_vec(g);
        f.iter().zip(&mg).map(|(a, b)| a * b).sum()
    }
}
