use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::CsrPattern;

/// Uniform right-angle triangulation of the unit square.
///
/// Nodes are numbered lexicographically with `x1` running fastest: node
/// `(i, j)` at `(i h, j h)` has index `j (n + 1) + i`. Every `h x h` cell is
/// split along its bottom-left to top-right diagonal into the triangles
/// `[v00, v10, v11]` and `[v00, v11, v01]`, both counter-clockwise.
#[derive(Debug, Clone)]
pub struct MeshP1 {
    n: usize,
    h: f64,
    coords: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary_nodes: Vec<usize>,
    pattern: Arc<CsrPattern>,
    // For each triangle, the positions of its 3x3 local entries in the
    // value array of the shared pattern (row-major over local indices).
    elem_nz: Vec<[usize; 9]>,
}

impl MeshP1 {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh needs at least one cell per side".into()));
        }
        let np = n + 1;
        let h = 1.0 / n as f64;
        let mut coords = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                coords.push([i as f64 * h, j as f64 * h]);
            }
        }
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let v00 = j * np + i;
                let v10 = v00 + 1;
                let v01 = v00 + np;
                let v11 = v01 + 1;
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let boundary_nodes = (0..np * np)
            .filter(|&r| {
                let (i, j) = (r % np, r / np);
                i == 0 || j == 0 || i == n || j == n
            })
            .collect();

        let mut rows = vec![Vec::with_capacity(7); np * np];
        for t in &triangles {
            for &a in t {
                rows[a].extend_from_slice(t);
            }
        }
        let pattern = Arc::new(CsrPattern::from_rows(np * np, rows));
        let elem_nz = triangles
            .iter()
            .map(|t| {
                let mut nz = [0; 9];
                for a in 0..3 {
                    for b in 0..3 {
                        nz[3 * a + b] = pattern.find(t[a], t[b]).expect("element entry in pattern");
                    }
                }
                nz
            })
            .collect();

        Ok(Self {
            n,
            h,
            coords,
            triangles,
            boundary_nodes,
            pattern,
            elem_nz,
        })
    }

    /// Cells per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Node index of grid point `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> usize {
        j * (self.n + 1) + i
    }

    /// Sparsity pattern shared by every matrix assembled on this mesh.
    pub fn pattern(&self) -> &Arc<CsrPattern> {
        &self.pattern
    }

    pub(crate) fn elem_nz(&self) -> &[[usize; 9]] {
        &self.elem_nz
    }

    /// Signed area of triangle `t`.
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.coords[a], self.coords[b], self.coords[c]);
        0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]))
    }
}
