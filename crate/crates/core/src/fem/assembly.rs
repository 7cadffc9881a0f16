use super::mesh::MeshP1;
use super::quadrature::dunavant4;
use crate::error::{check_len, Result};
use crate::sparse::CsrMatrix;

fn area(mesh: &MeshP1, t: usize) -> f64 {
    mesh.signed_area(t).abs()
}

/// Consistent P1 mass matrix.
pub fn assemble_mass(mesh: &MeshP1) -> CsrMatrix {
    let mut m = CsrMatrix::zeros(mesh.pattern().clone());
    let vals = m.values_mut();
    for (t, nz) in mesh.elem_nz().iter().enumerate() {
        let a = area(mesh, t);
        for la in 0..3 {
            for lb in 0..3 {
                vals[nz[3 * la + lb]] += if la == lb { a / 6.0 } else { a / 12.0 };
            }
        }
    }
    m
}

/// P1 stiffness matrix (natural boundary conditions).
pub fn assemble_stiffness(mesh: &MeshP1) -> CsrMatrix {
    let mut k = CsrMatrix::zeros(mesh.pattern().clone());
    let coords = mesh.coords();
    let vals = k.values_mut();
    for (t, (tri, nz)) in mesh.triangles().iter().zip(mesh.elem_nz()).enumerate() {
        let a = area(mesh, t);
        let p = tri.map(|r| coords[r]);
        // Gradient of barycentric coordinate l is the rotated opposite edge
        // divided by twice the area.
        let grads: [[f64; 2]; 3] = std::array::from_fn(|l| {
            let e = [p[(l + 2) % 3][0] - p[(l + 1) % 3][0], p[(l + 2) % 3][1] - p[(l + 1) % 3][1]];
            [-e[1] / (2.0 * a), e[0] / (2.0 * a)]
        });
        for la in 0..3 {
            for lb in 0..3 {
                vals[nz[3 * la + lb]] += a * (grads[la][0] * grads[lb][0] + grads[la][1] * grads[lb][1]);
            }
        }
    }
    k
}

fn check_factors(mesh: &MeshP1, factors: &[&[f64]]) -> Result<()> {
    for f in factors {
        check_len(mesh.num_nodes(), f.len(), "nodal coefficient")?;
    }
    Ok(())
}

/// Values (on the mesh pattern) of `int prod_k f_k phi_r phi_s`, where each
/// `f_k` is the P1 interpolant of the given nodal values. The product is
/// evaluated exactly at the quadrature points; the rule is exact for up to
/// two factors.
pub fn product_mass_values(mesh: &MeshP1, factors: &[&[f64]]) -> Result<Vec<f64>> {
    check_factors(mesh, factors)?;
    let mut vals = vec![0.0; mesh.pattern().nnz()];
    let rule = dunavant4();
    for (t, (tri, nz)) in mesh.triangles().iter().zip(mesh.elem_nz()).enumerate() {
        let a = area(mesh, t);
        let mut local = [0.0; 9];
        for (lam, w) in &rule {
            let mut c = a * w;
            for f in factors {
                c *= lam[0] * f[tri[0]] + lam[1] * f[tri[1]] + lam[2] * f[tri[2]];
            }
            for la in 0..3 {
                let ca = c * lam[la];
                for lb in 0..3 {
                    local[3 * la + lb] += ca * lam[lb];
                }
            }
        }
        for (k, &pos) in nz.iter().enumerate() {
            vals[pos] += local[k];
        }
    }
    Ok(vals)
}

/// Pseudo-mass matrix weighted by a product of P1 fields.
pub fn assemble_product_mass(mesh: &MeshP1, factors: &[&[f64]]) -> Result<CsrMatrix> {
    CsrMatrix::new(mesh.pattern().clone(), product_mass_values(mesh, factors)?)
}

/// Pseudo-mass matrix weighted by a single P1 coefficient.
pub fn assemble_weighted_mass(mesh: &MeshP1, coeff: &[f64]) -> Result<CsrMatrix> {
    assemble_product_mass(mesh, &[coeff])
}

/// `int prod_k f_k phi_r` for each node `r`; exact for up to three factors.
pub fn assemble_product_load(mesh: &MeshP1, factors: &[&[f64]]) -> Result<Vec<f64>> {
    check_factors(mesh, factors)?;
    let mut out = vec![0.0; mesh.num_nodes()];
    let rule = dunavant4();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = area(mesh, t);
        for (lam, w) in &rule {
            let mut c = a * w;
            for f in factors {
                c *= lam[0] * f[tri[0]] + lam[1] * f[tri[1]] + lam[2] * f[tri[2]];
            }
            for la in 0..3 {
                out[tri[la]] += c * lam[la];
            }
        }
    }
    Ok(out)
}

/// Consistent-mass load `M f` of a nodal field.
pub fn assemble_load(mesh: &MeshP1, f: &[f64]) -> Result<Vec<f64>> {
    assemble_product_load(mesh, &[f])
}

/// `int g phi_r` for a function `g` given pointwise, by the degree-4 rule.
pub fn assemble_function_load<F>(mesh: &MeshP1, g: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    let mut out = vec![0.0; mesh.num_nodes()];
    let rule = dunavant4();
    let xy = mesh.coords();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let a = area(mesh, t);
        for (lam, w) in &rule {
            let x = lam[0] * xy[tri[0]][0] + lam[1] * xy[tri[1]][0] + lam[2] * xy[tri[2]][0];
            let y = lam[0] * xy[tri[0]][1] + lam[1] * xy[tri[1]][1] + lam[2] * xy[tri[2]][1];
            let c = a * w * g(x, y);
            for la in 0..3 {
                out[tri[la]] += c * lam[la];
            }
        }
    }
    out
}
