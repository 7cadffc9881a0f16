use super::mesh::MeshP1;
use crate::error::{check_len, Error, Result};

/// Samples `g` at the mesh nodes.
pub fn interpolate_nodal<F>(mesh: &MeshP1, g: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64,
{
    mesh.coords()
        .iter()
        .map(|&[x, y]| {
            let v = g(x, y);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NumericDomain(format!("non-finite value {v} at ({x}, {y})")))
            }
        })
        .collect()
}

fn refinement_ratio(coarse: &MeshP1, fine: &MeshP1) -> Result<usize> {
    if fine.n() % coarse.n() != 0 {
        return Err(Error::InvalidArgument(format!(
            "meshes are not nested: {} cells per side does not refine {}",
            fine.n(),
            coarse.n()
        )));
    }
    Ok(fine.n() / coarse.n())
}

/// Evaluates the P1 interpolant of a coarse field at the fine-mesh nodes.
pub fn prolong(coarse: &MeshP1, fine: &MeshP1, field: &[f64]) -> Result<Vec<f64>> {
    check_len(coarse.num_nodes(), field.len(), "coarse field")?;
    let r = refinement_ratio(coarse, fine)?;
    let nc = coarse.n();
    let rf = r as f64;
    let mut out = Vec::with_capacity(fine.num_nodes());
    for jf in 0..=fine.n() {
        for if_ in 0..=fine.n() {
            // Coincident nodes copy the coarse value exactly.
            if if_ % r == 0 && jf % r == 0 {
                out.push(field[coarse.node(if_ / r, jf / r)]);
                continue;
            }
            let (mut ic, mut si) = (if_ / r, if_ % r);
            let (mut jc, mut sj) = (jf / r, jf % r);
            if ic == nc {
                ic = nc - 1;
                si = r;
            }
            if jc == nc {
                jc = nc - 1;
                sj = r;
            }
            let xi = si as f64 / rf;
            let eta = sj as f64 / rf;
            let f00 = field[coarse.node(ic, jc)];
            let f10 = field[coarse.node(ic + 1, jc)];
            let f01 = field[coarse.node(ic, jc + 1)];
            let f11 = field[coarse.node(ic + 1, jc + 1)];
            let v = if si >= sj {
                f00 + xi * (f10 - f00) + eta * (f11 - f10)
            } else {
                f00 + eta * (f01 - f00) + xi * (f11 - f01)
            };
            out.push(v);
        }
    }
    Ok(out)
}

/// Injection of a fine field onto the coincident coarse nodes.
pub fn restrict_inject(fine: &MeshP1, coarse: &MeshP1, field: &[f64]) -> Result<Vec<f64>> {
    check_len(fine.num_nodes(), field.len(), "fine field")?;
    let r = refinement_ratio(coarse, fine)?;
    let mut out = Vec::with_capacity(coarse.num_nodes());
    for j in 0..=coarse.n() {
        for i in 0..=coarse.n() {
            out.push(field[fine.node(i * r, j * r)]);
        }
    }
    Ok(out)
}
