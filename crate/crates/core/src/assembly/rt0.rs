//! Lowest-order Raviart-Thomas space.
//!
//! On triangle `T` the basis function of its local edge `k` is
//! `psi_k(x) = sigma_k |E_k| / (2 |T|) (x - P_k)`, with `P_k` the opposite
//! vertex and `sigma_k` the orientation sign stored in the mesh. Its normal
//! component on `E_k` is one and its divergence is `sigma_k |E_k| / |T|`.
//! All integrands below are at most quadratic per triangle, so the
//! edge-midpoint rule integrates them exactly.

use super::p1::{check_areas, p1_gradient};
use crate::error::Result;
use crate::fields::{P0Field, P1Field, Rt0Field};
use crate::linalg::CsrMatrix;
use crate::mesh::{Point, TriMesh};

/// `sigma_k |E_k| / (2 |T|)` for the three local edges of `t`.
pub fn basis_scales(mesh: &TriMesh, t: usize) -> [f64; 3] {
    let area = mesh.area(t);
    let edges = mesh.triangle_edges(t);
    let signs = mesh.edge_signs(t);
    [0, 1, 2].map(|k| signs[k] * mesh.edge_length(edges[k]) / (2.0 * area))
}

/// Midpoints of the three edges of `t` (the exact quadrature points).
pub fn edge_midpoints(mesh: &TriMesh, t: usize) -> [Point; 3] {
    let p = mesh.triangle_points(t);
    [0, 1, 2].map(|k| {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    })
}

/// Value of the local basis functions of `t` at `x`.
pub fn basis_values(mesh: &TriMesh, t: usize, x: Point) -> [[f64; 2]; 3] {
    let p = mesh.triangle_points(t);
    let s = basis_scales(mesh, t);
    [0, 1, 2].map(|k| [s[k] * (x[0] - p[k][0]), s[k] * (x[1] - p[k][1])])
}

/// Value of an RT0 field restricted to triangle `t` at `x`.
pub fn evaluate(mesh: &TriMesh, eta: &[f64], t: usize, x: Point) -> [f64; 2] {
    let phi = basis_values(mesh, t, x);
    let edges = mesh.triangle_edges(t);
    let mut out = [0.0; 2];
    for k in 0..3 {
        out[0] += eta[edges[k]] * phi[k][0];
        out[1] += eta[edges[k]] * phi[k][1];
    }
    out
}

/// Mass matrix: `eta^T M zeta = int eta . zeta`.
pub fn rt0_mass(mesh: &TriMesh) -> Result<CsrMatrix> {
    check_areas(mesh)?;
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let w = mesh.area(t) / 3.0;
        let edges = mesh.triangle_edges(t);
        let mut local = [[0.0; 3]; 3];
        for q in edge_midpoints(mesh, t) {
            let phi = basis_values(mesh, t, q);
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]);
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                triplets.push((edges[i], edges[j], local[i][j]));
            }
        }
    }
    let n = mesh.num_edges();
    Ok(CsrMatrix::from_triplets(n, n, &triplets, true))
}

/// Divergence matrix: `eta^T K zeta = int div eta div zeta`.
pub fn rt0_divdiv(mesh: &TriMesh) -> Result<CsrMatrix> {
    check_areas(mesh)?;
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let edges = mesh.triangle_edges(t);
        let s = basis_scales(mesh, t);
        for i in 0..3 {
            for j in 0..3 {
                // div psi = 2 s, integrated over |T|
                triplets.push((edges[i], edges[j], 4.0 * s[i] * s[j] * area));
            }
        }
    }
    let n = mesh.num_edges();
    Ok(CsrMatrix::from_triplets(n, n, &triplets, true))
}

/// `c_E = int grad v . psi_E`.
pub fn rt0_flux_load(mesh: &TriMesh, v: &P1Field) -> Result<Vec<f64>> {
    v.check(mesh)?;
    let mut c = vec![0.0; mesh.num_edges()];
    for t in 0..mesh.num_triangles() {
        let g = p1_gradient(mesh, v, t);
        let area = mesh.area(t);
        let p = mesh.triangle_points(t);
        let centroid = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        let s = basis_scales(mesh, t);
        for (k, &e) in mesh.triangle_edges(t).iter().enumerate() {
            let mean = [
                s[k] * (centroid[0] - p[k][0]),
                s[k] * (centroid[1] - p[k][1]),
            ];
            c[e] += area * (g[0] * mean[0] + g[1] * mean[1]);
        }
    }
    Ok(c)
}

/// `d_E = int mu div psi_E`.
pub fn rt0_div_load(mesh: &TriMesh, mu: &P0Field) -> Result<Vec<f64>> {
    mu.check(mesh)?;
    let mut d = vec![0.0; mesh.num_edges()];
    for t in 0..mesh.num_triangles() {
        let signs = mesh.edge_signs(t);
        for (k, &e) in mesh.triangle_edges(t).iter().enumerate() {
            d[e] += mu[t] * signs[k] * mesh.edge_length(e);
        }
    }
    Ok(d)
}

/// Elementwise constant divergence of an RT0 field.
pub fn rt0_divergence(mesh: &TriMesh, eta: &Rt0Field) -> Result<P0Field> {
    eta.check(mesh)?;
    Ok(P0Field::new(
        (0..mesh.num_triangles())
            .map(|t| {
                let signs = mesh.edge_signs(t);
                let flux: f64 = mesh
                    .triangle_edges(t)
                    .iter()
                    .zip(signs)
                    .map(|(&e, s)| s * mesh.edge_length(e) * eta[e])
                    .sum();
                flux / mesh.area(t)
            })
            .collect(),
    ))
}
