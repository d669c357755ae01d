use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::TriMesh;

/// Gradients of the three barycentric hat functions on triangle `t`.
pub fn hat_gradients(mesh: &TriMesh, t: usize) -> [[f64; 2]; 3] {
    let p = mesh.triangle_points(t);
    let two_area = 2.0 * mesh.area(t);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        *gi = [(a[1] - b[1]) / two_area, (b[0] - a[0]) / two_area];
    }
    g
}

/// Constant gradient of a P1 function on triangle `t`.
pub fn p1_gradient(mesh: &TriMesh, values: &[f64], t: usize) -> [f64; 2] {
    let g = hat_gradients(mesh, t);
    let tri = mesh.triangles()[t];
    let mut out = [0.0; 2];
    for k in 0..3 {
        out[0] += values[tri[k]] * g[k][0];
        out[1] += values[tri[k]] * g[k][1];
    }
    out
}

pub(crate) fn check_areas(mesh: &TriMesh) -> Result<()> {
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        if !(area > 0.0) {
            return Err(Error::DegenerateTriangle { triangle: t, area });
        }
    }
    Ok(())
}

/// Stiffness matrix: `v^T K w = int grad v . grad w`.
pub fn p1_stiffness(mesh: &TriMesh) -> Result<CsrMatrix> {
    check_areas(mesh)?;
    let mut triplets = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = hat_gradients(mesh, t);
        let area = mesh.area(t);
        for i in 0..3 {
            for j in 0..3 {
                let v = area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                triplets.push((tri[i], tri[j], v));
            }
        }
    }
    let n = mesh.num_nodes();
    Ok(CsrMatrix::from_triplets(n, n, &triplets, true))
}

/// Rectangular node-by-triangle matrix: `v^T M mu = int v mu` for P1 `v`
/// and P0 `mu`. Entry `(i, T)` is `|T| / 3` when node `i` belongs to `T`.
pub fn p1_p0_mass(mesh: &TriMesh) -> Result<CsrMatrix> {
    check_areas(mesh)?;
    let mut triplets = Vec::with_capacity(3 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let third = mesh.area(t) / 3.0;
        for &i in tri {
            triplets.push((i, t, third));
        }
    }
    Ok(CsrMatrix::from_triplets(
        mesh.num_nodes(),
        mesh.num_triangles(),
        &triplets,
        false,
    ))
}
