use super::p1::{check_areas, p1_gradient};
use super::quadrature::pos_neg_part_integrals;
use crate::error::Result;
use crate::fields::P1Field;
use crate::mesh::{signed_area, Point, TriMesh};
use crate::problems::ExactSolution;

/// Two-phase energy `J(v) = int |grad v|^2 / 2 + a+ v^+ + a- v^-`, with the
/// nonsmooth terms integrated exactly.
pub fn primal_energy(
    mesh: &TriMesh,
    v: &P1Field,
    alpha_plus: f64,
    alpha_minus: f64,
) -> Result<f64> {
    v.check(mesh)?;
    check_areas(mesh)?;
    let mut energy = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let g = p1_gradient(mesh, v, t);
        let (pos, neg) = pos_neg_part_integrals(v.on_triangle(mesh, t), area);
        energy += 0.5 * area * (g[0] * g[0] + g[1] * g[1]) + alpha_plus * pos + alpha_minus * neg;
    }
    Ok(energy)
}

/// Compound functionals of the energy identity against a known solution:
///
/// * `D_F = int a+ v^+ + a- v^- - lambda v`
/// * `D_G = int |grad (u - v)|^2 / 2`
///
/// Each triangle is cut along the vertical lines where the exact solution
/// changes its formula, so the quadratic integrands are integrated exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompoundTerms {
    pub d_f: f64,
    pub d_g: f64,
}

pub fn compound_terms(
    mesh: &TriMesh,
    v: &P1Field,
    exact: &ExactSolution,
    alpha_plus: f64,
    alpha_minus: f64,
) -> Result<CompoundTerms> {
    v.check(mesh)?;
    check_areas(mesh)?;
    let mut d_f = 0.0;
    let mut d_g = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let nodal = v.on_triangle(mesh, t);
        let (pos, neg) = pos_neg_part_integrals(nodal, area);
        d_f += alpha_plus * pos + alpha_minus * neg;

        let gv = p1_gradient(mesh, v, t);
        let p = mesh.triangle_points(t);
        let v_at =
            |x: Point| -> f64 { nodal[0] + gv[0] * (x[0] - p[0][0]) + gv[1] * (x[1] - p[0][1]) };
        for piece in split_at_kinks(p, &exact.kinks_x) {
            let sub_area = signed_area(&piece[0], &piece[1], &piece[2]);
            if sub_area <= 0.0 {
                continue;
            }
            let centroid = [
                (piece[0][0] + piece[1][0] + piece[2][0]) / 3.0,
                (piece[0][1] + piece[1][1] + piece[2][1]) / 3.0,
            ];
            d_f -= (exact.lambda)(centroid) * sub_area * v_at(centroid);
            for k in 0..3 {
                let a = piece[(k + 1) % 3];
                let b = piece[(k + 2) % 3];
                let q = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                let gu = (exact.grad_u)(q);
                let diff = [gu[0] - gv[0], gu[1] - gv[1]];
                d_g += 0.5 * sub_area / 3.0 * (diff[0] * diff[0] + diff[1] * diff[1]);
            }
        }
    }
    Ok(CompoundTerms { d_f, d_g })
}

/// Cuts a triangle by the vertical lines `x = k` and fan-triangulates the
/// resulting convex pieces (all counterclockwise).
fn split_at_kinks(tri: [Point; 3], kinks: &[f64]) -> Vec<[Point; 3]> {
    let mut cuts: Vec<f64> = kinks.to_vec();
    cuts.sort_by(|a, b| a.total_cmp(b));
    let mut out = Vec::new();
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend(cuts);
    bounds.push(f64::INFINITY);
    for w in bounds.windows(2) {
        let mut poly: Vec<Point> = tri.to_vec();
        if w[0].is_finite() {
            poly = clip(&poly, w[0], true);
        }
        if w[1].is_finite() {
            poly = clip(&poly, w[1], false);
        }
        for k in 1..poly.len().saturating_sub(1) {
            out.push([poly[0], poly[k], poly[k + 1]]);
        }
    }
    out
}

/// Sutherland-Hodgman against `x >= c` (`keep_right`) or `x <= c`.
fn clip(poly: &[Point], c: f64, keep_right: bool) -> Vec<Point> {
    let inside = |p: &Point| if keep_right { p[0] >= c } else { p[0] <= c };
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        match (inside(&a), inside(&b)) {
            (true, true) => out.push(b),
            (true, false) | (false, true) => {
                let s = (c - a[0]) / (b[0] - a[0]);
                let cross = [c, a[1] + s * (b[1] - a[1])];
                out.push(cross);
                if inside(&b) {
                    out.push(b);
                }
            }
            (false, false) => {}
        }
    }
    out
}
