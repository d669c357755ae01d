//! Structured triangular meshes on rectangles, uniform red refinement and
//! boundary tagging.
//!
//! Edges carry a fixed global normal: the edge vector from the smaller to the
//! larger node index rotated by 90 degrees counterclockwise. Each triangle
//! stores, per local edge, the sign relating that global normal to its own
//! outward normal. Local edge `k` is the edge opposite local vertex `k`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned rectangle `(x0, x1) x (y0, y1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

/// How each grid cell of the initial mesh is split into triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitPattern {
    /// Two triangles per cell, cut from lower-left to upper-right.
    Diagonal,
    /// Four triangles per cell meeting at an added center node.
    CrissCross,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeTag {
    Interior,
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeTag {
    Interior,
    DirichletBoundary,
    NeumannBoundary,
}

/// Conforming triangulation with full node/edge/triangle incidence.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_signs: Vec<[f64; 3]>,
    edge_triangles: Vec<Vec<usize>>,
    node_tags: Vec<NodeTag>,
    edge_tags: Vec<EdgeTag>,
}

impl TriMesh {
    /// Builds a mesh from raw vertices and counterclockwise triangles.
    ///
    /// Boundary entities are tagged Dirichlet until [`TriMesh::classify_boundary`]
    /// says otherwise.
    pub fn from_triangles(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidArgument("mesh without triangles".into()));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let area = signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { triangle: t, area });
            }
        }

        let mut edge_index: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        for tri in &triangles {
            for k in 0..3 {
                edge_index.entry(local_edge(tri, k)).or_insert(0);
            }
        }
        let edges: Vec<[usize; 2]> = edge_index.keys().copied().collect();
        for (i, slot) in edge_index.values_mut().enumerate() {
            *slot = i;
        }

        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut edge_signs = Vec::with_capacity(triangles.len());
        let mut edge_triangles = vec![Vec::new(); edges.len()];
        for (t, tri) in triangles.iter().enumerate() {
            let mut ids = [0; 3];
            let mut signs = [0.0; 3];
            for k in 0..3 {
                let e = edge_index[&local_edge(tri, k)];
                ids[k] = e;
                edge_triangles[e].push(t);
                let [a, b] = edges[e];
                let normal = global_normal(&vertices[a], &vertices[b]);
                let opp = vertices[tri[k]];
                let mid = midpoint(&vertices[a], &vertices[b]);
                let outward = (mid[0] - opp[0]) * normal[0] + (mid[1] - opp[1]) * normal[1];
                signs[k] = if outward > 0.0 { 1.0 } else { -1.0 };
            }
            triangle_edges.push(ids);
            edge_signs.push(signs);
        }
        if let Some(e) = edge_triangles.iter().position(|ts| ts.len() > 2) {
            return Err(Error::InvalidArgument(format!(
                "edge {e} is shared by more than two triangles"
            )));
        }

        let mut node_tags = vec![NodeTag::Interior; vertices.len()];
        let mut edge_tags = vec![EdgeTag::Interior; edges.len()];
        for (e, ts) in edge_triangles.iter().enumerate() {
            if ts.len() == 1 {
                edge_tags[e] = EdgeTag::DirichletBoundary;
                for &v in &edges[e] {
                    node_tags[v] = NodeTag::Dirichlet;
                }
            }
        }

        Ok(TriMesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            edge_signs,
            edge_triangles,
            node_tags,
            edge_tags,
        })
    }

    /// Uniform grid of `nx x ny` cells over `rect`, nodes numbered row by row
    /// (x fastest), followed by cell centers for [`SplitPattern::CrissCross`].
    pub fn structured(rect: Rect, nx: usize, ny: usize, pattern: SplitPattern) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "cell counts must be positive (nx = {nx}, ny = {ny})"
            )));
        }
        if !(rect.width() > 0.0 && rect.height() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "degenerate rectangle {rect:?}"
            )));
        }
        let dx = rect.width() / nx as f64;
        let dy = rect.height() / ny as f64;
        let grid = |i: usize, j: usize| j * (nx + 1) + i;

        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([rect.x0 + i as f64 * dx, rect.y0 + j as f64 * dy]);
            }
        }
        let mut triangles = Vec::new();
        match pattern {
            SplitPattern::Diagonal => {
                for j in 0..ny {
                    for i in 0..nx {
                        let (p00, p10) = (grid(i, j), grid(i + 1, j));
                        let (p01, p11) = (grid(i, j + 1), grid(i + 1, j + 1));
                        triangles.push([p00, p10, p11]);
                        triangles.push([p00, p11, p01]);
                    }
                }
            }
            SplitPattern::CrissCross => {
                for j in 0..ny {
                    for i in 0..nx {
                        let c = vertices.len();
                        vertices.push([
                            rect.x0 + (i as f64 + 0.5) * dx,
                            rect.y0 + (j as f64 + 0.5) * dy,
                        ]);
                        let (p00, p10) = (grid(i, j), grid(i + 1, j));
                        let (p01, p11) = (grid(i, j + 1), grid(i + 1, j + 1));
                        triangles.push([p00, p10, c]);
                        triangles.push([p10, p11, c]);
                        triangles.push([p11, p01, c]);
                        triangles.push([p01, p00, c]);
                    }
                }
            }
        }
        TriMesh::from_triangles(vertices, triangles)
    }

    /// Splits every triangle into four congruent children through its edge
    /// midpoints. Old nodes keep their indices; the midpoint of edge `e` gets
    /// index `num_nodes() + e`. Boundary tags are inherited from parent edges.
    pub fn refine_red(&self) -> Result<Self> {
        let n = self.vertices.len();
        let mut vertices = self.vertices.clone();
        for &[a, b] in &self.edges {
            vertices.push(midpoint(&self.vertices[a], &self.vertices[b]));
        }
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let te = self.triangle_edges[t];
            // local edge k is opposite vertex k
            let m_bc = n + te[0];
            let m_ca = n + te[1];
            let m_ab = n + te[2];
            triangles.push([a, m_ab, m_ca]);
            triangles.push([m_ab, b, m_bc]);
            triangles.push([m_ca, m_bc, c]);
            triangles.push([m_ab, m_bc, m_ca]);
        }
        let mut fine = TriMesh::from_triangles(vertices, triangles)?;

        let mut node_tags = self.node_tags.clone();
        for (e, tag) in self.edge_tags.iter().enumerate() {
            node_tags.push(match tag {
                EdgeTag::Interior => NodeTag::Interior,
                EdgeTag::DirichletBoundary => NodeTag::Dirichlet,
                EdgeTag::NeumannBoundary => NodeTag::Neumann,
            });
            debug_assert_eq!(node_tags.len(), n + e + 1);
        }
        let edge_tags = fine
            .edges
            .iter()
            .map(|&[p, q]| {
                // a child of coarse edge e joins its midpoint (p or q >= n) to one of its ends
                let (mid, end) = if q >= n { (q, p) } else { (p, q) };
                if mid < n || end >= n {
                    return EdgeTag::Interior;
                }
                let parent = mid - n;
                if self.edges[parent].contains(&end) {
                    self.edge_tags[parent]
                } else {
                    EdgeTag::Interior
                }
            })
            .collect();
        fine.node_tags = node_tags;
        fine.edge_tags = edge_tags;
        Ok(fine)
    }

    /// Tags boundary edges by evaluating the predicates at edge midpoints.
    ///
    /// Every boundary edge must match exactly one predicate. Nodes touching a
    /// Dirichlet edge are Dirichlet; remaining nodes touching a Neumann edge
    /// are Neumann.
    pub fn classify_boundary<D, N>(mut self, dirichlet: D, neumann: N) -> Result<Self>
    where
        D: Fn(Point) -> bool,
        N: Fn(Point) -> bool,
    {
        let mut edge_tags = vec![EdgeTag::Interior; self.edges.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.edge_triangles[e].len() != 1 {
                continue;
            }
            let mid = midpoint(&self.vertices[a], &self.vertices[b]);
            edge_tags[e] = match (dirichlet(mid), neumann(mid)) {
                (true, false) => EdgeTag::DirichletBoundary,
                (false, true) => EdgeTag::NeumannBoundary,
                (d, _) => {
                    return Err(Error::Configuration(format!(
                        "boundary edge {e} at ({}, {}) matched by {} predicates",
                        mid[0],
                        mid[1],
                        if d { "both" } else { "no" }
                    )))
                }
            };
        }
        let mut node_tags = vec![NodeTag::Interior; self.vertices.len()];
        for (e, tag) in edge_tags.iter().enumerate() {
            if *tag == EdgeTag::NeumannBoundary {
                for &v in &self.edges[e] {
                    node_tags[v] = NodeTag::Neumann;
                }
            }
        }
        for (e, tag) in edge_tags.iter().enumerate() {
            if *tag == EdgeTag::DirichletBoundary {
                for &v in &self.edges[e] {
                    node_tags[v] = NodeTag::Dirichlet;
                }
            }
        }
        self.node_tags = node_tags;
        self.edge_tags = edge_tags;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Edge indices of triangle `t`, local edge `k` opposite local vertex `k`.
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    /// Orientation signs matching [`TriMesh::triangle_edges`]; `+1` when the
    /// global edge normal points out of the triangle.
    pub fn edge_signs(&self, t: usize) -> [f64; 3] {
        self.edge_signs[t]
    }

    pub fn edge_triangles(&self, e: usize) -> &[usize] {
        &self.edge_triangles[e]
    }

    pub fn node_tags(&self) -> &[NodeTag] {
        &self.node_tags
    }

    pub fn edge_tags(&self) -> &[EdgeTag] {
        &self.edge_tags
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e].len() == 1
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(&a, &b, &c)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        distance(&self.vertices[a], &self.vertices[b])
    }

    /// Unit global normal of edge `e`.
    pub fn edge_normal(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        let n = global_normal(&self.vertices[a], &self.vertices[b]);
        let len = n[0].hypot(n[1]);
        [n[0] / len, n[1] / len]
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        midpoint(&self.vertices[a], &self.vertices[b])
    }

    /// Largest edge length (the mesh size `h`).
    pub fn mesh_size(&self) -> f64 {
        (0..self.edges.len())
            .map(|e| self.edge_length(e))
            .fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Nodes carrying prescribed values, in increasing index order.
    pub fn dirichlet_nodes(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.node_tags[i] == NodeTag::Dirichlet)
            .collect()
    }

    /// Unknown nodes (interior and Neumann), in increasing index order.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.vertices.len())
            .filter(|&i| self.node_tags[i] != NodeTag::Dirichlet)
            .collect()
    }
}

fn local_edge(tri: &[usize; 3], k: usize) -> [usize; 2] {
    let a = tri[(k + 1) % 3];
    let b = tri[(k + 2) % 3];
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn global_normal(a: &Point, b: &Point) -> Point {
    [-(b[1] - a[1]), b[0] - a[0]]
}

pub(crate) fn signed_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn midpoint(a: &Point, b: &Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    (b[0] - a[0]).hypot(b[1] - a[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0)
    }

    fn euler(m: &TriMesh) -> i64 {
        m.num_nodes() as i64 - m.num_edges() as i64 + m.num_triangles() as i64
    }

    #[test]
    fn smallest_diagonal_split() {
        let m = TriMesh::structured(unit(), 1, 1, SplitPattern::Diagonal).unwrap();
        assert_eq!((m.num_nodes(), m.num_triangles(), m.num_edges()), (4, 2, 5));
        assert_eq!(euler(&m), 1);
    }

    #[test]
    fn benchmark_initial_meshes() {
        let m1 = TriMesh::structured(Rect::new(-1.0, 1.0, 0.0, 1.0), 4, 2, SplitPattern::Diagonal)
            .unwrap();
        assert_eq!(
            (m1.num_nodes(), m1.num_triangles(), m1.num_edges()),
            (15, 16, 30)
        );
        let m2 = TriMesh::structured(
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            2,
            2,
            SplitPattern::CrissCross,
        )
        .unwrap();
        assert_eq!(
            (m2.num_nodes(), m2.num_triangles(), m2.num_edges()),
            (13, 16, 28)
        );
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(
            TriMesh::structured(unit(), 0, 3, SplitPattern::Diagonal),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_triangle_red_split() {
        let m = TriMesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])
            .unwrap();
        let f = m.refine_red().unwrap();
        assert_eq!((f.num_nodes(), f.num_triangles(), f.num_edges()), (6, 4, 9));
        for t in 0..4 {
            assert!((f.area(t) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn orientation_signs_are_opposite_on_interior_edges() {
        let m = TriMesh::structured(unit(), 3, 2, SplitPattern::CrissCross)
            .unwrap()
            .refine_red()
            .unwrap();
        for e in 0..m.num_edges() {
            let signs: Vec<f64> = m
                .edge_triangles(e)
                .iter()
                .map(|&t| {
                    let k = m.triangle_edges(t).iter().position(|&x| x == e).unwrap();
                    m.edge_signs(t)[k]
                })
                .collect();
            match signs.len() {
                1 => {}
                2 => assert_eq!(signs[0], -signs[1]),
                n => panic!("edge {e} has {n} triangles"),
            }
        }
    }

    #[test]
    fn refinement_counts_and_nestedness() {
        let mut m =
            TriMesh::structured(Rect::new(-1.0, 1.0, 0.0, 1.0), 4, 2, SplitPattern::Diagonal)
                .unwrap();
        for _ in 0..3 {
            let f = m.refine_red().unwrap();
            assert_eq!(f.num_nodes(), m.num_nodes() + m.num_edges());
            assert_eq!(f.num_triangles(), 4 * m.num_triangles());
            assert_eq!(euler(&f), 1);
            assert_eq!(&f.vertices()[..m.num_nodes()], m.vertices());
            assert!((f.total_area() - 2.0).abs() < 1e-12 * 2.0);
            m = f;
        }
    }

    #[test]
    fn example_one_boundary_tags() {
        let m = TriMesh::structured(Rect::new(-1.0, 1.0, 0.0, 1.0), 4, 2, SplitPattern::Diagonal)
            .unwrap()
            .classify_boundary(
                |p| (p[0].abs() - 1.0).abs() < 1e-12,
                |p| p[1].abs() < 1e-12 || (p[1] - 1.0).abs() < 1e-12,
            )
            .unwrap();
        assert_eq!(m.dirichlet_nodes().len(), 6);
        assert_eq!(m.free_nodes().len(), 9);
        let neumann = m
            .node_tags()
            .iter()
            .filter(|t| **t == NodeTag::Neumann)
            .count();
        assert_eq!(neumann, 6);

        // tags survive refinement
        let f = m.refine_red().unwrap();
        assert_eq!(f.dirichlet_nodes().len(), 10);
        let neumann_edges = f
            .edge_tags()
            .iter()
            .filter(|t| **t == EdgeTag::NeumannBoundary)
            .count();
        assert_eq!(neumann_edges, 16);
    }

    #[test]
    fn example_two_boundary_tags() {
        let m = TriMesh::structured(
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            2,
            2,
            SplitPattern::CrissCross,
        )
        .unwrap()
        .classify_boundary(|_| true, |_| false)
        .unwrap();
        assert_eq!(m.dirichlet_nodes().len(), 8);
        assert_eq!(m.free_nodes().len(), 5);
        assert!(m.edge_tags().iter().all(|t| *t != EdgeTag::NeumannBoundary));
    }

    #[test]
    fn unmatched_boundary_edge_is_an_error() {
        let m = TriMesh::structured(unit(), 2, 2, SplitPattern::Diagonal).unwrap();
        let r = m.classify_boundary(|p| p[0] < 1e-12, |p| p[1] < 1e-12);
        assert!(matches!(r, Err(Error::Configuration(_))));
    }
}
