//! Coefficient vectors of the three finite-element spaces.

use std::ops::{Deref, DerefMut};

use crate::error::{check_len, Result};
use crate::mesh::TriMesh;

macro_rules! field {
    ($(#[$doc:meta])* $name:ident, $count:ident, $what:literal) => {
        $(#[$doc])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            pub values: Vec<f64>,
        }

        impl $name {
            pub fn new(values: Vec<f64>) -> Self {
                $name { values }
            }

            pub fn zeros(mesh: &TriMesh) -> Self {
                $name { values: vec![0.0; mesh.$count()] }
            }

            /// Checks that the length matches the mesh.
            pub fn check(&self, mesh: &TriMesh) -> Result<()> {
                check_len(mesh.$count(), self.values.len(), $what)
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.values
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(values: Vec<f64>) -> Self {
                $name { values }
            }
        }
    };
}

field!(
    /// Nodal values of a continuous piecewise linear function.
    P1Field,
    num_nodes,
    "P1 field (one value per node)"
);
field!(
    /// One constant per triangle.
    P0Field,
    num_triangles,
    "P0 field (one value per triangle)"
);
field!(
    /// Normal flux per edge with respect to the global edge normal.
    Rt0Field,
    num_edges,
    "RT0 field (one value per edge)"
);

impl P1Field {
    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &TriMesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        P1Field::new(mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    /// Nodal values on triangle `t`.
    pub fn on_triangle(&self, mesh: &TriMesh, t: usize) -> [f64; 3] {
        let [a, b, c] = mesh.triangles()[t];
        [self.values[a], self.values[b], self.values[c]]
    }

    /// Mean value over each triangle.
    pub fn triangle_means(&self, mesh: &TriMesh) -> P0Field {
        P0Field::new(
            (0..mesh.num_triangles())
                .map(|t| {
                    let [a, b, c] = self.on_triangle(mesh, t);
                    (a + b + c) / 3.0
                })
                .collect(),
        )
    }
}
