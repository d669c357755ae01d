//! Benchmark problem definitions.

use std::fmt;
use std::sync::Arc;

use crate::dual_solver::{solve_two_phase, DualSolveOptions};
use crate::error::{Error, Result};
use crate::fields::P1Field;
use crate::mesh::{Point, Rect, SplitPattern, TriMesh};

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;
pub type Region = Arc<dyn Fn(Point) -> bool + Send + Sync>;

/// Closed-form solution, multiplier and minimal energy.
///
/// `kinks_x` lists the vertical lines across which the formulas change; the
/// exact quadratures cut triangles there.
#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarFn,
    pub grad_u: VectorFn,
    pub lambda: ScalarFn,
    pub energy: f64,
    pub kinks_x: Vec<f64>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("energy", &self.energy)
            .field("kinks_x", &self.kinks_x)
            .finish_non_exhaustive()
    }
}

/// A two-phase obstacle problem on a rectangle.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub domain: Rect,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    /// Boundary data `g`, imposed by nodal interpolation.
    pub dirichlet_value: ScalarFn,
    /// Boundary edges (tested at their midpoints) carrying Dirichlet data.
    pub dirichlet_region: Region,
    /// Boundary edges with the natural zero-flux condition.
    pub neumann_region: Region,
    pub friedrichs_c: f64,
    pub initial_cells: (usize, usize),
    pub pattern: SplitPattern,
    /// Red refinements applied to the structured grid to obtain level 1.
    pub pre_refinements: usize,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("alpha_plus", &self.alpha_plus)
            .field("alpha_minus", &self.alpha_minus)
            .field("friedrichs_c", &self.friedrichs_c)
            .field("initial_cells", &self.initial_cells)
            .field("pattern", &self.pattern)
            .field("pre_refinements", &self.pre_refinements)
            .field("exact", &self.exact)
            .finish_non_exhaustive()
    }
}

const GEOM_TOL: f64 = 1e-10;

/// Example I: `(-1, 1) x (0, 1)`, `a+ = a- = 8`, `u = -1 / 1` on `x = -1 / 1`,
/// zero flux on the horizontal sides. The solution depends on `x` only.
pub fn example1_spec() -> ProblemSpec {
    let u = |p: Point| -> f64 {
        let x = p[0];
        if x <= -0.5 {
            -4.0 * x * x - 4.0 * x - 1.0
        } else if x >= 0.5 {
            4.0 * x * x - 4.0 * x + 1.0
        } else {
            0.0
        }
    };
    let grad_u = |p: Point| -> [f64; 2] {
        let x = p[0];
        let dx = if x <= -0.5 {
            -8.0 * x - 4.0
        } else if x >= 0.5 {
            8.0 * x - 4.0
        } else {
            0.0
        };
        [dx, 0.0]
    };
    let lambda = |p: Point| -> f64 {
        if p[0] < -0.5 {
            -8.0
        } else if p[0] > 0.5 {
            8.0
        } else {
            0.0
        }
    };
    let domain = Rect::new(-1.0, 1.0, 0.0, 1.0);
    ProblemSpec {
        name: "example1".into(),
        domain,
        alpha_plus: 8.0,
        alpha_minus: 8.0,
        dirichlet_value: Arc::new(|p: Point| if p[0] < 0.0 { -1.0 } else { 1.0 }),
        dirichlet_region: Arc::new(|p: Point| (p[0].abs() - 1.0).abs() < GEOM_TOL),
        neumann_region: Arc::new(|p: Point| p[1].abs() < GEOM_TOL || (p[1] - 1.0).abs() < GEOM_TOL),
        friedrichs_c: strip_friedrichs_constant(domain.width()),
        initial_cells: (4, 2),
        pattern: SplitPattern::Diagonal,
        pre_refinements: 0,
        exact: Some(ExactSolution {
            u: Arc::new(u),
            grad_u: Arc::new(grad_u),
            lambda: Arc::new(lambda),
            energy: 16.0 / 3.0,
            kinks_x: vec![-0.5, 0.5],
        }),
    }
}

/// Example II: `(-1, 1)^2`, `a+ = a- = 4`, piecewise linear Dirichlet data
/// on the whole boundary. No closed-form solution is known.
pub fn example2_spec() -> ProblemSpec {
    let g = |p: Point| -> f64 {
        let [x, y] = p;
        if (y - 1.0).abs() < GEOM_TOL {
            x + 1.0
        } else if (y + 1.0).abs() < GEOM_TOL {
            x - 1.0
        } else if (x - 1.0).abs() < GEOM_TOL {
            y + 1.0
        } else {
            y - 1.0
        }
    };
    let domain = Rect::new(-1.0, 1.0, -1.0, 1.0);
    ProblemSpec {
        name: "example2".into(),
        domain,
        alpha_plus: 4.0,
        alpha_minus: 4.0,
        dirichlet_value: Arc::new(g),
        dirichlet_region: Arc::new(|_| true),
        neumann_region: Arc::new(|_| false),
        friedrichs_c: rectangle_friedrichs_constant(domain.width(), domain.height()),
        initial_cells: (1, 1),
        pattern: SplitPattern::CrissCross,
        pre_refinements: 1,
        exact: None,
    }
}

/// Friedrichs constant for functions vanishing on both ends of a strip of
/// the given width: the inverse square root of `(pi / width)^2`.
pub fn strip_friedrichs_constant(width: f64) -> f64 {
    width / std::f64::consts::PI
}

/// Friedrichs constant for functions vanishing on the whole boundary of a
/// rectangle: inverse square root of the first Dirichlet eigenvalue.
pub fn rectangle_friedrichs_constant(width: f64, height: f64) -> f64 {
    let pi = std::f64::consts::PI;
    1.0 / (pi * (1.0 / (width * width) + 1.0 / (height * height)).sqrt())
}

pub fn friedrichs_constant(spec: &ProblemSpec) -> f64 {
    spec.friedrichs_c
}

impl ProblemSpec {
    /// Checks coefficient signs and that the boundary data changes sign.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_plus > 0.0 && self.alpha_minus > 0.0) {
            return Err(Error::Configuration(format!(
                "coefficients must be positive (a+ = {}, a- = {})",
                self.alpha_plus, self.alpha_minus
            )));
        }
        if !(self.friedrichs_c > 0.0) {
            return Err(Error::Configuration(format!(
                "Friedrichs constant must be positive, got {}",
                self.friedrichs_c
            )));
        }
        let mesh = self.initial_mesh()?;
        let values: Vec<f64> = mesh
            .dirichlet_nodes()
            .iter()
            .map(|&i| (self.dirichlet_value)(mesh.vertex(i)))
            .collect();
        let has_pos = values.iter().any(|&v| v > 0.0);
        let has_neg = values.iter().any(|&v| v < 0.0);
        if !(has_pos && has_neg) {
            return Err(Error::Configuration(format!(
                "boundary data of `{}` does not change sign",
                self.name
            )));
        }
        Ok(())
    }

    /// Level-1 mesh with boundary tags.
    pub fn initial_mesh(&self) -> Result<TriMesh> {
        let (nx, ny) = self.initial_cells;
        let dirichlet = Arc::clone(&self.dirichlet_region);
        let neumann = Arc::clone(&self.neumann_region);
        let mut mesh = TriMesh::structured(self.domain, nx, ny, self.pattern)?
            .classify_boundary(move |p| dirichlet(p), move |p| neumann(p))?;
        for _ in 0..self.pre_refinements {
            mesh = mesh.refine_red()?;
        }
        Ok(mesh)
    }

    /// Meshes for levels `1..=levels`, each a red refinement of the previous.
    pub fn mesh_hierarchy(&self, levels: usize) -> Result<Vec<TriMesh>> {
        if levels == 0 {
            return Err(Error::InvalidArgument(
                "at least one level is required".into(),
            ));
        }
        let mut meshes = vec![self.initial_mesh()?];
        while meshes.len() < levels {
            let next = meshes.last().unwrap().refine_red()?;
            meshes.push(next);
        }
        Ok(meshes)
    }

    pub fn mesh_at_level(&self, level: usize) -> Result<TriMesh> {
        Ok(self.mesh_hierarchy(level)?.pop().unwrap())
    }

    /// Nodal interpolant of the boundary data on the Dirichlet nodes, zero elsewhere.
    pub fn dirichlet_interpolant(&self, mesh: &TriMesh) -> P1Field {
        let mut v = P1Field::zeros(mesh);
        for i in mesh.dirichlet_nodes() {
            v[i] = (self.dirichlet_value)(mesh.vertex(i));
        }
        v
    }
}

/// Reference solution: the dual solver output one level above `level`.
pub fn reference_solution(
    problem: &ProblemSpec,
    level: usize,
    opts: &DualSolveOptions,
) -> Result<(TriMesh, P1Field, f64)> {
    let mesh = problem.mesh_at_level(level + 1)?;
    let result = solve_two_phase(&mesh, problem, opts)?;
    Ok((mesh, result.u_lambda, result.primal_energy))
}
