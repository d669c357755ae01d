//! Dual solver: the discrete Lagrange multiplier maximizes the concave
//! quadratic `I*(mu) = min_v (v^T K v / 2 + v^T M mu)` over the box
//! `[-a-, a+]` per triangle, and the primal approximation is recovered from
//! it by one linear solve.
//!
//! Nodes are split into free nodes `I` (interior and Neumann) and Dirichlet
//! nodes `D`; `K_ID` denotes the block with rows `I` and columns `D`.

use crate::assembly::{p1_p0_mass, p1_stiffness, primal_energy};
use crate::error::{check_len, Error, Result};
use crate::fields::{P0Field, P1Field};
use crate::linalg::{dot, factorize_spd, CsrMatrix, SpdFactor};
use crate::mesh::TriMesh;
use crate::problems::ProblemSpec;

/// Block data of the dual energy with `K_II` factored once.
#[derive(Clone, Debug)]
pub struct DualObjective {
    free: Vec<usize>,
    dirichlet: Vec<usize>,
    num_nodes: usize,
    num_triangles: usize,
    k_ii: SpdFactor,
    m_i: CsrMatrix,
    v_d: Vec<f64>,
    /// `v_D^T K_DD v_D / 2`
    constant: f64,
    /// `K_ID v_D`
    k_id_vd: Vec<f64>,
    /// `M_D^T v_D`
    md_vd: Vec<f64>,
    pub alpha_plus: f64,
    pub alpha_minus: f64,
}

/// Options of the box-constrained maximization.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolveOptions {
    /// Bound on `||mu - P(mu + grad I*(mu))||_inf`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for DualSolveOptions {
    fn default() -> Self {
        DualSolveOptions {
            tol: 1e-9,
            max_iterations: 20_000,
        }
    }
}

/// Outcome of [`solve_box_qp`].
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub mu: P0Field,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `I*` after each accepted iterate, starting with the initial point.
    pub dual_history: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct DualSolveResult {
    pub lambda: P0Field,
    pub u_lambda: P1Field,
    pub dual_energy: f64,
    pub primal_energy: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Extracts the node blocks and factors `K_II`.
pub fn build_dual_objective(mesh: &TriMesh, problem: &ProblemSpec) -> Result<DualObjective> {
    let dirichlet = mesh.dirichlet_nodes();
    if dirichlet.is_empty() {
        return Err(Error::Configuration(
            "no Dirichlet nodes: the stiffness block is singular".into(),
        ));
    }
    let free = mesh.free_nodes();
    let k = p1_stiffness(mesh)?;
    let m = p1_p0_mass(mesh)?;
    let all_t: Vec<usize> = (0..mesh.num_triangles()).collect();

    let k_ii = factorize_spd(&k.submatrix(&free, &free))?;
    let k_id = k.submatrix(&free, &dirichlet);
    let k_dd = k.submatrix(&dirichlet, &dirichlet);
    let m_i = m.submatrix(&free, &all_t);
    let m_d = m.submatrix(&dirichlet, &all_t);
    let v_d: Vec<f64> = dirichlet
        .iter()
        .map(|&i| (problem.dirichlet_value)(mesh.vertex(i)))
        .collect();

    Ok(DualObjective {
        constant: 0.5 * k_dd.quadratic_form(&v_d),
        k_id_vd: k_id.mul_vec(&v_d),
        md_vd: m_d.mul_transpose_vec(&v_d),
        free,
        dirichlet,
        num_nodes: mesh.num_nodes(),
        num_triangles: mesh.num_triangles(),
        k_ii,
        m_i,
        v_d,
        alpha_plus: problem.alpha_plus,
        alpha_minus: problem.alpha_minus,
    })
}

impl DualObjective {
    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn num_dirichlet(&self) -> usize {
        self.dirichlet.len()
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    pub fn dirichlet_nodes(&self) -> &[usize] {
        &self.dirichlet
    }

    /// `r = K_ID v_D + M_I mu`
    fn residual_vector(&self, mu: &[f64]) -> Vec<f64> {
        let mut r = self.m_i.mul_vec(mu);
        for (ri, ki) in r.iter_mut().zip(&self.k_id_vd) {
            *ri += ki;
        }
        r
    }

    /// Free-node values `v_I = -K_II^{-1} (K_ID v_D + M_I mu)`.
    fn free_values(&self, mu: &[f64]) -> Result<Vec<f64>> {
        let mut w = self.k_ii.solve(&self.residual_vector(mu))?;
        w.iter_mut().for_each(|x| *x = -*x);
        Ok(w)
    }

    /// `I*` from the free values belonging to `mu` (no extra solve).
    fn energy_from_free(&self, mu: &[f64], v_i: &[f64]) -> f64 {
        let r = self.residual_vector(mu);
        self.constant + dot(&self.md_vd, mu) + 0.5 * dot(&r, v_i)
    }

    /// `grad I* = M_D^T v_D + M_I^T v_I`, one entry `int_T u_mu` per triangle.
    fn gradient_from_free(&self, v_i: &[f64]) -> Vec<f64> {
        let mut g = self.m_i.mul_transpose_vec(v_i);
        for (gi, di) in g.iter_mut().zip(&self.md_vd) {
            *gi += di;
        }
        g
    }

    fn merge(&self, v_i: &[f64]) -> P1Field {
        let mut v = vec![0.0; self.num_nodes];
        for (&i, &x) in self.free.iter().zip(v_i) {
            v[i] = x;
        }
        for (&i, &x) in self.dirichlet.iter().zip(&self.v_d) {
            v[i] = x;
        }
        P1Field::new(v)
    }

    fn project(&self, x: f64) -> f64 {
        x.clamp(-self.alpha_minus, self.alpha_plus)
    }

    fn kkt_residual(&self, mu: &[f64], g: &[f64]) -> f64 {
        mu.iter()
            .zip(g)
            .map(|(&m, &gi)| (m - self.project(m + gi)).abs())
            .fold(0.0, f64::max)
    }

    fn check_mu(&self, mu: &[f64]) -> Result<()> {
        check_len(
            self.num_triangles,
            mu.len(),
            "multiplier (one value per triangle)",
        )
    }
}

/// Dual energy `I*(mu)`.
pub fn eval_dual_energy(obj: &DualObjective, mu: &P0Field) -> Result<f64> {
    obj.check_mu(mu)?;
    let v_i = obj.free_values(mu)?;
    Ok(obj.energy_from_free(mu, &v_i))
}

/// Gradient of `I*`; entry `T` equals `int_T u_mu`.
pub fn eval_dual_gradient(obj: &DualObjective, mu: &P0Field) -> Result<Vec<f64>> {
    obj.check_mu(mu)?;
    let v_i = obj.free_values(mu)?;
    Ok(obj.gradient_from_free(&v_i))
}

/// Primal field minimizing the perturbed energy for a fixed multiplier.
pub fn reconstruct_primal(obj: &DualObjective, mu: &P0Field) -> Result<P1Field> {
    obj.check_mu(mu)?;
    Ok(obj.merge(&obj.free_values(mu)?))
}

/// Maximizes `I*` over the box with an active-set conjugate gradient method
/// (modified proportioning with reduced gradient projections).
///
/// Writing `f = -I*`, the Hessian `H = M_I^T K_II^{-1} M_I` is only
/// semidefinite, so the multiplier is not unique, but `u_mu` at the optimum
/// is. Three kinds of steps are taken, each not increasing `f`:
///
/// * conjugate gradient steps on the face of currently free entries, as long
///   as they stay feasible and the free gradient dominates;
/// * expansion steps: the feasible part of a blocked CG step followed by a
///   fixed-length projected gradient step that may change the active set;
/// * proportioning steps releasing entries whose gradient points inward.
///
/// `u_mu` is affine in `mu` and is updated with the one factored solve each
/// Hessian product needs; it is recomputed from scratch periodically.
pub fn solve_box_qp(
    obj: &DualObjective,
    mu0: &P0Field,
    opts: &DualSolveOptions,
) -> Result<QpSolution> {
    obj.check_mu(mu0)?;
    let (lo, hi) = (-obj.alpha_minus, obj.alpha_plus);
    let mut mu: Vec<f64> = mu0.iter().map(|&m| obj.project(m)).collect();
    let mut v_i = obj.free_values(&mu)?;
    let mut dual = obj.energy_from_free(&mu, &v_i);
    let mut history = vec![dual];
    let n = mu.len();

    // descent gradient of f = -I*
    let descent = |v_i: &[f64]| -> Vec<f64> {
        let mut g = obj.gradient_from_free(v_i);
        g.iter_mut().for_each(|x| *x = -*x);
        g
    };
    let is_free = |x: f64| x > lo && x < hi;
    let free_part = |mu: &[f64], g: &[f64]| -> Vec<f64> {
        mu.iter()
            .zip(g)
            .map(|(&m, &gi)| if is_free(m) { gi } else { 0.0 })
            .collect()
    };
    let chopped = |mu: &[f64], g: &[f64]| -> Vec<f64> {
        mu.iter()
            .zip(g)
            .map(|(&m, &gi)| {
                if lo == hi || is_free(m) {
                    0.0
                } else if m <= lo {
                    gi.min(0.0)
                } else {
                    gi.max(0.0)
                }
            })
            .collect()
    };
    // largest t with mu - t d inside the box
    let feasible_step = |mu: &[f64], d: &[f64]| -> f64 {
        mu.iter().zip(d).fold(f64::INFINITY, |t, (&m, &di)| {
            if di > 0.0 {
                t.min((m - lo) / di)
            } else if di < 0.0 {
                t.min((m - hi) / di)
            } else {
                t
            }
        })
    };
    // w = K_II^{-1} M_I d, so that H d = M_I^T w and v_I moves by t w
    let response = |d: &[f64]| -> Result<(Vec<f64>, f64)> {
        let w = obj.k_ii.solve(&obj.m_i.mul_vec(d))?;
        let curvature = dot(&obj.m_i.mul_transpose_vec(&w), d);
        Ok((w, curvature))
    };

    let step_length = if obj.num_free() == 0 || lo == hi {
        1.0
    } else {
        1.0 / hessian_norm_estimate(obj, n)?
    };

    let mut g = descent(&v_i);
    let mut kkt = obj.kkt_residual(&mu, &g.iter().map(|x| -x).collect::<Vec<_>>());
    let mut p = free_part(&mu, &g);
    let mut iterations = 0;
    let mut since_refresh = 0;

    while kkt > opts.tol && iterations < opts.max_iterations {
        iterations += 1;
        since_refresh += 1;
        let phi = free_part(&mu, &g);
        let beta = chopped(&mu, &g);
        let reduced: f64 = mu
            .iter()
            .zip(&phi)
            .map(|(&m, &f)| {
                let r = if f > 0.0 {
                    f.min((m - lo) / step_length)
                } else {
                    f.max((m - hi) / step_length)
                };
                r * f
            })
            .sum();

        if dot(&beta, &beta) <= reduced {
            let (w, curvature) = response(&p)?;
            let slope = dot(&g, &p);
            let t_feasible = feasible_step(&mu, &p);
            let t_cg = if curvature > 0.0 {
                slope / curvature
            } else {
                f64::INFINITY
            };
            if t_cg <= t_feasible {
                advance(&mut mu, &mut v_i, &p, &w, t_cg, lo, hi);
                g = descent(&v_i);
                let phi = free_part(&mu, &g);
                let gamma = if curvature > 0.0 {
                    dot(&obj.m_i.mul_vec(&phi), &w) / curvature
                } else {
                    0.0
                };
                p = phi.iter().zip(&p).map(|(f, q)| f - gamma * q).collect();
            } else {
                // expansion: move to the boundary, then project a gradient step
                advance(&mut mu, &mut v_i, &p, &w, t_feasible, lo, hi);
                let half = mu.clone();
                let half_v = v_i.clone();
                let half_energy = obj.energy_from_free(&half, &half_v);
                let g_half = descent(&v_i);
                let phi = free_part(&mu, &g_half);
                for (m, f) in mu.iter_mut().zip(&phi) {
                    *m = (*m - step_length * f).clamp(lo, hi);
                }
                v_i = obj.free_values(&mu)?;
                since_refresh = 0;
                if obj.energy_from_free(&mu, &v_i) < half_energy {
                    mu = half;
                    v_i = half_v;
                }
                g = descent(&v_i);
                p = free_part(&mu, &g);
            }
        } else {
            // proportioning: release entries whose gradient points inward
            let (w, curvature) = response(&beta)?;
            let slope = dot(&g, &beta);
            let t_feasible = feasible_step(&mu, &beta);
            let t = if curvature > 0.0 {
                (slope / curvature).min(t_feasible)
            } else {
                t_feasible
            };
            advance(&mut mu, &mut v_i, &beta, &w, t, lo, hi);
            g = descent(&v_i);
            p = free_part(&mu, &g);
        }

        if since_refresh >= 100 {
            v_i = obj.free_values(&mu)?;
            g = descent(&v_i);
            p = free_part(&mu, &g);
            since_refresh = 0;
        }
        let next = obj.energy_from_free(&mu, &v_i);
        dual = dual.max(next);
        history.push(next);
        kkt = obj.kkt_residual(&mu, &g.iter().map(|x| -x).collect::<Vec<_>>());
    }
    let _ = dual;

    let v_i = obj.free_values(&mu)?;
    let g = obj.gradient_from_free(&v_i);
    let kkt_final = obj.kkt_residual(&mu, &g);
    Ok(QpSolution {
        mu: P0Field::new(mu),
        kkt_residual: kkt_final,
        iterations,
        converged: kkt_final <= opts.tol,
        dual_history: history,
    })
}

/// `mu -= t d` (clamped against round-off) and the matching update of `u_mu`.
fn advance(mu: &mut [f64], v_i: &mut [f64], d: &[f64], w: &[f64], t: f64, lo: f64, hi: f64) {
    if t == 0.0 {
        return;
    }
    for (m, di) in mu.iter_mut().zip(d) {
        *m = (*m - t * di).clamp(lo, hi);
    }
    for (v, wi) in v_i.iter_mut().zip(w) {
        *v += t * wi;
    }
}

/// Power iteration for the largest eigenvalue of `M_I^T K_II^{-1} M_I`,
/// inflated slightly so that the reciprocal is a safe gradient step.
fn hessian_norm_estimate(obj: &DualObjective, n: usize) -> Result<f64> {
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut lambda = 0.0;
    for _ in 0..30 {
        let norm = dot(&x, &x).sqrt();
        if norm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        let w = obj.k_ii.solve(&obj.m_i.mul_vec(&x))?;
        let y = obj.m_i.mul_transpose_vec(&w);
        lambda = dot(&x, &y);
        x = y;
    }
    Ok(if lambda > 0.0 { 1.1 * lambda } else { 1.0 })
}

/// Multiplier, reconstructed primal field and both energies.
pub fn solve_two_phase(
    mesh: &TriMesh,
    problem: &ProblemSpec,
    opts: &DualSolveOptions,
) -> Result<DualSolveResult> {
    let obj = build_dual_objective(mesh, problem)?;
    let qp = solve_box_qp(&obj, &P0Field::zeros(mesh), opts)?;
    let v_i = obj.free_values(&qp.mu)?;
    let dual_energy = obj.energy_from_free(&qp.mu, &v_i);
    let u_lambda = obj.merge(&v_i);
    let primal = primal_energy(mesh, &u_lambda, problem.alpha_plus, problem.alpha_minus)?;
    Ok(DualSolveResult {
        lambda: qp.mu,
        u_lambda,
        dual_energy,
        primal_energy: primal,
        kkt_residual: qp.kkt_residual,
        iterations: qp.iterations,
        converged: qp.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{example1_spec, example2_spec};
    use std::sync::Arc;

    #[test]
    fn node_partitions() {
        let p1 = example1_spec();
        let obj = build_dual_objective(&p1.initial_mesh().unwrap(), &p1).unwrap();
        assert_eq!((obj.num_free(), obj.num_dirichlet()), (9, 6));
        let p2 = example2_spec();
        let obj = build_dual_objective(&p2.initial_mesh().unwrap(), &p2).unwrap();
        assert_eq!((obj.num_free(), obj.num_dirichlet()), (5, 8));
    }

    #[test]
    fn missing_dirichlet_nodes_rejected() {
        let mut p = example1_spec();
        p.dirichlet_region = Arc::new(|_| false);
        p.neumann_region = Arc::new(|_| true);
        let mesh = p.initial_mesh().unwrap();
        assert!(matches!(
            build_dual_objective(&mesh, &p),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn zero_data_gives_zero() {
        let mut p = example2_spec();
        p.dirichlet_value = Arc::new(|_| 0.0);
        let mesh = p.initial_mesh().unwrap().refine_red().unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        let mu = P0Field::zeros(&mesh);
        assert_eq!(eval_dual_energy(&obj, &mu).unwrap(), 0.0);
        assert!(reconstruct_primal(&obj, &mu)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        assert!(eval_dual_gradient(&obj, &mu)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn all_dirichlet_mesh_returns_interpolant() {
        let mut p = example2_spec();
        p.initial_cells = (1, 1);
        p.pattern = crate::mesh::SplitPattern::Diagonal;
        p.pre_refinements = 0;
        let mesh = p.initial_mesh().unwrap();
        assert_eq!(mesh.free_nodes().len(), 0);
        let r = solve_two_phase(&mesh, &p, &DualSolveOptions::default()).unwrap();
        assert_eq!(r.u_lambda, p.dirichlet_interpolant(&mesh));
        assert!(r.converged);
        assert!(r.dual_energy <= r.primal_energy + 1e-12);
    }

    #[test]
    fn degenerate_box_returns_zero() {
        let mut p = example2_spec();
        p.alpha_plus = 0.0;
        p.alpha_minus = 0.0;
        let mesh = p.initial_mesh().unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        let mut start = P0Field::zeros(&mesh);
        start[0] = 3.0;
        let qp = solve_box_qp(&obj, &start, &DualSolveOptions::default()).unwrap();
        assert!(qp.iterations <= 1);
        assert!(qp.mu.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn laplace_limit_matches_harmonic_extension() {
        let mut p = example2_spec();
        p.alpha_plus = 0.0;
        p.alpha_minus = 0.0;
        let mesh = p.initial_mesh().unwrap().refine_red().unwrap();
        let r = solve_two_phase(&mesh, &p, &DualSolveOptions::default()).unwrap();
        let k = p1_stiffness(&mesh).unwrap();
        let harmonic = 0.5 * k.quadratic_form(&r.u_lambda);
        assert!((r.primal_energy - harmonic).abs() < 1e-12);
        assert!((r.dual_energy - harmonic).abs() < 1e-12);
    }

    #[test]
    fn single_triangle_interior_optimum() {
        // one free node at the centroid of a triangle split into three
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0 / 3.0, 1.0 / 3.0]];
        let triangles = vec![[0, 1, 3], [1, 2, 3], [2, 0, 3]];
        let mesh = crate::mesh::TriMesh::from_triangles(vertices, triangles).unwrap();
        let mut p = example2_spec();
        p.alpha_plus = 100.0;
        p.alpha_minus = 100.0;
        p.dirichlet_value = Arc::new(|q| q[0] - 0.2);
        let obj = build_dual_objective(&mesh, &p).unwrap();
        // closed form in the scalar reduction mu_T = m for all T:
        // I*(m) = c + b m - (k_id v_D + a m)^2 / (2 k)
        let k = p1_stiffness(&mesh).unwrap();
        let m = p1_p0_mass(&mesh).unwrap();
        let kk = k.get(3, 3);
        let a: f64 = (0..3).map(|t| m.get(3, t)).sum();
        let vd = [-0.2, 0.8, -0.2];
        let kidvd: f64 = (0..3).map(|j| k.get(3, j) * vd[j]).sum();
        let b: f64 = (0..3)
            .map(|t| (0..3).map(|j| m.get(j, t) * vd[j]).sum::<f64>())
            .sum();
        let m_star = (b * kk - kidvd * a) / (a * a);
        let uniform = P0Field::new(vec![m_star; 3]);
        let g = eval_dual_gradient(&obj, &uniform).unwrap();
        let sum: f64 = g.iter().sum();
        assert!(sum.abs() < 1e-12, "directional derivative {sum}");
        // the full problem's optimum value is at least the restricted one
        let qp = solve_box_qp(&obj, &P0Field::zeros(&mesh), &DualSolveOptions::default()).unwrap();
        let best = eval_dual_energy(&obj, &qp.mu).unwrap();
        assert!(best >= eval_dual_energy(&obj, &uniform).unwrap() - 1e-12);
        assert!(qp.converged);
    }

    #[test]
    fn dual_history_is_monotone() {
        let p = example1_spec();
        let mesh = p.mesh_at_level(2).unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        let qp = solve_box_qp(&obj, &P0Field::zeros(&mesh), &DualSolveOptions::default()).unwrap();
        for w in qp.dual_history.windows(2) {
            assert!(w[1] >= w[0] - 1e-12 * w[0].abs().max(1.0));
        }
        assert!(qp.converged);
    }

    #[test]
    fn size_mismatch() {
        let p = example1_spec();
        let mesh = p.initial_mesh().unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        assert!(eval_dual_energy(&obj, &P0Field::new(vec![0.0; 3])).is_err());
    }
}
