//! Functional error majorant for `J(v) - J(u)`.
//!
//! For any `beta > 0`, any flux `eta` in `H(div)` with zero normal component
//! on Neumann edges and any multiplier `mu` with `-a- <= mu <= a+`,
//!
//! ```text
//! J(v) - J(u) <= (1 + beta)/2 ||grad v - eta||^2
//!              + (1 + 1/beta)/2 C^2 ||div eta - mu||^2
//!              + int (a+ v^+ + a- v^- - mu v)
//! ```
//!
//! where `C` is the Friedrichs constant of the domain. The three terms are
//! `m1`, `m2`, `m3`. Here `eta` is lowest-order Raviart-Thomas and `mu` is
//! piecewise constant on the mesh of `v`; the bound is minimized by
//! alternating exact minimization in `eta`, `mu` and `beta`.

use crate::assembly::rt0::{basis_values, edge_midpoints};
use crate::assembly::{
    p1_gradient, pos_neg_part_integrals, rt0_div_load, rt0_divdiv, rt0_divergence, rt0_flux_load,
    rt0_mass,
};
use crate::error::{Error, Result};
use crate::fields::{P0Field, P1Field, Rt0Field};
use crate::linalg::{factorize_spd, pcg_solve, CsrMatrix, SpdFactor};
use crate::mesh::{EdgeTag, TriMesh};

/// Lower limit of `beta`.
///
/// The majorant is often smallest in the limit `beta -> 0` (`div eta = mu`
/// enforced exactly), where the flux system degenerates; the `beta` step
/// minimizes over `[BETA_MIN, inf)` instead, which is still exact partial
/// minimization and changes the total by `O(BETA_MIN)`.
pub const BETA_MIN: f64 = 1e-8;

/// Majorant value, its parts and the arguments it was evaluated at.
#[derive(Clone, Debug)]
pub struct MajorantBreakdown {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    /// `m1 + m2 + m3`
    pub total: f64,
    pub beta: f64,
    /// Per-triangle contributions to `m1`, `m2`, `m3`.
    pub density1: P0Field,
    pub density2: P0Field,
    pub density3: P0Field,
    pub eta: Rt0Field,
    pub mu: P0Field,
    /// Completed sweeps.
    pub iterations: usize,
    /// Total after each sweep.
    pub history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MajorantOptions {
    /// Maximal number of sweeps.
    pub sweeps: usize,
    /// Stop once a sweep lowers the total by less than this fraction.
    pub rel_tol: f64,
    /// Relative residual of the inner flux solves.
    pub solver_tol: f64,
}

impl Default for MajorantOptions {
    fn default() -> Self {
        MajorantOptions {
            sweeps: 1000,
            rel_tol: 1e-12,
            solver_tol: 1e-11,
        }
    }
}

/// Guaranteed bounds derived from the majorant and an optional reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBounds {
    /// `J(v) - J_ref` (zero without reference).
    pub gap_lower: f64,
    /// The majorant.
    pub gap_upper: f64,
    /// `J(v) - majorant`.
    pub energy_lower: f64,
    /// `J_ref`, or `J(v)` without reference.
    pub energy_upper: f64,
}

/// Data depending only on `v`.
struct Fixed<'a> {
    mesh: &'a TriMesh,
    c: f64,
    alpha_plus: f64,
    alpha_minus: f64,
    grad_v: Vec<[f64; 2]>,
    mean_v: Vec<f64>,
    /// `int_T a+ v^+ + a- v^-`
    phase: Vec<f64>,
}

impl<'a> Fixed<'a> {
    fn new(
        mesh: &'a TriMesh,
        v: &P1Field,
        c: f64,
        alpha_plus: f64,
        alpha_minus: f64,
    ) -> Result<Self> {
        v.check(mesh)?;
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Friedrichs constant must be positive, got {c}"
            )));
        }
        crate::assembly::p1::check_areas(mesh)?;
        let nt = mesh.num_triangles();
        let mut grad_v = Vec::with_capacity(nt);
        let mut mean_v = Vec::with_capacity(nt);
        let mut phase = Vec::with_capacity(nt);
        for t in 0..nt {
            let vals = v.on_triangle(mesh, t);
            grad_v.push(p1_gradient(mesh, v, t));
            mean_v.push((vals[0] + vals[1] + vals[2]) / 3.0);
            let (pos, neg) = pos_neg_part_integrals(vals, mesh.area(t));
            phase.push(alpha_plus * pos + alpha_minus * neg);
        }
        Ok(Fixed {
            mesh,
            c,
            alpha_plus,
            alpha_minus,
            grad_v,
            mean_v,
            phase,
        })
    }

    fn check_feasible(&self, mu: &P0Field) -> Result<()> {
        mu.check(self.mesh)?;
        let (lower, upper) = (-self.alpha_minus, self.alpha_plus);
        match mu.iter().position(|&m| !(m >= lower && m <= upper)) {
            Some(t) => Err(Error::InfeasibleMultiplier {
                triangle: t,
                value: mu[t],
                lower,
                upper,
            }),
            None => Ok(()),
        }
    }

    /// `int_T |grad v - eta|^2` per triangle (edge-midpoint rule, exact).
    fn flux_defect(&self, eta: &Rt0Field) -> Vec<f64> {
        let mesh = self.mesh;
        (0..mesh.num_triangles())
            .map(|t| {
                let edges = mesh.triangle_edges(t);
                let g = self.grad_v[t];
                let w = mesh.area(t) / 3.0;
                edge_midpoints(mesh, t)
                    .iter()
                    .map(|&q| {
                        let phi = basis_values(mesh, t, q);
                        let mut e = g;
                        for k in 0..3 {
                            e[0] -= eta[edges[k]] * phi[k][0];
                            e[1] -= eta[edges[k]] * phi[k][1];
                        }
                        w * (e[0] * e[0] + e[1] * e[1])
                    })
                    .sum()
            })
            .collect()
    }

    /// `|T| (div eta - mu)^2` per triangle.
    fn balance_defect(&self, div: &P0Field, mu: &P0Field) -> Vec<f64> {
        (0..self.mesh.num_triangles())
            .map(|t| self.mesh.area(t) * (div[t] - mu[t]).powi(2))
            .collect()
    }

    fn evaluate(&self, beta: f64, eta: &Rt0Field, mu: &P0Field) -> Result<MajorantBreakdown> {
        if !(beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive, got {beta}"
            )));
        }
        self.check_feasible(mu)?;
        let div = rt0_divergence(self.mesh, eta)?;
        let w1 = 0.5 * (1.0 + beta);
        let w2 = 0.5 * (1.0 + 1.0 / beta) * self.c * self.c;
        let density1: Vec<f64> = self.flux_defect(eta).into_iter().map(|x| w1 * x).collect();
        let density2: Vec<f64> = self
            .balance_defect(&div, mu)
            .into_iter()
            .map(|x| w2 * x)
            .collect();
        let density3: Vec<f64> = (0..self.mesh.num_triangles())
            .map(|t| self.phase[t] - mu[t] * self.mesh.area(t) * self.mean_v[t])
            .collect();
        let m1: f64 = density1.iter().sum();
        let m2: f64 = density2.iter().sum();
        let m3: f64 = density3.iter().sum();
        Ok(MajorantBreakdown {
            m1,
            m2,
            m3,
            total: m1 + m2 + m3,
            beta,
            density1: density1.into(),
            density2: density2.into(),
            density3: density3.into(),
            eta: eta.clone(),
            mu: mu.clone(),
            iterations: 0,
            history: Vec::new(),
        })
    }

    fn step_mu(&self, beta: f64, eta: &Rt0Field) -> Result<P0Field> {
        let div = rt0_divergence(self.mesh, eta)?;
        let scale = self.c * self.c * (1.0 + 1.0 / beta);
        Ok((0..self.mesh.num_triangles())
            .map(|t| (div[t] + self.mean_v[t] / scale).clamp(-self.alpha_minus, self.alpha_plus))
            .collect::<Vec<_>>()
            .into())
    }

    fn step_beta(&self, eta: &Rt0Field, mu: &P0Field, previous: f64) -> Result<f64> {
        let div = rt0_divergence(self.mesh, eta)?;
        let flux: f64 = self.flux_defect(eta).iter().sum::<f64>().sqrt();
        let balance: f64 = self.balance_defect(&div, mu).iter().sum::<f64>().sqrt();
        Ok(if flux == 0.0 {
            previous
        } else {
            (self.c * balance / flux).max(BETA_MIN)
        })
    }
}

/// Flux system restricted to the edges that are not on the Neumann boundary.
///
/// The matrix is `(1 + beta) (M + tau K)` with `tau = C^2 / beta`. A factor
/// for some `tau0` close to `tau` serves as preconditioner for warm-started
/// conjugate gradients, which never increase `m1 + m2`; it is renewed when
/// `tau / tau0` leaves `[1/2, 2]`. For very large `tau` the matrix is too
/// close to the singular `K` to factor, and the largest factorable `tau0`
/// (in steps of 100) is kept for all larger `tau`.
struct FluxSystem {
    active: Vec<usize>,
    num_edges: usize,
    mass: CsrMatrix,
    divdiv: CsrMatrix,
    flux_load: Vec<f64>,
    factor: Option<Preconditioner>,
}

struct Preconditioner {
    tau: f64,
    /// `tau` was lowered to make the matrix factorable.
    capped: bool,
    factor: SpdFactor,
}

impl FluxSystem {
    fn new(mesh: &TriMesh, v: &P1Field) -> Result<Self> {
        let active: Vec<usize> = mesh
            .edge_tags()
            .iter()
            .enumerate()
            .filter(|(_, &tag)| tag != EdgeTag::NeumannBoundary)
            .map(|(e, _)| e)
            .collect();
        let c = rt0_flux_load(mesh, v)?;
        Ok(FluxSystem {
            mass: rt0_mass(mesh)?.submatrix(&active, &active),
            divdiv: rt0_divdiv(mesh)?.submatrix(&active, &active),
            flux_load: active.iter().map(|&e| c[e]).collect(),
            num_edges: mesh.num_edges(),
            active,
            factor: None,
        })
    }

    fn rhs(&self, mesh: &TriMesh, beta: f64, c: f64, mu: &P0Field) -> Result<Vec<f64>> {
        let d = rt0_div_load(mesh, mu)?;
        let (w1, w2) = (1.0 + beta, c * c * (1.0 + 1.0 / beta));
        Ok(self
            .active
            .iter()
            .zip(&self.flux_load)
            .map(|(&e, &ce)| w1 * ce + w2 * d[e])
            .collect())
    }

    fn expand(&self, x: &[f64]) -> Rt0Field {
        let mut eta = vec![0.0; self.num_edges];
        for (&e, &xe) in self.active.iter().zip(x) {
            eta[e] = xe;
        }
        eta.into()
    }

    /// Exact minimizer by a fresh factorization.
    fn solve_direct(&self, mesh: &TriMesh, beta: f64, c: f64, mu: &P0Field) -> Result<Rt0Field> {
        if self.active.is_empty() {
            return Ok(Rt0Field::zeros(mesh));
        }
        let w2 = c * c * (1.0 + 1.0 / beta);
        let a = CsrMatrix::linear_combination(1.0 + beta, &self.mass, w2, &self.divdiv);
        let factor = factorize_spd(&a)?;
        Ok(self.expand(&factor.solve(&self.rhs(mesh, beta, c, mu)?)?))
    }

    fn precondition_at(&self, tau: f64) -> Result<Preconditioner> {
        let mut tau0 = tau;
        loop {
            let a = CsrMatrix::linear_combination(1.0, &self.mass, tau0, &self.divdiv);
            match factorize_spd(&a) {
                Ok(factor) => {
                    return Ok(Preconditioner {
                        tau: tau0,
                        capped: tau0 < tau,
                        factor,
                    })
                }
                Err(Error::NotPositiveDefinite { .. }) if tau0 > 1.0 => tau0 /= 100.0,
                Err(e) => return Err(e),
            }
        }
    }

    /// Preconditioned CG from `start`.
    fn solve_from(
        &mut self,
        mesh: &TriMesh,
        beta: f64,
        c: f64,
        mu: &P0Field,
        start: &Rt0Field,
        tol: f64,
    ) -> Result<Rt0Field> {
        if self.active.is_empty() {
            return Ok(Rt0Field::zeros(mesh));
        }
        let tau = c * c / beta;
        let stale = match &self.factor {
            Some(p) if p.capped && tau >= p.tau => false,
            Some(p) => !(tau / p.tau >= 0.5 && tau / p.tau <= 2.0),
            None => true,
        };
        if stale {
            self.factor = Some(self.precondition_at(tau)?);
        }
        let rhs = self.rhs(mesh, beta, c, mu)?;
        let x0: Vec<f64> = self.active.iter().map(|&e| start[e]).collect();
        let (w1, w2) = (1.0 + beta, c * c * (1.0 + 1.0 / beta));
        let (mass, divdiv) = (&self.mass, &self.divdiv);
        let factor = &self.factor.as_ref().expect("factor present").factor;
        let apply = |x: &[f64], y: &mut [f64]| {
            mass.mul_vec_into(x, y);
            let mut t = vec![0.0; x.len()];
            divdiv.mul_vec_into(x, &mut t);
            for (yi, ti) in y.iter_mut().zip(&t) {
                *yi = w1 * *yi + w2 * ti;
            }
        };
        let precondition = |r: &[f64], z: &mut [f64]| {
            let s = factor.solve(r).expect("dimensions agree");
            z.copy_from_slice(&s);
        };
        let x = match pcg_solve(apply, precondition, &rhs, Some(&x0), tol, 500) {
            Ok(out) => out.x,
            // every CG iterate improves on the start, so the last one is usable
            Err(Error::IterationLimit { best, .. }) => best,
            Err(e) => return Err(e),
        };
        Ok(self.expand(&x))
    }
}

/// Evaluates the majorant and its per-triangle densities.
#[allow(clippy::too_many_arguments)]
pub fn majorant_parts(
    mesh: &TriMesh,
    v: &P1Field,
    beta: f64,
    eta: &Rt0Field,
    mu: &P0Field,
    c: f64,
    alpha_plus: f64,
    alpha_minus: f64,
) -> Result<MajorantBreakdown> {
    eta.check(mesh)?;
    Fixed::new(mesh, v, c, alpha_plus, alpha_minus)?.evaluate(beta, eta, mu)
}

/// Flux minimizing `m1 + m2` for fixed `beta` and `mu`.
pub fn step_eta(mesh: &TriMesh, v: &P1Field, beta: f64, mu: &P0Field, c: f64) -> Result<Rt0Field> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    v.check(mesh)?;
    FluxSystem::new(mesh, v)?.solve_direct(mesh, beta, c, mu)
}

/// Multiplier minimizing `m2 + m3` for fixed `beta` and `eta`, triangle by
/// triangle: `mu_T = P(div eta|_T + mean_T(v) / (C^2 (1 + 1/beta)))`.
#[allow(clippy::too_many_arguments)]
pub fn step_mu(
    mesh: &TriMesh,
    v: &P1Field,
    beta: f64,
    eta: &Rt0Field,
    c: f64,
    alpha_plus: f64,
    alpha_minus: f64,
) -> Result<P0Field> {
    if !(beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    Fixed::new(mesh, v, c, alpha_plus, alpha_minus)?.step_mu(beta, eta)
}

/// Minimizer `beta = C ||div eta - mu|| / ||grad v - eta||` of the total.
///
/// Returns `previous` when `eta = grad v` (then `beta` does not matter); the
/// result is never below [`BETA_MIN`].
pub fn step_beta(
    mesh: &TriMesh,
    v: &P1Field,
    eta: &Rt0Field,
    mu: &P0Field,
    c: f64,
    previous: f64,
) -> Result<f64> {
    eta.check(mesh)?;
    mu.check(mesh)?;
    Fixed::new(mesh, v, c, 1.0, 1.0)?.step_beta(eta, mu, previous)
}

/// Alternating minimization of the majorant starting from `beta = 1` and
/// the multiplier `mu0`.
///
/// Each sweep minimizes exactly in `eta`, then `mu`, then `beta`; the flux
/// of the first sweep doubles as the initial flux. The total after every
/// sweep is recorded in `history` and never increases.
pub fn optimize_majorant(
    mesh: &TriMesh,
    v: &P1Field,
    mu0: &P0Field,
    c: f64,
    alpha_plus: f64,
    alpha_minus: f64,
    opts: &MajorantOptions,
) -> Result<MajorantBreakdown> {
    let fixed = Fixed::new(mesh, v, c, alpha_plus, alpha_minus)?;
    fixed.check_feasible(mu0)?;
    let mut system = FluxSystem::new(mesh, v)?;
    let eta = system.solve_direct(mesh, 1.0, c, mu0)?;
    let mut state = fixed.evaluate(1.0, &eta, mu0)?;
    let mut history = Vec::new();

    // Each step is an exact partial minimization; a candidate is still
    // compared against the current state so that round-off in the nearly
    // singular flux solves can never raise the total.
    let improve = |state: MajorantBreakdown, beta: f64, eta: &Rt0Field, mu: &P0Field| {
        let candidate = fixed.evaluate(beta, eta, mu)?;
        Ok::<_, Error>(if candidate.total <= state.total {
            candidate
        } else {
            state
        })
    };

    for sweep in 0..opts.sweeps {
        let previous = state.total;
        if sweep > 0 {
            let eta =
                system.solve_from(mesh, state.beta, c, &state.mu, &state.eta, opts.solver_tol)?;
            let (beta, mu) = (state.beta, state.mu.clone());
            state = improve(state, beta, &eta, &mu)?;
        }
        let mu = fixed.step_mu(state.beta, &state.eta)?;
        let (beta, eta) = (state.beta, state.eta.clone());
        state = improve(state, beta, &eta, &mu)?;
        let beta = fixed.step_beta(&state.eta, &state.mu, state.beta)?;
        let (eta, mu) = (state.eta.clone(), state.mu.clone());
        state = improve(state, beta, &eta, &mu)?;
        history.push(state.total);
        if previous - state.total < opts.rel_tol * state.total.abs() {
            break;
        }
    }
    state.iterations = history.len();
    state.history = history;
    Ok(state)
}

/// Two-sided bounds of the error and of the exact energy.
pub fn energy_bounds(j_v: f64, majorant_total: f64, j_ref: Option<f64>) -> Result<EnergyBounds> {
    if let Some(r) = j_ref {
        if r > j_v {
            return Err(Error::InputOrder {
                reference: r,
                approximate: j_v,
            });
        }
    }
    Ok(EnergyBounds {
        gap_lower: j_ref.map_or(0.0, |r| j_v - r),
        gap_upper: majorant_total,
        energy_lower: j_v - majorant_total,
        energy_upper: j_ref.unwrap_or(j_v),
    })
}
