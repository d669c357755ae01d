//! Solves the dual box-constrained problem on one mesh and reports the
//! primal/dual energies and the KKT residual.

use two_phase_obstacle::{example1_spec, solve_two_phase, DualSolveOptions};

fn main() -> two_phase_obstacle::Result<()> {
    let level = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let problem = example1_spec();
    let mesh = problem.mesh_at_level(level)?;
    let sol = solve_two_phase(&mesh, &problem, &DualSolveOptions::default())?;

    println!("level {level}, {} nodes", mesh.num_nodes());
    println!("J(u_lambda)   = {:.6}", sol.primal_energy);
    println!("I*(lambda)    = {:.6}", sol.dual_energy);
    println!(
        "duality gap   = {:.3e}",
        sol.primal_energy - sol.dual_energy
    );
    println!(
        "KKT residual  = {:.3e} after {} iterations",
        sol.kkt_residual, sol.iterations
    );

    let saturated = sol
        .lambda
        .iter()
        .filter(|l| l.abs() == problem.alpha_plus)
        .count();
    println!(
        "{saturated} of {} multipliers at a bound",
        mesh.num_triangles()
    );
    Ok(())
}
