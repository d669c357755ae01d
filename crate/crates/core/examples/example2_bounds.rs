//! Example II has no closed-form solution; the majorant turns each level
//! into a guaranteed two-sided bracket of the minimal energy.

use two_phase_obstacle::{
    example2_spec, optimize_majorant, solve_two_phase, DualSolveOptions, MajorantOptions,
};

fn main() -> two_phase_obstacle::Result<()> {
    let problem = example2_spec();
    let qp = DualSolveOptions::default();
    let opts = MajorantOptions {
        sweeps: 10_000,
        ..MajorantOptions::default()
    };
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, mesh) in problem.mesh_hierarchy(6)?.iter().enumerate() {
        let sol = solve_two_phase(mesh, &problem, &qp)?;
        let m = optimize_majorant(
            mesh,
            &sol.u_lambda,
            &sol.lambda,
            problem.friedrichs_c,
            problem.alpha_plus,
            problem.alpha_minus,
            &opts,
        )?;
        lower = lower.max(sol.primal_energy - m.total);
        upper = upper.min(sol.primal_energy);
        println!(
            "level {}: {:5} nodes  J = {:.4}  J - M = {:.4}  bracket [{lower:.4}, {upper:.4}]",
            i + 1,
            mesh.num_nodes(),
            sol.primal_energy,
            sol.primal_energy - m.total
        );
    }
    Ok(())
}
