//! The third majorant density concentrates where the discrete solution
//! changes phase. Lists where the largest values sit on Example I, whose
//! free boundary is the pair of lines x = -1/2 and x = 1/2.

use two_phase_obstacle::{
    example1_spec, optimize_majorant, solve_two_phase, DualSolveOptions, MajorantOptions,
};

fn main() -> two_phase_obstacle::Result<()> {
    let problem = example1_spec();
    let mesh = problem.mesh_at_level(5)?;
    let sol = solve_two_phase(&mesh, &problem, &DualSolveOptions::default())?;
    let m = optimize_majorant(
        &mesh,
        &sol.u_lambda,
        &sol.lambda,
        problem.friedrichs_c,
        problem.alpha_plus,
        problem.alpha_minus,
        &MajorantOptions {
            sweeps: 10_000,
            ..MajorantOptions::default()
        },
    )?;

    let mut order: Vec<usize> = (0..mesh.num_triangles()).collect();
    order.sort_by(|&a, &b| m.density3[b].total_cmp(&m.density3[a]));
    let top = &order[..order.len() / 10];
    let mut histogram = [0usize; 8];
    for &t in top {
        let x = mesh.triangle_points(t).iter().map(|p| p[0]).sum::<f64>() / 3.0;
        histogram[(((x + 1.0) * 4.0) as usize).min(7)] += 1;
    }
    println!(
        "top decile of density3 ({} triangles) by centroid x:",
        top.len()
    );
    for (k, n) in histogram.iter().enumerate() {
        let x0 = -1.0 + 0.25 * k as f64;
        println!(
            "  [{x0:5.2}, {:5.2}) {n:5} {}",
            x0 + 0.25,
            "#".repeat(n / 8)
        );
    }
    Ok(())
}
