//! Writes the discrete solution, multiplier and majorant densities of one
//! level to a legacy VTK file and reads it back.

use two_phase_obstacle::io::{parse_vtk, write_vtk};
use two_phase_obstacle::{
    example2_spec, optimize_majorant, solve_two_phase, DualSolveOptions, MajorantOptions,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = example2_spec();
    let mesh = problem.mesh_at_level(3)?;
    let sol = solve_two_phase(&mesh, &problem, &DualSolveOptions::default())?;
    let m = optimize_majorant(
        &mesh,
        &sol.u_lambda,
        &sol.lambda,
        problem.friedrichs_c,
        problem.alpha_plus,
        problem.alpha_minus,
        &MajorantOptions {
            sweeps: 200,
            ..MajorantOptions::default()
        },
    )?;

    let path = std::env::temp_dir().join("two_phase_example2_level3.vtk");
    write_vtk(
        &mesh,
        &[("u_lambda", &sol.u_lambda)],
        &[("lambda", &sol.lambda), ("density3", &m.density3)],
        &path,
    )?;
    let text = std::fs::read_to_string(&path)?;
    let parsed = parse_vtk(&text)?;
    println!(
        "{}: {} points, {} cells, point fields {:?}, cell fields {:?}",
        path.display(),
        parsed.points.len(),
        parsed.cells.len(),
        parsed.point_data.iter().map(|(n, _)| n).collect::<Vec<_>>(),
        parsed.cell_data.iter().map(|(n, _)| n).collect::<Vec<_>>()
    );
    Ok(())
}
