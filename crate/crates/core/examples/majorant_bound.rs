//! Guaranteed upper bound of the energy error for an arbitrary admissible
//! function, compared with the true gap on Example I.

use two_phase_obstacle::assembly::primal_energy;
use two_phase_obstacle::{example1_spec, optimize_majorant, MajorantOptions, P0Field, P1Field};

fn main() -> two_phase_obstacle::Result<()> {
    let problem = example1_spec();
    let mesh = problem.mesh_at_level(3)?;
    let exact = problem.exact.as_ref().expect("example I has a closed form");

    // some admissible v: boundary values are those of g
    let v = P1Field::interpolate(&mesh, |p| {
        p[0].powi(3) + 0.1 * (3.0 * p[1]).sin() * (1.0 - p[0] * p[0])
    });
    let gap = primal_energy(&mesh, &v, problem.alpha_plus, problem.alpha_minus)? - exact.energy;

    for sweeps in [0, 10, 100, 1000] {
        let m = optimize_majorant(
            &mesh,
            &v,
            &P0Field::zeros(&mesh),
            problem.friedrichs_c,
            problem.alpha_plus,
            problem.alpha_minus,
            &MajorantOptions {
                sweeps,
                ..MajorantOptions::default()
            },
        )?;
        println!(
            "{sweeps:5} sweeps: majorant {:.5} (m1 {:.3e}, m2 {:.3e}, m3 {:.3e})  gap {gap:.5}  ratio {:.2}",
            m.total,
            m.m1,
            m.m2,
            m.m3,
            m.total / gap
        );
    }
    Ok(())
}
