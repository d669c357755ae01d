//! Builds the nested mesh hierarchies of both benchmark problems.

use two_phase_obstacle::{example1_spec, example2_spec};

fn main() -> two_phase_obstacle::Result<()> {
    for problem in [example1_spec(), example2_spec()] {
        println!("{}", problem.name);
        for (i, mesh) in problem.mesh_hierarchy(5)?.iter().enumerate() {
            println!(
                "  level {}: {:5} nodes {:5} edges {:5} triangles  h = {:.4}  area = {}",
                i + 1,
                mesh.num_nodes(),
                mesh.num_edges(),
                mesh.num_triangles(),
                mesh.mesh_size(),
                mesh.total_area()
            );
        }
    }
    Ok(())
}
