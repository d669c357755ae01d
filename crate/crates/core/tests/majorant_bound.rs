use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use two_phase_obstacle::assembly::primal_energy;
use two_phase_obstacle::majorant::majorant_parts;
use two_phase_obstacle::{
    example1_spec, example2_spec, optimize_majorant, solve_two_phase, DualSolveOptions,
    MajorantOptions, P0Field, P1Field, ProblemSpec, Rt0Field, TriMesh,
};

fn random_admissible(p: &ProblemSpec, mesh: &TriMesh, rng: &mut ChaCha8Rng, scale: f64) -> P1Field {
    let mut v = p.dirichlet_interpolant(mesh);
    for i in mesh.free_nodes() {
        v[i] = rng.gen_range(-scale..scale);
    }
    v
}

fn random_feasible(p: &ProblemSpec, mesh: &TriMesh, rng: &mut ChaCha8Rng) -> P0Field {
    (0..mesh.num_triangles())
        .map(|_| rng.gen_range(-p.alpha_minus..=p.alpha_plus))
        .collect::<Vec<_>>()
        .into()
}

fn sweeps(n: usize) -> MajorantOptions {
    MajorantOptions {
        sweeps: n,
        ..MajorantOptions::default()
    }
}

#[test]
fn bound_holds_for_random_functions() {
    let p = example1_spec();
    let exact = p.exact.as_ref().unwrap().energy;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for level in 1..=3 {
        let mesh = p.mesh_at_level(level).unwrap();
        for scale in [0.1, 1.0, 3.0] {
            let v = random_admissible(&p, &mesh, &mut rng, scale);
            let gap = primal_energy(&mesh, &v, p.alpha_plus, p.alpha_minus).unwrap() - exact;
            let mu0 = random_feasible(&p, &mesh, &mut rng);
            let m = optimize_majorant(
                &mesh,
                &v,
                &mu0,
                p.friedrichs_c,
                p.alpha_plus,
                p.alpha_minus,
                &sweeps(300),
            )
            .unwrap();
            assert!(m.total >= gap, "level {level}: {} < {gap}", m.total);
            assert!(m.history.iter().all(|&t| t >= gap));
        }
    }
}

#[test]
fn bound_holds_for_arbitrary_parameters() {
    // the estimate is valid for every flux, multiplier and beta, optimized or not
    let p = example1_spec();
    let exact = p.exact.as_ref().unwrap().energy;
    let mesh = p.mesh_at_level(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let v = random_admissible(&p, &mesh, &mut rng, 1.5);
        let gap = primal_energy(&mesh, &v, p.alpha_plus, p.alpha_minus).unwrap() - exact;
        let eta: Rt0Field = (0..mesh.num_edges())
            .map(|_| rng.gen_range(-3.0..3.0))
            .collect::<Vec<_>>()
            .into();
        let mu = random_feasible(&p, &mesh, &mut rng);
        let beta = rng.gen_range(0.01..10.0);
        let b = majorant_parts(
            &mesh,
            &v,
            beta,
            &eta,
            &mu,
            p.friedrichs_c,
            p.alpha_plus,
            p.alpha_minus,
        )
        .unwrap();
        assert!(b.total >= gap);
    }
}

#[test]
fn discrete_solutions_are_bounded_on_both_examples() {
    let qp = DualSolveOptions::default();
    let p = example2_spec();
    let reference = solve_two_phase(&p.mesh_at_level(5).unwrap(), &p, &qp)
        .unwrap()
        .primal_energy;
    let mut last = f64::INFINITY;
    for (i, mesh) in p.mesh_hierarchy(4).unwrap().iter().enumerate() {
        let sol = solve_two_phase(mesh, &p, &qp).unwrap();
        let m = optimize_majorant(
            mesh,
            &sol.u_lambda,
            &sol.lambda,
            p.friedrichs_c,
            p.alpha_plus,
            p.alpha_minus,
            &sweeps(2000),
        )
        .unwrap();
        assert!(m.total >= sol.primal_energy - reference, "level {}", i + 1);
        assert!(m.total < last);
        last = m.total;
    }
}

#[test]
fn starting_from_the_discrete_multiplier_pays_off() {
    // once beta reaches its floor the sweeps lock div(eta) to mu, so a poor
    // initial multiplier is never repaired; both results remain valid bounds
    let p = example1_spec();
    let mesh = p.mesh_at_level(3).unwrap();
    let sol = solve_two_phase(&mesh, &p, &DualSolveOptions::default()).unwrap();
    let gap = sol.primal_energy - p.exact.as_ref().unwrap().energy;
    let from_lambda = optimize_majorant(
        &mesh,
        &sol.u_lambda,
        &sol.lambda,
        p.friedrichs_c,
        8.0,
        8.0,
        &sweeps(10_000),
    )
    .unwrap();
    let from_zero = optimize_majorant(
        &mesh,
        &sol.u_lambda,
        &P0Field::zeros(&mesh),
        p.friedrichs_c,
        8.0,
        8.0,
        &sweeps(10_000),
    )
    .unwrap();
    assert!(from_lambda.total >= gap && from_zero.total >= gap);
    assert!(from_lambda.total < from_zero.total);
    assert!(from_lambda.total < 2.5 * gap);
}

#[test]
fn inadmissible_functions_are_still_evaluated() {
    // the majorant only needs v on the mesh; a v violating the boundary data
    // is still evaluated, which is the caller's responsibility
    let p = example1_spec();
    let mesh = p.mesh_at_level(1).unwrap();
    let v = P1Field::zeros(&mesh);
    let m = optimize_majorant(
        &mesh,
        &v,
        &P0Field::zeros(&mesh),
        p.friedrichs_c,
        8.0,
        8.0,
        &sweeps(10),
    )
    .unwrap();
    assert!(m.total.is_finite() && m.total >= 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bound_holds_for_smooth_perturbations(a in -2.0f64..2.0, k in 1.0f64..6.0, b in -1.0f64..1.0, n in 0usize..40) {
        let p = example1_spec();
        let exact = p.exact.as_ref().unwrap().energy;
        let mesh = p.mesh_at_level(2).unwrap();
        let v = P1Field::interpolate(&mesh, |q| {
            q[0].powi(3) + a * (1.0 - q[0] * q[0]) * (k * q[1]).sin() + b * (1.0 - q[0] * q[0])
        });
        let gap = primal_energy(&mesh, &v, 8.0, 8.0).unwrap() - exact;
        let m = optimize_majorant(&mesh, &v, &P0Field::zeros(&mesh), p.friedrichs_c, 8.0, 8.0, &sweeps(n)).unwrap();
        prop_assert!(m.total >= gap);
        prop_assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
