use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use two_phase_obstacle::assembly::primal_energy;
use two_phase_obstacle::dual_solver::{
    build_dual_objective, eval_dual_energy, eval_dual_gradient, reconstruct_primal, solve_box_qp,
};
use two_phase_obstacle::{
    example1_spec, example2_spec, solve_two_phase, DualSolveOptions, P0Field, P1Field, ProblemSpec,
};

fn random_multiplier(p: &ProblemSpec, n: usize, rng: &mut ChaCha8Rng) -> P0Field {
    (0..n)
        .map(|_| rng.gen_range(-p.alpha_minus..p.alpha_plus))
        .collect::<Vec<_>>()
        .into()
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [example1_spec(), example2_spec()] {
        let mesh = p.mesh_at_level(2).unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        let mu = random_multiplier(&p, mesh.num_triangles(), &mut rng);
        let grad = eval_dual_gradient(&obj, &mu).unwrap();
        for _ in 0..20 {
            let d: Vec<f64> = (0..mesh.num_triangles())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let eps = 1e-3;
            let shifted = |s: f64| -> f64 {
                let m: P0Field = mu
                    .iter()
                    .zip(&d)
                    .map(|(a, b)| a + s * b)
                    .collect::<Vec<_>>()
                    .into();
                eval_dual_energy(&obj, &m).unwrap()
            };
            let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
            let exact: f64 = grad.iter().zip(&d).map(|(g, x)| g * x).sum();
            assert!(
                (fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3),
                "{}: {fd} vs {exact}",
                p.name
            );
        }
    }
}

#[test]
fn gradient_is_the_mean_of_the_reconstruction() {
    let p = example2_spec();
    let mesh = p.mesh_at_level(2).unwrap();
    let obj = build_dual_objective(&mesh, &p).unwrap();
    let mu = random_multiplier(&p, mesh.num_triangles(), &mut ChaCha8Rng::seed_from_u64(3));
    let u = reconstruct_primal(&obj, &mu).unwrap();
    let grad = eval_dual_gradient(&obj, &mu).unwrap();
    let means = u.triangle_means(&mesh);
    for t in 0..mesh.num_triangles() {
        assert!((grad[t] - mesh.area(t) * means[t]).abs() < 1e-12);
    }
}

#[test]
fn weak_duality_for_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in [example1_spec(), example2_spec()] {
        let mesh = p.mesh_at_level(2).unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        let g = p.dirichlet_interpolant(&mesh);
        let free = mesh.free_nodes();
        for _ in 0..25 {
            let mu = random_multiplier(&p, mesh.num_triangles(), &mut rng);
            let mut v: P1Field = g.clone();
            for &i in &free {
                v[i] = rng.gen_range(-2.0..2.0);
            }
            let dual = eval_dual_energy(&obj, &mu).unwrap();
            let primal = primal_energy(&mesh, &v, p.alpha_plus, p.alpha_minus).unwrap();
            assert!(dual <= primal + 1e-12, "{dual} > {primal}");
        }
    }
}

#[test]
fn solution_does_not_depend_on_the_start() {
    let opts = DualSolveOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for p in [example1_spec(), example2_spec()] {
        let mesh = p.mesh_at_level(3).unwrap();
        let obj = build_dual_objective(&mesh, &p).unwrap();
        let base = solve_box_qp(&obj, &P0Field::zeros(&mesh), &opts).unwrap();
        let u0 = reconstruct_primal(&obj, &base.mu).unwrap();
        let i0 = eval_dual_energy(&obj, &base.mu).unwrap();
        for _ in 0..3 {
            let start = random_multiplier(&p, mesh.num_triangles(), &mut rng);
            let other = solve_box_qp(&obj, &start, &opts).unwrap();
            assert!(other.converged && other.kkt_residual <= opts.tol);
            let i1 = eval_dual_energy(&obj, &other.mu).unwrap();
            assert!((i1 - i0).abs() <= 10.0 * opts.tol, "{i0} vs {i1}");
            let u1 = reconstruct_primal(&obj, &other.mu).unwrap();
            let diff = u0
                .iter()
                .zip(u1.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-4, "{diff}");
        }
    }
}

#[test]
fn dual_iterates_increase() {
    let p = example1_spec();
    let mesh = p.mesh_at_level(3).unwrap();
    let obj = build_dual_objective(&mesh, &p).unwrap();
    let qp = solve_box_qp(&obj, &P0Field::zeros(&mesh), &DualSolveOptions::default()).unwrap();
    for w in qp.dual_history.windows(2) {
        assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
    }
}

#[test]
fn energies_decrease_under_refinement() {
    let opts = DualSolveOptions::default();
    for p in [example1_spec(), example2_spec()] {
        let mut last = f64::INFINITY;
        for mesh in p.mesh_hierarchy(4).unwrap() {
            let sol = solve_two_phase(&mesh, &p, &opts).unwrap();
            assert!(sol.converged && sol.kkt_residual <= 1e-9);
            assert!(sol.dual_energy <= sol.primal_energy);
            assert!(sol.primal_energy < last);
            last = sol.primal_energy;
        }
    }
}

#[test]
fn multipliers_stay_in_the_box() {
    let p = example2_spec();
    let mesh = p.mesh_at_level(3).unwrap();
    let sol = solve_two_phase(&mesh, &p, &DualSolveOptions::default()).unwrap();
    assert!(sol
        .lambda
        .iter()
        .all(|&l| (-p.alpha_minus..=p.alpha_plus).contains(&l)));
    // by symmetry of the data (g(-x, -y) = -g(x, y)) the solution is odd
    for (i, q) in mesh.vertices().iter().enumerate() {
        let j = mesh
            .vertices()
            .iter()
            .position(|r| (r[0] + q[0]).abs() < 1e-12 && (r[1] + q[1]).abs() < 1e-12);
        if let Some(j) = j {
            assert!((sol.u_lambda[i] + sol.u_lambda[j]).abs() < 1e-6);
        }
    }
}
