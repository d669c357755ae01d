use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use two_phase_obstacle::assembly::{compound_terms, primal_energy};
use two_phase_obstacle::{example1_spec, P1Field};

#[test]
fn compound_terms_sum_to_the_energy_gap() {
    let p = example1_spec();
    let exact = p.exact.as_ref().unwrap();
    let mesh = p.mesh_at_level(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let mut v = p.dirichlet_interpolant(&mesh);
        for i in mesh.free_nodes() {
            v[i] = rng.gen_range(-1.5..1.5);
        }
        let gap = primal_energy(&mesh, &v, 8.0, 8.0).unwrap() - exact.energy;
        let c = compound_terms(&mesh, &v, exact, 8.0, 8.0).unwrap();
        assert!(
            (c.d_f + c.d_g - gap).abs() < 1e-8,
            "{} + {} vs {gap}",
            c.d_f,
            c.d_g
        );
        assert!(c.d_f >= -1e-12 && c.d_g >= 0.0);
        assert!(c.d_g <= gap + 1e-12);
    }
}

#[test]
fn terms_vanish_as_the_interpolant_converges() {
    let p = example1_spec();
    let exact = p.exact.as_ref().unwrap();
    let mut last = f64::INFINITY;
    for level in 2..=5 {
        let mesh = p.mesh_at_level(level).unwrap();
        let v = P1Field::interpolate(&mesh, |q| (exact.u)(q));
        let c = compound_terms(&mesh, &v, exact, 8.0, 8.0).unwrap();
        let total = c.d_f + c.d_g;
        assert!(total < last / 3.0, "level {level}: {total}");
        last = total;
    }
}
