//! Spectral reconstruction against the dense least-squares oracle.

mod common;

use common::dense::dense_reconstruct;
use common::random_case_on;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trigokit::compat::{reconstruct_displacement, symmetrized_gradient, DEFAULT_RECONSTRUCT_TOL};
use trigokit::field::{DisplacementField, TorusGrid};
use trigokit::wells::SymMat3;

fn max_diff(a: &[Vec<f64>; 3], b: &[Vec<f64>; 3]) -> f64 {
    (0..3).flat_map(|c| a[c].iter().zip(&b[c]).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max)
}

#[test]
fn generated_fields_on_4_cubed() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..12 {
        let case = random_case_on(&mut rng, [4, 4, 4]);
        let (e, _) = case.generate();
        let spectral = reconstruct_displacement(&e, DEFAULT_RECONSTRUCT_TOL).unwrap();
        let dense = dense_reconstruct(&e);
        assert!(max_diff(&spectral.periodic, &dense) <= 1e-9, "{}", case.label());
    }
}

#[test]
fn random_displacements_on_4_cubed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = TorusGrid::new([4, 4, 4], [1.0, 2.0, 0.5]).unwrap();
    for _ in 0..4 {
        let mean = SymMat3([0; 6].map(|_| rng.gen_range(-1.0..1.0)));
        let mut u = DisplacementField::affine(grid, mean);
        for c in 0..3 {
            u.periodic[c] = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
        u.remove_periodic_mean();
        let e = symmetrized_gradient(&u);
        let dense = dense_reconstruct(&e);
        assert!(max_diff(&u.periodic, &dense) <= 1e-9);
        let spectral = reconstruct_displacement(&e, DEFAULT_RECONSTRUCT_TOL).unwrap();
        assert!(max_diff(&spectral.periodic, &dense) <= 1e-9);
    }
}
