//! The deviation matrix Lambda(u) and its O(3) transformation law
//! Lambda(u o A) = A^T Lambda(u) A, checked on a random band-limited field.

use onofri_lab::moments::{conjugate, lambda_matrix, lambda_norm_sq};
use onofri_lab::sphere::{build_gauss_grid, Rotation};
use onofri_lab::spectral::{random_band_limited, synthesize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn main() -> onofri_lab::Result<()> {
    let grid = Arc::new(build_gauss_grid(48)?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let e = random_band_limited(8, 0.5, &mut rng);
    let u = synthesize(&e, grid)?;

    let lambda = lambda_matrix(&u)?;
    println!("Lambda(u) =");
    for i in 0..3 {
        println!(
            "  [{:+.8e} {:+.8e} {:+.8e}]",
            lambda.entry(i, 0),
            lambda.entry(i, 1),
            lambda.entry(i, 2)
        );
    }
    println!("trace      = {:+.3e}", lambda.trace());
    println!("|Lambda|^2 = {:.10}", lambda_norm_sq(&lambda));

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let axis = nalgebra::Vector3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let rot = Rotation::about_axis(axis, rng.gen_range(0.0..std::f64::consts::TAU));
        let composed = u.compose_rotation(&rot)?;
        let defect = lambda_matrix(&composed)?.frobenius_distance(&conjugate(&lambda, &rot));
        worst = worst.max(defect);
    }
    println!("max equivariance defect over 20 rotations = {worst:.3e}");
    Ok(())
}
