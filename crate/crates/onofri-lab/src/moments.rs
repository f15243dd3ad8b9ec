//! The second-moment deviation matrix Lambda(u), its Frobenius norm and its
//! O(3) transformation law Lambda(u o A) = A^T Lambda(u) A.

use crate::error::Result;
use crate::field::ScalarField;
use crate::sphere::Rotation;
use nalgebra::Matrix3;

/// Symmetric trace-free 3x3 matrix of normalized second-moment deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMatrix {
    m: Matrix3<f64>,
}

impl MomentMatrix {
    /// Wraps a matrix, debug-checking symmetry and zero trace.
    pub fn new(m: Matrix3<f64>) -> Self {
        debug_assert!((m - m.transpose()).norm() < 1e-12);
        debug_assert!(m.trace().abs() < 1e-10);
        Self { m }
    }

    pub fn zero() -> Self {
        Self {
            m: Matrix3::zeros(),
        }
    }

    pub fn from_diagonal(d: [f64; 3]) -> Self {
        Self::new(Matrix3::from_diagonal(&nalgebra::Vector3::new(
            d[0], d[1], d[2],
        )))
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    /// Eigenvalues (symmetric, so real), ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let sym = nalgebra::SymmetricEigen::new(self.m);
        let mut ev = [sym.eigenvalues[0], sym.eigenvalues[1], sym.eigenvalues[2]];
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev
    }

    pub fn frobenius_distance(&self, other: &MomentMatrix) -> f64 {
        (self.m - other.m).norm()
    }
}

/// Lambda(u): entries avg(e^{2u} (x_i x_j - delta_ij / 3)) / avg(e^{2u}).
///
/// The trace vanishes because sum_i x_i^2 = 1 on the sphere; invariant under
/// u -> u + constant.
pub fn lambda_matrix(u: &ScalarField) -> Result<MomentMatrix> {
    // reuse the overflow guard in exp_mass, then accumulate in one pass
    crate::field::exp_mass(u)?;
    let (mass, sec) = u.fold_composite(
        (0.0f64, Matrix3::<f64>::zeros()),
        |(mass, mut sec), w, v, p| {
            let e = w * (2.0 * v).exp();
            let x = [p.x1, p.x2, p.x3];
            for i in 0..3 {
                for j in 0..3 {
                    sec[(i, j)] += e * x[i] * x[j];
                }
            }
            (mass + e, sec)
        },
    );
    let lam = sec / mass - Matrix3::identity() / 3.0;
    // enforce exact symmetry against rounding
    let lam = (lam + lam.transpose()) * 0.5;
    Ok(MomentMatrix::new(lam))
}

/// Squared Frobenius norm, sum of Lambda_ij^2.
pub fn lambda_norm_sq(lambda: &MomentMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let v = lambda.entry(i, j);
            acc += v * v;
        }
    }
    acc
}

/// The transformation law A^T Lambda A for A in O(3).
pub fn conjugate(lambda: &MomentMatrix, a: &Rotation) -> MomentMatrix {
    let m = a.matrix().transpose() * lambda.matrix() * a.matrix();
    let m = (m + m.transpose()) * 0.5;
    MomentMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::sphere::{build_gauss_grid, Rotation, SpherePoint};
    use crate::spectral::{random_band_limited, synthesize};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn lambda_of_uniform_measure_is_zero() {
        let g = Arc::new(build_gauss_grid(16).unwrap());
        let u = ScalarField::from_fn(g, |_| 0.0).unwrap();
        let lam = lambda_matrix(&u).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(lam.entry(i, j), 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn lambda_shift_invariant() {
        let g = Arc::new(build_gauss_grid(20).unwrap());
        let u = ScalarField::from_fn(g, |p| 0.4 * p.x3 + 0.2 * p.x1 * p.x2).unwrap();
        let a = lambda_matrix(&u).unwrap();
        let b = lambda_matrix(&u.shifted(2.3)).unwrap();
        assert!(a.frobenius_distance(&b) < 1e-12);
    }

    #[test]
    fn norm_of_named_matrices() {
        assert_abs_diff_eq!(lambda_norm_sq(&MomentMatrix::zero()), 0.0);
        let pair = MomentMatrix::from_diagonal([-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]);
        assert_abs_diff_eq!(lambda_norm_sq(&pair), 2.0 / 3.0, epsilon = 1e-15);
        // 1/9 + 1/18 = 1/6
        let triangle = MomentMatrix::from_diagonal([-1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]);
        assert_abs_diff_eq!(lambda_norm_sq(&triangle), 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn conjugate_identity_norm_and_axis_swap() {
        let lam = MomentMatrix::from_diagonal([-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]);
        let id = conjugate(&lam, &Rotation::identity());
        assert!(lam.frobenius_distance(&id) < 1e-15);

        // axis swap 1 <-> 3 (orthogonal, det -1)
        let swap = Rotation::from_rows([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let swapped = conjugate(&lam, &swap);
        let expected = MomentMatrix::from_diagonal([2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]);
        assert!(swapped.frobenius_distance(&expected) < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let axis = nalgebra::Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let rot = Rotation::about_axis(axis, rng.gen_range(0.0..std::f64::consts::TAU));
            let conj = conjugate(&lam, &rot);
            assert_abs_diff_eq!(
                lambda_norm_sq(&conj),
                lambda_norm_sq(&lam),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn equivariance_on_band_limited_field() {
        let g = Arc::new(build_gauss_grid(48).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let e = random_band_limited(8, 0.6, &mut rng);
        let u = synthesize(&e, g).unwrap();
        let lam = lambda_matrix(&u).unwrap();
        assert!(lam.trace().abs() < 1e-10);
        for _ in 0..5 {
            let axis = nalgebra::Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let rot = Rotation::about_axis(axis, rng.gen_range(0.0..std::f64::consts::TAU));
            let composed = u.compose_rotation(&rot).unwrap();
            let lhs = lambda_matrix(&composed).unwrap();
            let rhs = conjugate(&lam, &rot);
            assert!(
                lhs.frobenius_distance(&rhs) < 1e-7,
                "equivariance defect {}",
                lhs.frobenius_distance(&rhs)
            );
        }
    }

    #[test]
    fn eigenvalues_in_admissible_range() {
        let g = Arc::new(build_gauss_grid(24).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let e = random_band_limited(5, rng.gen_range(0.1..1.2), &mut rng);
            let u = synthesize(&e, g.clone()).unwrap();
            let lam = lambda_matrix(&u).unwrap();
            let ev = lam.eigenvalues();
            for v in ev {
                assert!(
                    (-1.0 / 3.0 - 1e-10..=2.0 / 3.0 + 1e-10).contains(&v),
                    "eigenvalue {v} out of [-1/3, 2/3]"
                );
            }
        }
    }

    #[test]
    fn sampled_only_fields_reject_composition() {
        let g = Arc::new(build_gauss_grid(8).unwrap());
        let u = ScalarField::from_samples(g.clone(), vec![0.1; g.len()]).unwrap();
        let rot = Rotation::about_x3(1.0);
        assert!(u.compose_rotation(&rot).is_err());
        let _ = SpherePoint::north_pole();
    }
}
