//! Discrete concentration measures, their limiting Lambda matrices, and
//! numerical recovery of the sharp thresholds 2/3 (antipodal pair), 1/6
//! (regular triangle; orthogonal antipodal pairs under even symmetry) and 0
//! (regular tetrahedron) with the extremal configurations.

use crate::error::{Error, Result};
use crate::moments::{lambda_norm_sq, MomentMatrix};
use crate::sphere::{geodesic_distance, rotation_mapping, Rotation, SpherePoint};
use nalgebra::{DMatrix, DVector, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// A discrete probability measure sum nu_i delta_{p_i} on the sphere.
#[derive(Debug, Clone)]
pub struct PointMeasure {
    atoms: Vec<(f64, SpherePoint)>,
}

impl PointMeasure {
    /// Requires positive weights summing to 1 within 1e-12 and pairwise
    /// distinct atoms.
    pub fn new(atoms: Vec<(f64, SpherePoint)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("measure needs at least one atom".into()));
        }
        let total: f64 = atoms.iter().map(|(nu, _)| nu).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        if atoms.iter().any(|(nu, _)| *nu <= 0.0) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                if geodesic_distance(&atoms[i].1, &atoms[j].1) < 1e-10 {
                    return Err(Error::InvalidArgument(format!(
                        "atoms {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, SpherePoint)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn rotated(&self, rot: &Rotation) -> PointMeasure {
        PointMeasure {
            atoms: self
                .atoms
                .iter()
                .map(|(nu, p)| (*nu, rot.apply(p)))
                .collect(),
        }
    }
}

/// The center of mass sum nu_i p_i (zero for concentration limits of
/// first-moment-constrained sequences).
pub fn centroid(mu: &PointMeasure) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (nu, p) in mu.atoms() {
        c[0] += nu * p.x1;
        c[1] += nu * p.x2;
        c[2] += nu * p.x3;
    }
    c
}

/// The limiting deviation matrix sum nu_i p_i p_i^T - I/3.
pub fn lambda_infty(mu: &PointMeasure) -> MomentMatrix {
    let mut m = Matrix3::zeros();
    for (nu, p) in mu.atoms() {
        let x = [p.x1, p.x2, p.x3];
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += nu * x[i] * x[j];
            }
        }
    }
    MomentMatrix::new(m - Matrix3::identity() / 3.0)
}

/// Outcome of the configuration search.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub infimum: f64,
    pub minimizer: PointMeasure,
    /// finite-difference gradient norm of the penalized objective at the
    /// best parameters
    pub stationarity_residual: f64,
}

/// JSON record for one configuration search.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigSearchRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub even: bool,
    pub infimum: f64,
    pub atoms: Vec<AtomRecord>,
    pub stationarity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomRecord {
    pub nu: f64,
    pub p: [f64; 3],
}

impl SearchOutcome {
    pub fn to_record(&self, n: usize, even: bool) -> ConfigSearchRecord {
        ConfigSearchRecord {
            n,
            even,
            infimum: self.infimum,
            atoms: self
                .minimizer
                .atoms()
                .iter()
                .map(|(nu, p)| AtomRecord {
                    nu: *nu,
                    p: [p.x1, p.x2, p.x3],
                })
                .collect(),
            stationarity_residual: self.stationarity_residual,
        }
    }
}

const CENTROID_PENALTY: f64 = 1e6;

/// Search parameterization: points by spherical angles, weights by a
/// softmax-style positive normalization. In the even-symmetric case atoms
/// come in antipodal pairs with equal weights and the centroid vanishes
/// identically.
struct SearchSpace {
    n: usize,
    even: bool,
}

impl SearchSpace {
    fn point_count(&self) -> usize {
        if self.even {
            self.n / 2
        } else {
            self.n
        }
    }

    fn dim(&self) -> usize {
        3 * self.point_count()
    }

    fn decode(&self, x: &[f64]) -> (Vec<f64>, Vec<SpherePoint>) {
        let m = self.point_count();
        let mut points = Vec::with_capacity(m);
        for i in 0..m {
            let theta = x[2 * i];
            let phi = x[2 * i + 1];
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            points.push(SpherePoint {
                x1: st * cp,
                x2: st * sp,
                x3: ct,
            });
        }
        let mut weights: Vec<f64> = x[2 * m..].iter().map(|b| b.exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        (weights, points)
    }

    /// Penalized objective: |Lambda_infty|^2 plus a quadratic centroid
    /// penalty (identically satisfied in the even case).
    fn objective(&self, x: &[f64]) -> f64 {
        let (weights, points) = self.decode(x);
        let mut sec = [[0.0f64; 3]; 3];
        let mut cen = [0.0f64; 3];
        for (w, p) in weights.iter().zip(&points) {
            let c = [p.x1, p.x2, p.x3];
            for i in 0..3 {
                for j in 0..3 {
                    sec[i][j] += w * c[i] * c[j];
                }
            }
            if !self.even {
                for (ci, pi) in cen.iter_mut().zip(&c) {
                    *ci += w * pi;
                }
            }
        }
        let mut f = 0.0;
        for (i, row) in sec.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                let v = s - if i == j { 1.0 / 3.0 } else { 0.0 };
                f += v * v;
            }
        }
        if !self.even {
            let c2 = cen[0] * cen[0] + cen[1] * cen[1] + cen[2] * cen[2];
            f += CENTROID_PENALTY * c2;
        }
        f
    }

    fn measure(&self, x: &[f64]) -> Result<PointMeasure> {
        let (weights, points) = self.decode(x);
        let atoms: Vec<(f64, SpherePoint)> = if self.even {
            weights
                .iter()
                .zip(&points)
                .flat_map(|(w, p)| [(w / 2.0, *p), (w / 2.0, p.antipode())])
                .collect()
        } else {
            weights.iter().copied().zip(points).collect()
        };
        PointMeasure::new(atoms)
    }
}

/// Plain Nelder-Mead with standard coefficients.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    scale: f64,
    max_iter: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    for _ in 0..max_iter {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];
        if (values[worst] - values[best]).abs() <= ftol * (1.0 + values[best].abs()) {
            break;
        }
        // centroid of all but worst
        let mut cen = vec![0.0; dim];
        for &i in &order[..dim] {
            for (c, v) in cen.iter_mut().zip(&simplex[i]) {
                *c += v / dim as f64;
            }
        }
        let xr: Vec<f64> = cen
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = f(&xr);
        if fr < values[best] {
            let xe: Vec<f64> = cen
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let fe = f(&xe);
            if fe < fr {
                simplex[worst] = xe;
                values[worst] = fe;
            } else {
                simplex[worst] = xr;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = xr;
            values[worst] = fr;
        } else {
            let xc: Vec<f64> = cen
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect();
            let fc = f(&xc);
            if fc < values[worst] {
                simplex[worst] = xc;
                values[worst] = fc;
            } else {
                // shrink toward best
                let bx = simplex[best].clone();
                for i in 0..=dim {
                    if i == best {
                        continue;
                    }
                    for (v, b) in simplex[i].iter_mut().zip(&bx) {
                        *v = b + 0.5 * (*v - b);
                    }
                    values[i] = f(&simplex[i]);
                }
            }
        }
    }
    let mut best_i = 0;
    for i in 1..=dim {
        if values[i] < values[best_i] {
            best_i = i;
        }
    }
    (simplex[best_i].clone(), values[best_i])
}

fn polish<F: Fn(&[f64]) -> f64>(f: &F, x0: Vec<f64>, dim: usize) -> (Vec<f64>, f64) {
    let mut x = x0;
    let mut v = f(&x);
    for scale in [0.5, 5e-2, 5e-4, 5e-6, 5e-8] {
        let (xn, vn) = nelder_mead(f, &x, scale, 600 * dim, 1e-16);
        if vn < v {
            x = xn;
            v = vn;
        }
    }
    (x, v)
}

fn stationarity_residual<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let h = 1e-6;
    let mut norm_sq = 0.0;
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        let g = (fp - fm) / (2.0 * h);
        norm_sq += g * g;
    }
    norm_sq.sqrt()
}

/// Least-squares projection of the weights onto { sum nu = 1, sum nu p = 0 }
/// at fixed atom locations (minimum-norm correction via pseudo-inverse).
fn project_weights(points: &[SpherePoint], weights: &[f64]) -> Option<Vec<f64>> {
    let n = points.len();
    let mut a = DMatrix::zeros(4, n);
    for (j, p) in points.iter().enumerate() {
        a[(0, j)] = p.x1;
        a[(1, j)] = p.x2;
        a[(2, j)] = p.x3;
        a[(3, j)] = 1.0;
    }
    let nu0 = DVector::from_column_slice(weights);
    let b = DVector::from_column_slice(&[0.0, 0.0, 0.0, 1.0]);
    let resid = &a * &nu0 - b;
    let svd = a.clone().svd(true, true);
    let correction = svd.solve(&resid, 1e-12).ok()?;
    let nu = nu0 - correction;
    if nu.iter().any(|v| *v <= 0.0) {
        return None;
    }
    Some(nu.iter().copied().collect())
}

/// Canonical pose: heaviest atom to the north pole, next atom rotated into
/// the half-plane {x1 = 0, x2 >= 0}.
fn canonicalize(mu: &PointMeasure) -> PointMeasure {
    let mut atoms = mu.atoms().to_vec();
    atoms.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap()
            .then(b.1.x3.partial_cmp(&a.1.x3).unwrap())
            .then(b.1.x2.partial_cmp(&a.1.x2).unwrap())
            .then(b.1.x1.partial_cmp(&a.1.x1).unwrap())
    });
    let rot1 = rotation_mapping(&atoms[0].1, &SpherePoint::north_pole());
    let mut atoms: Vec<(f64, SpherePoint)> =
        atoms.iter().map(|(nu, p)| (*nu, rot1.apply(p))).collect();
    // azimuthal alignment using the first atom with nonzero latitude component
    if let Some((_, q)) = atoms[1..]
        .iter()
        .find(|(_, q)| (q.x1 * q.x1 + q.x2 * q.x2).sqrt() > 1e-8)
    {
        let angle = q.x2.atan2(q.x1);
        let rot2 = Rotation::about_x3(std::f64::consts::FRAC_PI_2 - angle);
        atoms = atoms.iter().map(|(nu, p)| (*nu, rot2.apply(p))).collect();
    }
    PointMeasure { atoms }
}

/// Minimizes |Lambda_infty(mu)|^2 over centered measures with N atoms by
/// multi-start Nelder-Mead (default 200 starts, seed 0).
///
/// When `even_symmetric` is set, atoms come in antipodal pairs with equal
/// weights. N = 1 cannot be centered and is rejected; N = 2 is returned
/// analytically (the centroid constraint forces an antipodal pair with
/// weights 1/2, so the objective is constantly 2/3).
pub fn min_lambda_over_configs(n: usize, even_symmetric: bool) -> Result<SearchOutcome> {
    min_lambda_over_configs_with(n, even_symmetric, 200, 0)
}

/// As [`min_lambda_over_configs`] with explicit start count and seed.
pub fn min_lambda_over_configs_with(
    n: usize,
    even_symmetric: bool,
    starts: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if n < 2 {
        return Err(Error::Infeasible(format!(
            "N = {n}: a single atom cannot have zero centroid"
        )));
    }
    if even_symmetric && !n.is_multiple_of(2) {
        return Err(Error::Infeasible(format!(
            "N = {n}: even-symmetric measures need an even atom count"
        )));
    }
    if n == 2 {
        let minimizer = PointMeasure::new(vec![
            (0.5, SpherePoint::north_pole()),
            (0.5, SpherePoint::north_pole().antipode()),
        ])?;
        return Ok(SearchOutcome {
            infimum: 2.0 / 3.0,
            minimizer,
            stationarity_residual: 0.0,
        });
    }

    let space = SearchSpace {
        n,
        even: even_symmetric,
    };
    let dim = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inits: Vec<Vec<f64>> = (0..starts)
        .map(|_| {
            let m = space.point_count();
            let mut x = vec![0.0; dim];
            for i in 0..m {
                let t: f64 = rng.gen_range(-1.0..1.0);
                x[2 * i] = t.acos();
                x[2 * i + 1] = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
            }
            for b in &mut x[2 * m..] {
                *b = rng.gen_range(-0.5..0.5);
            }
            x
        })
        .collect();

    let objective = |x: &[f64]| space.objective(x);
    let best = inits
        .par_iter()
        .enumerate()
        .map(|(i, x0)| {
            let (x, v) = polish(&objective, x0.clone(), dim);
            (v, i, x)
        })
        .reduce_with(|a, b| {
            if (a.0, a.1) <= (b.0, b.1) {
                a
            } else {
                b
            }
        })
        .expect("at least one start");

    let (_, _, x_best) = best;
    let stationarity = stationarity_residual(&objective, &x_best);
    let (weights, points) = space.decode(&x_best);

    // exact weight projection at fixed locations, then report the true
    // (unpenalized) objective of the projected measure
    let mu = if even_symmetric {
        space.measure(&x_best)?
    } else {
        let projected = project_weights(&points, &weights);
        match projected {
            Some(nu) => PointMeasure::new(nu.into_iter().zip(points).collect())?,
            None => space.measure(&x_best)?,
        }
    };
    let infimum = lambda_norm_sq(&lambda_infty(&mu));
    Ok(SearchOutcome {
        infimum,
        minimizer: canonicalize(&mu),
        stationarity_residual: stationarity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn triangle_measure() -> PointMeasure {
        let s = 3f64.sqrt() / 2.0;
        PointMeasure::new(vec![
            (1.0 / 3.0, SpherePoint::north_pole()),
            (1.0 / 3.0, SpherePoint::new(0.0, s, -0.5).unwrap()),
            (1.0 / 3.0, SpherePoint::new(0.0, -s, -0.5).unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn centroid_values() {
        let pair = PointMeasure::new(vec![
            (0.5, SpherePoint::north_pole()),
            (0.5, SpherePoint::north_pole().antipode()),
        ])
        .unwrap();
        assert!(centroid(&pair).iter().all(|c| c.abs() < 1e-15));
        assert!(centroid(&triangle_measure())
            .iter()
            .all(|c| c.abs() < 1e-15));
        let single = PointMeasure::new(vec![(1.0, SpherePoint::north_pole())]).unwrap();
        assert_abs_diff_eq!(centroid(&single)[2], 1.0);
    }

    #[test]
    fn lambda_infty_named_configurations() {
        let pair = PointMeasure::new(vec![
            (0.5, SpherePoint::north_pole()),
            (0.5, SpherePoint::north_pole().antipode()),
        ])
        .unwrap();
        let lam = lambda_infty(&pair);
        let expected = MomentMatrix::from_diagonal([-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]);
        assert!(lam.frobenius_distance(&expected) < 1e-14);
        assert_abs_diff_eq!(lambda_norm_sq(&lam), 2.0 / 3.0, epsilon = 1e-14);

        let lam3 = lambda_infty(&triangle_measure());
        let expected3 = MomentMatrix::from_diagonal([-1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]);
        assert!(lam3.frobenius_distance(&expected3) < 1e-14);
        assert_abs_diff_eq!(lambda_norm_sq(&lam3), 1.0 / 6.0, epsilon = 1e-14);

        // regular tetrahedron: sum p p^T = (4/3) I, so Lambda vanishes
        let tetra = PointMeasure::new(
            crate::bubble::tetrahedron_vertices()
                .iter()
                .map(|p| (0.25, *p))
                .collect(),
        )
        .unwrap();
        let lam4 = lambda_infty(&tetra);
        assert!(lam4.frobenius_distance(&MomentMatrix::zero()) < 1e-14);
    }

    #[test]
    fn lambda_infty_equivariance() {
        // pushing the atoms forward by A matches conjugation by A^T
        let mu = triangle_measure();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let axis = nalgebra::Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let rot = Rotation::about_axis(axis, rng.gen_range(0.0..std::f64::consts::TAU));
            let lhs = lambda_infty(&mu.rotated(&rot));
            let rhs = crate::moments::conjugate(&lambda_infty(&mu), &rot.transpose());
            assert!(lhs.frobenius_distance(&rhs) < 1e-12);
        }
    }

    #[test]
    fn centered_triples_respect_paper_bound() {
        // random centered 3-atom measures satisfy |Lambda|^2 >= 1/6; a
        // centered triple must be coplanar with the origin, so sample the
        // atoms on a random great circle and solve for the weights
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut tested = 0;
        let mut attempts = 0;
        while tested < 50 && attempts < 20_000 {
            attempts += 1;
            let axis: nalgebra::Vector3<f64> = nalgebra::Vector3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if axis.norm() < 1e-3 {
                continue;
            }
            let n = axis.normalize();
            let e1 = if n.z.abs() < 0.9 {
                nalgebra::Vector3::new(0.0, 0.0, 1.0).cross(&n).normalize()
            } else {
                nalgebra::Vector3::new(1.0, 0.0, 0.0).cross(&n).normalize()
            };
            let e2 = n.cross(&e1);
            let pts: Vec<SpherePoint> = (0..3)
                .map(|_| {
                    let th: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
                    let v = th.cos() * e1 + th.sin() * e2;
                    SpherePoint::normalized(v.x, v.y, v.z).unwrap()
                })
                .collect();
            // weights from { sum nu = 1, sum nu p = 0 } restricted to the plane
            let a = nalgebra::Matrix3::new(
                pts[0].to_vector().dot(&e1),
                pts[1].to_vector().dot(&e1),
                pts[2].to_vector().dot(&e1),
                pts[0].to_vector().dot(&e2),
                pts[1].to_vector().dot(&e2),
                pts[2].to_vector().dot(&e2),
                1.0,
                1.0,
                1.0,
            );
            let Some(nu) = a.lu().solve(&nalgebra::Vector3::new(0.0, 0.0, 1.0)) else {
                continue;
            };
            if nu.iter().any(|v| *v <= 1e-6) {
                continue; // origin outside the spherical triangle
            }
            let mu = match PointMeasure::new(
                nu.iter().copied().zip(pts).collect::<Vec<_>>(),
            ) {
                Ok(m) => m,
                Err(_) => continue,
            };
            assert!(centroid(&mu).iter().all(|v| v.abs() < 1e-9));
            let val = lambda_norm_sq(&lambda_infty(&mu));
            assert!(val >= 1.0 / 6.0 - 1e-9, "violation: {val}");
            tested += 1;
        }
        assert!(tested >= 50, "only {tested} feasible triples in {attempts} attempts");
    }

    #[test]
    fn search_rejects_infeasible() {
        assert!(matches!(
            min_lambda_over_configs(1, false).unwrap_err(),
            Error::Infeasible(_)
        ));
        assert!(min_lambda_over_configs(3, true).is_err());
    }

    #[test]
    fn search_n2_analytic() {
        let out = min_lambda_over_configs(2, false).unwrap();
        assert_abs_diff_eq!(out.infimum, 2.0 / 3.0);
        let atoms = out.minimizer.atoms();
        assert_abs_diff_eq!(atoms[0].0, 0.5);
        assert!(geodesic_distance(&atoms[0].1, &atoms[1].1) > std::f64::consts::PI - 1e-12);
    }

    #[test]
    fn search_n3_finds_triangle() {
        let out = min_lambda_over_configs_with(3, false, 60, 1).unwrap();
        assert!((out.infimum - 1.0 / 6.0).abs() < 1e-6, "inf {}", out.infimum);
        let atoms = out.minimizer.atoms();
        for (nu, _) in atoms {
            assert!((nu - 1.0 / 3.0).abs() < 1e-4, "weight {nu}");
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let dot = atoms[i].1.dot(&atoms[j].1);
                assert!((dot + 0.5).abs() < 1e-4, "dot {dot}");
            }
        }
        // canonical pose: first atom at the north pole
        assert!(atoms[0].1.x3 > 1.0 - 1e-9);
    }

    #[test]
    fn search_n4_free_reaches_zero() {
        let out = min_lambda_over_configs_with(4, false, 60, 2).unwrap();
        assert!(out.infimum < 1e-10, "inf {}", out.infimum);
    }

    #[test]
    fn search_n4_even_orthogonal_pairs() {
        let out = min_lambda_over_configs_with(4, true, 60, 3).unwrap();
        assert!((out.infimum - 1.0 / 6.0).abs() < 1e-6, "inf {}", out.infimum);
        let atoms = out.minimizer.atoms();
        assert_eq!(atoms.len(), 4);
        for (nu, _) in atoms {
            assert!((nu - 0.25).abs() < 1e-4);
        }
        // two antipodal pairs, orthogonal to each other
        let p0 = atoms[0].1;
        let mut has_antipode = false;
        let mut has_orthogonal = 0;
        for (_, q) in &atoms[1..] {
            let dot = p0.dot(q);
            if dot < -1.0 + 1e-6 {
                has_antipode = true;
            } else if dot.abs() < 1e-3 {
                has_orthogonal += 1;
            }
        }
        assert!(has_antipode && has_orthogonal == 2);
    }
}
