//! Cut-off bubble test functions concentrating exponential mass at named
//! point configurations, and numerical verification of their asymptotic laws
//! (exponential mass ~ N nu / (4 eps^2), Dirichlet energy ~ 8 pi N log(1/eps),
//! vanishing first moments, limiting Lambda matrices).

use crate::concentration::{lambda_infty, PointMeasure};
use crate::error::{Error, Result};
use crate::field::{dirichlet_energy, exp_first_moments, exp_mass, mean_value, ScalarField};
use crate::moments::{lambda_matrix, lambda_norm_sq, MomentMatrix};
use crate::sphere::{
    build_cap_patches, build_gauss_grid, geodesic_distance, QuadratureGrid, SpherePoint,
};
use std::sync::Arc;

/// Default cutoff radius; all named configurations keep 4*delta below their
/// minimum center separation (pi/2 for the octahedron).
pub const DEFAULT_DELTA: f64 = 0.35;

/// Default cap resolution.
pub const DEFAULT_CAP_RADIAL: usize = 160;
pub const DEFAULT_CAP_ANGULAR: usize = 64;

/// Named concentration configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BubbleConfig {
    Pair,
    Triangle,
    Tetrahedron,
    Octahedron,
}

impl BubbleConfig {
    pub fn name(&self) -> &'static str {
        match self {
            BubbleConfig::Pair => "pair",
            BubbleConfig::Triangle => "triangle",
            BubbleConfig::Tetrahedron => "tetrahedron",
            BubbleConfig::Octahedron => "octahedron",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pair" => Ok(BubbleConfig::Pair),
            "triangle" => Ok(BubbleConfig::Triangle),
            "tetrahedron" | "tetra" => Ok(BubbleConfig::Tetrahedron),
            "octahedron" | "octa" => Ok(BubbleConfig::Octahedron),
            other => Err(Error::InvalidArgument(format!(
                "unknown configuration '{other}'"
            ))),
        }
    }

    pub fn centers(&self) -> Vec<SpherePoint> {
        match self {
            BubbleConfig::Pair => pair_vertices(),
            BubbleConfig::Triangle => triangle_vertices(),
            BubbleConfig::Tetrahedron => tetrahedron_vertices(),
            BubbleConfig::Octahedron => octahedron_vertices(),
        }
    }

    /// Mass parameter nu splitting unit mass equally over the centers.
    pub fn nu(&self) -> f64 {
        1.0 / self.centers().len() as f64
    }

    pub fn all() -> [BubbleConfig; 4] {
        [
            BubbleConfig::Pair,
            BubbleConfig::Triangle,
            BubbleConfig::Tetrahedron,
            BubbleConfig::Octahedron,
        ]
    }
}

pub fn pair_vertices() -> Vec<SpherePoint> {
    vec![
        SpherePoint::north_pole(),
        SpherePoint::north_pole().antipode(),
    ]
}

pub fn triangle_vertices() -> Vec<SpherePoint> {
    let s = 3f64.sqrt() / 2.0;
    vec![
        SpherePoint::north_pole(),
        SpherePoint {
            x1: 0.0,
            x2: s,
            x3: -0.5,
        },
        SpherePoint {
            x1: 0.0,
            x2: -s,
            x3: -0.5,
        },
    ]
}

pub fn tetrahedron_vertices() -> Vec<SpherePoint> {
    let y = 2f64.sqrt() / 3.0;
    let x = (2.0 / 3.0f64).sqrt();
    vec![
        SpherePoint::north_pole(),
        SpherePoint {
            x1: 0.0,
            x2: 2.0 * y,
            x3: -1.0 / 3.0,
        },
        SpherePoint {
            x1: x,
            x2: -y,
            x3: -1.0 / 3.0,
        },
        SpherePoint {
            x1: -x,
            x2: -y,
            x3: -1.0 / 3.0,
        },
    ]
}

pub fn octahedron_vertices() -> Vec<SpherePoint> {
    vec![
        SpherePoint {
            x1: 0.0,
            x2: 0.0,
            x3: 1.0,
        },
        SpherePoint {
            x1: 0.0,
            x2: 1.0,
            x3: 0.0,
        },
        SpherePoint {
            x1: 1.0,
            x2: 0.0,
            x3: 0.0,
        },
        SpherePoint {
            x1: -1.0,
            x2: 0.0,
            x3: 0.0,
        },
        SpherePoint {
            x1: 0.0,
            x2: -1.0,
            x3: 0.0,
        },
        SpherePoint {
            x1: 0.0,
            x2: 0.0,
            x3: -1.0,
        },
    ]
}

/// Specification of a cut-off bubble field.
#[derive(Debug, Clone)]
pub struct BubbleSpec {
    pub config: Option<BubbleConfig>,
    pub centers: Vec<SpherePoint>,
    pub epsilon: f64,
    pub delta: f64,
    pub nu: f64,
}

impl BubbleSpec {
    /// Named configuration with its canonical mass parameter.
    pub fn named(config: BubbleConfig, epsilon: f64, delta: f64) -> Result<Self> {
        Self::build(Some(config), config.centers(), epsilon, delta, config.nu())
    }

    /// Explicit centers with an explicit mass parameter.
    pub fn custom(centers: Vec<SpherePoint>, epsilon: f64, delta: f64, nu: f64) -> Result<Self> {
        Self::build(None, centers, epsilon, delta, nu)
    }

    fn build(
        config: Option<BubbleConfig>,
        centers: Vec<SpherePoint>,
        epsilon: f64,
        delta: f64,
        nu: f64,
    ) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidArgument(
                "bubble needs at least one center".into(),
            ));
        }
        if !(epsilon > 0.0 && epsilon <= delta / 10.0) {
            return Err(Error::InvalidArgument(format!(
                "scale epsilon = {epsilon} must satisfy 0 < epsilon <= delta/10 = {}",
                delta / 10.0
            )));
        }
        if !(0.0 < nu && nu <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "mass parameter nu = {nu} out of (0, 1]"
            )));
        }
        let mut min_dist = f64::INFINITY;
        for i in 0..centers.len() {
            for j in (i + 1)..centers.len() {
                min_dist = min_dist.min(geodesic_distance(&centers[i], &centers[j]));
            }
        }
        if centers.len() > 1 && 4.0 * delta >= min_dist {
            return Err(Error::InvalidArgument(format!(
                "cutoff delta = {delta} too large: 4*delta must stay below the minimum center distance {min_dist}"
            )));
        }
        Ok(Self {
            config,
            centers,
            epsilon,
            delta,
            nu,
        })
    }

    pub fn name(&self) -> String {
        match self.config {
            Some(c) => c.name().to_string(),
            None => format!("custom-{}", self.centers.len()),
        }
    }

    /// The configuration's uniform concentration measure.
    pub fn uniform_measure(&self) -> Result<PointMeasure> {
        let nu = 1.0 / self.centers.len() as f64;
        PointMeasure::new(self.centers.iter().map(|p| (nu, *p)).collect())
    }
}

/// Quintic smoothstep cutoff: 1 on [0, delta], 0 on [2 delta, inf),
/// C^2 across the transition.
fn cutoff(r: f64, delta: f64) -> f64 {
    if r <= delta {
        1.0
    } else if r >= 2.0 * delta {
        0.0
    } else {
        let s = (r - delta) / delta;
        1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    }
}

fn cutoff_deriv(r: f64, delta: f64) -> f64 {
    if r <= delta || r >= 2.0 * delta {
        0.0
    } else {
        let s = (r - delta) / delta;
        -(30.0 * s * s - 60.0 * s * s * s + 30.0 * s * s * s * s) / delta
    }
}

/// Radial profile chi(r) * (-log(eps^2 + r^2) + (1/2) log nu).
fn profile(r: f64, epsilon: f64, delta: f64, nu: f64) -> f64 {
    cutoff(r, delta) * (-(epsilon * epsilon + r * r).ln() + 0.5 * nu.ln())
}

fn profile_deriv(r: f64, epsilon: f64, delta: f64, nu: f64) -> f64 {
    let phi = -(epsilon * epsilon + r * r).ln() + 0.5 * nu.ln();
    let dphi = -2.0 * r / (epsilon * epsilon + r * r);
    cutoff_deriv(r, delta) * phi + cutoff(r, delta) * dphi
}

/// Builds the bubble field with closed-form value and gradient and cap
/// patches attached at each center (default cap resolution).
pub fn make_bubble_field(spec: &BubbleSpec, grid: Arc<QuadratureGrid>) -> Result<ScalarField> {
    make_bubble_field_with(spec, grid, DEFAULT_CAP_RADIAL, DEFAULT_CAP_ANGULAR)
}

/// As [`make_bubble_field`] with explicit cap node counts.
pub fn make_bubble_field_with(
    spec: &BubbleSpec,
    grid: Arc<QuadratureGrid>,
    n_r: usize,
    n_ang: usize,
) -> Result<ScalarField> {
    let centers = spec.centers.clone();
    let (eps, delta, nu) = (spec.epsilon, spec.delta, spec.nu);
    let value = {
        let centers = centers.clone();
        move |p: &SpherePoint| {
            let mut acc = 0.0;
            for c in &centers {
                let r = geodesic_distance(p, c);
                if r < 2.0 * delta {
                    acc += profile(r, eps, delta, nu);
                }
            }
            acc
        }
    };
    let gradient = {
        let centers = centers.clone();
        move |p: &SpherePoint| {
            let mut g = [0.0f64; 3];
            for c in &centers {
                let r = geodesic_distance(p, c);
                if r >= 2.0 * delta || r < 1e-9 {
                    continue; // profile derivative vanishes at r = 0
                }
                let dpsi = profile_deriv(r, eps, delta, nu);
                let (sr, cr) = r.sin_cos();
                // tangent unit vector pointing away from the center
                g[0] += dpsi * (cr * p.x1 - c.x1) / sr;
                g[1] += dpsi * (cr * p.x2 - c.x2) / sr;
                g[2] += dpsi * (cr * p.x3 - c.x3) / sr;
            }
            g
        }
    };
    let patches = build_cap_patches(&centers, 2.0 * spec.delta, n_r, n_ang)?;
    ScalarField::from_fn_with_gradient(grid, value, gradient)?.with_caps(patches)
}

/// Leading-order predictions for the bubble functionals.
#[derive(Debug, Clone)]
pub struct Predictions {
    /// avg e^{2u} ~ N nu / (4 eps^2)
    pub exp_mass_leading: f64,
    /// raw Dirichlet energy ~ 8 pi N log(1/eps)
    pub energy_leading: f64,
    pub mean_leading: f64,
    /// limiting deviation matrix of the uniform concentration measure
    pub lambda_limit: MomentMatrix,
}

/// Measured functionals, predictions and their ratios for one bubble field.
#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    pub config: String,
    pub epsilon: f64,
    pub delta: f64,
    pub exp_mass: f64,
    pub energy: f64,
    pub mean: f64,
    pub lambda: MomentMatrix,
    pub lambda_norm_sq: f64,
    /// max |avg e^{2u} x_i| / avg e^{2u}
    pub kw_defect: f64,
    pub predictions: Predictions,
    pub mass_ratio: f64,
    pub energy_ratio: f64,
}

/// Leading terms from the concentration analysis.
pub fn predicted_asymptotics(spec: &BubbleSpec) -> Result<Predictions> {
    let n = spec.centers.len() as f64;
    let lambda_limit = lambda_infty(&spec.uniform_measure()?);
    Ok(Predictions {
        exp_mass_leading: n * spec.nu / (4.0 * spec.epsilon * spec.epsilon),
        energy_leading: 8.0 * std::f64::consts::PI * n * (1.0 / spec.epsilon).ln(),
        mean_leading: 0.0,
        lambda_limit,
    })
}

/// Computes all functionals of the bubble field on the composite quadrature
/// and the ratios to the leading-order predictions.
pub fn verify_asymptotics(
    spec: &BubbleSpec,
    grid: Arc<QuadratureGrid>,
) -> Result<AsymptoticReport> {
    let field = make_bubble_field(spec, grid)?;
    let predictions = predicted_asymptotics(spec)?;
    let mass = exp_mass(&field)?;
    let energy = dirichlet_energy(&field)?;
    let mean = mean_value(&field);
    let moments = exp_first_moments(&field)?;
    let lambda = lambda_matrix(&field)?;
    let l2 = lambda_norm_sq(&lambda);
    let kw_defect = moments.iter().fold(0.0f64, |m, v| m.max(v.abs())) / mass;
    Ok(AsymptoticReport {
        config: spec.name(),
        epsilon: spec.epsilon,
        delta: spec.delta,
        exp_mass: mass,
        energy,
        mean,
        lambda,
        lambda_norm_sq: l2,
        kw_defect,
        mass_ratio: mass / predictions.exp_mass_leading,
        energy_ratio: energy / predictions.energy_leading,
        predictions,
    })
}

/// Convenience: verification on a default L = 64 grid.
pub fn verify_asymptotics_default(spec: &BubbleSpec) -> Result<AsymptoticReport> {
    let grid = Arc::new(build_gauss_grid(64)?);
    verify_asymptotics(spec, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    /// Adaptive Simpson on [a, b], independent of the crate's quadrature.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        fn s<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn rec<F: Fn(f64) -> f64>(
            f: &F,
            a: f64,
            b: f64,
            whole: f64,
            tol: f64,
            depth: usize,
        ) -> f64 {
            let m = 0.5 * (a + b);
            let left = s(f, a, m);
            let right = s(f, m, b);
            if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
                left + right + (left + right - whole) / 15.0
            } else {
                rec(f, a, m, left, tol / 2.0, depth - 1)
                    + rec(f, m, b, right, tol / 2.0, depth - 1)
            }
        }
        rec(&f, a, b, s(&f, a, b), tol, depth)
    }

    #[test]
    fn named_vertex_tables() {
        let tri = triangle_vertices();
        assert_abs_diff_eq!(tri[1].x2, 3f64.sqrt() / 2.0);
        assert_abs_diff_eq!(tri[1].x3, -0.5);
        let tet = tetrahedron_vertices();
        let sum = tet.iter().fold([0.0; 3], |acc, p| {
            [acc[0] + p.x1, acc[1] + p.x2, acc[2] + p.x3]
        });
        for c in sum {
            assert!(c.abs() < 1e-15, "tetrahedron vertex sum component {c}");
        }
        for p in &tet {
            assert_abs_diff_eq!(p.dot(p), 1.0, epsilon = 1e-12);
        }
        // regular tetrahedron: pairwise dot -1/3
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_abs_diff_eq!(tet[i].dot(&tet[j]), -1.0 / 3.0, epsilon = 1e-12);
            }
        }
        assert_eq!(octahedron_vertices().len(), 6);
    }

    #[test]
    fn spec_validation() {
        assert!(BubbleSpec::named(BubbleConfig::Triangle, 1e-3, DEFAULT_DELTA).is_ok());
        // epsilon > delta/10 rejected
        assert!(BubbleSpec::named(BubbleConfig::Triangle, 0.05, DEFAULT_DELTA).is_err());
        // cutoff too wide for the configuration
        assert!(BubbleSpec::named(BubbleConfig::Octahedron, 1e-3, 0.45).is_err());
        // bad nu
        assert!(BubbleSpec::custom(triangle_vertices(), 1e-3, 0.35, 0.0).is_err());
    }

    /// Independent 1D radial oracle for (avg mass, energy, mean, |Lambda|^2).
    fn oracle_report(config: BubbleConfig, eps: f64) -> (f64, f64, f64, f64) {
        let delta = DEFAULT_DELTA;
        let nu = config.nu();
        let centers = config.centers();
        let n = centers.len() as f64;
        let tol = 1e-12;
        let mass_cap = 2.0
            * PI
            * simpson(
                |r| (2.0 * profile(r, eps, delta, nu)).exp() * r.sin(),
                0.0,
                2.0 * delta,
                tol * 1e4,
                30,
            );
        let cap_area = 2.0 * PI * (1.0 - (2.0 * delta).cos());
        let raw_mass = n * mass_cap + (4.0 * PI - n * cap_area);
        let avg_mass = raw_mass / (4.0 * PI);
        let energy = n
            * 2.0
            * PI
            * simpson(
                |r| profile_deriv(r, eps, delta, nu).powi(2) * r.sin(),
                0.0,
                2.0 * delta,
                tol * 1e4,
                30,
            );
        let mean = n
            * 2.0
            * PI
            * simpson(
                |r| profile(r, eps, delta, nu) * r.sin(),
                0.0,
                2.0 * delta,
                tol,
                30,
            )
            / (4.0 * PI);
        // each cap contributes s_c * c c^T + t_c * (I - c c^T) to the raw
        // second moments; the complement contributes the same integrals of 1
        let s_c = 2.0
            * PI
            * simpson(
                |r| (2.0 * profile(r, eps, delta, nu)).exp() * r.cos().powi(2) * r.sin(),
                0.0,
                2.0 * delta,
                tol * 1e4,
                30,
            );
        let t_c = PI
            * simpson(
                |r| (2.0 * profile(r, eps, delta, nu)).exp() * r.sin().powi(3),
                0.0,
                2.0 * delta,
                tol * 1e4,
                30,
            );
        let s_1 = 2.0 * PI * simpson(|r| r.cos().powi(2) * r.sin(), 0.0, 2.0 * delta, tol, 30);
        let t_1 = PI * simpson(|r| r.sin().powi(3), 0.0, 2.0 * delta, tol, 30);
        let mut sec = [[0.0f64; 3]; 3];
        for (i, row) in sec.iter_mut().enumerate() {
            row[i] = 4.0 * PI / 3.0;
        }
        for c in &centers {
            let cv = [c.x1, c.x2, c.x3];
            for i in 0..3 {
                for j in 0..3 {
                    let pp = cv[i] * cv[j];
                    let eye = if i == j { 1.0 } else { 0.0 };
                    sec[i][j] += (s_c - s_1) * pp + (t_c - t_1) * (eye - pp);
                }
            }
        }
        let mut l2 = 0.0;
        for (i, row) in sec.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                let lam = s / raw_mass - if i == j { 1.0 / 3.0 } else { 0.0 };
                l2 += lam * lam;
            }
        }
        (avg_mass, energy, mean, l2)
    }

    #[test]
    fn functionals_match_radial_oracle_triangle() {
        let eps = 1e-2;
        let spec = BubbleSpec::named(BubbleConfig::Triangle, eps, DEFAULT_DELTA).unwrap();
        let grid = Arc::new(build_gauss_grid(48).unwrap());
        let report = verify_asymptotics(&spec, grid).unwrap();
        let (mass_o, energy_o, mean_o, l2_o) = oracle_report(BubbleConfig::Triangle, eps);
        assert!(
            (report.exp_mass / mass_o - 1.0).abs() < 1e-6,
            "mass {} vs oracle {}",
            report.exp_mass,
            mass_o
        );
        assert!(
            (report.energy / energy_o - 1.0).abs() < 2e-8,
            "energy {} vs oracle {}",
            report.energy,
            energy_o
        );
        assert!(
            (report.mean - mean_o).abs() < 1e-5,
            "mean {} vs oracle {}",
            report.mean,
            mean_o
        );
        // the masked global rule carries an O(1/L) boundary error on the
        // non-constant outside integrands entering Lambda
        assert!(
            (report.lambda_norm_sq - l2_o).abs() < 1e-5,
            "lambda {} vs oracle {}",
            report.lambda_norm_sq,
            l2_o
        );
    }

    #[test]
    fn pair_swallows_two_thirds() {
        let spec = BubbleSpec::named(BubbleConfig::Pair, 1e-3, DEFAULT_DELTA).unwrap();
        let grid = Arc::new(build_gauss_grid(48).unwrap());
        let report = verify_asymptotics(&spec, grid).unwrap();
        assert!(
            (report.mass_ratio - 1.0).abs() < 1e-3,
            "mass ratio {}",
            report.mass_ratio
        );
        assert!((report.lambda_norm_sq - 2.0 / 3.0).abs() < 0.02);
        assert!(report.kw_defect < 1e-6, "kw defect {}", report.kw_defect);
        let expected = MomentMatrix::from_diagonal([-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0]);
        assert!(report.lambda.frobenius_distance(&expected) < 0.01);
        // averaged first moments of the antipodal pair vanish
        let field = make_bubble_field(&spec, Arc::new(build_gauss_grid(48).unwrap())).unwrap();
        let moments = exp_first_moments(&field).unwrap();
        for m in moments {
            assert!(m.abs() < 1e-8, "first moment {m}");
        }
    }

    #[test]
    fn tetrahedron_lambda_vanishes() {
        let spec = BubbleSpec::named(BubbleConfig::Tetrahedron, 1e-3, DEFAULT_DELTA).unwrap();
        let report = verify_asymptotics_default(&spec).unwrap();
        assert!(
            report.lambda_norm_sq < 0.02,
            "lambda^2 {}",
            report.lambda_norm_sq
        );
        assert!(report.kw_defect < 1e-6, "kw {}", report.kw_defect);
    }

    #[test]
    fn energy_ratio_approaches_one_monotonically() {
        let grid = Arc::new(build_gauss_grid(32).unwrap());
        let mut gaps = Vec::new();
        for eps in [1e-2, 3e-3, 1e-3] {
            let spec = BubbleSpec::named(BubbleConfig::Triangle, eps, DEFAULT_DELTA).unwrap();
            let report = verify_asymptotics(&spec, grid.clone()).unwrap();
            gaps.push((report.energy_ratio - 1.0).abs());
        }
        assert!(
            gaps[0] > gaps[1] && gaps[1] > gaps[2],
            "|ratio - 1| not decreasing in log(1/eps): {gaps:?}"
        );
    }

    #[test]
    fn octahedron_field_is_even() {
        let spec = BubbleSpec::named(BubbleConfig::Octahedron, 1e-2, DEFAULT_DELTA).unwrap();
        let grid = Arc::new(build_gauss_grid(24).unwrap());
        let field = make_bubble_field(&spec, grid.clone()).unwrap();
        for p in grid.nodes().iter().step_by(7) {
            let u_p = field.eval(p).unwrap();
            let u_m = field.eval(&p.antipode()).unwrap();
            assert!(
                (u_p - u_m).abs() < 1e-12,
                "evenness defect {}",
                (u_p - u_m).abs()
            );
        }
    }

    #[test]
    fn predictions_match_named_values() {
        let spec = BubbleSpec::named(BubbleConfig::Triangle, 1e-3, DEFAULT_DELTA).unwrap();
        let pred = predicted_asymptotics(&spec).unwrap();
        assert_abs_diff_eq!(pred.exp_mass_leading, 2.5e5, epsilon = 1e-6);
        assert_abs_diff_eq!(
            pred.energy_leading,
            24.0 * PI * (1e3f64).ln(),
            epsilon = 1e-9
        );
        let tri_limit = MomentMatrix::from_diagonal([-1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0]);
        assert!(pred.lambda_limit.frobenius_distance(&tri_limit) < 1e-14);

        let octa = BubbleSpec::named(BubbleConfig::Octahedron, 1e-3, DEFAULT_DELTA).unwrap();
        let pred_o = predicted_asymptotics(&octa).unwrap();
        assert!(pred_o
            .lambda_limit
            .frobenius_distance(&MomentMatrix::zero())
            < 1e-14);
        assert_abs_diff_eq!(
            pred_o.energy_leading,
            48.0 * PI * (1e3f64).ln(),
            epsilon = 1e-9
        );
        // pair with eps = 1/n: mass prediction n^2/4
        let pair = BubbleSpec::named(BubbleConfig::Pair, 1.0 / 200.0, DEFAULT_DELTA).unwrap();
        let pred_p = predicted_asymptotics(&pair).unwrap();
        assert_abs_diff_eq!(
            pred_p.exp_mass_leading,
            200.0f64.powi(2) / 4.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn gradient_evaluator_matches_finite_differences() {
        let spec = BubbleSpec::named(BubbleConfig::Triangle, 1e-2, DEFAULT_DELTA).unwrap();
        let grid = Arc::new(build_gauss_grid(16).unwrap());
        let field = make_bubble_field(&spec, grid).unwrap();
        let h = 1e-7;
        // probe points in the annulus and inside the cap
        for (t, phi) in [(0.95f64, 0.3f64), (0.85, 1.2), (0.99, 2.0), (-0.2, 0.7)] {
            let s = (1.0 - t * t).sqrt();
            let p = SpherePoint::new(s * phi.cos(), s * phi.sin(), t).unwrap();
            let g = field.eval_gradient(&p).unwrap();
            let e_theta = [t * phi.cos(), t * phi.sin(), -s];
            let fd = {
                let step = |sign: f64| {
                    let v = [
                        p.x1 * (sign * h).cos() + e_theta[0] * (sign * h).sin(),
                        p.x2 * (sign * h).cos() + e_theta[1] * (sign * h).sin(),
                        p.x3 * (sign * h).cos() + e_theta[2] * (sign * h).sin(),
                    ];
                    let q = SpherePoint::normalized(v[0], v[1], v[2]).unwrap();
                    field.eval(&q).unwrap()
                };
                (step(1.0) - step(-1.0)) / (2.0 * h)
            };
            let an = g[0] * e_theta[0] + g[1] * e_theta[1] + g[2] * e_theta[2];
            assert!(
                (fd - an).abs() < 1e-5 * (1.0 + an.abs()),
                "fd {fd} vs analytic {an} at t={t}"
            );
        }
    }
}
