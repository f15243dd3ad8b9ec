//! Points, rotations, geodesic distance and quadrature on the unit sphere.
//!
//! Two quadrature schemes are provided: a global Gauss-Legendre-by-longitude
//! grid, and refined polar cap patches used to resolve integrands that
//! concentrate at a small scale around a few points.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Vector3};

const UNIT_TOL: f64 = 1e-12;

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl SpherePoint {
    /// Builds a point, requiring |x|^2 = 1 within 1e-12.
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let n2 = x1 * x1 + x2 * x2 + x3 * x3;
        if (n2 - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidArgument(format!(
                "point ({x1}, {x2}, {x3}) is not on the unit sphere: |x|^2 = {n2}"
            )));
        }
        Ok(Self { x1, x2, x3 })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn normalized(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let n = (x1 * x1 + x2 * x2 + x3 * x3).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "cannot normalize ({x1}, {x2}, {x3})"
            )));
        }
        Ok(Self {
            x1: x1 / n,
            x2: x2 / n,
            x3: x3 / n,
        })
    }

    pub fn north_pole() -> Self {
        Self {
            x1: 0.0,
            x2: 0.0,
            x3: 1.0,
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2 + self.x3 * other.x3
    }

    pub fn antipode(&self) -> Self {
        Self {
            x1: -self.x1,
            x2: -self.x2,
            x3: -self.x3,
        }
    }

    pub(crate) fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x1, self.x2, self.x3)
    }

    pub(crate) fn from_vector(v: Vector3<f64>) -> Self {
        Self {
            x1: v.x,
            x2: v.y,
            x3: v.z,
        }
    }
}

/// Geodesic distance in [0, pi]; the dot product is clamped before arccos.
pub fn geodesic_distance(p: &SpherePoint, q: &SpherePoint) -> f64 {
    p.dot(q).clamp(-1.0, 1.0).acos()
}

/// An orthogonal 3x3 matrix (det = +-1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: Matrix3<f64>,
}

impl Rotation {
    /// Validates R^T R = I and det R = +-1 within 1e-12.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).norm();
        if err > 1e-11 {
            return Err(Error::InvalidArgument(format!(
                "matrix is not orthogonal: |R^T R - I| = {err:.3e}"
            )));
        }
        let det = m.determinant();
        if (det.abs() - 1.0).abs() > 1e-11 {
            return Err(Error::InvalidArgument(format!(
                "matrix determinant {det} is not +-1"
            )));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Matrix3::new(
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ))
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Rodrigues rotation about a unit axis.
    pub fn about_axis(axis: Vector3<f64>, angle: f64) -> Self {
        let a = axis.normalize();
        let k = Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0);
        let m = Matrix3::identity() + angle.sin() * k + (1.0 - angle.cos()) * (k * k);
        Self { m }
    }

    /// Rotation about the x3 axis.
    pub fn about_x3(angle: f64) -> Self {
        Self::about_axis(Vector3::new(0.0, 0.0, 1.0), angle)
    }

    pub fn apply(&self, p: &SpherePoint) -> SpherePoint {
        let v = self.m * p.to_vector();
        // re-normalize to guard against rounding drift
        let n = v.norm();
        SpherePoint::from_vector(v / n)
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }
}

/// Deterministic rotation in SO(3) with R p = q.
///
/// Rotates in the plane spanned by p and q; returns the identity for p = q.
/// For antipodal pairs it rotates by pi about a fixed axis orthogonal to p
/// chosen by lexicographic rule over the coordinate axes.
pub fn rotation_mapping(p: &SpherePoint, q: &SpherePoint) -> Rotation {
    let c = p.dot(q).clamp(-1.0, 1.0);
    if c > 1.0 - 1e-14 {
        return Rotation::identity();
    }
    if c < -1.0 + 1e-14 {
        let pv = p.to_vector();
        for k in 0..3 {
            let mut e = Vector3::zeros();
            e[k] = 1.0;
            let cand = e - pv.dot(&e) * pv;
            if cand.norm() > 1e-6 {
                return Rotation::about_axis(cand, std::f64::consts::PI);
            }
        }
        unreachable!("no axis orthogonal to a unit vector");
    }
    let pv = p.to_vector();
    let qv = q.to_vector();
    let axis = pv.cross(&qv);
    Rotation::about_axis(axis, c.acos())
}

/// Gauss-Legendre nodes and weights on (-1, 1).
///
/// Newton iteration on P_n with the Abramowitz-Stegun initial guesses;
/// accurate to machine precision for the node counts used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // evaluate P_n and P_n' by recurrence
            let mut p0 = 1.0;
            let mut p1 = x;
            for l in 2..=n {
                let lf = l as f64;
                let p2 = ((2.0 * lf - 1.0) * x * p1 - (lf - 1.0) * p0) / lf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            let dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                // one polishing step after convergence
                let mut q0 = 1.0;
                let mut q1 = x;
                for l in 2..=n {
                    let lf = l as f64;
                    let q2 = ((2.0 * lf - 1.0) * x * q1 - (lf - 1.0) * q0) / lf;
                    q0 = q1;
                    q1 = q2;
                }
                let pn = if n == 1 { x } else { q1 };
                let pm = if n == 1 { 1.0 } else { q0 };
                let dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
                x -= pn / dp;
                nodes[i] = -x;
                nodes[n - 1 - i] = x;
                let w = 2.0 / ((1.0 - x * x) * dp * dp);
                weights[i] = w;
                weights[n - 1 - i] = w;
                break;
            }
        }
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Global quadrature grid: L Gauss-Legendre latitudes x 2L equispaced longitudes.
///
/// Exact for spherical polynomials of degree <= 2L-1 in x3 and longitude
/// frequency <= 2L-1.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    latitude_count: usize,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn latitude_count(&self) -> usize {
        self.latitude_count
    }

    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Builds the global grid for a latitude count L >= 2.
pub fn build_gauss_grid(l: usize) -> Result<QuadratureGrid> {
    if l < 2 {
        return Err(Error::InvalidArgument(format!(
            "latitude count L = {l} must be >= 2"
        )));
    }
    let (t_nodes, t_weights) = gauss_legendre(l);
    let n_phi = 2 * l;
    let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
    let mut nodes = Vec::with_capacity(l * n_phi);
    let mut weights = Vec::with_capacity(l * n_phi);
    for (t, wt) in t_nodes.iter().zip(&t_weights) {
        let s = (1.0 - t * t).sqrt();
        let w = wt * dphi;
        for j in 0..n_phi {
            let phi = dphi * j as f64;
            nodes.push(SpherePoint {
                x1: s * phi.cos(),
                x2: s * phi.sin(),
                x3: *t,
            });
            weights.push(w);
        }
    }
    debug_assert!({
        let total: f64 = weights.iter().sum();
        (total - 4.0 * std::f64::consts::PI).abs() < 1e-11
    });
    Ok(QuadratureGrid {
        latitude_count: l,
        nodes,
        weights,
    })
}

/// Integrates a pointwise evaluator over the grid, rejecting non-finite values.
pub fn integrate<F: Fn(&SpherePoint) -> f64>(grid: &QuadratureGrid, f: F) -> Result<f64> {
    let mut acc = 0.0;
    for (p, w) in grid.nodes.iter().zip(&grid.weights) {
        let v = f(p);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                value: v,
                x: p.x1,
                y: p.x2,
                z: p.x3,
            });
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Exponent of the graded radial map r = delta*s^k clustering nodes at r = 0.
const RADIAL_GRADING: i32 = 3;

/// A refined quadrature patch on the geodesic cap of radius `two_delta`
/// around `center`.
///
/// The radial rule has two Gauss-Legendre panels split at the half radius
/// (where cutoff profiles lose smoothness): a graded map r = delta*s^3 on
/// the inner panel resolves concentration scales down to ~1e-4 with
/// n_r <= 200, and a plain panel covers [delta, 2*delta]. Angular nodes are
/// equispaced.
#[derive(Debug, Clone)]
pub struct CapPatch {
    pub center: SpherePoint,
    pub outer_radius: f64,
    pub n_r: usize,
    pub n_ang: usize,
    nodes: Vec<SpherePoint>,
    weights: Vec<f64>,
    /// geodesic distance of each node from the center
    radii: Vec<f64>,
}

impl CapPatch {
    pub fn nodes(&self) -> &[SpherePoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Exact area of the underlying spherical cap, 2*pi*(1 - cos(2*delta)).
    pub fn cap_area(&self) -> f64 {
        2.0 * std::f64::consts::PI * (1.0 - self.outer_radius.cos())
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Maps the patch by an orthogonal transform (weights are unchanged).
    pub fn transformed(&self, rot: &Rotation) -> CapPatch {
        CapPatch {
            center: rot.apply(&self.center),
            outer_radius: self.outer_radius,
            n_r: self.n_r,
            n_ang: self.n_ang,
            nodes: self.nodes.iter().map(|p| rot.apply(p)).collect(),
            weights: self.weights.clone(),
            radii: self.radii.clone(),
        }
    }
}

fn orthonormal_frame(c: &SpherePoint) -> (Vector3<f64>, Vector3<f64>) {
    let cv = c.to_vector();
    let seed = if c.x3.abs() < 0.9 {
        Vector3::new(0.0, 0.0, 1.0)
    } else {
        Vector3::new(1.0, 0.0, 0.0)
    };
    let e1 = seed.cross(&cv).normalize();
    let e2 = cv.cross(&e1);
    (e1, e2)
}

fn build_cap_patch(center: SpherePoint, two_delta: f64, n_r: usize, n_ang: usize) -> CapPatch {
    let (e1, e2) = orthonormal_frame(&center);
    let cv = center.to_vector();
    let delta = 0.5 * two_delta;
    let n_inner = (2 * n_r).div_ceil(3).max(4);
    let n_outer = (n_r - n_inner.min(n_r)).max(16);
    let dphi = 2.0 * std::f64::consts::PI / n_ang as f64;
    let mut radial: Vec<(f64, f64)> = Vec::with_capacity(n_inner + n_outer);
    let (s_nodes, s_weights) = gauss_legendre(n_inner);
    for (x, wx) in s_nodes.iter().zip(&s_weights) {
        let s = 0.5 * (x + 1.0);
        let r = delta * s.powi(RADIAL_GRADING);
        let dr_ds = delta * RADIAL_GRADING as f64 * s.powi(RADIAL_GRADING - 1);
        radial.push((r, wx * 0.5 * dr_ds * r.sin()));
    }
    let (t_nodes, t_weights) = gauss_legendre(n_outer);
    for (x, wx) in t_nodes.iter().zip(&t_weights) {
        let r = delta + 0.5 * (x + 1.0) * delta;
        radial.push((r, wx * 0.5 * delta * r.sin()));
    }
    let mut nodes = Vec::with_capacity(radial.len() * n_ang);
    let mut weights = Vec::with_capacity(radial.len() * n_ang);
    let mut radii = Vec::with_capacity(radial.len() * n_ang);
    for (r, w_r) in radial {
        for j in 0..n_ang {
            let phi = dphi * j as f64;
            let v = r.cos() * cv + r.sin() * (phi.cos() * e1 + phi.sin() * e2);
            nodes.push(SpherePoint::from_vector(v.normalize()));
            weights.push(w_r * dphi);
            radii.push(r);
        }
    }
    CapPatch {
        center,
        outer_radius: two_delta,
        n_r,
        n_ang,
        nodes,
        weights,
        radii,
    }
}

/// Builds disjoint cap patches around the given centers.
///
/// Disjointness requires every pairwise geodesic center distance to exceed
/// 2*two_delta; overlapping configurations are rejected.
pub fn build_cap_patches(
    centers: &[SpherePoint],
    two_delta: f64,
    n_r: usize,
    n_ang: usize,
) -> Result<Vec<CapPatch>> {
    if !(two_delta > 0.0 && two_delta < std::f64::consts::PI / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cap outer radius {two_delta} out of range (0, pi/2)"
        )));
    }
    if n_r < 4 || n_ang < 4 {
        return Err(Error::InvalidArgument(format!(
            "cap node counts n_r = {n_r}, n_ang = {n_ang} too small"
        )));
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            let d = geodesic_distance(&centers[i], &centers[j]);
            if d <= 2.0 * two_delta {
                return Err(Error::OverlappingCaps {
                    i,
                    j,
                    dist: d,
                    min_dist: 2.0 * two_delta,
                });
            }
        }
    }
    let patches: Vec<CapPatch> = centers
        .iter()
        .map(|c| build_cap_patch(*c, two_delta, n_r, n_ang))
        .collect();
    debug_assert!(patches
        .iter()
        .all(|p| (p.weight_sum() - p.cap_area()).abs() < 1e-11));
    Ok(patches)
}
