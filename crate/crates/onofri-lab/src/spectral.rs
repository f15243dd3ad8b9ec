//! Real spherical-harmonic analysis/synthesis, the Laplace-Beltrami operator
//! and spectral Dirichlet energy.
//!
//! The basis is real and orthonormal, int Y_{l,m}^2 dV = 1. Useful conversion
//! constants in this convention:
//!   x3        = sqrt(4 pi / 3) * Y_{1,0}
//!   x1        = sqrt(4 pi / 3) * Y_{1,1}
//!   x2        = sqrt(4 pi / 3) * Y_{1,-1}
//!   x3^2 - 1/3 = (2/3) * sqrt(4 pi / 5) * Y_{2,0}
//!
//! Longitude sums are evaluated directly; no fast transform is attempted
//! (degree cutoffs stay at desk scale, l_max <= 128).

use crate::error::{Error, Result};
use crate::field::{ScalarField, FOUR_PI};
use crate::sphere::{QuadratureGrid, SpherePoint};
use rand::Rng;
use std::sync::Arc;

/// Truncated expansion in real orthonormal spherical harmonics.
#[derive(Debug, Clone, PartialEq)]
pub struct SHExpansion {
    l_max: usize,
    /// flat storage, index l^2 + l + m for |m| <= l
    coeffs: Vec<f64>,
}

impl SHExpansion {
    pub fn zeros(l_max: usize) -> Self {
        Self {
            l_max,
            coeffs: vec![0.0; (l_max + 1) * (l_max + 1)],
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn idx(l: usize, m: i64) -> usize {
        l * l + (l as i64 + m) as usize
    }

    pub fn coeff(&self, l: usize, m: i64) -> f64 {
        assert!(l <= self.l_max && m.unsigned_abs() as usize <= l);
        self.coeffs[Self::idx(l, m)]
    }

    pub fn set_coeff(&mut self, l: usize, m: i64, value: f64) {
        assert!(l <= self.l_max && m.unsigned_abs() as usize <= l);
        self.coeffs[Self::idx(l, m)] = value;
    }

    /// Adds the constant c to the represented function.
    pub fn shift_constant(&mut self, c: f64) {
        self.coeffs[0] += c * FOUR_PI.sqrt();
    }

    /// Applies the Laplace-Beltrami operator: coefficient (l, m) is scaled
    /// by -l(l+1).
    pub fn laplace_beltrami(&self) -> SHExpansion {
        let mut out = self.clone();
        for l in 0..=self.l_max {
            let factor = -((l * (l + 1)) as f64);
            for m in -(l as i64)..=(l as i64) {
                out.coeffs[Self::idx(l, m)] *= factor;
            }
        }
        out
    }

    /// Parseval form of the raw Dirichlet energy: sum of l(l+1) c_{l,m}^2.
    pub fn dirichlet_energy(&self) -> f64 {
        let mut acc = 0.0;
        for l in 1..=self.l_max {
            let factor = (l * (l + 1)) as f64;
            for m in -(l as i64)..=(l as i64) {
                let c = self.coeffs[Self::idx(l, m)];
                acc += factor * c * c;
            }
        }
        acc
    }

    /// Parseval: the raw integral of u^2 over the sphere.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Zeroes every coefficient with l < l_min (projection onto high modes).
    pub fn project_above(&self, l_min: usize) -> SHExpansion {
        let mut out = self.clone();
        for l in 0..l_min.min(self.l_max + 1) {
            for m in -(l as i64)..=(l as i64) {
                out.coeffs[Self::idx(l, m)] = 0.0;
            }
        }
        out
    }

    /// Point evaluation by direct summation.
    pub fn eval(&self, p: &SpherePoint) -> f64 {
        let basis = BasisAtPoint::new(p, self.l_max);
        let mut acc = 0.0;
        for l in 0..=self.l_max {
            for m in -(l as i64)..=(l as i64) {
                let c = self.coeffs[Self::idx(l, m)];
                if c != 0.0 {
                    acc += c * basis.y(l, m);
                }
            }
        }
        acc
    }

    /// Tangent gradient by direct summation. Returns zero at the poles,
    /// where the longitude frame degenerates (quadrature nodes never land
    /// there).
    pub fn eval_gradient(&self, p: &SpherePoint) -> [f64; 3] {
        let t = p.x3;
        let s2 = (p.x1 * p.x1 + p.x2 * p.x2).max(0.0);
        let s = s2.sqrt();
        if s < 1e-14 {
            return [0.0; 3];
        }
        let cos_phi = p.x1 / s;
        let sin_phi = p.x2 / s;
        let e_theta = [t * cos_phi, t * sin_phi, -s];
        let e_phi = [-sin_phi, cos_phi, 0.0];
        let basis = BasisAtPoint::new(p, self.l_max);
        let mut d_theta = 0.0;
        let mut d_phi = 0.0; // already divided by sin(theta)
        for l in 0..=self.l_max {
            for m in -(l as i64)..=(l as i64) {
                let c = self.coeffs[Self::idx(l, m)];
                if c != 0.0 {
                    let (dt, dp) = basis.grad_components(l, m);
                    d_theta += c * dt;
                    d_phi += c * dp;
                }
            }
        }
        [
            d_theta * e_theta[0] + d_phi * e_phi[0],
            d_theta * e_theta[1] + d_phi * e_phi[1],
            d_theta * e_theta[2] + d_phi * e_phi[2],
        ]
    }
}

/// Normalized associated Legendre table at one point, with the sin^m factor
/// kept separate for pole stability.
struct BasisAtPoint {
    l_max: usize,
    t: f64,
    s: f64,
    /// q[l][m] with P-bar_l^m = q_l^m * s^m
    q: Vec<Vec<f64>>,
    cos_m: Vec<f64>,
    sin_m: Vec<f64>,
}

impl BasisAtPoint {
    fn new(p: &SpherePoint, l_max: usize) -> Self {
        let t = p.x3;
        let s2 = (p.x1 * p.x1 + p.x2 * p.x2).max(0.0);
        let s = s2.sqrt();
        let (cos_phi, sin_phi) = if s > 0.0 {
            (p.x1 / s, p.x2 / s)
        } else {
            (1.0, 0.0)
        };
        let mut q = vec![vec![0.0; l_max + 1]; l_max + 1];
        // diagonal q_m^m
        q[0][0] = (1.0 / FOUR_PI).sqrt();
        for m in 1..=l_max {
            q[m][m] = q[m - 1][m - 1] * ((2.0 * m as f64 + 1.0) / (2.0 * m as f64)).sqrt();
        }
        for m in 0..=l_max {
            if m < l_max {
                q[m + 1][m] = (2.0 * m as f64 + 3.0).sqrt() * t * q[m][m];
            }
            for l in (m + 2)..=l_max {
                let lf = l as f64;
                let mf = m as f64;
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0) * (lf - 1.0) - mf * mf)
                    / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                    .sqrt();
                q[l][m] = a * (t * q[l - 1][m] - b * q[l - 2][m]);
            }
        }
        let mut cos_m = vec![1.0; l_max + 1];
        let mut sin_m = vec![0.0; l_max + 1];
        for m in 1..=l_max {
            cos_m[m] = cos_m[m - 1] * cos_phi - sin_m[m - 1] * sin_phi;
            sin_m[m] = sin_m[m - 1] * cos_phi + cos_m[m - 1] * sin_phi;
        }
        Self {
            l_max,
            t,
            s,
            q,
            cos_m,
            sin_m,
        }
    }

    fn y(&self, l: usize, m: i64) -> f64 {
        let ma = m.unsigned_abs() as usize;
        let pbar = self.q[l][ma] * self.s.powi(ma as i32);
        if m == 0 {
            pbar
        } else if m > 0 {
            std::f64::consts::SQRT_2 * pbar * self.cos_m[ma]
        } else {
            std::f64::consts::SQRT_2 * pbar * self.sin_m[ma]
        }
    }

    /// (d/d theta, (1/sin theta) d/d phi) of Y_{l,m} at the point.
    fn grad_components(&self, l: usize, m: i64) -> (f64, f64) {
        let ma = m.unsigned_abs() as usize;
        let lf = l as f64;
        let mf = ma as f64;
        // d P-bar_l^m / d theta = [l t q_l - d q_{l-1}] s^{m-1}
        let d_coef = if l > ma {
            ((lf * lf - mf * mf) * (2.0 * lf + 1.0) / (2.0 * lf - 1.0)).sqrt()
        } else {
            0.0
        };
        let prev = if l > ma { self.q[l - 1][ma] } else { 0.0 };
        let s_pow = if ma >= 1 {
            self.s.powi(ma as i32 - 1)
        } else {
            // m = 0: multiply the bracket by s^{-1}; rewrite with explicit s
            1.0
        };
        let bracket = lf * self.t * self.q[l][ma] - d_coef * prev;
        if m == 0 {
            // dP-bar/d theta = bracket / s; safe because callers exclude poles
            let dth = if self.s > 0.0 { bracket / self.s } else { 0.0 };
            (dth, 0.0)
        } else {
            let dth = std::f64::consts::SQRT_2 * bracket * s_pow;
            let trig = if m > 0 { self.cos_m[ma] } else { self.sin_m[ma] };
            let dtrig = if m > 0 {
                -mf * self.sin_m[ma]
            } else {
                mf * self.cos_m[ma]
            };
            let q_spow = self.q[l][ma] * s_pow;
            (dth * trig, std::f64::consts::SQRT_2 * q_spow * dtrig)
        }
    }

    fn l_max(&self) -> usize {
        self.l_max
    }
}

/// Expands grid samples in spherical harmonics by quadrature of u * Y_{l,m}.
///
/// Exact for band-limited u when the grid satisfies L >= l_max + 1.
pub fn analyze(u: &ScalarField, l_max: usize) -> Result<SHExpansion> {
    let grid = u.grid();
    if grid.latitude_count() < l_max + 1 {
        return Err(Error::GridResolution {
            grid_l: grid.latitude_count(),
            l_max,
        });
    }
    let mut out = SHExpansion::zeros(l_max);
    for ((p, w), v) in grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(u.samples().iter())
    {
        let basis = BasisAtPoint::new(p, l_max);
        debug_assert_eq!(basis.l_max(), l_max);
        let wv = w * v;
        for l in 0..=l_max {
            for m in -(l as i64)..=(l as i64) {
                out.coeffs[SHExpansion::idx(l, m)] += wv * basis.y(l, m);
            }
        }
    }
    Ok(out)
}

/// Evaluates the expansion on a grid, attaching closed-form value and
/// gradient evaluators and the expansion itself.
pub fn synthesize(e: &SHExpansion, grid: Arc<QuadratureGrid>) -> Result<ScalarField> {
    let e_val = e.clone();
    let e_grad = e.clone();
    let field = ScalarField::from_fn_with_gradient(
        grid,
        move |p| e_val.eval(p),
        move |p| e_grad.eval_gradient(p),
    )?;
    Ok(field.attach_expansion(e.clone()))
}

/// Random band-limited expansion with coefficients shrinking in degree;
/// amplitudes are calibrated so that sup |u| stays of order `amplitude`.
pub fn random_band_limited<R: Rng>(l_max: usize, amplitude: f64, rng: &mut R) -> SHExpansion {
    let mut e = SHExpansion::zeros(l_max);
    for l in 0..=l_max {
        let scale = amplitude / ((l as f64 + 1.0) * ((2 * l + 1) as f64).sqrt());
        for m in -(l as i64)..=(l as i64) {
            e.set_coeff(l, m, scale * rng.gen_range(-1.0..1.0));
        }
    }
    e
}
