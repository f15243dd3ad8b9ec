//! Scalar fields on the sphere and the integral functionals of them: mean,
//! exponential mass, exponential first moments, Dirichlet energy and the
//! Onofri gap.
//!
//! All averaged quantities use avg = (1/4pi) * integral; `dirichlet_energy`
//! returns the raw (non-averaged) integral. This one convention is used
//! everywhere in the crate.

use crate::error::{Error, Result};
use crate::sphere::{geodesic_distance, CapPatch, QuadratureGrid, Rotation, SpherePoint};
use crate::spectral::SHExpansion;
use std::io::{BufRead, Write};
use std::sync::Arc;

pub const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Exponentials of 2u beyond this threshold are treated as overflow.
const EXP_GUARD: f64 = 700.0;

pub type Evaluator = Arc<dyn Fn(&SpherePoint) -> f64 + Send + Sync>;
pub type GradientEvaluator = Arc<dyn Fn(&SpherePoint) -> [f64; 3] + Send + Sync>;

/// Cap patches attached to a field, with cached samples and the masked
/// global rule.
#[derive(Clone)]
struct CapSet {
    patches: Vec<CapPatch>,
    cap_samples: Vec<Vec<f64>>,
    /// true when the global node lies inside some cap and is masked out
    masked: Vec<bool>,
    /// rescales unmasked global weights so the composite rule reproduces the
    /// exact complement area (keeps constants exact to rounding)
    outside_factor: f64,
}

/// A real function on the unit sphere: samples on a quadrature grid plus
/// optional closed-form value/gradient evaluators, an optional spherical
/// harmonic expansion, and optional concentration cap patches.
#[derive(Clone)]
pub struct ScalarField {
    grid: Arc<QuadratureGrid>,
    samples: Vec<f64>,
    evaluator: Option<Evaluator>,
    gradient: Option<GradientEvaluator>,
    expansion: Option<SHExpansion>,
    caps: Option<CapSet>,
}

impl ScalarField {
    /// Samples a closed-form evaluator on the grid.
    pub fn from_fn<F>(grid: Arc<QuadratureGrid>, f: F) -> Result<Self>
    where
        F: Fn(&SpherePoint) -> f64 + Send + Sync + 'static,
    {
        let samples: Vec<f64> = grid.nodes().iter().map(&f).collect();
        check_finite(&samples, grid.nodes())?;
        Ok(Self {
            grid,
            samples,
            evaluator: Some(Arc::new(f)),
            gradient: None,
            expansion: None,
            caps: None,
        })
    }

    /// Samples a closed-form evaluator that also carries a tangent gradient.
    pub fn from_fn_with_gradient<F, G>(grid: Arc<QuadratureGrid>, f: F, grad: G) -> Result<Self>
    where
        F: Fn(&SpherePoint) -> f64 + Send + Sync + 'static,
        G: Fn(&SpherePoint) -> [f64; 3] + Send + Sync + 'static,
    {
        let mut field = Self::from_fn(grid, f)?;
        field.gradient = Some(Arc::new(grad));
        Ok(field)
    }

    /// Wraps raw samples with no closed form attached.
    pub fn from_samples(grid: Arc<QuadratureGrid>, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "sample count {} does not match grid size {}",
                samples.len(),
                grid.len()
            )));
        }
        check_finite(&samples, grid.nodes())?;
        Ok(Self {
            grid,
            samples,
            evaluator: None,
            gradient: None,
            expansion: None,
            caps: None,
        })
    }

    pub(crate) fn attach_expansion(mut self, expansion: SHExpansion) -> Self {
        self.expansion = Some(expansion);
        self
    }

    /// Attaches cap patches; requires a closed-form evaluator to sample them.
    /// Global nodes inside any cap are masked out and the remaining weights
    /// rescaled to the exact complement area.
    pub fn with_caps(mut self, patches: Vec<CapPatch>) -> Result<Self> {
        let eval = self
            .evaluator
            .clone()
            .ok_or_else(|| Error::InvalidArgument("cap patches need a closed-form evaluator".into()))?;
        let mut cap_samples = Vec::with_capacity(patches.len());
        for patch in &patches {
            let vals: Vec<f64> = patch.nodes().iter().map(|p| eval(p)).collect();
            check_finite(&vals, patch.nodes())?;
            cap_samples.push(vals);
        }
        let masked: Vec<bool> = self
            .grid
            .nodes()
            .iter()
            .map(|p| {
                patches
                    .iter()
                    .any(|c| geodesic_distance(p, &c.center) < c.outer_radius)
            })
            .collect();
        let cap_area: f64 = patches.iter().map(|c| c.cap_area()).sum();
        let outside_weight: f64 = self
            .grid
            .weights()
            .iter()
            .zip(&masked)
            .filter(|(_, m)| !**m)
            .map(|(w, _)| w)
            .sum();
        if outside_weight <= 0.0 {
            return Err(Error::InvalidArgument(
                "caps mask out the entire global grid".into(),
            ));
        }
        let outside_factor = (FOUR_PI - cap_area) / outside_weight;
        self.caps = Some(CapSet {
            patches,
            cap_samples,
            masked,
            outside_factor,
        });
        Ok(self)
    }

    pub fn grid(&self) -> &QuadratureGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<QuadratureGrid> {
        self.grid.clone()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn has_evaluator(&self) -> bool {
        self.evaluator.is_some()
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn expansion(&self) -> Option<&SHExpansion> {
        self.expansion.as_ref()
    }

    pub fn cap_patches(&self) -> Option<&[CapPatch]> {
        self.caps.as_ref().map(|c| c.patches.as_slice())
    }

    pub fn eval(&self, p: &SpherePoint) -> Option<f64> {
        self.evaluator.as_ref().map(|f| f(p))
    }

    pub fn eval_gradient(&self, p: &SpherePoint) -> Option<[f64; 3]> {
        self.gradient.as_ref().map(|g| g(p))
    }

    /// Folds an accumulator over every composite quadrature node
    /// (masked global rule plus cap patches), passing (weight, u, point).
    pub fn fold_composite<T, F>(&self, init: T, mut f: F) -> T
    where
        F: FnMut(T, f64, f64, &SpherePoint) -> T,
    {
        let mut acc = init;
        match &self.caps {
            None => {
                for ((p, w), u) in self
                    .grid
                    .nodes()
                    .iter()
                    .zip(self.grid.weights())
                    .zip(&self.samples)
                {
                    acc = f(acc, *w, *u, p);
                }
            }
            Some(caps) => {
                for (((p, w), u), m) in self
                    .grid
                    .nodes()
                    .iter()
                    .zip(self.grid.weights())
                    .zip(&self.samples)
                    .zip(&caps.masked)
                {
                    if !m {
                        acc = f(acc, w * caps.outside_factor, *u, p);
                    }
                }
                for (patch, vals) in caps.patches.iter().zip(&caps.cap_samples) {
                    for ((p, w), u) in patch.nodes().iter().zip(patch.weights()).zip(vals) {
                        acc = f(acc, *w, *u, p);
                    }
                }
            }
        }
        acc
    }

    /// Integral of g(u, p) over the composite rule; rejects non-finite values.
    pub fn integrate_density<F>(&self, g: F) -> Result<f64>
    where
        F: Fn(f64, &SpherePoint) -> f64,
    {
        self.fold_composite(Ok(0.0), |acc, w, u, p| {
            let acc = acc?;
            let v = g(u, p);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    value: v,
                    x: p.x1,
                    y: p.x2,
                    z: p.x3,
                });
            }
            Ok(acc + w * v)
        })
    }

    /// Location of the maximal sample over all composite nodes.
    fn max_sample(&self) -> (f64, SpherePoint) {
        self.fold_composite(
            (f64::NEG_INFINITY, SpherePoint::north_pole()),
            |(best, at), _, u, p| {
                if u > best {
                    (u, *p)
                } else {
                    (best, at)
                }
            },
        )
    }

    fn guard_exp(&self) -> Result<()> {
        let (max_u, at) = self.max_sample();
        if 2.0 * max_u > EXP_GUARD {
            return Err(Error::ExpOverflow {
                two_max_u: 2.0 * max_u,
                x: at.x1,
                y: at.x2,
                z: at.x3,
            });
        }
        Ok(())
    }

    /// The field u + c; the moment matrix and exponential moments scale
    /// consistently, the expansion shifts only its constant coefficient.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.samples {
            *v += c;
        }
        if let Some(caps) = &mut out.caps {
            for vals in &mut caps.cap_samples {
                for v in vals {
                    *v += c;
                }
            }
        }
        if let Some(f) = &self.evaluator {
            let f = f.clone();
            out.evaluator = Some(Arc::new(move |p: &SpherePoint| f(p) + c));
        }
        if let Some(e) = &mut out.expansion {
            e.shift_constant(c);
        }
        out
    }

    /// The composition u(A x): grid nodes are rotated before evaluation,
    /// so a closed-form evaluator is required (sampled-only fields reject
    /// composition to keep interpolation error out of equivariance checks).
    pub fn compose_rotation(&self, rot: &Rotation) -> Result<Self> {
        let f = self
            .evaluator
            .clone()
            .ok_or_else(|| Error::InvalidArgument("composition needs a closed-form evaluator".into()))?;
        let rot_c = *rot;
        let eval = move |p: &SpherePoint| f(&rot_c.apply(p));
        let mut out = Self::from_fn(self.grid.clone(), eval)?;
        if let Some(g) = &self.gradient {
            let g = g.clone();
            let rot_c = *rot;
            out.gradient = Some(Arc::new(move |p: &SpherePoint| {
                let gv = g(&rot_c.apply(p));
                let m = rot_c.matrix();
                // gradient of u(Ax) is A^T (grad u)(Ax)
                [
                    m[(0, 0)] * gv[0] + m[(1, 0)] * gv[1] + m[(2, 0)] * gv[2],
                    m[(0, 1)] * gv[0] + m[(1, 1)] * gv[1] + m[(2, 1)] * gv[2],
                    m[(0, 2)] * gv[0] + m[(1, 2)] * gv[1] + m[(2, 2)] * gv[2],
                ]
            }));
        }
        if let Some(caps) = &self.caps {
            let inv = rot.transpose();
            let patches: Vec<CapPatch> =
                caps.patches.iter().map(|c| c.transformed(&inv)).collect();
            out = out.with_caps(patches)?;
        }
        Ok(out)
    }

    /// Writes the grid descriptor and samples as CSV for regression fixtures.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# onofri-lab scalar field")?;
        writeln!(w, "L,{}", self.grid.latitude_count())?;
        for s in &self.samples {
            writeln!(w, "{s:.17e}")?;
        }
        Ok(())
    }

    /// Reads a field written by [`ScalarField::write_csv`]; the grid is rebuilt
    /// from the stored latitude count.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty field file".into()))??;
        if !header.starts_with("# onofri-lab scalar field") {
            return Err(Error::InvalidArgument("unrecognized field file header".into()));
        }
        let lline = lines
            .next()
            .ok_or_else(|| Error::InvalidArgument("missing grid descriptor".into()))??;
        let l: usize = lline
            .strip_prefix("L,")
            .ok_or_else(|| Error::InvalidArgument("malformed grid descriptor".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::InvalidArgument(format!("bad latitude count: {e}")))?;
        let grid = Arc::new(crate::sphere::build_gauss_grid(l)?);
        let mut samples = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            samples.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidArgument(format!("bad sample: {e}")))?,
            );
        }
        Self::from_samples(grid, samples)
    }
}

fn check_finite(values: &[f64], nodes: &[SpherePoint]) -> Result<()> {
    for (v, p) in values.iter().zip(nodes) {
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                value: *v,
                x: p.x1,
                y: p.x2,
                z: p.x3,
            });
        }
    }
    Ok(())
}

/// Average of u over the sphere, (1/4pi) * integral of u.
pub fn mean_value(u: &ScalarField) -> f64 {
    u.fold_composite(0.0, |acc, w, v, _| acc + w * v) / FOUR_PI
}

/// Average of e^{2u}; fails on exponent overflow with the maximal sample's
/// location.
pub fn exp_mass(u: &ScalarField) -> Result<f64> {
    u.guard_exp()?;
    Ok(u.integrate_density(|v, _| (2.0 * v).exp())? / FOUR_PI)
}

/// The vector avg(e^{2u} x_i), i = 1, 2, 3.
pub fn exp_first_moments(u: &ScalarField) -> Result<[f64; 3]> {
    u.guard_exp()?;
    let acc = u.fold_composite([0.0; 3], |mut acc, w, v, p| {
        let e = (2.0 * v).exp() * w;
        acc[0] += e * p.x1;
        acc[1] += e * p.x2;
        acc[2] += e * p.x3;
        acc
    });
    Ok([acc[0] / FOUR_PI, acc[1] / FOUR_PI, acc[2] / FOUR_PI])
}

/// Raw Dirichlet energy, the integral of |grad u|^2 (not averaged).
///
/// Uses the analytic tangent gradient when the field carries one, otherwise
/// the spectral sum of an attached band-limited expansion.
pub fn dirichlet_energy(u: &ScalarField) -> Result<f64> {
    if u.has_gradient() {
        return u.integrate_density_gradient();
    }
    if let Some(e) = u.expansion() {
        return Ok(e.dirichlet_energy());
    }
    Err(Error::NoGradientRepresentation)
}

impl ScalarField {
    fn integrate_density_gradient(&self) -> Result<f64> {
        let g = self.gradient.clone().expect("checked by caller");
        self.fold_composite(Ok(0.0), |acc, w, _, p| {
            let acc = acc?;
            let gv = g(p);
            let v = gv[0] * gv[0] + gv[1] * gv[1] + gv[2] * gv[2];
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    value: v,
                    x: p.x1,
                    y: p.x2,
                    z: p.x3,
                });
            }
            Ok(acc + w * v)
        })
    }
}

/// The Moser-Trudinger-Onofri gap
/// avg|grad u|^2 + 2 avg(u) - log avg(e^{2u}); the classical inequality
/// asserts this is nonnegative.
pub fn onofri_gap(u: &ScalarField) -> Result<f64> {
    let energy_avg = dirichlet_energy(u)? / FOUR_PI;
    let mass = exp_mass(u)?;
    Ok(energy_avg + 2.0 * mean_value(u) - mass.ln())
}
