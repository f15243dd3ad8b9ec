//! Projected descent for the Lambda-constrained Onofri functional
//! J_a(u) = a avg|grad u|^2 + 2 avg(u) - log avg(e^{2u}) over axisymmetric
//! fields with vanishing e^{2u}-weighted first moments, with the
//! exponential-density retraction and Euler-Lagrange multiplier extraction.
//!
//! The descent direction is the L^2 gradient preconditioned by
//! (-a Delta + 1)^{-1} (a Sobolev gradient), which keeps the iteration count
//! resolution-independent; `gradient_J` itself returns the plain L^2 density.

use crate::error::{Error, Result};
use crate::meanfield::{AxiProfile, LegendreBasis};
use serde::Serialize;
use std::sync::Arc;

/// Constraint handling for |Lambda(u)|^2 <= c0.
#[derive(Debug, Clone, Copy)]
pub enum ConstraintMode {
    /// reject steps that violate the bound (default)
    Backtrack,
    /// add weight * max(0, |Lambda|^2 - c0)^2 to the line-search objective
    Penalty { weight: f64 },
}

/// Bound specification for the constrained minimization.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintSpec {
    pub c0: f64,
    pub mode: ConstraintMode,
}

impl ConstraintSpec {
    pub fn backtrack(c0: f64) -> Result<Self> {
        Self::build(c0, ConstraintMode::Backtrack)
    }

    pub fn penalty(c0: f64, weight: f64) -> Result<Self> {
        Self::build(c0, ConstraintMode::Penalty { weight })
    }

    fn build(c0: f64, mode: ConstraintMode) -> Result<Self> {
        if !(0.0 < c0 && c0 < 2.0 / 3.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda bound c0 = {c0} outside (0, 2/3)"
            )));
        }
        Ok(Self { c0, mode })
    }
}

/// avg(e^{2u}) on the collocation nodes.
fn avg_exp_mass(u: &AxiProfile) -> f64 {
    u.basis().average(
        &u.values()
            .iter()
            .map(|v| (2.0 * v).exp())
            .collect::<Vec<_>>(),
    )
}

fn avg_exp_moment3(u: &AxiProfile) -> f64 {
    u.basis().average(
        &u.values()
            .iter()
            .zip(u.basis().nodes())
            .map(|(v, t)| (2.0 * v).exp() * t)
            .collect::<Vec<_>>(),
    )
}

/// |Lambda(u)|^2 = (3/2) beta^2 for axisymmetric u.
fn lambda_norm_sq_axi(u: &AxiProfile) -> f64 {
    let mass = avg_exp_mass(u);
    let beta = u.basis().average(
        &u.values()
            .iter()
            .zip(u.basis().nodes())
            .map(|(v, t)| (2.0 * v).exp() * (t * t - 1.0 / 3.0))
            .collect::<Vec<_>>(),
    ) / mass;
    1.5 * beta * beta
}

fn exp_guard(u: &AxiProfile) -> Result<()> {
    for (v, t) in u.values().iter().zip(u.basis().nodes()) {
        if 2.0 * v.abs() > 700.0 {
            let s = (1.0 - t * t).max(0.0).sqrt();
            return Err(Error::ExpOverflow {
                two_max_u: 2.0 * v.abs(),
                x: s,
                y: 0.0,
                z: *t,
            });
        }
    }
    Ok(())
}

/// J_a(u) = a avg|grad u|^2 + 2 avg(u) - log avg(e^{2u}); invariant under
/// u -> u + constant.
pub fn functional_j(u: &AxiProfile, a: f64) -> Result<f64> {
    exp_guard(u)?;
    let energy_avg = u.dirichlet_energy() / (4.0 * std::f64::consts::PI);
    Ok(a * energy_avg + 2.0 * u.mean() - avg_exp_mass(u).ln())
}

/// S_a(u) = a avg|grad u|^2 + 2 avg(u).
pub fn functional_s(u: &AxiProfile, a: f64) -> f64 {
    let energy_avg = u.dirichlet_energy() / (4.0 * std::f64::consts::PI);
    a * energy_avg + 2.0 * u.mean()
}

/// The L^2 gradient density 2(-a Delta u + 1 - e^{2u} / avg e^{2u}) at the
/// collocation nodes: the directional derivative of J is avg(gradient * phi).
pub fn gradient_j(u: &AxiProfile, a: f64) -> Result<Vec<f64>> {
    exp_guard(u)?;
    let basis = u.basis();
    let mass = avg_exp_mass(u);
    let mut lap_coeffs: Vec<f64> = u.coeffs().to_vec();
    for (l, c) in lap_coeffs.iter_mut().enumerate() {
        *c *= -((l * (l + 1)) as f64);
    }
    let lap = AxiProfile::from_coeffs(basis.clone(), &lap_coeffs)?;
    Ok(u.values()
        .iter()
        .zip(lap.values())
        .map(|(v, l)| 2.0 * (-a * l + 1.0 - (2.0 * v).exp() / mass))
        .collect())
}

/// Retraction onto vanishing e^{2u}-weighted first moments: the adjusted
/// density e^{2w} - 3 (avg e^{2w} x3) x3 must stay positive; the retracted
/// field is half its logarithm. For axisymmetric fields only the x3 moment
/// is nontrivial.
pub fn retract_to_m1(w: &AxiProfile) -> Result<AxiProfile> {
    exp_guard(w)?;
    let basis = w.basis();
    let m3 = avg_exp_moment3(w);
    let mut adjusted = Vec::with_capacity(w.values().len());
    for (v, t) in w.values().iter().zip(basis.nodes()) {
        let d = (2.0 * v).exp() - 3.0 * m3 * t;
        if d <= 0.0 {
            let s = (1.0 - t * t).max(0.0).sqrt();
            return Err(Error::RetractionFailure {
                value: d,
                x: s,
                y: 0.0,
                z: *t,
            });
        }
        adjusted.push(0.5 * d.ln());
    }
    AxiProfile::from_values(basis.clone(), &adjusted)
}

/// The multipliers lambda_i = 3 avg((-a Delta u + 1) e^{-2u} x_i); the x1
/// and x2 components vanish identically for axisymmetric fields.
pub fn multipliers(u: &AxiProfile, a: f64) -> Result<[f64; 3]> {
    exp_guard(u)?;
    let basis = u.basis();
    let mut lap_coeffs: Vec<f64> = u.coeffs().to_vec();
    for (l, c) in lap_coeffs.iter_mut().enumerate() {
        *c *= -((l * (l + 1)) as f64);
    }
    let lap = AxiProfile::from_coeffs(basis.clone(), &lap_coeffs)?;
    let integrand: Vec<f64> = u
        .values()
        .iter()
        .zip(lap.values())
        .zip(basis.nodes())
        .map(|((v, l), t)| (-a * l + 1.0) * (-2.0 * v).exp() * t)
        .collect();
    Ok([0.0, 0.0, 3.0 * basis.average(&integrand)])
}

/// Result of one constrained minimization run.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub profile: AxiProfile,
    pub j_value: f64,
    pub s_value: f64,
    pub multipliers: [f64; 3],
    pub iterations: usize,
    pub feasible_moments: bool,
    pub feasible_lambda: bool,
    pub sup_norm: f64,
    pub grad_norm: f64,
    /// largest |avg e^{2u} x3| over all accepted iterates
    pub max_moment_defect: f64,
    /// largest |Lambda|^2 - c0 excess over all accepted iterates
    pub max_lambda_excess: f64,
}

/// JSON record for one minimization run.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizeRecord {
    pub a: f64,
    pub c0: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "S_a")]
    pub s_a: f64,
    pub lambda: [f64; 3],
    pub iters: usize,
    pub feasible: FeasibleRecord,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibleRecord {
    pub moments: bool,
    pub lambda_bound: bool,
}

impl MinimizeResult {
    pub fn to_record(&self, a: f64, c0: f64) -> MinimizeRecord {
        MinimizeRecord {
            a,
            c0,
            j: self.j_value,
            s_a: self.s_value,
            lambda: self.multipliers,
            iters: self.iterations,
            feasible: FeasibleRecord {
                moments: self.feasible_moments,
                lambda_bound: self.feasible_lambda,
            },
            sup_norm: self.sup_norm,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 5000,
        }
    }
}

/// Mass normalization: subtract (1/2) log avg e^{2u} so that avg e^{2u} = 1;
/// leaves J and the moment constraint unchanged.
fn normalize_mass(u: &AxiProfile) -> Result<AxiProfile> {
    let shift = 0.5 * avg_exp_mass(u).ln();
    let mut coeffs = u.coeffs().to_vec();
    coeffs[0] -= shift;
    AxiProfile::from_coeffs(u.basis().clone(), &coeffs)
}

fn feasibility(u: &AxiProfile, spec: &ConstraintSpec) -> (bool, bool) {
    let m3 = avg_exp_moment3(u).abs();
    let l2 = lambda_norm_sq_axi(u);
    (m3 < 1e-8, l2 <= spec.c0 + 1e-10)
}

/// Projected descent: Sobolev-preconditioned gradient step with Armijo
/// backtracking, mass normalization and moment retraction after every step,
/// and rejection of steps violating the Lambda bound (backtrack mode).
pub fn minimize(
    a: f64,
    spec: &ConstraintSpec,
    init: &AxiProfile,
    opts: &MinimizeOptions,
) -> Result<MinimizeResult> {
    if !(0.0 < a && a < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "parameter a = {a} outside (0, 1)"
        )));
    }
    let basis = init.basis().clone();
    // project the initial guess onto the feasible set
    let mut u = retract_to_m1(&normalize_mass(init)?)?;
    u = normalize_mass(&u)?;
    if !feasibility(&u, spec).1 {
        return Err(Error::Infeasible(format!(
            "initial point violates |Lambda|^2 <= {}",
            spec.c0
        )));
    }

    let line_objective = |v: &AxiProfile| -> Result<f64> {
        let mut val = functional_j(v, a)?;
        if let ConstraintMode::Penalty { weight } = spec.mode {
            let excess = (lambda_norm_sq_axi(v) - spec.c0).max(0.0);
            val += weight * excess * excess;
        }
        Ok(val)
    };

    let mut j_cur = line_objective(&u)?;
    let mut iterations = 0;
    let mut grad_norm = f64::INFINITY;
    let mut max_moment_defect = avg_exp_moment3(&u).abs();
    let mut max_lambda_excess = (lambda_norm_sq_axi(&u) - spec.c0).max(0.0);
    for iter in 0..opts.max_iter {
        iterations = iter;
        let g = gradient_j(&u, a)?;
        grad_norm = basis
            .average(&g.iter().map(|v| v * v).collect::<Vec<_>>())
            .sqrt();
        if grad_norm < opts.grad_tol {
            break;
        }
        // Sobolev direction: coefficient l of the gradient scaled by
        // 1 / (a l(l+1) + 1)
        let g_profile = AxiProfile::from_values(basis.clone(), &g)?;
        let mut dir_coeffs: Vec<f64> = g_profile.coeffs().to_vec();
        for (l, c) in dir_coeffs.iter_mut().enumerate() {
            *c /= a * (l * (l + 1)) as f64 + 1.0;
        }
        // descent slope avg(g * d) with d = -preconditioned g
        let d_profile = AxiProfile::from_coeffs(basis.clone(), &dir_coeffs)?;
        let slope: f64 = basis.average(
            &g.iter()
                .zip(d_profile.values())
                .map(|(gv, dv)| gv * dv)
                .collect::<Vec<_>>(),
        );

        let mut step = 1.0;
        let mut accepted = false;
        while step >= 1e-6 {
            let coeffs: Vec<f64> = u
                .coeffs()
                .iter()
                .zip(&dir_coeffs)
                .map(|(c, d)| c - step * d)
                .collect();
            let trial = AxiProfile::from_coeffs(basis.clone(), &coeffs)?;
            let trial = match retract_to_m1(&normalize_mass(&trial)?) {
                Ok(t) => normalize_mass(&t)?,
                Err(_) => {
                    step *= 0.5;
                    continue;
                }
            };
            if matches!(spec.mode, ConstraintMode::Backtrack)
                && lambda_norm_sq_axi(&trial) > spec.c0 + 1e-10
            {
                step *= 0.5;
                continue;
            }
            let j_trial = match line_objective(&trial) {
                Ok(v) => v,
                Err(_) => {
                    step *= 0.5;
                    continue;
                }
            };
            if j_trial <= j_cur - 1e-4 * step * slope {
                max_moment_defect = max_moment_defect.max(avg_exp_moment3(&trial).abs());
                max_lambda_excess =
                    max_lambda_excess.max((lambda_norm_sq_axi(&trial) - spec.c0).max(0.0));
                u = trial;
                j_cur = j_trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            if grad_norm < 100.0 * opts.grad_tol {
                break; // line search exhausted at numerical floor
            }
            return Err(Error::DescentStall { iter });
        }
    }

    let (feasible_moments, feasible_lambda) = feasibility(&u, spec);
    let j_value = functional_j(&u, a)?;
    let s_value = functional_s(&u, a);
    let mults = multipliers(&u, a)?;
    let sup_norm = u.sup_norm();
    Ok(MinimizeResult {
        profile: u,
        j_value,
        s_value,
        multipliers: mults,
        iterations,
        feasible_moments,
        feasible_lambda,
        sup_norm,
        grad_norm,
        max_moment_defect,
        max_lambda_excess,
    })
}

/// Random small axisymmetric profile for seeded runs: band-limited
/// coefficients shrinking in degree, scaled to the requested sup norm.
pub fn random_profile<R: rand::Rng>(
    basis: Arc<LegendreBasis>,
    max_degree: usize,
    sup_bound: f64,
    rng: &mut R,
) -> Result<AxiProfile> {
    let mut coeffs = vec![0.0; basis.l_max() + 1];
    for (l, c) in coeffs.iter_mut().enumerate().take(max_degree + 1).skip(1) {
        *c = rng.gen_range(-1.0..1.0) / (l as f64);
    }
    let p = AxiProfile::from_coeffs(basis.clone(), &coeffs)?;
    let sup = p.sup_norm();
    if sup == 0.0 {
        return Ok(p);
    }
    let scale = sup_bound / sup;
    let coeffs: Vec<f64> = coeffs.iter().map(|c| c * scale).collect();
    AxiProfile::from_coeffs(basis, &coeffs)
}
