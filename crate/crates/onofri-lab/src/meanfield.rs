//! Axisymmetric Newton solver and pseudo-arclength continuation for the mean
//! field equation -a Delta u + 1 = e^{2u} on the sphere, with branch
//! switching at the l = 2 bifurcation a = 1/3 and per-point diagnostics
//! (mass identity, Kazdan-Warner defect, Lambda_33, near-bifurcation
//! expansion quality).

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::sphere::{gauss_legendre, QuadratureGrid, SpherePoint};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

pub const ONE_THIRD: f64 = 1.0 / 3.0;

/// Default spectral resolution; raised to 128 near blow-up.
pub const DEFAULT_L_MAX: usize = 64;
const RAISED_L_MAX: usize = 128;

/// Legendre collocation context: Gauss-Legendre nodes in t = x3, quadrature
/// weights and the Vandermonde P_l(t_k).
#[derive(Debug, Clone)]
pub struct LegendreBasis {
    l_max: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    vand: DMatrix<f64>,
}

/// Evaluates P_0..P_l_max at t by the three-term recurrence.
fn legendre_row(t: f64, l_max: usize) -> Vec<f64> {
    let mut row = vec![0.0; l_max + 1];
    row[0] = 1.0;
    if l_max >= 1 {
        row[1] = t;
    }
    for l in 2..=l_max {
        let lf = l as f64;
        row[l] = ((2.0 * lf - 1.0) * t * row[l - 1] - (lf - 1.0) * row[l - 2]) / lf;
    }
    row
}

/// Evaluates P_l'(t) for all l via P_l' = P_{l-2}' + (2l-1) P_{l-1},
/// stable at t = +-1.
fn legendre_deriv_row(t: f64, l_max: usize) -> Vec<f64> {
    let p = legendre_row(t, l_max);
    let mut d = vec![0.0; l_max + 1];
    if l_max >= 1 {
        d[1] = 1.0;
    }
    for l in 2..=l_max {
        d[l] = d[l - 2] + (2.0 * l as f64 - 1.0) * p[l - 1];
    }
    d
}

impl LegendreBasis {
    /// Degree cutoff l_max >= 32; collocation at l_max + 1 Gauss-Legendre
    /// nodes makes the coefficient <-> value round trip exact by quadrature.
    pub fn new(l_max: usize) -> Result<Arc<Self>> {
        if l_max < 32 {
            return Err(Error::InvalidArgument(format!(
                "degree cutoff l_max = {l_max} must be >= 32"
            )));
        }
        let n = l_max + 1;
        let (nodes, weights) = gauss_legendre(n);
        let mut vand = DMatrix::zeros(n, l_max + 1);
        for (k, t) in nodes.iter().enumerate() {
            let row = legendre_row(*t, l_max);
            for (l, v) in row.iter().enumerate() {
                vand[(k, l)] = *v;
            }
        }
        Ok(Arc::new(Self {
            l_max,
            nodes,
            weights,
            vand,
        }))
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Coefficients -> node values.
    fn synth(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.vand * coeffs
    }

    /// Node values -> coefficients, c_l = (2l+1)/2 sum_k w_k P_l(t_k) u_k.
    fn analyze(&self, values: &DVector<f64>) -> DVector<f64> {
        let mut c = DVector::zeros(self.l_max + 1);
        for l in 0..=self.l_max {
            let mut acc = 0.0;
            for k in 0..self.node_count() {
                acc += self.weights[k] * self.vand[(k, l)] * values[k];
            }
            c[l] = (2.0 * l as f64 + 1.0) / 2.0 * acc;
        }
        c
    }

    /// avg over the sphere of a node-value vector, (1/2) sum w_k f_k.
    pub fn average(&self, values: &[f64]) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(values)
            .map(|(w, v)| w * v)
            .sum::<f64>()
    }
}

/// Axisymmetric field u(x3) in a Legendre basis: coefficients plus
/// collocation values, kept consistent.
#[derive(Debug, Clone)]
pub struct AxiProfile {
    basis: Arc<LegendreBasis>,
    coeffs: DVector<f64>,
    values: DVector<f64>,
}

impl AxiProfile {
    pub fn zero(basis: Arc<LegendreBasis>) -> Self {
        let n = basis.node_count();
        Self {
            coeffs: DVector::zeros(basis.l_max + 1),
            values: DVector::zeros(n),
            basis,
        }
    }

    pub fn from_coeffs(basis: Arc<LegendreBasis>, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > basis.l_max + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients exceed basis cutoff {}",
                coeffs.len(),
                basis.l_max
            )));
        }
        let mut c = DVector::zeros(basis.l_max + 1);
        for (l, v) in coeffs.iter().enumerate() {
            c[l] = *v;
        }
        let values = basis.synth(&c);
        Ok(Self {
            basis,
            coeffs: c,
            values,
        })
    }

    pub fn from_values(basis: Arc<LegendreBasis>, values: &[f64]) -> Result<Self> {
        if values.len() != basis.node_count() {
            return Err(Error::InvalidArgument(format!(
                "{} values do not match {} collocation nodes",
                values.len(),
                basis.node_count()
            )));
        }
        let v = DVector::from_column_slice(values);
        let coeffs = basis.analyze(&v);
        Ok(Self {
            values: basis.synth(&coeffs),
            basis,
            coeffs,
        })
    }

    pub fn basis(&self) -> &Arc<LegendreBasis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        self.coeffs.as_slice()
    }

    pub fn values(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn coeff(&self, l: usize) -> f64 {
        if l <= self.basis.l_max {
            self.coeffs[l]
        } else {
            0.0
        }
    }

    /// Evaluates u(t) anywhere in [-1, 1] by the Legendre recurrence.
    pub fn eval(&self, t: f64) -> f64 {
        let row = legendre_row(t, self.basis.l_max);
        row.iter().zip(self.coeffs.iter()).map(|(p, c)| p * c).sum()
    }

    /// u'(t).
    pub fn eval_deriv(&self, t: f64) -> f64 {
        let row = legendre_deriv_row(t, self.basis.l_max);
        row.iter().zip(self.coeffs.iter()).map(|(p, c)| p * c).sum()
    }

    /// Sup norm over a fine grid including the endpoints.
    pub fn sup_norm(&self) -> f64 {
        let m = (4 * self.basis.l_max).max(256);
        let mut best = 0.0f64;
        for j in 0..=m {
            let t = (std::f64::consts::PI * j as f64 / m as f64).cos();
            best = best.max(self.eval(t).abs());
        }
        best
    }

    /// Mean over the sphere.
    pub fn mean(&self) -> f64 {
        self.basis.average(self.values.as_slice())
    }

    /// Raw Dirichlet energy via the spectral sum
    /// sum_l l(l+1) c_l^2 * 4 pi / (2l+1).
    pub fn dirichlet_energy(&self) -> f64 {
        let mut acc = 0.0;
        for l in 1..=self.basis.l_max {
            let lf = l as f64;
            acc += lf * (lf + 1.0) * self.coeffs[l] * self.coeffs[l] * 2.0 / (2.0 * lf + 1.0);
        }
        acc * 2.0 * std::f64::consts::PI
    }

    /// Re-expands the profile in another basis (coefficient padding or
    /// truncation).
    pub fn resampled(&self, basis: Arc<LegendreBasis>) -> Self {
        let mut c = DVector::zeros(basis.l_max + 1);
        for l in 0..=self.basis.l_max.min(basis.l_max) {
            c[l] = self.coeffs[l];
        }
        let values = basis.synth(&c);
        Self {
            basis,
            coeffs: c,
            values,
        }
    }

    /// Bridges to a full 2D field with closed-form value and tangent
    /// gradient (u depends on x3 only).
    pub fn to_scalar_field(&self, grid: Arc<QuadratureGrid>) -> Result<ScalarField> {
        let me = self.clone();
        let me_grad = self.clone();
        ScalarField::from_fn_with_gradient(
            grid,
            move |p: &SpherePoint| me.eval(p.x3),
            move |p: &SpherePoint| {
                let du = me_grad.eval_deriv(p.x3);
                // grad x3 = e3 - x3 p
                [
                    -du * p.x3 * p.x1,
                    -du * p.x3 * p.x2,
                    du * (1.0 - p.x3 * p.x3),
                ]
            },
        )
    }
}

fn exp_guard_values(values: &DVector<f64>, nodes: &[f64]) -> Result<()> {
    for (v, t) in values.iter().zip(nodes) {
        if 2.0 * v > 700.0 {
            let s = (1.0 - t * t).max(0.0).sqrt();
            return Err(Error::ExpOverflow {
                two_max_u: 2.0 * v,
                x: s,
                y: 0.0,
                z: *t,
            });
        }
    }
    Ok(())
}

/// Residual r(t_k) = -a * Delta u + 1 - e^{2u} at the collocation nodes;
/// the Laplacian is applied spectrally (Delta P_l = -l(l+1) P_l).
pub fn residual(u: &AxiProfile, a: f64) -> Result<Vec<f64>> {
    if a <= 0.0 {
        return Err(Error::InvalidArgument(format!("parameter a = {a} must be positive")));
    }
    exp_guard_values(&u.values, u.basis.nodes())?;
    Ok(residual_inner(&u.basis, &u.coeffs, &u.values, a)
        .as_slice()
        .to_vec())
}

fn residual_inner(
    basis: &LegendreBasis,
    coeffs: &DVector<f64>,
    values: &DVector<f64>,
    a: f64,
) -> DVector<f64> {
    let mut lap_coeffs = coeffs.clone();
    for l in 0..=basis.l_max {
        lap_coeffs[l] *= -((l * (l + 1)) as f64);
    }
    let lap = basis.synth(&lap_coeffs);
    let mut r = DVector::zeros(basis.node_count());
    for k in 0..basis.node_count() {
        r[k] = -a * lap[k] + 1.0 - (2.0 * values[k]).exp();
    }
    r
}

/// Jacobian of the residual with respect to the Legendre coefficients:
/// J[k][l] = (a l(l+1) - 2 e^{2u(t_k)}) P_l(t_k).
pub fn newton_jacobian(u: &AxiProfile, a: f64) -> DMatrix<f64> {
    let basis = &u.basis;
    let n = basis.node_count();
    let mut j = DMatrix::zeros(n, basis.l_max + 1);
    for k in 0..n {
        let e2u = (2.0 * u.values[k]).exp();
        for l in 0..=basis.l_max {
            j[(k, l)] = (a * (l * (l + 1)) as f64 - 2.0 * e2u) * basis.vand[(k, l)];
        }
    }
    j
}

/// Eigenvalues a l(l+1) - 2 of the linearization at u = 0 restricted to
/// degree-l harmonics; zero crossings at a = 2 / (l (l+1)).
pub fn trivial_spectrum(a: f64, max_l: usize) -> Vec<(usize, f64)> {
    (0..=max_l)
        .map(|l| (l, a * (l * (l + 1)) as f64 - 2.0))
        .collect()
}

const ARMIJO_MIN_STEP: f64 = 1e-4;

/// Damped Newton iteration on the collocation system; returns a profile with
/// max-norm residual below `tol`.
pub fn newton_solve(a: f64, init: &AxiProfile, tol: f64, max_iter: usize) -> Result<AxiProfile> {
    let (profile, _iters) = newton_solve_counted(a, init, tol, max_iter)?;
    Ok(profile)
}

/// As [`newton_solve`], also reporting the iteration count.
pub fn newton_solve_counted(
    a: f64,
    init: &AxiProfile,
    tol: f64,
    max_iter: usize,
) -> Result<(AxiProfile, usize)> {
    if a <= 0.0 {
        return Err(Error::InvalidArgument(format!("parameter a = {a} must be positive")));
    }
    let basis = init.basis.clone();
    let mut coeffs = init.coeffs.clone();
    let mut values = basis.synth(&coeffs);
    let mut trace = Vec::new();
    for iter in 0..max_iter {
        exp_guard_values(&values, basis.nodes())?;
        let r = residual_inner(&basis, &coeffs, &values, a);
        let r_inf = r.amax();
        trace.push(r_inf);
        if r_inf < tol {
            return Ok((
                AxiProfile {
                    basis,
                    coeffs,
                    values,
                },
                iter,
            ));
        }
        let profile = AxiProfile {
            basis: basis.clone(),
            coeffs: coeffs.clone(),
            values: values.clone(),
        };
        let jac = newton_jacobian(&profile, a);
        let lu = jac.lu();
        let delta = lu
            .solve(&(-&r))
            .ok_or(Error::SingularJacobian { a })?;
        // Armijo backtracking on the euclidean residual norm
        let r0 = r.norm();
        let mut step = 1.0;
        let mut accepted = false;
        while step >= ARMIJO_MIN_STEP {
            let cand = &coeffs + step * &delta;
            let vals = basis.synth(&cand);
            if vals.iter().all(|v| 2.0 * v <= 700.0) {
                let rn = residual_inner(&basis, &cand, &vals, a).norm();
                if rn <= (1.0 - 1e-4 * step) * r0 {
                    coeffs = cand;
                    values = vals;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonDivergence {
                iters: iter + 1,
                trace,
            });
        }
    }
    Err(Error::NewtonDivergence {
        iters: max_iter,
        trace,
    })
}

/// Per-point diagnostics of a solution profile.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    /// |avg e^{2u} - 1| (the mass identity forced by integrating the
    /// equation over the sphere)
    pub mass_defect: f64,
    /// avg(e^{2u} x3); x1 and x2 moments vanish identically by axisymmetry
    pub kw3: f64,
    /// beta = Lambda_33(u)
    pub beta: f64,
    /// |Lambda|^2 = (3/2) beta^2 for axisymmetric fields
    pub lambda_norm_sq: f64,
    pub sup_norm: f64,
    pub mean: f64,
    /// beta / sup_norm, tending to 4/15 on the branch near a = 1/3
    pub beta_ratio: f64,
    /// normalized L^2 inner product of u - mean with (3/2)(x3^2 - 1/3)
    pub profile_corr: f64,
    /// raw L^2 norm of u - mean - (15/(8a)) beta (x3^2 - 1/3)
    pub uhat_l2: f64,
}

/// Computes all diagnostics of a profile at parameter a.
pub fn diagnostics(u: &AxiProfile, a: f64) -> Result<Diagnostics> {
    exp_guard_values(&u.values, u.basis.nodes())?;
    let basis = &u.basis;
    let nodes = basis.nodes();
    let e2u: Vec<f64> = u.values.iter().map(|v| (2.0 * v).exp()).collect();
    let mass = basis.average(&e2u);
    let kw3 = basis.average(
        &e2u.iter()
            .zip(nodes)
            .map(|(e, t)| e * t)
            .collect::<Vec<_>>(),
    );
    let beta = basis.average(
        &e2u.iter()
            .zip(nodes)
            .map(|(e, t)| e * (t * t - ONE_THIRD))
            .collect::<Vec<_>>(),
    ) / mass;
    let mean = u.mean();
    let sup = u.sup_norm();
    let um: Vec<f64> = u.values.iter().map(|v| v - mean).collect();
    let p2: Vec<f64> = nodes.iter().map(|t| 1.5 * (t * t - ONE_THIRD)).collect();
    let num = basis.average(&um.iter().zip(&p2).map(|(a, b)| a * b).collect::<Vec<_>>());
    let um_l2 = basis.average(&um.iter().map(|v| v * v).collect::<Vec<_>>());
    let p2_l2 = basis.average(&p2.iter().map(|v| v * v).collect::<Vec<_>>());
    let profile_corr = if um_l2 > 1e-300 {
        num / (um_l2 * p2_l2).sqrt()
    } else {
        0.0
    };
    let uhat: Vec<f64> = u
        .values
        .iter()
        .zip(nodes)
        .map(|(v, t)| v - mean - 15.0 / (8.0 * a) * beta * (t * t - ONE_THIRD))
        .collect();
    let uhat_l2 = (4.0 * std::f64::consts::PI
        * basis.average(&uhat.iter().map(|v| v * v).collect::<Vec<_>>()))
    .sqrt();
    Ok(Diagnostics {
        mass_defect: (mass - 1.0).abs(),
        kw3,
        beta,
        lambda_norm_sq: 1.5 * beta * beta,
        sup_norm: sup,
        mean,
        beta_ratio: if sup > 0.0 { beta / sup } else { 0.0 },
        profile_corr,
        uhat_l2,
    })
}

/// |avg(e^{2u} x3)|; the Kazdan-Warner condition forces this to vanish for
/// solutions with a in (0, 1).
pub fn kazdan_warner_defect(u: &AxiProfile) -> f64 {
    let basis = &u.basis;
    basis
        .average(
            &u.values
                .iter()
                .zip(basis.nodes())
                .map(|(v, t)| (2.0 * v).exp() * t)
                .collect::<Vec<_>>(),
        )
        .abs()
}

/// One accepted continuation point.
#[derive(Debug, Clone)]
pub struct BranchPoint {
    pub a: f64,
    pub profile: AxiProfile,
    pub diagnostics: Diagnostics,
    pub newton_iters: usize,
}

/// A continuation run: accepted points in order, plus a failure marker when
/// the corrector stalled at the minimum step.
#[derive(Debug, Clone)]
pub struct SolutionBranch {
    pub points: Vec<BranchPoint>,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
}

impl SolutionBranch {
    /// Nearest accepted point by parameter distance.
    pub fn nearest(&self, a: f64) -> Option<&BranchPoint> {
        self.points.iter().min_by(|x, y| {
            (x.a - a)
                .abs()
                .partial_cmp(&(y.a - a).abs())
                .unwrap()
        })
    }

    /// Solves at an exact parameter value starting from the nearest branch
    /// point (secant-extrapolated when two neighbors are available).
    pub fn refine_at(&self, a: f64, tol: f64, max_iter: usize) -> Result<BranchPoint> {
        let nearest = self
            .nearest(a)
            .ok_or_else(|| Error::InvalidArgument("empty branch".into()))?;
        let mut init = nearest.profile.clone();
        // secant predictor from the two nearest points when distinct
        let mut sorted: Vec<&BranchPoint> = self.points.iter().collect();
        sorted.sort_by(|x, y| (x.a - a).abs().partial_cmp(&(y.a - a).abs()).unwrap());
        if sorted.len() >= 2 && (sorted[0].a - sorted[1].a).abs() > 1e-12 {
            let (p0, p1) = (sorted[0], sorted[1]);
            let w = (a - p0.a) / (p1.a - p0.a);
            let coeffs: Vec<f64> = p0
                .profile
                .coeffs()
                .iter()
                .zip(p1.profile.coeffs())
                .map(|(c0, c1)| c0 + w * (c1 - c0))
                .collect();
            init = AxiProfile::from_coeffs(p0.profile.basis().clone(), &coeffs)?;
        }
        let (profile, iters) = newton_solve_counted(a, &init, tol, max_iter)?;
        let diag = diagnostics(&profile, a)?;
        Ok(BranchPoint {
            a,
            profile,
            diagnostics: diag,
            newton_iters: iters,
        })
    }
}

/// Continuation settings; `step` is the nominal arclength step expressed in
/// parameter units.
#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub tol: f64,
    pub max_newton: usize,
    pub l_max: usize,
    /// seed amplitude for the P2 coefficient after crossing a = 1/3
    pub switch_amplitude: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-11,
            max_newton: 40,
            l_max: DEFAULT_L_MAX,
            switch_amplitude: 0.05,
        }
    }
}

/// Pseudo-arclength continuation of the mean field equation from a_start to
/// a_end.
///
/// With `switch_at_third` the run seeds the nontrivial branch that bifurcates
/// at a = 1/3 in the P2 direction (anchor at max(a_start, 1/3 + 1e-3), seed
/// amplitude ramped until Newton lands off the trivial solution); otherwise
/// it continues the branch of the zero initial guess. Tangent predictor,
/// bordered Newton corrector, step halving on failure; a partial branch with
/// a failure marker is returned when the corrector stalls at the minimum
/// step.
pub fn continue_branch(
    a_start: f64,
    a_end: f64,
    step: f64,
    switch_at_third: bool,
) -> Result<SolutionBranch> {
    continue_branch_with(a_start, a_end, step, switch_at_third, &ContinuationOptions::default())
}

pub fn continue_branch_with(
    a_start: f64,
    a_end: f64,
    step: f64,
    switch_at_third: bool,
    opts: &ContinuationOptions,
) -> Result<SolutionBranch> {
    for a in [a_start, a_end] {
        if !(0.3 < a && a < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "continuation range endpoint {a} outside (0.3, 1)"
            )));
        }
    }
    if step <= 0.0 {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    let basis = LegendreBasis::new(opts.l_max)?;
    let mut warnings = Vec::new();

    let (anchor_a, anchor) = if switch_at_third {
        let anchor_a = a_start.max(ONE_THIRD + 1e-3);
        let profile = seed_nontrivial(anchor_a, &basis, opts)?;
        (anchor_a, profile)
    } else {
        let zero = AxiProfile::zero(basis.clone());
        let (p, _) = newton_solve_counted(a_start, &zero, opts.tol, opts.max_newton)?;
        (a_start, p)
    };

    let mut points = Vec::new();
    let diag = diagnostics(&anchor, anchor_a)?;
    points.push(BranchPoint {
        a: anchor_a,
        profile: anchor.clone(),
        diagnostics: diag,
        newton_iters: 0,
    });

    let direction = if a_end >= anchor_a { 1.0 } else { -1.0 };
    if (a_end - anchor_a).abs() < 1e-12 {
        return Ok(SolutionBranch {
            points,
            failure: None,
            warnings,
        });
    }

    let mut current = anchor;
    let mut a = anchor_a;
    let mut h = step;
    let mut tangent = initial_tangent(&current, a, direction)?;
    let mut failure = None;

    loop {
        // raise resolution near blow-up
        if a > 0.47
            && points.last().map(|p| p.diagnostics.sup_norm).unwrap_or(0.0) > 4.0
            && current.basis().l_max() < RAISED_L_MAX
        {
            let fine = LegendreBasis::new(RAISED_L_MAX)?;
            current = current.resampled(fine);
            current = newton_solve(a, &current, opts.tol, opts.max_newton)?;
            tangent = initial_tangent(&current, a, direction)?;
            warnings.push(format!(
                "raised degree cutoff to {RAISED_L_MAX} at a = {a:.4} (sup norm > 4)"
            ));
        }
        let remaining = (a_end - a) * direction;
        if remaining <= 1e-12 {
            break;
        }
        let h_eff = h.min(remaining);
        // targeted final step: solve at exactly a_end when within reach
        if h_eff >= remaining - 1e-12 {
            let coeffs: Vec<f64> = current
                .coeffs()
                .iter()
                .zip(tangent.0.iter())
                .map(|(c, tc)| c + tc * (a_end - a) / tangent.1)
                .collect();
            let init = AxiProfile::from_coeffs(current.basis().clone(), &coeffs)?;
            match newton_solve_counted(a_end, &init, opts.tol, opts.max_newton) {
                Ok((profile, iters)) => {
                    let diag = diagnostics(&profile, a_end)?;
                    points.push(BranchPoint {
                        a: a_end,
                        profile,
                        diagnostics: diag,
                        newton_iters: iters,
                    });
                    break;
                }
                Err(_) if h > step * 1e-3 => {
                    h *= 0.5;
                    continue;
                }
                Err(e) => {
                    failure = Some(format!("corrector failed at a = {a_end:.6}: {e}"));
                    break;
                }
            }
        }
        match palc_step(&current, a, &tangent, h_eff, opts) {
            Ok((profile, a_new, iters)) => {
                let diag = diagnostics(&profile, a_new)?;
                // new tangent by secant
                let dc: DVector<f64> = &profile.coeffs - &current.coeffs;
                let da = a_new - a;
                let norm = (dc.norm_squared() + da * da).sqrt();
                tangent = (dc / norm, da / norm);
                current = profile.clone();
                a = a_new;
                points.push(BranchPoint {
                    a: a_new,
                    profile,
                    diagnostics: diag,
                    newton_iters: iters,
                });
                h = (h * 1.3).min(step);
            }
            Err(_) if h > step * 1e-3 => {
                h *= 0.5;
            }
            Err(e) => {
                failure = Some(format!("corrector stalled near a = {a:.6}: {e}"));
                break;
            }
        }
    }
    Ok(SolutionBranch {
        points,
        failure,
        warnings,
    })
}

/// Newton at fixed a from a ramp of P2 seed amplitudes until the iteration
/// lands on a nontrivial solution.
fn seed_nontrivial(
    a: f64,
    basis: &Arc<LegendreBasis>,
    opts: &ContinuationOptions,
) -> Result<AxiProfile> {
    // leading amplitude of the transcritical branch grows like ~10.5 (a - 1/3)
    let predicted = 12.0 * (a - ONE_THIRD);
    let base = opts.switch_amplitude.max(predicted);
    for factor in [1.0, 1.5, 0.5, 3.0, 6.0] {
        let mut coeffs = vec![0.0; basis.l_max() + 1];
        coeffs[2] = base * factor;
        let init = AxiProfile::from_coeffs(basis.clone(), &coeffs)?;
        if let Ok((p, _)) = newton_solve_counted(a, &init, opts.tol, opts.max_newton) {
            if p.sup_norm() > 1e-6 {
                return Ok(p);
            }
        }
    }
    Err(Error::ContinuationStall {
        a,
        min_step: opts.switch_amplitude,
    })
}

type Tangent = (DVector<f64>, f64);

/// Tangent from the bordered system J z = -F_a, normalized with the
/// continuation direction.
fn initial_tangent(u: &AxiProfile, a: f64, direction: f64) -> Result<Tangent> {
    let jac = newton_jacobian(u, a);
    // F_a = -Delta u at nodes
    let mut lap_coeffs = u.coeffs.clone();
    for l in 0..=u.basis.l_max {
        lap_coeffs[l] *= -((l * (l + 1)) as f64);
    }
    let lap = u.basis.synth(&lap_coeffs);
    let f_a = -lap;
    let lu = jac.lu();
    let z = lu.solve(&(-f_a)).ok_or(Error::SingularJacobian { a })?;
    let norm = (z.norm_squared() + 1.0).sqrt();
    Ok((z * (direction / norm), direction / norm))
}

/// One predictor-corrector step of Keller pseudo-arclength continuation.
fn palc_step(
    u: &AxiProfile,
    a: f64,
    tangent: &Tangent,
    h: f64,
    opts: &ContinuationOptions,
) -> Result<(AxiProfile, f64, usize)> {
    let basis = u.basis.clone();
    let n = basis.node_count();
    let m = basis.l_max + 1;
    // arclength normalized so that h is measured in parameter units along
    // the tangent's a-component when possible
    let scale = if tangent.1.abs() > 1e-8 {
        h / tangent.1.abs()
    } else {
        h
    };
    let mut c = &u.coeffs + &tangent.0 * scale;
    let mut a_cur = a + tangent.1 * scale;
    let c_pred = c.clone();
    let a_pred = a_cur;

    for iter in 0..opts.max_newton {
        let values = basis.synth(&c);
        exp_guard_values(&values, basis.nodes())?;
        let r = residual_inner(&basis, &c, &values, a_cur);
        let arc = tangent.0.dot(&(&c - &c_pred)) + tangent.1 * (a_cur - a_pred);
        if r.amax() < opts.tol && arc.abs() < opts.tol {
            let profile = AxiProfile {
                basis: basis.clone(),
                coeffs: c,
                values,
            };
            return Ok((profile, a_cur, iter));
        }
        // bordered Jacobian [[J, F_a], [tangent_c^T, tangent_a]]
        let prof = AxiProfile {
            basis: basis.clone(),
            coeffs: c.clone(),
            values: values.clone(),
        };
        let jac = newton_jacobian(&prof, a_cur);
        let mut lap_coeffs = c.clone();
        for l in 0..=basis.l_max {
            lap_coeffs[l] *= -((l * (l + 1)) as f64);
        }
        let f_a = -basis.synth(&lap_coeffs);
        let mut big = DMatrix::zeros(n + 1, m + 1);
        big.view_mut((0, 0), (n, m)).copy_from(&jac);
        big.view_mut((0, m), (n, 1)).copy_from(&f_a);
        for l in 0..m {
            big[(n, l)] = tangent.0[l];
        }
        big[(n, m)] = tangent.1;
        let mut rhs = DVector::zeros(n + 1);
        for k in 0..n {
            rhs[k] = -r[k];
        }
        rhs[n] = -arc;
        let delta = big
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularJacobian { a: a_cur })?;
        for l in 0..m {
            c[l] += delta[l];
        }
        a_cur += delta[m];
    }
    Err(Error::NewtonDivergence {
        iters: opts.max_newton,
        trace: vec![],
    })
}

/// One row of the near-bifurcation expansion report.
#[derive(Debug, Clone)]
pub struct NearThirdRow {
    pub a: f64,
    pub profile_corr: f64,
    pub beta_ratio: f64,
    /// |u-hat|_{L^2} / |u|_inf^2, bounded as a -> 1/3 from above
    pub uhat_ratio: f64,
}

/// Expansion-quality table for branch points with a near 1/3.
pub fn near_third_report(branch: &SolutionBranch, window: f64) -> Vec<NearThirdRow> {
    branch
        .points
        .iter()
        .filter(|p| (p.a - ONE_THIRD).abs() <= window)
        .map(near_third_row)
        .collect()
}

pub fn near_third_row(p: &BranchPoint) -> NearThirdRow {
    let d = &p.diagnostics;
    NearThirdRow {
        a: p.a,
        profile_corr: d.profile_corr,
        beta_ratio: d.beta_ratio,
        uhat_ratio: if d.sup_norm > 0.0 {
            d.uhat_l2 / (d.sup_norm * d.sup_norm)
        } else {
            0.0
        },
    }
}
