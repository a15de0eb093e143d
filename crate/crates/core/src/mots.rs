//! Marginally outer trapped spheres on a slice u̅ = const.
//!
//! The sphere is the graph `u = 1 − R(ω)`; R solves
//!
//! ```text
//! H(R) = Δ'R − |∇R|²/R − 1/R + M₀/(2R²) + u̅a^{1/2}[c₁·∇R + c₂(∇R, ∇R) + c₃]/R² = 0
//! ```
//!
//! with Δ', ∇ taken on the round sphere of radius R(ω). Internally R = R̄ρ with
//! R̄ = mean(M₀)/2, and `R̄ρ² H` is solved for ρ, which is O(1).

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::check::CheckReport;
use crate::container::Container;
use crate::error::{Error, Result};
use crate::linalg::{gmres, GmresOptions};
use crate::regime::RegimeParameters;
use crate::shear::ShearModel;
use crate::sphere::{SphereField, SphereGrid, Synthesis, Want};

/// Smooth field of degree ≤ `lmax` with random coefficients, scaled to max |·| = 1.
pub fn random_smooth_field(grid: &Arc<SphereGrid>, rng: &mut ChaCha8Rng, lmax: usize) -> (SphereField, Synthesis) {
    let degrees = grid.coeff_degrees();
    let coeffs: Vec<f64> = degrees
        .iter()
        .map(|d| match d {
            Some(l) if *l <= lmax => rng.gen_range(-1.0..1.0),
            _ => 0.0,
        })
        .collect();
    let mut syn = grid.synthesize(&coeffs, Want::FIRST);
    let scale = syn.value.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    for v in syn
        .value
        .iter_mut()
        .chain(syn.d_theta.iter_mut())
        .chain(syn.d_phi.iter_mut())
        .chain(syn.laplacian.iter_mut())
    {
        *v /= scale;
    }
    (
        SphereField {
            grid: grid.clone(),
            values: syn.value.clone(),
        },
        syn,
    )
}

/// The coefficient fields c₁ (1-form), c₂ (symmetric 2-tensor) and c₃, stored
/// by components in the orthonormal frame (e_θ, e_φ).
#[derive(Debug, Clone)]
pub struct Perturbations {
    pub c1: [SphereField; 2],
    /// θθ, θφ, φφ.
    pub c2: [SphereField; 3],
    pub c3: SphereField,
}

impl Perturbations {
    pub fn zero(grid: &Arc<SphereGrid>) -> Self {
        let z = SphereField::constant(grid, 0.0);
        Self {
            c1: [z.clone(), z.clone()],
            c2: [z.clone(), z.clone(), z.clone()],
            c3: z,
        }
    }

    /// Seeded smooth fields whose largest frame norm is exactly `beta · bound`.
    pub fn sample(grid: &Arc<SphereGrid>, seed: u64, beta: f64, bound: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(Error::Config(format!("perturbation beta = {beta} must lie in [0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.len();
        let np = grid.n_phi;
        let s = |k: usize| grid.sin_theta[k / np];
        let (_, psi) = random_smooth_field(grid, &mut rng, 3);
        let (_, chi) = random_smooth_field(grid, &mut rng, 3);
        let mut c1t: Vec<f64> = (0..n).map(|k| psi.d_theta[k] + chi.d_phi[k] / s(k)).collect();
        let mut c1p: Vec<f64> = (0..n).map(|k| psi.d_phi[k] / s(k) - chi.d_theta[k]).collect();
        let norm1 = (0..n).map(|k| c1t[k].hypot(c1p[k])).fold(0.0, f64::max);
        let k1 = if norm1 > 0.0 { beta * bound / norm1 } else { 0.0 };
        c1t.iter_mut().chain(c1p.iter_mut()).for_each(|v| *v *= k1);

        let (alpha, _) = random_smooth_field(grid, &mut rng, 3);
        let (_, vpot) = random_smooth_field(grid, &mut rng, 3);
        let vt: Vec<f64> = vpot.d_theta.clone();
        let vp: Vec<f64> = (0..n).map(|k| vpot.d_phi[k] / s(k)).collect();
        let mut tt: Vec<f64> = (0..n).map(|k| alpha.values[k] + vt[k] * vt[k]).collect();
        let mut tp: Vec<f64> = (0..n).map(|k| vt[k] * vp[k]).collect();
        let mut pp: Vec<f64> = (0..n).map(|k| alpha.values[k] + vp[k] * vp[k]).collect();
        let norm2 = (0..n)
            .map(|k| (tt[k] * tt[k] + 2.0 * tp[k] * tp[k] + pp[k] * pp[k]).sqrt())
            .fold(0.0, f64::max);
        let k2 = if norm2 > 0.0 { beta * bound / norm2 } else { 0.0 };
        tt.iter_mut().chain(tp.iter_mut()).chain(pp.iter_mut()).for_each(|v| *v *= k2);

        let (c3, _) = random_smooth_field(grid, &mut rng, 3);
        let c3 = c3.map(|v| v * beta * bound);
        let f = |values| SphereField {
            grid: grid.clone(),
            values,
        };
        Ok(Self {
            c1: [f(c1t), f(c1p)],
            c2: [f(tt), f(tp), f(pp)],
            c3,
        })
    }

    /// Largest frame norms of (c₁, c₂, c₃).
    pub fn max_norms(&self) -> (f64, f64, f64) {
        let n = self.c3.values.len();
        let n1 = (0..n).map(|k| self.c1[0].values[k].hypot(self.c1[1].values[k])).fold(0.0, f64::max);
        let n2 = (0..n)
            .map(|k| {
                let (a, b, c) = (self.c2[0].values[k], self.c2[1].values[k], self.c2[2].values[k]);
                (a * a + 2.0 * b * b + c * c).sqrt()
            })
            .fold(0.0, f64::max);
        (n1, n2, self.c3.max_abs())
    }
}

/// One slice of the MOTS problem.
#[derive(Debug, Clone)]
pub struct MotsProblem {
    pub ubar: f64,
    /// Effective mass M₀(ω), units of length.
    pub mass: SphereField,
    /// The angular factor f(u̅, ω) entering the F family.
    pub f_field: SphereField,
    pub perturbations: Perturbations,
    /// u̅ a^{1/2}.
    pub perturbation_scale: f64,
    pub b_quarter: f64,
    /// Angle-free scale `a^{1/2} b^μ u̅ ζ(u̅) + (1 − ζ(u̅)) 4m₀`.
    pub mass_scale: f64,
}

impl MotsProblem {
    pub fn new(
        ubar: f64,
        mass: SphereField,
        perturbations: Perturbations,
        perturbation_scale: f64,
        b_quarter: f64,
    ) -> Result<Self> {
        for c in perturbations.c1.iter().chain(&perturbations.c2).chain(std::iter::once(&perturbations.c3)) {
            mass.same_grid(c)?;
        }
        if let Some(k) = mass.values.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Positivity(format!("M0 not positive at node {k}")));
        }
        let (n1, n2, n3) = perturbations.max_norms();
        let cap = b_quarter * (1.0 + 1e-12);
        if n1 > cap || n2 > cap || n3 > cap {
            return Err(Error::Constraint {
                constraint: "perturbation bound".into(),
                detail: format!("frame norms ({n1:e}, {n2:e}, {n3:e}) exceed b^(1/4) = {b_quarter:e}"),
            });
        }
        let mean = mass.integrate_unit() / (4.0 * std::f64::consts::PI);
        let f_field = SphereField::constant(&mass.grid, 1.0);
        Ok(Self {
            ubar,
            mass,
            f_field,
            perturbations,
            perturbation_scale,
            b_quarter,
            mass_scale: mean,
        })
    }

    /// Slice built from the shear model at `ubar`.
    pub fn from_model(model: &ShearModel, grid: &Arc<SphereGrid>, ubar: f64, perturbations: Perturbations) -> Result<Self> {
        let p = model.params();
        let mass = model.mass_field(grid, ubar);
        let mut prob = Self::new(ubar, mass, perturbations, ubar * p.a.sqrt(), p.b_quarter())?;
        prob.f_field = SphereField::from_fn(grid, |t, ph| model.sample(ubar, t, ph).f);
        prob.mass_scale = model.mass_scale(ubar);
        Ok(prob)
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.mass.grid
    }

    /// R̄ = mean(M₀)/2.
    pub fn radius_scale(&self) -> f64 {
        self.mass.integrate_unit() / (8.0 * std::f64::consts::PI)
    }

    /// C⁰ band `(1 ∓ 1/c₁)(1 ∓ 1/c₂)(½ ∓ o₁) M₀^{min/max}`.
    pub fn c0_band(&self, params: &RegimeParameters) -> (f64, f64) {
        let lo = (1.0 - 1.0 / params.c1) * (1.0 - 1.0 / params.c2_zeta) * (0.5 - params.o1) * self.mass.min();
        let hi = (1.0 + 1.0 / params.c1) * (1.0 + 1.0 / params.c2_zeta) * (0.5 + params.o1) * self.mass.max();
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Stop when rms(R̄ H) ≤ newton_tol.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub step_initial: f64,
    pub step_min: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            newton_tol: 1e-9,
            max_newton: 50,
            linear_tol: 1e-10,
            gmres_restart: 60,
            gmres_max_iter: 600,
            step_initial: 0.1,
            step_min: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub r_min: f64,
    pub r_max: f64,
    /// max |∇R| in the round metric of radius R (dimensionless).
    pub grad_max: f64,
    /// max over nodes of |∂²R/∂θᵢ∂θⱼ| (coordinate second derivatives).
    pub hess_max: f64,
}

#[derive(Debug, Clone)]
pub struct MotsSolution {
    pub ubar: f64,
    pub r: SphereField,
    /// rms of H over the unit sphere (units 1/length).
    pub residual_norm: f64,
    /// rms of R̄H (dimensionless); the quantity compared against the tolerance.
    pub scaled_residual: f64,
    pub newton_trace: Vec<usize>,
    pub lambda_path: Vec<f64>,
    /// Scaled residuals along the final Newton leg.
    pub residual_history: Vec<f64>,
    pub diagnostics: Diagnostics,
}

struct Scaled<'a> {
    prob: &'a MotsProblem,
    rbar: f64,
    m: Vec<f64>,
    m_mean: f64,
    sigma: f64,
    precond: Vec<f64>,
}

struct Eval {
    syn: Synthesis,
    q: Vec<f64>,
    norm: f64,
}

impl<'a> Scaled<'a> {
    fn new(prob: &'a MotsProblem) -> Self {
        let rbar = prob.radius_scale();
        let m: Vec<f64> = prob.mass.values.iter().map(|v| v / rbar).collect();
        let m_mean = prob.mass.integrate_unit() / (4.0 * std::f64::consts::PI) / rbar;
        let precond = prob
            .grid()
            .coeff_degrees()
            .iter()
            .map(|d| d.map_or(0.0, |l| -1.0 / ((l * (l + 1)) as f64 + 1.0)))
            .collect();
        Self {
            prob,
            rbar,
            m,
            m_mean,
            sigma: prob.perturbation_scale / rbar,
            precond,
        }
    }

    fn grid(&self) -> &Arc<SphereGrid> {
        self.prob.grid()
    }

    fn frame_grad(&self, syn: &Synthesis, k: usize) -> (f64, f64) {
        let s = self.grid().sin_theta[k / self.grid().n_phi];
        let v = syn.value[k];
        (syn.d_theta[k] / v, syn.d_phi[k] / (v * s))
    }

    fn perturbation(&self, k: usize, g: (f64, f64)) -> f64 {
        let p = &self.prob.perturbations;
        p.c1[0].values[k] * g.0
            + p.c1[1].values[k] * g.1
            + p.c2[0].values[k] * g.0 * g.0
            + 2.0 * p.c2[1].values[k] * g.0 * g.1
            + p.c2[2].values[k] * g.1 * g.1
            + p.c3.values[k]
    }

    fn eval(&self, coeffs: &[f64], tau: f64) -> Option<Eval> {
        let syn = self.grid().synthesize(coeffs, Want::ALL);
        if syn.value.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return None;
        }
        let np = self.grid().n_phi;
        let mut q = vec![0.0; syn.value.len()];
        let mut acc = 0.0;
        for (k, qk) in q.iter_mut().enumerate() {
            let s = self.grid().sin_theta[k / np];
            let v = syn.value[k];
            let grad2 = syn.d_theta[k].powi(2) + (syn.d_phi[k] / s).powi(2);
            let m_tau = self.m_mean + tau * (self.m[k] - self.m_mean);
            let mut val = syn.laplacian[k] - grad2 / v - v + 0.5 * m_tau;
            if self.sigma != 0.0 {
                val += tau * self.sigma * self.perturbation(k, self.frame_grad(&syn, k));
            }
            *qk = val;
            acc += self.grid().weights[k] * (val / (v * v)).powi(2);
        }
        let norm = (acc / (4.0 * std::f64::consts::PI)).sqrt();
        if !norm.is_finite() {
            return None;
        }
        Some(Eval { syn, q, norm })
    }

    fn jacobian(&self, base: &Synthesis, tau: f64, w: &[f64]) -> Vec<f64> {
        let ws = self.grid().synthesize(
            w,
            Want {
                value: true,
                d_theta: true,
                d_phi: true,
                laplacian: true,
                second: false,
            },
        );
        let np = self.grid().n_phi;
        let p = &self.prob.perturbations;
        let out: Vec<f64> = (0..ws.value.len())
            .map(|k| {
                let s = self.grid().sin_theta[k / np];
                let v = base.value[k];
                let (rt, rp) = (base.d_theta[k], base.d_phi[k]);
                let grad2 = rt * rt + (rp / s).powi(2);
                let (wv, wt, wp) = (ws.value[k], ws.d_theta[k], ws.d_phi[k]);
                let mut d = ws.laplacian[k] - 2.0 / v * (rt * wt + rp * wp / (s * s)) + grad2 / (v * v) * wv - wv;
                if self.sigma != 0.0 {
                    let (gt, gp) = (rt / v, rp / (v * s));
                    let dgt = wt / v - rt * wv / (v * v);
                    let dgp = wp / (v * s) - rp * wv / (v * v * s);
                    let c = p.c1[0].values[k] * dgt
                        + p.c1[1].values[k] * dgp
                        + 2.0 * (p.c2[0].values[k] * gt * dgt
                            + p.c2[1].values[k] * (gt * dgp + gp * dgt)
                            + p.c2[2].values[k] * gp * dgp);
                    d += tau * self.sigma * c;
                }
                d
            })
            .collect();
        self.grid().analyze(&out)
    }

    /// Damped Newton at fixed τ. Returns the coefficients, the iteration count and
    /// the residual history, or a reason for failure.
    fn newton(&self, mut x: Vec<f64>, tau: f64, tol: f64, opts: &SolverOptions) -> std::result::Result<(Vec<f64>, usize, Vec<f64>), String> {
        let mut cur = self.eval(&x, tau).ok_or("initial iterate not positive")?;
        let mut history = vec![cur.norm];
        let gopts = GmresOptions {
            rel_tol: opts.linear_tol,
            restart: opts.gmres_restart,
            max_iter: opts.gmres_max_iter,
        };
        for it in 0..opts.max_newton {
            if cur.norm <= tol {
                return Ok((x, it, history));
            }
            let rhs: Vec<f64> = self.grid().analyze(&cur.q).iter().map(|v| -v).collect();
            let lin = gmres(
                |w| self.jacobian(&cur.syn, tau, w),
                |v| v.iter().zip(&self.precond).map(|(a, b)| a * b).collect(),
                &rhs,
                &gopts,
            );
            if !lin.converged && lin.rel_residual > 1e-3 {
                return Err(format!("linear solve stalled at relative residual {:e}", lin.rel_residual));
            }
            let mut alpha = 1.0;
            loop {
                let trial: Vec<f64> = x.iter().zip(&lin.x).map(|(a, d)| a + alpha * d).collect();
                if let Some(next) = self.eval(&trial, tau) {
                    if next.norm <= tol || next.norm < (1.0 - 1e-4 * alpha) * cur.norm {
                        x = trial;
                        cur = next;
                        break;
                    }
                }
                alpha *= 0.5;
                if alpha < 1.0 / 64.0 {
                    return Err(format!("line search failed at residual {:e}", cur.norm));
                }
            }
            history.push(cur.norm);
        }
        if cur.norm <= tol {
            Ok((x, opts.max_newton, history))
        } else {
            Err(format!("{} Newton iterations left residual {:e}", opts.max_newton, cur.norm))
        }
    }

    fn finish(&self, x: &[f64], trace: Vec<usize>, path: Vec<f64>, history: Vec<f64>) -> MotsSolution {
        let ev = self.eval(x, 1.0).expect("converged iterate is positive");
        let syn = self.grid().synthesize(x, Want::ALL);
        let np = self.grid().n_phi;
        let n = syn.value.len();
        let mut h2 = 0.0;
        let mut grad_max = 0.0f64;
        let mut hess = 0.0f64;
        for k in 0..n {
            let v = syn.value[k];
            let s = self.grid().sin_theta[k / np];
            h2 += self.grid().weights[k] * (ev.q[k] / (self.rbar * v * v)).powi(2);
            grad_max = grad_max.max((syn.d_theta[k].powi(2) + (syn.d_phi[k] / s).powi(2)).sqrt() / v);
            hess = hess
                .max(syn.d_theta_theta[k].abs())
                .max(syn.d_theta_phi[k].abs())
                .max(syn.d_phi_phi[k].abs());
        }
        let r = SphereField {
            grid: self.grid().clone(),
            values: syn.value.iter().map(|v| v * self.rbar).collect(),
        };
        MotsSolution {
            ubar: self.prob.ubar,
            diagnostics: Diagnostics {
                r_min: r.min(),
                r_max: r.max(),
                grad_max,
                hess_max: hess * self.rbar,
            },
            r,
            residual_norm: (h2 / (4.0 * std::f64::consts::PI)).sqrt(),
            scaled_residual: ev.norm,
            newton_trace: trace,
            lambda_path: path,
            residual_history: history,
        }
    }
}

fn non_convergence(ubar: f64, reason: impl Into<String>) -> Error {
    Error::NonConvergence {
        ubar,
        reason: reason.into(),
    }
}

/// Continuation from the explicit constant solution of the averaged problem,
/// finishing with Newton on H itself.
pub fn solve_slice(problem: &MotsProblem, opts: &SolverOptions) -> Result<MotsSolution> {
    let sc = Scaled::new(problem);
    let grid = problem.grid();
    let mut x = grid.analyze(&vec![0.5 * sc.m_mean; grid.len()]);
    let mut tau = 0.0;
    let mut step = opts.step_initial;
    let mut streak = 0;
    let mut trace = Vec::new();
    let mut path = vec![0.0];
    let mut last_history = Vec::new();
    while tau < 1.0 {
        let next = (tau + step).min(1.0);
        match sc.newton(x.clone(), next, opts.newton_tol, opts) {
            Ok((xn, its, hist)) => {
                x = xn;
                tau = next;
                trace.push(its);
                path.push(tau);
                last_history = hist;
                streak += 1;
                if streak >= 2 {
                    step *= 2.0;
                    streak = 0;
                }
            }
            Err(reason) => {
                step *= 0.5;
                streak = 0;
                if step < opts.step_min {
                    return Err(non_convergence(
                        problem.ubar,
                        format!("continuation step fell below {:e} at λ = {tau}: {reason}; trace {trace:?}", opts.step_min),
                    ));
                }
            }
        }
    }
    Ok(sc.finish(&x, trace, path, last_history))
}

/// Newton on H directly from a supplied positive guess.
pub fn solve_from_guess(problem: &MotsProblem, guess: &SphereField, opts: &SolverOptions) -> Result<MotsSolution> {
    problem.mass.same_grid(guess)?;
    if let Some(k) = guess.values.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::Positivity(format!("initial guess not positive at node {k}")));
    }
    let sc = Scaled::new(problem);
    let x0 = problem.grid().analyze(&guess.values.iter().map(|v| v / sc.rbar).collect::<Vec<_>>());
    let (x, its, hist) = sc.newton(x0, 1.0, opts.newton_tol, opts).map_err(|r| non_convergence(problem.ubar, r))?;
    Ok(sc.finish(&x, vec![its], vec![1.0], hist))
}

fn check_positive(r: &SphereField) -> Result<()> {
    match r.values.iter().position(|v| !(*v > 0.0)) {
        Some(k) => Err(Error::Positivity(format!("R not positive at node {k}"))),
        None => Ok(()),
    }
}

struct Geometry {
    syn: Synthesis,
    /// |∇R|² in the round metric of radius R.
    grad2: Vec<f64>,
    /// (∇R)_θ, (∇R)_φ in the orthonormal frame of that metric.
    frame: Vec<(f64, f64)>,
}

fn geometry(r: &SphereField) -> Geometry {
    let syn = r.derivatives(Want::FIRST);
    let np = r.grid.n_phi;
    let mut grad2 = Vec::with_capacity(r.values.len());
    let mut frame = Vec::with_capacity(r.values.len());
    for (k, rv) in r.values.iter().enumerate() {
        let s = r.grid.sin_theta[k / np];
        let g = (syn.d_theta[k] / rv, syn.d_phi[k] / (rv * s));
        grad2.push(g.0 * g.0 + g.1 * g.1);
        frame.push(g);
    }
    Geometry { syn, grad2, frame }
}

/// H(R) at every node.
pub fn residual_h(problem: &MotsProblem, r: &SphereField) -> Result<SphereField> {
    problem.mass.same_grid(r)?;
    check_positive(r)?;
    let geo = geometry(r);
    let p = &problem.perturbations;
    let values = (0..r.values.len())
        .map(|k| {
            let rv = r.values[k];
            let g = geo.frame[k];
            let pert = p.c1[0].values[k] * g.0
                + p.c1[1].values[k] * g.1
                + p.c2[0].values[k] * g.0 * g.0
                + 2.0 * p.c2[1].values[k] * g.0 * g.1
                + p.c2[2].values[k] * g.1 * g.1
                + p.c3.values[k];
            geo.syn.laplacian[k] / (rv * rv) - geo.grad2[k] / rv - 1.0 / rv
                + problem.mass.values[k] / (2.0 * rv * rv)
                + problem.perturbation_scale * pert / (rv * rv)
        })
        .collect();
    Ok(SphereField {
        grid: r.grid.clone(),
        values,
    })
}

/// Slab background fields entering the continuity families.
#[derive(Debug, Clone)]
pub struct Background {
    pub omega: SphereField,
    pub trchibar: SphereField,
    /// η in the orthonormal frame.
    pub eta: [SphereField; 2],
    pub omegabar: SphereField,
    pub trchi: SphereField,
}

/// Pointwise slab envelopes at radius R: (|η|, |ω̲|, |trχ̲ + 2/R|), |Ω − 1| and |trχ − model|.
fn envelopes(problem: &MotsProblem, rv: f64) -> (f64, f64, f64) {
    let s = problem.perturbation_scale;
    (s / (rv * rv), s * problem.b_quarter / rv, s * problem.b_quarter / (rv * rv))
}

impl Background {
    /// Leading values: Ω = 1, trχ̲ = −2/R, η = ω̲ = 0, trχ = 2/R − M₀/R².
    pub fn leading(problem: &MotsProblem, r: &SphereField) -> Self {
        let zero = SphereField::constant(&r.grid, 0.0);
        let trchi = SphereField {
            grid: r.grid.clone(),
            values: r.values.iter().zip(&problem.mass.values).map(|(rv, m)| 2.0 / rv - m / (rv * rv)).collect(),
        };
        Self {
            omega: SphereField::constant(&r.grid, 1.0),
            trchibar: r.map(|v| -2.0 / v),
            eta: [zero.clone(), zero.clone()],
            omegabar: zero,
            trchi,
        }
    }

    /// Leading values plus seeded smooth deviations filling `fraction` of each envelope.
    pub fn perturbed(problem: &MotsProblem, r: &SphereField, seed: u64, fraction: f64) -> Self {
        let mut bg = Self::leading(problem, r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = r.grid.clone();
        let mut draw = || random_smooth_field(&grid, &mut rng, 3).0;
        let (s1, s2, s3, s4, s5, s6) = (draw(), draw(), draw(), draw(), draw(), draw());
        for k in 0..r.values.len() {
            let (e1, eo, e3) = envelopes(problem, r.values[k]);
            bg.omega.values[k] += fraction * eo * s1.values[k];
            bg.trchibar.values[k] += fraction * e1 * s2.values[k];
            bg.eta[0].values[k] = fraction * e1 * s3.values[k] / std::f64::consts::SQRT_2;
            bg.eta[1].values[k] = fraction * e1 * s4.values[k] / std::f64::consts::SQRT_2;
            bg.omegabar.values[k] = fraction * e1 * s5.values[k];
            bg.trchi.values[k] += fraction * e3 * s6.values[k];
        }
        bg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    F,
    G,
}

/// The continuity families F(R, λ) and G(R, λ).
pub fn residual_fg(problem: &MotsProblem, r: &SphereField, lambda: f64, which: Family, bg: &Background) -> Result<SphereField> {
    problem.mass.same_grid(r)?;
    check_positive(r)?;
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Argument(format!("λ = {lambda} outside [0, 1]")));
    }
    let geo = geometry(r);
    let values = (0..r.values.len())
        .map(|k| {
            let rv = r.values[k];
            let m = problem.mass.values[k];
            let g2 = geo.grad2[k];
            let base = geo.syn.laplacian[k] / (rv * rv) + 0.5 * bg.omega.values[k] * bg.trchibar.values[k] * g2 - 1.0 / rv;
            match which {
                Family::F => base + m / (2.0 * rv * rv) * (1.0 + (problem.f_field.values[k] - 1.0) * lambda),
                Family::G => {
                    let g = geo.frame[k];
                    let eta_dot = bg.eta[0].values[k] * g.0 + bg.eta[1].values[k] * g.1;
                    let om = bg.omega.values[k];
                    base + m / (2.0 * rv * rv)
                        + lambda
                            * (2.0 * eta_dot + 4.0 * om * bg.omegabar.values[k] * g2 - 0.5 / om * bg.trchi.values[k] + 1.0 / rv
                                - m / (2.0 * rv * rv))
                }
            }
        })
        .collect();
    Ok(SphereField {
        grid: r.grid.clone(),
        values,
    })
}

/// Pointwise bound on |G(R, 1) − H(R)| (with c ≡ 0) implied by the slab envelopes.
pub fn family_gap_bound(problem: &MotsProblem, r: &SphereField) -> Result<SphereField> {
    check_positive(r)?;
    let geo = geometry(r);
    let values = (0..r.values.len())
        .map(|k| {
            let rv = r.values[k];
            let (e1, eo, e3) = envelopes(problem, rv);
            let g2 = geo.grad2[k];
            let model = (2.0 / rv - problem.mass.values[k] / (rv * rv)).abs();
            0.5 * ((1.0 + eo) * e1 + 2.0 * eo / rv) * g2
                + 2.0 * e1 * g2.sqrt()
                + 4.0 * (1.0 + eo) * e1 * g2
                + 0.5 * (e3 + eo * model) / (1.0 - eo)
        })
        .collect();
    Ok(SphereField {
        grid: r.grid.clone(),
        values,
    })
}

/// Weight `h(R) = 1 + 8 (R − M/2)²/M²` with M the angle-free mass scale.
pub fn weight_h(r: f64, mass_scale: f64) -> f64 {
    1.0 + 8.0 * (r - 0.5 * mass_scale).powi(2) / (mass_scale * mass_scale)
}

/// A-priori bounds of a solved slice, each as a ratio to its threshold.
pub fn verify_apriori(sol: &MotsSolution, problem: &MotsProblem, params: &RegimeParameters, c1_threshold: f64) -> Result<CheckReport> {
    problem.mass.same_grid(&sol.r)?;
    let mut rep = CheckReport::new();
    let (lo, hi) = problem.c0_band(params);
    let (center, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let pos = sol.r.values.iter().fold(0.0f64, |a, v| a.max((v - center).abs() / half));
    rep.at_most("c0_band", pos, 1.0, format!("max |R − center|/half-width of [{lo:e}, {hi:e}]"));

    let ms = problem.mass_scale;
    let grad = sol.r.gradient_norm_sq(crate::sphere::Radius::Constant(1.0))?;
    let w12 = grad.integrate_unit() / (ms * ms);
    rep.at_most("w12", w12, params.o1, "∫|∇R|² dΩ / M² against o₁");
    rep.at_most("c1", sol.diagnostics.grad_max / c1_threshold, 1.0, format!("max |∇R| / {c1_threshold}"));
    rep.at_most("c2", sol.diagnostics.hess_max / (0.1 * ms), 1.0, "max |∂²R| / (0.1 M)");
    let hmin = sol.r.values.iter().map(|v| weight_h(*v, ms)).fold(f64::INFINITY, f64::min);
    rep.at_least("weight_positivity", hmin, f64::MIN_POSITIVE, "min h(R)");
    Ok(rep)
}

impl MotsSolution {
    pub fn to_container(&self, config_hash: &str) -> Container {
        let meta = serde_json::json!({
            "config_hash": config_hash,
            "ubar": self.ubar,
            "n_theta": self.r.grid.n_theta,
            "n_phi": self.r.grid.n_phi,
            "residual_norm": self.residual_norm,
            "scaled_residual": self.scaled_residual,
            "newton_trace": self.newton_trace,
            "lambda_path": self.lambda_path,
            "diagnostics": self.diagnostics,
        });
        let mut c = Container::new("mots-solution", meta);
        c.push("r", self.r.values.clone());
        c.push("residual_history", self.residual_history.clone());
        c
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        let get = |k: &str| c.meta.get(k).cloned().ok_or_else(|| Error::Format(format!("solution header lacks `{k}`")));
        let nt: usize = serde_json::from_value(get("n_theta")?)?;
        let np: usize = serde_json::from_value(get("n_phi")?)?;
        let ubar: f64 = serde_json::from_value(get("ubar")?)?;
        let residual_norm = serde_json::from_value(get("residual_norm")?)?;
        let scaled_residual = serde_json::from_value(get("scaled_residual")?)?;
        let newton_trace = serde_json::from_value(get("newton_trace")?)?;
        let lambda_path = serde_json::from_value(get("lambda_path")?)?;
        let diagnostics = serde_json::from_value(get("diagnostics")?)?;
        let grid = SphereGrid::new(nt, np)?;
        let r = SphereField::new(grid, c.take("r")?)?;
        Ok(Self {
            ubar,
            r,
            residual_norm,
            scaled_residual,
            newton_trace,
            lambda_path,
            residual_history: c.take("residual_history")?,
            diagnostics,
        })
    }

    pub fn residual_csv(&self) -> String {
        let mut s = String::from("iteration,scaled_residual\n");
        for (i, r) in self.residual_history.iter().enumerate() {
            s.push_str(&format!("{i},{r:.17e}\n"));
        }
        s
    }
}
