//! The apparent horizon `u = 1 − R(u̅, ω)` assembled from solved slices.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mots::{solve_from_guess, solve_slice, MotsProblem, MotsSolution, Perturbations, SolverOptions};
use crate::regime::RegimeParameters;
use crate::shear::ShearModel;
use crate::sphere::{SphereField, SphereGrid, Want};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// [γa^{1/2}δ/b, λδ]
    Window,
    /// (λδ, λ′δ)
    Transition,
    /// (λ′δ, 2δ]
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HorizonOptions {
    pub n_window: usize,
    pub n_transition: usize,
    pub n_tail: usize,
    /// Difference spacing is (λ′ − λ)δ / fd_divisor, then half and a quarter of it.
    pub fd_divisor: f64,
    /// Newton tolerance for the neighbouring solves behind ∂R/∂u̅.
    pub derivative_tol: f64,
    /// Use the schematic slope h for the spacelike test.
    pub h_field: bool,
    pub spacelike_samples: usize,
    pub seed: u64,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        Self {
            n_window: 17,
            n_transition: 4,
            n_tail: 4,
            fd_divisor: 64.0,
            derivative_tol: 1e-12,
            h_field: true,
            spacelike_samples: 64,
            seed: 1,
        }
    }
}

/// Slice positions, strictly increasing.
pub fn slice_positions(params: &RegimeParameters, opts: &HorizonOptions) -> Result<Vec<(f64, Region)>> {
    if opts.n_window < 2 {
        return Err(Error::Argument("horizon needs at least two window slices".into()));
    }
    let (u1, ul, uh, d) = (
        params.ubar_window_start(),
        params.ubar_lambda(),
        params.ubar_lambda_hi(),
        params.delta,
    );
    let mut out = Vec::new();
    for j in 0..opts.n_window {
        out.push((u1 + (ul - u1) * j as f64 / (opts.n_window - 1) as f64, Region::Window));
    }
    for j in 0..opts.n_transition {
        out.push((ul + (uh - ul) * (j + 1) as f64 / (opts.n_transition + 1) as f64, Region::Transition));
    }
    // geometric from λ′δ + (2δ − λ′δ)/64 up to 2δ
    for j in 0..opts.n_tail {
        let s = if opts.n_tail == 1 {
            1.0
        } else {
            64f64.powf(-((opts.n_tail - 1 - j) as f64) / (opts.n_tail - 1) as f64)
        };
        out.push((uh + (2.0 * d - uh) * s, Region::Tail));
    }
    Ok(out)
}

/// The schematic slope `½(ζ + u̅ζ′ − ζ′) a^{1/2} b^μ`, taken literally.
pub fn h_slope(model: &ShearModel, ubar: f64) -> f64 {
    let z = model.zeta_radial(ubar);
    let zp = model.zeta_radial_derivative(ubar);
    0.5 * (z + ubar * zp - zp) * model.params().amplitude()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AreaReport {
    /// ∫ R² dΩ.
    pub area: f64,
    pub area_lo: f64,
    pub area_hi: f64,
    pub radius_proxy: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
}

/// Area of the sphere with pointwise round radius R, and the interval allowed by
/// an area-element distortion in [1 − 1/f₀, 1 + 1/f₀].
pub fn area_of(r: &SphereField, f0: f64) -> AreaReport {
    let area = r.map(|v| v * v).integrate_unit();
    let k = if f0.is_finite() { 1.0 / f0 } else { 0.0 };
    let proxy = |a: f64| (a / (16.0 * std::f64::consts::PI)).sqrt();
    let (lo, hi) = (area * (1.0 - k), area * (1.0 + k));
    AreaReport {
        area,
        area_lo: lo,
        area_hi: hi,
        radius_proxy: proxy(area),
        radius_lo: proxy(lo),
        radius_hi: proxy(hi),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SpacelikeStatus {
    Spacelike { min_form: f64 },
    NotCertified { reason: String },
}

impl SpacelikeStatus {
    pub fn is_spacelike(&self) -> bool {
        matches!(self, Self::Spacelike { .. })
    }
}

/// Tests `g′(v,v) = λ₁²R² + λ₂²R² sin²θ + 4λ₁λ₃∂_θR + 4λ₂λ₃∂_φR + λ₃²h(1+o₁)`
/// at every node, by the leading minors and by sampling directions including
/// the one that minimises the form for λ₃ = 1.
pub fn spacelike_check(r: &SphereField, h: Option<f64>, o1: f64, samples: usize, seed: u64) -> SpacelikeStatus {
    let Some(h) = h else {
        return SpacelikeStatus::NotCertified {
            reason: "disc hypothesis disabled".into(),
        };
    };
    let c = h * (1.0 + o1);
    if !(c > 0.0) {
        return SpacelikeStatus::NotCertified {
            reason: format!("degenerate λ₃ direction (h = {h:e})"),
        };
    }
    let syn = r.derivatives(Want::FIRST);
    let grid = &r.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<[f64; 3]> = (0..samples)
        .map(|_| {
            let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-300);
            [v[0] / n, v[1] / n, v[2] / n]
        })
        .collect();
    let mut min_form = f64::INFINITY;
    for k in 0..grid.len() {
        let s = grid.sin_theta[k / grid.n_phi];
        let a = r.values[k].powi(2);
        let b = a * s * s;
        let (p, q) = (2.0 * syn.d_theta[k], 2.0 * syn.d_phi[k]);
        let form = |v: &[f64; 3]| v[0] * v[0] * a + v[1] * v[1] * b + 2.0 * v[0] * v[2] * p + 2.0 * v[1] * v[2] * q + v[2] * v[2] * c;
        let det = a * b * c - a * q * q - b * p * p;
        if !(det > 0.0) {
            return SpacelikeStatus::NotCertified {
                reason: format!("form indefinite at node {k}"),
            };
        }
        let adversarial = [-p / a, -q / b, 1.0];
        let worst = form(&adversarial) / c;
        min_form = min_form.min(worst);
        for d in &dirs {
            let scaled = [d[0] / a.sqrt(), d[1] / b.sqrt(), d[2] / c.sqrt()];
            let v = form(&scaled);
            if !(v > 0.0) {
                return SpacelikeStatus::NotCertified {
                    reason: format!("sampled direction non-positive at node {k}"),
                };
            }
        }
    }
    SpacelikeStatus::Spacelike { min_form }
}

#[derive(Debug, Clone)]
pub struct HorizonSlice {
    pub ubar: f64,
    pub region: Region,
    pub solution: MotsSolution,
    /// Richardson-extrapolated ∂R/∂u̅.
    pub dr_dubar: SphereField,
    /// max |D_Δ − D_{Δ/2}| and max |D_{Δ/2} − D_{Δ/4}| over nodes.
    pub fd_gaps: (f64, f64),
    pub h: f64,
    pub mass_scale: f64,
}

#[derive(Debug, Clone)]
pub struct HorizonAssembly {
    pub params: RegimeParameters,
    pub slices: Vec<HorizonSlice>,
    pub h_enabled: bool,
    pub spacing: f64,
}

fn centered(plus: &SphereField, minus: &SphereField, step: f64) -> Vec<f64> {
    plus.values.iter().zip(&minus.values).map(|(p, m)| (p - m) / (2.0 * step)).collect()
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Solves every slice and the neighbouring slices behind ∂R/∂u̅. `make` builds
/// the problem at any u̅; `h` gives the slope used by the spacelike test.
pub fn assemble<F>(
    params: &RegimeParameters,
    positions: &[(f64, Region)],
    make: F,
    h: impl Fn(f64) -> f64 + Sync,
    solver: &SolverOptions,
    opts: &HorizonOptions,
) -> Result<HorizonAssembly>
where
    F: Fn(f64) -> Result<MotsProblem> + Sync,
{
    if positions.windows(2).any(|w| !(w[0].0 < w[1].0)) {
        return Err(Error::Argument("horizon slices must be strictly increasing".into()));
    }
    let step = (params.ubar_lambda_hi() - params.ubar_lambda()) / opts.fd_divisor;
    let fine = SolverOptions {
        newton_tol: opts.derivative_tol,
        ..*solver
    };
    let slices: Vec<Result<HorizonSlice>> = positions
        .par_iter()
        .enumerate()
        .map(|(i, &(u, region))| {
            let tag = |e: Error| match e {
                Error::NonConvergence { ubar, reason } => Error::NonConvergence {
                    ubar,
                    reason: format!("slice {i}: {reason}"),
                },
                other => other,
            };
            let prob = make(u)?;
            let sol = solve_slice(&prob, &fine).map_err(tag)?;
            let at = |du: f64| -> Result<SphereField> {
                let p = make(u + du)?;
                Ok(solve_from_guess(&p, &sol.r, &fine).map_err(tag)?.r)
            };
            let mut d = Vec::new();
            for k in 0..3 {
                let s = step / f64::from(1u32 << k);
                d.push(centered(&at(s)?, &at(-s)?, s));
            }
            let rich: Vec<f64> = (0..d[0].len()).map(|n| (4.0 * d[1][n] - d[0][n]) / 3.0).collect();
            let fd_gaps = (max_gap(&d[0], &d[1]), max_gap(&d[1], &d[2]));
            let solution = sol;
            Ok(HorizonSlice {
                ubar: u,
                region,
                dr_dubar: SphereField::new(prob.grid().clone(), rich)?,
                fd_gaps,
                h: h(u),
                mass_scale: prob.mass_scale,
                solution,
            })
        })
        .collect();
    Ok(HorizonAssembly {
        params: params.clone(),
        slices: slices.into_iter().collect::<Result<_>>()?,
        h_enabled: opts.h_field,
        spacing: step,
    })
}

/// Assembly over the shear model with one frozen set of perturbation fields.
pub fn assemble_model(
    model: &ShearModel,
    grid: &Arc<SphereGrid>,
    perturbations: &Perturbations,
    solver: &SolverOptions,
    opts: &HorizonOptions,
) -> Result<HorizonAssembly> {
    let params = model.params();
    let positions = slice_positions(params, opts)?;
    assemble(
        params,
        &positions,
        |u| MotsProblem::from_model(model, grid, u, perturbations.clone()),
        |u| h_slope(model, u),
        solver,
        opts,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub max_abs: f64,
    pub gap_coarse: f64,
    pub gap_fine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub ubar: f64,
    pub region: Region,
    pub r_min: f64,
    pub r_max: f64,
    pub area: AreaReport,
    pub dr_dubar: DerivativeStats,
    pub h: f64,
    pub spacelike: SpacelikeStatus,
    pub newton_trace: Vec<usize>,
    pub scaled_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonReport {
    pub slices: Vec<SliceReport>,
    /// radius_proxy nondecreasing through the window.
    pub radius_monotone_window: bool,
    /// Largest relative spread of radius_proxy over the tail slices.
    pub tail_radius_spread: f64,
}

impl HorizonAssembly {
    pub fn area(&self, index: usize) -> Result<AreaReport> {
        let s = self
            .slices
            .get(index)
            .ok_or_else(|| Error::Argument(format!("no horizon slice {index}")))?;
        Ok(area_of(&s.solution.r, self.params.f0))
    }

    pub fn spacelike(&self, index: usize, samples: usize, seed: u64) -> Result<SpacelikeStatus> {
        let s = self
            .slices
            .get(index)
            .ok_or_else(|| Error::Argument(format!("no horizon slice {index}")))?;
        let h = self.h_enabled.then_some(s.h);
        Ok(spacelike_check(&s.solution.r, h, self.params.o1, samples, seed.wrapping_add(index as u64)))
    }

    pub fn report(&self, samples: usize, seed: u64) -> Result<HorizonReport> {
        let mut slices = Vec::with_capacity(self.slices.len());
        for (i, s) in self.slices.iter().enumerate() {
            let d = &s.dr_dubar;
            let mean = d.integrate_unit() / (4.0 * std::f64::consts::PI);
            slices.push(SliceReport {
                ubar: s.ubar,
                region: s.region,
                r_min: s.solution.r.min(),
                r_max: s.solution.r.max(),
                area: self.area(i)?,
                dr_dubar: DerivativeStats {
                    min: d.min(),
                    max: d.max(),
                    mean,
                    max_abs: d.max_abs(),
                    gap_coarse: s.fd_gaps.0,
                    gap_fine: s.fd_gaps.1,
                },
                h: s.h,
                spacelike: self.spacelike(i, samples, seed)?,
                newton_trace: s.solution.newton_trace.clone(),
                scaled_residual: s.solution.scaled_residual,
            });
        }
        let window: Vec<f64> = slices
            .iter()
            .filter(|s| s.region == Region::Window)
            .map(|s| s.area.radius_proxy)
            .collect();
        let radius_monotone_window = window.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
        let tail: Vec<f64> = slices
            .iter()
            .filter(|s| s.region == Region::Tail)
            .map(|s| s.area.radius_proxy)
            .collect();
        let tail_radius_spread = match (tail.iter().cloned().reduce(f64::min), tail.iter().cloned().reduce(f64::max)) {
            (Some(lo), Some(hi)) => (hi - lo) / hi,
            _ => 0.0,
        };
        Ok(HorizonReport {
            slices,
            radius_monotone_window,
            tail_radius_spread,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shear::ProfileSpec;

    #[test]
    fn round_sphere_area() {
        let g = SphereGrid::new(8, 16).unwrap();
        let a = area_of(&SphereField::constant(&g, 3.0), f64::INFINITY);
        assert!((a.area / (36.0 * std::f64::consts::PI) - 1.0).abs() < 1e-13);
        assert!((a.radius_proxy - 1.5).abs() < 1e-13);
        let b = area_of(&SphereField::constant(&g, 3.0), 100.0);
        assert!(b.area_lo < a.area && a.area < b.area_hi);
    }

    #[test]
    fn spacelike_form_cases() {
        let g = SphereGrid::new(8, 16).unwrap();
        let r = SphereField::constant(&g, 2.0);
        assert!(spacelike_check(&r, Some(1.0), 0.05, 16, 0).is_spacelike());
        assert!(!spacelike_check(&r, Some(0.0), 0.05, 16, 0).is_spacelike());
        assert_eq!(
            spacelike_check(&r, None, 0.05, 16, 0),
            SpacelikeStatus::NotCertified {
                reason: "disc hypothesis disabled".into()
            }
        );
        // steep radius with small h: the cross term wins
        let steep = SphereField::from_fn(&g, |t, _| 2.0 + t.cos());
        assert!(!spacelike_check(&steep, Some(0.1), 0.05, 16, 0).is_spacelike());
        assert!(spacelike_check(&steep, Some(10.0), 0.05, 16, 0).is_spacelike());
    }

    #[test]
    fn positions_are_ordered_and_in_range() {
        let p = RegimeParameters::default_regime();
        let pos = slice_positions(&p, &HorizonOptions::default()).unwrap();
        assert_eq!(pos.len(), 25);
        assert!(pos.windows(2).all(|w| w[0].0 < w[1].0));
        assert_eq!(pos[0].0, p.ubar_window_start());
        assert_eq!(pos.last().unwrap().0, p.ubar_end());
        assert!(pos.iter().filter(|s| s.1 == Region::Tail).all(|s| s.0 > p.ubar_lambda_hi() + p.delta / 64.0));
    }

    #[test]
    fn constant_mass_horizon_is_null() {
        let p = RegimeParameters::default_regime();
        let g = SphereGrid::new(8, 16).unwrap();
        let m = 4.0 * p.m0;
        let pos = [(0.5 * p.delta, Region::Window), (p.delta, Region::Window)];
        let asm = assemble(
            &p,
            &pos,
            |u| MotsProblem::new(u, SphereField::constant(&g, m), Perturbations::zero(&g), 0.0, 1.0),
            |_| 1.0,
            &SolverOptions::default(),
            &HorizonOptions::default(),
        )
        .unwrap();
        for s in &asm.slices {
            assert!(s.dr_dubar.max_abs() == 0.0);
            assert!(s.solution.r.values.iter().all(|v| (v / (2.0 * p.m0) - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn window_derivative_tracks_half_amplitude() {
        let p = RegimeParameters::default_regime();
        let model = ShearModel::new(&p, &ProfileSpec::default());
        let g = SphereGrid::new(10, 20).unwrap();
        let opts = HorizonOptions {
            n_window: 3,
            n_transition: 1,
            n_tail: 1,
            ..Default::default()
        };
        let asm = assemble_model(&model, &g, &Perturbations::zero(&g), &SolverOptions::default(), &opts).unwrap();
        let rep = asm.report(16, 0).unwrap();
        for s in rep.slices.iter().filter(|s| s.region == Region::Window) {
            assert!((s.dr_dubar.mean / (0.5 * p.amplitude()) - 1.0).abs() < p.o1, "{s:?}");
            assert!(s.spacelike.is_spacelike());
        }
        // second order in the spacing where the curvature in u̅ is resolved
        let tr = rep.slices.iter().find(|s| s.region == Region::Transition).unwrap();
        let ratio = tr.dr_dubar.gap_coarse / tr.dr_dubar.gap_fine;
        assert!((ratio - 4.0).abs() < 0.5, "{ratio}");
        let tail = rep.slices.last().unwrap();
        assert!(tail.dr_dubar.max_abs <= 1e-6 * p.amplitude());
        assert!(!tail.spacelike.is_spacelike());
    }
}
