//! Outgoing Raychaudhuri transport on the data cone and the slab field model.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::RegimeParameters;
use crate::shear::ShearModel;
use crate::sphere::{SphereField, SphereGrid};

/// Anything that supplies |χ̂₀|² and its u̅-integral along each generator.
pub trait ShearSource: Sync {
    fn amp2(&self, ubar: f64, theta: f64, phi: f64) -> f64;
    fn cumulative(&self, ubar: f64, theta: f64, phi: f64) -> f64;
}

impl ShearSource for ShearModel {
    fn amp2(&self, ubar: f64, theta: f64, phi: f64) -> f64 {
        self.sample(ubar, theta, phi).amp2
    }
    fn cumulative(&self, ubar: f64, theta: f64, phi: f64) -> f64 {
        self.sample(ubar, theta, phi).cumulative
    }
}

/// Minkowski data.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroShear;

impl ShearSource for ZeroShear {
    fn amp2(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn cumulative(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

/// Angle-independent cumulative shear, constant in u̅.
#[derive(Debug, Clone, Copy)]
pub struct UniformShear(pub f64);

impl ShearSource for UniformShear {
    fn amp2(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
    fn cumulative(&self, _: f64, _: f64, _: f64) -> f64 {
        self.0
    }
}

/// Another source multiplied by a constant.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a, S: ShearSource>(pub &'a S, pub f64);

impl<S: ShearSource> ShearSource for Scaled<'_, S> {
    fn amp2(&self, u: f64, t: f64, p: f64) -> f64 {
        self.1 * self.0.amp2(u, t, p)
    }
    fn cumulative(&self, u: f64, t: f64, p: f64) -> f64 {
        self.1 * self.0.cumulative(u, t, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeOptions {
    pub ubar_end: f64,
    pub steps: usize,
    pub initial: f64,
    /// Also integrate with half the step and report the difference.
    pub error_estimate: bool,
}

impl ConeOptions {
    pub fn for_regime(params: &RegimeParameters, steps: usize) -> Self {
        Self {
            ubar_end: params.ubar_end(),
            steps,
            initial: 2.0,
            error_estimate: true,
        }
    }
}

/// trχ along the cone u = 1 (Ω ≡ 1, ω ≡ 0 there).
#[derive(Debug, Clone)]
pub struct ConeState {
    pub grid: Arc<SphereGrid>,
    pub ubar: Vec<f64>,
    /// Slice-major: entry `k * n_nodes + node`.
    pub trchi: Vec<f64>,
    pub omega: f64,
    /// Richardson estimate `max |y_h − y_{h/2}| · 16/15`, if requested.
    pub error_estimate: Option<f64>,
}

impl ConeState {
    pub fn slice(&self, k: usize) -> SphereField {
        let n = self.grid.len();
        SphereField {
            grid: self.grid.clone(),
            values: self.trchi[k * n..(k + 1) * n].to_vec(),
        }
    }

    pub fn write_csv(&self, stride: usize) -> String {
        let n = self.grid.len();
        let mut s = String::from("ubar,theta,phi,trchi\n");
        for k in (0..self.ubar.len()).step_by(stride.max(1)) {
            for node in 0..n {
                let (t, p) = self.grid.node(node);
                s.push_str(&format!(
                    "{:.17e},{t:.17e},{p:.17e},{:.17e}\n",
                    self.ubar[k],
                    self.trchi[k * n + node]
                ));
            }
        }
        s
    }
}

const FOCUSING_FLOOR: f64 = -1e12;

fn rk4_generator<S: ShearSource>(
    source: &S,
    theta: f64,
    phi: f64,
    opts: &ConeOptions,
    steps: usize,
    node: usize,
) -> Result<Vec<f64>> {
    let h = opts.ubar_end / steps as f64;
    let rhs = |u: f64, y: f64| -0.5 * y * y - source.amp2(u, theta, phi);
    let mut y = opts.initial;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y);
    for k in 0..steps {
        let u = k as f64 * h;
        let k1 = rhs(u, y);
        let k2 = rhs(u + 0.5 * h, y + 0.5 * h * k1);
        let k3 = rhs(u + 0.5 * h, y + 0.5 * h * k2);
        let k4 = rhs(u + h, y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !y.is_finite() || y < FOCUSING_FLOOR {
            return Err(Error::Focusing {
                ubar: u + h,
                node,
            });
        }
        out.push(y);
    }
    Ok(out)
}

/// Integrates `d trχ/du̅ = −½ trχ² − |χ̂₀|²` along every generator with classical RK4.
pub fn integrate_data_cone<S: ShearSource>(
    grid: &Arc<SphereGrid>,
    source: &S,
    opts: &ConeOptions,
) -> Result<ConeState> {
    if opts.steps == 0 || !(opts.ubar_end > 0.0) {
        return Err(Error::Argument("cone integration needs steps > 0 and a positive range".into()));
    }
    let nodes: Vec<(f64, f64)> = grid.nodes().collect();
    let runs: Vec<Result<(Vec<f64>, f64)>> = nodes
        .par_iter()
        .enumerate()
        .map(|(node, &(t, p))| {
            let coarse = rk4_generator(source, t, p, opts, opts.steps, node)?;
            let err = if opts.error_estimate {
                let fine = rk4_generator(source, t, p, opts, 2 * opts.steps, node)?;
                coarse
                    .iter()
                    .enumerate()
                    .map(|(k, y)| (y - fine[2 * k]).abs())
                    .fold(0.0, f64::max)
                    * 16.0
                    / 15.0
            } else {
                0.0
            };
            Ok((coarse, err))
        })
        .collect();
    let n = nodes.len();
    let nk = opts.steps + 1;
    let mut trchi = vec![0.0; nk * n];
    let mut worst = 0.0f64;
    for (node, r) in runs.into_iter().enumerate() {
        let (ys, e) = r?;
        worst = worst.max(e);
        for (k, y) in ys.into_iter().enumerate() {
            trchi[k * n + node] = y;
        }
    }
    let h = opts.ubar_end / opts.steps as f64;
    Ok(ConeState {
        grid: grid.clone(),
        ubar: (0..nk).map(|k| k as f64 * h).collect(),
        trchi,
        omega: 1.0,
        error_estimate: opts.error_estimate.then_some(worst),
    })
}

/// Leading-order trχ in the slab with an absolute error envelope.
pub struct SlabModel<'a, S: ShearSource> {
    pub params: &'a RegimeParameters,
    pub source: &'a S,
    pub envelope_multiplier: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrappedClass {
    CertifiedTrapped,
    NominallyTrapped,
    Untrapped,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappedCell {
    pub u: f64,
    pub ubar: f64,
    pub class: TrappedClass,
    pub leading_min: f64,
    pub leading_max: f64,
    pub envelope: f64,
}

impl<'a, S: ShearSource> SlabModel<'a, S> {
    pub fn new(params: &'a RegimeParameters, source: &'a S) -> Self {
        Self {
            params,
            source,
            envelope_multiplier: 1.0,
        }
    }

    /// Smallest |u| covered by the slab estimates.
    pub fn u_min(&self) -> f64 {
        self.params.delta * self.params.a.sqrt() * self.params.b
    }

    fn check_domain(&self, u: f64, ubar: f64) -> Result<()> {
        let lo = self.u_min();
        let tol = 1e-12;
        if !(u >= lo * (1.0 - tol) && u <= 1.0 + tol) {
            return Err(Error::Domain(format!("u = {u:e} outside [{lo:e}, 1]")));
        }
        if !(ubar >= 0.0 && ubar <= self.params.delta * (1.0 + tol)) {
            return Err(Error::Domain(format!(
                "u̅ = {ubar:e} outside [0, {:e}]",
                self.params.delta
            )));
        }
        Ok(())
    }

    pub fn envelope(&self, u: f64, ubar: f64) -> f64 {
        self.envelope_multiplier * ubar * self.params.a.sqrt() * self.params.b_quarter() / (u * u)
    }

    /// `2/|u| − I(u̅, ·)/u²` and the envelope `u̅ a^{1/2} b^{1/4}/u²`.
    pub fn model_trchi(&self, grid: &Arc<SphereGrid>, u: f64, ubar: f64) -> Result<(SphereField, f64)> {
        self.check_domain(u, ubar)?;
        let lead = SphereField::from_fn(grid, |t, p| 2.0 / u - self.source.cumulative(ubar, t, p) / (u * u));
        Ok((lead, self.envelope(u, ubar)))
    }

    pub fn detect_trapped(&self, grid: &Arc<SphereGrid>, u: f64, ubar: f64) -> Result<TrappedCell> {
        let (lead, env) = self.model_trchi(grid, u, ubar)?;
        let (lo, hi) = (lead.min(), lead.max());
        let class = if hi + env < 0.0 {
            TrappedClass::CertifiedTrapped
        } else if lo - env > 0.0 {
            TrappedClass::Untrapped
        } else if hi < 0.0 {
            TrappedClass::NominallyTrapped
        } else {
            TrappedClass::Indeterminate
        };
        Ok(TrappedCell {
            u,
            ubar,
            class,
            leading_min: lo,
            leading_max: hi,
            envelope: env,
        })
    }

    /// Classification over a lattice log-spaced in u and uniform in u̅ ∈ [0, δ].
    pub fn trapped_map(&self, grid: &Arc<SphereGrid>, n_u: usize, n_ubar: usize) -> Result<Vec<TrappedCell>> {
        if n_u < 2 || n_ubar < 2 {
            return Err(Error::Argument("trapped map needs at least 2×2 cells".into()));
        }
        let (l0, l1) = (self.u_min().ln(), 0.0f64);
        let mut cells = Vec::with_capacity(n_u * n_ubar);
        for i in 0..n_u {
            let u = if i + 1 == n_u {
                1.0
            } else if i == 0 {
                self.u_min()
            } else {
                (l0 + (l1 - l0) * i as f64 / (n_u - 1) as f64).exp()
            };
            for j in 0..n_ubar {
                let ubar = self.params.delta * j as f64 / (n_ubar - 1) as f64;
                cells.push(self.detect_trapped(grid, u, ubar)?);
            }
        }
        Ok(cells)
    }
}
