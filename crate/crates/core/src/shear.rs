//! Initial shear |χ̂₀|²(u̅, ω) on the data cone and its cumulative integral
//! `I(u̅, ω) = ∫₀^u̅ |χ̂₀|²`.
//!
//! The profile is analytic: a ramp on `[0, u₁]`, linear growth with an angular
//! factor `f` on the window `[u₁, λδ]`, a cut-off `ζ` on `[λδ, λ'δ]`, and zero
//! afterwards. A narrow bump removes the shear around a moving point ω₀(u̅);
//! the lost integral is returned inside the cut-off region so the total stays
//! `4 m₀` in every direction.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::CheckReport;
use crate::container::Container;
use crate::error::{Error, Result};
use crate::regime::RegimeParameters;
use crate::sphere::{gauss_legendre, SphereField, SphereGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    /// Angular resolution of the stored arrays.
    pub n_theta: usize,
    pub n_phi: usize,
    /// Intervals per u̅ segment; each must be even.
    pub n_ramp: usize,
    pub n_window: usize,
    pub n_transition: usize,
    pub n_tail: usize,
    /// Coefficients of `P₂(cos θ)` and `sin θ cos φ` in the angular factor of f.
    pub f_p2: f64,
    pub f_dipole: f64,
    /// Relative size (in units of 1/c₂) of the angular wobble of ζ.
    pub zeta_wobble: f64,
    pub zero_phi: f64,
    /// Angular radius of the bump around the zero of χ̂₀.
    pub zero_width: f64,
    /// Shape parameter of the logarithmic sweep of the zero in θ.
    pub zero_x0: f64,
    /// Threshold for the discrete scale-critical norm.
    pub scale_critical_bound: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            n_theta: 16,
            n_phi: 32,
            n_ramp: 128,
            n_window: 256,
            n_transition: 256,
            n_tail: 32,
            f_p2: 0.2,
            f_dipole: 0.05,
            zeta_wobble: 0.5,
            zero_phi: 1.0,
            zero_width: 2e-4,
            zero_x0: 0.01,
            scale_critical_bound: 2.0e17,
        }
    }
}

#[inline]
fn smoothstep5(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (-15.0 + 6.0 * x))
}

#[inline]
fn smoothstep5_d(x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    30.0 * x * x * (1.0 - x) * (1.0 - x)
}

#[inline]
fn p2(x: f64) -> f64 {
    1.5 * x * x - 0.5
}

/// Values of the profile at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearSample {
    pub cumulative: f64,
    pub amp2: f64,
    pub f: f64,
    pub zeta: f64,
}

#[derive(Debug, Clone, Copy)]
struct Deficit {
    ua: f64,
    ub: f64,
    c: f64,
}

/// Closed-form shear profile, evaluable at any (u̅, ω).
#[derive(Debug, Clone)]
pub struct ShearModel {
    params: RegimeParameters,
    spec: ProfileSpec,
    amp: f64,
    total: f64,
    u1: f64,
    ul: f64,
    uh: f64,
    delta: f64,
    gl: (Vec<f64>, Vec<f64>),
}

impl ShearModel {
    pub fn new(params: &RegimeParameters, spec: &ProfileSpec) -> Self {
        Self {
            params: params.clone(),
            spec: spec.clone(),
            amp: params.amplitude(),
            total: 4.0 * params.m0,
            u1: params.ubar_window_start(),
            ul: params.ubar_lambda(),
            uh: params.ubar_lambda_hi(),
            delta: params.delta,
            gl: gauss_legendre(8),
        }
    }

    pub fn params(&self) -> &RegimeParameters {
        &self.params
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    /// `4 m₀`.
    pub fn total(&self) -> f64 {
        self.total
    }

    fn angular(&self, theta: f64, phi: f64) -> f64 {
        self.spec.f_p2 * p2(theta.cos()) + self.spec.f_dipole * theta.sin() * phi.cos()
    }

    fn f_smooth(&self, u: f64, theta: f64, phi: f64) -> (f64, f64) {
        let y = self.angular(theta, phi) / self.params.c1;
        let arg = PI * u / self.ul;
        (1.0 + arg.sin() * y, PI / self.ul * arg.cos() * y)
    }

    fn transition_x(&self, u: f64) -> f64 {
        ((u - self.ul) / (self.uh - self.ul)).clamp(0.0, 1.0)
    }

    /// Angle-free cut-off ζ(u̅).
    pub fn zeta_radial(&self, u: f64) -> f64 {
        1.0 - smoothstep5(self.transition_x(u))
    }

    /// dζ(u̅)/du̅.
    pub fn zeta_radial_derivative(&self, u: f64) -> f64 {
        if u <= self.ul || u >= self.uh {
            return 0.0;
        }
        -smoothstep5_d(self.transition_x(u)) / (self.uh - self.ul)
    }

    fn zeta_smooth(&self, u: f64, theta: f64) -> (f64, f64) {
        if u <= self.ul {
            return (1.0, 0.0);
        }
        if u >= self.uh {
            return (0.0, 0.0);
        }
        let w = self.uh - self.ul;
        let x = self.transition_x(u);
        let k = self.spec.zeta_wobble / self.params.c2_zeta * p2(theta.cos());
        let bump = 64.0 * (x * (1.0 - x)).powi(3);
        let dbump = 192.0 * (x * (1.0 - x)).powi(2) * (1.0 - 2.0 * x);
        let wob = 1.0 + k * bump;
        let z = 1.0 - smoothstep5(x);
        (z * wob, (-smoothstep5_d(x) * wob + z * k * dbump) / w)
    }

    fn ramp(&self, u: f64) -> (f64, f64) {
        if u >= self.u1 {
            return (u, 1.0);
        }
        let x = (u / self.u1).max(0.0);
        let x4 = x.powi(4);
        let e = x4 * (20.0 + x * (-45.0 + x * (36.0 - 10.0 * x)));
        let de = smoothstep5(x) + 70.0 * (x * (1.0 - x)).powi(3);
        (self.u1 * e, de)
    }

    /// Cumulative shear and rate before the zero is carved out.
    fn base(&self, u: f64, theta: f64, phi: f64) -> (f64, f64) {
        if u <= 0.0 {
            return (0.0, 0.0);
        }
        if u >= self.uh {
            return (self.total, 0.0);
        }
        let (f, df) = self.f_smooth(u, theta, phi);
        if u <= self.ul {
            let (e, de) = self.ramp(u);
            return (self.amp * e * f, self.amp * (de * f + e * df));
        }
        let (z, dz) = self.zeta_smooth(u, theta);
        let i = self.amp * u * f * z + (1.0 - z) * self.total;
        let rate = self.amp * (f * z + u * df * z + u * f * dz) - dz * self.total;
        (i, rate)
    }

    /// The point where χ̂₀ vanishes, for `0 < u̅ < δ`.
    pub fn zero_point(&self, u: f64) -> Option<(f64, f64)> {
        if !(u > 0.0 && u < self.delta) {
            return None;
        }
        let o1 = self.params.o1;
        let x0 = self.spec.zero_x0;
        let x = u / self.delta;
        let l = (1.0 + x / x0).ln() / (1.0 + 1.0 / x0).ln();
        Some((PI / 2.0 - o1 + 2.0 * o1 * l, self.spec.zero_phi))
    }

    fn path_u_of_theta(&self, theta: f64) -> f64 {
        let o1 = self.params.o1;
        let x0 = self.spec.zero_x0;
        let l = ((theta - PI / 2.0 + o1) / (2.0 * o1)).clamp(0.0, 1.0);
        let x = x0 * ((l * (1.0 + 1.0 / x0).ln()).exp() - 1.0);
        x.clamp(0.0, 1.0) * self.delta
    }

    fn bump(&self, u: f64, theta: f64, phi: f64) -> f64 {
        let Some((t0, p0)) = self.zero_point(u) else {
            return 0.0;
        };
        let cosd = theta.cos() * t0.cos() + theta.sin() * t0.sin() * (phi - p0).cos();
        // half-angle form keeps precision for tiny separations
        let chord2 = (theta.sin() * phi.cos() - t0.sin() * p0.cos()).powi(2)
            + (theta.sin() * phi.sin() - t0.sin() * p0.sin()).powi(2)
            + (theta.cos() - t0.cos()).powi(2);
        let dist = if cosd > 0.0 {
            2.0 * (0.5 * chord2.sqrt()).min(1.0).asin()
        } else {
            PI
        };
        let r = dist / self.spec.zero_width;
        if r >= 1.0 {
            0.0
        } else {
            (1.0 - r * r).powi(3)
        }
    }

    fn chi(&self, u: f64) -> f64 {
        if u <= self.ul || u >= self.uh {
            return 0.0;
        }
        smoothstep5_d(self.transition_x(u)) / (self.uh - self.ul)
    }

    fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        const PANELS: usize = 64;
        let h = (b - a) / PANELS as f64;
        let (x, w) = &self.gl;
        let mut s = 0.0;
        for p in 0..PANELS {
            let mid = a + (p as f64 + 0.5) * h;
            for (xi, wi) in x.iter().zip(w) {
                s += wi * g(mid + 0.5 * h * xi);
            }
        }
        0.5 * h * s
    }

    fn deficit(&self, theta: f64, phi: f64) -> Option<Deficit> {
        let w = self.spec.zero_width;
        let mut dphi = (phi - self.spec.zero_phi).rem_euclid(2.0 * PI);
        if dphi > PI {
            dphi -= 2.0 * PI;
        }
        if dphi.abs() > PI / 2.0 || theta.sin() * dphi.sin().abs() >= w {
            return None;
        }
        let ua = self.path_u_of_theta(theta - w);
        let ub = self.path_u_of_theta(theta + w);
        if ub <= ua {
            return None;
        }
        let lost = self.integrate(ua, ub, |u| self.base(u, theta, phi).1 * self.bump(u, theta, phi));
        let blocked = self.integrate(ua.max(self.ul), ub.min(self.uh), |u| {
            self.chi(u) * self.bump(u, theta, phi)
        });
        Some(Deficit {
            ua,
            ub,
            c: lost / (1.0 - blocked),
        })
    }

    pub fn sample(&self, u: f64, theta: f64, phi: f64) -> ShearSample {
        let (ib, rate) = self.base(u, theta, phi);
        let hole = self.bump(u, theta, phi);
        let (cumulative, amp2) = match self.deficit(theta, phi) {
            Some(d) => {
                let up = u.min(d.ub);
                let lost = self.integrate(d.ua, up, |s| self.base(s, theta, phi).1 * self.bump(s, theta, phi));
                let returned = smoothstep5(self.transition_x(u))
                    - self.integrate(d.ua.max(self.ul), up.min(self.uh), |s| {
                        self.chi(s) * self.bump(s, theta, phi)
                    });
                (ib - lost + d.c * returned, (rate + d.c * self.chi(u)) * (1.0 - hole))
            }
            None => (ib, rate * (1.0 - hole)),
        };
        let (fs, _) = self.f_smooth(u, theta, phi);
        let (zeta, _) = self.zeta_smooth(u, theta);
        let f = if u >= self.u1 && zeta > 1e-6 {
            (cumulative - (1.0 - zeta) * self.total) / (self.amp * u * zeta)
        } else {
            fs
        };
        ShearSample {
            cumulative,
            amp2,
            f,
            zeta,
        }
    }

    /// Effective mass `a^{1/2} b^μ f ζ u̅ + (1 − ζ) 4m₀` on a grid.
    pub fn mass_field(&self, grid: &Arc<SphereGrid>, u: f64) -> SphereField {
        SphereField::from_fn(grid, |t, p| {
            let s = self.sample(u, t, p);
            self.amp * s.f * s.zeta * u + (1.0 - s.zeta) * self.total
        })
    }

    /// Angle-free mass scale `a^{1/2} b^μ u̅ ζ(u̅) + (1 − ζ(u̅)) 4m₀`.
    pub fn mass_scale(&self, u: f64) -> f64 {
        let z = self.zeta_radial(u);
        self.amp * u * z + (1.0 - z) * self.total
    }
}

/// Indices of the distinguished u̅ values inside the profile's u̅ grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UbarMarks {
    pub window_start: usize,
    pub lambda: usize,
    pub lambda_hi: usize,
    pub delta: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoint {
    pub theta: f64,
    pub phi: f64,
}

/// Tabulated profile on a (u̅ × sphere) grid. Arrays are slice-major:
/// entry `k * n_nodes + node`.
#[derive(Debug, Clone)]
pub struct ShearProfile {
    pub params: RegimeParameters,
    pub spec: ProfileSpec,
    pub grid: Arc<SphereGrid>,
    pub ubar: Vec<f64>,
    pub marks: UbarMarks,
    pub cumulative: Vec<f64>,
    pub amp2: Vec<f64>,
    pub f: Vec<f64>,
    pub zeta: Vec<f64>,
    /// One entry per u̅ node; `None` outside (0, δ).
    pub zero_locus: Vec<Option<ZeroPoint>>,
}

fn ubar_grid(params: &RegimeParameters, spec: &ProfileSpec) -> Result<(Vec<f64>, UbarMarks)> {
    let ends = [
        0.0,
        params.ubar_window_start(),
        params.ubar_lambda(),
        params.ubar_lambda_hi(),
        params.delta,
        params.ubar_end(),
    ];
    let counts = [spec.n_ramp, spec.n_window, spec.n_transition, spec.n_tail, spec.n_tail];
    if let Some(n) = counts.iter().find(|n| **n < 2 || **n % 2 == 1) {
        return Err(Error::Resolution(format!("u̅ segment count {n} must be even and at least 2")));
    }
    let mut ubar = vec![0.0];
    let mut marks = [0usize; 5];
    for s in 0..5 {
        let (a, b) = (ends[s], ends[s + 1]);
        for i in 1..=counts[s] {
            ubar.push(if i == counts[s] { b } else { a + (b - a) * i as f64 / counts[s] as f64 });
        }
        marks[s] = ubar.len() - 1;
    }
    Ok((
        ubar,
        UbarMarks {
            window_start: marks[0],
            lambda: marks[1],
            lambda_hi: marks[2],
            delta: marks[3],
            end: marks[4],
        },
    ))
}

/// Builds and tabulates the profile, refusing specs that break the data constraints.
pub fn build_profile(params: &RegimeParameters, spec: &ProfileSpec) -> Result<ShearProfile> {
    if params.c1 < 20.0 {
        return Err(Error::constraint(
            "angular factor bound",
            format!("c1 = {} but f must stay within 1 ± 1/c1 with c1 ≥ 20", params.c1),
        ));
    }
    if params.c2_zeta < 20.0 {
        return Err(Error::constraint(
            "cut-off bound",
            format!("c2 = {} but ζ must stay within ζ(u̅)(1 ± 1/c2) with c2 ≥ 20", params.c2_zeta),
        ));
    }
    if spec.f_p2.abs() + spec.f_dipole.abs() > 1.0 {
        return Err(Error::constraint(
            "angular factor bound",
            "|f_p2| + |f_dipole| must not exceed 1",
        ));
    }
    if !(0.0..=1.0).contains(&spec.zeta_wobble) {
        return Err(Error::constraint("cut-off bound", "zeta_wobble must lie in [0, 1]"));
    }
    if !(spec.zero_width > 0.0 && spec.zero_width < params.o1) || !(spec.zero_x0 > 0.0) {
        return Err(Error::constraint(
            "moving zero",
            "zero_width must lie in (0, o1) and zero_x0 must be positive",
        ));
    }
    let grid = SphereGrid::new(spec.n_theta, spec.n_phi)?;
    let (ubar, marks) = ubar_grid(params, spec)?;
    let model = ShearModel::new(params, spec);
    let nodes: Vec<(f64, f64)> = grid.nodes().collect();
    let n = nodes.len();

    // the carved-out rate is never below the smooth rate, so checking the smooth rate suffices
    let mut bad = None;
    for &u in &ubar {
        for &(t, p) in &nodes {
            let r = model.base(u, t, p).1;
            if r < 0.0 || !r.is_finite() {
                bad = Some((u, t, p, r));
                break;
            }
        }
    }
    if let Some((u, t, p, r)) = bad {
        return Err(Error::constraint(
            "monotone cumulative shear",
            format!("|χ̂₀|² = {r:e} at u̅ = {u:e}, ω = ({t:.4}, {p:.4}); λ' too close to λ(1 + o1)?"),
        ));
    }

    let rows: Vec<Vec<ShearSample>> = ubar
        .par_iter()
        .map(|&u| nodes.iter().map(|&(t, p)| model.sample(u, t, p)).collect())
        .collect();
    let mut cumulative = Vec::with_capacity(ubar.len() * n);
    let mut amp2 = Vec::with_capacity(ubar.len() * n);
    let mut f = Vec::with_capacity(ubar.len() * n);
    let mut zeta = Vec::with_capacity(ubar.len() * n);
    for row in rows {
        for s in row {
            cumulative.push(s.cumulative);
            amp2.push(s.amp2);
            f.push(s.f);
            zeta.push(s.zeta);
        }
    }
    let zero_locus = ubar
        .iter()
        .map(|&u| model.zero_point(u).map(|(theta, phi)| ZeroPoint { theta, phi }))
        .collect();
    Ok(ShearProfile {
        params: params.clone(),
        spec: spec.clone(),
        grid,
        ubar,
        marks,
        cumulative,
        amp2,
        f,
        zeta,
        zero_locus,
    })
}

/// Deliberate corruptions used to exercise the verifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Defect {
    /// ζ replaced by a step at the middle of `[λδ, λ'δ]`.
    StepZeta,
    /// |χ̂₀|² and I multiplied by a constant.
    Scale(f64),
    /// The zero of χ̂₀ pinned to its first position.
    FrozenZero,
}

impl ShearProfile {
    pub fn n_nodes(&self) -> usize {
        self.grid.len()
    }

    pub fn model(&self) -> ShearModel {
        ShearModel::new(&self.params, &self.spec)
    }

    fn row<'a>(&self, data: &'a [f64], k: usize) -> &'a [f64] {
        let n = self.n_nodes();
        &data[k * n..(k + 1) * n]
    }

    pub fn cumulative_slice(&self, k: usize) -> SphereField {
        SphereField {
            grid: self.grid.clone(),
            values: self.row(&self.cumulative, k).to_vec(),
        }
    }

    pub fn amp2_slice(&self, k: usize) -> SphereField {
        SphereField {
            grid: self.grid.clone(),
            values: self.row(&self.amp2, k).to_vec(),
        }
    }

    pub fn with_defect(&self, defect: Defect) -> ShearProfile {
        let mut p = self.clone();
        match defect {
            Defect::StepZeta => {
                let mid = 0.5 * (self.params.ubar_lambda() + self.params.ubar_lambda_hi());
                let n = self.n_nodes();
                for (k, &u) in self.ubar.iter().enumerate() {
                    let v = if u < mid { 1.0 } else { 0.0 };
                    p.zeta[k * n..(k + 1) * n].iter_mut().for_each(|z| *z = v);
                }
            }
            Defect::Scale(s) => {
                p.amp2.iter_mut().for_each(|v| *v *= s);
                p.cumulative.iter_mut().for_each(|v| *v *= s);
            }
            Defect::FrozenZero => {
                let first = p.zero_locus.iter().flatten().next().copied();
                for z in p.zero_locus.iter_mut().flatten() {
                    *z = first.expect("profile has at least one zero");
                }
            }
        }
        p
    }

    /// Composite Simpson integral of |χ̂₀|² from 0 to each segment boundary, per node.
    fn simpson_at_marks(&self) -> Vec<Vec<f64>> {
        let n = self.n_nodes();
        let m = &self.marks;
        let bounds = [0, m.window_start, m.lambda, m.lambda_hi, m.delta, m.end];
        let mut acc = vec![0.0; n];
        let mut out = Vec::new();
        for s in 0..5 {
            let (k0, k1) = (bounds[s], bounds[s + 1]);
            let h = (self.ubar[k1] - self.ubar[k0]) / (k1 - k0) as f64;
            for (node, a) in acc.iter_mut().enumerate() {
                let mut sum = 0.0;
                for k in k0..=k1 {
                    let w = if k == k0 || k == k1 {
                        1.0
                    } else if (k - k0) % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    sum += w * self.amp2[k * n + node];
                }
                *a += sum * h / 3.0;
            }
            out.push(acc.clone());
        }
        out
    }

    /// Numerical audit of every data constraint; failures are reported, not raised.
    pub fn verify(&self) -> CheckReport {
        let mut rep = CheckReport::new();
        let n = self.n_nodes();
        let p = &self.params;
        let amp = p.amplitude();
        let total = 4.0 * p.m0;
        let m = self.marks;
        let model = self.model();
        let nodes: Vec<(f64, f64)> = self.grid.nodes().collect();

        let start = self.row(&self.cumulative, 0).iter().chain(self.row(&self.amp2, 0)).fold(0.0f64, |a, v| a.max(v.abs()));
        rep.at_most("initial_vanishing", start / total, 0.0, "max |I|, |χ̂₀|² at u̅ = 0 relative to 4m₀");

        let end = self.row(&self.cumulative, m.end);
        let dev = end.iter().fold(0.0f64, |a, v| a.max((v / total - 1.0).abs()));
        rep.at_most("total_shear", dev, 1e-6, "max over ω of |I(2δ, ω)/4m₀ − 1|");
        let spread = end.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v))
            - end.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        rep.at_most("angular_independence", spread / total, 1e-6, "(max − min) of I(2δ, ·) over 4m₀");

        let simpson = self.simpson_at_marks();
        let qdev = simpson[4].iter().fold(0.0f64, |a, v| a.max((v / total - 1.0).abs()));
        rep.at_most("total_shear_quadrature", qdev, 1e-6, "Simpson ∫₀^{2δ}|χ̂₀|² against 4m₀");
        let bounds = [m.window_start, m.lambda, m.lambda_hi, m.delta, m.end];
        let mut cdev = 0.0f64;
        for (s, &k) in bounds.iter().enumerate() {
            for node in 0..n {
                cdev = cdev.max((simpson[s][node] - self.cumulative[k * n + node]).abs() / total);
            }
        }
        rep.at_most("quadrature_consistency", cdev, 1e-6, "Simpson cumulative vs tabulated I at segment ends");

        let mut wdev = 0.0f64;
        for k in m.window_start..=m.lambda {
            let u = self.ubar[k];
            for node in 0..n {
                let i = k * n + node;
                wdev = wdev.max((self.cumulative[i] - amp * self.f[i] * u).abs() / (amp * u));
            }
        }
        rep.at_most("window_identity", wdev, 1e-8, "|I − a^{1/2}b^μ f u̅| / (a^{1/2}b^μ u̅) on the window");

        let mut tdev = 0.0f64;
        for k in m.lambda..=m.lambda_hi {
            let u = self.ubar[k];
            for node in 0..n {
                let i = k * n + node;
                let z = self.zeta[i];
                let expect = amp * self.f[i] * z * u + (1.0 - z) * total;
                tdev = tdev.max((self.cumulative[i] - expect).abs() / total);
            }
        }
        rep.at_most("transition_identity", tdev, 1e-8, "|I − a^{1/2}b^μ f ζ u̅ − (1 − ζ)4m₀| / 4m₀ on [λδ, λ'δ]");

        let mut ddev = 0.0f64;
        for node in 0..n {
            let mstar = self.cumulative[m.lambda * n + node];
            let tail = self.cumulative[m.lambda_hi * n + node] - mstar;
            ddev = ddev.max((mstar / (p.d0 * tail) - 1.0).abs());
        }
        rep.at_most("dominance", ddev, 0.2, "max over ω of |M*/(d₀ N) − 1|");

        let mut fdev = 0.0f64;
        for k in m.window_start..=m.lambda_hi {
            for node in 0..n {
                let i = k * n + node;
                if self.zeta[i] > 0.0 {
                    fdev = fdev.max((self.f[i] - 1.0).abs() * p.c1);
                }
            }
        }
        rep.at_most("f_bounds", fdev, 1.0, "max c₁|f − 1| on the window and cut-off region");

        let mut zdev = 0.0f64;
        for (k, &u) in self.ubar.iter().enumerate() {
            let zr = model.zeta_radial(u);
            for &z in self.row(&self.zeta, k) {
                let d = if zr > 0.0 {
                    (z / zr - 1.0).abs() * p.c2_zeta
                } else if z == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                zdev = zdev.max(d);
            }
        }
        rep.at_most("zeta_bounds", zdev, 1.0, "max c₂|ζ(u̅, ω)/ζ(u̅) − 1|");

        let width = p.ubar_lambda_hi() - p.ubar_lambda();
        let mut slope = 0.0f64;
        for k in 1..self.ubar.len() {
            let h = self.ubar[k] - self.ubar[k - 1];
            for node in 0..n {
                let dz = (self.zeta[k * n + node] - self.zeta[(k - 1) * n + node]).abs();
                slope = slope.max(dz / h * width);
            }
        }
        rep.at_most("zeta_smoothness", slope, 4.0, "max |Δζ/Δu̅|·(λ' − λ)δ");

        let mut drop = 0.0f64;
        let mut neg = 0.0f64;
        for k in 1..self.ubar.len() {
            for node in 0..n {
                drop = drop.max(self.cumulative[(k - 1) * n + node] - self.cumulative[k * n + node]);
            }
        }
        for v in &self.amp2 {
            neg = neg.max(-v);
        }
        rep.at_most("monotone", drop.max(neg * p.delta) / total, 1e-14, "largest decrease of I (and negative |χ̂₀|²·δ) over 4m₀");

        let peak = self.amp2.iter().fold(0.0f64, |a, v| a.max(*v)).max(f64::MIN_POSITIVE);
        let mut edge = 0.0f64;
        for node in 0..n {
            edge = edge.max(self.amp2[n + node] - self.amp2[node]);
            edge = edge.max((self.amp2[(m.lambda_hi - 1) * n + node] - self.amp2[m.lambda_hi * n + node]).abs());
            for k in m.lambda_hi..=m.end {
                edge = edge.max(self.amp2[k * n + node].abs());
            }
        }
        rep.at_most("endpoint_vanishing", edge / peak, 1e-2, "one-step change of |χ̂₀|² at u̅ = 0 and u̅ = λ'δ, over its peak");

        let mut present = 0.0f64;
        let mut thetas = Vec::new();
        for (k, &u) in self.ubar.iter().enumerate() {
            if !(u > 0.0 && u < p.delta) {
                continue;
            }
            let node_min = self.row(&self.amp2, k).iter().fold(f64::INFINITY, |a, v| a.min(*v));
            let at_zero = match self.zero_locus[k] {
                Some(z) => {
                    thetas.push(z.theta);
                    model.sample(u, z.theta, z.phi).amp2
                }
                None => f64::INFINITY,
            };
            present = present.max(node_min.min(at_zero) / peak);
        }
        rep.at_most("zero_locus_present", present, 1e-12, "max over u̅ ∈ (0, δ) of min_ω |χ̂₀|² / peak");
        let range = thetas.iter().fold(f64::NEG_INFINITY, |a, v| a.max(*v)) - thetas.iter().fold(f64::INFINITY, |a, v| a.min(*v));
        let monotone = thetas.windows(2).all(|w| w[1] > w[0]);
        rep.at_least(
            "zero_locus_moving",
            if monotone { range } else { 0.0 },
            p.o1,
            "θ-range swept by the zero (strictly monotone sweeps only)",
        );
        let _ = nodes;
        rep
    }

    /// Largest over u̅ of `Σ_{j ≤ j_max, i ≤ i_max} δ^j a^{-1/2} ‖∂_u̅^j ∇^i |χ̂₀|‖_{L²(S²)}`.
    pub fn scale_critical_norm(&self, j_max: usize, i_max: usize) -> Result<ScaleCriticalNorm> {
        let lmax = self.grid.lmax;
        if i_max > lmax / 2 || j_max > 4 || 2 * j_max + 1 > self.ubar.len() {
            return Err(Error::Resolution(format!(
                "orders (j = {j_max}, i = {i_max}) exceed grid support (lmax = {lmax}, {} u̅ nodes)",
                self.ubar.len()
            )));
        }
        let n = self.n_nodes();
        let nk = self.ubar.len();
        let mut layer: Vec<f64> = self.amp2.iter().map(|v| v.max(0.0).sqrt()).collect();
        let degrees = self.grid.coeff_degrees();
        let mut per_slice = vec![0.0; nk];
        let a_half = self.params.a.sqrt();
        for j in 0..=j_max {
            if j > 0 {
                layer = d_ubar(&self.ubar, &layer, n);
            }
            let scale = self.params.delta.powi(j as i32) / a_half;
            let sums: Vec<f64> = (0..nk)
                .into_par_iter()
                .map(|k| {
                    let coeffs = self.grid.analyze(&layer[k * n..(k + 1) * n]);
                    let mut s = 0.0;
                    for i in 0..=i_max {
                        let norm2: f64 = coeffs
                            .iter()
                            .zip(&degrees)
                            .filter_map(|(c, d)| d.map(|l| ((l * (l + 1)) as f64).powi(i as i32) * c * c))
                            .sum();
                        s += scale * norm2.sqrt();
                    }
                    s
                })
                .collect();
            for (acc, s) in per_slice.iter_mut().zip(sums) {
                *acc += s;
            }
        }
        let (k, value) = per_slice
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bk, bv), (k, v)| if *v > bv { (k, *v) } else { (bk, bv) });
        Ok(ScaleCriticalNorm {
            value,
            at_ubar: self.ubar[k],
            bound: self.spec.scale_critical_bound,
            passed: value <= self.spec.scale_critical_bound,
        })
    }

    pub fn write_slice_csv(&self, k: usize, path: &Path) -> Result<()> {
        let n = self.n_nodes();
        let mut s = String::from("theta,phi,cumulative,amp2,f,zeta\n");
        for node in 0..n {
            let (t, ph) = self.grid.node(node);
            let i = k * n + node;
            s.push_str(&format!(
                "{t:.17e},{ph:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.cumulative[i], self.amp2[i], self.f[i], self.zeta[i]
            ));
        }
        crate::io::write_atomic(path, s.as_bytes())
    }

    pub fn to_container(&self, config_hash: &str) -> Container {
        let meta = serde_json::json!({
            "config_hash": config_hash,
            "params": self.params,
            "spec": self.spec,
            "marks": self.marks,
        });
        let mut c = Container::new("shear-profile", meta);
        c.push("ubar", self.ubar.clone());
        c.push("cumulative", self.cumulative.clone());
        c.push("amp2", self.amp2.clone());
        c.push("f", self.f.clone());
        c.push("zeta", self.zeta.clone());
        c.push(
            "zero_theta",
            self.zero_locus.iter().map(|z| z.map_or(f64::NAN, |z| z.theta)).collect(),
        );
        c.push(
            "zero_phi",
            self.zero_locus.iter().map(|z| z.map_or(f64::NAN, |z| z.phi)).collect(),
        );
        c
    }

    pub fn from_container(mut c: Container) -> Result<Self> {
        let field = |name: &str| {
            c.meta
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Format(format!("profile header lacks `{name}`")))
        };
        let params: RegimeParameters = serde_json::from_value(field("params")?)?;
        let spec: ProfileSpec = serde_json::from_value(field("spec")?)?;
        let marks: UbarMarks = serde_json::from_value(field("marks")?)?;
        let grid = SphereGrid::new(spec.n_theta, spec.n_phi)?;
        let ubar = c.take("ubar")?;
        let total = ubar.len() * grid.len();
        let mut arr = |name: &str| -> Result<Vec<f64>> {
            let v = c.take(name)?;
            if v.len() != total {
                return Err(Error::Format(format!("array `{name}` has {} entries, expected {total}", v.len())));
            }
            Ok(v)
        };
        let cumulative = arr("cumulative")?;
        let amp2 = arr("amp2")?;
        let f = arr("f")?;
        let zeta = arr("zeta")?;
        let zt = c.take("zero_theta")?;
        let zp = c.take("zero_phi")?;
        if zt.len() != ubar.len() || zp.len() != ubar.len() || marks.end + 1 != ubar.len() {
            return Err(Error::Format("zero locus or marks inconsistent with the u̅ grid".into()));
        }
        let zero_locus = zt
            .iter()
            .zip(&zp)
            .map(|(t, p)| if t.is_nan() { None } else { Some(ZeroPoint { theta: *t, phi: *p }) })
            .collect();
        Ok(Self {
            params,
            spec,
            grid,
            ubar,
            marks,
            cumulative,
            amp2,
            f,
            zeta,
            zero_locus,
        })
    }

    pub fn save(&self, path: &Path, config_hash: &str) -> Result<()> {
        self.to_container(config_hash).save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_container(Container::load(path, "shear-profile")?)
    }
}

/// Second-order derivative in u̅ on a non-uniform grid, one-sided at the ends.
fn d_ubar(ubar: &[f64], data: &[f64], n: usize) -> Vec<f64> {
    let nk = ubar.len();
    let mut out = vec![0.0; data.len()];
    for k in 0..nk {
        let (a, b) = if k == 0 {
            (0, 1)
        } else if k == nk - 1 {
            (nk - 2, nk - 1)
        } else {
            (k - 1, k + 1)
        };
        if a + 2 == b {
            let h1 = ubar[k] - ubar[a];
            let h2 = ubar[b] - ubar[k];
            for node in 0..n {
                let (fm, f0, fp) = (data[a * n + node], data[k * n + node], data[b * n + node]);
                out[k * n + node] = (h1 * h1 * (fp - f0) + h2 * h2 * (f0 - fm)) / (h1 * h2 * (h1 + h2));
            }
        } else {
            let h = ubar[b] - ubar[a];
            for node in 0..n {
                out[k * n + node] = (data[b * n + node] - data[a * n + node]) / h;
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleCriticalNorm {
    pub value: f64,
    pub at_ubar: f64,
    pub bound: f64,
    pub passed: bool,
}
