//! Discretised S²: Gauss–Legendre colatitudes × uniform longitudes, with a real
//! spherical-harmonic transform providing spectrally accurate derivatives.
//!
//! All operators act on round spheres whose radius may vary from node to node.
//! In two dimensions the metric `R(ω)² γ_unit` is conformal to the unit metric,
//! so `Δ' = R⁻² Δ_unit` and `|∇f|² = R⁻² |∇_unit f|²` hold exactly.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Gauss–Legendre nodes and weights on [-1, 1], nodes in descending order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Index of `(l, m)` in a triangular table with `m ≤ l ≤ lmax`.
#[inline]
pub fn lm_index(lmax: usize, l: usize, m: usize) -> usize {
    m * (lmax + 1) - m * (m.saturating_sub(1)) / 2 + (l - m)
}

pub fn lm_count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Grid of `n_theta × n_phi` nodes. The colatitudes are Gauss–Legendre points,
/// so the poles are never nodes.
#[derive(Debug)]
pub struct SphereGrid {
    pub n_theta: usize,
    pub n_phi: usize,
    pub lmax: usize,
    pub theta: Vec<f64>,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub phi: Vec<f64>,
    /// Quadrature weight of each node (ring-major), summing to 4π.
    pub weights: Vec<f64>,
    ring_weight: Vec<f64>,
    // normalised associated Legendre functions and their θ-derivatives, per ring
    plm: Vec<f64>,
    dplm: Vec<f64>,
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

impl PartialEq for SphereGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n_theta == other.n_theta && self.n_phi == other.n_phi
    }
}

impl SphereGrid {
    /// Builds the grid; requires `n_phi ≥ 2 n_theta - 1` so the transform with
    /// `lmax = n_theta - 1` is alias-free in longitude.
    pub fn new(n_theta: usize, n_phi: usize) -> Result<Arc<Self>> {
        if n_theta < 4 {
            return Err(Error::Resolution(format!("n_theta = {n_theta} < 4")));
        }
        if n_phi < 2 * n_theta - 1 {
            return Err(Error::Resolution(format!(
                "n_phi = {n_phi} must be at least 2 n_theta - 1 = {}",
                2 * n_theta - 1
            )));
        }
        let lmax = n_theta - 1;
        let (x, w) = gauss_legendre(n_theta);
        let theta: Vec<f64> = x.iter().map(|v| v.acos()).collect();
        let sin_theta: Vec<f64> = x.iter().map(|v| (1.0 - v * v).sqrt()).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let dphi = 2.0 * PI / n_phi as f64;
        let ring_weight: Vec<f64> = w.iter().map(|wi| wi * dphi).collect();
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for rw in &ring_weight {
            weights.extend(std::iter::repeat(*rw).take(n_phi));
        }

        let nlm = lm_count(lmax);
        let mut plm = vec![0.0; n_theta * nlm];
        let mut dplm = vec![0.0; n_theta * nlm];
        for i in 0..n_theta {
            let (xi, si) = (x[i], sin_theta[i]);
            let p = &mut plm[i * nlm..(i + 1) * nlm];
            let mut pmm = 1.0 / (4.0 * PI).sqrt();
            for m in 0..=lmax {
                if m > 0 {
                    pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * si;
                }
                p[lm_index(lmax, m, m)] = pmm;
                if m < lmax {
                    p[lm_index(lmax, m + 1, m)] = ((2 * m + 3) as f64).sqrt() * xi * pmm;
                }
                for l in m + 2..=lmax {
                    let (lf, mf) = (l as f64, m as f64);
                    let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                    let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                    p[lm_index(lmax, l, m)] =
                        a * (xi * p[lm_index(lmax, l - 1, m)] - b * p[lm_index(lmax, l - 2, m)]);
                }
            }
            let d = &mut dplm[i * nlm..(i + 1) * nlm];
            for m in 0..=lmax {
                for l in m..=lmax {
                    let (lf, mf) = (l as f64, m as f64);
                    let mut num = lf * xi * p[lm_index(lmax, l, m)];
                    if l > m {
                        let c = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt();
                        num -= c * p[lm_index(lmax, l - 1, m)];
                    }
                    d[lm_index(lmax, l, m)] = num / si;
                }
            }
        }
        let cos_table = (0..n_phi).map(|k| (2.0 * PI * k as f64 / n_phi as f64).cos()).collect();
        let sin_table = (0..n_phi).map(|k| (2.0 * PI * k as f64 / n_phi as f64).sin()).collect();

        Ok(Arc::new(Self {
            n_theta,
            n_phi,
            lmax,
            theta,
            cos_theta: x,
            sin_theta,
            phi,
            weights,
            ring_weight,
            plm,
            dplm,
            cos_table,
            sin_table,
        }))
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node(&self, k: usize) -> (f64, f64) {
        (self.theta[k / self.n_phi], self.phi[k % self.n_phi])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    /// Length of a coefficient vector (cosine block followed by sine block).
    pub fn coeff_len(&self) -> usize {
        2 * lm_count(self.lmax)
    }

    /// Forward transform: quadrature projection onto orthonormal real harmonics.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let (nt, np, lmax) = (self.n_theta, self.n_phi, self.lmax);
        let nlm = lm_count(lmax);
        let mut out = vec![0.0; 2 * nlm];
        let mut cm = vec![0.0; lmax + 1];
        let mut sm = vec![0.0; lmax + 1];
        for i in 0..nt {
            let ring = &values[i * np..(i + 1) * np];
            for m in 0..=lmax {
                let (mut c, mut s) = (0.0, 0.0);
                for (j, v) in ring.iter().enumerate() {
                    let k = (m * j) % np;
                    c += v * self.cos_table[k];
                    s += v * self.sin_table[k];
                }
                let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                cm[m] = c * self.ring_weight[i] * norm;
                sm[m] = s * self.ring_weight[i] * norm;
            }
            let p = &self.plm[i * nlm..(i + 1) * nlm];
            for m in 0..=lmax {
                for l in m..=lmax {
                    let idx = lm_index(lmax, l, m);
                    out[idx] += p[idx] * cm[m];
                    if m > 0 {
                        out[nlm + idx] += p[idx] * sm[m];
                    }
                }
            }
        }
        out
    }

    /// Inverse transform with the requested derivatives.
    pub fn synthesize(&self, coeffs: &[f64], want: Want) -> Synthesis {
        let (nt, np, lmax) = (self.n_theta, self.n_phi, self.lmax);
        let nlm = lm_count(lmax);
        let n = nt * np;
        let alloc = |on: bool| if on { vec![0.0; n] } else { Vec::new() };
        let mut out = Synthesis {
            value: alloc(want.value),
            d_theta: alloc(want.d_theta),
            d_phi: alloc(want.d_phi),
            laplacian: alloc(want.laplacian),
            d_theta_theta: alloc(want.second),
            d_theta_phi: alloc(want.second),
            d_phi_phi: alloc(want.second),
        };
        // per-m ring sums: [value, dθ, lap, dθθ] × [cos, sin]
        let mut acc = vec![[0.0f64; 8]; lmax + 1];
        for i in 0..nt {
            let p = &self.plm[i * nlm..(i + 1) * nlm];
            let dp = &self.dplm[i * nlm..(i + 1) * nlm];
            let (si, xi) = (self.sin_theta[i], self.cos_theta[i]);
            let cot = xi / si;
            for m in 0..=lmax {
                let norm = if m == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                let mut a = [0.0f64; 8];
                let mf2 = (m * m) as f64 / (si * si);
                for l in m..=lmax {
                    let idx = lm_index(lmax, l, m);
                    let (c, s) = (coeffs[idx], if m > 0 { coeffs[nlm + idx] } else { 0.0 });
                    let ll = (l * (l + 1)) as f64;
                    let pv = p[idx];
                    let dv = dp[idx];
                    a[0] += c * pv;
                    a[1] += s * pv;
                    a[2] += c * dv;
                    a[3] += s * dv;
                    a[4] -= ll * c * pv;
                    a[5] -= ll * s * pv;
                    if want.second {
                        let d2 = -cot * dv - (ll - mf2) * pv;
                        a[6] += c * d2;
                        a[7] += s * d2;
                    }
                }
                for v in a.iter_mut() {
                    *v *= norm;
                }
                acc[m] = a;
            }
            for j in 0..np {
                let k = i * np + j;
                let mut sums = [0.0f64; 7];
                for (m, a) in acc.iter().enumerate() {
                    let t = (m * j) % np;
                    let (cs, sn) = (self.cos_table[t], self.sin_table[t]);
                    let mf = m as f64;
                    sums[0] += a[0] * cs + a[1] * sn;
                    sums[1] += a[2] * cs + a[3] * sn;
                    sums[2] += mf * (a[1] * cs - a[0] * sn);
                    sums[3] += a[4] * cs + a[5] * sn;
                    sums[4] += a[6] * cs + a[7] * sn;
                    sums[5] += mf * (a[3] * cs - a[2] * sn);
                    sums[6] -= mf * mf * (a[0] * cs + a[1] * sn);
                }
                if want.value {
                    out.value[k] = sums[0];
                }
                if want.d_theta {
                    out.d_theta[k] = sums[1];
                }
                if want.d_phi {
                    out.d_phi[k] = sums[2];
                }
                if want.laplacian {
                    out.laplacian[k] = sums[3];
                }
                if want.second {
                    out.d_theta_theta[k] = sums[4];
                    out.d_theta_phi[k] = sums[5];
                    out.d_phi_phi[k] = sums[6];
                }
            }
        }
        out
    }

    /// Degree `l` of every coefficient slot (sine slots with `m = 0` report `None`).
    pub fn coeff_degrees(&self) -> Vec<Option<usize>> {
        let lmax = self.lmax;
        let nlm = lm_count(lmax);
        let mut deg = vec![None; 2 * nlm];
        for m in 0..=lmax {
            for l in m..=lmax {
                let idx = lm_index(lmax, l, m);
                deg[idx] = Some(l);
                if m > 0 {
                    deg[nlm + idx] = Some(l);
                }
            }
        }
        deg
    }
}

/// Which outputs [`SphereGrid::synthesize`] should produce.
#[derive(Debug, Clone, Copy, Default)]
pub struct Want {
    pub value: bool,
    pub d_theta: bool,
    pub d_phi: bool,
    pub laplacian: bool,
    pub second: bool,
}

impl Want {
    pub const ALL: Want = Want {
        value: true,
        d_theta: true,
        d_phi: true,
        laplacian: true,
        second: true,
    };
    pub const FIRST: Want = Want {
        value: true,
        d_theta: true,
        d_phi: true,
        laplacian: true,
        second: false,
    };
}

/// Nodal values of a synthesised field and its coordinate derivatives on the
/// unit sphere. Unrequested outputs are empty.
#[derive(Debug, Clone)]
pub struct Synthesis {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub d_phi: Vec<f64>,
    pub laplacian: Vec<f64>,
    pub d_theta_theta: Vec<f64>,
    pub d_theta_phi: Vec<f64>,
    pub d_phi_phi: Vec<f64>,
}

/// Radius of the round metric an operator is taken with.
#[derive(Debug, Clone, Copy)]
pub enum Radius<'a> {
    Constant(f64),
    Field(&'a SphereField),
}

impl Radius<'_> {
    fn at(&self, k: usize) -> f64 {
        match self {
            Radius::Constant(r) => *r,
            Radius::Field(f) => f.values[k],
        }
    }

    fn check(&self, grid: &Arc<SphereGrid>) -> Result<()> {
        match self {
            Radius::Constant(r) if !(*r > 0.0) => {
                Err(Error::Positivity(format!("radius {r} is not positive")))
            }
            Radius::Field(f) => {
                if f.grid.as_ref() != grid.as_ref() {
                    return Err(Error::Shape("radius field lives on a different grid".into()));
                }
                match f.values.iter().position(|v| !(*v > 0.0)) {
                    Some(k) => Err(Error::Positivity(format!("radius not positive at node {k}"))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Scalar data at every grid node.
#[derive(Debug, Clone)]
pub struct SphereField {
    pub grid: Arc<SphereGrid>,
    pub values: Vec<f64>,
}

impl SphereField {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &Arc<SphereGrid>, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<SphereGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = grid.nodes().map(|(t, p)| f(t, p)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn same_grid(&self, other: &SphereField) -> Result<()> {
        if self.grid.as_ref() != other.grid.as_ref() {
            return Err(Error::Shape(format!(
                "grids {}x{} and {}x{} differ",
                self.grid.n_theta, self.grid.n_phi, other.grid.n_theta, other.grid.n_phi
            )));
        }
        Ok(())
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.grid.analyze(&self.values)
    }

    /// Coordinate derivatives on the unit sphere.
    pub fn derivatives(&self, want: Want) -> Synthesis {
        self.grid.synthesize(&self.coefficients(), want)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Laplace–Beltrami operator of the round metric of the given radius.
    pub fn laplace_beltrami(&self, radius: Radius<'_>) -> Result<SphereField> {
        radius.check(&self.grid)?;
        let lap = self
            .derivatives(Want {
                laplacian: true,
                ..Default::default()
            })
            .laplacian;
        let values = lap
            .iter()
            .enumerate()
            .map(|(k, v)| v / radius.at(k).powi(2))
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `|∇f|²` in the round metric of the given radius.
    pub fn gradient_norm_sq(&self, radius: Radius<'_>) -> Result<SphereField> {
        radius.check(&self.grid)?;
        let d = self.derivatives(Want {
            d_theta: true,
            d_phi: true,
            ..Default::default()
        });
        let np = self.grid.n_phi;
        let values = (0..self.grid.len())
            .map(|k| {
                let s = self.grid.sin_theta[k / np];
                (d.d_theta[k].powi(2) + (d.d_phi[k] / s).powi(2)) / radius.at(k).powi(2)
            })
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    /// `∫ f dA` over the round sphere of the given radius.
    pub fn integrate(&self, radius: Radius<'_>) -> Result<f64> {
        radius.check(&self.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&self.grid.weights)
            .enumerate()
            .map(|(k, (v, w))| v * w * radius.at(k).powi(2))
            .sum())
    }

    /// `∫ f dΩ` on the unit sphere.
    pub fn integrate_unit(&self) -> f64 {
        self.values.iter().zip(&self.grid.weights).map(|(v, w)| v * w).sum()
    }

    /// Root-mean-square over the unit sphere.
    pub fn rms(&self) -> f64 {
        (self
            .values
            .iter()
            .zip(&self.grid.weights)
            .map(|(v, w)| v * v * w)
            .sum::<f64>()
            / (4.0 * PI))
            .sqrt()
    }

    /// `theta,phi,value` rows.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "theta,phi,value")?;
        for (k, v) in self.values.iter().enumerate() {
            let (t, p) = self.grid.node(k);
            writeln!(out, "{t:.17e},{p:.17e},{v:.17e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        crate::io::write_atomic(path, &buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<SphereGrid> {
        SphereGrid::new(n, 2 * n).unwrap()
    }

    #[test]
    fn weights_sum_to_four_pi() {
        for n in [8, 17, 32, 64] {
            let g = grid(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s / (4.0 * PI) - 1.0).abs() < 1e-12, "n={n} s={s}");
        }
    }

    #[test]
    fn poles_are_excluded() {
        let g = grid(64);
        assert!(g.sin_theta.iter().all(|s| *s > 1e-3));
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let g = grid(16);
        let f = SphereField::constant(&g, 3.5);
        let l = f.laplace_beltrami(Radius::Constant(2.0)).unwrap();
        assert!(l.max_abs() < 1e-12);
    }

    #[test]
    fn cos_theta_is_an_l1_eigenfunction() {
        let g = grid(16);
        let f = SphereField::from_fn(&g, |t, _| t.cos());
        let r = 3.0;
        let l = f.laplace_beltrami(Radius::Constant(r)).unwrap();
        for (k, v) in l.values.iter().enumerate() {
            let (t, _) = g.node(k);
            assert!((v + 2.0 * t.cos() / (r * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_matches_finite_difference_oracle() {
        // independent oracle: second-order differences in (θ, φ) of an analytic function
        let g = grid(24);
        let func = |t: f64, p: f64| (t.cos()).powi(3) + t.sin() * (2.0 * p).cos() * t.sin() + t.cos() * t.sin() * p.sin();
        let f = SphereField::from_fn(&g, func);
        let r = 0.7;
        let l = f.laplace_beltrami(Radius::Constant(r)).unwrap();
        let h = 1e-4;
        for k in (0..g.len()).step_by(37) {
            let (t, p) = g.node(k);
            let ftt = (func(t + h, p) - 2.0 * func(t, p) + func(t - h, p)) / (h * h);
            let ft = (func(t + h, p) - func(t - h, p)) / (2.0 * h);
            let fpp = (func(t, p + h) - 2.0 * func(t, p) + func(t, p - h)) / (h * h);
            let oracle = (ftt + t.cos() / t.sin() * ft + fpp / t.sin().powi(2)) / (r * r);
            assert!((l.values[k] - oracle).abs() < 1e-5 * (1.0 + oracle.abs()), "k={k}");
        }
    }

    #[test]
    fn gradient_of_cos_theta() {
        let g = grid(16);
        let f = SphereField::from_fn(&g, |t, _| t.cos());
        for r in [1.0, 2.5] {
            let gn = f.gradient_norm_sq(Radius::Constant(r)).unwrap();
            for (k, v) in gn.values.iter().enumerate() {
                let (t, _) = g.node(k);
                assert!((v - t.sin().powi(2) / (r * r)).abs() < 1e-12);
            }
        }
        let c = SphereField::constant(&g, 1.0).gradient_norm_sq(Radius::Constant(1.0)).unwrap();
        assert!(c.max_abs() < 1e-20);
    }

    #[test]
    fn quadrature_integrals() {
        let g = grid(16);
        let one = SphereField::constant(&g, 1.0);
        assert!((one.integrate(Radius::Constant(2.0)).unwrap() - 16.0 * PI).abs() < 1e-11);
        let c = SphereField::from_fn(&g, |t, _| t.cos());
        assert!(c.integrate(Radius::Constant(5.0)).unwrap().abs() < 1e-12);
        let c2 = SphereField::from_fn(&g, |t, _| t.cos().powi(2));
        assert!((c2.integrate_unit() - 4.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn analysis_inverts_synthesis_for_band_limited_fields() {
        let g = grid(12);
        let n = g.coeff_len();
        let deg = g.coeff_degrees();
        let coeffs: Vec<f64> = (0..n)
            .map(|i| if deg[i].is_some() { ((i * 7919) % 113) as f64 / 113.0 - 0.5 } else { 0.0 })
            .collect();
        let v = g.synthesize(&coeffs, Want { value: true, ..Default::default() }).value;
        let back = g.analyze(&v);
        for i in 0..n {
            assert!((back[i] - coeffs[i]).abs() < 1e-12, "slot {i}");
        }
    }

    #[test]
    fn variable_radius_rescales_pointwise() {
        let g = grid(16);
        let f = SphereField::from_fn(&g, |t, p| t.sin() * p.cos());
        let r = SphereField::from_fn(&g, |t, _| 1.0 + 0.2 * t.cos());
        let l = f.laplace_beltrami(Radius::Field(&r)).unwrap();
        for (k, v) in l.values.iter().enumerate() {
            let expect = -2.0 * f.values[k] / r.values[k].powi(2);
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_and_positivity_errors() {
        let g1 = grid(8);
        let g2 = grid(10);
        let f = SphereField::constant(&g1, 1.0);
        let r = SphereField::constant(&g2, 1.0);
        assert!(matches!(f.laplace_beltrami(Radius::Field(&r)), Err(Error::Shape(_))));
        assert!(matches!(f.laplace_beltrami(Radius::Constant(-1.0)), Err(Error::Positivity(_))));
    }

    fn real_harmonic(l: usize, m: usize) -> impl Fn(f64, f64) -> f64 {
        // P_l^m(cos θ) cos(mφ) via the unnormalised recurrence (independent of the table code)
        move |t: f64, p: f64| {
            let x = t.cos();
            let s = t.sin();
            let mut pmm = 1.0;
            for i in 1..=m {
                pmm *= (2 * i - 1) as f64 * s;
            }
            let val = if l == m {
                pmm
            } else {
                let mut p0 = pmm;
                let mut p1 = x * (2 * m + 1) as f64 * pmm;
                for ll in m + 2..=l {
                    let p2 = ((2 * ll - 1) as f64 * x * p1 - (ll + m - 1) as f64 * p0) / (ll - m) as f64;
                    p0 = p1;
                    p1 = p2;
                }
                p1
            };
            val * (m as f64 * p).cos()
        }
    }

    #[test]
    fn eigenvalue_error_is_at_roundoff_up_to_degree_eight() {
        for n in [12, 24] {
            let g = grid(n);
            for l in 0..=8 {
                for m in [0, l / 2, l] {
                    let f = SphereField::from_fn(&g, real_harmonic(l, m));
                    let lap = f.laplace_beltrami(Radius::Constant(1.0)).unwrap();
                    let scale = f.max_abs();
                    let err = lap
                        .values
                        .iter()
                        .zip(&f.values)
                        .map(|(a, b)| (a + (l * (l + 1)) as f64 * b).abs())
                        .fold(0.0, f64::max);
                    assert!(err < 1e-10 * scale * ((l * l + 1) as f64), "l={l} m={m} err={err}");
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn laplacian_is_self_adjoint(c in proptest::collection::vec(-1.0f64..1.0, 12), r in 0.5f64..3.0) {
            let g = grid(16);
            let f = SphereField::from_fn(&g, |t, p| c[0] + c[1]*t.cos() + c[2]*t.sin()*p.cos() + c[3]*t.cos().powi(2)*t.sin()*p.sin() + c[4]*(3.0*p).cos()*t.sin().powi(3) + c[5]*t.cos().powi(5));
            let h = SphereField::from_fn(&g, |t, p| c[6] + c[7]*t.cos().powi(2) + c[8]*t.sin()*(2.0*p).sin() + c[9]*t.cos()*t.sin()*p.cos() + c[10]*t.cos().powi(4) + c[11]*(t.sin()*p.cos()).exp());
            let rad = Radius::Constant(r);
            let lf = f.laplace_beltrami(rad).unwrap();
            let lh = h.laplace_beltrami(rad).unwrap();
            let a: f64 = f.values.iter().zip(&lh.values).zip(&g.weights).map(|((x, y), w)| x*y*w*r*r).sum();
            let b: f64 = h.values.iter().zip(&lf.values).zip(&g.weights).map(|((x, y), w)| x*y*w*r*r).sum();
            let norm = f.rms() * h.rms() * 4.0 * PI;
            proptest::prop_assert!((a - b).abs() <= 1e-10 * norm.max(1e-300));
        }
    }
}
