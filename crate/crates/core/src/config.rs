//! Run configuration: a TOML file with sections, plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::horizon::HorizonOptions;
use crate::mots::SolverOptions;
use crate::penrose::SweepGrid;
use crate::regime::{RegimeInput, RegimeParameters};
use crate::shear::ProfileSpec;

pub const OUT_DIR_ENV: &str = "MOTSLAB_OUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    /// Sphere grid for the MOTS solves.
    pub n_theta: usize,
    pub n_phi: usize,
    /// RK4 steps along the data cone.
    pub cone_steps: usize,
    /// Every how many u̅ steps a cone slice is written.
    pub cone_stride: usize,
    pub trapped_n_u: usize,
    pub trapped_n_ubar: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self {
            n_theta: 24,
            n_phi: 48,
            cone_steps: 2048,
            cone_stride: 64,
            trapped_n_u: 24,
            trapped_n_ubar: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    pub newton_tol: f64,
    pub max_newton: usize,
    pub linear_tol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub step_initial: f64,
    pub step_min: f64,
    /// Perturbation fields have frame norm exactly β b^{1/4}.
    pub perturbation_beta: f64,
    pub c1_threshold: f64,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            newton_tol: o.newton_tol,
            max_newton: o.max_newton,
            linear_tol: o.linear_tol,
            gmres_restart: o.gmres_restart,
            gmres_max_iter: o.gmres_max_iter,
            step_initial: o.step_initial,
            step_min: o.step_min,
            perturbation_beta: 1.0,
            c1_threshold: 0.1,
        }
    }
}

impl SolverBlock {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            newton_tol: self.newton_tol,
            max_newton: self.max_newton,
            linear_tol: self.linear_tol,
            gmres_restart: self.gmres_restart,
            gmres_max_iter: self.gmres_max_iter,
            step_initial: self.step_initial,
            step_min: self.step_min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HorizonBlock {
    pub n_window: usize,
    pub n_transition: usize,
    pub n_tail: usize,
    pub fd_divisor: f64,
    pub derivative_tol: f64,
    pub spacelike_samples: usize,
}

impl Default for HorizonBlock {
    fn default() -> Self {
        let o = HorizonOptions::default();
        Self {
            n_window: o.n_window,
            n_transition: o.n_transition,
            n_tail: o.n_tail,
            fd_divisor: o.fd_divisor,
            derivative_tol: o.derivative_tol,
            spacelike_samples: o.spacelike_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub penrose_coupling: bool,
    /// Spacelike test with the schematic slope h (disc hypothesis).
    pub h_field: bool,
    pub envelope_multiplier: f64,
}

impl Default for Toggles {
    fn default() -> Self {
        Self {
            penrose_coupling: true,
            h_field: true,
            envelope_multiplier: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PenroseBlock {
    pub sweep: SweepGrid,
}

impl Default for PenroseBlock {
    fn default() -> Self {
        Self {
            sweep: SweepGrid {
                kappa: vec![0.55, 0.6, 0.7, 0.8, 0.9],
                y: vec![4.0, 6.0, 8.0, 10.0, 12.0, 16.0],
                t: vec![0.1, 0.2, 0.3, 0.4],
                ubar: vec![0.0, 0.5, 0.9, 1.0],
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default, skip_serializing)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub regime: RegimeInput,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub horizon: HorizonBlock,
    #[serde(default)]
    pub toggles: Toggles,
    #[serde(default)]
    pub penrose: PenroseBlock,
}

impl RunConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            out_dir: None,
            regime: RegimeInput::default(),
            profile: ProfileSpec::default(),
            grid: GridBlock::default(),
            solver: SolverBlock::default(),
            horizon: HorizonBlock::default(),
            toggles: Toggles::default(),
            penrose: PenroseBlock::default(),
        }
    }

    /// Parses TOML text, applying `section.key=value` overrides first.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: RunConfig = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, overrides)
    }

    fn check(&self) -> Result<()> {
        if self.regime.penrose_coupling != self.toggles.penrose_coupling {
            return Err(Error::Config(
                "regime.penrose_coupling and toggles.penrose_coupling disagree".into(),
            ));
        }
        if self.toggles.envelope_multiplier < 1.0 {
            return Err(Error::Config("toggles.envelope_multiplier must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.solver.perturbation_beta) {
            return Err(Error::Config("solver.perturbation_beta must lie in [0, 1]".into()));
        }
        if self.grid.n_theta < 4 || self.grid.n_phi < 2 * self.grid.n_theta - 1 {
            return Err(Error::Config(format!(
                "grid {}×{} too coarse (need n_theta ≥ 4, n_phi ≥ 2 n_theta − 1)",
                self.grid.n_theta, self.grid.n_phi
            )));
        }
        Ok(())
    }

    /// The validated regime; constraint failures surface as `Error::Constraint`.
    pub fn params(&self) -> Result<RegimeParameters> {
        RegimeParameters::new(&self.regime)
    }

    pub fn horizon_options(&self) -> HorizonOptions {
        HorizonOptions {
            n_window: self.horizon.n_window,
            n_transition: self.horizon.n_transition,
            n_tail: self.horizon.n_tail,
            fd_divisor: self.horizon.fd_divisor,
            derivative_tol: self.horizon.derivative_tol,
            h_field: self.toggles.h_field,
            spacelike_samples: self.horizon.spacelike_samples,
            seed: self.seed,
        }
    }

    /// SHA-256 of the canonical JSON form; the output directory does not enter.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(bytes))
    }

    /// Output directory: the environment override, then the config, then `motslab-out`.
    pub fn resolve_out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(d) if !d.is_empty() => PathBuf::from(d),
            _ => self.out_dir.clone().unwrap_or_else(|| PathBuf::from("motslab-out")),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}

fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut cur = root;
    for (i, k) in keys.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{spec}`: `{}` is not a section", keys[..i].join("."))))?;
        if i + 1 == keys.len() {
            table.insert((*k).to_string(), value);
            return Ok(());
        }
        cur = table.entry((*k).to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Err(Error::Config(format!("override `{spec}` has an empty key")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("seed = 3\n", &[]).unwrap();
        assert_eq!(c, RunConfig::with_seed(3));
        assert!(c.params().is_ok());
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(RunConfig::parse("[grid]\nn_theta = 8\n", &[]), Err(Error::Config(_))));
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let c = RunConfig::parse("seed = 1\n", &["regime.a=1e5".into(), "grid.n_theta=12".into(), "grid.n_phi = 24".into()]).unwrap();
        assert_eq!(c.regime.a, 1e5);
        assert_eq!(c.grid.n_theta, 12);
        assert!(RunConfig::parse("seed = 1\n[regime]\nbogus = 2\n", &[]).is_err());
        assert!(RunConfig::parse("seed = 1\n", &["novalue".into()]).is_err());
    }

    #[test]
    fn hash_ignores_out_dir_and_tracks_content() {
        let a = RunConfig::parse("seed = 1\nout_dir = \"x\"\n", &[]).unwrap();
        let b = RunConfig::parse("seed = 1\nout_dir = \"y\"\n", &[]).unwrap();
        let c = RunConfig::parse("seed = 2\n", &[]).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn roundtrip_through_toml() {
        let c = RunConfig::with_seed(9);
        assert_eq!(RunConfig::parse(&c.to_toml(), &[]).unwrap(), c);
    }

    #[test]
    fn constraint_failure_is_not_a_config_error() {
        let c = RunConfig::parse("seed = 1\n[regime]\nkappa = 1.2\n", &[]).unwrap();
        assert!(matches!(c.params(), Err(Error::Constraint { .. })));
    }
}
