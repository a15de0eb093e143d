//! Stage orchestration: gen-data → evolve → find-mots → horizon → penrose → report.
//!
//! Each stage reads its inputs from the output directory, refuses inputs made
//! from a different configuration, and writes its outputs atomically.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::check::CheckReport;
use crate::config::RunConfig;
use crate::container::Container;
use crate::error::{Error, Result};
use crate::horizon::{assemble_model, slice_positions, HorizonReport, Region};
use crate::io::{write_atomic, write_json};
use crate::mots::{solve_slice, verify_apriori, Diagnostics, MotsProblem, Perturbations};
use crate::penrose::{audit, sweep, sweep_csv, Interval, PenroseAudit};
use crate::plot::{Plot, Series, Style};
use crate::regime::{validate, RegimeParameters, ValidationReport};
use crate::shear::{build_profile, ScaleCriticalNorm, ShearModel, ShearProfile};
use crate::sphere::SphereGrid;
use crate::transport::{integrate_data_cone, ConeOptions, SlabModel, TrappedCell, TrappedClass, ZeroShear};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    GenData,
    Evolve,
    FindMots,
    Horizon,
    Penrose,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] = [Stage::GenData, Stage::Evolve, Stage::FindMots, Stage::Horizon, Stage::Penrose, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::GenData => "gen-data",
            Stage::Evolve => "evolve",
            Stage::FindMots => "find-mots",
            Stage::Horizon => "horizon",
            Stage::Penrose => "penrose",
            Stage::Report => "report",
        }
    }
}

pub const PROFILE: &str = "profile.bin";
pub const CONSTRAINTS: &str = "constraints.json";
pub const CONE_CSV: &str = "cone.csv";
pub const TRAPPED_CSV: &str = "trapped_map.csv";
pub const EVOLVE: &str = "evolve.json";
pub const MOTS_DIR: &str = "mots";
pub const BOUNDS: &str = "mots/bounds.json";
pub const HORIZON: &str = "horizon.json";
pub const PENROSE: &str = "penrose.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SUMMARY: &str = "summary.json";
pub const PLOTS_DIR: &str = "plots";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub passed: bool,
    pub failures: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintsFile {
    pub config_hash: String,
    pub regime: ValidationReport,
    pub profile: CheckReport,
    pub scale_critical: ScaleCriticalNorm,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrappedCriterion {
    pub min_cumulative_at_delta: f64,
    pub threshold: f64,
    pub with_shear: TrappedCell,
    pub without_shear: TrappedCell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveFile {
    pub config_hash: String,
    pub cone_steps: usize,
    pub cone_error_estimate: Option<f64>,
    pub trchi_end_min: f64,
    pub trchi_end_max: f64,
    pub trapped: TrappedCriterion,
    pub map_counts: Vec<(TrappedClass, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceBounds {
    pub index: usize,
    pub ubar: f64,
    pub region: Region,
    pub file: String,
    pub residual_norm: f64,
    pub scaled_residual: f64,
    pub newton_trace: Vec<usize>,
    pub lambda_path: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub c0_band: (f64, f64),
    pub mass_scale: f64,
    pub bounds: CheckReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsFile {
    pub config_hash: String,
    pub grid: (usize, usize),
    pub slices: Vec<SliceBounds>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonFile {
    pub config_hash: String,
    pub fd_spacing: f64,
    pub report: HorizonReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenroseFile {
    pub config_hash: String,
    pub audit: PenroseAudit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaBandEntry {
    pub ubar: f64,
    pub radius_lo: f64,
    pub radius_hi: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub regime: RegimeParameters,
    pub data_constraints_passed: bool,
    pub trapped_with_shear: TrappedClass,
    pub trapped_without_shear: TrappedClass,
    pub mots_slices: usize,
    pub mots_bounds_passed: bool,
    /// Worst `usage()` of each a-priori check over all slices.
    pub max_bound_ratios: Vec<(String, f64)>,
    pub area_band: Vec<AreaBandEntry>,
    pub area_band_passed: bool,
    /// max |∂R/∂u̅| / (a^{1/2} b^μ) over the slices after λ′δ.
    pub null_approach: f64,
    pub radius_monotone_window: bool,
    pub spacelike_slices: usize,
    pub window_start_class: String,
    pub window_start_slack: Option<f64>,
    pub exponent_rel_diff: f64,
    pub passed: bool,
}

/// One configured run rooted at an output directory.
pub struct Run {
    pub config: RunConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl Run {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        let hash = config.hash();
        Self {
            config,
            hash,
            out: out.into(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn require(&self, name: &str, producer: Stage) -> Result<PathBuf> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(Error::Dependency {
                required: producer.name().into(),
                path: p,
                reason: "missing".into(),
            })
        }
    }

    fn stale(&self, path: &Path, producer: Stage, found: &str) -> Error {
        Error::Dependency {
            required: producer.name().into(),
            path: path.to_path_buf(),
            reason: format!("stale (made from config {found}, current config {})", self.hash),
        }
    }

    fn read<T: DeserializeOwned>(&self, name: &str, producer: Stage) -> Result<T> {
        let path = self.require(name, producer)?;
        let value: serde_json::Value = crate::io::read_json(&path)?;
        let found = value.get("config_hash").and_then(|h| h.as_str()).unwrap_or("none").to_string();
        if found != self.hash {
            return Err(self.stale(&path, producer, &found));
        }
        Ok(serde_json::from_value(value)?)
    }

    fn load_profile(&self) -> Result<ShearProfile> {
        let path = self.require(PROFILE, Stage::GenData)?;
        let c = Container::load(&path, "shear-profile")?;
        let found = c.meta.get("config_hash").and_then(|h| h.as_str()).unwrap_or("none").to_string();
        if found != self.hash {
            return Err(self.stale(&path, Stage::GenData, &found));
        }
        ShearProfile::from_container(c)
    }

    fn csv_text(&self, body: &str) -> String {
        format!("# config_hash: {}\n{body}", self.hash)
    }

    fn mots_grid(&self) -> Result<Arc<SphereGrid>> {
        SphereGrid::new(self.config.grid.n_theta, self.config.grid.n_phi)
    }

    fn perturbations(&self, params: &RegimeParameters, grid: &Arc<SphereGrid>) -> Result<Perturbations> {
        Perturbations::sample(grid, self.config.seed, self.config.solver.perturbation_beta, params.b_quarter())
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageOutcome> {
        match stage {
            Stage::GenData => self.gen_data(),
            Stage::Evolve => self.evolve(),
            Stage::FindMots => self.find_mots(),
            Stage::Horizon => self.horizon(),
            Stage::Penrose => self.penrose(),
            Stage::Report => self.report(),
        }
    }

    /// All stages in order, stopping at the first error (not at the first failed check).
    pub fn run_all(&self) -> Result<Vec<StageOutcome>> {
        Stage::ALL.iter().map(|s| self.run_stage(*s)).collect()
    }

    fn gen_data(&self) -> Result<StageOutcome> {
        let regime = validate(&self.config.regime)?;
        let params = self.config.params()?;
        let profile = build_profile(&params, &self.config.profile)?;
        let checks = profile.verify();
        let norm = profile.scale_critical_norm(1, 2)?;
        let passed = regime.passed && checks.passed && norm.passed;
        let mut failures: Vec<String> = checks.failures().map(|c| c.name.clone()).collect();
        if !norm.passed {
            failures.push("scale_critical_norm".into());
        }
        profile.save(&self.path(PROFILE), &self.hash)?;
        write_json(
            &self.path(CONSTRAINTS),
            &ConstraintsFile {
                config_hash: self.hash.clone(),
                regime,
                profile: checks,
                scale_critical: norm,
                passed,
            },
        )?;
        let cfg = self.path("run_config.toml");
        write_atomic(&cfg, format!("# config_hash: {}\n{}", self.hash, self.config.to_toml()).as_bytes())?;
        Ok(StageOutcome {
            stage: Stage::GenData,
            passed,
            failures,
            artifacts: vec![self.path(PROFILE), self.path(CONSTRAINTS), cfg],
        })
    }

    fn evolve(&self) -> Result<StageOutcome> {
        let profile = self.load_profile()?;
        let params = &profile.params;
        let model = profile.model();
        let g = &self.config.grid;
        let cone = integrate_data_cone(&profile.grid, &model, &ConeOptions::for_regime(params, g.cone_steps))?;
        write_atomic(&self.path(CONE_CSV), self.csv_text(&cone.write_csv(g.cone_stride)).as_bytes())?;
        let last = cone.slice(cone.ubar.len() - 1);

        let mut slab = SlabModel::new(params, &model);
        slab.envelope_multiplier = self.config.toggles.envelope_multiplier;
        let cells = slab.trapped_map(&profile.grid, g.trapped_n_u, g.trapped_n_ubar)?;
        let mut csv = String::from("u,ubar,class,leading_min,leading_max,envelope\n");
        for c in &cells {
            let class = serde_json::to_value(c.class)?;
            csv.push_str(&format!(
                "{:.17e},{:.17e},{},{:.17e},{:.17e},{:.17e}\n",
                c.u,
                c.ubar,
                class.as_str().unwrap_or_default(),
                c.leading_min,
                c.leading_max,
                c.envelope
            ));
        }
        write_atomic(&self.path(TRAPPED_CSV), self.csv_text(&csv).as_bytes())?;

        let u_star = params.a.sqrt() * params.b * params.delta;
        let with_shear = slab.detect_trapped(&profile.grid, u_star, params.delta)?;
        let mut flat = SlabModel::new(params, &ZeroShear);
        flat.envelope_multiplier = slab.envelope_multiplier;
        let without_shear = flat.detect_trapped(&profile.grid, u_star, params.delta)?;
        let k = profile.marks.delta * profile.grid.len();
        let min_i = profile.cumulative[k..k + profile.grid.len()].iter().cloned().fold(f64::INFINITY, f64::min);
        let threshold = 4.0 * u_star;
        let counts = [
            TrappedClass::CertifiedTrapped,
            TrappedClass::NominallyTrapped,
            TrappedClass::Indeterminate,
            TrappedClass::Untrapped,
        ]
        .into_iter()
        .map(|c| (c, cells.iter().filter(|x| x.class == c).count()))
        .collect();
        let mut failures = Vec::new();
        if min_i < threshold {
            failures.push("min I(δ) below 4 a^{1/2} b δ".to_string());
        }
        if with_shear.class != TrappedClass::CertifiedTrapped {
            failures.push("trapped sphere not certified".into());
        }
        if without_shear.class != TrappedClass::Untrapped {
            failures.push("zero-shear sphere not untrapped".into());
        }
        write_json(
            &self.path(EVOLVE),
            &EvolveFile {
                config_hash: self.hash.clone(),
                cone_steps: g.cone_steps,
                cone_error_estimate: cone.error_estimate,
                trchi_end_min: last.min(),
                trchi_end_max: last.max(),
                trapped: TrappedCriterion {
                    min_cumulative_at_delta: min_i,
                    threshold,
                    with_shear,
                    without_shear,
                },
                map_counts: counts,
            },
        )?;
        Ok(StageOutcome {
            stage: Stage::Evolve,
            passed: failures.is_empty(),
            failures,
            artifacts: vec![self.path(CONE_CSV), self.path(TRAPPED_CSV), self.path(EVOLVE)],
        })
    }

    fn find_mots(&self) -> Result<StageOutcome> {
        let profile = self.load_profile()?;
        let params = &profile.params;
        let model = profile.model();
        let grid = self.mots_grid()?;
        let pert = self.perturbations(params, &grid)?;
        let opts = self.config.solver.options();
        let positions = slice_positions(params, &self.config.horizon_options())?;
        let solved: Vec<Result<(SliceBounds, Container, String)>> = positions
            .par_iter()
            .enumerate()
            .map(|(i, &(u, region))| {
                let prob = MotsProblem::from_model(&model, &grid, u, pert.clone())?;
                let sol = solve_slice(&prob, &opts)?;
                let bounds = verify_apriori(&sol, &prob, params, self.config.solver.c1_threshold)?;
                let file = format!("{MOTS_DIR}/slice_{i:03}.bin");
                Ok((
                    SliceBounds {
                        index: i,
                        ubar: u,
                        region,
                        file,
                        residual_norm: sol.residual_norm,
                        scaled_residual: sol.scaled_residual,
                        newton_trace: sol.newton_trace.clone(),
                        lambda_path: sol.lambda_path.clone(),
                        diagnostics: sol.diagnostics,
                        c0_band: prob.c0_band(params),
                        mass_scale: prob.mass_scale,
                        bounds,
                    },
                    sol.to_container(&self.hash),
                    sol.residual_csv(),
                ))
            })
            .collect();
        let mut slices = Vec::with_capacity(solved.len());
        let mut artifacts = Vec::new();
        for r in solved {
            let (b, c, csv) = r?;
            let bin = self.path(&b.file);
            c.save(&bin)?;
            let res = self.path(&format!("{MOTS_DIR}/residual_{:03}.csv", b.index));
            write_atomic(&res, self.csv_text(&csv).as_bytes())?;
            artifacts.extend([bin, res]);
            slices.push(b);
        }
        let failures: Vec<String> = slices
            .iter()
            .flat_map(|s| s.bounds.failures().map(move |c| format!("slice {} (u̅ = {:e}): {}", s.index, s.ubar, c.name)))
            .collect();
        let passed = failures.is_empty();
        write_json(
            &self.path(BOUNDS),
            &BoundsFile {
                config_hash: self.hash.clone(),
                grid: (grid.n_theta, grid.n_phi),
                slices,
                passed,
            },
        )?;
        artifacts.push(self.path(BOUNDS));
        Ok(StageOutcome {
            stage: Stage::FindMots,
            passed,
            failures,
            artifacts,
        })
    }

    fn horizon(&self) -> Result<StageOutcome> {
        let bounds: BoundsFile = self.read(BOUNDS, Stage::FindMots)?;
        let profile = self.load_profile()?;
        let params = &profile.params;
        let model = profile.model();
        let grid = self.mots_grid()?;
        let pert = self.perturbations(params, &grid)?;
        let hopts = self.config.horizon_options();
        let asm = assemble_model(&model, &grid, &pert, &self.config.solver.options(), &hopts)?;
        let report = asm.report(hopts.spacelike_samples, hopts.seed)?;
        let mut failures = Vec::new();
        if report.slices.len() != bounds.slices.len() {
            failures.push("horizon slices differ from find-mots slices".to_string());
        }
        if !report.radius_monotone_window {
            failures.push("radius_proxy not monotone across the window".into());
        }
        write_json(
            &self.path(HORIZON),
            &HorizonFile {
                config_hash: self.hash.clone(),
                fd_spacing: asm.spacing,
                report,
            },
        )?;
        Ok(StageOutcome {
            stage: Stage::Horizon,
            passed: failures.is_empty(),
            failures,
            artifacts: vec![self.path(HORIZON)],
        })
    }

    fn penrose(&self) -> Result<StageOutcome> {
        let h: HorizonFile = self.read(HORIZON, Stage::Horizon)?;
        let params = self.config.params()?;
        let radii: Vec<(f64, Interval)> = h
            .report
            .slices
            .iter()
            .map(|s| (s.ubar, Interval::new(s.area.radius_lo, s.area.radius_hi)))
            .collect();
        let a = audit(&params, &radii)?;
        let entries = sweep(&self.config.regime, &self.config.penrose.sweep)?;
        write_atomic(&self.path(SWEEP_CSV), self.csv_text(&sweep_csv(&entries)?).as_bytes())?;
        write_json(
            &self.path(PENROSE),
            &PenroseFile {
                config_hash: self.hash.clone(),
                audit: a,
            },
        )?;
        Ok(StageOutcome {
            stage: Stage::Penrose,
            passed: true,
            failures: Vec::new(),
            artifacts: vec![self.path(PENROSE), self.path(SWEEP_CSV)],
        })
    }

    fn report(&self) -> Result<StageOutcome> {
        let cons: ConstraintsFile = self.read(CONSTRAINTS, Stage::GenData)?;
        let evo: EvolveFile = self.read(EVOLVE, Stage::Evolve)?;
        let bounds: BoundsFile = self.read(BOUNDS, Stage::FindMots)?;
        let hor: HorizonFile = self.read(HORIZON, Stage::Horizon)?;
        let pen: PenroseFile = self.read(PENROSE, Stage::Penrose)?;
        let params = self.config.params()?;
        let amp = params.amplitude();

        let mut ratios: Vec<(String, f64)> = Vec::new();
        for s in &bounds.slices {
            for c in &s.bounds.checks {
                let r = c.usage();
                match ratios.iter_mut().find(|(n, _)| *n == c.name) {
                    Some(e) => e.1 = e.1.max(r),
                    None => ratios.push((c.name.clone(), r)),
                }
            }
        }
        let area_band: Vec<AreaBandEntry> = hor
            .report
            .slices
            .iter()
            .filter(|s| s.region == Region::Window)
            .map(|s| {
                let band_lo = (0.25 - params.o1) * amp * s.ubar;
                let band_hi = (0.25 + params.o1) * amp * s.ubar;
                AreaBandEntry {
                    ubar: s.ubar,
                    radius_lo: s.area.radius_lo,
                    radius_hi: s.area.radius_hi,
                    band_lo,
                    band_hi,
                    inside: s.area.radius_lo >= band_lo && s.area.radius_hi <= band_hi,
                }
            })
            .collect();
        let area_band_passed = area_band.iter().all(|e| e.inside);
        let null_approach = hor
            .report
            .slices
            .iter()
            .filter(|s| s.region == Region::Tail)
            .map(|s| s.dr_dubar.max_abs / amp)
            .fold(0.0, f64::max);
        let window_start_class = serde_json::to_value(pen.audit.window_start.lower_side)?
            .as_str()
            .unwrap_or_default()
            .to_string();
        let passed = cons.passed
            && evo.trapped.with_shear.class == TrappedClass::CertifiedTrapped
            && evo.trapped.without_shear.class == TrappedClass::Untrapped
            && bounds.passed
            && area_band_passed
            && null_approach <= 1e-6
            && hor.report.radius_monotone_window;
        let summary = Summary {
            config_hash: self.hash.clone(),
            seed: self.config.seed,
            regime: params.clone(),
            data_constraints_passed: cons.passed,
            trapped_with_shear: evo.trapped.with_shear.class,
            trapped_without_shear: evo.trapped.without_shear.class,
            mots_slices: bounds.slices.len(),
            mots_bounds_passed: bounds.passed,
            max_bound_ratios: ratios,
            area_band,
            area_band_passed,
            null_approach,
            radius_monotone_window: hor.report.radius_monotone_window,
            spacelike_slices: hor.report.slices.iter().filter(|s| s.spacelike.is_spacelike()).count(),
            window_start_class,
            window_start_slack: pen.audit.window_start.slack,
            exponent_rel_diff: pen.audit.consistency.max_rel_diff,
            passed,
        };
        write_json(&self.path(SUMMARY), &summary)?;

        let mut artifacts = vec![self.path(SUMMARY)];
        for (name, plot) in self.plots(&bounds, &hor, &pen)? {
            let base = format!("{PLOTS_DIR}/{name}");
            let dat = format!("{name}.dat");
            for (ext, text) in [
                ("svg", plot.to_svg(&self.hash)),
                ("dat", plot.to_dat(&self.hash)),
                ("gp", plot.to_gnuplot(&dat, &self.hash)),
            ] {
                let p = self.path(&format!("{base}.{ext}"));
                write_atomic(&p, text.as_bytes())?;
                artifacts.push(p);
            }
        }
        let failures = if passed { Vec::new() } else { vec!["summary checks failed; see summary.json".to_string()] };
        Ok(StageOutcome {
            stage: Stage::Report,
            passed,
            failures,
            artifacts,
        })
    }

    fn plots(&self, bounds: &BoundsFile, hor: &HorizonFile, pen: &PenroseFile) -> Result<Vec<(&'static str, Plot)>> {
        let pts = |f: &dyn Fn(&SliceBounds) -> f64| bounds.slices.iter().map(|s| (s.ubar, f(s))).collect::<Vec<_>>();
        let r_band = Plot {
            title: "MOTS radius against the C0 band".into(),
            xlabel: "ubar".into(),
            ylabel: "R".into(),
            log_x: false,
            series: vec![
                Series { name: "R min".into(), points: pts(&|s| s.diagnostics.r_min), style: Style::Points, color: "#1f77b4" },
                Series { name: "R max".into(), points: pts(&|s| s.diagnostics.r_max), style: Style::Points, color: "#ff7f0e" },
                Series { name: "band lower".into(), points: pts(&|s| s.c0_band.0), style: Style::Dashed, color: "#2ca02c" },
                Series { name: "band upper".into(), points: pts(&|s| s.c0_band.1), style: Style::Dashed, color: "#d62728" },
            ],
        };

        let text = std::fs::read_to_string(self.require(TRAPPED_CSV, Stage::Evolve)?).map_err(|e| Error::io(self.path(TRAPPED_CSV), e))?;
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let classes = [
            ("certified-trapped", "#d62728"),
            ("nominally-trapped", "#ff7f0e"),
            ("indeterminate", "#7f7f7f"),
            ("untrapped", "#1f77b4"),
        ];
        let mut by_class: Vec<Vec<(f64, f64)>> = vec![Vec::new(); classes.len()];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            let num = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok()).unwrap_or(f64::NAN);
            if let Some(k) = classes.iter().position(|c| Some(c.0) == rec.get(2)) {
                by_class[k].push((num(0), num(1)));
            }
        }
        let trapped = Plot {
            title: "Trapped-surface map".into(),
            xlabel: "u".into(),
            ylabel: "ubar".into(),
            log_x: true,
            series: classes
                .iter()
                .zip(by_class)
                .map(|((n, c), p)| Series { name: (*n).into(), points: p, style: Style::Points, color: c })
                .collect(),
        };

        let slices = &pen.audit.slices;
        let m = |f: &dyn Fn(&crate::penrose::SliceMargin) -> f64| slices.iter().map(|s| (s.ubar, f(s))).collect::<Vec<_>>();
        let margin = Plot {
            title: "Penrose margin".into(),
            xlabel: "ubar".into(),
            ylabel: "m_ADM - radius proxy".into(),
            log_x: false,
            series: vec![
                Series { name: "numeric lower".into(), points: m(&|s| s.numeric.lo), style: Style::Line, color: "#1f77b4" },
                Series { name: "numeric upper".into(), points: m(&|s| s.numeric.hi), style: Style::Line, color: "#ff7f0e" },
                Series { name: "analytic lower".into(), points: m(&|s| s.analytic.lo), style: Style::Dashed, color: "#2ca02c" },
                Series { name: "analytic upper".into(), points: m(&|s| s.analytic.hi), style: Style::Dashed, color: "#d62728" },
            ],
        };
        let _ = hor;
        Ok(vec![("r_band", r_band), ("trapped_map", trapped), ("margin", margin)])
    }
}

/// Shear model built straight from a configuration (no profile file).
pub fn model_from_config(config: &RunConfig) -> Result<ShearModel> {
    Ok(ShearModel::new(&config.params()?, &config.profile))
}
