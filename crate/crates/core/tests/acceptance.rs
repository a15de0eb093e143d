//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mots_core::config::RunConfig;
use mots_core::horizon::{area_of, assemble_model, HorizonAssembly, Region};
use mots_core::mots::{random_smooth_field, solve_from_guess, solve_slice, verify_apriori, MotsProblem, Perturbations, SolverOptions};
use mots_core::penrose::{classify_regime, exponent_consistency, RegimeClass, UbarPosition};
use mots_core::pipeline::{Run, Stage};
use mots_core::regime::RegimeParameters;
use mots_core::shear::{build_profile, Defect, ShearModel, ShearProfile};
use mots_core::sphere::{SphereField, SphereGrid};
use mots_core::transport::{integrate_data_cone, ConeOptions, SlabModel, TrappedClass, ZeroShear};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Shared {
    config: RunConfig,
    params: RegimeParameters,
    profile: ShearProfile,
    model: ShearModel,
    grid: Arc<SphereGrid>,
    pert: Perturbations,
    horizon: HorizonAssembly,
}

impl Shared {
    fn new() -> Self {
        let config = RunConfig::with_seed(1);
        let params = config.params().unwrap();
        let profile = build_profile(&params, &config.profile).unwrap();
        let model = profile.model();
        let grid = SphereGrid::new(config.grid.n_theta, config.grid.n_phi).unwrap();
        let pert = Perturbations::sample(&grid, config.seed, config.solver.perturbation_beta, params.b_quarter()).unwrap();
        let horizon = assemble_model(&model, &grid, &pert, &config.solver.options(), &config.horizon_options()).unwrap();
        Self {
            config,
            params,
            profile,
            model,
            grid,
            pert,
            horizon,
        }
    }

    fn problem(&self, ubar: f64) -> MotsProblem {
        MotsProblem::from_model(&self.model, &self.grid, ubar, self.pert.clone()).unwrap()
    }
}

fn minkowski(_: &Shared) -> Outcome {
    let t0 = Instant::now();
    let params = RegimeParameters::default_regime();
    let grid = SphereGrid::new(8, 16).map_err(|e| e.to_string())?;
    let st = integrate_data_cone(&grid, &ZeroShear, &ConeOptions::for_regime(&params, 2048)).map_err(|e| e.to_string())?;
    let n = grid.len();
    let err = st
        .ubar
        .iter()
        .enumerate()
        .flat_map(|(k, u)| st.trchi[k * n..(k + 1) * n].iter().map(move |v| (v - 2.0 / (1.0 + u)).abs()))
        .fold(0.0, f64::max);
    // the order is measured where truncation error exceeds rounding
    let unit = |steps| {
        let o = ConeOptions {
            ubar_end: 2.0,
            steps,
            initial: 2.0,
            error_estimate: false,
        };
        let st = integrate_data_cone(&grid, &ZeroShear, &o).unwrap();
        st.ubar.iter().enumerate().map(|(k, u)| (st.trchi[k * n] - 2.0 / (1.0 + u)).abs()).fold(0.0, f64::max)
    };
    let ratio = unit(32) / unit(64);
    let secs = t0.elapsed().as_secs_f64();
    ensure(
        err < 1e-8 && (ratio - 16.0).abs() < 1.5 && secs < 1.0,
        format!("max error {err:.2e} (< 1e-8), halving ratio {ratio:.2} (≈ 16), {secs:.3} s (< 1 s)"),
    )
}

fn constant_mass(s: &Shared) -> Outcome {
    let t0 = Instant::now();
    let grid = SphereGrid::new(64, 128).map_err(|e| e.to_string())?;
    let m0 = s.params.m0;
    let mut prob = MotsProblem::new(1.0, SphereField::constant(&grid, 4.0 * m0), Perturbations::zero(&grid), 0.0, 1.0)
        .map_err(|e| e.to_string())?;
    prob.mass_scale = 4.0 * m0;
    let opts = SolverOptions::default();
    let sol = solve_slice(&prob, &opts).map_err(|e| e.to_string())?;
    let rel = sol.r.values.iter().map(|v| (v / (2.0 * m0) - 1.0).abs()).fold(0.0, f64::max);
    let (lo, hi) = prob.c0_band(&s.params);
    let centre = SphereField::constant(&grid, 0.5 * (lo + hi));
    let from_centre = solve_from_guess(&prob, &centre, &opts).map_err(|e| e.to_string())?;
    let iters: usize = from_centre.newton_trace.iter().sum();
    let rel_c = from_centre.r.values.iter().map(|v| (v / (2.0 * m0) - 1.0).abs()).fold(0.0, f64::max);
    let secs = t0.elapsed().as_secs_f64();
    ensure(
        rel < 1e-9 && rel_c < 1e-9 && iters <= 3 && secs < 5.0,
        format!("rel error {rel:.2e} / {rel_c:.2e} (< 1e-9), {iters} Newton steps from band centre (≤ 3), {secs:.2} s at 64×128 (< 5 s)"),
    )
}

fn trapped(s: &Shared) -> Outcome {
    let p = &s.params;
    let u = p.a.sqrt() * p.b * p.delta;
    let n = s.profile.grid.len();
    let k = s.profile.marks.delta * n;
    let min_i = s.profile.cumulative[k..k + n].iter().cloned().fold(f64::INFINITY, f64::min);
    let with = SlabModel::new(p, &s.model).detect_trapped(&s.profile.grid, u, p.delta).map_err(|e| e.to_string())?;
    let without = SlabModel::new(p, &ZeroShear).detect_trapped(&s.profile.grid, u, p.delta).map_err(|e| e.to_string())?;
    ensure(
        min_i >= 4.0 * u && with.class == TrappedClass::CertifiedTrapped && without.class == TrappedClass::Untrapped,
        format!(
            "min I(δ) = {min_i:.3e} ≥ {:.3e}; with shear {:?}, I ≡ 0 {:?}",
            4.0 * u,
            with.class,
            without.class
        ),
    )
}

fn c0_band(s: &Shared) -> Outcome {
    let p = &s.params;
    let mut n = 0;
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for sl in &s.horizon.slices {
        if sl.region != Region::Window {
            continue;
        }
        n += 1;
        let prob = s.problem(sl.ubar);
        let mmin = prob.mass.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let mmax = prob.mass.values.iter().cloned().fold(0.0, f64::max);
        let lo = (1.0 - 1.0 / p.c1) * (1.0 - 1.0 / p.c2_zeta) * (0.5 - p.o1) * mmin;
        let hi = (1.0 + 1.0 / p.c1) * (1.0 + 1.0 / p.c2_zeta) * (0.5 + p.o1) * mmax;
        for v in &sl.solution.r.values {
            worst = worst.max((lo / v).max(v / hi));
        }
        if sl.solution.r.values.iter().any(|v| *v < lo || *v > hi) {
            bad.push(sl.ubar);
        }
    }
    let (first, last) = (s.horizon.slices[0].ubar, p.ubar_lambda());
    ensure(
        bad.is_empty() && n >= 16 && (first - p.ubar_window_start()).abs() <= 1e-12 * first,
        format!("{n} window slices from {first:.3e} to {last:.3e}, worst bound usage {worst:.3}, {} outside", bad.len()),
    )
}

fn c1_c2(s: &Shared) -> Outcome {
    let mut grad = 0.0f64;
    let mut hess = 0.0f64;
    for sl in &s.horizon.slices {
        let prob = s.problem(sl.ubar);
        let d = &sl.solution.diagnostics;
        grad = grad.max(d.grad_max);
        hess = hess.max(d.hess_max / (0.1 * prob.mass_scale));
        let rep = verify_apriori(&sl.solution, &prob, &s.params, s.config.solver.c1_threshold).map_err(|e| e.to_string())?;
        if !rep.passed {
            return Err(format!("a-priori checks fail at u̅ = {:.3e}: {:?}", sl.ubar, rep.failures().map(|c| &c.name).collect::<Vec<_>>()));
        }
    }
    ensure(
        grad < 0.1 && hess < 1.0,
        format!("max |∇R| = {grad:.3e} (< 0.1), max |∂²R| / (0.1 mass scale) = {hess:.3e} (< 1) over {} slices", s.horizon.slices.len()),
    )
}

fn uniqueness(s: &Shared) -> Outcome {
    let opts = s.config.solver.options();
    let mut rng = ChaCha8Rng::seed_from_u64(s.config.seed);
    let mut worst = 0.0f64;
    for sl in &s.horizon.slices {
        let prob = s.problem(sl.ubar);
        let (lo, hi) = prob.c0_band(&s.params);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for _ in 0..10 {
            let (shape, _) = random_smooth_field(&s.grid, &mut rng, 3);
            // admissible: inside the C⁰ band, about a quarter of its half-width away from the centre
            let guess = shape.map(|v| mid + 0.25 * half * v);
            let other = solve_from_guess(&prob, &guess, &opts).map_err(|e| format!("u̅ = {:.3e}: {e}", sl.ubar))?;
            let d = sl.solution.r.values.iter().zip(&other.r.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = worst.max(d / prob.radius_scale() / opts.newton_tol);
        }
    }
    ensure(
        worst <= 10.0,
        format!("{} slices × 10 guesses, max node gap {worst:.2} × solver tolerance (≤ 10)", s.horizon.slices.len()),
    )
}

fn area_band(s: &Shared) -> Outcome {
    let p = &s.params;
    let amp = p.amplitude();
    let wobble = s.config.profile.zeta_wobble / p.c2_zeta;
    let mut worst = 0.0f64;
    let mut bad = 0;
    let mut n = 0;
    for sl in s.horizon.slices.iter().filter(|x| x.region == Region::Window) {
        n += 1;
        let a = area_of(&sl.solution.r, p.f0);
        let lo = (0.25 - p.o1) * amp * sl.ubar;
        let hi = (0.25 + p.o1) * amp * sl.ubar;
        if a.radius_lo < lo || a.radius_hi > hi {
            bad += 1;
        }
        let centre = 0.25 * amp * sl.ubar;
        worst = worst.max((a.radius_hi - centre).abs().max((a.radius_lo - centre).abs()) / (p.o1 * amp * sl.ubar));
    }
    ensure(
        bad == 0 && wobble <= 1.0 / 20.0 + 1e-15 && p.o1 == 0.05,
        format!("{n} window slices, {bad} outside; worst |proxy − A u̅/4| = {worst:.3} o₁ A u̅; ζ wobble {wobble:.3}"),
    )
}

fn null_approach(s: &Shared) -> Outcome {
    let p = &s.params;
    let tol = 1e-6 * p.amplitude();
    let lo = p.ubar_lambda_hi();
    let mut n = 0;
    let mut worst = 0.0f64;
    for sl in s.horizon.slices.iter().filter(|x| x.ubar > lo && x.ubar <= 2.0 * p.delta) {
        n += 1;
        worst = worst.max(sl.dr_dubar.max_abs());
    }
    ensure(
        n > 0 && worst <= tol,
        format!("{n} slices in (λ′δ, 2δ], max |∂R/∂u̅| = {worst:.3e} (≤ {tol:.3e})"),
    )
}

fn penrose(s: &Shared) -> Outcome {
    let p = &s.params;
    let c = exponent_consistency(p);
    let start = classify_regime(p, UbarPosition::WindowFraction { fraction: 0.0 }).map_err(|e| e.to_string())?;
    // λδ − u̅ = δ^{3/2}/2 and λδ − u̅ = δ^{3/2}
    let near: Vec<RegimeClass> = [0.5f64, 1.0]
        .iter()
        .map(|f| classify_regime(p, UbarPosition::BelowLambda { ln_gap: 0.5 * p.delta.ln() + f.ln() }).unwrap().lower_side)
        .collect();
    let at_lambda = classify_regime(p, UbarPosition::at(p, p.ubar_lambda())).map_err(|e| e.to_string())?;
    let inconclusive = near.iter().all(|c| *c == RegimeClass::Inconclusive) && at_lambda.lower_side == RegimeClass::Inconclusive;
    ensure(
        c.max_rel_diff <= f64::EPSILON && start.lower_side == RegimeClass::CertifiedPositive && inconclusive,
        format!(
            "exponent form rel diff {:.1e} (≤ 1 ulp); window start {:?} (slack {:.4}); near λδ inconclusive: {inconclusive}",
            c.max_rel_diff,
            start.lower_side,
            start.slack.unwrap_or(f64::NAN)
        ),
    )
}

fn profile_verifier(s: &Shared) -> Outcome {
    let rep = s.profile.verify();
    let get = |n: &str| rep.get(n).map(|c| c.measured).unwrap_or(f64::NAN);
    let step = s.profile.with_defect(Defect::StepZeta).verify();
    let scaled = s.profile.with_defect(Defect::Scale(1.5)).verify();
    let frozen = s.profile.with_defect(Defect::FrozenZero).verify();
    let flagged = [
        !step.passed,
        !scaled.passed,
        !frozen.passed,
        !frozen.get("zero_locus_moving").map(|c| c.passed).unwrap_or(true),
    ];
    ensure(
        rep.passed
            && get("total_shear") <= 1e-6
            && get("window_identity") <= 1e-8
            && get("dominance") <= 0.2
            && flagged.iter().all(|f| *f),
        format!(
            "builder passes: {} (total {:.1e}, window identity {:.1e}, dominance {:.3}); defects flagged: step ζ {}, ×1.5 {}, frozen zero {}",
            rep.passed,
            get("total_shear"),
            get("window_identity"),
            get("dominance"),
            flagged[0],
            flagged[1],
            flagged[2] && flagged[3]
        ),
    )
}

fn determinism(_: &Shared) -> Outcome {
    let run = |dir: &std::path::Path| {
        let r = Run::new(RunConfig::with_seed(7), dir);
        for st in Stage::ALL {
            r.run_stage(st).map_err(|e| e.to_string())?;
        }
        Ok::<_, String>(())
    };
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run(a.path())?;
    run(b.path())?;
    let mut n = 0;
    let mut differ = Vec::new();
    for entry in walk(a.path()) {
        let rel = entry.strip_prefix(a.path()).unwrap();
        n += 1;
        if std::fs::read(&entry).ok() != std::fs::read(b.path().join(rel)).ok() {
            differ.push(rel.display().to_string());
        }
    }
    ensure(differ.is_empty() && n > 0, format!("{n} files compared, differing: {differ:?}"))
}

fn walk(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

fn main() {
    let shared = Shared::new();
    let criteria: [(&str, fn(&Shared) -> Outcome); 11] = [
        ("minkowski regression", minkowski),
        ("constant-mass MOTS", constant_mass),
        ("trapped-surface criterion", trapped),
        ("C0 band", c0_band),
        ("C1/C2 bounds", c1_c2),
        ("uniqueness probe", uniqueness),
        ("area band", area_band),
        ("null approach", null_approach),
        ("penrose exponents", penrose),
        ("shear-profile verifier", profile_verifier),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let res = std::panic::catch_unwind(|| f(&shared)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match res {
            Ok(msg) => println!("criterion {:>2} PASS  {name}: {msg} [{secs:.2} s]", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {msg} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
