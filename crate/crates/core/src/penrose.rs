//! ADM-mass window, Penrose margins and regime classification.
//!
//! With `δ = a^{-y}` and the coupling `κμ + 1/2 = (1/2 + t) y`, the certified
//! lower bound on `m_ADM − sqrt(|M|/16π)` is `(a^{ty−1/2} p − c₂) a^{1/2−y/2}`
//! with `p = o₁ (λδ − u̅)/(λδ − u₁)`. Classification only ever looks at its sign
//! through `ln p + (ty − 1/2) ln a − ln c₂`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regime::{validate, RegimeInput, RegimeParameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: lo.min(hi),
            hi: lo.max(hi),
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn straddles_zero(&self) -> bool {
        self.lo <= 0.0 && self.hi >= 0.0
    }
}

/// `[m₀ − ε, m₀ + ε]` with `ε = C a^{1/2} δ^{1/2}`.
pub fn adm_mass(params: &RegimeParameters) -> Interval {
    let eps = params.epsilon();
    Interval::new(params.m0 - eps, params.m0 + eps)
}

/// Exponents of a (and a few ratios) entering the audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentLedger {
    pub ty_minus_half: f64,
    pub kmu_minus_half_y: f64,
    pub half_minus_half_y: f64,
    /// κμ + 1/2 − y, the exponent of `a^{1/2} b^μ δ`.
    pub scale_critical: f64,
    /// Exponent of ε/m₀ up to the O(1) factor `4/(λ(1+o₁))`.
    pub eps_over_m0: f64,
    /// κμ − y, the leading exponent within δ^{3/2} of λδ.
    pub near_lambda: f64,
}

impl ExponentLedger {
    pub fn of(kappa: f64, mu: f64, y: f64, t: f64) -> Self {
        Self {
            ty_minus_half: t * y - 0.5,
            kmu_minus_half_y: kappa * mu - 0.5 * y,
            half_minus_half_y: 0.5 - 0.5 * y,
            scale_critical: kappa * mu + 0.5 - y,
            eps_over_m0: 0.5 * y - kappa * mu,
            near_lambda: kappa * mu - y,
        }
    }
}

/// Position of u̅ relative to λδ, kept as `ln((λδ − u̅)/δ)` so that distances
/// far below f64 resolution of u̅ itself stay representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum UbarPosition {
    /// u̅ = u₁ + fraction·(λδ − u₁).
    WindowFraction { fraction: f64 },
    /// λδ − u̅ = δ·e^{ln_gap}.
    BelowLambda { ln_gap: f64 },
}

fn window_gap(input: &RegimeInput) -> f64 {
    // (λδ − u₁)/δ = λ − γ a^{1/2}/b
    input.lambda_lo - input.gamma * ((0.5 - input.kappa) * input.a.ln()).exp()
}

impl UbarPosition {
    pub fn at(params: &RegimeParameters, ubar: f64) -> Self {
        let gap = params.lambda_lo - ubar / params.delta;
        Self::BelowLambda {
            ln_gap: if gap > 0.0 { gap.ln() } else { f64::NEG_INFINITY },
        }
    }

    /// `ln((λδ − u̅)/δ)`; −∞ at or past λδ.
    fn ln_gap(&self, input: &RegimeInput) -> f64 {
        match *self {
            Self::WindowFraction { fraction } => {
                let g = window_gap(input) * (1.0 - fraction);
                if g > 0.0 {
                    g.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Self::BelowLambda { ln_gap } => ln_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeClass {
    CertifiedPositive,
    Inconclusive,
    /// Status of the upper side: the unknown error in m − m₀ never allows a violation verdict.
    ViolatedNever,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub lower_side: RegimeClass,
    pub upper_side: RegimeClass,
    /// `(ln p + (ty − 1/2) ln a − ln c₂)/ln a`; certified iff positive.
    /// Absent where p vanishes (u̅ ≥ λδ) or the coupling is off.
    pub slack: Option<f64>,
    pub reason: String,
}

/// Classification straight from exponents; needs no numeric δ.
pub fn classify_input(input: &RegimeInput, position: UbarPosition) -> Result<Classification> {
    if !input.penrose_coupling {
        return Err(Error::Config(
            "regime classification needs penrose_coupling = true".into(),
        ));
    }
    let ln_a = input.a.ln();
    let s1 = window_gap(input);
    let ln_gap = position.ln_gap(input);
    let ln_p = input.o1.ln() + ln_gap - s1.ln();
    let slack = (ln_p + (input.t * input.y - 0.5) * ln_a - input.c2_unknown_bound.ln()) / ln_a;
    let near = ln_gap <= -0.5 * input.y * ln_a;
    let (lower_side, reason) = if ln_gap == f64::NEG_INFINITY {
        (RegimeClass::Inconclusive, "u̅ ≥ λδ: the (λδ − u̅) term no longer contributes".to_string())
    } else if near {
        (
            RegimeClass::Inconclusive,
            "λδ − u̅ ≤ δ^{3/2}: the sign depends on the unknown constant c₂".to_string(),
        )
    } else if slack > 0.0 {
        (
            RegimeClass::CertifiedPositive,
            format!("o₁-weighted leading term exceeds the c₂ bound by a^{slack:.6}"),
        )
    } else {
        (
            RegimeClass::Inconclusive,
            format!("leading term falls short of the c₂ bound by a^{:.6}", -slack),
        )
    };
    Ok(Classification {
        lower_side,
        upper_side: RegimeClass::ViolatedNever,
        slack: slack.is_finite().then_some(slack),
        reason,
    })
}

pub fn classify_regime(params: &RegimeParameters, position: UbarPosition) -> Result<Classification> {
    classify_input(&params.input(), position)
}

/// The certified lower bound at the window start computed two ways: directly
/// from a, b, δ, and in the factored exponent form `(a^{κμ−y/2} o₁ − c₂) a^{1/2−y/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentConsistency {
    /// (coefficient, exponent of a) of the leading term, direct.
    pub leading_direct: (f64, f64),
    /// Same, from the factored form.
    pub leading_factored: (f64, f64),
    pub eps_direct: (f64, f64),
    pub eps_factored: (f64, f64),
    /// Largest relative difference between the two representations.
    pub max_rel_diff: f64,
    /// The bound evaluated numerically both ways.
    pub value_direct: f64,
    pub value_factored: f64,
}

/// `p(u̅) = o₁ (λδ − u̅)/(λδ − u₁)`.
pub fn coefficient(params: &RegimeParameters, ubar: f64) -> f64 {
    params.o1 * (params.ubar_lambda() - ubar) / (params.ubar_lambda() - params.ubar_window_start())
}

pub fn exponent_consistency(params: &RegimeParameters) -> ExponentConsistency {
    let (k, mu, y) = (params.kappa, params.mu, params.y);
    let p = coefficient(params, params.ubar_window_start());
    // a^{1/2} b^μ δ · p: exponent 1/2 + κμ − y
    let leading_direct = (p, 0.5 + k * mu - y);
    let leading_factored = (params.o1, (k * mu - 0.5 * y) + (0.5 - 0.5 * y));
    // c₂ a^{1/2} δ^{1/2}
    let eps_direct = (params.c2_unknown_bound, 0.5 + 0.5 * -y);
    let eps_factored = (params.c2_unknown_bound, 0.5 - 0.5 * y);
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    let max_rel_diff = [
        rel(leading_direct.0, leading_factored.0),
        rel(leading_direct.1, leading_factored.1),
        rel(eps_direct.1, eps_factored.1),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let ln_a = params.ln_a();
    let value_direct = params.amplitude() * params.delta * p - params.c2_unknown_bound * (params.a * params.delta).sqrt();
    let value_factored = (((k * mu - 0.5 * y) * ln_a).exp() * params.o1 - params.c2_unknown_bound) * ((0.5 - 0.5 * y) * ln_a).exp();
    ExponentConsistency {
        leading_direct,
        leading_factored,
        eps_direct,
        eps_factored,
        max_rel_diff,
        value_direct,
        value_factored,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMargin {
    pub ubar: f64,
    /// `m_ADM − radius_proxy` in interval arithmetic.
    pub numeric: Interval,
    /// `a^{1/2} b^μ (1/4 ± o₁)(λδ − u̅) ± ε`.
    pub analytic: Interval,
    /// `m₀ − a^{1/2} b^μ u̅/4`, the value for R = M₀/2 with f ≡ 1 in the window.
    pub center: f64,
    pub classification: Classification,
}

pub fn margin(params: &RegimeParameters, radius: Interval, ubar: f64) -> Result<SliceMargin> {
    let adm = adm_mass(params);
    let eps = params.epsilon();
    let amp = params.amplitude();
    let gap = params.ubar_lambda() - ubar;
    let analytic = Interval::new(
        amp * (0.25 - params.o1) * gap - eps,
        amp * (0.25 + params.o1) * gap + eps,
    );
    let classification = if params.penrose_coupling {
        classify_regime(params, UbarPosition::at(params, ubar))?
    } else {
        Classification {
            lower_side: RegimeClass::Inconclusive,
            upper_side: RegimeClass::ViolatedNever,
            slack: None,
            reason: "penrose coupling disabled".into(),
        }
    };
    Ok(SliceMargin {
        ubar,
        numeric: Interval::new(adm.lo - radius.hi, adm.hi - radius.lo),
        analytic,
        center: params.m0 - 0.25 * amp * ubar,
        classification,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenroseAudit {
    pub m_adm: Interval,
    pub epsilon: f64,
    pub o1: f64,
    pub c2_unknown_bound: f64,
    pub exponents: ExponentLedger,
    pub consistency: ExponentConsistency,
    pub window_start: Classification,
    pub slices: Vec<SliceMargin>,
}

/// Audit over (u̅, radius_proxy interval) pairs.
pub fn audit(params: &RegimeParameters, radii: &[(f64, Interval)]) -> Result<PenroseAudit> {
    Ok(PenroseAudit {
        m_adm: adm_mass(params),
        epsilon: params.epsilon(),
        o1: params.o1,
        c2_unknown_bound: params.c2_unknown_bound,
        exponents: ExponentLedger::of(params.kappa, params.mu, params.y, params.t),
        consistency: exponent_consistency(params),
        window_start: classify_regime(params, UbarPosition::WindowFraction { fraction: 0.0 })?,
        slices: radii.iter().map(|&(u, r)| margin(params, r, u)).collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub kappa: Vec<f64>,
    pub y: Vec<f64>,
    pub t: Vec<f64>,
    /// Window fractions of u̅.
    pub ubar: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub kappa: f64,
    pub mu: f64,
    pub y: f64,
    pub t: f64,
    pub ubar: f64,
    /// Class of the lower side, or `invalid`.
    pub class: String,
    pub slack: Option<f64>,
    pub detail: String,
}

/// Classification over the product grid, ordered κ, y, t, u̅ (slowest first).
/// Points violating a regime constraint are reported as `invalid`.
pub fn sweep(base: &RegimeInput, grid: &SweepGrid) -> Result<Vec<SweepEntry>> {
    if grid.kappa.is_empty() || grid.y.is_empty() || grid.t.is_empty() || grid.ubar.is_empty() {
        return Err(Error::Argument("penrose sweep grid has an empty axis".into()));
    }
    let mut points = Vec::new();
    for &kappa in &grid.kappa {
        for &y in &grid.y {
            for &t in &grid.t {
                for &u in &grid.ubar {
                    points.push((kappa, y, t, u));
                }
            }
        }
    }
    Ok(points
        .par_iter()
        .map(|&(kappa, y, t, u)| {
            let input = RegimeInput {
                kappa,
                y,
                t,
                mu: None,
                penrose_coupling: true,
                ..base.clone()
            };
            let mu = input.resolved_mu().unwrap_or(f64::NAN);
            let invalid = |detail: String| SweepEntry {
                kappa,
                mu,
                y,
                t,
                ubar: u,
                class: "invalid".into(),
                slack: None,
                detail,
            };
            match validate(&input) {
                Err(e) => invalid(e.to_string()),
                Ok(rep) if !rep.passed => invalid(rep.failures().map(|f| f.name.as_str()).collect::<Vec<_>>().join(";")),
                Ok(_) => match classify_input(&input, UbarPosition::WindowFraction { fraction: u }) {
                    Ok(c) => SweepEntry {
                        kappa,
                        mu,
                        y,
                        t,
                        ubar: u,
                        class: serde_json::to_value(c.lower_side)
                            .ok()
                            .and_then(|v| v.as_str().map(str::to_owned))
                            .unwrap_or_default(),
                        slack: c.slack,
                        detail: c.reason,
                    },
                    Err(e) => invalid(e.to_string()),
                },
            }
        })
        .collect())
}

pub fn sweep_csv(entries: &[SweepEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["kappa", "mu", "y", "t", "ubar", "class", "slack"])
        .map_err(|e| Error::Format(e.to_string()))?;
    for e in entries {
        w.write_record([
            format!("{}", e.kappa),
            format!("{:.17e}", e.mu),
            format!("{}", e.y),
            format!("{}", e.t),
            format!("{}", e.ubar),
            e.class.clone(),
            e.slack.map(|v| format!("{v:.17e}")).unwrap_or_default(),
        ])
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adm_interval() {
        let p = RegimeParameters::default_regime();
        let m = adm_mass(&p);
        // ε = a^{1/2−y/2} for C = 1
        assert!((p.epsilon() / 1e-18 - 1.0).abs() < 1e-12);
        assert!(m.contains(p.m0) && m.lo < m.hi);
        let mut input = p.input();
        input.c_eps = 0.0;
        let z = RegimeParameters::new(&input).unwrap();
        assert_eq!(adm_mass(&z), Interval::new(z.m0, z.m0));
    }

    #[test]
    fn default_regime_is_certified_at_window_start() {
        let p = RegimeParameters::default_regime();
        let c = classify_regime(&p, UbarPosition::WindowFraction { fraction: 0.0 }).unwrap();
        assert_eq!(c.lower_side, RegimeClass::CertifiedPositive);
        assert_eq!(c.upper_side, RegimeClass::ViolatedNever);
        // 0.05 · 10¹⁰ > 1
        let expect = ((0.05f64).ln() + 2.5 * 1e4f64.ln()) / 1e4f64.ln();
        assert!((c.slack.unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn near_lambda_is_inconclusive() {
        let p = RegimeParameters::default_regime();
        let ln_gap = 0.5 * p.delta.ln() - 1.0;
        let c = classify_regime(&p, UbarPosition::BelowLambda { ln_gap }).unwrap();
        assert_eq!(c.lower_side, RegimeClass::Inconclusive);
        let c = classify_regime(&p, UbarPosition::at(&p, p.ubar_lambda())).unwrap();
        assert_eq!(c.lower_side, RegimeClass::Inconclusive);
    }

    #[test]
    fn boundary_ty_half_is_inconclusive() {
        let input = RegimeInput {
            t: 0.05,
            ..RegimeInput::default()
        };
        // ty = 1/2
        let c = classify_input(&input, UbarPosition::WindowFraction { fraction: 0.0 }).unwrap();
        assert_eq!(c.lower_side, RegimeClass::Inconclusive);
        let no = RegimeInput {
            penrose_coupling: false,
            mu: Some(12.5),
            ..RegimeInput::default()
        };
        assert!(matches!(classify_input(&no, UbarPosition::WindowFraction { fraction: 0.0 }), Err(Error::Config(_))));
    }

    #[test]
    fn factored_form_matches() {
        let p = RegimeParameters::default_regime();
        let c = exponent_consistency(&p);
        assert!(c.max_rel_diff <= f64::EPSILON);
        assert!((c.value_direct - c.value_factored).abs() <= 1e-12 * c.value_direct.abs());
        assert!(c.value_direct > 0.0);
    }

    #[test]
    fn margin_interval_contains_center() {
        let p = RegimeParameters::default_regime();
        let u = p.ubar_window_start();
        let r = 0.25 * p.amplitude() * u;
        let m = margin(&p, Interval::new(r * 0.995, r * 1.005), u).unwrap();
        assert!(m.numeric.contains(m.center));
        assert!(m.numeric.lo > 0.0);
        let at = margin(&p, Interval::new(p.m0 * 0.995, p.m0 * 1.005), p.ubar_lambda()).unwrap();
        assert!(at.numeric.straddles_zero());
        assert!(at.analytic.straddles_zero());
    }

    #[test]
    fn sweep_edge_cases() {
        let base = RegimeInput::default();
        assert!(matches!(
            sweep(&base, &SweepGrid { kappa: vec![], y: vec![10.0], t: vec![0.3], ubar: vec![0.0] }),
            Err(Error::Argument(_))
        ));
        let one = sweep(&base, &SweepGrid { kappa: vec![0.6], y: vec![10.0], t: vec![0.3], ubar: vec![0.0] }).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].class, "certified-positive");
        let bad = sweep(&base, &SweepGrid { kappa: vec![1.2, 1.5], y: vec![10.0], t: vec![0.3], ubar: vec![0.0] }).unwrap();
        assert!(bad.iter().all(|e| e.class == "invalid"));
        let csv = sweep_csv(&one).unwrap();
        assert!(csv.starts_with("kappa,mu,y,t,ubar,class,slack\n"));
    }

    proptest::proptest! {
        #[test]
        fn y_line_switches_at_most_once(t in 0.05f64..0.45, frac in 0.0f64..0.9) {
            let base = RegimeInput::default();
            let ys: Vec<f64> = (0..40).map(|i| 2.0 + 0.5 * i as f64).collect();
            let e = sweep(&base, &SweepGrid { kappa: vec![0.6], y: ys, t: vec![t], ubar: vec![frac] }).unwrap();
            let classes: Vec<&str> = e.iter().filter(|e| e.class != "invalid").map(|e| e.class.as_str()).collect();
            let switches = classes.windows(2).filter(|w| w[0] != w[1]).count();
            proptest::prop_assert!(switches <= 1);
            if let (Some(f), Some(l)) = (classes.first(), classes.last()) {
                proptest::prop_assert!(!(*f == "certified-positive" && *l == "inconclusive"));
            }
            proptest::prop_assert!(e.iter().all(|e| e.class != "violated"));
        }

        #[test]
        fn numeric_margin_contains_center(frac in 0.0f64..1.0, wobble in -1e-4f64..1e-4) {
            let p = RegimeParameters::default_regime();
            let u = p.ubar_window_start() + frac * (p.ubar_lambda() - p.ubar_window_start());
            let r = 0.25 * p.amplitude() * u * (1.0 + wobble);
            let k = 1.0 / p.f0;
            let m = margin(&p, Interval::new(r * (1.0 - k).sqrt(), r * (1.0 + k).sqrt()), u).unwrap();
            proptest::prop_assert!(m.numeric.contains(m.center));
        }
    }
}
