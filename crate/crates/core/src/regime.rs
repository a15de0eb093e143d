//! Scalar parameters of the construction and the inequalities tying them together.
//!
//! Everything is parameterised by powers of the large amplitude `a`:
//! `b = a^κ`, `δ = a^{-y}`. Checks are carried out on exponents (log-a space)
//! so that regimes whose numeric values overflow `f64` can still be audited.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when checking the Penrose coupling `κμ + 1/2 = (1/2 + t) y`.
pub const COUPLING_TOL: f64 = 8.0 * f64::EPSILON;

/// Raw, user-facing regime parameters (as read from a config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegimeInput {
    pub a: f64,
    pub kappa: f64,
    /// Optional when the Penrose coupling is enabled: it is then derived from κ, y and t.
    pub mu: Option<f64>,
    pub y: f64,
    pub gamma: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub t: f64,
    pub c1: f64,
    pub c2_zeta: f64,
    pub c2_unknown_bound: f64,
    pub o1: f64,
    pub d0: f64,
    pub f0: f64,
    pub c_eps: f64,
    pub penrose_coupling: bool,
}

impl Default for RegimeInput {
    /// a = 10⁴, κ = 0.6, y = 10, t = 0.3 (so μ = 12.5 under the coupling).
    fn default() -> Self {
        Self {
            a: 1.0e4,
            kappa: 0.6,
            mu: None,
            y: 10.0,
            gamma: 0.1,
            lambda_lo: 0.8,
            lambda_hi: 0.82,
            t: 0.3,
            c1: 20.0,
            c2_zeta: 20.0,
            c2_unknown_bound: 1.0,
            o1: 0.05,
            d0: 20.0,
            f0: 100.0,
            c_eps: 1.0,
            penrose_coupling: true,
        }
    }
}

impl RegimeInput {
    fn raw_fields(&self) -> [(&'static str, f64); 15] {
        [
            ("a", self.a),
            ("kappa", self.kappa),
            ("mu", self.mu.unwrap_or(1.5)),
            ("y", self.y),
            ("gamma", self.gamma),
            ("lambda_lo", self.lambda_lo),
            ("lambda_hi", self.lambda_hi),
            ("t", self.t),
            ("c1", self.c1),
            ("c2_zeta", self.c2_zeta),
            ("c2_unknown_bound", self.c2_unknown_bound),
            ("o1", self.o1),
            ("d0", self.d0),
            ("f0", self.f0),
            ("c_eps", self.c_eps),
        ]
    }

    /// μ as it will be stored: derived from the coupling when enabled.
    pub fn resolved_mu(&self) -> Result<f64> {
        if self.penrose_coupling {
            let derived = ((0.5 + self.t) * self.y - 0.5) / self.kappa;
            if let Some(mu) = self.mu {
                if (mu - derived).abs() > 1e-12 * derived.abs().max(1.0) {
                    return Err(Error::MalformedParameters(format!(
                        "mu = {mu} contradicts the Penrose coupling, which requires mu = {derived}"
                    )));
                }
            }
            Ok(derived)
        } else {
            self.mu.ok_or_else(|| {
                Error::MalformedParameters("mu is required when penrose_coupling = false".into())
            })
        }
    }
}

/// One checked inequality. `slack > 0` iff it holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintEntry {
    pub name: String,
    pub statement: String,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<ConstraintEntry>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn entry(&self, name: &str) -> Option<&ConstraintEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintEntry> {
        self.entries.iter().filter(|e| !e.holds)
    }
}

/// Checks every inequality between the regime parameters.
pub fn validate(input: &RegimeInput) -> Result<ValidationReport> {
    for (name, v) in input.raw_fields() {
        if !v.is_finite() {
            return Err(Error::MalformedParameters(format!("{name} is not finite")));
        }
    }
    if input.a <= 0.0 {
        return Err(Error::MalformedParameters("a must be positive".into()));
    }
    if input.kappa == 0.0 {
        return Err(Error::MalformedParameters("kappa must be nonzero".into()));
    }
    let mu = input.resolved_mu()?;
    let (k, y) = (input.kappa, input.y);
    let ln_a = input.a.ln();
    let kmu = k * mu;

    let mut entries = Vec::new();
    let mut push = |name: &str, statement: &str, slack: f64, strict: bool| {
        let holds = if strict { slack > 0.0 } else { slack >= 0.0 };
        entries.push(ConstraintEntry {
            name: name.into(),
            statement: statement.into(),
            slack,
            holds,
        });
    };

    push("a_large", "a > 1", input.a - 1.0, true);
    push("kappa_lower", "1/2 < kappa (equivalently a^{1/2} < b)", k - 0.5, true);
    push("kappa_upper", "kappa < 1", 1.0 - k, true);
    push("mu_lower", "mu > 1", mu - 1.0, true);
    push(
        "scale_critical_exponent",
        "kappa*mu - y + 1/2 < 0 (equivalently delta a^{1/2} b^mu < 1)",
        y - kmu - 0.5,
        true,
    );
    push(
        "slab_existence",
        "delta a^{1/2} b < 1 (exponent y - 1/2 - kappa > 0)",
        y - 0.5 - k,
        true,
    );
    push(
        "window_start",
        "gamma a^{1/2}/b < lambda",
        input.lambda_lo - input.gamma * ((0.5 - k) * ln_a).exp(),
        true,
    );
    push("lambda_order", "lambda < lambda'", input.lambda_hi - input.lambda_lo, true);
    push(
        "lambda_hi_budget",
        "lambda' < 1 - o1",
        1.0 - input.o1 - input.lambda_hi,
        true,
    );
    push("gamma_range", "0 < gamma < 1", input.gamma.min(1.0 - input.gamma), true);
    push("lambda_range", "0 < lambda", input.lambda_lo, true);
    push("t_range", "0 < t < 1/2", input.t.min(0.5 - input.t), true);
    push("c1_floor", "c1 >= 20", input.c1 - 20.0, false);
    push("c2_zeta_floor", "c2 >= 20", input.c2_zeta - 20.0, false);
    push("o1_range", "0 < o1 < 1", input.o1.min(1.0 - input.o1), true);
    push("d0_positive", "d0 > 0", input.d0, true);
    push("f0_large", "f0 > 1", input.f0 - 1.0, true);
    push("gluing_constant", "C >= 0", input.c_eps, false);
    push("c2_unknown_positive", "c2 bound > 0", input.c2_unknown_bound, true);
    if input.penrose_coupling {
        let lhs = kmu + 0.5;
        let rhs = (0.5 + input.t) * y;
        let tol = COUPLING_TOL * lhs.abs().max(rhs.abs()).max(1.0);
        push(
            "penrose_coupling",
            "kappa*mu + 1/2 = (1/2 + t) y",
            tol - (lhs - rhs).abs(),
            false,
        );
    }

    let passed = entries.iter().all(|e| e.holds);
    Ok(ValidationReport { entries, passed })
}

/// A validated regime. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeParameters {
    pub a: f64,
    pub kappa: f64,
    pub mu: f64,
    pub y: f64,
    pub gamma: f64,
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub t: f64,
    pub c1: f64,
    pub c2_zeta: f64,
    pub c2_unknown_bound: f64,
    pub o1: f64,
    pub d0: f64,
    pub f0: f64,
    pub c_eps: f64,
    pub penrose_coupling: bool,
    pub b: f64,
    pub delta: f64,
    pub m0: f64,
}

impl RegimeParameters {
    /// Validates and stores the regime, refusing with the first failing constraint.
    pub fn new(input: &RegimeInput) -> Result<Self> {
        let report = validate(input)?;
        if let Some(bad) = report.failures().next() {
            return Err(Error::constraint(
                bad.name.clone(),
                format!("{} (slack {:e})", bad.statement, bad.slack),
            ));
        }
        let mu = input.resolved_mu()?;
        let ln_a = input.a.ln();
        let b = (input.kappa * ln_a).exp();
        let delta = (-input.y * ln_a).exp();
        let log_m0 = (input.kappa * mu + 0.5 - input.y) * ln_a
            + (input.lambda_lo * (1.0 + input.o1) / 4.0).ln();
        let m0 = log_m0.exp();
        for (name, v) in [("b", b), ("delta", delta), ("m0", m0)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "{name} = {v:e} is not representable in f64; this regime can only be audited in exponent form"
                )));
            }
        }
        Ok(Self {
            a: input.a,
            kappa: input.kappa,
            mu,
            y: input.y,
            gamma: input.gamma,
            lambda_lo: input.lambda_lo,
            lambda_hi: input.lambda_hi,
            t: input.t,
            c1: input.c1,
            c2_zeta: input.c2_zeta,
            c2_unknown_bound: input.c2_unknown_bound,
            o1: input.o1,
            d0: input.d0,
            f0: input.f0,
            c_eps: input.c_eps,
            penrose_coupling: input.penrose_coupling,
            b,
            delta,
            m0,
        })
    }

    pub fn default_regime() -> Self {
        Self::new(&RegimeInput::default()).expect("default regime satisfies all constraints")
    }

    pub fn ln_a(&self) -> f64 {
        self.a.ln()
    }

    /// `a^{1/2} b^μ`, the slope of the cumulative shear in the linear window.
    pub fn amplitude(&self) -> f64 {
        ((0.5 + self.kappa * self.mu) * self.ln_a()).exp()
    }

    /// `b^{1/4}`, the bound on the absorbed perturbation coefficients.
    pub fn b_quarter(&self) -> f64 {
        self.b.powf(0.25)
    }

    /// Start of the linear window, `γ a^{1/2} δ / b`.
    pub fn ubar_window_start(&self) -> f64 {
        self.gamma * self.a.sqrt() * self.delta / self.b
    }

    pub fn ubar_lambda(&self) -> f64 {
        self.lambda_lo * self.delta
    }

    pub fn ubar_lambda_hi(&self) -> f64 {
        self.lambda_hi * self.delta
    }

    pub fn ubar_end(&self) -> f64 {
        2.0 * self.delta
    }

    /// Gluing error `ε = C a^{1/2} δ^{1/2} / u^{1/2}`.
    pub fn epsilon_at(&self, u: f64) -> f64 {
        self.c_eps * (self.a * self.delta / u).sqrt()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon_at(1.0)
    }

    pub fn input(&self) -> RegimeInput {
        RegimeInput {
            a: self.a,
            kappa: self.kappa,
            mu: if self.penrose_coupling { None } else { Some(self.mu) },
            y: self.y,
            gamma: self.gamma,
            lambda_lo: self.lambda_lo,
            lambda_hi: self.lambda_hi,
            t: self.t,
            c1: self.c1,
            c2_zeta: self.c2_zeta,
            c2_unknown_bound: self.c2_unknown_bound,
            o1: self.o1,
            d0: self.d0,
            f0: self.f0,
            c_eps: self.c_eps,
            penrose_coupling: self.penrose_coupling,
        }
    }
}

/// Derived scalars emitted in every report header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedScalars {
    pub b: f64,
    pub delta: f64,
    pub m0: f64,
    pub amplitude: f64,
    pub ubar_window_start: f64,
    pub ubar_lambda: f64,
    pub ubar_lambda_hi: f64,
    pub ubar_end: f64,
    /// `u = b δ a^{1/2}`, where the sphere at `ubar = δ` is trapped.
    pub trapped_u: f64,
    pub epsilon: f64,
    pub log10_b: f64,
    pub log10_delta: f64,
    pub log10_m0: f64,
    pub log10_epsilon: f64,
}

pub fn derive(params: &RegimeParameters) -> DerivedScalars {
    let l10 = params.a.log10();
    DerivedScalars {
        b: params.b,
        delta: params.delta,
        m0: params.m0,
        amplitude: params.amplitude(),
        ubar_window_start: params.ubar_window_start(),
        ubar_lambda: params.ubar_lambda(),
        ubar_lambda_hi: params.ubar_lambda_hi(),
        ubar_end: params.ubar_end(),
        trapped_u: params.b * params.delta * params.a.sqrt(),
        epsilon: params.epsilon(),
        log10_b: params.kappa * l10,
        log10_delta: -params.y * l10,
        log10_m0: params.m0.log10(),
        log10_epsilon: params.c_eps.log10() + 0.5 * (1.0 - params.y) * l10,
    }
}

/// Validates then derives; refuses with the failing constraint named.
pub fn derive_checked(input: &RegimeInput) -> Result<DerivedScalars> {
    Ok(derive(&RegimeParameters::new(input)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with(f: impl FnOnce(&mut RegimeInput)) -> RegimeInput {
        let mut i = RegimeInput::default();
        f(&mut i);
        i
    }

    #[test]
    fn default_regime_passes_with_expected_exponents() {
        let input = RegimeInput::default();
        let report = validate(&input).unwrap();
        assert!(report.passed, "{report:?}");
        let mu = input.resolved_mu().unwrap();
        assert!((mu - 12.5).abs() < 1e-12);
        // κμ + 1/2 = 8 = 0.8 · 10 and κμ − y + 1/2 = −2
        assert!((0.6 * mu + 0.5 - 8.0).abs() < 1e-12);
        let e = report.entry("scale_critical_exponent").unwrap();
        assert!((e.slack - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_below_half_fails() {
        let input = with(|i| {
            i.kappa = 0.4;
            i.penrose_coupling = false;
            i.mu = Some(2.0);
        });
        let report = validate(&input).unwrap();
        assert!(!report.passed);
        assert!(!report.entry("kappa_lower").unwrap().holds);
    }

    #[test]
    fn positive_scale_critical_exponent_fails() {
        let input = with(|i| {
            i.kappa = 0.9;
            i.mu = Some(2.0);
            i.y = 2.0;
            i.penrose_coupling = false;
        });
        let report = validate(&input).unwrap();
        let e = report.entry("scale_critical_exponent").unwrap();
        assert!(!e.holds);
        assert!((e.slack + 0.3).abs() < 1e-12);
    }

    #[test]
    fn shrinking_kappa_flips_only_the_kappa_bound() {
        let base = with(|i| {
            i.penrose_coupling = false;
            i.mu = Some(12.5);
        });
        let low = with(|i| {
            i.penrose_coupling = false;
            i.mu = Some(12.5);
            i.kappa = 0.45;
        });
        let r0 = validate(&base).unwrap();
        let r1 = validate(&low).unwrap();
        let flipped: Vec<_> = r0
            .entries
            .iter()
            .zip(&r1.entries)
            .filter(|(x, y)| x.holds != y.holds)
            .map(|(x, _)| x.name.clone())
            .collect();
        assert_eq!(flipped, vec!["kappa_lower".to_string()]);
    }

    #[test]
    fn non_finite_input_is_malformed() {
        let input = with(|i| i.a = f64::NAN);
        assert!(matches!(validate(&input), Err(Error::MalformedParameters(_))));
    }

    #[test]
    fn derive_refuses_failed_validation_by_name() {
        let input = with(|i| i.lambda_hi = 0.97);
        match derive_checked(&input) {
            Err(Error::Constraint { constraint, .. }) => assert_eq!(constraint, "lambda_hi_budget"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn derived_scalars_match_power_laws() {
        let p = RegimeParameters::default_regime();
        let d = derive(&p);
        assert!((d.b / 10f64.powf(2.4) - 1.0).abs() < 1e-12);
        assert!((d.delta / 1e-40 - 1.0).abs() < 1e-12);
        // ε = C a^{1/2} δ^{1/2} = 10^{2-20}
        assert!((d.epsilon / 1e-18 - 1.0).abs() < 1e-12);
        assert!(d.ubar_window_start < d.ubar_lambda);
        assert!(d.ubar_lambda < d.ubar_lambda_hi);
        assert!(d.ubar_lambda_hi < d.ubar_end);
        assert!(d.trapped_u > 0.0 && d.m0 > 0.0);
    }

    #[test]
    fn m0_without_o1_is_a_quarter_of_the_window_integral() {
        let p = RegimeParameters::new(&with(|i| i.o1 = 1e-300)).unwrap();
        let expect = p.amplitude() * p.lambda_lo * p.delta / 4.0;
        assert!((p.m0 / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derive_is_bitwise_deterministic() {
        let a = derive(&RegimeParameters::default_regime());
        let b = derive(&RegimeParameters::default_regime());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn coupling_mismatch_is_rejected() {
        let input = with(|i| i.mu = Some(11.0));
        assert!(matches!(validate(&input), Err(Error::MalformedParameters(_))));
    }

    proptest::proptest! {
        #[test]
        fn coupled_mu_satisfies_the_coupling(kappa in 0.51f64..0.99, y in 4.0f64..40.0, t in 0.01f64..0.49) {
            let input = with(|i| { i.kappa = kappa; i.y = y; i.t = t; });
            let mu = input.resolved_mu().unwrap();
            let lhs = kappa * mu + 0.5;
            let rhs = (0.5 + t) * y;
            proptest::prop_assert!((lhs - rhs).abs() <= COUPLING_TOL * rhs.abs().max(1.0));
        }
    }
}
