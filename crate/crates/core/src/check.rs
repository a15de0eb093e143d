use serde::{Deserialize, Serialize};

/// One measured quantity compared against its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
    /// True for `measured ≥ threshold` checks.
    #[serde(default)]
    pub lower: bool,
}

impl Check {
    /// Fraction of the allowance used: ≤ 1 exactly when the check passes.
    pub fn usage(&self) -> f64 {
        if self.lower {
            self.threshold / self.measured
        } else {
            self.measured / self.threshold
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl CheckReport {
    pub fn new() -> Self {
        Self {
            checks: Vec::new(),
            passed: true,
        }
    }

    /// Passes iff `measured ≤ threshold` (NaN fails).
    pub fn at_most(&mut self, name: &str, measured: f64, threshold: f64, detail: impl Into<String>) {
        self.push(name, measured, threshold, measured <= threshold, false, detail.into());
    }

    /// Passes iff `measured ≥ threshold` (NaN fails).
    pub fn at_least(&mut self, name: &str, measured: f64, threshold: f64, detail: impl Into<String>) {
        self.push(name, measured, threshold, measured >= threshold, true, detail.into());
    }

    fn push(&mut self, name: &str, measured: f64, threshold: f64, passed: bool, lower: bool, detail: String) {
        self.passed &= passed;
        self.checks.push(Check {
            name: name.into(),
            measured,
            threshold,
            passed,
            detail,
            lower,
        });
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}
