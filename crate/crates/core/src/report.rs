//! Pass/fail reports with worst-case margins and witnesses.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub description: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of checking `lhs <= rhs` over many instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `rhs − lhs` seen.
    pub worst_margin: f64,
    /// Instance attaining the worst margin.
    pub worst: Option<Witness>,
    pub passed: bool,
}

impl InequalityReport {
    pub(crate) fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            checked: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            worst: None,
            passed: true,
        }
    }

    #[inline]
    pub(crate) fn record(
        &mut self,
        lhs: f64,
        rhs: f64,
        tol: f64,
        describe: impl FnOnce() -> String,
    ) {
        self.checked += 1;
        let margin = rhs - lhs;
        let allowance = if tol == 0.0 {
            0.0
        } else {
            tol * rhs.abs().max(1.0)
        };
        let violated = !(margin >= -allowance);
        if violated {
            self.violations += 1;
            self.passed = false;
        }
        if margin < self.worst_margin || (violated && self.worst.is_none()) || margin.is_nan() {
            self.worst_margin = margin;
            self.worst = Some(Witness {
                description: describe(),
                lhs,
                rhs,
            });
        }
    }

    /// Adds the instances of `other` (same inequality) to this report.
    pub(crate) fn absorb(&mut self, other: InequalityReport) {
        self.checked += other.checked;
        self.violations += other.violations;
        self.passed &= other.passed;
        if other.worst_margin < self.worst_margin || (self.worst.is_none() && other.worst.is_some())
        {
            self.worst_margin = other.worst_margin;
            self.worst = other.worst;
        }
    }

    /// Records an identity that must hold exactly.
    pub(crate) fn record_exact(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, 0.0, 0.0, describe);
    }
}

/// A group of inequality reports for one statement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub items: Vec<InequalityReport>,
}

impl SuiteReport {
    pub fn new(name: impl Into<String>, items: Vec<InequalityReport>) -> Self {
        Self {
            name: name.into(),
            passed: items.iter().all(|r| r.passed),
            items,
        }
    }

    pub fn item(&self, name: &str) -> Option<&InequalityReport> {
        self.items.iter().find(|r| r.name == name)
    }

    pub fn violations(&self) -> usize {
        self.items.iter().map(|r| r.violations).sum()
    }
}
