use serde::{Deserialize, Serialize};

/// One numeric check together with the tolerance it was judged against.
///
/// `slack` is signed with larger meaning better; the check passes when
/// `slack >= -tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub slack: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, value: f64, reference: f64, slack: f64, tol: f64) -> Self {
        Self { name: name.into(), value, reference, slack, tol, passed: slack >= -tol }
    }

    /// `value >= bound`
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Self::new(name, value, bound, value - bound, tol)
    }

    /// `value <= bound`
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64, tol: f64) -> Self {
        Self::new(name, value, bound, bound - value, tol)
    }

    /// `|value - target| <= tol`
    pub fn close(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Self::new(name, value, target, -(value - target).abs(), tol)
    }

    /// A yes/no finding recorded in the same shape.
    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        let v = if ok { 1.0 } else { 0.0 };
        Self::new(name, v, 1.0, v - 1.0, 0.0)
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}
