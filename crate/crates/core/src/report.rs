//! Check outcomes shared by the verification routines.

use serde::{Deserialize, Serialize};

use crate::algebra::Tolerance;

/// Worst residual of one identity over a sample set. The first sample of
/// every set is built from the unit, and its residual is kept separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub y: Option<u32>,
    pub passed: bool,
    pub worst_residual: f64,
    pub residual_at_unit: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<serde_json::Value>,
}

impl CheckOutcome {
    /// Runs `f` on each sample. `f` returns the residual and a description
    /// of the sample; the description of the worst sample is kept as the
    /// witness when the check fails. NaN residuals count as failures.
    pub fn measure<T, F>(
        check: &str,
        x: Option<u32>,
        y: Option<u32>,
        tol: Tolerance,
        samples: &[T],
        mut f: F,
    ) -> Self
    where
        F: FnMut(&T) -> (f64, serde_json::Value),
    {
        let mut worst = 0.0_f64;
        let mut at_unit = 0.0;
        let mut witness = None;
        for (idx, s) in samples.iter().enumerate() {
            let (r, desc) = f(s);
            let r = if r.is_nan() { f64::INFINITY } else { r };
            if idx == 0 {
                at_unit = r;
            }
            if idx == 0 || r > worst {
                worst = r;
                witness = Some(desc);
            }
        }
        let passed = tol.holds(worst);
        Self {
            check: check.to_string(),
            x,
            y,
            passed,
            worst_residual: worst,
            residual_at_unit: at_unit,
            witness: if passed { None } else { witness },
        }
    }

    /// Single deterministic residual with no witness.
    pub fn scalar(check: &str, x: Option<u32>, y: Option<u32>, tol: Tolerance, residual: f64) -> Self {
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        Self {
            check: check.to_string(),
            x,
            y,
            passed: tol.holds(residual),
            worst_residual: residual,
            residual_at_unit: residual,
            witness: None,
        }
    }
}

/// A list of outcomes, passed iff each one passed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    pub checks: Vec<CheckOutcome>,
}

impl InteractionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// First outcome with the given name and indices.
    pub fn find(&self, check: &str, x: Option<u32>, y: Option<u32>) -> Option<&CheckOutcome> {
        self.checks
            .iter()
            .find(|c| c.check == check && c.x == x && c.y == y)
    }

    pub fn push(&mut self, c: CheckOutcome) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: InteractionReport) {
        self.checks.extend(other.checks);
    }

    pub fn worst_residual(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.worst_residual)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_keeps_unit_and_worst() {
        let tol = Tolerance::new(0.5).unwrap();
        let samples = [0.1, 0.7, 0.3];
        let out = CheckOutcome::measure("demo", Some(1), None, tol, &samples, |&r| {
            (r, serde_json::json!(r))
        });
        assert!(!out.passed);
        assert_eq!(out.residual_at_unit, 0.1);
        assert_eq!(out.worst_residual, 0.7);
        assert_eq!(out.witness, Some(serde_json::json!(0.7)));
        let nan = CheckOutcome::scalar("nan", None, None, tol, f64::NAN);
        assert!(!nan.passed);
    }

    #[test]
    fn report_lookup() {
        let tol = Tolerance::default();
        let mut r = InteractionReport::default();
        r.push(CheckOutcome::scalar("a", Some(1), None, tol, 0.0));
        r.push(CheckOutcome::scalar("a", Some(2), None, tol, 1.0));
        assert!(!r.passed());
        assert_eq!(r.failures().count(), 1);
        assert_eq!(r.find("a", Some(2), None).unwrap().worst_residual, 1.0);
        assert!(r.find("a", Some(3), None).is_none());
    }
}
