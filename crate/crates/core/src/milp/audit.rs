//! Feasibility certificate for a candidate point, evaluated straight from
//! the model rows. Shares nothing with the simplex pivot loop.

use serde::Serialize;

use super::model::{ConstraintSense, MilpModel, VarKind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub name: String,
    pub amount: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuditReport {
    pub max_violation: f64,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check bounds, integrality and every row of `model` at `values`.
///
/// A row `a·x (sense) b` is violated when it misses by more than
/// `tol · (1 + |b|)`.
pub fn audit_point(model: &MilpModel, values: &[f64], tol: f64) -> AuditReport {
    let mut report = AuditReport::default();
    let mut record = |name: &str, amount: f64, scale: f64| {
        let scaled = amount / (1.0 + scale.abs());
        if scaled > report.max_violation {
            report.max_violation = scaled;
        }
        if scaled > tol {
            report.violations.push(Violation { name: name.to_string(), amount });
        }
    };

    if values.len() != model.variables.len() {
        record("dimension", f64::INFINITY, 0.0);
        return report;
    }

    for (v, &x) in model.variables.iter().zip(values) {
        if !x.is_finite() {
            record(&v.name, f64::INFINITY, 0.0);
            continue;
        }
        if x < v.lower {
            record(&v.name, v.lower - x, v.lower);
        }
        if x > v.upper {
            record(&v.name, x - v.upper, v.upper);
        }
        if v.kind == VarKind::Binary {
            record(&v.name, (x - x.round()).abs(), 0.0);
        }
    }

    for c in &model.constraints {
        let mut activity = 0.0;
        for &(var, coef) in &c.terms {
            activity += coef * values[var.0];
        }
        let miss = match c.sense {
            ConstraintSense::Le => activity - c.rhs,
            ConstraintSense::Ge => c.rhs - activity,
            ConstraintSense::Eq => (activity - c.rhs).abs(),
        };
        if miss > 0.0 {
            record(&c.name, miss, c.rhs);
        }
    }
    report
}
