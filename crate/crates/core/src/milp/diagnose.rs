//! Infeasibility diagnosis by elastic relaxation: every row gets slack
//! columns and the total slack is minimized. Rows that keep positive slack
//! at the optimum form a (not necessarily irreducible) conflicting set.

use super::bnb::solve_milp;
use super::model::{ConstraintSense, LinExpr, MilpModel, ObjectiveSense, ToleranceConfig};

/// Names of the rows that must be relaxed to make `model` feasible, or
/// `None` when the elastic model itself could not be solved.
pub fn elastic_diagnosis(model: &MilpModel, tol: &ToleranceConfig) -> Option<Vec<String>> {
    let mut elastic = model.clone();
    elastic.sense = ObjectiveSense::Minimize;
    let mut total = LinExpr::new();
    let mut slacks = Vec::with_capacity(model.constraints.len());
    for (i, c) in model.constraints.iter().enumerate() {
        let mut cols = Vec::new();
        if matches!(c.sense, ConstraintSense::Ge | ConstraintSense::Eq) {
            let v = elastic.add_continuous(format!("__up{i}"), 0.0, f64::INFINITY);
            elastic.constraints[i].terms.push((v, 1.0));
            cols.push(v);
        }
        if matches!(c.sense, ConstraintSense::Le | ConstraintSense::Eq) {
            let v = elastic.add_continuous(format!("__dn{i}"), 0.0, f64::INFINITY);
            elastic.constraints[i].terms.push((v, -1.0));
            cols.push(v);
        }
        for &v in &cols {
            total.add_term(v, 1.0);
        }
        slacks.push(cols);
    }
    elastic.set_objective(total);
    let sol = solve_milp(&elastic, tol).ok()?;
    if !sol.status.has_solution() {
        return None;
    }
    let rows = model
        .constraints
        .iter()
        .zip(&slacks)
        .filter(|(c, cols)| cols.iter().any(|&v| sol.value(v) > 1e-7 * (1.0 + c.rhs.abs())))
        .map(|(c, _)| c.name.clone())
        .collect();
    Some(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_the_conflicting_rows() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let x = m.add_continuous("x", 0.0, 10.0);
        let y = m.add_continuous("y", 0.0, 10.0);
        m.add_constraint("lo", LinExpr::term(x, 1.0), ConstraintSense::Ge, 5.0);
        m.add_constraint("hi", LinExpr::term(x, 1.0), ConstraintSense::Le, 4.0);
        m.add_constraint("free", LinExpr::term(y, 1.0), ConstraintSense::Le, 4.0);
        let rows = elastic_diagnosis(&m, &ToleranceConfig::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0] == "lo" || rows[0] == "hi");
    }
}
