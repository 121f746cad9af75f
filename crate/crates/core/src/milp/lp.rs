use super::model::{MilpModel, MilpSolution, ModelError, SolveStats, SolveStatus, ToleranceConfig};
use super::simplex::{LpOutcome, SimplexEngine};

/// Solve the continuous relaxation of `model` (binaries are treated as
/// `[0, 1]` continuous) with the two-phase bounded simplex.
pub fn solve_lp(model: &MilpModel, tol: &ToleranceConfig) -> Result<MilpSolution, ModelError> {
    model.validate()?;
    let mut engine = SimplexEngine::new(model, tol);
    let outcome = engine.primal();
    Ok(finish(&mut engine, outcome))
}

pub(crate) fn finish(engine: &mut SimplexEngine, outcome: LpOutcome) -> MilpSolution {
    let mut outcome = outcome;
    for attempt in 0..2 {
        let stats = SolveStats {
            nodes: 0,
            best_bound: f64::NAN,
            rel_gap: 0.0,
            lp_iterations: engine.iterations,
        };
        match outcome {
            LpOutcome::Infeasible => return MilpSolution::without_point(SolveStatus::Infeasible, stats),
            LpOutcome::Unbounded => return MilpSolution::without_point(SolveStatus::Unbounded, stats),
            LpOutcome::Failure => {}
            LpOutcome::Optimal => {
                if certified(engine) {
                    let objective = engine.objective();
                    return MilpSolution {
                        status: SolveStatus::Optimal,
                        objective,
                        values: engine.values(),
                        stats: SolveStats { best_bound: objective, ..stats },
                    };
                }
            }
        }
        if attempt == 0 {
            if !engine.refactor() {
                break;
            }
            outcome = engine.reoptimize();
        }
    }
    MilpSolution::without_point(
        SolveStatus::NumericalFailure,
        SolveStats { lp_iterations: engine.iterations, ..Default::default() },
    )
}

/// Primal residual, bound feasibility, dual feasibility of the reduced costs
/// and the gap between the primal and dual objectives of the final basis.
pub(crate) fn certified(engine: &SimplexEngine) -> bool {
    let primal = engine.objective();
    let dual = engine.dual_objective();
    let gap_ok = (primal - dual).abs() <= 1e-6 * (1.0 + primal.abs());
    let residual_ok = engine.row_residual() <= 1e-9;
    let bounds_ok = engine.bound_violation() <= 2.0;
    let dual_ok = engine.dual_infeasibility() <= 1e-6;
    gap_ok && residual_ok && bounds_ok && dual_ok
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{ConstraintSense, LinExpr, ObjectiveSense};

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn single_lower_bound() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        m.add_constraint("c", LinExpr::term(x, 1.0), ConstraintSense::Ge, 3.0);
        m.set_objective(LinExpr::term(x, 1.0));
        let s = solve_lp(&m, &tol()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.values[0] - 3.0).abs() < 1e-9);
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_constraint_vertex() {
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(y, 1.0);
        m.add_constraint("sum", e, ConstraintSense::Le, 4.0);
        m.add_constraint("xcap", LinExpr::term(x, 1.0), ConstraintSense::Le, 2.0);
        let mut obj = LinExpr::term(x, 3.0);
        obj.add_term(y, 2.0);
        m.set_objective(obj);
        let s = solve_lp(&m, &tol()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.values[0] - 2.0).abs() < 1e-9);
        assert!((s.values[1] - 2.0).abs() < 1e-9);
        assert!((s.objective - 10.0).abs() < 1e-9);
    }

    #[test]
    fn empty_feasible_set() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY);
        m.add_constraint("lo", LinExpr::term(x, 1.0), ConstraintSense::Ge, 1.0);
        m.add_constraint("hi", LinExpr::term(x, 1.0), ConstraintSense::Le, 0.0);
        m.set_objective(LinExpr::term(x, 1.0));
        assert_eq!(solve_lp(&m, &tol()).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(y, -1.0);
        m.add_constraint("c", e, ConstraintSense::Le, 1.0);
        m.set_objective(LinExpr::term(x, 1.0));
        assert_eq!(solve_lp(&m, &tol()).unwrap().status, SolveStatus::Unbounded);
    }

    #[test]
    fn free_variable_and_equalities() {
        // min z  s.t. z = x - 5, x + y = 3, x, y >= 0  ->  x = 0, z = -5
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let z = m.add_continuous("z", f64::NEG_INFINITY, f64::INFINITY);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        let mut e = LinExpr::term(z, 1.0);
        e.add_term(x, -1.0);
        m.add_constraint("link", e, ConstraintSense::Eq, -5.0);
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(y, 1.0);
        m.add_constraint("sum", e, ConstraintSense::Eq, 3.0);
        m.set_objective(LinExpr::term(z, 1.0));
        let s = solve_lp(&m, &tol()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 5.0).abs() < 1e-9);
    }

    #[test]
    fn tiny_objective_coefficients_still_optimize() {
        // every reduced cost is below the absolute optimality tolerance
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let x = m.add_continuous("x", 0.0, f64::INFINITY);
        let y = m.add_continuous("y", 0.0, f64::INFINITY);
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(y, 1.0);
        m.add_constraint("cap", e, ConstraintSense::Le, 1e4);
        let mut obj = LinExpr::term(x, 2e-9);
        obj.add_term(y, 1e-9);
        m.set_objective(obj);
        let s = solve_lp(&m, &tol()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.values[0] - 1e4).abs() < 1e-6, "{:?}", s.values);
    }

    #[test]
    fn badly_scaled_free_column() {
        // z = -4000 s carries a tiny weight but moves by millions
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let s = m.add_continuous("s", 0.0, 200.0);
        let z = m.add_continuous("z", f64::NEG_INFINITY, f64::INFINITY);
        let d = m.add_continuous("d", 0.0, 10.0);
        let mut e = LinExpr::term(z, 1.0);
        e.add_term(s, 4000.0);
        m.add_constraint("link", e, ConstraintSense::Eq, 0.0);
        m.add_constraint("slack", LinExpr::term(d, 1.0), ConstraintSense::Ge, 1.0);
        let mut obj = LinExpr::term(z, 1.7e-6);
        obj.add_term(d, 20.0);
        m.set_objective(obj);
        let sol = solve_lp(&m, &tol()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.value(s) - 200.0).abs() < 1e-6, "{:?}", sol.values);
        assert!((sol.objective - (20.0 - 1.36)).abs() < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's classic cycling instance; optimum -0.05 at x = (1/25, 0, 1, 0).
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let x: Vec<_> = (0..4)
            .map(|i| m.add_continuous(format!("x{i}"), 0.0, f64::INFINITY))
            .collect();
        let rows = [
            ([0.25, -60.0, -0.04, 9.0], 0.0),
            ([0.5, -90.0, -0.02, 3.0], 0.0),
            ([0.0, 0.0, 1.0, 0.0], 1.0),
        ];
        for (k, (coefs, rhs)) in rows.iter().enumerate() {
            let mut e = LinExpr::new();
            for (v, c) in x.iter().zip(coefs) {
                e.add_term(*v, *c);
            }
            m.add_constraint(format!("r{k}"), e, ConstraintSense::Le, *rhs);
        }
        let mut obj = LinExpr::new();
        for (v, c) in x.iter().zip([-0.75, 150.0, -0.02, 6.0]) {
            obj.add_term(*v, c);
        }
        m.set_objective(obj);
        let s = solve_lp(&m, &tol()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9, "{}", s.objective);
    }
}
