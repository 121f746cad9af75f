//! Random small MILPs and an enumeration oracle shared by the test targets.

use gss_core::milp::{solve_lp, ConstraintSense, LinExpr, MilpModel, ObjectiveSense, SolveStatus, ToleranceConfig, VarKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_model(seed: u64) -> MilpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_bin = rng.gen_range(1..=12);
    let n_cont = rng.gen_range(0..=10);
    let sense = if rng.gen_bool(0.5) { ObjectiveSense::Minimize } else { ObjectiveSense::Maximize };
    let mut m = MilpModel::new(sense);
    let mut vars = Vec::new();
    for k in 0..n_bin {
        vars.push(m.add_binary(format!("b{k}")));
    }
    for k in 0..n_cont {
        let hi = rng.gen_range(1.0..10.0);
        vars.push(m.add_continuous(format!("c{k}"), 0.0, hi));
    }
    // reference point that keeps most instances feasible
    let point: Vec<f64> = m
        .variables
        .iter()
        .map(|v| match v.kind {
            VarKind::Binary => f64::from(rng.gen_range(0..=1)),
            VarKind::Continuous => rng.gen_range(0.0..v.upper),
        })
        .collect();
    let n_rows = rng.gen_range(1..=8);
    for r in 0..n_rows {
        let mut e = LinExpr::new();
        for &v in &vars {
            if rng.gen_bool(0.6) {
                e.add_term(v, rng.gen_range(-5.0..5.0));
            }
        }
        let act = e.eval(&point);
        let (sense, rhs) = match rng.gen_range(0..5) {
            0 => (ConstraintSense::Eq, act),
            1 | 2 => (ConstraintSense::Le, act + rng.gen_range(0.0..3.0)),
            _ => (ConstraintSense::Ge, act - rng.gen_range(0.0..3.0)),
        };
        // occasionally make the row impossible to satisfy exactly
        let rhs = if rng.gen_ratio(1, 25) { rhs + 0.37 } else { rhs };
        m.add_constraint(format!("r{r}"), e, sense, rhs);
    }
    let mut obj = LinExpr::new();
    for &v in &vars {
        obj.add_term(v, rng.gen_range(-10.0..10.0));
    }
    m.set_objective(obj);
    m
}

/// Best objective over all binary assignments, one LP per assignment.
pub fn enumerate(model: &MilpModel, tol: &ToleranceConfig) -> Option<f64> {
    let bins: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << bins.len()) {
        let mut fixed = model.clone();
        for (k, &j) in bins.iter().enumerate() {
            let v = f64::from((mask >> k) & 1);
            fixed.variables[j].lower = v;
            fixed.variables[j].upper = v;
        }
        let s = solve_lp(&fixed, tol).unwrap();
        if s.status != SolveStatus::Optimal {
            assert_eq!(s.status, SolveStatus::Infeasible, "bounded problems only");
            continue;
        }
        best = Some(match (best, model.sense) {
            (None, _) => s.objective,
            (Some(b), ObjectiveSense::Minimize) => b.min(s.objective),
            (Some(b), ObjectiveSense::Maximize) => b.max(s.objective),
        });
    }
    best
}
