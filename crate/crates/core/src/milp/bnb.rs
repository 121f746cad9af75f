//! Best-first branch-and-bound over binary variables.
//!
//! One simplex engine is shared by every node: a node only records the
//! binaries it fixes, and moving to it means resetting bounds and
//! re-optimizing with the dual simplex from whatever basis is current.
//! Branching picks the most fractional binary (lowest id on ties) and open
//! nodes are ordered by bound, then by creation order.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::lp::{certified, finish};
use super::model::{MilpModel, MilpSolution, ModelError, ObjectiveSense, SolveStats, SolveStatus, ToleranceConfig};
use super::simplex::{LpOutcome, SimplexEngine};

struct OpenNode {
    /// Parent LP bound in minimization sense.
    bound: f64,
    id: u64,
    fixes: Vec<(u32, bool)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // BinaryHeap is a max-heap: invert so the smallest (bound, id) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gap_allowance(incumbent: f64, rel_gap: f64) -> f64 {
    rel_gap * incumbent.abs().max(1.0)
}

/// Relative gap `(incumbent - bound) / max(|incumbent|, 1)` in minimization sense.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    ((incumbent - bound) / incumbent.abs().max(1.0)).max(0.0)
}

pub fn solve_milp(model: &MilpModel, tol: &ToleranceConfig) -> Result<MilpSolution, ModelError> {
    model.validate()?;
    let sign = match model.sense {
        ObjectiveSense::Minimize => 1.0,
        ObjectiveSense::Maximize => -1.0,
    };
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let root_bounds: Vec<(f64, f64)> = binaries
        .iter()
        .map(|&j| (model.variables[j].lower, model.variables[j].upper))
        .collect();
    // position of each binary in `binaries`, for node fix lookup
    let mut slot = vec![usize::MAX; model.num_vars()];
    for (k, &j) in binaries.iter().enumerate() {
        slot[j] = k;
    }

    let mut engine = SimplexEngine::new(model, tol);
    let mut heap = BinaryHeap::new();
    heap.push(OpenNode { bound: f64::NEG_INFINITY, id: 0, fixes: Vec::new() });
    let mut next_id = 1u64;
    let mut nodes = 0usize;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut first = true;
    let mut current: Vec<(f64, f64)> = root_bounds.clone();
    let mut limit_hit = false;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - gap_allowance(*inc, tol.rel_gap) {
                // best-first: every remaining node is at least as bad
                heap.push(node);
                break;
            }
        }
        if nodes >= tol.node_limit {
            heap.push(node);
            limit_hit = true;
            break;
        }
        nodes += 1;

        let mut wanted = root_bounds.clone();
        for &(k, up) in &node.fixes {
            let v = if up { 1.0 } else { 0.0 };
            wanted[k as usize] = (v, v);
        }
        for (k, &j) in binaries.iter().enumerate() {
            if wanted[k] != current[k] {
                engine.set_bounds(j, wanted[k].0, wanted[k].1);
                current[k] = wanted[k];
            }
        }

        let mut outcome = if first {
            first = false;
            engine.primal()
        } else {
            engine.reoptimize()
        };
        if outcome == LpOutcome::Optimal && !certified(&engine) {
            outcome = if engine.refactor() { engine.reoptimize() } else { LpOutcome::Failure };
        }
        match outcome {
            LpOutcome::Optimal => {}
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                let stats = SolveStats { nodes, lp_iterations: engine.iterations, ..Default::default() };
                if nodes == 1 {
                    return Ok(MilpSolution::without_point(SolveStatus::Unbounded, stats));
                }
                return Ok(MilpSolution::without_point(SolveStatus::NumericalFailure, stats));
            }
            LpOutcome::Failure => {
                // last resort: a cold solve of this node
                let mut cold = SimplexEngine::new(model, tol);
                for (k, &j) in binaries.iter().enumerate() {
                    cold.set_bounds(j, current[k].0, current[k].1);
                }
                let out = cold.primal();
                let sol = finish(&mut cold, out);
                match sol.status {
                    SolveStatus::Infeasible => continue,
                    SolveStatus::Optimal => {
                        engine = cold;
                    }
                    _ => {
                        let stats = SolveStats { nodes, lp_iterations: engine.iterations, ..Default::default() };
                        return Ok(MilpSolution::without_point(SolveStatus::NumericalFailure, stats));
                    }
                }
            }
        }

        let value = sign * engine.objective();
        if let Some((inc, _)) = &incumbent {
            if value >= inc - gap_allowance(*inc, tol.rel_gap) {
                continue;
            }
        }

        let x = engine.values();
        let mut branch: Option<usize> = None;
        let mut best_frac = tol.integrality_tol;
        for &j in &binaries {
            let v = x[j];
            let frac = (v - v.round()).abs();
            if frac > best_frac {
                best_frac = frac;
                branch = Some(j);
            }
        }

        match branch {
            None => {
                let better = incumbent.as_ref().is_none_or(|(inc, _)| value < *inc);
                if better {
                    incumbent = Some((value, x.to_vec()));
                }
            }
            Some(j) => {
                let k = slot[j] as u32;
                for up in [false, true] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((k, up));
                    heap.push(OpenNode { bound: value, id: next_id, fixes });
                    next_id += 1;
                }
            }
        }
    }

    let open_bound = heap.peek().map(|n| n.bound);
    let lp_iterations = engine.iterations;
    Ok(match incumbent {
        Some((inc, values)) => {
            let bound = open_bound.map_or(inc, |b| b.min(inc));
            let gap = relative_gap(inc, bound);
            let status = if limit_hit && gap > tol.rel_gap {
                SolveStatus::GapLimit
            } else {
                SolveStatus::Optimal
            };
            MilpSolution {
                status,
                objective: sign * inc,
                values,
                stats: SolveStats { nodes, best_bound: sign * bound, rel_gap: gap, lp_iterations },
            }
        }
        None => {
            let stats = SolveStats {
                nodes,
                best_bound: open_bound.map_or(f64::NAN, |b| sign * b),
                rel_gap: f64::INFINITY,
                lp_iterations,
            };
            let status = if limit_hit { SolveStatus::NodeLimit } else { SolveStatus::Infeasible };
            MilpSolution::without_point(status, stats)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{ConstraintSense, LinExpr};

    #[test]
    fn rounding_forced() {
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let mut e = LinExpr::term(a, 1.0);
        e.add_term(b, 1.0);
        m.add_constraint("cap", e.clone(), ConstraintSense::Le, 1.5);
        m.set_objective(e);
        let s = solve_milp(&m, &ToleranceConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fixed_binaries_need_one_node() {
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let x = m.add_continuous("x", 0.0, 10.0);
        m.add_constraint("fa", LinExpr::term(a, 1.0), ConstraintSense::Eq, 1.0);
        m.add_constraint("fb", LinExpr::term(b, 1.0), ConstraintSense::Eq, 0.0);
        let mut e = LinExpr::term(x, 1.0);
        e.add_term(a, -2.0);
        m.add_constraint("link", e, ConstraintSense::Ge, 0.5);
        let mut obj = LinExpr::term(x, 1.0);
        obj.add_term(b, 3.0);
        m.set_objective(obj);
        let s = solve_milp(&m, &ToleranceConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.stats.nodes, 1);
        assert!((s.objective - 2.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_problem() {
        // a + b = 1.5 has no binary solution
        let mut m = MilpModel::new(ObjectiveSense::Minimize);
        let a = m.add_binary("a");
        let b = m.add_binary("b");
        let mut e = LinExpr::term(a, 1.0);
        e.add_term(b, 1.0);
        m.add_constraint("half", e, ConstraintSense::Eq, 1.5);
        let s = solve_milp(&m, &ToleranceConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn node_limit_keeps_incumbent() {
        // knapsack whose relaxation is fractional at the root
        let mut m = MilpModel::new(ObjectiveSense::Maximize);
        let w = [5.0, 4.0, 3.0, 7.0, 6.0, 2.5];
        let p = [10.0, 7.0, 5.0, 13.0, 11.0, 4.0];
        let vars: Vec<_> = (0..w.len()).map(|i| m.add_binary(format!("b{i}"))).collect();
        let mut cap = LinExpr::new();
        let mut obj = LinExpr::new();
        for (k, v) in vars.iter().enumerate() {
            cap.add_term(*v, w[k]);
            obj.add_term(*v, p[k]);
        }
        m.add_constraint("cap", cap, ConstraintSense::Le, 13.3);
        m.set_objective(obj);
        let full = solve_milp(&m, &ToleranceConfig::default()).unwrap();
        assert_eq!(full.status, SolveStatus::Optimal);
        let tight = ToleranceConfig { node_limit: 1, ..Default::default() };
        let limited = solve_milp(&m, &tight).unwrap();
        assert!(matches!(limited.status, SolveStatus::NodeLimit | SolveStatus::GapLimit));
        assert!(limited.stats.nodes <= 1);
    }
}
