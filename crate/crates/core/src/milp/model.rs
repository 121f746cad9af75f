//! Solver-agnostic linear model: variables, sparse rows and a linear objective.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a variable inside a [`MilpModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

/// Sparse linear expression `Σ coef·var + constant`.
///
/// Terms may repeat while an expression is being assembled; [`LinExpr::compact`]
/// merges duplicates and drops zeros.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn term(var: VarId, coef: f64) -> Self {
        Self { terms: vec![(var, coef)], constant: 0.0 }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) -> &mut Self {
        if coef != 0.0 {
            self.terms.push((var, coef));
        }
        self
    }

    pub fn add_constant(&mut self, value: f64) -> &mut Self {
        self.constant += value;
        self
    }

    /// `self += scale · other`
    pub fn add_scaled(&mut self, other: &LinExpr, scale: f64) -> &mut Self {
        if scale != 0.0 {
            self.terms
                .extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
            self.constant += other.constant * scale;
        }
        self
    }

    pub fn scaled(&self, scale: f64) -> LinExpr {
        let mut out = LinExpr::new();
        out.add_scaled(self, scale);
        out
    }

    /// Merge duplicate variables (sorted by id) and drop exact zeros.
    pub fn compact(&mut self) {
        if self.terms.is_empty() {
            return;
        }
        self.terms.sort_by_key(|&(v, _)| v);
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.terms = merged;
    }

    pub fn compacted(mut self) -> Self {
        self.compact();
        self
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(v, c)| c * values[v.0])
                .sum::<f64>()
    }

    pub fn coefficient(&self, var: VarId) -> f64 {
        self.terms
            .iter()
            .filter(|(v, _)| *v == var)
            .map(|(_, c)| c)
            .sum()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("variable {name}: lower bound {lower} exceeds upper bound {upper}")]
    InvertedBounds { name: String, lower: f64, upper: f64 },
    #[error("binary variable {name} has bounds outside [0,1]")]
    BinaryBounds { name: String },
    #[error("{owner} references unknown variable id {id}")]
    UnknownVariable { owner: String, id: usize },
    #[error("{owner} has a non-finite coefficient")]
    NonFinite { owner: String },
    #[error("constraint {name} lists variable id {id} twice")]
    DuplicateTerm { name: String, id: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: LinExpr,
    pub sense: ObjectiveSense,
}

impl MilpModel {
    pub fn new(sense: ObjectiveSense) -> Self {
        Self {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: LinExpr::new(),
            sense,
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(Variable { name: name.into(), lower, upper, kind });
        id
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Adds `expr (sense) rhs`; the expression's constant moves to the right-hand side.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        mut expr: LinExpr,
        sense: ConstraintSense,
        rhs: f64,
    ) -> usize {
        expr.compact();
        let rhs = rhs - expr.constant;
        self.constraints.push(LinearConstraint {
            name: name.into(),
            terms: expr.terms,
            sense,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn set_objective(&mut self, expr: LinExpr) {
        self.objective = expr.compacted();
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn num_binaries(&self) -> usize {
        self.binaries().count()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.eval(values)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() {
                return Err(ModelError::InvertedBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(ModelError::BinaryBounds { name: v.name.clone() });
            }
        }
        let mut seen = vec![usize::MAX; n];
        for (row, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(ModelError::NonFinite { owner: c.name.clone() });
            }
            for &(v, coef) in &c.terms {
                if v.0 >= n {
                    return Err(ModelError::UnknownVariable { owner: c.name.clone(), id: v.0 });
                }
                if !coef.is_finite() {
                    return Err(ModelError::NonFinite { owner: c.name.clone() });
                }
                if seen[v.0] == row {
                    return Err(ModelError::DuplicateTerm { name: c.name.clone(), id: v.0 });
                }
                seen[v.0] = row;
            }
        }
        for &(v, coef) in &self.objective.terms {
            if v.0 >= n {
                return Err(ModelError::UnknownVariable { owner: "objective".into(), id: v.0 });
            }
            if !coef.is_finite() {
                return Err(ModelError::NonFinite { owner: "objective".into() });
            }
        }
        Ok(())
    }
}

/// Solver tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub rel_gap: f64,
    pub node_limit: usize,
    /// Simplex iteration cap per LP (re)solve.
    pub iteration_limit: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            integrality_tol: 1e-6,
            rel_gap: 1e-6,
            node_limit: 200_000,
            iteration_limit: 500_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,
    NodeLimit,
    NumericalFailure,
}

impl SolveStatus {
    /// True when the solution carries a usable primal point.
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::GapLimit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub best_bound: f64,
    pub rel_gap: f64,
    pub lp_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: SolveStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

impl MilpSolution {
    pub(crate) fn without_point(status: SolveStatus, stats: SolveStats) -> Self {
        Self { status, objective: f64::NAN, values: Vec::new(), stats }
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}
