//! Linear model representation and the bundled LP/MILP solver.

mod audit;
mod bnb;
mod diagnose;
mod lp;
mod model;
mod mps;
mod simplex;

pub use audit::{audit_point, AuditReport, Violation};
pub use bnb::{relative_gap, solve_milp};
pub use diagnose::elastic_diagnosis;
pub use lp::solve_lp;
pub use model::{
    ConstraintSense, LinExpr, LinearConstraint, MilpModel, MilpSolution, ModelError, ObjectiveSense,
    SolveStats, SolveStatus, ToleranceConfig, VarId, VarKind, Variable,
};
pub use mps::{export_mps, MpsExport, NameMap};
