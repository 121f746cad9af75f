//! Robust multi-objective green supplier selection and order allocation in a
//! closed-loop supply chain under cap-and-trade, with a bundled MILP solver.

pub mod analysis;
pub mod domain;
pub mod formulation;
pub mod instance;
pub mod milp;
pub mod procedure;
