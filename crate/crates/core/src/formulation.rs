//! Compiles a [`ProblemInstance`] into the robust multi-objective MILP.
//!
//! Variable names use one-based indices (`x[1,2,1]`), array handles in
//! [`VariableMap`] are zero-based.
//!
//! Truck blocks: with the zero breakpoint enabled the breakpoint list is
//! `(0, M_1, .., M_K)` and block index `k'` is charged as truck type
//! `max(k' - 1, 0)`; otherwise `(M_1, .., M_K)` with type `k'`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ProblemInstance, Regime, BUYER_ECHELON, ECHELONS};
use crate::instance::{derive_trade_prices, InstanceError};
use crate::milp::{ConstraintSense, LinExpr, MilpModel, ObjectiveSense, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormulationOptions {
    /// Prepend a zero-load breakpoint so a supplier can receive no order.
    pub zero_breakpoint: bool,
    /// At most one echelon carries the load of a `(j, t)` pair. Needs the
    /// zero breakpoint (the idle echelon sits on it).
    pub echelon_exclusive: bool,
}

impl Default for FormulationOptions {
    fn default() -> Self {
        Self { zero_breakpoint: true, echelon_exclusive: true }
    }
}

impl FormulationOptions {
    /// The constraint set exactly as written, no zero breakpoint and loads
    /// split freely over both echelons.
    pub fn literal() -> Self {
        Self { zero_breakpoint: false, echelon_exclusive: false }
    }

    pub fn validate(&self) -> Result<(), FormulationError> {
        if self.echelon_exclusive && !self.zero_breakpoint {
            return Err(FormulationError::Options(
                "echelon exclusivity needs the zero breakpoint; disable both or neither".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum ObjectiveMode {
    CostRobust,
    EmissionRobust,
    Quality,
    Combined { z1_star: f64, z2_star: f64, z3_star: f64 },
}

/// Which robust objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Robust {
    Cost,
    Emission,
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error("invalid formulation options: {0}")]
    Options(String),
    #[error(
        "cannot normalize by {name} = {value}; shift that objective by a constant (for example add 1 to every \
         scenario value) so its individual optimum is nonzero"
    )]
    Normalization { name: &'static str, value: f64 },
    #[error(transparent)]
    Data(#[from] InstanceError),
}

type Ids2 = Vec<Vec<VarId>>;
type Ids3 = Vec<Vec<Vec<VarId>>>;
type Ids4 = Vec<Vec<Vec<Vec<VarId>>>>;

/// Handles to every model variable, plus the derived data the expressions use.
#[derive(Debug, Clone)]
pub struct VariableMap {
    /// `[i][j][t]`
    pub x: Ids3,
    /// `[i][t]`
    pub r: Ids2,
    pub b: Ids2,
    /// `[t]`; under the penalty regime `buy` holds the excess over the cap.
    pub buy: Vec<VarId>,
    pub sell: Vec<VarId>,
    /// `[j][t][k'][n]`
    pub q: Ids4,
    pub w: Ids4,
    /// `[j][t]`, 1 when the buyer's trucks carry; present with exclusivity.
    pub carrier: Option<Ids2>,
    /// `[i][j][t][s]`
    pub delta_plus: Ids4,
    pub delta_minus: Ids4,
    /// `[s]`
    pub theta1: Vec<VarId>,
    pub theta2: Vec<VarId>,
    pub zeta1: Vec<VarId>,
    pub zeta2: Vec<VarId>,
    /// Breakpoints per block index `k'`.
    pub breakpoints: Vec<f64>,
    /// Truck type charged for block index `k'`.
    pub truck_type: Vec<usize>,
    /// Cost per unit of `buy[t]`: best buying price, or the penalty rate.
    pub buy_price: Vec<f64>,
    /// Revenue per unit of `sell[t]`: best selling price (zero under penalty).
    pub sell_price: Vec<f64>,
    pub penalty_regime: bool,
}

impl VariableMap {
    /// Create every variable of the model.
    pub fn create(inst: &ProblemInstance, opts: &FormulationOptions, model: &mut MilpModel) -> Result<Self, FormulationError> {
        opts.validate()?;
        let d = inst.dims;
        let (ni, nj, nt, ns) = (d.n_products, d.n_suppliers, d.n_periods, d.n_scenarios);
        let (sell_best, buy_best) = derive_trade_prices(inst)?;
        let (buy_price, sell_price, penalty_regime) = match &inst.regime {
            Regime::CapAndTrade => (buy_best, sell_best, false),
            Regime::Penalty { rate } => (rate.clone().unwrap_or(buy_best), vec![0.0; nt], true),
        };

        let mut breakpoints = Vec::new();
        let mut truck_type = Vec::new();
        if opts.zero_breakpoint {
            breakpoints.push(0.0);
            truck_type.push(0);
        }
        for (k, &m) in inst.det.truck_breakpoints.iter().enumerate() {
            breakpoints.push(m);
            truck_type.push(k);
        }
        let nk = breakpoints.len();
        let depth = inst.robust.market_depth_bound;
        let inf = f64::INFINITY;

        let x = (0..ni)
            .map(|i| (0..nj).map(|j| (0..nt).map(|t| model.add_continuous(format!("x[{},{},{}]", i + 1, j + 1, t + 1), 0.0, inf)).collect()).collect())
            .collect();
        let r = (0..ni)
            .map(|i| (0..nt).map(|t| model.add_continuous(format!("r[{},{}]", i + 1, t + 1), 0.0, inst.cumulative_max_demand(i, t))).collect())
            .collect();
        let b = (0..ni)
            .map(|i| (0..nt).map(|t| model.add_continuous(format!("b[{},{}]", i + 1, t + 1), 0.0, inst.cumulative_max_demand(i, t))).collect())
            .collect();
        let buy = (0..nt).map(|t| model.add_continuous(format!("buy[{}]", t + 1), 0.0, depth)).collect();
        let sell_hi = if penalty_regime { 0.0 } else { depth };
        let sell = (0..nt).map(|t| model.add_continuous(format!("sell[{}]", t + 1), 0.0, sell_hi)).collect();
        let q: Ids4 = (0..nj)
            .map(|j| {
                (0..nt)
                    .map(|t| (0..nk).map(|k| (0..ECHELONS).map(|n| model.add_binary(format!("q[{},{},{},{}]", j + 1, t + 1, k + 1, n + 1))).collect()).collect())
                    .collect()
            })
            .collect();
        let w: Ids4 = (0..nj)
            .map(|j| {
                (0..nt)
                    .map(|t| {
                        (0..nk)
                            .map(|k| (0..ECHELONS).map(|n| model.add_continuous(format!("W[{},{},{},{}]", j + 1, t + 1, k + 1, n + 1), 0.0, 1.0)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let carrier = opts.echelon_exclusive.then(|| {
            (0..nj)
                .map(|j| (0..nt).map(|t| model.add_binary(format!("y[{},{}]", j + 1, t + 1))).collect())
                .collect()
        });
        let mut deltas = |tag: &str| -> Ids4 {
            (0..ni)
                .map(|i| {
                    (0..nj)
                        .map(|j| {
                            (0..nt)
                                .map(|t| {
                                    let hi = inst.max_demand(i, t);
                                    (0..ns)
                                        .map(|s| model.add_continuous(format!("{tag}[{},{},{},{}]", i + 1, j + 1, t + 1, s + 1), 0.0, hi))
                                        .collect()
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        let delta_plus = deltas("dp");
        let delta_minus = deltas("dm");
        let theta1 = (0..ns).map(|s| model.add_continuous(format!("theta1[{}]", s + 1), 0.0, inf)).collect();
        let theta2 = (0..ns).map(|s| model.add_continuous(format!("theta2[{}]", s + 1), 0.0, inf)).collect();
        let zeta1 = (0..ns).map(|s| model.add_continuous(format!("xi1[{}]", s + 1), -inf, inf)).collect();
        let zeta2 = (0..ns).map(|s| model.add_continuous(format!("xi2[{}]", s + 1), -inf, inf)).collect();

        Ok(Self {
            x,
            r,
            b,
            buy,
            sell,
            q,
            w,
            carrier,
            delta_plus,
            delta_minus,
            theta1,
            theta2,
            zeta1,
            zeta2,
            breakpoints,
            truck_type,
            buy_price,
            sell_price,
            penalty_regime,
        })
    }

    pub fn n_blocks(&self) -> usize {
        self.breakpoints.len()
    }
}

/// Scenario cost of the design `vars` under scenario `s`.
pub fn build_scenario_cost(inst: &ProblemInstance, s: usize, vars: &VariableMap) -> LinExpr {
    let d = inst.dims;
    let sc = &inst.scenarios[s];
    let det = &inst.det;
    let (ni, nj, nt) = (d.n_products, d.n_suppliers, d.n_periods);
    let mut e = LinExpr::new();
    // delay penalties
    for j in 0..nj {
        for t in 0..nt {
            for i in 0..ni {
                e.add_term(vars.x[i][j][t], sc.delay_days[j][t] * det.delay_penalty[i][j][t]);
            }
        }
    }
    // rejection losses
    for i in 0..ni {
        for t in 0..nt {
            for j in 0..nj {
                e.add_term(vars.x[i][j][t], sc.reject_rate[i][t] * det.reject_loss[i][j][t]);
            }
        }
    }
    // purchase
    for i in 0..ni {
        for j in 0..nj {
            for t in 0..nt {
                e.add_term(vars.x[i][j][t], sc.purchase_cost[i][j][t]);
            }
        }
    }
    for i in 0..ni {
        for t in 0..nt {
            e.add_term(vars.r[i][t], det.holding_cost[i][t]);
        }
    }
    for i in 0..ni {
        for t in 0..nt {
            e.add_term(vars.b[i][t], det.backorder_cost[i][t]);
        }
    }
    // recovery chain, all proportional to the period's total order of product i
    for i in 0..ni {
        for t in 0..nt {
            let (er, p) = (sc.reject_rate[i][t], sc.collect_rate[i][t]);
            let (u, v) = (sc.usable_rejected[i][t], sc.reusable_collected[i][t]);
            let per_unit = (er + p) * det.disassembly_cost[i][t]
                + (er * u + p * v) * det.remanufacture_cost[i][t]
                + (er * (1.0 - u) + p * (1.0 - v)) * det.disposal_cost[i][t];
            for j in 0..nj {
                e.add_term(vars.x[i][j][t], per_unit);
            }
        }
    }
    for j in 0..nj {
        for t in 0..nt {
            for (k, &ty) in vars.truck_type.iter().enumerate() {
                for n in 0..ECHELONS {
                    e.add_term(vars.q[j][t][k][n], det.transport_cost[j][t][ty][n]);
                }
            }
        }
    }
    for t in 0..nt {
        e.add_term(vars.buy[t], vars.buy_price[t]);
        e.add_term(vars.sell[t], -vars.sell_price[t]);
    }
    e.compact();
    e
}

/// Emission of period `t` under scenario `s` (the left side of the cap row).
pub fn period_emission(inst: &ProblemInstance, s: usize, t: usize, vars: &VariableMap) -> LinExpr {
    let d = inst.dims;
    let sc = &inst.scenarios[s];
    let det = &inst.det;
    let mut e = LinExpr::new();
    for j in 0..d.n_suppliers {
        for (k, &ty) in vars.truck_type.iter().enumerate() {
            e.add_term(vars.q[j][t][k][BUYER_ECHELON], det.distance[j] * det.transport_emission[j][t][ty][BUYER_ECHELON]);
        }
    }
    for i in 0..d.n_products {
        let recovered = sc.reject_rate[i][t] * sc.usable_rejected[i][t] + sc.collect_rate[i][t] * sc.reusable_collected[i][t];
        for j in 0..d.n_suppliers {
            e.add_term(vars.x[i][j][t], det.production_emission[i][j][t] + recovered * det.remanufacture_emission[i][t]);
        }
    }
    e
}

/// Scenario emission over all periods.
pub fn build_scenario_emission(inst: &ProblemInstance, s: usize, vars: &VariableMap) -> LinExpr {
    let mut e = LinExpr::new();
    for t in 0..inst.dims.n_periods {
        e.add_scaled(&period_emission(inst, s, t, vars), 1.0);
    }
    e.compact();
    e
}

/// Qualitative green score of the order plan.
pub fn build_quality(inst: &ProblemInstance, vars: &VariableMap) -> LinExpr {
    let d = inst.dims;
    let det = &inst.det;
    let mut e = LinExpr::new();
    for i in 0..d.n_products {
        for j in 0..d.n_suppliers {
            for t in 0..d.n_periods {
                let score = det.env_management[i][j][t] + det.green_product[i][j][t] + det.recyclability[i][j][t] + det.toxicity[i][j][t];
                e.add_term(vars.x[i][j][t], score);
            }
        }
    }
    e
}

/// Cap, inventory balance and truck-block rows.
pub fn add_core_constraints(inst: &ProblemInstance, vars: &VariableMap, model: &mut MilpModel) {
    let d = inst.dims;
    let (ni, nj, nt, ns) = (d.n_products, d.n_suppliers, d.n_periods, d.n_scenarios);

    for t in 0..nt {
        for s in 0..ns {
            let mut e = period_emission(inst, s, t, vars);
            e.add_term(vars.buy[t], -1.0);
            e.add_term(vars.sell[t], 1.0);
            model.add_constraint(format!("cap[{},{}]", t + 1, s + 1), e, ConstraintSense::Le, inst.det.emission_cap[t]);
        }
    }

    for i in 0..ni {
        for t in 0..nt {
            for s in 0..ns {
                let sc = &inst.scenarios[s];
                let supply = 1.0 + sc.usable_rejected[i][t] * sc.reject_rate[i][t] + sc.reusable_collected[i][t] * sc.collect_rate[i][t];
                let mut e = LinExpr::new();
                for j in 0..nj {
                    e.add_term(vars.x[i][j][t], supply);
                    e.add_term(vars.delta_minus[i][j][t][s], 1.0);
                    e.add_term(vars.delta_plus[i][j][t][s], -1.0);
                }
                e.add_term(vars.b[i][t], 1.0);
                e.add_term(vars.r[i][t], -1.0);
                if t > 0 {
                    e.add_term(vars.r[i][t - 1], 1.0);
                    e.add_term(vars.b[i][t - 1], -1.0);
                }
                model.add_constraint(format!("bal[{},{},{}]", i + 1, t + 1, s + 1), e, ConstraintSense::Eq, sc.demand[i][t]);
            }
        }
    }

    let nk = vars.n_blocks();
    for j in 0..nj {
        for t in 0..nt {
            let tag = format!("{},{}", j + 1, t + 1);
            let mut load = LinExpr::new();
            for i in 0..ni {
                load.add_term(vars.x[i][j][t], 1.0);
            }
            for n in 0..ECHELONS {
                for k in 0..nk {
                    load.add_term(vars.w[j][t][k][n], -vars.breakpoints[k]);
                }
            }
            model.add_constraint(format!("load[{tag}]"), load, ConstraintSense::Eq, 0.0);

            for n in 0..ECHELONS {
                let tag = format!("{tag},{}", n + 1);
                let q = &vars.q[j][t];
                let w = &vars.w[j][t];
                let le = |model: &mut MilpModel, name: String, wk: VarId, qs: &[VarId]| {
                    let mut e = LinExpr::term(wk, 1.0);
                    for &qv in qs {
                        e.add_term(qv, -1.0);
                    }
                    model.add_constraint(name, e, ConstraintSense::Le, 0.0);
                };
                le(model, format!("wfirst[{tag}]"), w[0][n], &[q[0][n]]);
                for k in 0..nk.saturating_sub(1) {
                    le(model, format!("wadj[{tag},{}]", k + 2), w[k + 1][n], &[q[k + 1][n], q[k][n]]);
                }
                if nk >= 2 {
                    le(model, format!("wlast[{tag}]"), w[nk - 1][n], &[q[nk - 2][n]]);
                }
                let qsum = (0..nk).fold(LinExpr::new(), |mut e, k| {
                    e.add_term(q[k][n], 1.0);
                    e
                });
                model.add_constraint(format!("qsum[{tag}]"), qsum, ConstraintSense::Eq, 1.0);
                let wsum = (0..nk).fold(LinExpr::new(), |mut e, k| {
                    e.add_term(w[k][n], 1.0);
                    e
                });
                model.add_constraint(format!("wsum[{tag}]"), wsum, ConstraintSense::Eq, 1.0);
            }

            if let Some(y) = &vars.carrier {
                // the idle echelon rests on the zero breakpoint
                let mut e = LinExpr::term(vars.w[j][t][0][0], 1.0);
                e.add_term(y[j][t], -1.0);
                model.add_constraint(format!("idle1[{tag}]"), e, ConstraintSense::Ge, 0.0);
                let mut e = LinExpr::term(vars.w[j][t][0][1], 1.0);
                e.add_term(y[j][t], 1.0);
                model.add_constraint(format!("idle2[{tag}]"), e, ConstraintSense::Ge, 1.0);
            }
        }
    }
}

/// Link the per-scenario objective variables to their expressions.
pub fn add_scenario_links(inst: &ProblemInstance, vars: &VariableMap, model: &mut MilpModel) {
    for s in 0..inst.dims.n_scenarios {
        let mut e = build_scenario_cost(inst, s, vars);
        e.add_term(vars.zeta1[s], -1.0);
        model.add_constraint(format!("xi1def[{}]", s + 1), e, ConstraintSense::Eq, 0.0);
        let mut e = build_scenario_emission(inst, s, vars);
        e.add_term(vars.zeta2[s], -1.0);
        model.add_constraint(format!("xi2def[{}]", s + 1), e, ConstraintSense::Eq, 0.0);
    }
}

/// Rows `(zeta_s - sum_s' Pr_s' zeta_s') + theta_s >= 0`.
pub fn add_deviation_rows(model: &mut MilpModel, probs: &[f64], zeta: &[VarId], theta: &[VarId], tag: &str) {
    for s in 0..probs.len() {
        let mut e = LinExpr::term(zeta[s], 1.0);
        for (s2, &p) in probs.iter().enumerate() {
            e.add_term(zeta[s2], -p);
        }
        e.add_term(theta[s], 1.0);
        model.add_constraint(format!("{tag}[{}]", s + 1), e, ConstraintSense::Ge, 0.0);
    }
}

/// `sum Pr zeta + lambda * sum Pr [(zeta - mean) + 2 theta] + omega * sum Pr * infeasibility`.
pub fn robust_expression(probs: &[f64], zeta: &[VarId], theta: &[VarId], lambda: f64, omega: f64, infeasibility: &[LinExpr]) -> LinExpr {
    let mut e = LinExpr::new();
    for (s, &p) in probs.iter().enumerate() {
        e.add_term(zeta[s], p);
    }
    for (s, &p) in probs.iter().enumerate() {
        e.add_term(zeta[s], lambda * p);
        for (s2, &p2) in probs.iter().enumerate() {
            e.add_term(zeta[s2], -lambda * p * p2);
        }
        e.add_term(theta[s], 2.0 * lambda * p);
    }
    for (s, &p) in probs.iter().enumerate() {
        e.add_scaled(&infeasibility[s], omega * p);
    }
    e.compact();
    e
}

/// Total slack `sum_ijt (dm + dp)` of scenario `s`.
pub fn scenario_infeasibility(inst: &ProblemInstance, s: usize, vars: &VariableMap) -> LinExpr {
    let d = inst.dims;
    let mut e = LinExpr::new();
    for i in 0..d.n_products {
        for j in 0..d.n_suppliers {
            for t in 0..d.n_periods {
                e.add_term(vars.delta_minus[i][j][t][s], 1.0);
                e.add_term(vars.delta_plus[i][j][t][s], 1.0);
            }
        }
    }
    e
}

/// Robust objective z1 or z2 over the per-scenario variables.
pub fn build_robust_objective(inst: &ProblemInstance, which: Robust, vars: &VariableMap) -> LinExpr {
    let probs = inst.probabilities();
    let infeas: Vec<LinExpr> = (0..inst.dims.n_scenarios).map(|s| scenario_infeasibility(inst, s, vars)).collect();
    let r = &inst.robust;
    match which {
        Robust::Cost => robust_expression(&probs, &vars.zeta1, &vars.theta1, r.lambda1, r.omega, &infeas),
        Robust::Emission => robust_expression(&probs, &vars.zeta2, &vars.theta2, r.lambda2, r.omega, &infeas),
    }
}

fn check_star(name: &'static str, value: f64) -> Result<f64, FormulationError> {
    if value == 0.0 || !value.is_finite() {
        return Err(FormulationError::Normalization { name, value });
    }
    Ok(value.abs())
}

/// The complete model for `mode` under the instance's regime.
pub fn build_full_model(
    inst: &ProblemInstance,
    mode: ObjectiveMode,
    opts: &FormulationOptions,
) -> Result<(MilpModel, VariableMap), FormulationError> {
    let sense = if mode == ObjectiveMode::Quality { ObjectiveSense::Maximize } else { ObjectiveSense::Minimize };
    let mut model = MilpModel::new(sense);
    let vars = VariableMap::create(inst, opts, &mut model)?;
    add_scenario_links(inst, &vars, &mut model);
    let probs = inst.probabilities();
    add_deviation_rows(&mut model, &probs, &vars.zeta1, &vars.theta1, "dev1");
    add_deviation_rows(&mut model, &probs, &vars.zeta2, &vars.theta2, "dev2");
    add_core_constraints(inst, &vars, &mut model);

    let objective = match mode {
        ObjectiveMode::CostRobust => build_robust_objective(inst, Robust::Cost, &vars),
        ObjectiveMode::EmissionRobust => build_robust_objective(inst, Robust::Emission, &vars),
        ObjectiveMode::Quality => build_quality(inst, &vars),
        ObjectiveMode::Combined { z1_star, z2_star, z3_star } => {
            let n1 = check_star("z1*", z1_star)?;
            let n2 = check_star("z2*", z2_star)?;
            let n3 = check_star("z3*", z3_star)?;
            let mut e = LinExpr::new();
            e.add_scaled(&build_robust_objective(inst, Robust::Cost, &vars), 1.0 / n1);
            e.add_scaled(&build_robust_objective(inst, Robust::Emission, &vars), 1.0 / n2);
            e.add_scaled(&build_quality(inst, &vars), -1.0 / n3);
            e.add_constant(-z1_star / n1 - z2_star / n2 + z3_star / n3);
            e.compact();
            e
        }
    };
    model.set_objective(objective);
    Ok((model, vars))
}

/// Same model with emission above the cap fined at `penalty_rate[t]` and no
/// trading. `None` uses each period's best buying price.
pub fn build_penalty_regime_model(
    inst: &ProblemInstance,
    penalty_rate: Option<Vec<f64>>,
    mode: ObjectiveMode,
    opts: &FormulationOptions,
) -> Result<(MilpModel, VariableMap), FormulationError> {
    let mut penal = inst.clone();
    penal.regime = Regime::Penalty { rate: penalty_rate };
    build_full_model(&penal, mode, opts)
}
