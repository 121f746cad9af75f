//! Two-step solution procedure: the three objectives are optimized on their
//! own, then the sum of normalized deviations from those optima is minimized.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ProblemInstance, Regime, RobustParams, BUYER_ECHELON};
use crate::formulation::{
    build_full_model, build_quality, build_scenario_cost, build_scenario_emission, scenario_infeasibility,
    FormulationError, FormulationOptions, ObjectiveMode, VariableMap,
};
use crate::milp::{
    elastic_diagnosis, solve_milp, AuditReport, MilpModel, MilpSolution, ModelError, SolveStatus, ToleranceConfig,
    VarId, VarKind, Violation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Cost,
    Emission,
    Quality,
    Combined,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Cost => "cost",
            Stage::Emission => "emission",
            Stage::Quality => "quality",
            Stage::Combined => "combined",
        }
    }

    fn mode(self) -> ObjectiveMode {
        match self {
            Stage::Cost => ObjectiveMode::CostRobust,
            Stage::Emission => ObjectiveMode::EmissionRobust,
            Stage::Quality => ObjectiveMode::Quality,
            Stage::Combined => unreachable!("combined mode needs reference optima"),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSettings {
    pub tol: ToleranceConfig,
    pub options: FormulationOptions,
}

#[derive(Debug, Error)]
pub enum ProcedureError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error("malformed model: {0}")]
    Model(#[from] ModelError),
    #[error("{stage} stage infeasible; rows that need relaxing: {}", rows.join(", "))]
    Infeasible { stage: Stage, rows: Vec<String> },
    #[error("{stage} stage unbounded despite the boundedness guards; review the guard bounds")]
    Unbounded { stage: Stage },
    #[error("{stage} stage hit a numerical failure in the LP solver")]
    Numerical { stage: Stage },
    #[error("{stage} stage stopped at the node limit without a feasible point")]
    NoIncumbent { stage: Stage },
    #[error("combined solution beats an individual optimum: {0}")]
    Sandwich(String),
}

impl ProcedureError {
    pub fn stage(&self) -> Option<Stage> {
        match self {
            ProcedureError::Infeasible { stage, .. }
            | ProcedureError::Unbounded { stage }
            | ProcedureError::Numerical { stage }
            | ProcedureError::NoIncumbent { stage } => Some(*stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageInfo {
    pub stage: Stage,
    pub status: SolveStatus,
    /// Model objective at the returned point.
    pub objective: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub rel_gap: f64,
    /// Boundedness guards sitting at their bound at the returned point.
    pub active_guards: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct IndividualResult {
    pub stage: Stage,
    /// Objective value used as the reference optimum.
    pub optimum: f64,
    pub solution: MilpSolution,
    pub vars: VariableMap,
    pub model: MilpModel,
    pub info: StageInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub seconds: f64,
}

/// Objective values of a point, with the deviation terms in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    /// `sum_s Pr_s |xi1_s - mean|`
    pub deviation1: f64,
    pub deviation2: f64,
    /// `sum_s Pr_s sum_ijt (dm + dp)`
    pub total_infeasibility: f64,
}

fn mean_abs_deviation(probs: &[f64], v: &[f64]) -> f64 {
    let mean: f64 = probs.iter().zip(v).map(|(p, x)| p * x).sum();
    probs.iter().zip(v).map(|(p, x)| p * (x - mean).abs()).sum()
}

pub fn evaluate_point(inst: &ProblemInstance, vars: &VariableMap, values: &[f64]) -> Evaluation {
    let probs = inst.probabilities();
    let ns = inst.dims.n_scenarios;
    let xi1: Vec<f64> = (0..ns).map(|s| build_scenario_cost(inst, s, vars).eval(values)).collect();
    let xi2: Vec<f64> = (0..ns).map(|s| build_scenario_emission(inst, s, vars).eval(values)).collect();
    let total_infeasibility: f64 =
        (0..ns).map(|s| probs[s] * scenario_infeasibility(inst, s, vars).eval(values)).sum();
    let deviation1 = mean_abs_deviation(&probs, &xi1);
    let deviation2 = mean_abs_deviation(&probs, &xi2);
    let expect = |v: &[f64]| -> f64 { probs.iter().zip(v).map(|(p, x)| p * x).sum() };
    let r = &inst.robust;
    Evaluation {
        z1: expect(&xi1) + r.lambda1 * deviation1 + r.omega * total_infeasibility,
        z2: expect(&xi2) + r.lambda2 * deviation2 + r.omega * total_infeasibility,
        z3: build_quality(inst, vars).eval(values),
        xi1,
        xi2,
        deviation1,
        deviation2,
        total_infeasibility,
    }
}

fn active_guards(inst: &ProblemInstance, vars: &VariableMap, model: &MilpModel, values: &[f64]) -> Vec<String> {
    let depth = inst.robust.market_depth_bound;
    let mut ids: Vec<VarId> = Vec::new();
    ids.extend(vars.r.iter().flatten());
    ids.extend(vars.b.iter().flatten());
    ids.extend(vars.delta_plus.iter().flatten().flatten().flatten());
    ids.extend(vars.delta_minus.iter().flatten().flatten().flatten());
    let mut out = Vec::new();
    for v in ids {
        let var = &model.variables[v.index()];
        if var.upper > 0.0 && values[v.index()] >= var.upper - 1e-6 * (1.0 + var.upper) {
            out.push(format!("{} at {}", var.name, var.upper));
        }
    }
    for &v in vars.buy.iter().chain(&vars.sell) {
        let var = &model.variables[v.index()];
        if var.upper > 0.0 && values[v.index()] >= depth - 1e-6 * (1.0 + depth) {
            out.push(format!("{} at market depth {depth}", var.name));
        }
    }
    out
}

/// Memo of solved models. A hit requires the whole model to compare equal,
/// so reuse can never change a result.
#[derive(Debug, Default)]
pub struct StageCache {
    entries: Mutex<Vec<(MilpModel, MilpSolution)>>,
}

const CACHE_CAPACITY: usize = 32;

impl StageCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, model: &MilpModel) -> Option<MilpSolution> {
        let entries = self.entries.lock().expect("cache lock");
        entries.iter().find(|(m, _)| m == model).map(|(_, s)| s.clone())
    }

    fn put(&self, model: &MilpModel, sol: &MilpSolution) {
        let mut entries = self.entries.lock().expect("cache lock");
        if entries.len() >= CACHE_CAPACITY {
            entries.remove(0);
        }
        entries.push((model.clone(), sol.clone()));
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Runs the stages with fixed settings, sharing a [`StageCache`].
#[derive(Debug, Default)]
pub struct Procedure {
    pub settings: SolveSettings,
    cache: StageCache,
}

impl Procedure {
    pub fn new(settings: SolveSettings) -> Self {
        Self { settings, cache: StageCache::new() }
    }

    pub fn cache(&self) -> &StageCache {
        &self.cache
    }

    fn run(&self, stage: Stage, inst: &ProblemInstance, mode: ObjectiveMode) -> Result<IndividualResult, ProcedureError> {
        let (model, vars) = build_full_model(inst, mode, &self.settings.options)?;
        let tol = &self.settings.tol;
        let solution = match self.cache.get(&model) {
            Some(s) => s,
            None => {
                let s = solve_milp(&model, tol)?;
                self.cache.put(&model, &s);
                s
            }
        };
        match solution.status {
            SolveStatus::Optimal | SolveStatus::GapLimit => {}
            SolveStatus::Infeasible => {
                let rows = elastic_diagnosis(&model, tol).unwrap_or_default();
                return Err(ProcedureError::Infeasible { stage, rows });
            }
            SolveStatus::Unbounded => return Err(ProcedureError::Unbounded { stage }),
            SolveStatus::NumericalFailure => return Err(ProcedureError::Numerical { stage }),
            SolveStatus::NodeLimit => return Err(ProcedureError::NoIncumbent { stage }),
        }
        let eval = evaluate_point(inst, &vars, &solution.values);
        let optimum = match stage {
            Stage::Cost => eval.z1,
            Stage::Emission => eval.z2,
            Stage::Quality => eval.z3,
            Stage::Combined => solution.objective,
        };
        let info = StageInfo {
            stage,
            status: solution.status,
            objective: solution.objective,
            nodes: solution.stats.nodes,
            lp_iterations: solution.stats.lp_iterations,
            rel_gap: solution.stats.rel_gap,
            active_guards: active_guards(inst, &vars, &model, &solution.values),
        };
        Ok(IndividualResult { stage, optimum, solution, vars, model, info })
    }

    /// Optimize one objective alone: cost and emission are minimized,
    /// quality is maximized.
    pub fn solve_individual(&self, inst: &ProblemInstance, stage: Stage) -> Result<IndividualResult, ProcedureError> {
        self.run(stage, inst, stage.mode())
    }

    pub fn solve_combined(
        &self,
        inst: &ProblemInstance,
        z1_star: f64,
        z2_star: f64,
        z3_star: f64,
    ) -> Result<SolveReport, ProcedureError> {
        let mode = ObjectiveMode::Combined { z1_star, z2_star, z3_star };
        let res = self.run(Stage::Combined, inst, mode)?;
        let report = SolveReport::assemble(inst, &self.settings, [z1_star, z2_star, z3_star], &res, Vec::new());
        let slack = |z: f64| self.settings.tol.rel_gap.max(1e-6) * z.abs().max(1.0);
        let mut broken = Vec::new();
        if report.z1 < z1_star - slack(z1_star) {
            broken.push(format!("z1 = {} < z1* = {z1_star}", report.z1));
        }
        if report.z2 < z2_star - slack(z2_star) {
            broken.push(format!("z2 = {} < z2* = {z2_star}", report.z2));
        }
        if report.z3 > z3_star + slack(z3_star) {
            broken.push(format!("z3 = {} > z3* = {z3_star}", report.z3));
        }
        if !broken.is_empty() {
            return Err(ProcedureError::Sandwich(broken.join("; ")));
        }
        Ok(report)
    }

    /// Individual stages, then the combined stage. Wall-clock per stage is
    /// returned beside the report so the report itself stays reproducible.
    pub fn full_solve(&self, inst: &ProblemInstance) -> Result<(SolveReport, Vec<StageTiming>), ProcedureError> {
        let timed = |stage: Stage| {
            let t0 = Instant::now();
            let r = self.solve_individual(inst, stage);
            (r, StageTiming { stage, seconds: t0.elapsed().as_secs_f64() })
        };
        let ((cost, t1), ((emission, t2), (quality, t3))) =
            rayon::join(|| timed(Stage::Cost), || rayon::join(|| timed(Stage::Emission), || timed(Stage::Quality)));
        let (cost, emission, quality) = (cost?, emission?, quality?);
        let t0 = Instant::now();
        let mut report = self.solve_combined(inst, cost.optimum, emission.optimum, quality.optimum)?;
        let t4 = StageTiming { stage: Stage::Combined, seconds: t0.elapsed().as_secs_f64() };
        let combined = report.stages.pop().expect("combined stage info");
        report.stages = vec![cost.info, emission.info, quality.info, combined];
        Ok((report, vec![t1, t2, t3, t4]))
    }
}

pub fn solve_individual(
    inst: &ProblemInstance,
    stage: Stage,
    settings: &SolveSettings,
) -> Result<IndividualResult, ProcedureError> {
    Procedure::new(*settings).solve_individual(inst, stage)
}

pub fn solve_combined(
    inst: &ProblemInstance,
    z1_star: f64,
    z2_star: f64,
    z3_star: f64,
    settings: &SolveSettings,
) -> Result<SolveReport, ProcedureError> {
    Procedure::new(*settings).solve_combined(inst, z1_star, z2_star, z3_star)
}

pub fn full_solve(inst: &ProblemInstance, settings: &SolveSettings) -> Result<(SolveReport, Vec<StageTiming>), ProcedureError> {
    Procedure::new(*settings).full_solve(inst)
}

/// Everything the combined stage produced. Arrays are zero-based in the
/// index order given per field; `q`/`W` block index `k'` follows `breakpoints`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub regime: Regime,
    pub robust: RobustParams,
    pub options: FormulationOptions,
    pub tolerances: ToleranceConfig,
    pub z1_star: f64,
    pub z2_star: f64,
    pub z3_star: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub z_total: f64,
    pub deviation1: f64,
    pub deviation2: f64,
    pub total_infeasibility: f64,
    /// `[i][j][t]`
    pub x: Vec<Vec<Vec<f64>>>,
    /// `[i][t]`
    pub r: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    /// `[t]`
    pub buy: Vec<f64>,
    pub sell: Vec<f64>,
    pub sell_price: Vec<f64>,
    pub buy_price: Vec<f64>,
    pub breakpoints: Vec<f64>,
    /// `[j][t][k'][n]`
    pub q: Vec<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "W")]
    pub w: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[i][j][t][s]`
    pub delta_plus: Vec<Vec<Vec<Vec<f64>>>>,
    pub delta_minus: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[s]`
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub stages: Vec<StageInfo>,
    pub active_guards: Vec<String>,
    /// Parameters overridden on top of the instance file, by name.
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

fn clean(v: f64) -> f64 {
    if v.abs() < 1e-9 {
        0.0
    } else {
        v
    }
}

impl SolveReport {
    fn assemble(
        inst: &ProblemInstance,
        settings: &SolveSettings,
        stars: [f64; 3],
        res: &IndividualResult,
        mut stages: Vec<StageInfo>,
    ) -> Self {
        let vals = &res.solution.values;
        let model = &res.model;
        let get = |v: &VarId| {
            let x = vals[v.index()];
            if model.variables[v.index()].kind == VarKind::Binary {
                x.round()
            } else {
                clean(x)
            }
        };
        let v1 = |a: &Vec<VarId>| a.iter().map(get).collect::<Vec<f64>>();
        let v2 = |a: &Vec<Vec<VarId>>| a.iter().map(v1).collect::<Vec<_>>();
        let v3 = |a: &Vec<Vec<Vec<VarId>>>| a.iter().map(v2).collect::<Vec<_>>();
        let v4 = |a: &Vec<Vec<Vec<Vec<VarId>>>>| a.iter().map(v3).collect::<Vec<_>>();
        let eval = evaluate_point(inst, &res.vars, vals);
        let [z1s, z2s, z3s] = stars;
        let z_total = (eval.z1 - z1s) / z1s.abs() + (eval.z2 - z2s) / z2s.abs() + (z3s - eval.z3) / z3s.abs();
        stages.push(res.info.clone());
        SolveReport {
            status: res.solution.status,
            regime: inst.regime.clone(),
            robust: inst.robust,
            options: settings.options,
            tolerances: settings.tol,
            z1_star: z1s,
            z2_star: z2s,
            z3_star: z3s,
            z1: eval.z1,
            z2: eval.z2,
            z3: eval.z3,
            z_total,
            deviation1: eval.deviation1,
            deviation2: eval.deviation2,
            total_infeasibility: eval.total_infeasibility,
            x: v3(&res.vars.x),
            r: v2(&res.vars.r),
            b: v2(&res.vars.b),
            buy: v1(&res.vars.buy),
            sell: v1(&res.vars.sell),
            sell_price: res.vars.sell_price.clone(),
            buy_price: res.vars.buy_price.clone(),
            breakpoints: res.vars.breakpoints.clone(),
            q: v4(&res.vars.q),
            w: v4(&res.vars.w),
            delta_plus: v4(&res.vars.delta_plus),
            delta_minus: v4(&res.vars.delta_minus),
            theta1: v1(&res.vars.theta1),
            theta2: v1(&res.vars.theta2),
            xi1: eval.xi1,
            xi2: eval.xi2,
            active_guards: res.info.active_guards.clone(),
            stages,
            overrides: BTreeMap::new(),
        }
    }

    pub fn total_buy(&self) -> f64 {
        self.buy.iter().sum()
    }

    pub fn total_sell(&self) -> f64 {
        self.sell.iter().sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Flat listing, one row per scalar or array entry, indices one-based.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(["family", "i", "j", "t", "k", "n", "s", "value"]).expect("in-memory write");
        let mut row = |family: &str, idx: [Option<usize>; 6], value: f64| {
            let mut rec: Vec<String> = vec![family.to_string()];
            rec.extend(idx.iter().map(|o| o.map(|v| (v + 1).to_string()).unwrap_or_default()));
            rec.push(value.to_string());
            w.write_record(&rec).expect("in-memory write");
        };
        for (name, v) in [
            ("z1_star", self.z1_star),
            ("z2_star", self.z2_star),
            ("z3_star", self.z3_star),
            ("z1", self.z1),
            ("z2", self.z2),
            ("z3", self.z3),
            ("z_total", self.z_total),
            ("deviation1", self.deviation1),
            ("deviation2", self.deviation2),
            ("total_infeasibility", self.total_infeasibility),
        ] {
            row(name, [None; 6], v);
        }
        for (i, a) in self.x.iter().enumerate() {
            for (j, b) in a.iter().enumerate() {
                for (t, &v) in b.iter().enumerate() {
                    row("x", [Some(i), Some(j), Some(t), None, None, None], v);
                }
            }
        }
        for (name, arr) in [("r", &self.r), ("b", &self.b)] {
            for (i, a) in arr.iter().enumerate() {
                for (t, &v) in a.iter().enumerate() {
                    row(name, [Some(i), None, Some(t), None, None, None], v);
                }
            }
        }
        for (name, arr) in [("buy", &self.buy), ("sell", &self.sell), ("sell_price", &self.sell_price), ("buy_price", &self.buy_price)] {
            for (t, &v) in arr.iter().enumerate() {
                row(name, [None, None, Some(t), None, None, None], v);
            }
        }
        for (name, arr) in [("q", &self.q), ("W", &self.w)] {
            for (j, a) in arr.iter().enumerate() {
                for (t, b) in a.iter().enumerate() {
                    for (k, c) in b.iter().enumerate() {
                        for (n, &v) in c.iter().enumerate() {
                            row(name, [None, Some(j), Some(t), Some(k), Some(n), None], v);
                        }
                    }
                }
            }
        }
        for (name, arr) in [("delta_plus", &self.delta_plus), ("delta_minus", &self.delta_minus)] {
            for (i, a) in arr.iter().enumerate() {
                for (j, b) in a.iter().enumerate() {
                    for (t, c) in b.iter().enumerate() {
                        for (s, &v) in c.iter().enumerate() {
                            row(name, [Some(i), Some(j), Some(t), None, None, Some(s)], v);
                        }
                    }
                }
            }
        }
        for (name, arr) in [("theta1", &self.theta1), ("theta2", &self.theta2), ("xi1", &self.xi1), ("xi2", &self.xi2)] {
            for (s, &v) in arr.iter().enumerate() {
                row(name, [None, None, None, None, None, Some(s)], v);
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Check inventory balance per `(i, t, s)` and the emission cap per `(t, s)`
/// at the reported point, straight from the instance data.
pub fn audit_report(inst: &ProblemInstance, rep: &SolveReport, tol: f64) -> AuditReport {
    let d = inst.dims;
    let det = &inst.det;
    let mut out = AuditReport::default();
    let mut check = |name: String, miss: f64, scale: f64| {
        let rel = miss / (1.0 + scale.abs());
        out.max_violation = out.max_violation.max(rel);
        if rel > tol {
            out.violations.push(Violation { name, amount: miss });
        }
    };
    for s in 0..d.n_scenarios {
        let sc = &inst.scenarios[s];
        for i in 0..d.n_products {
            for t in 0..d.n_periods {
                let ordered: f64 = (0..d.n_suppliers).map(|j| rep.x[i][j][t]).sum();
                let over: f64 = (0..d.n_suppliers).map(|j| rep.delta_minus[i][j][t][s]).sum();
                let under: f64 = (0..d.n_suppliers).map(|j| rep.delta_plus[i][j][t][s]).sum();
                let (r_prev, b_prev) = if t == 0 { (0.0, 0.0) } else { (rep.r[i][t - 1], rep.b[i][t - 1]) };
                let left = sc.usable_rejected[i][t] * sc.reject_rate[i][t] * ordered
                    + sc.reusable_collected[i][t] * sc.collect_rate[i][t] * ordered
                    + ordered
                    + rep.b[i][t]
                    + r_prev
                    + over;
                let right = sc.demand[i][t] + rep.r[i][t] + b_prev + under;
                check(format!("balance[{},{},{}]", i + 1, t + 1, s + 1), (left - right).abs(), sc.demand[i][t]);
            }
        }
        for t in 0..d.n_periods {
            let mut emission = 0.0;
            for j in 0..d.n_suppliers {
                for k in 0..rep.breakpoints.len() {
                    let ty = truck_type_of(rep, k);
                    emission += det.distance[j] * det.transport_emission[j][t][ty][BUYER_ECHELON] * rep.q[j][t][k][BUYER_ECHELON];
                }
                for i in 0..d.n_products {
                    emission += rep.x[i][j][t] * det.production_emission[i][j][t];
                }
            }
            for i in 0..d.n_products {
                let ordered: f64 = (0..d.n_suppliers).map(|j| rep.x[i][j][t]).sum();
                emission += (sc.reject_rate[i][t] * sc.usable_rejected[i][t] + sc.collect_rate[i][t] * sc.reusable_collected[i][t])
                    * det.remanufacture_emission[i][t]
                    * ordered;
            }
            let cap = det.emission_cap[t] + rep.buy[t] - rep.sell[t];
            check(format!("cap[{},{}]", t + 1, s + 1), (emission - cap).max(0.0), det.emission_cap[t]);
        }
    }
    out
}

/// Truck type charged for block `k` of a report.
pub fn truck_type_of(rep: &SolveReport, k: usize) -> usize {
    if rep.options.zero_breakpoint {
        k.saturating_sub(1)
    } else {
        k
    }
}
