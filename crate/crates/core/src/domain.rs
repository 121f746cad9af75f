//! Problem data: index sets, scenario data, deterministic parameters and
//! robustness weights, plus the validation that guards them.
//!
//! Index conventions (all zero-based in code):
//! `i` product, `j` supplier, `t` period, `k` truck type, `n` echelon
//! (0 = supplier trucks, 1 = buyer trucks), `s` scenario, `m` market offer.
//! Nested arrays follow the order their field documentation gives.

use serde::{Deserialize, Serialize};

/// Echelons: supplier-owned trucks and buyer-owned trucks.
pub const ECHELONS: usize = 2;
/// Echelon index of the buyer's (manufacturer's) trucks, whose emissions count.
pub const BUYER_ECHELON: usize = 1;

pub type Arr1 = Vec<f64>;
pub type Arr2 = Vec<Vec<f64>>;
pub type Arr3 = Vec<Vec<Vec<f64>>>;
pub type Arr4 = Vec<Vec<Vec<Vec<f64>>>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimensions {
    pub n_products: usize,
    pub n_suppliers: usize,
    pub n_periods: usize,
    pub n_truck_types: usize,
    pub n_scenarios: usize,
    pub n_market_offers: usize,
}

impl Default for Dimensions {
    fn default() -> Self {
        Self {
            n_products: 4,
            n_suppliers: 5,
            n_periods: 4,
            n_truck_types: 3,
            n_scenarios: 3,
            n_market_offers: 3,
        }
    }
}

/// Data that varies by scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioData {
    pub probability: f64,
    /// `[i][j][t]`, currency per unit.
    pub purchase_cost: Arr3,
    /// `[j][t]`, days late.
    pub delay_days: Arr2,
    /// `[i][t]` fractions.
    pub reject_rate: Arr2,
    pub collect_rate: Arr2,
    pub usable_rejected: Arr2,
    pub reusable_collected: Arr2,
    /// `[i][t]` units.
    pub demand: Arr2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeterministicParams {
    pub interest_rate: f64,
    /// `[i][t]`
    pub holding_cost: Arr2,
    /// `[i][t]`
    pub backorder_cost: Arr2,
    /// `[i][j][t]`, per unit per day late.
    pub delay_penalty: Arr3,
    /// `[i][j][t]`
    pub reject_loss: Arr3,
    /// `[t][m]`, asks from allowance sellers.
    pub seller_offers: Arr2,
    /// `[t][m]`, bids from allowance buyers.
    pub buyer_offers: Arr2,
    /// `[i][t]`
    pub disassembly_cost: Arr2,
    pub remanufacture_cost: Arr2,
    pub disposal_cost: Arr2,
    /// `[j][t][k][n]`
    pub transport_cost: Arr4,
    /// `[j]`, km.
    pub distance: Arr1,
    /// `[j][t][k][n]`, kg CO2 per km.
    pub transport_emission: Arr4,
    /// `[i][j][t]`, kg CO2 per unit.
    pub production_emission: Arr3,
    /// `[i][t]`, kg CO2 per unit.
    pub remanufacture_emission: Arr2,
    /// `[i][j][t]` qualitative scores on 0..10.
    pub env_management: Arr3,
    pub green_product: Arr3,
    pub recyclability: Arr3,
    pub toxicity: Arr3,
    /// `[t]`, kg CO2.
    pub emission_cap: Arr1,
    /// `[k]`, load breakpoints per truck type.
    pub truck_breakpoints: Arr1,
    /// Set once the first-period prices have been grown by the interest rate.
    #[serde(default)]
    pub prices_propagated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub omega: f64,
    /// Upper bound on allowance bought or sold per period.
    pub market_depth_bound: f64,
}

impl Default for RobustParams {
    fn default() -> Self {
        Self { lambda1: 15.0, lambda2: 15.0, omega: 50.0, market_depth_bound: 10_000.0 }
    }
}

/// Emission regulation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Regime {
    #[default]
    CapAndTrade,
    /// Emission above the cap is fined at `rate[t]` per kg; no trading.
    /// A missing rate means the period's best buying price.
    Penalty {
        #[serde(default)]
        rate: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemInstance {
    pub dims: Dimensions,
    pub scenarios: Vec<ScenarioData>,
    pub det: DeterministicParams,
    pub robust: RobustParams,
    #[serde(default)]
    pub regime: Regime,
}

impl ProblemInstance {
    pub fn probabilities(&self) -> Vec<f64> {
        self.scenarios.iter().map(|s| s.probability).collect()
    }

    /// Highest demand over scenarios for `(i, t)`.
    pub fn max_demand(&self, i: usize, t: usize) -> f64 {
        self.scenarios
            .iter()
            .map(|s| s.demand[i][t])
            .fold(0.0, f64::max)
    }

    /// Cumulative maximum-scenario demand of product `i` through period `t`.
    pub fn cumulative_max_demand(&self, i: usize, t: usize) -> f64 {
        (0..=t).map(|tau| self.max_demand(i, tau)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub field: String,
    pub message: String,
    /// True when the issue is a shape or count mismatch against `dims`.
    #[serde(default)]
    pub structural: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(ValidationIssue { field: field.into(), message: message.into(), structural: false });
    }

    fn push_structural(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.violations.push(ValidationIssue { field: field.into(), message: message.into(), structural: true });
    }

    /// Shape and count mismatches only.
    pub fn structural(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.violations.iter().filter(|v| v.structural)
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for v in &self.violations {
            writeln!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    report: &'a mut ValidationReport,
}

impl Checker<'_> {
    fn shape(&mut self, field: &str, arr: &[impl Shaped], dims: &[usize]) -> bool {
        let ok = dims.first() == Some(&arr.len()) && arr.iter().all(|a| a.conforms(&dims[1..]));
        if !ok {
            self.report.push_structural(field, format!("shape does not match dimensions {dims:?}"));
        }
        ok
    }

    fn range(&mut self, field: &str, values: impl Iterator<Item = f64>, lo: f64, hi: f64) {
        let mut bad = 0usize;
        let mut example = 0.0;
        for v in values {
            if !(v >= lo && v <= hi) {
                if bad == 0 {
                    example = v;
                }
                bad += 1;
            }
        }
        if bad > 0 {
            let what = if hi.is_infinite() { format!("must be >= {lo}") } else { format!("must lie in [{lo}, {hi}]") };
            self.report.push(field, format!("{bad} value(s) out of range (e.g. {example}); {what}"));
        }
    }
}

/// Shape conformance for nested arrays.
trait Shaped {
    fn conforms(&self, dims: &[usize]) -> bool;
    fn flat(&self) -> Vec<f64>;
}

impl Shaped for f64 {
    fn conforms(&self, dims: &[usize]) -> bool {
        dims.is_empty()
    }
    fn flat(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl<T: Shaped> Shaped for Vec<T> {
    fn conforms(&self, dims: &[usize]) -> bool {
        dims.first() == Some(&self.len()) && self.iter().all(|x| x.conforms(&dims[1..]))
    }
    fn flat(&self) -> Vec<f64> {
        self.iter().flat_map(|x| x.flat()).collect()
    }
}

/// Check every invariant of the instance. Violations are returned as data.
pub fn validate_instance(inst: &ProblemInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let d = inst.dims;
    let mut c = Checker { report: &mut report };

    for (name, v) in [
        ("dims.n_products", d.n_products),
        ("dims.n_suppliers", d.n_suppliers),
        ("dims.n_periods", d.n_periods),
        ("dims.n_truck_types", d.n_truck_types),
        ("dims.n_scenarios", d.n_scenarios),
        ("dims.n_market_offers", d.n_market_offers),
    ] {
        if v == 0 {
            c.report.push(name, "must be at least 1");
        }
    }

    if inst.scenarios.len() != d.n_scenarios {
        c.report.push_structural(
            "scenarios",
            format!("{} scenario(s) given, dims say {}", inst.scenarios.len(), d.n_scenarios),
        );
    }
    let total: f64 = inst.scenarios.iter().map(|s| s.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        let shown = (total * 1e9).round() / 1e9;
        c.report.push("scenarios.probability", format!("probabilities sum to {shown}"));
    }

    let (ni, nj, nt, nk, nm) = (d.n_products, d.n_suppliers, d.n_periods, d.n_truck_types, d.n_market_offers);
    for (s, sc) in inst.scenarios.iter().enumerate() {
        let p = |f: &str| format!("scenarios[{s}].{f}");
        c.range(&p("probability"), std::iter::once(sc.probability), 0.0, 1.0);
        if c.shape(&p("purchase_cost"), &sc.purchase_cost, &[ni, nj, nt]) {
            c.range(&p("purchase_cost"), sc.purchase_cost.flat().into_iter(), 0.0, f64::INFINITY);
        }
        if c.shape(&p("delay_days"), &sc.delay_days, &[nj, nt]) {
            c.range(&p("delay_days"), sc.delay_days.flat().into_iter(), 0.0, f64::INFINITY);
        }
        for (name, arr) in [
            ("reject_rate", &sc.reject_rate),
            ("collect_rate", &sc.collect_rate),
            ("usable_rejected", &sc.usable_rejected),
            ("reusable_collected", &sc.reusable_collected),
        ] {
            if c.shape(&p(name), arr, &[ni, nt]) {
                c.range(&p(name), arr.flat().into_iter(), 0.0, 1.0);
            }
        }
        if c.shape(&p("demand"), &sc.demand, &[ni, nt]) {
            c.range(&p("demand"), sc.demand.flat().into_iter(), 0.0, f64::INFINITY);
        }
    }

    let det = &inst.det;
    let nonneg = f64::INFINITY;
    c.range("det.interest_rate", std::iter::once(det.interest_rate), 0.0, nonneg);
    let arr2 = [
        ("det.holding_cost", &det.holding_cost),
        ("det.backorder_cost", &det.backorder_cost),
        ("det.disassembly_cost", &det.disassembly_cost),
        ("det.remanufacture_cost", &det.remanufacture_cost),
        ("det.disposal_cost", &det.disposal_cost),
        ("det.remanufacture_emission", &det.remanufacture_emission),
    ];
    for (name, arr) in arr2 {
        if c.shape(name, arr, &[ni, nt]) {
            c.range(name, arr.flat().into_iter(), 0.0, nonneg);
        }
    }
    for (name, arr) in [("det.delay_penalty", &det.delay_penalty), ("det.reject_loss", &det.reject_loss), ("det.production_emission", &det.production_emission)] {
        if c.shape(name, arr, &[ni, nj, nt]) {
            c.range(name, arr.flat().into_iter(), 0.0, nonneg);
        }
    }
    for (name, arr) in [
        ("det.env_management", &det.env_management),
        ("det.green_product", &det.green_product),
        ("det.recyclability", &det.recyclability),
        ("det.toxicity", &det.toxicity),
    ] {
        if c.shape(name, arr, &[ni, nj, nt]) {
            c.range(name, arr.flat().into_iter(), 0.0, 10.0);
        }
    }
    for (name, arr) in [("det.seller_offers", &det.seller_offers), ("det.buyer_offers", &det.buyer_offers)] {
        if c.shape(name, arr, &[nt, nm]) {
            c.range(name, arr.flat().into_iter(), 0.0, nonneg);
        }
    }
    for (name, arr) in [("det.transport_cost", &det.transport_cost), ("det.transport_emission", &det.transport_emission)] {
        if c.shape(name, arr, &[nj, nt, nk, ECHELONS]) {
            c.range(name, arr.flat().into_iter(), 0.0, nonneg);
        }
    }
    if c.shape("det.distance", &det.distance, &[nj]) {
        c.range("det.distance", det.distance.iter().copied(), 0.0, nonneg);
    }
    if c.shape("det.emission_cap", &det.emission_cap, &[nt]) {
        c.range("det.emission_cap", det.emission_cap.iter().copied(), 0.0, nonneg);
    }
    if c.shape("det.truck_breakpoints", &det.truck_breakpoints, &[nk]) {
        c.range("det.truck_breakpoints", det.truck_breakpoints.iter().copied(), 0.0, nonneg);
        if det.truck_breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
            c.report.push("det.truck_breakpoints", "breakpoints not increasing");
        }
    }

    let r = &inst.robust;
    c.range("robust.lambda1", std::iter::once(r.lambda1), 0.0, nonneg);
    c.range("robust.lambda2", std::iter::once(r.lambda2), 0.0, nonneg);
    c.range("robust.omega", std::iter::once(r.omega), 0.0, nonneg);
    if !(r.market_depth_bound > 0.0 && r.market_depth_bound.is_finite()) {
        c.report.push("robust.market_depth_bound", "must be positive and finite");
    }

    if let Regime::Penalty { rate: Some(rate) } = &inst.regime {
        if c.shape("regime.rate", rate, &[nt]) {
            c.range("regime.rate", rate.iter().copied(), 0.0, nonneg);
        }
    }
    report
}
