//! Random instance generation, interest-rate price growth, market trade
//! prices, and instance file I/O.
//!
//! Generator stream order: one ChaCha8 stream seeded from `seed`, families
//! drawn in the order of [`TableBounds`]'s fields, each family's indices
//! visited row-major with the scenario index innermost. First-period values
//! only are drawn for the nine priced families; later periods come from
//! [`propagate_interest`].

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    validate_instance, DeterministicParams, Dimensions, ProblemInstance, Regime, RobustParams, ScenarioData,
    ECHELONS,
};

/// Closed interval for a uniform draw, written `[low, high]` in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound(pub f64, pub f64);

impl Bound {
    pub fn low(&self) -> f64 {
        self.0
    }
    pub fn high(&self) -> f64 {
        self.1
    }
}

/// Uniform bounds per parameter family. Families listed as vectors vary by
/// scenario (or truck type); when the instance has a different count the
/// entries are spread over it by index (first and last always used).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableBounds {
    pub purchase_cost: Vec<Bound>,
    pub holding_cost: Bound,
    pub backorder_cost: Bound,
    pub delay_days: Vec<Bound>,
    pub delay_penalty: Bound,
    pub reject_rate: Vec<Bound>,
    pub collect_rate: Vec<Bound>,
    pub usable_rejected: Vec<Bound>,
    pub reusable_collected: Vec<Bound>,
    pub reject_loss: Bound,
    pub seller_offers: Bound,
    pub buyer_offers: Bound,
    pub disassembly_cost: Bound,
    pub remanufacture_cost: Bound,
    pub disposal_cost: Bound,
    /// Per truck type, `[supplier echelon, buyer echelon]`.
    pub transport_cost: Vec<[Bound; 2]>,
    pub demand: Vec<Bound>,
    pub distance: Bound,
    /// Per truck type, same for both echelons.
    pub transport_emission: Vec<Bound>,
    pub production_emission: Bound,
    pub remanufacture_emission: Bound,
    pub env_management: Bound,
    pub green_product: Bound,
    pub recyclability: Bound,
    pub toxicity: Bound,
    pub emission_cap: Bound,
}

impl Default for TableBounds {
    fn default() -> Self {
        let score = Bound(1.0, 10.0);
        Self {
            purchase_cost: vec![Bound(10.0, 23.0), Bound(11.5, 26.0), Bound(13.0, 30.0)],
            holding_cost: Bound(28.0, 35.0),
            backorder_cost: Bound(33.0, 41.0),
            delay_days: vec![Bound(0.0, 5.0)],
            delay_penalty: Bound(6.0, 12.0),
            reject_rate: vec![Bound(0.03, 0.092), Bound(0.035, 0.126), Bound(0.04, 0.145)],
            collect_rate: vec![Bound(0.02, 0.08), Bound(0.023, 0.092), Bound(0.027, 0.105)],
            usable_rejected: vec![Bound(0.6, 0.9), Bound(0.62, 0.93), Bound(0.63, 0.94)],
            reusable_collected: vec![Bound(0.6, 0.9), Bound(0.72, 0.93), Bound(0.73, 0.94)],
            reject_loss: Bound(5.0, 11.0),
            seller_offers: Bound(4000.0, 4020.0),
            buyer_offers: Bound(3980.0, 4000.0),
            disassembly_cost: Bound(4.0, 7.0),
            remanufacture_cost: Bound(10.0, 17.0),
            disposal_cost: Bound(3.0, 5.0),
            transport_cost: vec![
                [Bound(28.0, 37.0), Bound(29.0, 38.0)],
                [Bound(35.0, 40.0), Bound(36.0, 41.0)],
                [Bound(39.0, 52.0), Bound(40.0, 53.0)],
            ],
            demand: vec![Bound(2500.0, 4600.0), Bound(2930.0, 4760.0), Bound(3070.0, 4990.0)],
            distance: Bound(3.0, 7.0),
            transport_emission: vec![Bound(0.29, 0.37), Bound(0.33, 0.46), Bound(0.41, 0.49)],
            production_emission: Bound(0.006, 0.012),
            remanufacture_emission: Bound(0.006, 0.012),
            env_management: score,
            green_product: score,
            recyclability: score,
            toxicity: score,
            emission_cap: Bound(170.0, 200.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub dims: Dimensions,
    pub bounds: TableBounds,
    /// Defaults to (0.2, 0.6, 0.2) for three scenarios, uniform otherwise.
    pub probabilities: Option<Vec<f64>>,
    pub interest_rate: f64,
    /// Defaults to (3000, 6000, 14000), truncated or extended to the truck count.
    pub truck_breakpoints: Option<Vec<f64>>,
    pub robust: RobustParams,
    pub regime: Regime,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dims: Dimensions::default(),
            bounds: TableBounds::default(),
            probabilities: None,
            interest_rate: 0.04,
            truck_breakpoints: None,
            robust: RobustParams::default(),
            regime: Regime::CapAndTrade,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn probabilities(&self) -> Vec<f64> {
        let s = self.dims.n_scenarios;
        match &self.probabilities {
            Some(p) => p.clone(),
            None if s == 3 => vec![0.2, 0.6, 0.2],
            None => vec![1.0 / s as f64; s],
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        if let Some(m) = &self.truck_breakpoints {
            return m.clone();
        }
        let mut m = vec![3000.0, 6000.0, 14000.0];
        while m.len() < self.dims.n_truck_types {
            let next = m[m.len() - 1] + 8000.0;
            m.push(next);
        }
        m.truncate(self.dims.n_truck_types);
        m
    }

    /// Check every bound pair and the derived vectors; the first problem found
    /// is returned with the offending field's name.
    pub fn validate(&self) -> Result<(), InstanceError> {
        let d = self.dims;
        for (name, v) in [
            ("dims.n_products", d.n_products),
            ("dims.n_suppliers", d.n_suppliers),
            ("dims.n_periods", d.n_periods),
            ("dims.n_truck_types", d.n_truck_types),
            ("dims.n_scenarios", d.n_scenarios),
            ("dims.n_market_offers", d.n_market_offers),
        ] {
            if v == 0 {
                return Err(config(name, "must be at least 1"));
            }
        }
        let b = &self.bounds;
        let scalars = [
            ("holding_cost", b.holding_cost, f64::INFINITY),
            ("backorder_cost", b.backorder_cost, f64::INFINITY),
            ("delay_penalty", b.delay_penalty, f64::INFINITY),
            ("reject_loss", b.reject_loss, f64::INFINITY),
            ("seller_offers", b.seller_offers, f64::INFINITY),
            ("buyer_offers", b.buyer_offers, f64::INFINITY),
            ("disassembly_cost", b.disassembly_cost, f64::INFINITY),
            ("remanufacture_cost", b.remanufacture_cost, f64::INFINITY),
            ("disposal_cost", b.disposal_cost, f64::INFINITY),
            ("distance", b.distance, f64::INFINITY),
            ("production_emission", b.production_emission, f64::INFINITY),
            ("remanufacture_emission", b.remanufacture_emission, f64::INFINITY),
            ("env_management", b.env_management, 10.0),
            ("green_product", b.green_product, 10.0),
            ("recyclability", b.recyclability, 10.0),
            ("toxicity", b.toxicity, 10.0),
            ("emission_cap", b.emission_cap, f64::INFINITY),
        ];
        for (name, bound, max) in scalars {
            check_bound(&format!("bounds.{name}"), bound, max)?;
        }
        let lists: [(&str, &Vec<Bound>, f64); 8] = [
            ("purchase_cost", &b.purchase_cost, f64::INFINITY),
            ("delay_days", &b.delay_days, f64::INFINITY),
            ("reject_rate", &b.reject_rate, 1.0),
            ("collect_rate", &b.collect_rate, 1.0),
            ("usable_rejected", &b.usable_rejected, 1.0),
            ("reusable_collected", &b.reusable_collected, 1.0),
            ("demand", &b.demand, f64::INFINITY),
            ("transport_emission", &b.transport_emission, f64::INFINITY),
        ];
        for (name, list, max) in lists {
            if list.is_empty() {
                return Err(config(&format!("bounds.{name}"), "needs at least one bound"));
            }
            for (k, &bound) in list.iter().enumerate() {
                check_bound(&format!("bounds.{name}[{k}]"), bound, max)?;
            }
        }
        if b.transport_cost.is_empty() {
            return Err(config("bounds.transport_cost", "needs at least one bound"));
        }
        for (k, pair) in b.transport_cost.iter().enumerate() {
            for (n, &bound) in pair.iter().enumerate() {
                check_bound(&format!("bounds.transport_cost[{k}][{n}]"), bound, f64::INFINITY)?;
            }
        }

        let p = self.probabilities();
        if p.len() != d.n_scenarios {
            return Err(config(
                "probabilities",
                &format!("{} given but n_scenarios is {}", p.len(), d.n_scenarios),
            ));
        }
        if p.iter().any(|x| !(0.0..=1.0).contains(x)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(config("probabilities", "must lie in [0, 1] and sum to 1"));
        }
        let m = self.breakpoints();
        if m.len() != d.n_truck_types {
            return Err(config(
                "truck_breakpoints",
                &format!("{} given but n_truck_types is {}", m.len(), d.n_truck_types),
            ));
        }
        if m.iter().any(|x| !x.is_finite() || *x < 0.0) || m.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config("truck_breakpoints", "breakpoints not increasing"));
        }
        if !(self.interest_rate.is_finite() && self.interest_rate >= 0.0) {
            return Err(config("interest_rate", "must be finite and >= 0"));
        }
        let r = &self.robust;
        for (name, v) in [("robust.lambda1", r.lambda1), ("robust.lambda2", r.lambda2), ("robust.omega", r.omega)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(config(name, "must be finite and >= 0"));
            }
        }
        if !(r.market_depth_bound.is_finite() && r.market_depth_bound > 0.0) {
            return Err(config("robust.market_depth_bound", "must be positive and finite"));
        }
        Ok(())
    }
}

fn config(field: &str, message: &str) -> InstanceError {
    InstanceError::Config { field: field.to_string(), message: message.to_string() }
}

fn check_bound(field: &str, b: Bound, max: f64) -> Result<(), InstanceError> {
    if !(b.0.is_finite() && b.1.is_finite()) {
        return Err(config(field, "bounds must be finite"));
    }
    if b.0 > b.1 {
        return Err(config(field, &format!("low {} > high {}", b.0, b.1)));
    }
    if b.0 < 0.0 || b.1 > max {
        return Err(config(field, &format!("bounds must lie in [0, {max}]")));
    }
    Ok(())
}

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("configuration error in {field}: {message}")]
    Config { field: String, message: String },
    #[error("prices already propagated; interest growth applies to first-period data only")]
    AlreadyPropagated,
    #[error("data error: {0}")]
    Data(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which entry of a per-scenario (or per-truck) bound list serves index
/// `idx` of `count`.
fn spread(len: usize, idx: usize, count: usize) -> usize {
    if len == 1 {
        return 0;
    }
    if count == 1 {
        return len / 2;
    }
    let num = idx * (len - 1);
    let den = count - 1;
    ((num + den / 2) / den).min(len - 1)
}

struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    fn draw(&mut self, b: Bound) -> f64 {
        if b.0 == b.1 {
            // still consume a value so the stream layout does not depend on the bounds
            let _: f64 = self.rng.gen();
            return b.0;
        }
        self.rng.gen_range(b.0..=b.1)
    }
}

/// Build a random instance. Deterministic in `cfg`.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<ProblemInstance, InstanceError> {
    cfg.validate()?;
    let d = cfg.dims;
    let (ni, nj, nt, nk, ns, nm) =
        (d.n_products, d.n_suppliers, d.n_periods, d.n_truck_types, d.n_scenarios, d.n_market_offers);
    let b = &cfg.bounds;
    let mut g = Sampler { rng: ChaCha8Rng::seed_from_u64(cfg.seed) };
    let per_s = |list: &Vec<Bound>, s: usize| list[spread(list.len(), s, ns)];

    let z2 = |a: usize, c: usize| vec![vec![0.0; c]; a];
    let z3 = |a: usize, c: usize, e: usize| vec![vec![vec![0.0; e]; c]; a];
    let mut sc: Vec<ScenarioData> = cfg
        .probabilities()
        .into_iter()
        .map(|p| ScenarioData {
            probability: p,
            purchase_cost: z3(ni, nj, nt),
            delay_days: z2(nj, nt),
            reject_rate: z2(ni, nt),
            collect_rate: z2(ni, nt),
            usable_rejected: z2(ni, nt),
            reusable_collected: z2(ni, nt),
            demand: z2(ni, nt),
        })
        .collect();

    // scenario-indexed families draw s innermost
    let scen_it = |g: &mut Sampler, sc: &mut Vec<ScenarioData>, list: &Vec<Bound>, pick: fn(&mut ScenarioData) -> &mut Vec<Vec<f64>>, rows: usize| {
        for a in 0..rows {
            for t in 0..nt {
                for (s, data) in sc.iter_mut().enumerate() {
                    pick(data)[a][t] = g.draw(per_s(list, s));
                }
            }
        }
    };

    for i in 0..ni {
        for j in 0..nj {
            for (s, data) in sc.iter_mut().enumerate() {
                data.purchase_cost[i][j][0] = g.draw(per_s(&b.purchase_cost, s));
            }
        }
    }
    let holding: Vec<f64> = (0..ni).map(|_| g.draw(b.holding_cost)).collect();
    let backorder: Vec<f64> = (0..ni).map(|_| g.draw(b.backorder_cost)).collect();
    scen_it(&mut g, &mut sc, &b.delay_days, |d| &mut d.delay_days, nj);
    let delay_penalty: Vec<Vec<f64>> = (0..ni).map(|_| (0..nj).map(|_| g.draw(b.delay_penalty)).collect()).collect();
    scen_it(&mut g, &mut sc, &b.reject_rate, |d| &mut d.reject_rate, ni);
    scen_it(&mut g, &mut sc, &b.collect_rate, |d| &mut d.collect_rate, ni);
    scen_it(&mut g, &mut sc, &b.usable_rejected, |d| &mut d.usable_rejected, ni);
    scen_it(&mut g, &mut sc, &b.reusable_collected, |d| &mut d.reusable_collected, ni);
    let reject_loss: Vec<Vec<f64>> = (0..ni).map(|_| (0..nj).map(|_| g.draw(b.reject_loss)).collect()).collect();
    let seller_offers: Vec<Vec<f64>> = (0..nt).map(|_| (0..nm).map(|_| g.draw(b.seller_offers)).collect()).collect();
    let buyer_offers: Vec<Vec<f64>> = (0..nt).map(|_| (0..nm).map(|_| g.draw(b.buyer_offers)).collect()).collect();
    let disassembly: Vec<f64> = (0..ni).map(|_| g.draw(b.disassembly_cost)).collect();
    let remanufacture: Vec<f64> = (0..ni).map(|_| g.draw(b.remanufacture_cost)).collect();
    let disposal: Vec<f64> = (0..ni).map(|_| g.draw(b.disposal_cost)).collect();
    let tc_first: Vec<Vec<Vec<f64>>> = (0..nj)
        .map(|_| {
            (0..nk)
                .map(|k| {
                    let pair = b.transport_cost[spread(b.transport_cost.len(), k, nk)];
                    (0..ECHELONS).map(|n| g.draw(pair[n])).collect()
                })
                .collect()
        })
        .collect();
    scen_it(&mut g, &mut sc, &b.demand, |d| &mut d.demand, ni);
    let distance: Vec<f64> = (0..nj).map(|_| g.draw(b.distance)).collect();
    let transport_emission: Vec<Vec<Vec<Vec<f64>>>> = (0..nj)
        .map(|_| {
            (0..nt)
                .map(|_| {
                    (0..nk)
                        .map(|k| {
                            let bound = b.transport_emission[spread(b.transport_emission.len(), k, nk)];
                            (0..ECHELONS).map(|_| g.draw(bound)).collect()
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let mut draw3 = |bound: Bound| -> Vec<Vec<Vec<f64>>> {
        (0..ni).map(|_| (0..nj).map(|_| (0..nt).map(|_| g.draw(bound)).collect()).collect()).collect()
    };
    let production_emission = draw3(b.production_emission);
    let remanufacture_emission: Vec<Vec<f64>> =
        (0..ni).map(|_| (0..nt).map(|_| g.draw(b.remanufacture_emission)).collect()).collect();
    let mut draw3 = |bound: Bound| -> Vec<Vec<Vec<f64>>> {
        (0..ni).map(|_| (0..nj).map(|_| (0..nt).map(|_| g.draw(bound)).collect()).collect()).collect()
    };
    let env_management = draw3(b.env_management);
    let green_product = draw3(b.green_product);
    let recyclability = draw3(b.recyclability);
    let toxicity = draw3(b.toxicity);
    let emission_cap: Vec<f64> = (0..nt).map(|_| g.draw(b.emission_cap)).collect();

    let first2 = |v: &[f64]| -> Vec<Vec<f64>> {
        v.iter().map(|&x| {
            let mut row = vec![0.0; nt];
            row[0] = x;
            row
        }).collect()
    };
    let first3 = |v: &[Vec<f64>]| -> Vec<Vec<Vec<f64>>> { v.iter().map(|r| first2(r)).collect() };

    let det = DeterministicParams {
        interest_rate: cfg.interest_rate,
        holding_cost: first2(&holding),
        backorder_cost: first2(&backorder),
        delay_penalty: first3(&delay_penalty),
        reject_loss: first3(&reject_loss),
        seller_offers,
        buyer_offers,
        disassembly_cost: first2(&disassembly),
        remanufacture_cost: first2(&remanufacture),
        disposal_cost: first2(&disposal),
        transport_cost: tc_first
            .iter()
            .map(|per_k| {
                let mut by_t = vec![vec![vec![0.0; ECHELONS]; nk]; nt];
                by_t[0] = per_k.clone();
                by_t
            })
            .collect(),
        distance,
        transport_emission,
        production_emission,
        remanufacture_emission,
        env_management,
        green_product,
        recyclability,
        toxicity,
        emission_cap,
        truck_breakpoints: cfg.breakpoints(),
        prices_propagated: false,
    };
    let inst = ProblemInstance { dims: d, scenarios: sc, det, robust: cfg.robust, regime: cfg.regime.clone() };
    propagate_interest(inst)
}

/// Grow the nine priced families period over period by `1 + ir`:
/// purchase, holding, backorder, delay penalty, rejection loss, disassembly,
/// remanufacturing, disposal and transport costs.
pub fn propagate_interest(mut inst: ProblemInstance) -> Result<ProblemInstance, InstanceError> {
    if inst.det.prices_propagated {
        return Err(InstanceError::AlreadyPropagated);
    }
    let g = 1.0 + inst.det.interest_rate;
    fn grow(row: &mut [f64], g: f64) {
        for t in 1..row.len() {
            row[t] = row[t - 1] * g;
        }
    }
    for s in &mut inst.scenarios {
        s.purchase_cost.iter_mut().flatten().for_each(|r| grow(r, g));
    }
    let det = &mut inst.det;
    for arr in [
        &mut det.holding_cost,
        &mut det.backorder_cost,
        &mut det.disassembly_cost,
        &mut det.remanufacture_cost,
        &mut det.disposal_cost,
    ] {
        arr.iter_mut().for_each(|r| grow(r, g));
    }
    for arr in [&mut det.delay_penalty, &mut det.reject_loss] {
        arr.iter_mut().flatten().for_each(|r| grow(r, g));
    }
    // transport cost is stored [j][t][k][n]; grow along t
    for per_j in &mut det.transport_cost {
        for t in 1..per_j.len() {
            let (head, tail) = per_j.split_at_mut(t);
            for (k, row) in tail[0].iter_mut().enumerate() {
                for (n, v) in row.iter_mut().enumerate() {
                    *v = head[t - 1][k][n] * g;
                }
            }
        }
    }
    det.prices_propagated = true;
    Ok(inst)
}

/// Trade prices per period: `(sell_price, buy_price)` where the manufacturer
/// sells at the highest buyer offer and buys at the lowest seller offer.
pub fn derive_trade_prices(inst: &ProblemInstance) -> Result<(Vec<f64>, Vec<f64>), InstanceError> {
    let det = &inst.det;
    let pick = |offers: &[Vec<f64>], name: &str, best: fn(f64, f64) -> f64| -> Result<Vec<f64>, InstanceError> {
        offers
            .iter()
            .enumerate()
            .map(|(t, row)| {
                row.iter()
                    .copied()
                    .reduce(best)
                    .ok_or_else(|| InstanceError::Data(format!("{name}[{t}] has no offers")))
            })
            .collect()
    };
    let sell = pick(&det.buyer_offers, "buyer_offers", f64::max)?;
    let buy = pick(&det.seller_offers, "seller_offers", f64::min)?;
    Ok((sell, buy))
}

pub fn instance_to_json(inst: &ProblemInstance) -> String {
    let mut s = serde_json::to_string_pretty(inst).expect("instance serializes");
    s.push('\n');
    s
}

/// Parse an instance document and check it against its own dimensions.
pub fn instance_from_json(text: &str) -> Result<ProblemInstance, InstanceError> {
    let inst: ProblemInstance = serde_json::from_str(text).map_err(|e| InstanceError::Schema(e.to_string()))?;
    let report = validate_instance(&inst);
    let structural: Vec<String> = report.structural().map(|v| format!("{}: {}", v.field, v.message)).collect();
    if !structural.is_empty() {
        return Err(InstanceError::Dimension(structural.join("; ")));
    }
    Ok(inst)
}

pub fn save_instance(inst: &ProblemInstance, path: &Path) -> Result<(), InstanceError> {
    std::fs::write(path, instance_to_json(inst))
        .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })
}

pub fn load_instance(path: &Path) -> Result<ProblemInstance, InstanceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| InstanceError::Io { path: path.display().to_string(), source })?;
    instance_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_table() {
        let inst = generate_instance(&GeneratorConfig::with_seed(3)).unwrap();
        assert_eq!(inst.det.interest_rate, 0.04);
        assert_eq!(inst.robust.lambda1, 15.0);
        assert_eq!(inst.robust.lambda2, 15.0);
        assert_eq!(inst.robust.omega, 50.0);
        assert_eq!(inst.det.truck_breakpoints, vec![3000.0, 6000.0, 14000.0]);
        assert_eq!(inst.probabilities(), vec![0.2, 0.6, 0.2]);
        let bounds = [(2500.0, 4600.0), (2930.0, 4760.0), (3070.0, 4990.0)];
        for (s, (lo, hi)) in bounds.into_iter().enumerate() {
            for row in &inst.scenarios[s].demand {
                assert!(row.iter().all(|&d| d >= lo && d <= hi));
            }
        }
        assert!(inst.det.prices_propagated);
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..10 {
            let mut cfg = GeneratorConfig::with_seed(seed);
            cfg.dims.n_scenarios = 1 + (seed as usize % 4);
            cfg.dims.n_truck_types = 1 + (seed as usize % 4);
            cfg.dims.n_market_offers = 1 + (seed as usize % 2);
            let inst = generate_instance(&cfg).unwrap();
            let r = validate_instance(&inst);
            assert!(r.is_valid(), "seed {seed}: {r}");
        }
    }

    #[test]
    fn holding_cost_grows() {
        let mut inst = generate_instance(&GeneratorConfig::with_seed(1)).unwrap();
        inst.det.prices_propagated = false;
        inst.det.holding_cost[0][0] = 30.0;
        let inst = propagate_interest(inst).unwrap();
        assert!((inst.det.holding_cost[0][1] - 31.2).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_keeps_periods_equal() {
        let mut cfg = GeneratorConfig::with_seed(2);
        cfg.interest_rate = 0.0;
        let inst = generate_instance(&cfg).unwrap();
        for row in &inst.det.backorder_cost {
            assert!(row.iter().all(|&v| v == row[0]));
        }
        for per_t in &inst.det.transport_cost {
            assert!(per_t.iter().all(|k| k == &per_t[0]));
        }
    }

    #[test]
    fn purchase_cost_after_three_steps() {
        let mut inst = generate_instance(&GeneratorConfig::with_seed(1)).unwrap();
        inst.det.prices_propagated = false;
        inst.scenarios[0].purchase_cost[0][0][0] = 10.0;
        let inst = propagate_interest(inst).unwrap();
        let mut oracle = 10.0;
        for _ in 0..3 {
            oracle *= 1.04;
        }
        assert!((inst.scenarios[0].purchase_cost[0][0][3] - oracle).abs() < 1e-9);
        assert!((oracle - 11.2486).abs() < 1e-4);
    }

    #[test]
    fn non_price_families_are_not_grown() {
        let mut cfg = GeneratorConfig::with_seed(5);
        cfg.interest_rate = 0.5;
        let a = generate_instance(&cfg).unwrap();
        cfg.interest_rate = 0.0;
        let b = generate_instance(&cfg).unwrap();
        assert_eq!(a.scenarios[0].demand, b.scenarios[0].demand);
        assert_eq!(a.det.emission_cap, b.det.emission_cap);
        assert_eq!(a.det.seller_offers, b.det.seller_offers);
        assert_eq!(a.det.production_emission, b.det.production_emission);
        assert_eq!(a.det.toxicity, b.det.toxicity);
        assert_ne!(a.det.holding_cost, b.det.holding_cost);
    }

    #[test]
    fn second_propagation_is_refused() {
        let inst = generate_instance(&GeneratorConfig::with_seed(1)).unwrap();
        assert!(matches!(propagate_interest(inst), Err(InstanceError::AlreadyPropagated)));
    }

    #[test]
    fn trade_prices_pick_the_best_offers() {
        let mut inst = generate_instance(&GeneratorConfig::with_seed(1)).unwrap();
        inst.det.buyer_offers[0] = vec![3980.0, 3990.0, 4000.0];
        inst.det.seller_offers[0] = vec![4000.0, 4010.0, 4020.0];
        let (sell, buy) = derive_trade_prices(&inst).unwrap();
        assert_eq!(sell[0], 4000.0);
        assert_eq!(buy[0], 4000.0);
        for t in 0..4 {
            assert!(buy[t] >= sell[t]);
        }
        inst.det.buyer_offers[1] = vec![3991.5];
        assert_eq!(derive_trade_prices(&inst).unwrap().0[1], 3991.5);
        inst.det.seller_offers[2].clear();
        assert!(matches!(derive_trade_prices(&inst), Err(InstanceError::Data(_))));
    }

    #[test]
    fn inverted_bound_is_named() {
        let mut cfg = GeneratorConfig::default();
        cfg.bounds.demand[1] = Bound(5000.0, 4760.0);
        let err = generate_instance(&cfg).unwrap_err().to_string();
        assert!(err.contains("bounds.demand[1]"), "{err}");
        assert!(err.contains("low 5000 > high 4760"), "{err}");
    }

    #[test]
    fn spread_covers_ends() {
        assert_eq!((0..3).map(|s| spread(3, s, 3)).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!((0..2).map(|s| spread(3, s, 2)).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(spread(3, 0, 1), 1);
        assert_eq!((0..5).map(|s| spread(3, s, 5)).collect::<Vec<_>>(), vec![0, 1, 1, 2, 2]);
    }
}
