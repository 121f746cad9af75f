//! One product, supplier, period, truck type and scenario: the order `x` is
//! the only real decision, every other variable has a closed-form best
//! response, so each objective is piecewise linear in `x`. Searching a grid
//! plus every kink gives the exact optimum to compare the solver against.

use gss_core::domain::{Dimensions, ProblemInstance, BUYER_ECHELON};
use gss_core::instance::{generate_instance, GeneratorConfig};
use gss_core::procedure::{full_solve, solve_individual, SolveSettings, Stage};

fn tiny(seed: u64) -> ProblemInstance {
    let dims = Dimensions {
        n_products: 1,
        n_suppliers: 1,
        n_periods: 1,
        n_truck_types: 1,
        n_scenarios: 1,
        n_market_offers: 2,
    };
    let mut inst = generate_instance(&GeneratorConfig { seed, dims, ..Default::default() }).unwrap();
    match seed % 3 {
        // emissions above the cap force a purchase
        1 => inst.det.emission_cap[0] = 2.0,
        // robustness weights off, so leftovers go to the cheapest slack
        2 => {
            inst.robust.omega = 1.0;
            inst.robust.lambda1 = 0.0;
        }
        _ => {}
    }
    inst
}

/// Closed-form pieces of the tiny model as functions of the order `x`.
struct Tiny {
    unit_cost: f64,
    fixed_cost: f64,
    unit_emission: f64,
    fixed_emission: f64,
    supply: f64,
    demand: f64,
    hold: f64,
    back: f64,
    omega: f64,
    cap: f64,
    depth: f64,
    buy_price: f64,
    sell_price: f64,
    score: f64,
    max_load: f64,
}

impl Tiny {
    fn new(inst: &ProblemInstance) -> Self {
        let sc = &inst.scenarios[0];
        let det = &inst.det;
        let (e, p, u, v) = (sc.reject_rate[0][0], sc.collect_rate[0][0], sc.usable_rejected[0][0], sc.reusable_collected[0][0]);
        let unit_cost = sc.delay_days[0][0] * det.delay_penalty[0][0][0]
            + e * det.reject_loss[0][0][0]
            + sc.purchase_cost[0][0][0]
            + (e + p) * det.disassembly_cost[0][0]
            + (e * u + p * v) * det.remanufacture_cost[0][0]
            + (e * (1.0 - u) + p * (1.0 - v)) * det.disposal_cost[0][0];
        // the zero-load block is always selected on both echelons
        let fixed_cost = det.transport_cost[0][0][0][0] + det.transport_cost[0][0][0][1];
        let fixed_emission = det.distance[0] * det.transport_emission[0][0][0][BUYER_ECHELON];
        let unit_emission = det.production_emission[0][0][0] + (e * u + p * v) * det.remanufacture_emission[0][0];
        Tiny {
            unit_cost,
            fixed_cost,
            unit_emission,
            fixed_emission,
            supply: 1.0 + e * u + p * v,
            demand: sc.demand[0][0],
            hold: det.holding_cost[0][0],
            back: det.backorder_cost[0][0],
            omega: inst.robust.omega,
            cap: det.emission_cap[0],
            depth: inst.robust.market_depth_bound,
            buy_price: det.seller_offers[0].iter().copied().fold(f64::INFINITY, f64::min),
            sell_price: det.buyer_offers[0].iter().copied().fold(f64::NEG_INFINITY, f64::max),
            score: det.env_management[0][0][0] + det.green_product[0][0][0] + det.recyclability[0][0][0] + det.toxicity[0][0][0],
            max_load: det.truck_breakpoints[0],
        }
    }

    fn emission(&self, x: f64) -> f64 {
        self.fixed_emission + self.unit_emission * x
    }

    fn gap(&self, x: f64) -> f64 {
        self.demand - self.supply * x
    }

    fn feasible(&self, x: f64) -> bool {
        self.gap(x).abs() <= 2.0 * self.demand + 1e-9 && self.emission(x) - self.cap <= self.depth + 1e-9
    }

    /// Cheapest way to absorb `amount` with an inventory-type slack (capacity
    /// = demand) and the infeasibility slack (capacity = demand).
    fn fill(&self, amount: f64, inventory_cost: f64, slack_cost: f64) -> f64 {
        let (first, second) = if inventory_cost <= slack_cost { (inventory_cost, slack_cost) } else { (slack_cost, inventory_cost) };
        let a = amount.min(self.demand);
        first * a + second * (amount - a).max(0.0)
    }

    /// Net allowance cost of the cheapest trade that keeps the cap row.
    fn trade(&self, x: f64) -> f64 {
        let net = self.cap - self.emission(x);
        if net >= 0.0 {
            -self.sell_price.max(0.0) * net.min(self.depth)
        } else {
            self.buy_price * -net
        }
    }

    /// `(z1, z2)` parts given weights on each, plus the deviation slack
    /// chosen jointly; with one scenario the deviation terms vanish.
    fn weighted(&self, x: f64, w1: f64, w2: f64) -> f64 {
        let g = self.gap(x);
        let slack = (w1 + w2) * self.omega;
        let residual = if g >= 0.0 { self.fill(g, w1 * self.back, slack) } else { self.fill(-g, w1 * self.hold, slack) };
        w1 * (self.unit_cost * x + self.fixed_cost + self.trade(x)) + w2 * self.emission(x) + residual
    }

    fn candidates(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = (0..=2000).map(|k| self.max_load * k as f64 / 2000.0).collect();
        for g in [0.0, self.demand, -self.demand] {
            xs.push((self.demand - g) / self.supply);
        }
        for e in [self.cap, self.cap + self.depth, self.cap - self.depth] {
            xs.push((e - self.fixed_emission) / self.unit_emission);
        }
        xs.into_iter().filter(|x| (0.0..=self.max_load).contains(x) && self.feasible(*x)).collect()
    }

    fn min_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.candidates().into_iter().map(f).fold(f64::INFINITY, f64::min)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn individual_optima_match_grid_search() {
    let settings = SolveSettings::default();
    for seed in 0..9 {
        let inst = tiny(seed);
        let o = Tiny::new(&inst);
        let z1 = o.min_of(|x| o.weighted(x, 1.0, 0.0));
        let z2 = o.min_of(|x| o.weighted(x, 0.0, 1.0));
        let z3 = -o.min_of(|x| -o.score * x);
        let s1 = solve_individual(&inst, Stage::Cost, &settings).unwrap().optimum;
        let s2 = solve_individual(&inst, Stage::Emission, &settings).unwrap().optimum;
        let s3 = solve_individual(&inst, Stage::Quality, &settings).unwrap().optimum;
        assert!(rel(s1, z1) < 1e-6, "seed {seed}: z1* {s1} vs grid {z1}");
        assert!(rel(s2, z2) < 1e-6, "seed {seed}: z2* {s2} vs grid {z2}");
        assert!(rel(s3, z3) < 1e-6, "seed {seed}: z3* {s3} vs grid {z3}");
    }
}

#[test]
fn combined_total_matches_grid_search() {
    let settings = SolveSettings::default();
    for seed in 0..9 {
        let inst = tiny(seed);
        let o = Tiny::new(&inst);
        let (rep, _) = full_solve(&inst, &settings).unwrap();
        let (w1, w2, w3) = (1.0 / rep.z1_star.abs(), 1.0 / rep.z2_star.abs(), 1.0 / rep.z3_star.abs());
        let offset = -rep.z1_star * w1 - rep.z2_star * w2 + rep.z3_star * w3;
        let best = o.min_of(|x| o.weighted(x, w1, w2) - w3 * o.score * x) + offset;
        assert!((rep.z_total - best).abs() < 1e-6 * (1.0 + best.abs()), "seed {seed}: z_total {} vs grid {best}", rep.z_total);
    }
}

