//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

mod common;

use std::time::Instant;

use gss_core::analysis::{
    apply_parameter, check_trends, compare_regimes, sale_is_profitable, sweep, SweepParam, SweepReport, SweepSpec,
};
use gss_core::domain::{Dimensions, ProblemInstance, Regime};
use gss_core::formulation::{build_full_model, build_scenario_cost, build_scenario_emission, ObjectiveMode};
use gss_core::instance::{generate_instance, instance_from_json, instance_to_json, GeneratorConfig};
use gss_core::milp::{audit_point, solve_milp, LinExpr, SolveStatus, ToleranceConfig, VarId};
use gss_core::procedure::{audit_report, evaluate_point, Procedure, SolveReport, SolveSettings, Stage};

const AUDIT_TOL: f64 = 1e-6;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

/// Audit tally over every report produced by the run.
#[derive(Default)]
struct Audits {
    reports: usize,
    failures: Vec<String>,
    max_violation: f64,
}

impl Audits {
    fn check(&mut self, label: &str, inst: &ProblemInstance, rep: &SolveReport) {
        self.reports += 1;
        let audit = audit_report(inst, rep, AUDIT_TOL);
        // the penalty regime fines excess emission instead of capping it
        let penalty = matches!(inst.regime, Regime::Penalty { .. });
        let bad: Vec<String> = audit
            .violations
            .iter()
            .filter(|v| !(penalty && v.name.starts_with("cap[")))
            .map(|v| format!("{} by {:.3e}", v.name, v.amount))
            .collect();
        if !penalty {
            self.max_violation = self.max_violation.max(audit.max_violation);
        }
        if !bad.is_empty() {
            self.failures.push(format!("{label}: {}", bad.join(", ")));
        }
    }
}

fn default_instance(seed: u64) -> ProblemInstance {
    generate_instance(&GeneratorConfig::with_seed(seed)).expect("generator")
}

fn value_of(values: &[f64], v: VarId) -> f64 {
    values[v.index()]
}

/// `|sum_s Pr_s [(xi_s - mean) + 2 theta_s] - sum_s Pr_s |xi_s - mean||`,
/// relative to `max(1, sum_s Pr_s |xi_s|)`.
fn identity_error(probs: &[f64], xi: &[f64], theta: &[f64]) -> f64 {
    let mean: f64 = probs.iter().zip(xi).map(|(p, x)| p * x).sum();
    let linear: f64 = probs.iter().zip(xi).zip(theta).map(|((p, x), t)| p * ((x - mean) + 2.0 * t)).sum();
    let exact: f64 = probs.iter().zip(xi).map(|(p, x)| p * (x - mean).abs()).sum();
    let scale: f64 = probs.iter().zip(xi).map(|(p, x)| p * x.abs()).sum::<f64>().max(1.0);
    (linear - exact).abs() / scale
}

fn linearization_identity(audits: &mut Audits) -> Verdict {
    let settings = SolveSettings::default();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut problems = Vec::new();
    for seed in 0..20 {
        let inst = default_instance(seed);
        let probs = inst.probabilities();
        let proc = Procedure::new(settings);
        for stage in [Stage::Cost, Stage::Emission] {
            let res = match proc.solve_individual(&inst, stage) {
                Ok(r) => r,
                Err(e) => {
                    problems.push(format!("seed {seed} {stage}: {e}"));
                    continue;
                }
            };
            let vals = &res.solution.values;
            let eval = evaluate_point(&inst, &res.vars, vals);
            // only the deviation carried by the stage objective is priced
            let (xi, theta) = match stage {
                Stage::Cost => (&eval.xi1, &res.vars.theta1),
                _ => (&eval.xi2, &res.vars.theta2),
            };
            let theta: Vec<f64> = theta.iter().map(|&v| value_of(vals, v)).collect();
            worst = worst.max(identity_error(&probs, xi, &theta));
            checked += 1;
        }
        match proc.full_solve(&inst) {
            Ok((rep, _)) => {
                audits.check(&format!("identity seed {seed}"), &inst, &rep);
                worst = worst.max(identity_error(&probs, &rep.xi1, &rep.theta1));
                worst = worst.max(identity_error(&probs, &rep.xi2, &rep.theta2));
                checked += 2;
            }
            Err(e) => problems.push(format!("seed {seed} combined: {e}")),
        }
    }
    let passed = problems.is_empty() && worst <= 1e-6;
    let mut detail = format!("{checked} optima over 20 seeds, max relative error {worst:.2e} (tol 1e-6)");
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join("; ")));
    }
    verdict(passed, detail)
}

fn expected_value_optimum(inst: &ProblemInstance, settings: &SolveSettings, emission: bool) -> Option<f64> {
    let mode = if emission { ObjectiveMode::EmissionRobust } else { ObjectiveMode::CostRobust };
    let (mut model, vars) = build_full_model(inst, mode, &settings.options).ok()?;
    let mut obj = LinExpr::new();
    for (s, p) in inst.probabilities().into_iter().enumerate() {
        let xi = if emission { build_scenario_emission(inst, s, &vars) } else { build_scenario_cost(inst, s, &vars) };
        obj.add_scaled(&xi, p);
    }
    model.set_objective(obj.compacted());
    let sol = solve_milp(&model, &settings.tol).ok()?;
    (sol.status == SolveStatus::Optimal).then_some(sol.objective)
}

fn degenerate_robustness() -> Verdict {
    let settings = SolveSettings::default();
    let dims = Dimensions { n_products: 2, n_suppliers: 2, n_periods: 2, n_scenarios: 2, ..Dimensions::default() };
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    for seed in 0..20 {
        let mut inst = generate_instance(&GeneratorConfig { seed, dims, ..Default::default() }).expect("generator");
        inst.robust.lambda1 = 0.0;
        inst.robust.lambda2 = 0.0;
        inst.robust.omega = 0.0;
        let proc = Procedure::new(settings);
        for (stage, emission) in [(Stage::Cost, false), (Stage::Emission, true)] {
            let robust = proc.solve_individual(&inst, stage).map(|r| r.optimum);
            match (robust, expected_value_optimum(&inst, &settings, emission)) {
                (Ok(r), Some(ev)) => worst = worst.max((r - ev).abs() / ev.abs().max(1.0)),
                _ => problems.push(format!("seed {seed} {stage}: no optimum")),
            }
        }
    }
    let passed = problems.is_empty() && worst <= 1e-6;
    let mut detail = format!("20 instances x 2 objectives, max relative difference {worst:.2e} (tol 1e-6)");
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join("; ")));
    }
    verdict(passed, detail)
}

fn solver_oracle() -> Verdict {
    let tol = ToleranceConfig::default();
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut infeasible = 0;
    let mut problems = Vec::new();
    for seed in 0..100u64 {
        let model = common::random_model(seed);
        let oracle = common::enumerate(&model, &tol);
        let got = match solve_milp(&model, &tol) {
            Ok(s) => s,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        match oracle {
            None if got.status == SolveStatus::Infeasible => infeasible += 1,
            None => problems.push(format!("seed {seed}: {:?} but enumeration found nothing", got.status)),
            Some(best) if got.status == SolveStatus::Optimal => {
                worst = worst.max((got.objective - best).abs() / best.abs().max(1.0));
                if !audit_point(&model, &got.values, AUDIT_TOL).is_clean() {
                    problems.push(format!("seed {seed}: point fails the audit"));
                }
            }
            Some(best) => problems.push(format!("seed {seed}: {:?}, enumeration {best}", got.status)),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = problems.is_empty() && worst <= 1e-6 && secs < 300.0;
    let mut detail =
        format!("100 models ({infeasible} infeasible), max relative difference {worst:.2e} (tol 1e-6), {secs:.1} s");
    if !problems.is_empty() {
        detail.push_str(&format!("; {}", problems.join("; ")));
    }
    verdict(passed, detail)
}

/// Library sweep for the trends, plus an audit of each point's report.
fn audited_sweep(base: &ProblemInstance, param: SweepParam, values: &[f64], audits: &mut Audits) -> SweepReport {
    let settings = SolveSettings::default();
    let rep = sweep(base, &SweepSpec::new(param, values.to_vec()), &settings, Some(1)).expect("valid sweep");
    let proc = Procedure::new(settings);
    for &v in values {
        let inst = apply_parameter(base, param, v);
        if let Ok((r, _)) = proc.full_solve(&inst) {
            audits.check(&format!("{} = {v}", param.name()), &inst, &r);
        }
    }
    rep
}

fn trend_verdict(rep: &SweepReport, columns: &[&str]) -> Verdict {
    let checks = check_trends(rep);
    let passed = !checks.is_empty() && checks.iter().all(|c| c.passed);
    let lines: Vec<String> = checks.iter().map(|c| c.to_string()).collect();
    let series: Vec<String> = columns
        .iter()
        .map(|c| {
            let vals: Vec<String> = rep.column(c).iter().map(|v| format!("{v:.4}")).collect();
            format!("{c} [{}]", vals.join(", "))
        })
        .collect();
    verdict(passed, format!("{}; {}", lines.join("; "), series.join("; ")))
}

fn omega_trend(base: &ProblemInstance, audits: &mut Audits) -> Verdict {
    let rep = audited_sweep(base, SweepParam::Omega, &[0.0, 10.0, 20.0, 30.0, 40.0, 50.0], audits);
    trend_verdict(&rep, &["total_infeasibility", "z_total"])
}

fn lambda_trends(base: &ProblemInstance, audits: &mut Audits) -> Verdict {
    let l1 = audited_sweep(base, SweepParam::Lambda1, &[0.0, 5.0, 10.0, 15.0, 20.0, 25.0], audits);
    let l2 = audited_sweep(base, SweepParam::Lambda2, &[0.0, 5.0, 10.0, 15.0, 24.0], audits);
    let a = trend_verdict(&l1, &["deviation1", "z1"]);
    let b = trend_verdict(&l2, &["z2"]);
    verdict(a.passed && b.passed, format!("lambda1: {} | lambda2: {}", a.detail, b.detail))
}

fn cap_trend(base: &ProblemInstance, audits: &mut Audits) -> Verdict {
    let rep = audited_sweep(base, SweepParam::CapScale, &[0.0, -0.1, -0.2, -0.3, -0.4, -0.5], audits);
    trend_verdict(&rep, &["z1", "total_buy", "total_sell"])
}

fn arbitrage(base: &ProblemInstance, audits: &mut Audits) -> Verdict {
    let depth = base.robust.market_depth_bound * base.dims.n_periods as f64;
    let bp = audited_sweep(base, SweepParam::BpScale, &[0.0, 0.1], audits);
    let raised = &bp.rows[1];
    let larger = raised.total_buy.max(raised.total_sell);
    let saturated = raised.ok() && raised.arbitrage && larger >= depth * (1.0 - 1e-6);

    let sp = audited_sweep(base, SweepParam::SpScale, &[0.0, 0.1], audits);
    let (b0, b1) = (&sp.rows[0], &sp.rows[1]);
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    // different price data reaches the same vertex up to round-off
    let trade_drift = b0.buy.iter().chain(&b0.sell).zip(b1.buy.iter().chain(&b1.sell)).map(|(a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let same_plan = b0.ok() && b1.ok() && trade_drift <= 1e-9;
    let checks = check_trends(&sp);
    let unchanged = same_plan && checks.iter().all(|c| c.passed);
    let drift = rel(b0.z1, b1.z1).max(rel(b0.z2, b1.z2)).max(rel(b0.z3, b1.z3)).max(rel(b0.z_total, b1.z_total));
    verdict(
        saturated && unchanged,
        format!(
            "BP +10%: flag {}, sum buy {:.1}, sum sell {:.1}, total depth {depth:.1} (smaller side trails by the net position {:.1}); \
             SP +10%: max trade drift {trade_drift:.2e}, max objective drift {drift:.2e}",
            raised.arbitrage,
            raised.total_buy,
            raised.total_sell,
            (raised.total_sell - raised.total_buy).abs()
        ),
    )
}

fn regime_comparison(audits: &mut Audits) -> Verdict {
    let settings = SolveSettings::default();
    let caps = [0.0, -0.1, -0.2, -0.3];
    let (mut cells, mut no_worse) = (0, 0);
    let mut embedding_misses = Vec::new();
    let mut problems = Vec::new();
    for seed in 0..10 {
        let inst = default_instance(seed);
        let profitable = sale_is_profitable(&inst);
        let cmp = match compare_regimes(&inst, &caps, None, &settings, Some(1)) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("seed {seed}: {e}"));
                continue;
            }
        };
        for row in &cmp.rows {
            cells += 1;
            if !(row.trade.ok() && row.penalty.ok()) {
                problems.push(format!("seed {seed} cap {}: {} / {}", row.cap_scale, row.trade.status, row.penalty.status));
                continue;
            }
            if row.trade_no_worse() {
                no_worse += 1;
            } else if profitable {
                embedding_misses.push(format!("seed {seed} cap {} gap {:.3e}", row.cap_scale, row.gap));
            }
        }
        let proc = Procedure::new(settings);
        for &cap in &caps {
            let trade = apply_parameter(&inst, SweepParam::CapScale, cap);
            if let Ok((r, _)) = proc.full_solve(&trade) {
                audits.check(&format!("regimes seed {seed} cap {cap}"), &trade, &r);
            }
            let mut pen = trade.clone();
            pen.regime = Regime::Penalty { rate: None };
            if let Ok((r, _)) = proc.full_solve(&pen) {
                audits.check(&format!("penalty seed {seed} cap {cap}"), &pen, &r);
            }
        }
    }
    let share = no_worse as f64 / cells.max(1) as f64;
    let passed = problems.is_empty() && share >= 0.7 && embedding_misses.is_empty();
    let mut detail = format!("cap-and-trade no worse in {no_worse}/{cells} cells ({:.0}%, need 70%)", 100.0 * share);
    for list in [&embedding_misses, &problems] {
        if !list.is_empty() {
            detail.push_str(&format!("; {}", list.join("; ")));
        }
    }
    verdict(passed, detail)
}

fn runtime(audits: &mut Audits) -> Verdict {
    let mut settings = SolveSettings::default();
    settings.tol.rel_gap = 1e-4;
    let inst = default_instance(0);
    let start = Instant::now();
    let result = Procedure::new(settings).full_solve(&inst);
    let secs = start.elapsed().as_secs_f64();
    match result {
        Ok((rep, _)) => {
            audits.check("runtime", &inst, &rep);
            verdict(secs < 300.0, format!("I=4 J=5 T=4 K=3 S=3 full solve in {secs:.2} s (limit 300 s)"))
        }
        Err(e) => verdict(false, format!("{e} after {secs:.2} s")),
    }
}

fn reproducibility(audits: &mut Audits) -> Verdict {
    let run = |audits: &mut Audits| -> Option<(String, String)> {
        let text = instance_to_json(&default_instance(0));
        let inst = instance_from_json(&text).ok()?;
        let (rep, _) = Procedure::new(SolveSettings::default()).full_solve(&inst).ok()?;
        audits.check("reproducibility", &inst, &rep);
        Some((text, rep.to_json()))
    };
    match (run(audits), run(audits)) {
        (Some(a), Some(b)) => {
            verdict(a == b, format!("instance {} bytes, report {} bytes, identical: {}", a.0.len(), a.1.len(), a == b))
        }
        _ => verdict(false, "a run failed"),
    }
}

fn main() {
    let start = Instant::now();
    let base = default_instance(0);
    let mut audits = Audits::default();
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |n: u32, name: &'static str, v: Verdict| {
        println!("[{}] {n:>2} {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };

    record(1, "linearization identity", linearization_identity(&mut audits));
    record(2, "degenerate robustness equals expected value", degenerate_robustness());
    record(3, "branch-and-bound matches enumeration", solver_oracle());
    let omega = omega_trend(&base, &mut audits);
    let lambda = lambda_trends(&base, &mut audits);
    let cap = cap_trend(&base, &mut audits);
    let arb = arbitrage(&base, &mut audits);
    let regimes = regime_comparison(&mut audits);
    let rt = runtime(&mut audits);
    let repro = reproducibility(&mut audits);
    let audit_verdict = verdict(
        audits.failures.is_empty(),
        format!(
            "{} reports, max cap-and-trade violation {:.2e} (tol 1e-6){}",
            audits.reports,
            audits.max_violation,
            if audits.failures.is_empty() { String::new() } else { format!("; {}", audits.failures.join("; ")) }
        ),
    );
    record(4, "feasibility audit", audit_verdict);
    record(5, "omega trend", omega);
    record(6, "lambda1 and lambda2 trends", lambda);
    record(7, "cap trend", cap);
    record(8, "arbitrage", arb);
    record(9, "regime comparison", regimes);
    record(10, "desk-scale runtime", rt);
    record(11, "reproducibility", repro);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.1} s{}",
        results.len() - failed.len(),
        results.len(),
        start.elapsed().as_secs_f64(),
        if failed.is_empty() { String::new() } else { format!(", failed {failed:?}") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
