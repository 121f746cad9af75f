//! Parameter sweeps, trend checks and the cap-and-trade vs penalty
//! comparison.
//!
//! Sweep CSVs hold results only; wall-clock times go to a separate timings
//! table so reruns produce identical result files.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ProblemInstance, Regime};
use crate::instance::derive_trade_prices;
use crate::procedure::{Procedure, SolveReport, SolveSettings, StageTiming};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Omega,
    Lambda1,
    Lambda2,
    CapScale,
    BpScale,
    SpScale,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::Omega,
        SweepParam::Lambda1,
        SweepParam::Lambda2,
        SweepParam::CapScale,
        SweepParam::BpScale,
        SweepParam::SpScale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Omega => "omega",
            SweepParam::Lambda1 => "lambda1",
            SweepParam::Lambda2 => "lambda2",
            SweepParam::CapScale => "cap_scale",
            SweepParam::BpScale => "bp_scale",
            SweepParam::SpScale => "sp_scale",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    fn is_scale(self) -> bool {
        matches!(self, SweepParam::CapScale | SweepParam::BpScale | SweepParam::SpScale)
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    /// Seed the base instance was generated from, kept for provenance.
    pub seed: Option<u64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep needs at least one value")]
    Empty,
    #[error("{param} value {value} is invalid: {reason}")]
    BadValue { param: SweepParam, value: f64, reason: &'static str },
}

impl SweepSpec {
    pub fn new(parameter: SweepParam, values: Vec<f64>) -> Self {
        Self { parameter, values, seed: None }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.values.is_empty() {
            return Err(SweepError::Empty);
        }
        for &value in &self.values {
            let bad = |reason| Err(SweepError::BadValue { param: self.parameter, value, reason });
            if !value.is_finite() {
                return bad("not finite");
            }
            if self.parameter.is_scale() && value <= -1.0 {
                return bad("scale factors must be > -1");
            }
            if !self.parameter.is_scale() && value < 0.0 {
                return bad("weights must be >= 0");
            }
        }
        Ok(())
    }
}

/// Copy of `base` with one parameter set to `value`.
pub fn apply_parameter(base: &ProblemInstance, param: SweepParam, value: f64) -> ProblemInstance {
    let mut inst = base.clone();
    let scale = |rows: &mut Vec<Vec<f64>>| rows.iter_mut().flatten().for_each(|v| *v *= 1.0 + value);
    match param {
        SweepParam::Omega => inst.robust.omega = value,
        SweepParam::Lambda1 => inst.robust.lambda1 = value,
        SweepParam::Lambda2 => inst.robust.lambda2 = value,
        SweepParam::CapScale => inst.det.emission_cap.iter_mut().for_each(|c| *c *= 1.0 + value),
        SweepParam::BpScale => scale(&mut inst.det.buyer_offers),
        SweepParam::SpScale => scale(&mut inst.det.seller_offers),
    }
    inst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// `ok` or the failing stage's error message.
    pub status: String,
    pub z_total: f64,
    pub z1: f64,
    pub z2: f64,
    pub z3: f64,
    pub total_infeasibility: f64,
    pub total_buy: f64,
    pub total_sell: f64,
    pub deviation1: f64,
    pub deviation2: f64,
    pub buy: Vec<f64>,
    pub sell: Vec<f64>,
    /// Best selling price above best buying price in some period, and in
    /// every such period the firm both buys and sells with the larger side
    /// at the market depth.
    pub arbitrage: bool,
    /// Best selling price above best buying price in some period.
    pub spread: bool,
    /// Solver status per stage, `/`-separated.
    pub stage_statuses: String,
}

impl SweepRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn from_report(value: f64, inst: &ProblemInstance, rep: &SolveReport) -> Self {
        let depth = inst.robust.market_depth_bound;
        let at = |v: f64| v >= depth - 1e-6 * (1.0 + depth);
        let mut spread = false;
        let mut saturated = true;
        for t in 0..rep.buy.len() {
            if rep.sell_price[t] > rep.buy_price[t] {
                spread = true;
                // the net position buy - sell is pinned by the cap, so depth
                // binds the larger side and the other trails it by that net
                saturated &= at(rep.buy[t].max(rep.sell[t])) && rep.buy[t].min(rep.sell[t]) > 0.0;
            }
        }
        let statuses: Vec<String> = rep
            .stages
            .iter()
            .map(|s| serde_json::to_value(s.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
            .collect();
        SweepRow {
            value,
            status: "ok".into(),
            z_total: rep.z_total,
            z1: rep.z1,
            z2: rep.z2,
            z3: rep.z3,
            total_infeasibility: rep.total_infeasibility,
            total_buy: rep.total_buy(),
            total_sell: rep.total_sell(),
            deviation1: rep.deviation1,
            deviation2: rep.deviation2,
            buy: rep.buy.clone(),
            sell: rep.sell.clone(),
            arbitrage: spread && saturated,
            spread,
            stage_statuses: statuses.join("/"),
        }
    }

    fn failed(value: f64, periods: usize, message: String) -> Self {
        SweepRow {
            value,
            status: message,
            z_total: f64::NAN,
            z1: f64::NAN,
            z2: f64::NAN,
            z3: f64::NAN,
            total_infeasibility: f64::NAN,
            total_buy: f64::NAN,
            total_sell: f64::NAN,
            deviation1: f64::NAN,
            deviation2: f64::NAN,
            buy: vec![f64::NAN; periods],
            sell: vec![f64::NAN; periods],
            arbitrage: false,
            spread: false,
            stage_statuses: String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTiming {
    pub value: f64,
    pub stages: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: SweepParam,
    pub seed: Option<u64>,
    pub rows: Vec<SweepRow>,
    #[serde(skip)]
    pub timings: Vec<SweepTiming>,
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

fn num(v: f64) -> String {
    format!("{v}")
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let periods = self.rows.first().map_or(0, |r| r.buy.len());
        let mut w = csv_writer();
        let mut header: Vec<String> = [
            "parameter",
            "value",
            "status",
            "z_total",
            "z1",
            "z2",
            "z3",
            "total_infeasibility",
            "total_buy",
            "total_sell",
            "deviation1",
            "deviation2",
            "spread",
            "arbitrage",
            "stage_statuses",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend((1..=periods).map(|t| format!("buy_{t}")));
        header.extend((1..=periods).map(|t| format!("sell_{t}")));
        w.write_record(&header).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![
                self.parameter.name().to_string(),
                num(r.value),
                r.status.clone(),
                num(r.z_total),
                num(r.z1),
                num(r.z2),
                num(r.z3),
                num(r.total_infeasibility),
                num(r.total_buy),
                num(r.total_sell),
                num(r.deviation1),
                num(r.deviation2),
                r.spread.to_string(),
                r.arbitrage.to_string(),
                r.stage_statuses.clone(),
            ];
            rec.extend(r.buy.iter().map(|&v| num(v)));
            rec.extend(r.sell.iter().map(|&v| num(v)));
            w.write_record(&rec).expect("in-memory write");
        }
        finish_csv(w)
    }

    /// Wall-clock seconds per stage, one row per sweep value.
    pub fn timings_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["value", "cost_s", "emission_s", "quality_s", "combined_s"]).expect("in-memory write");
        for t in &self.timings {
            let mut rec = vec![num(t.value)];
            let mut secs: Vec<String> = t.stages.iter().map(|s| format!("{:.6}", s.seconds)).collect();
            secs.resize(4, String::new());
            rec.extend(secs);
            w.write_record(&rec).expect("in-memory write");
        }
        finish_csv(w)
    }

    pub fn column(&self, name: &str) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| match name {
                "z_total" => r.z_total,
                "z1" => r.z1,
                "z2" => r.z2,
                "z3" => r.z3,
                "total_infeasibility" => r.total_infeasibility,
                "total_buy" => r.total_buy,
                "total_sell" => r.total_sell,
                "deviation1" => r.deviation1,
                "deviation2" => r.deviation2,
                _ => f64::NAN,
            })
            .collect()
    }
}

fn pool(workers: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}

/// One full two-step solve per value, rows in input order.
pub fn sweep(base: &ProblemInstance, spec: &SweepSpec, settings: &SolveSettings, workers: Option<usize>) -> Result<SweepReport, SweepError> {
    spec.validate()?;
    let proc = Procedure::new(*settings);
    let periods = base.dims.n_periods;
    let results: Vec<(SweepRow, SweepTiming)> = pool(workers).install(|| {
        spec.values
            .par_iter()
            .map(|&value| {
                let inst = apply_parameter(base, spec.parameter, value);
                match proc.full_solve(&inst) {
                    Ok((rep, stages)) => (SweepRow::from_report(value, &inst, &rep), SweepTiming { value, stages }),
                    Err(e) => (SweepRow::failed(value, periods, e.to_string()), SweepTiming { value, stages: Vec::new() }),
                }
            })
            .collect()
    });
    let (rows, timings) = results.into_iter().unzip();
    Ok(SweepReport { parameter: spec.parameter, seed: spec.seed, rows, timings })
}

pub fn sweep_cap(base: &ProblemInstance, values: Vec<f64>, settings: &SolveSettings, workers: Option<usize>) -> Result<SweepReport, SweepError> {
    sweep(base, &SweepSpec::new(SweepParam::CapScale, values), settings, workers)
}

/// Price sweep over `bp_scale` or `sp_scale`.
pub fn sweep_prices(
    base: &ProblemInstance,
    param: SweepParam,
    values: Vec<f64>,
    settings: &SolveSettings,
    workers: Option<usize>,
) -> Result<SweepReport, SweepError> {
    if !matches!(param, SweepParam::BpScale | SweepParam::SpScale) {
        return Err(SweepError::BadValue { param, value: f64::NAN, reason: "price sweeps take bp_scale or sp_scale" });
    }
    sweep(base, &SweepSpec::new(param, values), settings, workers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for TrendCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{}: {verdict}", self.name)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

pub const TREND_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// Weak monotonicity of `ys` along increasing `xs`, ties allowed within
/// `TREND_SLACK` relative.
pub fn monotone(xs: &[f64], ys: &[f64], dir: Direction) -> Result<(), String> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    for w in order.windows(2) {
        let (a, b) = (ys[w[0]], ys[w[1]]);
        if !(a.is_finite() && b.is_finite()) {
            return Err(format!("missing value at {} or {}", xs[w[0]], xs[w[1]]));
        }
        let slack = TREND_SLACK * a.abs().max(b.abs()).max(1.0);
        let bad = match dir {
            Direction::NonIncreasing => b > a + slack,
            Direction::NonDecreasing => b < a - slack,
        };
        if bad {
            return Err(format!("{a} at {} then {b} at {}", xs[w[0]], xs[w[1]]));
        }
    }
    Ok(())
}

fn trend(name: &str, xs: &[f64], ys: &[f64], dir: Direction) -> TrendCheck {
    match monotone(xs, ys, dir) {
        Ok(()) => TrendCheck { name: name.into(), passed: true, detail: String::new() },
        Err(detail) => TrendCheck { name: name.into(), passed: false, detail },
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TREND_SLACK * a.abs().max(b.abs()).max(1.0)
}

/// The trends each sweep parameter is expected to show.
pub fn check_trends(rep: &SweepReport) -> Vec<TrendCheck> {
    use Direction::*;
    let xs: Vec<f64> = rep.rows.iter().map(|r| r.value).collect();
    let col = |c: &str| rep.column(c);
    let mut out = Vec::new();
    let failed: Vec<String> = rep.rows.iter().filter(|r| !r.ok()).map(|r| format!("{}: {}", r.value, r.status)).collect();
    if !failed.is_empty() {
        out.push(TrendCheck { name: "all points solved".into(), passed: false, detail: failed.join("; ") });
    }
    match rep.parameter {
        SweepParam::Omega => {
            out.push(trend("infeasibility non-increasing", &xs, &col("total_infeasibility"), NonIncreasing));
            out.push(trend("z_total non-decreasing", &xs, &col("z_total"), NonDecreasing));
        }
        SweepParam::Lambda1 => {
            out.push(trend("deviation1 non-increasing", &xs, &col("deviation1"), NonIncreasing));
            out.push(trend("z1 non-decreasing", &xs, &col("z1"), NonDecreasing));
        }
        SweepParam::Lambda2 => {
            out.push(trend("z2 non-decreasing", &xs, &col("z2"), NonDecreasing));
        }
        SweepParam::CapScale => {
            // a smaller scale is a tighter cap
            out.push(trend("z1 non-decreasing as the cap tightens", &xs, &col("z1"), NonIncreasing));
            out.push(trend("buy non-decreasing as the cap tightens", &xs, &col("total_buy"), NonIncreasing));
            out.push(trend("sell non-increasing as the cap tightens", &xs, &col("total_sell"), NonDecreasing));
        }
        SweepParam::BpScale | SweepParam::SpScale => {
            let expect_arbitrage: Vec<&SweepRow> = rep.rows.iter().filter(|r| r.ok() && r.spread).collect();
            let missing: Vec<String> =
                expect_arbitrage.iter().filter(|r| !r.arbitrage).map(|r| num(r.value)).collect();
            out.push(TrendCheck {
                name: "arbitrage rows trade at market depth".into(),
                passed: missing.is_empty(),
                detail: if missing.is_empty() { String::new() } else { format!("not saturated at {}", missing.join(", ")) },
            });
            if rep.parameter == SweepParam::SpScale {
                if let Some(base) = rep.rows.iter().find(|r| r.value == 0.0 && r.ok()) {
                    let differ: Vec<String> = rep
                        .rows
                        .iter()
                        .filter(|r| r.ok() && r.value >= 0.0)
                        .filter(|r| !(close(r.z_total, base.z_total) && close(r.z1, base.z1) && close(r.z2, base.z2) && close(r.z3, base.z3)))
                        .map(|r| num(r.value))
                        .collect();
                    out.push(TrendCheck {
                        name: "raised seller offers leave the baseline unchanged".into(),
                        passed: differ.is_empty(),
                        detail: if differ.is_empty() { String::new() } else { format!("differs at {}", differ.join(", ")) },
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub cap_scale: f64,
    pub trade: SweepRow,
    /// Penalty-regime combined solve scored against the cap-and-trade
    /// individual optima, so both rows minimize the same function.
    pub penalty: SweepRow,
    /// Penalty-regime z_total normalized by its own individual optima.
    pub penalty_z_total_own: f64,
    /// `penalty.z_total - trade.z_total`
    pub gap: f64,
}

impl RegimeRow {
    /// Cap-and-trade no worse than the penalty regime.
    pub fn trade_no_worse(&self) -> bool {
        self.gap >= -TREND_SLACK * self.trade.z_total.abs().max(1.0)
    }

    pub fn gap_vanished(&self) -> bool {
        self.gap.abs() <= 1e-4 * self.trade.z_total.abs().max(self.penalty.z_total.abs()).max(1e-12)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeComparison {
    pub rows: Vec<RegimeRow>,
    /// Loosest cap scale from which every tighter cap shows no gap.
    pub vanishing_point: Option<f64>,
    #[serde(skip)]
    pub timings: Vec<RegimeTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeTiming {
    pub cap_scale: f64,
    pub trade: Vec<StageTiming>,
    pub penalty_own: Vec<StageTiming>,
    /// Penalty combined solve against the cap-and-trade optima.
    pub penalty_common_s: f64,
}

impl RegimeComparison {
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record([
            "cap_scale",
            "trade_status",
            "trade_z_total",
            "trade_z1",
            "trade_z2",
            "trade_total_sell",
            "penalty_status",
            "penalty_z_total",
            "penalty_z1",
            "penalty_z2",
            "penalty_z_total_own",
            "gap",
            "trade_no_worse",
            "gap_vanished",
        ])
        .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                num(r.cap_scale),
                r.trade.status.clone(),
                num(r.trade.z_total),
                num(r.trade.z1),
                num(r.trade.z2),
                num(r.trade.total_sell),
                r.penalty.status.clone(),
                num(r.penalty.z_total),
                num(r.penalty.z1),
                num(r.penalty.z2),
                num(r.penalty_z_total_own),
                num(r.gap),
                r.trade_no_worse().to_string(),
                r.gap_vanished().to_string(),
            ])
            .expect("in-memory write");
        }
        finish_csv(w)
    }

    pub fn timings_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["cap_scale", "run", "cost_s", "emission_s", "quality_s", "combined_s"]).expect("in-memory write");
        for t in &self.timings {
            for (name, stages) in [("cap_and_trade", &t.trade), ("penalty_own", &t.penalty_own)] {
                let mut rec = vec![num(t.cap_scale), name.to_string()];
                let mut secs: Vec<String> = stages.iter().map(|s| format!("{:.6}", s.seconds)).collect();
                secs.resize(4, String::new());
                rec.extend(secs);
                w.write_record(&rec).expect("in-memory write");
            }
            let rec = [num(t.cap_scale), "penalty_common".into(), String::new(), String::new(), String::new(), format!("{:.6}", t.penalty_common_s)];
            w.write_record(&rec).expect("in-memory write");
        }
        finish_csv(w)
    }
}

/// Solve both regimes at every cap scale. `penalty_rate` of `None` fines
/// emission at each period's best buying price.
pub fn compare_regimes(
    base: &ProblemInstance,
    caps: &[f64],
    penalty_rate: Option<Vec<f64>>,
    settings: &SolveSettings,
    workers: Option<usize>,
) -> Result<RegimeComparison, SweepError> {
    SweepSpec::new(SweepParam::CapScale, caps.to_vec()).validate()?;
    let proc = Procedure::new(*settings);
    let periods = base.dims.n_periods;
    let results: Vec<(RegimeRow, RegimeTiming)> = pool(workers).install(|| {
        caps.par_iter()
            .map(|&cap| {
                let mut trade_inst = apply_parameter(base, SweepParam::CapScale, cap);
                trade_inst.regime = Regime::CapAndTrade;
                let mut pen_inst = trade_inst.clone();
                pen_inst.regime = Regime::Penalty { rate: penalty_rate.clone() };
                let failed = |e: String| SweepRow::failed(cap, periods, e);
                let mut timing = RegimeTiming { cap_scale: cap, trade: Vec::new(), penalty_own: Vec::new(), penalty_common_s: 0.0 };

                let trade = proc.full_solve(&trade_inst);
                let (own, own_t) = match proc.full_solve(&pen_inst) {
                    Ok((rep, t)) => (rep.z_total, t),
                    Err(_) => (f64::NAN, Vec::new()),
                };
                timing.penalty_own = own_t;
                let (trade_row, penalty_row) = match trade {
                    Ok((rep, t)) => {
                        timing.trade = t;
                        let t0 = std::time::Instant::now();
                        let pen = proc.solve_combined(&pen_inst, rep.z1_star, rep.z2_star, rep.z3_star);
                        timing.penalty_common_s = t0.elapsed().as_secs_f64();
                        let pen_row = match pen {
                            Ok(p) => SweepRow::from_report(cap, &pen_inst, &p),
                            Err(e) => failed(e.to_string()),
                        };
                        (SweepRow::from_report(cap, &trade_inst, &rep), pen_row)
                    }
                    Err(e) => (failed(e.to_string()), failed("cap-and-trade optima unavailable".into())),
                };
                let row = RegimeRow {
                    cap_scale: cap,
                    gap: penalty_row.z_total - trade_row.z_total,
                    trade: trade_row,
                    penalty: penalty_row,
                    penalty_z_total_own: own,
                };
                (row, timing)
            })
            .collect()
    });
    let (rows, timings): (Vec<RegimeRow>, Vec<RegimeTiming>) = results.into_iter().unzip();

    // walk from the tightest cap towards the loosest
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[a].cap_scale.total_cmp(&rows[b].cap_scale));
    let mut vanishing_point = None;
    for &k in &order {
        if rows[k].gap_vanished() {
            vanishing_point = Some(rows[k].cap_scale);
        } else {
            break;
        }
    }
    Ok(RegimeComparison { rows, vanishing_point, timings })
}

/// True when selling unused allowance earns something in every period, the
/// case in which trading strictly dominates paying a penalty.
pub fn sale_is_profitable(inst: &ProblemInstance) -> bool {
    derive_trade_prices(inst).map(|(sell, _)| sell.iter().all(|&p| p > 0.0)).unwrap_or(false)
}

/// A small line chart per key column of a sweep.
pub fn sweep_svg(rep: &SweepReport) -> String {
    let panels: &[(&str, &str)] = match rep.parameter {
        SweepParam::Omega => &[("z_total", "z_total"), ("total_infeasibility", "total infeasibility")],
        SweepParam::Lambda1 => &[("z1", "z1"), ("deviation1", "deviation of objective 1")],
        SweepParam::Lambda2 => &[("z2", "z2"), ("deviation2", "deviation of objective 2")],
        SweepParam::CapScale => &[("z1", "z1"), ("total_buy", "allowance bought"), ("total_sell", "allowance sold"), ("z2", "z2")],
        SweepParam::BpScale | SweepParam::SpScale => &[("z1", "z1"), ("total_buy", "allowance bought"), ("total_sell", "allowance sold")],
    };
    let (pw, ph, pad) = (320.0, 220.0, 40.0);
    let width = pw * panels.len() as f64;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{ph}" font-family="sans-serif" font-size="11">"#);
    let xs: Vec<f64> = rep.rows.iter().map(|r| r.value).collect();
    for (p, (col, title)) in panels.iter().enumerate() {
        let ys = rep.column(col);
        let x0 = p as f64 * pw;
        let pts: Vec<(f64, f64)> = xs.iter().zip(&ys).filter(|(_, y)| y.is_finite()).map(|(&x, &y)| (x, y)).collect();
        let _ = writeln!(svg, r#"<text x="{}" y="16">{title} vs {}</text>"#, x0 + pad, rep.parameter);
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="gray"/>"#,
            x0 + pad,
            pad / 2.0 + 4.0,
            pw - 1.5 * pad,
            ph - 1.5 * pad
        );
        if pts.is_empty() {
            continue;
        }
        let (xmin, xmax) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), &(x, _)| (a.min(x), b.max(x)));
        let (ymin, ymax) = pts.iter().fold((f64::MAX, f64::MIN), |(a, b), &(_, y)| (a.min(y), b.max(y)));
        let sx = |x: f64| x0 + pad + if xmax > xmin { (x - xmin) / (xmax - xmin) } else { 0.5 } * (pw - 1.5 * pad);
        let sy = |y: f64| pad / 2.0 + 4.0 + (ph - 1.5 * pad) * if ymax > ymin { 1.0 - (y - ymin) / (ymax - ymin) } else { 0.5 };
        let mut sorted = pts.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let line: Vec<String> = sorted.iter().map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#, line.join(" "));
        for &(x, y) in &sorted {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
        }
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, x0 + pad, ph - 4.0, num(xmin));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, x0 + pw - pad / 2.0, ph - 4.0, num(xmax));
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{:.4e}</text>"#, x0 + pw - pad / 2.0, pad / 2.0 + 16.0, ymax);
    }
    svg.push_str("</svg>\n");
    svg
}
