//! `gss`: generate instances, solve them, run sweeps and export models.
//!
//! Exit codes: 0 ok, 1 I/O, 2 config or flag error, 3 infeasible,
//! 4 unbounded, 5 numerical failure, 6 a checked trend failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gss_core::analysis::{check_trends, compare_regimes, sweep, sweep_svg, SweepParam, SweepSpec};
use gss_core::domain::{validate_instance, ProblemInstance, Regime};
use gss_core::formulation::{build_full_model, FormulationError, FormulationOptions, ObjectiveMode};
use gss_core::instance::{generate_instance, instance_to_json, load_instance, GeneratorConfig, InstanceError};
use gss_core::milp::export_mps;
use gss_core::procedure::{Procedure, ProcedureError, SolveReport, SolveSettings};

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        let code = if matches!(e, InstanceError::Io { .. }) { 1 } else { 2 };
        Failure::new(code, e.to_string())
    }
}

impl From<FormulationError> for Failure {
    fn from(e: FormulationError) -> Self {
        Failure::new(2, e.to_string())
    }
}

impl From<ProcedureError> for Failure {
    fn from(e: ProcedureError) -> Self {
        let code = match e {
            ProcedureError::Formulation(_) => 2,
            ProcedureError::Infeasible { .. } => 3,
            ProcedureError::Unbounded { .. } => 4,
            ProcedureError::Model(_)
            | ProcedureError::Numerical { .. }
            | ProcedureError::NoIncumbent { .. }
            | ProcedureError::Sandwich(_) => 5,
        };
        Failure::new(code, e.to_string())
    }
}

type Outcome = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "gss", version, about = "Robust green supplier selection and order allocation under cap-and-trade")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded instance drawn from the generator ranges.
    Gen(GenArgs),
    /// Run the two-step procedure and write the report.
    Solve(SolveArgs),
    /// Re-solve over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Solve cap-and-trade and penalty regimes side by side over cap levels.
    CompareRegimes(CompareArgs),
    /// Write one objective mode's model in fixed MPS format.
    ExportMps(ExportArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Overrides the seed in --config.
    #[arg(long)]
    seed: Option<u64>,
    /// Generator configuration (JSON); omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct FidelityArgs {
    /// Blocks start at the first breakpoint instead of at zero load.
    /// Requires --literal-echelon-sum.
    #[arg(long)]
    literal_breakpoints: bool,
    /// Let both echelons carry the same load in a period.
    #[arg(long)]
    literal_echelon_sum: bool,
    /// Relative gap at which branch-and-bound stops.
    #[arg(long)]
    rel_gap: Option<f64>,
}

impl FidelityArgs {
    fn settings(&self) -> Result<SolveSettings, Failure> {
        if self.literal_breakpoints && !self.literal_echelon_sum {
            return Err(Failure::new(
                2,
                "--literal-breakpoints without --literal-echelon-sum is contradictory: echelon exclusivity needs the \
                 zero-load block",
            ));
        }
        let mut settings = SolveSettings {
            options: FormulationOptions {
                zero_breakpoint: !self.literal_breakpoints,
                echelon_exclusive: !self.literal_echelon_sum,
            },
            ..Default::default()
        };
        settings.options.validate().map_err(Failure::from)?;
        if let Some(g) = self.rel_gap {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Failure::new(2, format!("--rel-gap must be a finite value >= 0, got {g}")));
            }
            settings.tol.rel_gap = g;
        }
        Ok(settings)
    }
}

#[derive(Args)]
struct InstanceSource {
    /// Instance file; when omitted an instance is generated from --seed.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Seed for the generated instance when --instance is omitted.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl InstanceSource {
    fn load(&self) -> Result<ProblemInstance, Failure> {
        let inst = match &self.instance {
            Some(p) => load_instance(p)?,
            None => generate_instance(&GeneratorConfig::with_seed(self.seed))?,
        };
        let report = validate_instance(&inst);
        if !report.is_valid() {
            return Err(Failure::new(2, format!("invalid instance:\n{report}")));
        }
        Ok(inst)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Report path (JSON).
    #[arg(long)]
    report: PathBuf,
    /// Flat CSV of every variable family entry.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Per-stage wall-clock seconds (CSV); kept out of the report.
    #[arg(long)]
    timings: Option<PathBuf>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    market_depth: Option<f64>,
    #[command(flatten)]
    fidelity: FidelityArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// omega, lambda1, lambda2, cap_scale, bp_scale or sp_scale.
    #[arg(long, value_parser = parse_param)]
    param: SweepParam,
    /// Comma-separated values.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    values: ValueList,
    #[command(flatten)]
    source: InstanceSource,
    #[arg(long, default_value = "sweep.csv")]
    out_csv: PathBuf,
    /// Chart of the key columns (SVG).
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, env = "GSS_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    fidelity: FidelityArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated cap scale factors, e.g. 0,-0.1,-0.2.
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    caps: ValueList,
    /// Fine per unit of excess emission: one value, or one per period.
    /// Defaults to each period's best buying price.
    #[arg(long, value_parser = parse_list)]
    penalty_rate: Option<ValueList>,
    #[command(flatten)]
    source: InstanceSource,
    #[arg(long, default_value = "regimes.csv")]
    out_csv: PathBuf,
    #[arg(long, env = "GSS_WORKERS")]
    workers: Option<usize>,
    #[command(flatten)]
    fidelity: FidelityArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cost,
    Emission,
    Quality,
    Combined,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Report of an earlier `solve`; supplies the optima the combined mode
    /// normalizes by.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    fidelity: FidelityArgs,
}

#[derive(Debug, Clone, PartialEq)]
struct ValueList(Vec<f64>);

fn parse_list(s: &str) -> Result<ValueList, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("needs at least one value".into());
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(format!("{v} is not finite"));
    }
    Ok(ValueList(values))
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    SweepParam::parse(s).ok_or_else(|| {
        let names: Vec<&str> = SweepParam::ALL.iter().map(|p| p.name()).collect();
        format!("unknown parameter `{s}`; expected one of {}", names.join(", "))
    })
}

/// Files to write once every check has passed.
#[derive(Default)]
struct Pending(Vec<(PathBuf, String)>);

impl Pending {
    fn add(&mut self, path: impl Into<PathBuf>, text: String) {
        self.0.push((path.into(), text));
    }

    fn commit(self) -> Outcome {
        for (path, text) in self.0 {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Failure::new(1, format!("{}: {e}", dir.display())))?;
            }
            fs::write(&path, text).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
        }
        Ok(())
    }
}

/// `out.csv` -> `out.<tag>.csv`
fn sidecar(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}.{tag}{ext}"))
}

fn cmd_gen(a: GenArgs) -> Outcome {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::new(1, format!("{}: {e}", p.display())))?;
            serde_json::from_str::<GeneratorConfig>(&text)
                .map_err(|e| Failure::new(2, format!("{}: {e}", p.display())))?
        }
        None => GeneratorConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let inst = generate_instance(&cfg)?;
    let json = instance_to_json(&inst);
    match a.out {
        Some(path) => {
            let mut p = Pending::default();
            p.add(&path, json);
            p.commit()?;
            println!("wrote {} (seed {})", path.display(), cfg.seed);
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_solve(a: SolveArgs) -> Outcome {
    let settings = a.fidelity.settings()?;
    let mut inst = load_instance(&a.instance)?;
    let mut overrides = BTreeMap::new();
    for (name, value) in [("omega", a.omega), ("lambda1", a.lambda1), ("lambda2", a.lambda2), ("market_depth_bound", a.market_depth)] {
        if let Some(v) = value {
            match name {
                "omega" => inst.robust.omega = v,
                "lambda1" => inst.robust.lambda1 = v,
                "lambda2" => inst.robust.lambda2 = v,
                _ => inst.robust.market_depth_bound = v,
            }
            overrides.insert(name.to_string(), v);
        }
    }
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(Failure::new(2, format!("invalid instance:\n{report}")));
    }
    for (k, v) in &overrides {
        println!("override {k} = {v}");
    }

    let (mut rep, timings) = Procedure::new(settings).full_solve(&inst)?;
    rep.overrides = overrides;

    let mut out = Pending::default();
    out.add(&a.report, rep.to_json());
    if let Some(p) = &a.csv {
        out.add(p, rep.to_csv());
    }
    if let Some(p) = &a.timings {
        let mut text = String::from("stage,seconds\n");
        for t in &timings {
            text.push_str(&format!("{},{:.6}\n", t.stage, t.seconds));
        }
        out.add(p, text);
    }
    out.commit()?;
    print_summary(&rep);
    println!("report written to {}", a.report.display());
    Ok(())
}

fn print_summary(rep: &SolveReport) {
    println!("status        {:?}", rep.status);
    println!("z1* z2* z3*   {:.6} {:.6} {:.6}", rep.z1_star, rep.z2_star, rep.z3_star);
    println!("z1 z2 z3      {:.6} {:.6} {:.6}", rep.z1, rep.z2, rep.z3);
    println!("z_total       {:.6}", rep.z_total);
    println!("bought sold   {:.6} {:.6}", rep.total_buy(), rep.total_sell());
    println!("infeasibility {:.6}", rep.total_infeasibility);
    if !rep.active_guards.is_empty() {
        println!("active guards {}", rep.active_guards.len());
    }
}

fn cmd_sweep(a: SweepArgs) -> Outcome {
    let settings = a.fidelity.settings()?;
    let mut spec = SweepSpec::new(a.param, a.values.0);
    spec.validate().map_err(|e| Failure::new(2, e.to_string()))?;
    let inst = a.source.load()?;
    if a.source.instance.is_none() {
        spec.seed = Some(a.source.seed);
    }
    let rep = sweep(&inst, &spec, &settings, a.workers).map_err(|e| Failure::new(2, e.to_string()))?;

    let mut out = Pending::default();
    out.add(&a.out_csv, rep.to_csv());
    out.add(sidecar(&a.out_csv, "timings"), rep.timings_csv());
    if let Some(p) = &a.svg {
        out.add(p, sweep_svg(&rep));
    }
    out.commit()?;

    for r in &rep.rows {
        println!(
            "{} = {:<8} z_total {:<12.6} z1 {:<14.2} z2 {:<12.2} z3 {:<12.2} infeasibility {:<10.3} buy {:<10.3} sell {:.3}{}",
            rep.parameter,
            r.value,
            r.z_total,
            r.z1,
            r.z2,
            r.z3,
            r.total_infeasibility,
            r.total_buy,
            r.total_sell,
            if r.ok() { String::new() } else { format!("  [{}]", r.status) }
        );
    }
    println!("wrote {}", a.out_csv.display());
    let checks = check_trends(&rep);
    for c in &checks {
        println!("{c}");
    }
    if checks.iter().any(|c| !c.passed) {
        return Err(Failure::new(6, "trend check failed"));
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Outcome {
    let settings = a.fidelity.settings()?;
    let caps = a.caps.0;
    SweepSpec::new(SweepParam::CapScale, caps.clone()).validate().map_err(|e| Failure::new(2, e.to_string()))?;
    let inst = a.source.load()?;
    let periods = inst.dims.n_periods;
    let rate = match a.penalty_rate {
        None => None,
        Some(ValueList(v)) if v.len() == 1 => Some(vec![v[0]; periods]),
        Some(ValueList(v)) if v.len() == periods => Some(v),
        Some(ValueList(v)) => {
            return Err(Failure::new(2, format!("--penalty-rate takes 1 or {periods} values, got {}", v.len())));
        }
    };
    if let Some(r) = &rate {
        if r.iter().any(|&x| x < 0.0) {
            return Err(Failure::new(2, "--penalty-rate values must be >= 0"));
        }
    }
    let mut inst = inst;
    inst.regime = Regime::CapAndTrade;
    let cmp = compare_regimes(&inst, &caps, rate, &settings, a.workers).map_err(|e| Failure::new(2, e.to_string()))?;

    let mut out = Pending::default();
    out.add(&a.out_csv, cmp.to_csv());
    out.add(sidecar(&a.out_csv, "timings"), cmp.timings_csv());
    out.commit()?;

    println!("{:>9}  {:>14}  {:>14}  {:>12}", "cap_scale", "trade z_total", "penalty z_total", "gap");
    for r in &cmp.rows {
        println!("{:>9}  {:>14.6}  {:>14.6}  {:>12.6}", r.cap_scale, r.trade.z_total, r.penalty.z_total, r.gap);
    }
    match cmp.vanishing_point {
        Some(v) => println!("gap vanishes from cap_scale {v}"),
        None => println!("gap does not vanish over the given caps"),
    }
    println!("wrote {}", a.out_csv.display());
    let worse: Vec<String> = cmp.rows.iter().filter(|r| !r.trade_no_worse()).map(|r| r.cap_scale.to_string()).collect();
    if worse.is_empty() {
        println!("cap-and-trade no worse than penalty: PASS");
        Ok(())
    } else {
        println!("cap-and-trade no worse than penalty: FAIL (at {})", worse.join(", "));
        Err(Failure::new(6, "trend check failed"))
    }
}

fn cmd_export(a: ExportArgs) -> Outcome {
    let settings = a.fidelity.settings()?;
    let mode = match a.mode {
        Mode::Cost => ObjectiveMode::CostRobust,
        Mode::Emission => ObjectiveMode::EmissionRobust,
        Mode::Quality => ObjectiveMode::Quality,
        Mode::Combined => {
            let Some(path) = &a.report else {
                return Err(Failure::new(
                    2,
                    "mode combined needs the individual optima: run `gss solve --instance <file> --report <report>` \
                     first and pass --report <report>",
                ));
            };
            let text = fs::read_to_string(path).map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
            let rep: SolveReport =
                serde_json::from_str(&text).map_err(|e| Failure::new(2, format!("{}: not a solve report: {e}", path.display())))?;
            ObjectiveMode::Combined { z1_star: rep.z1_star, z2_star: rep.z2_star, z3_star: rep.z3_star }
        }
    };
    let inst = load_instance(&a.instance)?;
    let report = validate_instance(&inst);
    if !report.is_valid() {
        return Err(Failure::new(2, format!("invalid instance:\n{report}")));
    }
    let (model, _) = build_full_model(&inst, mode, &settings.options)?;
    let name = a.instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "GSS".into());
    let mps = export_mps(&model, &name);
    let mut out = Pending::default();
    out.add(&a.out, mps.text);
    let names = sidecar(&a.out, "names");
    let names = names.with_extension("tsv");
    out.add(&names, mps.names.to_tsv());
    out.commit()?;
    println!(
        "wrote {} ({} columns, {} rows, {} binaries) and {}",
        a.out.display(),
        model.num_vars(),
        model.num_constraints(),
        model.num_binaries(),
        names.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::CompareRegimes(a) => cmd_compare(a),
        Command::ExportMps(a) => cmd_export(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
