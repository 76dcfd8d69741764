use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use truthmatch::audit::{audit_expost_truthfulness, AuditMode, AuditReport, Verdict};
use truthmatch::coins::derive_seed;
use truthmatch::harness::{monte_carlo, Family, InstanceSource};
use truthmatch::lpcheck::{
    alpha_bound, betas, build_dual_solution, dual_objective, objective_bound, objective_closed_form,
    verify_dual_feasibility, DualFeasibility,
};
use truthmatch::scalar::Scalar;
use truthmatch::{max_weight_matching, social_welfare, Coins, Instance, MechanismKind, Outcome, Rational, ReportProfile};

const SUBCOMMANDS: [&str; 5] = ["gen", "run", "audit", "ratio", "lp-check"];

#[derive(Parser, Debug)]
#[command(name = "tml", version, about = "Truthful online matching: simulate, audit, measure")]
struct Cli {
    /// JSON object of flag values; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write output here instead of stdout.
    #[arg(short = 'o', long = "out", global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate an instance file.
    #[command(args_override_self = true)]
    Gen(GenArgs),
    /// Run a mechanism on truthful reports and print the outcome.
    #[command(args_override_self = true)]
    Run(RunArgs),
    /// Search for profitable deviations.
    #[command(args_override_self = true)]
    Audit(AuditArgs),
    /// Monte Carlo welfare ratio against the offline optimum.
    #[command(args_override_self = true)]
    Ratio(RatioArgs),
    /// Verify the dual certificate for the type LP.
    #[command(name = "lp-check", args_override_self = true)]
    LpCheck(LpArgs),
}

#[derive(Args, Debug)]
struct FamilyArgs {
    #[arg(long, value_parser = parse_family_name)]
    family: Option<String>,
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Items; defaults to `n`.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long = "p-edge", default_value_t = 0.5)]
    p_edge: f64,
    #[arg(long = "value-max", default_value_t = 10)]
    value_max: u32,
    /// Real-valued random values instead of integers.
    #[arg(long)]
    continuous: bool,
    /// Triangular buyer values, comma separated.
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long = "b1-values", value_delimiter = ',', default_value = "1.0")]
    b1_values: Vec<f64>,
}

impl FamilyArgs {
    fn family(&self) -> Result<Option<Family>> {
        let Some(name) = &self.family else {
            return Ok(None);
        };
        let m = self.m.unwrap_or(self.n);
        Ok(Some(match name.as_str() {
            "star" => Family::Star { n: self.n, m },
            "triangular" => Family::Triangular {
                n: self.n,
                values: (!self.values.is_empty()).then(|| self.values.clone()),
            },
            "lb-dist" => Family::LbDist { k: self.k },
            "exante" => Family::Exante {
                n_prime: self.n,
                eps: self.eps,
                b1_values: self.b1_values.clone(),
            },
            "random" => Family::Random {
                n: self.n,
                m,
                p_edge: self.p_edge,
                value_max: self.value_max,
                continuous: self.continuous,
            },
            other => bail!("unknown family {other}"),
        }))
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_parser = parse_kind)]
    mechanism: MechanismKind,
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, value_parser = parse_kind)]
    mechanism: MechanismKind,
    #[arg(long, value_parser = parse_mode, default_value = "non-myopic")]
    mode: AuditMode,
    #[arg(long)]
    instance: PathBuf,
    /// Independent coin draws to audit; ignored for deterministic mechanisms.
    #[arg(long = "coin-draws", default_value_t = 1)]
    coin_draws: u64,
}

#[derive(Args, Debug)]
struct RatioArgs {
    #[arg(long, value_parser = parse_kind)]
    mechanism: MechanismKind,
    #[arg(long, conflicts_with = "family")]
    instance: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
}

#[derive(Args, Debug)]
struct LpArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 3.0)]
    alpha: f64,
    /// Exact rational arithmetic (k <= 30).
    #[arg(long)]
    exact: bool,
}

fn parse_kind(s: &str) -> Result<MechanismKind, String> {
    s.parse().map_err(|e: truthmatch::Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<AuditMode, String> {
    s.parse().map_err(|e: truthmatch::Error| e.to_string())
}

fn parse_family_name(s: &str) -> Result<String, String> {
    s.parse::<Family>()
        .map(|f| f.name().to_string())
        .map_err(|e| e.to_string())
}

/// Splices `--config` entries in right after the subcommand name, so flags
/// typed on the command line come later and win.
fn expand_config(mut argv: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut i = 1;
    while i < argv.len() {
        if argv[i] == "--config" && i + 1 < argv.len() {
            path = Some(argv[i + 1].clone());
            i += 2;
        } else if let Some(p) = argv[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            i += 1;
        } else {
            i += 1;
        }
    }
    let Some(path) = path else { return Ok(argv) };
    let text = fs::read_to_string(&path).with_context(|| format!("reading config {path}"))?;
    let obj: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).with_context(|| format!("config {path} is not a JSON object"))?;

    let mut extra = Vec::new();
    for (key, value) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            serde_json::Value::Null | serde_json::Value::Bool(false) => {}
            serde_json::Value::Bool(true) => extra.push(flag),
            serde_json::Value::String(s) => extra.extend([flag, s]),
            serde_json::Value::Number(n) => extra.extend([flag, n.to_string()]),
            serde_json::Value::Array(items) => {
                let joined = items
                    .iter()
                    .map(|v| match v {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(",");
                extra.extend([flag, joined]);
            }
            serde_json::Value::Object(_) => bail!("config key {key}: nested objects are not flags"),
        }
    }
    let at = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map_or(argv.len(), |p| p + 1);
    argv.splice(at..at, extra);
    Ok(argv)
}

struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    fn json<T: Serialize>(&self, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(&text)
    }

    fn csv<T: Serialize>(&self, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in rows {
            w.serialize(row)?;
        }
        self.write(&String::from_utf8(w.into_inner()?)?)
    }
}

fn load_instance(path: &Path) -> Result<Instance<f64>> {
    Instance::load(path).with_context(|| format!("loading instance {}", path.display()))
}

#[derive(Serialize)]
struct BuyerRow {
    buyer: usize,
    value: f64,
    items: String,
}

fn cmd_gen(args: &GenArgs, seed: u64, format: Format, sink: &Sink) -> Result<()> {
    let family = args
        .family
        .family()?
        .ok_or_else(|| anyhow!("--family is required"))?;
    let inst = family.sample(seed)?;
    match format {
        Format::Json => sink.write(&(inst.to_json() + "\n")),
        Format::Csv => sink.csv(inst.buyers.iter().map(|b| BuyerRow {
            buyer: b.id,
            value: b.value,
            items: b.items.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
        })),
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    mechanism: MechanismKind,
    seed: u64,
    social_welfare: f64,
    optimum: f64,
    outcome: &'a Outcome<f64>,
}

#[derive(Serialize)]
struct MatchRow {
    item: usize,
    buyer: usize,
    price: f64,
    priced_at: usize,
}

fn cmd_run(args: &RunArgs, seed: u64, format: Format, sink: &Sink) -> Result<()> {
    let inst = load_instance(&args.instance)?;
    let coins = Coins::draw(seed, inst.num_buyers());
    let outcome = args.mechanism.run(&inst, &ReportProfile::truthful(&inst), &coins)?;
    match format {
        Format::Json => sink.json(&RunReport {
            mechanism: args.mechanism,
            seed,
            social_welfare: social_welfare(&inst, &outcome)?,
            optimum: max_weight_matching(&inst).value,
            outcome: &outcome,
        }),
        Format::Csv => sink.csv(outcome.matches.iter().enumerate().filter_map(|(item, a)| {
            a.as_ref().map(|a| MatchRow {
                item,
                buyer: a.buyer,
                price: a.price,
                priced_at: a.priced_at,
            })
        })),
    }
}

#[derive(Serialize)]
struct ViolationRow {
    draw: u64,
    buyer: usize,
    value: f64,
    items: String,
    truthful_u: f64,
    deviant_u: f64,
    gain: f64,
}

fn cmd_audit(args: &AuditArgs, seed: u64, format: Format, sink: &Sink) -> Result<bool> {
    let inst = load_instance(&args.instance)?;
    let draws = if args.mechanism.is_randomized() {
        args.coin_draws.max(1)
    } else {
        1
    };
    let mut merged: Option<AuditReport> = None;
    let mut rows = Vec::new();
    for d in 0..draws {
        let coin_seed = if draws == 1 { seed } else { derive_seed(seed, d) };
        let coins = Coins::draw(coin_seed, inst.num_buyers());
        let report = audit_expost_truthfulness(args.mechanism, &inst, &coins, args.mode)?;
        rows.extend(report.violations.iter().map(|v| ViolationRow {
            draw: d,
            buyer: v.buyer,
            value: v.value,
            items: v.items.iter().map(usize::to_string).collect::<Vec<_>>().join(";"),
            truthful_u: v.truthful_u,
            deviant_u: v.deviant_u,
            gain: v.gain,
        }));
        merged = Some(match merged {
            None => report,
            Some(mut acc) => {
                acc.checked += report.checked;
                acc.violations.extend(report.violations);
                if !acc.violations.is_empty() {
                    acc.verdict = Verdict::Fail;
                }
                acc
            }
        });
    }
    let report = merged.expect("at least one draw");
    match format {
        Format::Json => sink.json(&report)?,
        Format::Csv => sink.csv(rows)?,
    }
    Ok(report.passed())
}

fn cmd_ratio(args: &RatioArgs, seed: u64, format: Format, sink: &Sink) -> Result<()> {
    let source = match (&args.instance, args.family.family()?) {
        (Some(path), _) => InstanceSource::Fixed(load_instance(path)?),
        (None, Some(f)) => InstanceSource::Family(f),
        (None, None) => bail!("one of --instance or --family is required"),
    };
    let run = monte_carlo(args.mechanism, &source, args.trials, seed)?;
    match format {
        Format::Json => sink.json(&run.stats),
        Format::Csv => sink.csv(run.rows.iter()),
    }
}

#[derive(Serialize)]
struct LpReport {
    k: usize,
    alpha: f64,
    exact: bool,
    delta: usize,
    feasibility: DualFeasibility,
    objective: f64,
    closed_form: f64,
    closed_form_matches: bool,
    bound: f64,
    within_bound: bool,
    alpha_bound: Option<f64>,
    pass: bool,
}

fn lp_report<S: Scalar>(k: usize, alpha: S, exact: bool) -> Result<LpReport> {
    let b = betas::<S>(k as u32);
    let dual = build_dual_solution::<S>(k)?;
    let feasibility = verify_dual_feasibility(&dual, &b)?;
    let objective = dual_objective(&dual, alpha, &b);
    let closed = objective_closed_form(k, alpha);
    let bound = objective_bound(k, alpha);
    let within_bound = objective <= bound;
    Ok(LpReport {
        k,
        alpha: alpha.to_f64_lossy(),
        exact,
        delta: dual.delta,
        pass: feasibility.feasible && within_bound,
        feasibility,
        objective: objective.to_f64_lossy(),
        closed_form: closed.to_f64_lossy(),
        closed_form_matches: (objective - closed).abs_value() <= S::lp_tolerance(),
        bound: bound.to_f64_lossy(),
        within_bound,
        alpha_bound: (k <= 63).then(|| alpha_bound(k as u32)),
    })
}

#[derive(Serialize)]
struct CheckRow {
    check: &'static str,
    value: String,
    pass: bool,
}

fn cmd_lpcheck(args: &LpArgs, format: Option<Format>, sink: &Sink) -> Result<bool> {
    if args.k == 0 || args.k > 62 {
        bail!("--k must be in 1..=62");
    }
    let report = if args.exact {
        if args.k > 30 {
            bail!("--exact supports k <= 30");
        }
        let alpha = Rational::from_f64_lossy(args.alpha);
        lp_report(args.k, alpha, true)?
    } else {
        lp_report(args.k, args.alpha, false)?
    };
    let rows = vec![
        CheckRow {
            check: "dual feasible",
            value: format!("min slack {:e}", report.feasibility.min_slack),
            pass: report.feasibility.feasible,
        },
        CheckRow {
            check: "printed w-constraint reading",
            value: format!("{} violations", report.feasibility.printed_reading_violations.len()),
            pass: report.feasibility.printed_reading_feasible,
        },
        CheckRow {
            check: "objective",
            value: report.objective.to_string(),
            pass: true,
        },
        CheckRow {
            check: "closed form",
            value: report.closed_form.to_string(),
            pass: report.closed_form_matches,
        },
        CheckRow {
            check: "objective <= alpha (ceil log2 k + 2)",
            value: report.bound.to_string(),
            pass: report.within_bound,
        },
    ];
    match format {
        Some(Format::Json) => sink.json(&report)?,
        Some(Format::Csv) => sink.csv(rows)?,
        None => {
            let mut text = format!(
                "k = {}, alpha = {}, delta = {}{}\n",
                report.k,
                report.alpha,
                report.delta,
                if report.exact { " (exact)" } else { "" }
            );
            for r in &rows {
                text += &format!("{:<40} {:<28} {}\n", r.check, r.value, if r.pass { "ok" } else { "FAIL" });
            }
            for v in &report.feasibility.violations {
                text += &format!("  violated: {} (slack {:e})\n", v.constraint, v.slack);
            }
            text += if report.pass { "PASS\n" } else { "FAIL\n" };
            sink.write(&text)?;
        }
    }
    Ok(report.pass)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let sink = Sink { out: cli.out.clone() };
    let format = cli.format.unwrap_or(Format::Json);
    match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a, cli.seed, format, &sink).map(|_| true),
        Cmd::Run(a) => cmd_run(a, cli.seed, format, &sink).map(|_| true),
        Cmd::Audit(a) => cmd_audit(a, cli.seed, format, &sink),
        Cmd::Ratio(a) => cmd_ratio(a, cli.seed, format, &sink).map(|_| true),
        Cmd::LpCheck(a) => cmd_lpcheck(a, cli.format, &sink),
    }
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
