//! Command-line front end: parse law specifications, orchestrate the
//! library modules, and emit CSV/JSON artifacts.
//!
//! Every artifact embeds the fully resolved request (law spec, seed,
//! tolerances), so a run can be replayed from the artifact alone. All
//! configuration is flags; no environment variables are consulted.
//! Diagnostics on standard error are single-line JSON objects
//! `{error, module, detail}`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rand::Rng;
use serde_json::{json, Value};

use bpve_core::construct::{build_schedule, ConstantRetention, RetentionSource, Schedule};
use bpve_core::offspring::OffspringLaw;
use bpve_core::simulate::{simulate_bpve, simulate_percolation, trajectories_csv, McConfig};
use bpve_core::survival::{kkns_diagnostic, KknsConfig, SurvivalTable};
use bpve_core::verify::{verification_report, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "bpve",
    version,
    about = "Retention schedules for thinned branching processes: build, certify, simulate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Survival probabilities r_n of a critical law (CSV)
    Survival(SurvivalArgs),
    /// Trend of n*r_n against its 2/sigma^2 limit (JSON)
    Kkns(KknsArgs),
    /// Build the block schedule for a supercritical law (CSV)
    Construct(ConstructArgs),
    /// Build the schedule and certify both conditions (JSON report)
    Verify(VerifyArgs),
    /// Monte Carlo population trajectories (JSON summary)
    Simulate(SimulateArgs),
    /// Monte Carlo vertex percolation on sampled trees (JSON summary)
    Percolate(PercolateArgs),
}

#[derive(Args)]
struct SurvivalArgs {
    /// Law spec: finite:q0,q1,... | geometric:mean=<m> | powertail:alpha=<a>,mean=<m> [|thin=<p>]
    law: String,
    #[arg(long, default_value_t = 100_000)]
    horizon: usize,
    /// Thin the law by 1/mean first
    #[arg(long)]
    criticalize: bool,
    /// Requested relative accuracy per table entry
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// One CSV row per generation instead of per checkpoint
    #[arg(long)]
    full: bool,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct KknsArgs {
    law: String,
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    #[arg(long)]
    criticalize: bool,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ConstructArgs {
    law: String,
    #[arg(long, default_value_t = 3)]
    blocks: u32,
    /// Horizon of the survival table the thresholds are certified from
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    law: String,
    #[arg(long, default_value_t = 3)]
    blocks: u32,
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Cap on total generations composed exactly for condition (ii)
    #[arg(long, default_value_t = 1_000_000)]
    exact_budget: u64,
    /// Cap on generations expanded by the brute-force condition (i) check
    #[arg(long, default_value_t = 1_000_000)]
    bruteforce_budget: u64,
    /// Prefix length of the closed-form vs brute-force cross-check
    #[arg(long, default_value_t = 10_000)]
    cross_check_gens: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true)))]
struct SimulateArgs {
    law: String,
    #[arg(long)]
    replicates: u64,
    #[arg(long)]
    horizon: u64,
    /// Constant retention every generation
    #[arg(long, group = "source")]
    retention: Option<f64>,
    /// Explicit comma-separated retention list p_1,p_2,...
    #[arg(long, group = "source")]
    retentions: Option<String>,
    /// Build a schedule with this many blocks and draw retentions from it
    #[arg(long, group = "source")]
    schedule_blocks: Option<u32>,
    /// Survival-table horizon used when building a schedule
    #[arg(long, default_value_t = 10_000)]
    table_horizon: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Master seed; generated and recorded when omitted
    #[arg(long)]
    seed: Option<u64>,
    /// Declare-alive population cutoff (0 = none)
    #[arg(long, default_value_t = 0)]
    population_cap: u64,
    /// Worker threads (0 = library default)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Write per-replicate trajectories to this CSV
    #[arg(long)]
    trajectories: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true)))]
struct PercolateArgs {
    law: String,
    #[arg(long)]
    replicates: u64,
    #[arg(long)]
    depth: u64,
    #[arg(long, group = "source")]
    retention: Option<f64>,
    #[arg(long, group = "source")]
    retentions: Option<String>,
    #[arg(long, group = "source")]
    schedule_blocks: Option<u32>,
    #[arg(long, default_value_t = 10_000)]
    table_horizon: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    json: Option<PathBuf>,
}

// ---------------------------------------------------------------------------

enum CliError {
    Core(bpve_core::Error),
    Io(String, std::io::Error),
}

impl From<bpve_core::Error> for CliError {
    fn from(e: bpve_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn to_json(&self) -> Value {
        match self {
            CliError::Core(e) => json!({
                "error": e.code(),
                "module": e.module(),
                "detail": e.to_string(),
            }),
            CliError::Io(path, e) => json!({
                "error": "io",
                "module": "cli",
                "detail": format!("{path}: {e}"),
            }),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Survival(a) => run_survival(a),
        Command::Kkns(a) => run_kkns(a),
        Command::Construct(a) => run_construct(a),
        Command::Verify(a) => run_verify(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Percolate(a) => run_percolate(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}

fn parse_law(spec: &str) -> CliResult<OffspringLaw> {
    Ok(spec.parse::<OffspringLaw>()?)
}

fn write_file(path: &PathBuf, content: &str) -> CliResult<()> {
    std::fs::write(path, content).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn emit_json(path: &Option<PathBuf>, value: &Value) -> CliResult<()> {
    let pretty = serde_json::to_string_pretty(value).expect("serializable");
    println!("{pretty}");
    if let Some(p) = path {
        write_file(p, &pretty)?;
    }
    Ok(())
}

fn warn(code: &str, module: &str, detail: String) {
    eprintln!("{}", json!({ "warning": code, "module": module, "detail": detail }));
}

// ---------------------------------------------------------------------------

fn run_survival(a: SurvivalArgs) -> CliResult<ExitCode> {
    let mut law = parse_law(&a.law)?;
    if a.criticalize {
        law = law.criticalize()?;
    }
    let table = SurvivalTable::build(&law, a.horizon, a.tolerance)?;
    if let Some(n) = table.flagged_from() {
        warn(
            "accuracy_flagged",
            "survival",
            format!("entries from n = {n} exceed the requested tolerance {}", a.tolerance),
        );
    }
    let csv = table.csv_string(a.full);
    if let Some(p) = &a.csv {
        write_file(p, &csv)?;
    }
    if a.json.is_some() {
        let value = json!({
            "request": {
                "command": "survival",
                "law": a.law,
                "resolved_law": law.to_string(),
                "horizon": a.horizon,
                "criticalize": a.criticalize,
                "tolerance": a.tolerance,
                "full": a.full,
            },
            "law_spec": table.law_spec(),
            "horizon": table.horizon(),
            "flagged_from": table.flagged_from(),
            "checkpoints": table
                .checkpoints()
                .iter()
                .map(|&n| json!({"n": n, "r_n": table.r(n), "n_times_r_n": n as f64 * table.r(n)}))
                .collect::<Vec<_>>(),
        });
        emit_json(&a.json, &value)?;
    } else {
        print!("{csv}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_kkns(a: KknsArgs) -> CliResult<ExitCode> {
    let mut law = parse_law(&a.law)?;
    if a.criticalize {
        law = law.criticalize()?;
    }
    let class = law.second_moment_class();
    let table = SurvivalTable::build(&law, a.horizon, a.tolerance)?;
    let diag = kkns_diagnostic(&table, class, &KknsConfig::default());
    if let Some(p) = &a.csv {
        write_file(p, &table.csv_string(false))?;
    }
    let value = json!({
        "request": {
            "command": "kkns",
            "law": a.law,
            "resolved_law": law.to_string(),
            "horizon": a.horizon,
            "criticalize": a.criticalize,
            "tolerance": a.tolerance,
        },
        "diagnostic": diag,
    });
    emit_json(&a.json, &value)?;
    Ok(ExitCode::SUCCESS)
}

/// Shared construct pipeline: criticalize, build the table, build the blocks.
fn construct_pipeline(
    law: &OffspringLaw,
    horizon: usize,
    tolerance: f64,
    blocks: u32,
) -> CliResult<(SurvivalTable, Schedule)> {
    if !law.second_moment_class().is_infinite() {
        warn(
            "finite_variance",
            "construct",
            format!(
                "law {law} has finite offspring variance; threshold certification will fail"
            ),
        );
    }
    let g = law.criticalize()?;
    let table = SurvivalTable::build(&g, horizon, tolerance)?;
    let schedule = build_schedule(law, &table, blocks)?;
    Ok((table, schedule))
}

fn schedule_json(schedule: &Schedule) -> Value {
    json!({
        "m": schedule.m(),
        "law_spec": schedule.law_spec(),
        "span": schedule.span().to_string(),
        "blocks": schedule
            .blocks()
            .iter()
            .map(|b| {
                json!({
                    "block": b.index,
                    "L": b.l,
                    "t": b.t.to_string(),
                    "u": b.u.to_string(),
                    "crit_len": b.crit_len.to_string(),
                    "growth_gens": b.growth_gens,
                    "m_exponent": b.m_exponent,
                    "log10_K": b.m_exponent as f64 * schedule.m().log10(),
                })
            })
            .collect::<Vec<_>>(),
    })
}

fn run_construct(a: ConstructArgs) -> CliResult<ExitCode> {
    let law = parse_law(&a.law)?;
    let (_, schedule) = construct_pipeline(&law, a.horizon, a.tolerance, a.blocks)?;
    let csv = schedule.csv_string();
    if let Some(p) = &a.csv {
        write_file(p, &csv)?;
    }
    if a.json.is_some() {
        let value = json!({
            "request": {
                "command": "construct",
                "law": a.law,
                "resolved_law": law.to_string(),
                "blocks": a.blocks,
                "horizon": a.horizon,
                "tolerance": a.tolerance,
            },
            "schedule": schedule_json(&schedule),
        });
        emit_json(&a.json, &value)?;
    } else {
        print!("{csv}");
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(a: VerifyArgs) -> CliResult<ExitCode> {
    let law = parse_law(&a.law)?;
    let (table, schedule) = construct_pipeline(&law, a.horizon, a.tolerance, a.blocks)?;
    let opts = VerifyOptions {
        exact_budget: a.exact_budget,
        bruteforce_budget: a.bruteforce_budget,
        cross_check_generations: a.cross_check_gens,
    };
    let report = verification_report(&law, &schedule, &table, &opts)?;
    if let Some(p) = &a.csv {
        write_file(p, &report.csv_string())?;
    }
    let value = json!({
        "request": {
            "command": "verify",
            "law": a.law,
            "resolved_law": law.to_string(),
            "blocks": a.blocks,
            "horizon": a.horizon,
            "tolerance": a.tolerance,
            "exact_budget": a.exact_budget,
            "bruteforce_budget": a.bruteforce_budget,
            "cross_check_gens": a.cross_check_gens,
        },
        "schedule": schedule_json(&schedule),
        "report": report_value(&report),
    });
    emit_json(&a.json, &value)?;
    if report.all_certified() {
        Ok(ExitCode::SUCCESS)
    } else {
        warn(
            "not_certified",
            "verify",
            "one or more report entries are not certified".into(),
        );
        Ok(ExitCode::FAILURE)
    }
}

fn report_value(report: &bpve_core::VerificationReport) -> Value {
    serde_json::to_value(report).expect("serializable report")
}

// ---------------------------------------------------------------------------

enum Source {
    Constant(ConstantRetention),
    List(Vec<f64>),
    Schedule(Schedule),
}

impl Source {
    fn as_dyn(&self) -> &dyn RetentionSource {
        match self {
            Source::Constant(c) => c,
            Source::List(v) => v,
            Source::Schedule(s) => s,
        }
    }

    fn describe(&self) -> Value {
        match self {
            Source::Constant(c) => json!({"kind": "constant", "retention": c.0}),
            Source::List(v) => json!({"kind": "list", "retentions": v}),
            Source::Schedule(s) => json!({"kind": "schedule", "schedule": schedule_json(s)}),
        }
    }
}

fn resolve_source(
    law: &OffspringLaw,
    retention: Option<f64>,
    retentions: &Option<String>,
    schedule_blocks: Option<u32>,
    table_horizon: usize,
    tolerance: f64,
) -> CliResult<Source> {
    if let Some(p) = retention {
        return Ok(Source::Constant(ConstantRetention(p)));
    }
    if let Some(list) = retentions {
        let parsed: Result<Vec<f64>, _> = list.split(',').map(|t| t.trim().parse()).collect();
        let parsed = parsed.map_err(|e| {
            CliError::Core(bpve_core::Error::Config(format!(
                "bad retention list '{list}': {e}"
            )))
        })?;
        return Ok(Source::List(parsed));
    }
    let blocks = schedule_blocks.expect("clap group guarantees one source");
    let (_, schedule) = construct_pipeline(law, table_horizon, tolerance, blocks)?;
    Ok(Source::Schedule(schedule))
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
            .install(f)
    }
}

fn run_simulate(a: SimulateArgs) -> CliResult<ExitCode> {
    let law = parse_law(&a.law)?;
    let source = resolve_source(
        &law,
        a.retention,
        &a.retentions,
        a.schedule_blocks,
        a.table_horizon,
        a.tolerance,
    )?;
    let seed = resolve_seed(a.seed);
    let cfg = McConfig {
        replicates: a.replicates,
        master_seed: seed,
        horizon: a.horizon,
        population_cap: a.population_cap,
        record_trajectories: a.trajectories.is_some(),
    };
    let out = with_workers(a.workers, || simulate_bpve(&law, source.as_dyn(), &cfg))?;
    if let (Some(path), Some(trajs)) = (&a.trajectories, &out.trajectories) {
        write_file(path, &trajectories_csv(trajs))?;
    }
    let value = json!({
        "request": {
            "command": "simulate",
            "law": a.law,
            "resolved_law": law.to_string(),
            "replicates": a.replicates,
            "horizon": a.horizon,
            "population_cap": a.population_cap,
            "workers": a.workers,
            "seed": seed,
            "source": source.describe(),
        },
        "summary": out.summary,
    });
    emit_json(&a.json, &value)?;
    Ok(ExitCode::SUCCESS)
}

fn run_percolate(a: PercolateArgs) -> CliResult<ExitCode> {
    let law = parse_law(&a.law)?;
    let source = resolve_source(
        &law,
        a.retention,
        &a.retentions,
        a.schedule_blocks,
        a.table_horizon,
        a.tolerance,
    )?;
    let seed = resolve_seed(a.seed);
    let cfg = McConfig {
        replicates: a.replicates,
        master_seed: seed,
        horizon: a.depth,
        population_cap: 0,
        record_trajectories: false,
    };
    let out = with_workers(a.workers, || {
        simulate_percolation(&law, source.as_dyn(), a.depth, &cfg)
    })?;
    let value = json!({
        "request": {
            "command": "percolate",
            "law": a.law,
            "resolved_law": law.to_string(),
            "replicates": a.replicates,
            "depth": a.depth,
            "workers": a.workers,
            "seed": seed,
            "source": source.describe(),
        },
        "summary": out.summary,
    });
    emit_json(&a.json, &value)?;
    Ok(ExitCode::SUCCESS)
}
