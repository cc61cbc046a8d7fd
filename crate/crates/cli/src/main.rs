//! `mech-synth`: run, batch, evaluate and trace four-bar path synthesis.
//!
//! Exit codes: 0 on success, 1 for invalid input or flags, 2 when an
//! evaluation or trace finds no assemblable configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mechsynth_core::harness::{
    export_run, trace_vector, write_batch_csv, write_histogram_csv, write_json, write_trace_csv,
};
use mechsynth_core::{
    batch_run, evaluate, run, CaseSpec, DEConfig, PenaltyWeights, RepairForm, StrategyKind, StrategySpec,
};

const PATH_SAMPLES: usize = 360;

#[derive(Parser)]
#[command(
    name = "mech-synth",
    version,
    about = "Four-bar linkage path synthesis with differential evolution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One optimization run; writes record.json and CSV plot data to --out.
    Run {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Independent runs with seeds seed-base, seed-base+1, ...
    Batch {
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        seed_base: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Prints errors and the constraint report for one design vector.
    Eval {
        #[arg(long)]
        case: String,
        #[arg(long)]
        vector: PathBuf,
    },
    /// Samples the coupler curve of a design vector over a full crank turn.
    Trace {
        #[arg(long)]
        case: String,
        #[arg(long)]
        vector: PathBuf,
        #[arg(long, default_value_t = PATH_SAMPLES)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Case definitions.
    #[command(subcommand)]
    Case(CaseCommand),
}

#[derive(Subcommand)]
enum CaseCommand {
    /// Writes a case as JSON; the file can be passed back to --case.
    Export {
        #[arg(long)]
        case: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SearchArgs {
    /// Built-in case id (1, 2, 2r, 3) or a case JSON file.
    #[arg(long)]
    case: String,
    #[arg(long, value_parser = parse_strategy)]
    strategy: StrategyKind,
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    itermax: Option<usize>,
    #[arg(long = "f")]
    f: Option<f64>,
    #[arg(long)]
    cr: Option<f64>,
    #[arg(long)]
    mp: Option<f64>,
    /// Stop once the best penalized error is at or below this value.
    #[arg(long)]
    stop_error: Option<f64>,
    /// ASI-AG resampling attempts per trial.
    #[arg(long)]
    max_retries: Option<u32>,
    /// SSI: use the printed S expression instead of the Grashof violation.
    #[arg(long)]
    ssi_literal_s: bool,
}

fn parse_strategy(s: &str) -> Result<StrategyKind, String> {
    s.parse::<StrategyKind>().map_err(|e| e.to_string())
}

impl SearchArgs {
    fn resolve(&self) -> Result<(CaseSpec, StrategySpec, DEConfig)> {
        let spec = load_case(&self.case)?;
        let d = spec.default_de;
        let cfg = DEConfig {
            np: self.np.unwrap_or(d.np),
            itermax: self.itermax.unwrap_or(d.itermax),
            f: self.f.unwrap_or(d.f),
            cr: self.cr.unwrap_or(d.cr),
            mp: self.mp.unwrap_or(d.mp),
            stop_error: self.stop_error.or(d.stop_error),
            ..d
        };
        cfg.validate()?;
        let mut strategy = StrategySpec::new(self.strategy);
        if let Some(n) = self.max_retries {
            if n == 0 {
                bail!("--max-retries must be at least 1");
            }
            strategy = strategy.with_max_retries(n);
        }
        if self.ssi_literal_s {
            strategy = strategy.with_repair_form(RepairForm::LiteralS);
        }
        Ok((spec, strategy, cfg))
    }
}

enum Status {
    Done,
    Unassemblable,
}

fn load_case(id: &str) -> Result<CaseSpec> {
    CaseSpec::load(id).with_context(|| format!("cannot load case `{id}`"))
}

/// Accepts a JSON array, a run record (its `best_vector`), or plain numbers
/// separated by whitespace or commas.
fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    if let Ok(value) = serde_json::from_str::<serde_json::Value>(&text) {
        let genes = value.get("best_vector").unwrap_or(&value);
        return serde_json::from_value(genes.clone())
            .with_context(|| format!("{}: expected an array of numbers", path.display()));
    }
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .with_context(|| format!("{}: bad number `{t}`", path.display()))
        })
        .collect()
}

fn cmd_run(search: &SearchArgs, seed: u64, out: &Path) -> Result<Status> {
    let (spec, strategy, cfg) = search.resolve()?;
    let record = run(&spec, &strategy, &cfg.with_seed(seed))?;
    export_run(&record, &spec, out, PATH_SAMPLES)?;
    println!(
        "case {} {} seed {}: error {:.6e} (penalized {:.6e}) after {} generations, {:.2}s",
        spec.name,
        record.strategy,
        seed,
        record.best_error,
        record.best_penalized,
        record.stop_generation,
        record.wall_time
    );
    Ok(Status::Done)
}

fn cmd_batch(search: &SearchArgs, runs: usize, seed_base: u64, out: &Path) -> Result<Status> {
    let (spec, strategy, cfg) = search.resolve()?;
    let (stats, records) = batch_run(&spec, &strategy, &cfg, runs, seed_base)?;
    write_json(&stats, &out.join("stats.json"))?;
    write_batch_csv(&records, &out.join("batch.csv"))?;
    write_histogram_csv(&stats.histogram, &out.join("histogram.csv"))?;
    export_run(&stats.best_run, &spec, &out.join("best"), PATH_SAMPLES)?;

    println!(
        "case {} {}: {} runs from seed {}",
        spec.name, stats.strategy, runs, seed_base
    );
    for (t, c) in stats.histogram.thresholds.iter().zip(&stats.histogram.cumulative) {
        println!("  <{t:<8} {c}");
    }
    println!(
        "  ={:<8} {}",
        mechsynth_core::harness::ERROR_CAP,
        stats.histogram.capped
    );
    println!(
        "best error {:.6e} (seed {}), mean wall time {:.3}s",
        stats.best_run.best_error, stats.best_run.seed, stats.mean_wall_time
    );
    Ok(Status::Done)
}

fn cmd_eval(case: &str, vector: &Path) -> Result<Status> {
    let spec = load_case(case)?;
    let v = read_vector(vector)?;
    let e = evaluate(&v, &spec, &PenaltyWeights::default())?;
    println!("raw_error       {:.10e}", e.raw);
    println!("penalized_error {:.10e}", e.penalized);
    println!("penalty         {}", e.penalty);
    println!("branch_open     {:.10e}", e.branch_errors[0]);
    println!("branch_crossed  {:.10e}", e.branch_errors[1]);
    println!("best_branch     {}", e.best_branch);
    let verdict = |ok| if ok { "satisfied" } else { "violated" };
    println!(
        "grashof         {} (violation {})",
        verdict(e.report.grashof_ok),
        e.report.grashof_violation
    );
    println!("sequence        {}", verdict(e.report.sequence_ok));
    Ok(if e.assemblable() {
        Status::Done
    } else {
        Status::Unassemblable
    })
}

fn cmd_trace(case: &str, vector: &Path, samples: usize, out: &Path) -> Result<Status> {
    if samples == 0 {
        bail!("--samples must be at least 1");
    }
    let spec = load_case(case)?;
    let v = read_vector(vector)?;
    let trace = trace_vector(&v, &spec, samples)?;
    write_trace_csv(&trace, out)?;
    let closed = trace.iter().filter(|s| s.point.is_some()).count();
    println!("{closed}/{samples} samples assemblable -> {}", out.display());
    Ok(if closed == 0 {
        Status::Unassemblable
    } else {
        Status::Done
    })
}

fn cmd_case_export(case: &str, out: &Path) -> Result<Status> {
    let spec = load_case(case)?;
    write_json(&spec, out)?;
    Ok(Status::Done)
}

fn dispatch(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Run { search, seed, out } => cmd_run(&search, seed, &out),
        Command::Batch {
            search,
            runs,
            seed_base,
            out,
        } => cmd_batch(&search, runs, seed_base, &out),
        Command::Eval { case, vector } => cmd_eval(&case, &vector),
        Command::Trace {
            case,
            vector,
            samples,
            out,
        } => cmd_trace(&case, &vector, samples, &out),
        Command::Case(CaseCommand::Export { case, out }) => cmd_case_export(&case, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::Unassemblable) => {
            eprintln!("error: no assemblable configuration");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
