//! Command-line front end: benchmark generation, the interleaving oracle,
//! lower-bound certification, the built-in engine, trace replay, and the
//! external-solver harness.

use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fkpbench::dpllt::{
    check_proof, parse_trace, solve, write_trace, SolveOptions, SolveOutcome,
};
use fkpbench::encoder::{clause_stats, encode, EncodedInstance, Encoding};
use fkpbench::lowerbound::{certify_lower_bound, VerifyMode};
use fkpbench::program::{
    build_fkp, build_fkp_with_bound, check_safety_operational, expected_interleavings,
    ProgramStructure,
};
use fkpbench::smtlib::{
    generate_suite, parse_benchmark_name, run_solver, write_stats_csv, SmtConfig, StatPatterns,
    StatsRow, SuiteOptions,
};

#[derive(Parser)]
#[command(name = "fkpbench", version, about = "Shared-counter benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit SMT-LIB 2 benchmark files plus a sha256 manifest.
    Gen(GenArgs),
    /// Enumerate all interleavings and count assertion violations.
    Oracle(OracleArgs),
    /// Build and verify the factorial lower-bound certificate.
    Certify(CertifyArgs),
    /// Refute or satisfy an instance with the built-in engine.
    Solve(SolveArgs),
    /// Replay a refutation trace against an instance.
    Check(CheckArgs),
    /// Run an external solver over benchmark files and tabulate statistics.
    Run(RunArgs),
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "UPPERCASE")]
enum EncodingArg {
    /// Cubic-size encoding.
    E3,
    /// Quadratic-size encoding.
    E2,
}

impl EncodingArg {
    fn to_encoding(self) -> Encoding {
        match self {
            EncodingArg::E3 => Encoding::Cubic,
            EncodingArg::E2 => Encoding::Quadratic,
        }
    }
}

// Variant names mirror the benchmark configuration identifiers.
#[allow(clippy::enum_variant_names)]
#[derive(Clone, Copy, ValueEnum)]
enum ConfigArg {
    RealClocksIntVal,
    RealClocksBvVal,
    BvClocksIntVal,
    BvClocksBvVal,
}

impl ConfigArg {
    fn to_config(self) -> SmtConfig {
        match self {
            ConfigArg::RealClocksIntVal => SmtConfig::RealClocksIntVal,
            ConfigArg::RealClocksBvVal => SmtConfig::RealClocksBvVal,
            ConfigArg::BvClocksIntVal => SmtConfig::BvClocksIntVal,
            ConfigArg::BvClocksBvVal => SmtConfig::BvClocksBvVal,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Output directory for the .smt2 files and MANIFEST.sha256.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    n_min: u32,
    #[arg(long, default_value_t = 9)]
    n_max: u32,
    /// Sort configurations to emit; all four when omitted.
    #[arg(long = "config", value_enum)]
    configs: Vec<ConfigArg>,
    /// Encodings to emit; both when omitted.
    #[arg(long = "encoding", value_enum)]
    encodings: Vec<EncodingArg>,
    /// Bit-vector width; the per-size default when omitted.
    #[arg(long)]
    bitwidth: Option<u32>,
    /// Pin write selectors to distinct constants.
    #[arg(long)]
    opt_wsel: bool,
    /// Weaken the asserted bound to n-1, flipping the expected verdict.
    #[arg(long)]
    mutate_bound: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: u32,
    /// Assertion bound; defaults to the standard n.
    #[arg(long)]
    bound: Option<u32>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum)]
    encoding: EncodingArg,
    /// Witness-based verification, or brute-force subset checking.
    #[arg(long, value_enum, default_value = "witness")]
    mode: ModeArg,
    /// Print the certificate as JSON instead of a report.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Witness,
    Brute,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum)]
    encoding: EncodingArg,
    /// Weaken the asserted bound to n-1, flipping the expected verdict.
    #[arg(long)]
    mutate_bound: bool,
    /// Seed for the initial variable activities.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run the theory check at every propagation fixpoint.
    #[arg(long)]
    eager: bool,
    /// Give up after this many conflicts.
    #[arg(long)]
    max_conflicts: Option<u64>,
    /// Write the refutation trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Dump the encoded instance as JSON to this file.
    #[arg(long)]
    dump_instance: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Trace file produced by `solve --trace`.
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    n: u32,
    #[arg(long, value_enum)]
    encoding: EncodingArg,
    /// Check against the weakened-bound instance.
    #[arg(long)]
    mutate_bound: bool,
}

#[derive(Args)]
struct RunArgs {
    /// Solver invocation; the benchmark path is appended.
    #[arg(long)]
    solver_cmd: String,
    /// Name for the CSV solver column; the command head when omitted.
    #[arg(long)]
    solver_id: Option<String>,
    /// Per-file wall-clock timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout_s: f64,
    /// JSON file with conflicts/memory_mb regex lists.
    #[arg(long)]
    patterns: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    csv: PathBuf,
    /// Benchmark files to run.
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn build_program(n: u32, bound: Option<u32>) -> Result<ProgramStructure> {
    let p = match bound {
        Some(b) => build_fkp_with_bound(n, b)?,
        None => build_fkp(n)?,
    };
    Ok(p)
}

fn build_instance(n: u32, encoding: EncodingArg, mutate_bound: bool) -> Result<EncodedInstance> {
    let bound = if mutate_bound { Some(n.saturating_sub(1)) } else { None };
    let program = build_program(n, bound)?;
    Ok(encode(&program, encoding.to_encoding())?)
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    if args.n_min > args.n_max || args.n_min == 0 {
        bail!("size range {}..={} is empty or degenerate", args.n_min, args.n_max);
    }
    let configs = if args.configs.is_empty() {
        SmtConfig::ALL.to_vec()
    } else {
        args.configs.iter().map(|c| c.to_config()).collect()
    };
    let encodings = if args.encodings.is_empty() {
        vec![Encoding::Cubic, Encoding::Quadratic]
    } else {
        args.encodings.iter().map(|e| e.to_encoding()).collect()
    };
    let opts = SuiteOptions {
        n_min: args.n_min,
        n_max: args.n_max,
        configs,
        encodings,
        mutate_bound: args.mutate_bound,
        bitwidth: args.bitwidth,
        pin_write_selectors: args.opt_wsel,
    };
    let entries = generate_suite(&args.out, &opts)?;
    let bytes: usize = entries.iter().map(|e| e.bytes).sum();
    println!(
        "wrote {} files ({} bytes) and MANIFEST.sha256 to {}",
        entries.len(),
        bytes,
        args.out.display()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let program = build_program(args.n, args.bound)?;
    let report = check_safety_operational(&program)?;
    println!("n={} bound={}", program.n, program.assertion.1);
    println!("interleavings: {}", report.interleavings);
    if args.bound.is_none() {
        let expected = expected_interleavings(args.n).context("closed form overflows u64")?;
        println!("closed form (2n+1)!/2^n: {expected}");
        if expected != report.interleavings {
            bail!("enumeration disagrees with the closed form");
        }
    }
    println!("violations: {}", report.violations);
    if report.violations == 0 {
        println!("assertion holds in every interleaving");
    } else {
        println!("assertion fails in {} interleavings", report.violations);
    }
    Ok(())
}

fn cmd_certify(args: CertifyArgs) -> Result<()> {
    let mode = match args.mode {
        ModeArg::Witness => VerifyMode::WitnessOnly,
        ModeArg::Brute => VerifyMode::BruteForce,
    };
    let cert = certify_lower_bound(args.n, args.encoding.to_encoding(), mode)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&cert)?);
    } else {
        print!("{}", cert.render_report());
    }
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let inst = build_instance(args.n, args.encoding, args.mutate_bound)?;
    if let Some(path) = &args.dump_instance {
        std::fs::write(path, serde_json::to_string_pretty(&inst)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    let stats = clause_stats(&inst);
    println!(
        "instance: n={} encoding={} bound={} atoms={} clauses={}",
        inst.n,
        inst.encoding.tag(),
        inst.bound,
        inst.cnf.abstraction().num_vars(),
        stats.total
    );
    let opts = SolveOptions {
        seed: args.seed,
        max_conflicts: args.max_conflicts,
        eager_theory_checks: args.eager,
    };
    let res = solve(&inst, opts)?;
    println!(
        "decisions={} conflicts={} t-learn={}",
        res.stats.decisions, res.stats.propositional_conflicts, res.stats.t_learn_count
    );
    match res.outcome {
        SolveOutcome::Unsat(trace) => {
            println!("verdict: unsat ({} proof steps)", trace.steps.len());
            if let Some(path) = &args.trace {
                std::fs::write(path, write_trace(&trace))
                    .with_context(|| format!("writing {}", path.display()))?;
                println!("trace written to {}", path.display());
            }
        }
        SolveOutcome::Sat { model, .. } => {
            println!("verdict: sat");
            let vals: Vec<String> = model
                .val
                .iter()
                .map(|(v, k)| format!("v{}={k}", v.0 .0))
                .collect();
            println!("read values: {}", vals.join(" "));
        }
        SolveOutcome::Unknown => println!("verdict: unknown (conflict budget exhausted)"),
    }
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = parse_trace(&text)?;
    let inst = build_instance(args.n, args.encoding, args.mutate_bound)?;
    let report = check_proof(&inst, &trace)?;
    if report.valid {
        println!(
            "valid: {} steps, {} learned tautologies",
            report.steps, report.t_learn_count
        );
        Ok(())
    } else {
        let (step, what) = report.first_error.expect("invalid reports carry an error");
        println!("invalid at step {}: {what}", step + 1);
        std::process::exit(1);
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let command: Vec<String> = args.solver_cmd.split_whitespace().map(String::from).collect();
    if command.is_empty() {
        bail!("--solver-cmd is empty");
    }
    let solver_id = args.solver_id.clone().unwrap_or_else(|| {
        PathBuf::from(&command[0])
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| command[0].clone())
    });
    let patterns = match &args.patterns {
        Some(path) => StatPatterns::from_json_file(path)?,
        None => StatPatterns::defaults(),
    };
    let timeout = Duration::from_secs_f64(args.timeout_s);
    let mut rows = Vec::with_capacity(args.files.len());
    for file in &args.files {
        let name = file
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let (config, encoding, n) =
            parse_benchmark_name(&name).unwrap_or(("unknown".into(), "unknown".into(), 0));
        let outcome = run_solver(&command, file, timeout, &patterns)?;
        println!(
            "{name}: {} in {:.3}s{}",
            outcome.verdict,
            outcome.elapsed.as_secs_f64(),
            outcome
                .conflicts
                .map(|c| format!(" ({c} conflicts)"))
                .unwrap_or_default()
        );
        rows.push(StatsRow {
            solver: solver_id.clone(),
            config,
            encoding,
            n,
            conflicts: outcome.conflicts,
            elapsed_s: outcome.elapsed.as_secs_f64(),
            mem_mb: outcome.memory_mb,
            verdict: outcome.verdict.to_string(),
        });
    }
    let csv = write_stats_csv(&rows);
    std::fs::write(&args.csv, csv).with_context(|| format!("writing {}", args.csv.display()))?;
    println!("stats written to {}", args.csv.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => cmd_gen(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Certify(args) => cmd_certify(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Check(args) => cmd_check(args),
        Command::Run(args) => cmd_run(args),
    }
}
