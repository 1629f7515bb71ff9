use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use invgen::analysis::{analyze, AnalysisOptions};
use invgen::engine::RunOptions;
use invgen::program::{gen_expo, Program, ProgramError};
use invgen::report;
use invgen::smt::{InternalSolver, SmtBackend, SmtLibSolver};

#[derive(Parser)]
#[command(
    name = "invgen",
    version,
    about = "Least inductive invariants in template linear constraint domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a program file and print bounds per node and template row.
    Analyze(AnalyzeArgs),
    /// Print the exponential benchmark program for the given n.
    GenExpo { n: usize },
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    file: PathBuf,
    /// `internal`, `external` or `external:<command>`. A bare `external` runs
    /// the command in INVGEN_SMT, or `z3 -in -smt2`.
    #[arg(long, default_value = "internal")]
    solver: String,
    /// Pick the best improvement per variable instead of the first one found.
    #[arg(long)]
    local_opt: bool,
    #[arg(long)]
    json: bool,
    /// Print iteration counters after the bounds.
    #[arg(long)]
    stats: bool,
    /// Write one JSON record per iteration to this file.
    #[arg(long, value_name = "FILE")]
    trace: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    max_iters: Option<u64>,
    /// Certify that the bounds are closed under every edge.
    #[arg(long)]
    check: bool,
    /// Analyze the graph as written instead of merging paths onto a cut set.
    #[arg(long)]
    no_compress: bool,
}

fn backend(spec: &str) -> Result<Box<dyn SmtBackend>> {
    if spec == "internal" {
        return Ok(Box::new(InternalSolver::new()));
    }
    let command = match spec.strip_prefix("external") {
        Some("") => std::env::var("INVGEN_SMT").unwrap_or_else(|_| SmtLibSolver::DEFAULT_COMMAND.to_string()),
        Some(rest) => match rest.strip_prefix(':') {
            Some(cmd) if !cmd.trim().is_empty() => cmd.to_string(),
            _ => bail!("invalid --solver `{spec}`; expected internal, external or external:<command>"),
        },
        None => bail!("invalid --solver `{spec}`; expected internal, external or external:<command>"),
    };
    Ok(Box::new(SmtLibSolver::new(command)))
}

fn run_analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.file).with_context(|| format!("cannot read {}", args.file.display()))?;
    let program = Program::parse(&text).map_err(|e| match e {
        ProgramError::Syntax { line, col, message } => {
            anyhow::anyhow!("{}:{line}:{col}: {message}", args.file.display())
        }
        other => anyhow::anyhow!("{}: {other}", args.file.display()),
    })?;
    let opts = AnalysisOptions {
        compress: !args.no_compress,
        check: args.check,
        run: RunOptions {
            local_opt: args.local_opt,
            max_iters: args.max_iters,
        },
    };
    let analysis = analyze(&program, backend(&args.solver)?, &opts)?;
    for w in &analysis.warnings {
        eprintln!("warning: {w}");
    }
    if !analysis.outcome.converged {
        eprintln!("warning: iteration cap reached; bounds are below the least invariant");
    }
    if let Some(path) = &args.trace {
        let mut f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        for record in &analysis.outcome.trace {
            writeln!(f, "{}", report::trace_json(&analysis.system, record))?;
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report::to_json(&analysis))?);
    } else {
        print!("{}", report::bounds_text(&analysis.system, &analysis.outcome.bounds));
        if args.stats {
            print!("{}", report::stats_text(&analysis.outcome.stats));
        }
        if let Some(check) = &analysis.check {
            print!("{}", report::check_text(&analysis.system, check));
        }
    }
    Ok(if analysis.certified() == Some(false) {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Analyze(args) => run_analyze(&args),
        Command::GenExpo { n } => {
            let Some(text) = gen_expo(n) else {
                bail!("n must be at least 1");
            };
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
