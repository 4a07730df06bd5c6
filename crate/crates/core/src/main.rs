use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hrlab::counterexample::build_counterexample;
use hrlab::scenario::{
    apply_overrides, list_scenarios, load_scenario, output_dir, run_scenario, RunOutput, Stage, OUT_DIR_ENV,
};

/// Exit code when the run finished but some check missed its expectation or
/// stayed inconclusive.
const EXIT_UNMET: u8 = 1;
/// Exit code for unreadable or invalid input.
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "hrlab",
    version,
    about = "Complete-convergence laboratory: scenario runner and checks"
)]
struct Cli {
    /// Worker threads for simulation (default: all cores). Results do not
    /// depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file, or the name of a bundled scenario.
    #[arg(long, value_name = "PATH")]
    scenario: String,
    /// Override the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the analytic horizon.
    #[arg(long)]
    horizon: Option<u64>,
    /// Override the number of counterexample levels.
    #[arg(long)]
    levels: Option<u32>,
    /// Output directory [env: HRLAB_OUT_DIR; default: hrlab-out].
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Condition A and growth checks on the scenario's sequences.
    CheckSequences(ScenarioArgs),
    /// Analytic series conditions for the scenario's law.
    EvaluateConditions(ScenarioArgs),
    /// Monte Carlo checks only.
    Simulate(ScenarioArgs),
    /// Build the divergent construction and print its certificate.
    Counterexample {
        #[arg(long, default_value_t = 4)]
        levels: u32,
        /// Also write counterexample.json here.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Every requested check, in dependency order.
    Run(ScenarioArgs),
    /// Bundled scenarios with their anchors.
    ListScenarios {
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot start {w} workers: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::CheckSequences(a) => run_stages(a, &[Stage::Sequences]),
        Command::EvaluateConditions(a) => run_stages(a, &[Stage::Analytic]),
        Command::Simulate(a) => run_stages(a, &[Stage::Simulation]),
        Command::Run(a) => run_stages(a, &[]),
        Command::Counterexample { levels, out } => counterexample(levels, out.as_deref()),
        Command::ListScenarios { json } => {
            let cat = list_scenarios();
            if json {
                println!("{}", serde_json::to_string_pretty(&cat)?);
            } else {
                for e in cat {
                    println!("{:<22} {:<18} {}", e.name, e.family, e.anchor);
                    println!("{:<22} {}", "", e.description);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn run_stages(args: ScenarioArgs, stages: &[Stage]) -> Result<ExitCode> {
    let mut scenario = load_scenario(&args.scenario)?;
    apply_overrides(&mut scenario, args.seed, args.levels, args.horizon)?;
    let out = run_scenario(&scenario, stages)?;
    if out.report.sections.is_empty() {
        eprintln!("note: the scenario requests no checks at this stage");
    }
    let dir = output_dir(args.out.as_deref());
    write_all(&out, &dir)?;
    print_summary(&out);
    Ok(if out.report.success {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNMET)
    })
}

fn write_all(out: &RunOutput, dir: &Path) -> Result<()> {
    let paths = out
        .write_to(dir)
        .with_context(|| format!("writing to {} (set --out or {OUT_DIR_ENV})", dir.display()))?;
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn print_summary(out: &RunOutput) {
    println!(
        "{:<16} {:<26} {:<13} {:<13} ok",
        "check", "condition", "status", "expected"
    );
    for r in &out.report.summary {
        let expected = r.expected.map(|v| format!("{v:?}")).unwrap_or_else(|| "-".into());
        let status = format!("{:?}", r.status);
        println!(
            "{:<16} {:<26} {:<13} {:<13} {}",
            r.check.key(),
            r.condition,
            status,
            expected,
            r.ok
        );
    }
    for s in out.report.sections.iter().filter(|s| s.error.is_some()) {
        eprintln!("{}: {}", s.check, s.error.as_deref().unwrap_or_default());
    }
}

fn counterexample(levels: u32, out: Option<&Path>) -> Result<ExitCode> {
    let ce = build_counterexample(levels)?;
    let cert = ce.divergence_certificate()?;
    let body = json!({
        "levels": cert.levels.iter().map(|b| json!({
            "m": b.m,
            "logK": b.log_k,
            "blockLowerBound": b.block_lower_bound,
        })).collect::<Vec<_>>(),
        "cumulative": cert.cumulative,
        "phiMomentTruncated": cert.phi_moment_truncated,
    });
    let text = serde_json::to_string_pretty(&body)? + "\n";
    print!("{text}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let p = dir.join("counterexample.json");
        std::fs::write(&p, &text)?;
        eprintln!("wrote {}", p.display());
    }
    let replay_ok = ce.replay().iter().all(|&x| x);
    Ok(if replay_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNMET)
    })
}
