use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rcsn_core::{compare, RunSummary};
use rcsn_harness::output::{read_summary, SUMMARY_FILE};
use rcsn_harness::plot::{emit_plot_data, PlotKind};
use rcsn_harness::{execute, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "rcsn", version, about = "Run solver experiments and export their results")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver on every instance of a configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Exit with code 2 if any run ends in a direction failure.
        #[arg(long)]
        strict: bool,
        /// Worker threads; instances run in parallel, output order is fixed.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print per-solver statistics and pairwise score comparisons.
    Summarize {
        #[arg(long)]
        out_dir: PathBuf,
        /// Scores within this distance count as ties.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Write CSV series for plotting under `<out-dir>/plots`.
    Plotdata {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Baseline solver for ratio plots.
        #[arg(long)]
        reference: Option<String>,
    },
}

fn summarize(rows: &[RunSummary], tol: f64) -> Result<()> {
    let mut by_solver: BTreeMap<&str, Vec<RunSummary>> = BTreeMap::new();
    for r in rows {
        by_solver.entry(r.solver.as_str()).or_default().push(r.clone());
    }
    println!("{:<20} {:>6} {:>10} {:>12}  statuses", "solver", "runs", "mean_iter", "mean_score");
    for (solver, runs) in &by_solver {
        let n = runs.len() as f64;
        let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
        for r in runs {
            *statuses.entry(r.status.as_str()).or_default() += 1;
        }
        let statuses: Vec<String> = statuses.iter().map(|(s, c)| format!("{s}={c}")).collect();
        println!(
            "{:<20} {:>6} {:>10.1} {:>12.6e}  {}",
            solver,
            runs.len(),
            runs.iter().map(|r| r.iters as f64).sum::<f64>() / n,
            runs.iter().map(|r| r.score).sum::<f64>() / n,
            statuses.join(" ")
        );
    }
    let solvers: Vec<&str> = by_solver.keys().copied().collect();
    for (i, a) in solvers.iter().enumerate() {
        for b in &solvers[i + 1..] {
            let c = compare(&by_solver[a], &by_solver[b], tol)?;
            println!("{a} vs {b}: lower {} higher {} ties {}", c.lower, c.higher, c.ties);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out_dir, strict, jobs } => ExperimentConfig::load(&config).and_then(|cfg| {
            let result = execute(&cfg, &out_dir, jobs)?;
            println!("{} runs written to {}", result.runs.len(), out_dir.display());
            if (strict || cfg.strict) && result.has_direction_failure() {
                eprintln!("direction failure in strict mode");
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }),
        Command::Summarize { out_dir, tol } => {
            read_summary(&out_dir.join(SUMMARY_FILE)).and_then(|rows| summarize(&rows, tol)).map(|_| ExitCode::SUCCESS)
        }
        Command::Plotdata { out_dir, kind, reference } => emit_plot_data(&out_dir, kind, reference.as_deref()).map(|p| {
            println!("{}", p.display());
            ExitCode::SUCCESS
        }),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::FAILURE
    })
}
