//! `baryopt`: run the barycenter search, benchmark it across seeds and run
//! the Monte Carlo verification suite.

mod error;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use baryopt::bench::{quartiles, run_one, summarize, RunSummary};
use baryopt::verify::{run_suite, Suite, DEFAULT_BASE_TRIALS};

use error::CliError;
use spec::{RunSpec, SpecArgs};

#[derive(Debug, Parser)]
#[command(name = "baryopt", version, about = "Randomized barycenter search for derivative-free minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the search and write one trace CSV per run plus a summary.
    Run {
        #[command(flatten)]
        spec: SpecArgs,
        /// Also write a two-column best-f export per run.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Run the Monte Carlo verification suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        /// Base trial count; variance and noise checks use ten times as many.
        #[arg(long, default_value_t = DEFAULT_BASE_TRIALS)]
        trials: usize,
        /// Defaults to $BARYOPT_SEED, then 1.
        #[arg(long)]
        seed: Option<u64>,
        /// Report path [default: verify-<suite>.tsv].
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a spec across seeds 1..=N and summarize best f and final f.
    Bench {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// Also write a two-column best-f export per run (needs --out).
        #[arg(long)]
        gnuplot: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Thm1 => Suite::Thm1,
            SuiteArg::Thm2 => Suite::Thm2,
            SuiteArg::Thm3 => Suite::Thm3,
            SuiteArg::Thm4 => Suite::Thm4,
            SuiteArg::All => Suite::All,
        }
    }
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(spec::SEED_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("{}={v:?} is not a seed", spec::SEED_ENV))),
        Err(_) => Ok(None),
    }
}

fn cmd_run(spec: &RunSpec, gnuplot: bool) -> Result<(), CliError> {
    let dir = spec.out.clone().unwrap_or_else(|| PathBuf::from("baryopt-out"));
    output::ensure_dir(&dir)?;
    let objective = spec.objective();
    let mut summaries = Vec::new();
    let mut aborted = Vec::new();
    for (k, seed) in spec.seeds().into_iter().enumerate() {
        let noise = spec.noise_for(seed, k);
        let trace = run_one(objective.as_ref(), &spec.config_for(seed), noise)?;
        let path = output::write_run(&dir, spec, seed, noise.map(|n| n.seed), &trace, gnuplot)?;
        match &trace.aborted {
            Some(a) => aborted.push(format!("seed {seed} aborted at step {}: {}", a.step, a.reason)),
            None => summaries.push(summarize(objective.as_ref(), seed, &trace)?),
        }
        println!("{}\t{} rows\tbest_f {}", path.display(), trace.records.len(), trace.best_f);
    }
    output::write_file(&dir.join("summary.tsv"), output::runs_table(&summaries, spec.config.dim()).as_bytes())?;
    if aborted.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(aborted.join("\n")))
    }
}

fn bench_table(spec: &RunSpec, runs: &[RunSummary]) -> Result<String, CliError> {
    let best = quartiles(&runs.iter().map(|r| r.best_f).collect::<Vec<_>>())?;
    let fin = quartiles(&runs.iter().map(|r| r.final_f).collect::<Vec<_>>())?;
    Ok(format!(
        "objective\tseeds\tnoise\tbest_f_q1\tbest_f_median\tbest_f_q3\tfinal_f_q1\tfinal_f_median\tfinal_f_q3\n\
         {}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
        spec.kind.as_str(),
        runs.len(),
        spec.noise,
        best.q1,
        best.median,
        best.q3,
        fin.q1,
        fin.median,
        fin.q3
    ))
}

fn cmd_bench(spec: &RunSpec, seeds: u64, gnuplot: bool) -> Result<(), CliError> {
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    if let Some(dir) = &spec.out {
        output::ensure_dir(dir)?;
    }
    let objective = spec.objective();
    let results: Vec<Result<RunSummary, CliError>> = (1..=seeds)
        .into_par_iter()
        .map(|seed| {
            let k = (seed - 1) as usize;
            let noise = spec.noise_for(seed, k);
            let trace = run_one(objective.as_ref(), &spec.config_for(seed), noise)?;
            if let Some(dir) = &spec.out {
                output::write_run(dir, spec, seed, noise.map(|n| n.seed), &trace, gnuplot)?;
            }
            summarize(objective.as_ref(), seed, &trace).map_err(|e| CliError::Failed(e.to_string()))
        })
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let table = bench_table(spec, &runs)?;
    print!("{table}");
    if let Some(dir) = &spec.out {
        output::write_file(&dir.join("bench_summary.tsv"), table.as_bytes())?;
        output::write_file(&dir.join("bench_runs.tsv"), output::runs_table(&runs, spec.config.dim()).as_bytes())?;
    }
    Ok(())
}

fn cmd_verify(suite: Suite, trials: usize, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let seed = match seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(1),
    };
    let outcome = run_suite(suite, trials, seed)?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("verify-{suite}.tsv")));
    output::write_file(&path, outcome.render().as_bytes())?;
    for n in &outcome.notes {
        println!("# {n}");
    }
    for r in &outcome.reports {
        println!("{}\t{}", if r.pass() { "pass" } else { "FAIL" }, r.quantity);
    }
    println!("report written to {}", path.display());
    if outcome.pass() {
        return Ok(());
    }
    let failing: Vec<String> = outcome
        .reports
        .iter()
        .filter(|r| !r.pass())
        .flat_map(|r| r.failures().map(move |c| format!("{}: {} score {} ({})", r.quantity, c.label, c.score, c.criterion)))
        .collect();
    Err(CliError::Failed(format!("verification failed:\n{}", failing.join("\n"))))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { spec, gnuplot } => cmd_run(&spec.resolve()?, gnuplot),
        Command::Verify { suite, trials, seed, out } => cmd_verify(suite.into(), trials, seed, out),
        Command::Bench { spec, seeds, gnuplot } => cmd_bench(&spec.resolve()?, seeds, gnuplot),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
