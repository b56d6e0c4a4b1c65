use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlkpp::scenario::Experiment;
use nlkpp::{run, verify, LabError, RunConfig, Scenario, Summary};

#[derive(Parser)]
#[command(name = "nlkpp", version, about = "Nonlocal Fisher-KPP experiments with almost periodic coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the nonlinear equation forward from the scenario's initial field.
    Simulate(Common),
    /// Lyapunov exponent of the linearization with certified bounds.
    Lyapunov(Common),
    /// Principal eigenvalue of the time-averaged static problem.
    Eigen(Common),
    /// Pullback construction of the positive entire solution.
    Entire(Common),
    /// Acceptance suite; with scenarios, runs their own experiments and checks.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Run only these criteria (repeatable).
        #[arg(long = "criterion")]
        criteria: Vec<u8>,
        /// Keep going after a failed criterion.
        #[arg(long)]
        no_fail_fast: bool,
    },
    /// Run each scenario's own experiment.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (.toml or .json); repeat to run several.
    #[arg(long = "scenario", short = 's')]
    scenarios: Vec<PathBuf>,
    /// Output root; artifacts go to <out>/<scenario name>/.
    #[arg(long, env = "NLKPP_OUT_DIR")]
    out: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of scenarios run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

fn report(summary: &Summary) -> bool {
    for c in summary.failed_checks() {
        eprintln!("{}: check `{}` failed: {}", summary.scenario, c.name, describe(c));
    }
    println!(
        "{} [{}]: {}",
        summary.scenario,
        summary.experiment,
        if summary.passed { "ok" } else { "FAILED" }
    );
    summary.passed
}

fn describe(c: &nlkpp::runner::Check) -> String {
    match c.measured {
        Some(v) => format!("measured {v}, expected {}", c.detail),
        None => c.detail.clone(),
    }
}

fn run_scenarios(common: &Common, experiment: Option<Experiment>) -> Result<bool, LabError> {
    if common.scenarios.is_empty() {
        return Err(LabError::Config { scenario: "-".into(), message: "no --scenario given".into() });
    }
    let scenarios = common.scenarios.iter().map(|p| Scenario::from_path(p)).collect::<Result<Vec<_>, _>>()?;
    let config = RunConfig {
        out_root: common.out.clone().unwrap_or_default(),
        seed: common.seed,
        experiment,
        verbose: true,
    };
    let jobs = common.jobs.max(1);
    let mut results: Vec<Option<Result<Summary, LabError>>> = (0..scenarios.len()).map(|_| None).collect();
    for (chunk, slots) in scenarios.chunks(jobs).zip(results.chunks_mut(jobs)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk.iter().map(|s| scope.spawn(|| run(s, &config))).collect();
            for (slot, h) in slots.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("scenario thread panicked"));
            }
        });
    }
    let mut ok = true;
    for r in results.into_iter().flatten() {
        ok &= report(&r?);
    }
    Ok(ok)
}

fn suite(criteria: &[u8], fail_fast: bool) -> bool {
    let ids = if criteria.is_empty() { verify::ALL.to_vec() } else { criteria.to_vec() };
    let outcomes = verify::run_all(&ids, fail_fast, |o| println!("{o}"));
    let failed: Vec<String> = outcomes.iter().filter(|o| !o.passed).map(|o| format!("{} ({})", o.id, o.title)).collect();
    if failed.is_empty() {
        println!("all {} criteria passed", outcomes.len());
        true
    } else {
        eprintln!("failed criteria: {}", failed.join(", "));
        false
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(c) => run_scenarios(c, Some(Experiment::Simulate)),
        Command::Lyapunov(c) => run_scenarios(c, Some(Experiment::Lyapunov)),
        Command::Eigen(c) => run_scenarios(c, Some(Experiment::Eigen)),
        Command::Entire(c) => run_scenarios(c, Some(Experiment::Entire)),
        Command::Run(c) => run_scenarios(c, None),
        Command::Verify { common, criteria, no_fail_fast } => {
            if common.scenarios.is_empty() {
                Ok(suite(criteria, !no_fail_fast))
            } else {
                run_scenarios(common, None)
            }
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
