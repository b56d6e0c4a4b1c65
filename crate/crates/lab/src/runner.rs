//! Runs one scenario, writes its artifacts and evaluates its checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nlkpp_core::dynamics::{pullback_entire_solution, EntireStatus, PullbackOptions};
use nlkpp_core::evolution::domain_comparison;
use nlkpp_core::spectral::{
    default_initials, lyapunov_exponent, principal_eigenvalue_static, relation_audit, AuditOptions, LyapunovOptions,
};
use nlkpp_core::{Model, SolveOptions, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::io::{self, SUMMARY_SCHEMA};
use crate::scenario::{Experiment, InitialSpec, Scenario};
use crate::{verify, LabError};

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    /// Artifacts go to `out_root/<scenario name>/`; when empty, the
    /// scenario's `output` entry or `out`.
    pub out_root: PathBuf,
    pub seed: Option<u64>,
    /// Run this experiment instead of the scenario's own.
    pub experiment: Option<Experiment>,
    /// Print one line per acceptance criterion as it finishes.
    pub verbose: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub scenario: String,
    pub experiment: &'static str,
    pub seed: u64,
    pub measured: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub report: serde_json::Value,
}

impl Summary {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

struct Outcome {
    measured: BTreeMap<String, f64>,
    checks: Vec<Check>,
    report: serde_json::Value,
}

impl Outcome {
    fn new(report: serde_json::Value) -> Self {
        Outcome { measured: BTreeMap::new(), checks: Vec::new(), report }
    }

    fn measure(&mut self, name: &str, value: f64) {
        self.measured.insert(name.to_string(), value);
    }

    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.to_string(), passed, measured: None, detail: detail.into() });
    }
}

pub fn initial_field(scenario: &Scenario, len: usize, seed: u64) -> Vec<f64> {
    match scenario.params.initial {
        InitialSpec::Constant(v) => vec![v; len],
        InitialSpec::Random { random: [lo, hi] } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..len).map(|_| rng.random_range(lo..=hi)).collect()
        }
    }
}

fn config_error(scenario: &Scenario, message: impl Into<String>) -> LabError {
    LabError::Config { scenario: scenario.name.clone(), message: message.into() }
}

pub fn run(scenario: &Scenario, config: &RunConfig) -> Result<Summary, LabError> {
    let experiment = config.experiment.unwrap_or(scenario.experiment);
    let seed = config.seed.unwrap_or(scenario.seed);
    let root = if config.out_root.as_os_str().is_empty() {
        scenario.output.clone().unwrap_or_else(|| PathBuf::from("out"))
    } else {
        config.out_root.clone()
    };
    let dir = root.join(&scenario.name);
    std::fs::create_dir_all(&dir).map_err(|e| LabError::Io { path: dir.clone(), source: e })?;

    let mut outcome = match experiment {
        Experiment::Simulate => simulate(scenario, seed, &dir)?,
        Experiment::Lyapunov => lyapunov(scenario, &dir)?,
        Experiment::Eigen => eigen(scenario, &dir)?,
        Experiment::Entire => entire(scenario, &dir)?,
        Experiment::VerifyAll => verify_all(scenario, config.verbose)?,
    };

    for (name, expect) in &scenario.expect {
        let Some(&value) = outcome.measured.get(name) else {
            return Err(config_error(scenario, format!("expectation `{name}` names no measured quantity")));
        };
        outcome.checks.push(Check {
            name: name.clone(),
            passed: expect.holds(value),
            measured: Some(value),
            detail: serde_json::to_string(expect)?,
        });
    }

    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        scenario: scenario.name.clone(),
        experiment: experiment.as_str(),
        seed,
        passed: outcome.checks.iter().all(|c| c.passed),
        measured: outcome.measured,
        checks: outcome.checks,
        report: outcome.report,
    };
    io::write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

fn log_slope(traj: &Trajectory) -> Option<f64> {
    let tail: Vec<(f64, f64)> = traj
        .fields
        .iter()
        .skip(traj.len() / 2)
        .filter(|f| f.sup_norm() > 0.0)
        .map(|f| (f.t, f.sup_norm().ln()))
        .collect();
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn solve_options(scenario: &Scenario) -> SolveOptions {
    SolveOptions { dt: scenario.params.dt, save_every: Some(scenario.params.save_every.unwrap_or(1.0)) }
}

fn simulate(scenario: &Scenario, seed: u64, dir: &Path) -> Result<Outcome, LabError> {
    let domain = scenario.domain()?;
    let model = scenario.nonlinear()?;
    let u0 = initial_field(scenario, domain.len(), seed);
    let horizon = scenario.params.horizon.unwrap_or(50.0);
    let opts = solve_options(scenario);
    let traj = model.solve(&u0, 0.0, horizon, &opts)?;
    io::write_trajectory(&dir.join("trajectory.csv"), &domain, &traj)?;

    let mut out = Outcome::new(serde_json::json!({ "u_cap": model.u_cap(), "dt_max": model.dt_max() }));
    out.measure("final_sup", traj.last().sup_norm());
    out.measure("final_min", traj.last().min());
    if let Some(rate) = log_slope(&traj) {
        out.measure("decay_rate", rate);
    }

    if let Some(inner) = &scenario.domain_spec()?.inner {
        let bounds: Vec<(f64, f64)> = inner.iter().map(|b| (b[0], b[1])).collect();
        let (inner_domain, _) = domain.sub_box(&bounds)?;
        let inner_model = scenario.nonlinear_on(&scenario.dispersal_on(&inner_domain)?)?;
        let cmp = domain_comparison(&model, &inner_model, &u0, 0.0, horizon, &opts, 1e-9)?;
        out.measure("comparison_excess", cmp.max_excess);
        out.measure("interior_gap", cmp.interior_gap);
        out.check("domain_comparison", cmp.passed, format!("max excess {:e}", cmp.max_excess));
        out.report["domain_comparison"] = serde_json::to_value(&cmp)?;
    }
    Ok(out)
}

fn lyapunov_options(scenario: &Scenario) -> LyapunovOptions {
    let mut opts = LyapunovOptions::default();
    if let Some(h) = scenario.params.horizon {
        opts.horizon = h;
    }
    if let Some(r) = scenario.params.renorm {
        opts.renorm = r;
    }
    opts.dt = scenario.params.dt;
    opts
}

fn lyapunov(scenario: &Scenario, dir: &Path) -> Result<Outcome, LabError> {
    let model = scenario.linear()?;
    let opts = AuditOptions { lyapunov: lyapunov_options(scenario), ..Default::default() };
    let audit = relation_audit(&model, &scenario.a.build(), &[], &opts)?;
    let half = opts.lyapunov.horizon / 2.0;
    let step = half / audit.lyapunov.windows.len() as f64;
    io::write_series(
        &dir.join("lyapunov_windows.csv"),
        ["t_end", "estimate"],
        audit.lyapunov.windows.iter().enumerate().map(|(k, v)| (half + (k + 1) as f64 * step, *v)),
    )?;
    let mut out = Outcome::new(serde_json::to_value(&audit)?);
    out.measure("lambda", audit.estimate);
    out.measure("spread", audit.lyapunov.spread);
    out.measure("best_lower", audit.best_lower.value);
    if let Some(u) = audit.best_upper {
        out.measure("best_upper", u.value);
    }
    out.check(
        "bound_ordering",
        audit.passed,
        format!(
            "{:.6} <= {:.6} <= {}",
            audit.best_lower.value,
            audit.estimate,
            audit.best_upper.map_or("inf".to_string(), |u| format!("{:.6}", u.value))
        ),
    );
    Ok(out)
}

fn eigen(scenario: &Scenario, dir: &Path) -> Result<Outcome, LabError> {
    let model = scenario.linear()?;
    let pair = principal_eigenvalue_static(&model)?;
    io::write_field(&dir.join("eigenvector.csv"), model.dispersal().domain(), "psi", &pair.vector)?;
    let mut out = Outcome::new(serde_json::json!({ "iterations": pair.iterations }));
    out.measure("lambda", pair.lambda);
    out.measure("residual", pair.residual);
    Ok(out)
}

fn entire(scenario: &Scenario, dir: &Path) -> Result<Outcome, LabError> {
    let model: Model = scenario.nonlinear()?;
    let linear = scenario.linear()?;
    let domain = model.dispersal().domain().clone();
    let growth = lyapunov_exponent(
        &linear,
        &default_initials(&domain),
        &LyapunovOptions { horizon: 100.0, ..Default::default() },
    )?
    .estimate;
    let [lo, hi] = scenario.params.window.unwrap_or([0.0, 20.0]);
    let mut opts = PullbackOptions { growth_rate: Some(growth), dt: scenario.params.dt, ..Default::default() };
    if let Some(t) = scenario.params.tol {
        opts.tol = t;
    }
    if let Some(s) = scenario.params.save_every {
        opts.save_every = s;
    }
    let e = pullback_entire_solution(&model, (lo, hi), &opts)?;
    io::write_trajectory(&dir.join("u_star.csv"), &domain, &e.trajectory)?;
    let max = e.trajectory.fields.iter().map(|f| f.sup_norm()).fold(0.0, f64::max);
    let mut out = Outcome::new(serde_json::json!({
        "status": e.status,
        "depths": e.depths,
        "cap": e.cap,
        "window": [lo, hi],
    }));
    out.measure("lambda", growth);
    out.measure("floor", e.floor);
    out.measure("gap", e.gap);
    out.measure("depth", *e.depths.last().unwrap_or(&0.0));
    out.measure("u_star_min", e.floor);
    out.measure("u_star_max", max);
    let consistent = e.status != EntireStatus::Inconsistent;
    out.check("dichotomy", consistent, format!("status {:?} with growth rate {growth:.4}", e.status));
    Ok(out)
}

fn verify_all(scenario: &Scenario, verbose: bool) -> Result<Outcome, LabError> {
    let ids: Vec<u8> =
        if scenario.params.criteria.is_empty() { verify::ALL.to_vec() } else { scenario.params.criteria.clone() };
    let results = verify::run_all(&ids, true, |o| {
        if verbose {
            println!("{o}");
        }
    });
    let mut out = Outcome::new(serde_json::to_value(&results)?);
    for r in &results {
        out.measure(&format!("criterion_{:02}_seconds", r.id), r.seconds);
        out.checks.push(Check {
            name: format!("criterion {}: {}", r.id, r.title),
            passed: r.passed,
            measured: None,
            detail: r.detail.clone(),
        });
    }
    Ok(out)
}
