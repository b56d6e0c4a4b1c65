//! The acceptance suite: thirteen named checks, each reproducible from
//! fixed seeds.

use std::fmt;
use std::sync::OnceLock;
use std::time::Instant;

use nlkpp_core::dynamics::{
    almost_periodicity_diagnostic, contraction_check, extinction_check, pullback_entire_solution, stability_check,
    uniqueness_check, ApDiagnosticOptions, ContractionOptions, EntireSolution, EntireStatus, PullbackOptions,
};
use nlkpp_core::evolution::{check_ordering, domain_comparison};
use nlkpp_core::kernel::iterated_kernel_lower_bound;
use nlkpp_core::spectral::{
    default_initials, domain_monotonicity_check, lyapunov_exponent, principal_eigenvalue_static, relation_audit,
    AuditOptions, AuditReport, LyapunovOptions, Provenance,
};
use nlkpp_core::{
    ApCoefficient, BoundaryShift, Dispersal, Domain, KernelFamily, KernelOptions, Model, Reaction, SolveOptions,
    SpatialProfile, TemporalMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::runner::initial_field;
use crate::{oracle, shipped, LabError};

pub const ALL: [u8; 13] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "constant-coefficient exactness",
        2 => "Lyapunov estimate independent of the initial field",
        3 => "certified bounds bracket the Lyapunov estimate",
        4 => "analytic lower bounds",
        5 => "monotonicity in the domain",
        6 => "comparison principle",
        7 => "part-metric contraction",
        8 => "persistence or extinction",
        9 => "uniqueness of the positive entire solution",
        10 => "global stability of the positive entire solution",
        11 => "almost periodicity of the positive entire solution",
        12 => "iterated-kernel lower bound",
        13 => "integrator order and cocycle property",
        _ => "unknown criterion",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] criterion {:>2} {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        )
    }
}

type Check = Result<(bool, String), LabError>;

pub fn run_criterion(id: u8) -> Outcome {
    let start = Instant::now();
    let result = match id {
        1 => constant_exactness(),
        2 => initial_independence(),
        3 => bound_ordering(),
        4 => lower_bounds(),
        5 => domain_monotonicity(),
        6 => comparison(),
        7 => part_metric(),
        8 => dichotomy(),
        9 => uniqueness(),
        10 => stability(),
        11 => almost_periodicity(),
        12 => iterated_kernel(),
        13 => integrator(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id, title: title(id), passed, detail, seconds: start.elapsed().as_secs_f64() }
}

/// Runs the criteria in order, stopping at the first failure when
/// `fail_fast` is set.
pub fn run_all(ids: &[u8], fail_fast: bool, mut each: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let mut out = Vec::new();
    for &id in ids {
        let o = run_criterion(id);
        each(&o);
        let failed = !o.passed;
        out.push(o);
        if failed && fail_fast {
            break;
        }
    }
    out
}

fn circle(points: usize) -> Domain {
    Domain::circle(0.0, std::f64::consts::TAU, points).expect("valid circle")
}

fn gaussian_on(domain: &Domain, sigma: f64) -> Result<Dispersal, LabError> {
    Ok(Dispersal::new(domain, KernelFamily::Gaussian { sigma }, &KernelOptions::default())?)
}

fn seeded_field(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(lo..=hi)).collect()
}

fn constant_exactness() -> Check {
    let start = Instant::now();
    let domain = circle(128);
    let op = gaussian_on(&domain, 1.0)?;
    let mut worst_lyapunov: f64 = 0.0;
    let mut worst_eigen: f64 = 0.0;
    for a0 in [-1.2, -0.5, 0.0, 0.5] {
        let model = Model::linear(&op, &ApCoefficient::constant(a0), BoundaryShift::None)?;
        let est = lyapunov_exponent(&model, &default_initials(&domain), &LyapunovOptions::default())?;
        let eig = principal_eigenvalue_static(&model)?;
        worst_lyapunov = worst_lyapunov.max((est.estimate - (1.0 + a0)).abs());
        worst_eigen = worst_eigen.max((eig.lambda - (1.0 + a0)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Ok((
        worst_lyapunov <= 1e-3 && worst_eigen <= 1e-10 && secs < 30.0,
        format!("max Lyapunov error {worst_lyapunov:.2e}, max eigenvalue error {worst_eigen:.2e}, {secs:.1} s"),
    ))
}

fn initial_independence() -> Check {
    let domain = circle(256);
    let op = gaussian_on(&domain, 1.0)?;
    let a = ApCoefficient::constant(0.3).with_mode(TemporalMode::sine(1.0, SpatialProfile::cosine(0.5, 0.15, 1.0, 0.0)));
    let model = Model::linear(&op, &a, BoundaryShift::None)?;
    let opts = LyapunovOptions { horizon: 500.0, ..Default::default() };
    let r = lyapunov_exponent(&model, &default_initials(&domain), &opts)?;
    Ok((
        r.spread <= 2e-2,
        format!("estimates {:?}, spread {:.2e}", r.per_initial.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>(), r.spread),
    ))
}

/// Relation audits of every shipped scenario, shared by two criteria.
fn shipped_audits() -> Result<&'static [(String, AuditReport)], LabError> {
    static AUDITS: OnceLock<Result<Vec<(String, AuditReport)>, String>> = OnceLock::new();
    let cached = AUDITS.get_or_init(|| {
        let run = || -> Result<Vec<(String, AuditReport)>, LabError> {
            let mut out = Vec::new();
            for s in shipped::models() {
                let model = s.linear()?;
                let audit = relation_audit(&model, &s.a.build(), &[], &AuditOptions::default())?;
                out.push((s.name.clone(), audit));
            }
            Ok(out)
        };
        run().map_err(|e| e.to_string())
    });
    match cached {
        Ok(v) => Ok(v),
        Err(message) => Err(LabError::Config { scenario: "shipped".into(), message: message.clone() }),
    }
}

fn bound_ordering() -> Check {
    let audits = shipped_audits()?;
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, a) in audits {
        ok &= a.passed;
        lines.push(format!(
            "{name}: {:.4} <= {:.4} <= {}",
            a.best_lower.value,
            a.estimate,
            a.best_upper.map_or("inf".into(), |u| format!("{:.4}", u.value))
        ));
    }
    Ok((ok, lines.join("; ")))
}

fn lower_bounds() -> Check {
    let audits = shipped_audits()?;
    let analytic = |p: Provenance| {
        matches!(p, Provenance::SupTimeMean | Provenance::MeanPlusKernelMass | Provenance::MeanPlusOne)
    };
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for (_, a) in audits {
        for b in a.lower.iter().filter(|b| analytic(b.provenance)) {
            worst = worst.max(b.value - a.estimate);
            count += 1;
        }
    }
    let (_, cosine) = audits.iter().find(|(n, _)| n == "static_cosine").expect("static_cosine is shipped");
    let plus_one = cosine.lower.iter().find(|b| b.provenance == Provenance::MeanPlusOne).map(|b| b.value);
    let cosine_ok = plus_one.is_some_and(|v| (v - 2.0).abs() < 1e-9) && cosine.estimate >= 2.0 - 2e-2;
    Ok((
        worst <= 2e-2 && cosine_ok,
        format!(
            "{count} bounds, max(bound - estimate) {worst:.2e}; a = 1 + cos x: mean + 1 = {:?}, estimate {:.5}",
            plus_one, cosine.estimate
        ),
    ))
}

fn domain_monotonicity() -> Check {
    let start = Instant::now();
    let sigma = 0.2;
    let outer = Domain::interval(0.0, 1.0, 201)?;
    let mut models = Vec::new();
    let mut oracle_gap: f64 = 0.0;
    for w in [0.1, 0.2, 0.3, 0.4, 0.5] {
        let (inner, _) = outer.sub_box(&[(0.5 - w, 0.5 + w)])?;
        let model = Model::linear(&gaussian_on(&inner, sigma)?, &ApCoefficient::constant(0.0), BoundaryShift::None)?;
        let n = inner.len();
        let (nodes, weights) = oracle::trapezoid(0.5 - w, 0.5 + w, n);
        let dense = oracle::dense_principal_eigenvalue(&nodes, &weights, &vec![0.0; n], |z| oracle::gaussian(z, sigma));
        let power = principal_eigenvalue_static(&model)?.lambda;
        oracle_gap = oracle_gap.max((power - dense).abs());
        models.push(model);
    }
    let report = domain_monotonicity_check(&models, &LyapunovOptions::default(), 0.0)?;
    let secs = start.elapsed().as_secs_f64();
    Ok((
        report.passed && oracle_gap <= 1e-8 && secs < 60.0,
        format!(
            "lambda(w) = {:?}, max gap to dense eigensolve {oracle_gap:.2e}, {secs:.1} s",
            report.lambdas.iter().map(|v| format!("{v:.8}")).collect::<Vec<_>>()
        ),
    ))
}

/// `a = 0.3 + 0.5 sin t (1 + 0.3 cos x) + 0.2 cos(√2 t)`.
pub fn quasi_periodic_coefficient() -> ApCoefficient {
    ApCoefficient::constant(0.3)
        .with_mode(TemporalMode::sine(1.0, SpatialProfile::cosine(0.5, 0.15, 1.0, 0.0)))
        .with_mode(TemporalMode::cosine(std::f64::consts::SQRT_2, SpatialProfile::constant(0.2)))
}

fn quasi_periodic_model(points: usize) -> Result<Model, LabError> {
    let op = gaussian_on(&circle(points), 1.0)?;
    Ok(Model::nonlinear(&op, &Reaction::logistic(quasi_periodic_coefficient(), ApCoefficient::constant(1.0)))?)
}

fn comparison() -> Check {
    let model = quasi_periodic_model(64)?;
    let n = model.len();
    let opts = SolveOptions { dt: None, save_every: Some(0.5) };
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lower = seeded_field(&mut rng, n, 0.0, 2.0);
        let upper: Vec<f64> = lower.iter().map(|u| u + rng.random_range(0.0..=1.0)).collect();
        let lo = model.solve(&lower, 0.0, 10.0, &opts)?;
        let hi = model.solve(&upper, 0.0, 10.0, &opts)?;
        worst = worst.max(check_ordering(&lo, &hi, 1e-9)?.max_excess);
    }
    let s = shipped::load("nested_box.toml");
    let domain = s.domain()?;
    let outer = s.nonlinear()?;
    let bounds: Vec<(f64, f64)> =
        s.domain_spec()?.inner.as_ref().expect("nested scenario").iter().map(|b| (b[0], b[1])).collect();
    let (inner_domain, _) = domain.sub_box(&bounds)?;
    let inner = s.nonlinear_on(&s.dispersal_on(&inner_domain)?)?;
    let u0 = initial_field(&s, domain.len(), s.seed);
    let horizon = s.params.horizon.unwrap_or(10.0);
    let nested = domain_comparison(&outer, &inner, &u0, 0.0, horizon, &opts, 1e-9)?;
    Ok((
        worst <= 1e-9 && nested.passed,
        format!(
            "100 pairs, max(lower - upper) {worst:.2e}; nested domains max excess {:.2e}, interior gap {:.2e}",
            nested.max_excess, nested.interior_gap
        ),
    ))
}

fn part_metric() -> Check {
    let model = quasi_periodic_model(64)?;
    let n = model.len();
    let opts = ContractionOptions::default();
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let u = seeded_field(&mut rng, n, 0.2, 3.0);
        let v = seeded_field(&mut rng, n, 0.2, 3.0);
        let trace = contraction_check(&model, &u, &v, 0.0, 0.5, 20, &opts)?;
        worst = worst.max(trace.max_increase);
    }
    let constant = shipped::load("constant_logistic.toml").nonlinear()?;
    let m = constant.len();
    let trace = contraction_check(&constant, &vec![0.5; m], &vec![1.5; m], 0.0, 1.0, 50, &opts)?;
    let decrement = trace.decrement.unwrap_or(0.0);
    let last = *trace.rho.last().expect("nonempty trace");
    Ok((
        worst <= 1e-9 && decrement > 0.0 && last < 1e-6,
        format!("100 pairs, max increase {worst:.2e}; constants: decrement {decrement:.3e}, rho(50) = {last:.2e}"),
    ))
}

fn dichotomy() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for file in ["constant_logistic.toml", "quasi_periodic.toml"] {
        let s = shipped::load(file);
        let [lo, hi] = s.params.window.unwrap_or([0.0, 20.0]);
        let e = pullback_entire_solution(&s.nonlinear()?, (lo, hi), &PullbackOptions::default())?;
        ok &= e.floor > 1e-3 && e.status == EntireStatus::StrictlyPositive;
        lines.push(format!("{}: floor {:.4}", s.name, e.floor));
    }
    let s = shipped::load("extinction.toml");
    let model = s.nonlinear()?;
    let growth = lyapunov_exponent(&s.linear()?, &default_initials(&s.domain()?), &LyapunovOptions::default())?.estimate;
    let report = extinction_check(&model, &vec![1.0; model.len()], 200.0, growth, 1e-6, 2e-2)?;
    let rate = report.rate.unwrap_or(f64::NEG_INFINITY);
    ok &= report.passed && (rate + 0.2).abs() <= 1e-2;
    lines.push(format!("extinction: growth {growth:.4}, decay rate {rate:.4}, final sup {:.2e}", report.final_sup));
    Ok((ok, lines.join("; ")))
}

fn uniqueness() -> Check {
    let model = quasi_periodic_model(128)?;
    let (_, report) = uniqueness_check(&model, (0.0, 50.0), 10.0, 0.05, 1e-6, &PullbackOptions::default())?;
    let gaps: Vec<String> = report.gaps.iter().map(|(n, g)| format!("{n} {g:.2e}")).collect();
    Ok((report.passed, gaps.join(", ")))
}

/// `u*` of the quasi-periodic scenario on `[0, 250]`, shared by two criteria.
fn quasi_periodic_entire() -> Result<&'static (Model, EntireSolution), LabError> {
    static ENTIRE: OnceLock<Result<(Model, EntireSolution), String>> = OnceLock::new();
    let cached = ENTIRE.get_or_init(|| {
        let run = || -> Result<(Model, EntireSolution), LabError> {
            let model = quasi_periodic_model(128)?;
            let e = pullback_entire_solution(&model, (0.0, 250.0), &PullbackOptions::default())?;
            Ok((model, e))
        };
        run().map_err(|e| e.to_string())
    });
    match cached {
        Ok(v) => Ok(v),
        Err(message) => Err(LabError::Config { scenario: "quasi_periodic".into(), message: message.clone() }),
    }
}

fn stability() -> Check {
    let start = Instant::now();
    let (model, entire) = quasi_periodic_entire()?;
    let mut initials = Vec::new();
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        initials.push(seeded_field(&mut rng, model.len(), 0.05, 2.0 * model.u_cap()));
    }
    let report = stability_check(model, entire, &initials, 200.0, 1e-4)?;
    let worst = report.members.iter().map(|m| m.final_distance).fold(0.0, f64::max);
    let rho_rise = report.members.iter().map(|m| m.max_rho_increase).fold(f64::NEG_INFINITY, f64::max);
    let secs = start.elapsed().as_secs_f64();
    Ok((
        report.passed && secs < 300.0,
        format!("20 initials, max distance at t = 200 {worst:.2e}, max part-metric rise {rho_rise:.2e}, {secs:.1} s"),
    ))
}

fn almost_periodicity() -> Check {
    let (model, entire) = quasi_periodic_entire()?;
    let a = quasi_periodic_coefficient();
    let b = ApCoefficient::constant(1.0);
    let report = almost_periodicity_diagnostic(model, entire, &[&a, &b], &ApDiagnosticOptions::default())?;
    let levels: Vec<String> = report
        .levels
        .iter()
        .map(|l| format!("eps {}: {} shifts, error {:.2e}", l.epsilon, l.taus.len(), l.max_error))
        .collect();
    let flagged: Vec<String> = report
        .module
        .flagged
        .iter()
        .map(|f| format!("{:.3}{}", f.lambda, if f.combination.is_some() { "" } else { "?" }))
        .collect();
    Ok((
        report.passed,
        format!("{}; flagged frequencies [{}]", levels.join(", "), flagged.join(" ")),
    ))
}

fn iterated_kernel() -> Check {
    let sigma = 1.0;
    let domain = Domain::interval(-4.0, 4.0, 161)?;
    let op = gaussian_on(&domain, sigma)?;
    let u0 = domain.sample(|x| if x[0].abs() <= 0.5 + 1e-12 { 1.0 } else { 0.0 });
    let bound = iterated_kernel_lower_bound(&op, &u0, 0.5, 0.5, 2, &[0.0])?;
    let (nodes, weights) = oracle::trapezoid(-4.0, 4.0, 161);
    let ball: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i].abs() <= 1.0 + 1e-12).collect();
    let reference =
        oracle::iterated_sum_infimum(&nodes, &weights, |z| oracle::gaussian(z, sigma), &u0, &ball, bound.terms);
    let rel = (bound.mu - reference).abs() / reference.abs();
    Ok((
        bound.mu > 0.0 && rel <= 1e-6,
        format!("mu {:.10} after {} terms, quadrature {:.10}, relative gap {rel:.2e}", bound.mu, bound.terms, reference),
    ))
}

fn integrator() -> Check {
    let model = quasi_periodic_model(64)?;
    let u0 = model.dispersal().domain().sample(|x| 1.0 + 0.5 * x[0].cos());
    let (t0, t1) = (0.0, 2.0);
    let coarse = 0.05;
    let reference = model.propagate(&u0, t0, t1, Some(coarse / 200.0))?;
    let error = |dt: f64| -> Result<f64, LabError> {
        let u = model.propagate(&u0, t0, t1, Some(dt))?;
        Ok(u.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    };
    let (e1, e2) = (error(coarse)?, error(coarse / 2.0)?);
    let ratio = e1 / e2;

    let linear = Model::linear(model.dispersal(), &quasi_periodic_coefficient(), BoundaryShift::None)?;
    let (s, r, t) = (0.0, 1.3, 3.0);
    let direct = linear.propagate(&u0, s, t, None)?;
    let mid = linear.propagate(&u0, s, r, None)?;
    let composed = linear.propagate(&mid, r, t, None)?;
    let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cocycle = direct.iter().zip(&composed).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    Ok((
        (13.0..=19.0).contains(&ratio) && cocycle <= 1e-9,
        format!("errors {e1:.3e} / {e2:.3e}, ratio {ratio:.2}; cocycle relative gap {cocycle:.2e}"),
    ))
}
