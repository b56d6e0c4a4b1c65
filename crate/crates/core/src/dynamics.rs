//! Part metric, pullback construction of the positive entire solution and the
//! long-time experiments built on it.

use alloc::vec;
use alloc::vec::Vec;

use crate::almost_periodic::{
    epsilon_translation_numbers, module_containment_check, ApCoefficient, ModuleOptions, ModuleReport,
    TimeSeries, TranslationSampling,
};
use crate::error::{Error, Result};
use crate::evolution::{step_count, sup_norm, Field, Model, SolveOptions, Trajectory};
use crate::math::{abs, floor, ln};

/// `ρ(u,v) = max_x |ln(u(x)/v(x))|`, the smallest `ln α` with
/// `u/α ≤ v ≤ α u`.
pub fn part_metric(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::GridMismatch { expected: u.len(), found: v.len() });
    }
    let mut rho: f64 = 0.0;
    for (a, b) in u.iter().zip(v) {
        if !(*a > 0.0 && *b > 0.0) {
            return Err(Error::Precondition("part metric needs strictly positive fields"));
        }
        rho = rho.max(abs(ln(*a) - ln(*b)));
    }
    Ok(rho)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PartMetricTrace {
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    /// Largest increase between consecutive records (negative if strictly
    /// decreasing).
    pub max_increase: f64,
    /// Smallest per-record decrease while `ρ` was at least the threshold, if
    /// the trace started above it.
    pub decrement: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContractionOptions {
    pub dt: Option<f64>,
    /// `ρ` level above which a strict decrement is measured.
    pub sigma: f64,
    /// Allowed increase per record.
    pub tol: f64,
}

impl Default for ContractionOptions {
    fn default() -> Self {
        ContractionOptions { dt: None, sigma: 0.1, tol: 1e-9 }
    }
}

/// Evolves `u0` and `v0` side by side from time `s` and records their part
/// metric every `tau` time units, `repetitions` times.
pub fn contraction_check(
    model: &Model,
    u0: &[f64],
    v0: &[f64],
    s: f64,
    tau: f64,
    repetitions: usize,
    opts: &ContractionOptions,
) -> Result<PartMetricTrace> {
    let dt = opts.dt.unwrap_or(model.default_dt());
    let (mut u, mut v) = (u0.to_vec(), v0.to_vec());
    let mut times = vec![s];
    let mut rho = vec![part_metric(&u, &v)?];
    let mut stepper = model.stepper();
    for k in 0..repetitions {
        let t0 = s + k as f64 * tau;
        let t1 = t0 + tau;
        stepper.advance(&mut u, t0, t1, dt)?;
        stepper.advance(&mut v, t0, t1, dt)?;
        times.push(t1);
        rho.push(part_metric(&u, &v)?);
    }
    let max_increase = rho.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    if max_increase > opts.tol {
        let k = rho.windows(2).position(|w| w[1] - w[0] == max_increase).unwrap_or(0);
        return Err(Error::NonExpansionViolated { increase: max_increase, time: times[k + 1] });
    }
    let decrement = (rho[0] >= opts.sigma).then(|| {
        rho.windows(2)
            .take_while(|w| w[0] >= opts.sigma)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min)
    });
    Ok(PartMetricTrace { times, rho, max_increase, decrement })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EntireStatus {
    /// Positivity floor above the threshold.
    StrictlyPositive,
    /// Collapsed to zero: no strictly positive entire solution.
    Extinct,
    /// Collapsed to zero although the growth rate says it should not.
    Inconsistent,
}

/// Floor below which a field counts as numerically extinct.
pub const POSITIVITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PullbackOptions {
    pub tol: f64,
    /// First pullback depth; defaults to `max(20, window length)`.
    pub initial_depth: Option<f64>,
    pub max_depth: f64,
    /// Starting level; defaults to `2 u_cap` (or 1 when `u_cap` is 0).
    pub cap: Option<f64>,
    pub dt: Option<f64>,
    /// Spacing of stored fields on the window.
    pub save_every: f64,
    pub monotone_tol: f64,
    /// Growth-rate estimate of the linearization, used to classify collapse.
    pub growth_rate: Option<f64>,
}

impl Default for PullbackOptions {
    fn default() -> Self {
        PullbackOptions {
            tol: 1e-6,
            initial_depth: None,
            max_depth: 640.0,
            cap: None,
            dt: None,
            save_every: 0.05,
            monotone_tol: 1e-10,
            growth_rate: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntireSolution {
    pub window: (f64, f64),
    pub trajectory: Trajectory,
    /// Pullback depths tried, in order.
    pub depths: Vec<f64>,
    /// Sup distance on the window between the last two depths.
    pub gap: f64,
    /// Minimum over the window.
    pub floor: f64,
    pub cap: f64,
    pub status: EntireStatus,
    /// Step size used, so later runs can share the time grid.
    pub dt: f64,
}

impl EntireSolution {
    /// Field at time `t` in the window, by cubic Hermite interpolation using
    /// the equation for the time derivatives.
    pub fn interpolator<'a>(&'a self, model: &'a Model) -> Result<Interpolator<'a>> {
        let mut stepper = model.stepper();
        let derivatives = self
            .trajectory
            .fields
            .iter()
            .map(|f| {
                let mut d = vec![0.0; f.values.len()];
                stepper.rhs(f.t, &f.values, &mut d).map(|_| d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Interpolator { solution: self, derivatives })
    }
}

pub struct Interpolator<'a> {
    solution: &'a EntireSolution,
    derivatives: Vec<Vec<f64>>,
}

impl Interpolator<'_> {
    pub fn at_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let traj = &self.solution.trajectory;
        let (lo, hi) = self.solution.window;
        if t < lo - 1e-9 || t > hi + 1e-9 {
            return Err(Error::Precondition("interpolation outside the window"));
        }
        let h = traj.dt;
        let last = traj.len() - 1;
        let k = (floor((t - lo) / h) as usize).min(last.saturating_sub(1));
        let s = ((t - lo) / h - k as f64).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        let (u0, u1) = (&traj.fields[k].values, &traj.fields[k + 1].values);
        let (d0, d1) = (&self.derivatives[k], &self.derivatives[k + 1]);
        for i in 0..out.len() {
            out[i] = h00 * u0[i] + h10 * h * d0[i] + h01 * u1[i] + h11 * h * d1[i];
        }
        Ok(())
    }
}

/// Solution started from `start` at time `t_lo - depth`, stored on the window.
fn pullback_run(
    model: &Model,
    start: &[f64],
    window: (f64, f64),
    depth: f64,
    dt: f64,
    save_every: f64,
) -> Result<Trajectory> {
    let mut u = start.to_vec();
    model.stepper().advance(&mut u, window.0 - depth, window.0, dt)?;
    model.solve(&u, window.0, window.1, &SolveOptions { dt: Some(dt), save_every: Some(save_every) })
}

fn trajectory_gap(a: &Trajectory, b: &Trajectory) -> (f64, f64) {
    let mut gap: f64 = 0.0;
    let mut rise = f64::NEG_INFINITY;
    for (fa, fb) in a.fields.iter().zip(&b.fields) {
        for (x, y) in fa.values.iter().zip(&fb.values) {
            gap = gap.max(abs(x - y));
            rise = rise.max(y - x);
        }
    }
    (gap, rise)
}

fn trajectory_min(t: &Trajectory) -> f64 {
    t.fields.iter().map(Field::min).fold(f64::INFINITY, f64::min)
}

/// Pullback limit `u*(t) = lim_{K→∞} u(t; t_lo - K, M)` on the window, with
/// `M` a supersolution level, over a doubling schedule of depths.
pub fn pullback_entire_solution(model: &Model, window: (f64, f64), opts: &PullbackOptions) -> Result<EntireSolution> {
    if model.is_linear() {
        return Err(Error::Precondition("pullback needs the nonlinear model"));
    }
    let cap = opts.cap.unwrap_or(if model.u_cap() > 0.0 { 2.0 * model.u_cap() } else { 1.0 });
    if !(cap > model.u_cap()) && model.u_cap() > 0.0 {
        return Err(Error::Precondition("cap must exceed u_cap"));
    }
    pullback_from(model, &vec![cap; model.len()], window, opts, true).map(|mut e| {
        e.cap = cap;
        e
    })
}

/// Pullback from an arbitrary start. With `decreasing` set, successive
/// depths are checked to decrease pointwise (true for supersolution starts).
pub fn pullback_from(
    model: &Model,
    start: &[f64],
    window: (f64, f64),
    opts: &PullbackOptions,
    decreasing: bool,
) -> Result<EntireSolution> {
    model.dispersal().domain().check_len(start.len())?;
    if !(window.1 > window.0) {
        return Err(Error::Precondition("empty window"));
    }
    let dt = opts.dt.unwrap_or(model.default_dt());
    let mut depth = opts.initial_depth.unwrap_or((window.1 - window.0).max(20.0));
    let mut depths = vec![depth];
    let mut previous = pullback_run(model, start, window, depth, dt, opts.save_every)?;
    loop {
        depth *= 2.0;
        if depth > opts.max_depth {
            let gap = f64::INFINITY;
            return Err(Error::PullbackExhausted { depth: depth / 2.0, gap });
        }
        depths.push(depth);
        let current = pullback_run(model, start, window, depth, dt, opts.save_every)?;
        let (gap, rise) = trajectory_gap(&previous, &current);
        if decreasing && rise > opts.monotone_tol {
            return Err(Error::MonotonicityViolated { excess: rise });
        }
        if gap < opts.tol {
            let floor = trajectory_min(&current);
            let status = if floor > POSITIVITY_THRESHOLD {
                EntireStatus::StrictlyPositive
            } else if opts.growth_rate.is_some_and(|l| l > 0.05) {
                EntireStatus::Inconsistent
            } else {
                EntireStatus::Extinct
            };
            return Ok(EntireSolution {
                window,
                trajectory: current,
                depths,
                gap,
                floor,
                cap: start.iter().copied().fold(0.0, f64::max),
                status,
                dt,
            });
        }
        if depth * 2.0 > opts.max_depth {
            return Err(Error::PullbackExhausted { depth, gap });
        }
        previous = current;
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct UniquenessReport {
    /// `(construction, sup distance to the reference)`.
    pub gaps: Vec<(&'static str, f64)>,
    pub passed: bool,
}

/// Builds `u*` from caps `2 u_cap` and `4 u_cap`, from a small positive start
/// and on a window shifted by `shift`, and compares them on shared times.
pub fn uniqueness_check(
    model: &Model,
    window: (f64, f64),
    shift: f64,
    sub_level: f64,
    tol: f64,
    opts: &PullbackOptions,
) -> Result<(EntireSolution, UniquenessReport)> {
    let inner = PullbackOptions { tol: tol / 10.0, ..opts.clone() };
    let base = if model.u_cap() > 0.0 { model.u_cap() } else { 0.5 };
    let reference = pullback_entire_solution(model, window, &PullbackOptions { cap: Some(2.0 * base), ..inner.clone() })?;
    let high = pullback_entire_solution(model, window, &PullbackOptions { cap: Some(4.0 * base), ..inner.clone() })?;
    let low = pullback_from(model, &vec![sub_level; model.len()], window, &inner, false)?;
    let shifted_window = (window.0 + shift, window.1 + shift);
    let shifted = pullback_entire_solution(
        model,
        shifted_window,
        &PullbackOptions { cap: Some(2.0 * base), ..inner.clone() },
    )?;

    let mut gaps = vec![
        ("cap_4x", trajectory_gap(&reference.trajectory, &high.trajectory).0),
        ("sub_level", trajectory_gap(&reference.trajectory, &low.trajectory).0),
    ];
    let h = reference.trajectory.dt;
    let offset = libm::round(shift / h) as usize;
    let mut overlap: f64 = 0.0;
    for (k, f) in reference.trajectory.fields.iter().enumerate().skip(offset) {
        if let Some(g) = shifted.trajectory.fields.get(k - offset) {
            overlap = overlap.max(sup_norm(&sub(&f.values, &g.values)));
        }
    }
    gaps.push(("window_shift", overlap));
    let passed = gaps.iter().all(|(_, g)| *g <= tol);
    Ok((reference, UniquenessReport { gaps, passed }))
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StabilityMember {
    pub final_distance: f64,
    pub max_rho_increase: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct StabilityReport {
    pub members: Vec<StabilityMember>,
    pub failed: Vec<usize>,
    pub passed: bool,
}

/// Starts each initial field at the beginning of the entire solution's window
/// and measures its sup distance to `u*` after `horizon` time units, plus the
/// part-metric trace against `u*` on the stored times.
pub fn stability_check(
    model: &Model,
    entire: &EntireSolution,
    initials: &[Vec<f64>],
    horizon: f64,
    tol: f64,
) -> Result<StabilityReport> {
    let (t0, t1) = entire.window;
    if !(horizon > 0.0 && t0 + horizon <= t1 + 1e-9) {
        return Err(Error::Precondition("stability horizon must lie inside the window"));
    }
    let opts = SolveOptions { dt: Some(entire.dt), save_every: Some(entire.trajectory.dt) };
    let mut members = Vec::with_capacity(initials.len());
    for u0 in initials {
        if !(u0.iter().copied().fold(f64::INFINITY, f64::min) > 0.0) {
            return Err(Error::Precondition("stability initials must be strictly positive"));
        }
        let run = model.solve(u0, t0, t0 + horizon, &opts)?;
        let mut max_rho_increase = f64::NEG_INFINITY;
        let mut last = f64::INFINITY;
        for (f, g) in run.fields.iter().zip(&entire.trajectory.fields) {
            let rho = part_metric(&f.values, &g.values)?;
            max_rho_increase = max_rho_increase.max(rho - last);
            last = rho;
        }
        let target = &entire.trajectory.fields[run.len() - 1].values;
        let final_distance = sup_norm(&sub(&run.last().values, target));
        members.push(StabilityMember { final_distance, max_rho_increase, passed: final_distance < tol });
    }
    let failed: Vec<usize> = members.iter().enumerate().filter(|(_, m)| !m.passed).map(|(i, _)| i).collect();
    Ok(StabilityReport { passed: failed.is_empty(), members, failed })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ExtinctionReport {
    pub final_sup: f64,
    /// Least-squares slope of `ln ‖u‖∞` over the second half of the run;
    /// `None` when the solution is identically zero.
    pub rate: Option<f64>,
    pub passed: bool,
}

/// Runs `u0` for `horizon` time units and checks decay to zero at a rate no
/// faster-than-allowed: `rate ≤ growth_rate + slack`.
pub fn extinction_check(
    model: &Model,
    u0: &[f64],
    horizon: f64,
    growth_rate: f64,
    tol: f64,
    slack: f64,
) -> Result<ExtinctionReport> {
    let opts = SolveOptions { dt: None, save_every: Some(1.0) };
    let run = model.solve(u0, 0.0, horizon, &opts)?;
    let final_sup = run.last().sup_norm();
    let tail: Vec<(f64, f64)> = run
        .fields
        .iter()
        .skip(run.len() / 2)
        .filter(|f| f.sup_norm() > 0.0)
        .map(|f| (f.t, ln(f.sup_norm())))
        .collect();
    let rate = (tail.len() >= 2).then(|| slope(&tail));
    let passed = final_sup < tol && rate.is_none_or(|r| r <= growth_rate + slack);
    Ok(ExtinctionReport { final_sup, rate, passed })
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ScalarEntire {
    pub times: Vec<f64>,
    pub from_above: Vec<f64>,
    pub from_below: Vec<f64>,
    pub gap: f64,
    pub depth: f64,
}

/// Scalar entire solution of `u' = g(t) + u f(t,u)` on the window, as the
/// common pullback limit from a high and a low positive start.
#[allow(clippy::too_many_arguments)]
pub fn ode_pullback(
    g: impl Fn(f64) -> f64,
    f: impl Fn(f64, f64) -> f64,
    window: (f64, f64),
    starts: (f64, f64),
    dt: f64,
    save_every: f64,
    tol: f64,
    max_depth: f64,
) -> Result<ScalarEntire> {
    if !(starts.0 > 0.0 && starts.1 > 0.0) {
        return Err(Error::Precondition("pullback starts must be positive"));
    }
    let rhs = |t: f64, u: f64| g(t) + u * f(t, u);
    let run = |u0: f64, from: f64| -> Vec<f64> {
        let mut u = u0;
        let rk4 = |u: &mut f64, s: f64, t: f64| {
            let (n, h) = step_count(s, t, dt);
            for k in 0..n {
                let t = s + k as f64 * h;
                let k1 = rhs(t, *u);
                let k2 = rhs(t + 0.5 * h, *u + 0.5 * h * k1);
                let k3 = rhs(t + 0.5 * h, *u + 0.5 * h * k2);
                let k4 = rhs(t + h, *u + h * k3);
                *u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
        };
        rk4(&mut u, from, window.0);
        let count = libm::round((window.1 - window.0) / save_every) as usize;
        let mut out = vec![u];
        for k in 0..count {
            let s = window.0 + k as f64 * save_every;
            rk4(&mut u, s, s + save_every);
            out.push(u);
        }
        out
    };
    let times: Vec<f64> = (0..=libm::round((window.1 - window.0) / save_every) as usize)
        .map(|k| window.0 + k as f64 * save_every)
        .collect();
    let (hi, lo) = (starts.0.max(starts.1), starts.0.min(starts.1));
    let mut depth = (window.1 - window.0).max(20.0);
    let mut gap = f64::INFINITY;
    while depth <= max_depth {
        let above = run(hi, window.0 - depth);
        let below = run(lo, window.0 - depth);
        gap = above.iter().zip(&below).fold(0.0f64, |m, (a, b)| m.max(abs(a - b)));
        if gap < tol {
            return Ok(ScalarEntire { times, from_above: above, from_below: below, gap, depth });
        }
        depth *= 2.0;
    }
    Err(Error::Disagreement { gap, tol })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApDiagnosticOptions {
    pub epsilons: Vec<f64>,
    /// Translation numbers are searched in `[min_shift, max_shift]`.
    pub min_shift: f64,
    pub max_shift: f64,
    pub sampling: TranslationSampling,
    /// Length of the forward extension used for the Bohr spectrum.
    pub spectrum_horizon: f64,
    pub spectrum_every: f64,
    pub module_epsilon: f64,
    pub module: ModuleOptions,
}

impl Default for ApDiagnosticOptions {
    fn default() -> Self {
        ApDiagnosticOptions {
            epsilons: vec![0.1, 0.05, 0.025],
            min_shift: 1.0,
            max_shift: 200.0,
            sampling: TranslationSampling::default(),
            spectrum_horizon: 1000.0,
            spectrum_every: 0.05,
            module_epsilon: 5e-3,
            module: ModuleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RecurrenceLevel {
    pub epsilon: f64,
    pub taus: Vec<f64>,
    /// Largest `sup_t ‖u*(t+τ) - u*(t)‖∞` over the tested τ.
    pub max_error: f64,
    /// `max_error / ε`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ApDiagnostic {
    pub levels: Vec<RecurrenceLevel>,
    /// Errors do not grow as ε shrinks.
    pub monotone: bool,
    /// Some ε had no usable translation number in the window.
    pub inconclusive: bool,
    pub module: ModuleReport,
    pub probes: Vec<usize>,
    pub passed: bool,
}

/// ε-recurrence of `u*` at translation numbers of the coefficients, and the
/// frequency module of `u*` at four probe nodes.
pub fn almost_periodicity_diagnostic(
    model: &Model,
    entire: &EntireSolution,
    coefficients: &[&ApCoefficient],
    opts: &ApDiagnosticOptions,
) -> Result<ApDiagnostic> {
    let (lo, hi) = entire.window;
    let interp = entire.interpolator(model)?;
    let n = model.len();
    let mut levels = Vec::new();
    let mut inconclusive = false;
    let mut shifted = vec![0.0; n];
    for &epsilon in &opts.epsilons {
        let report = epsilon_translation_numbers(coefficients, epsilon, (opts.min_shift, opts.max_shift), &opts.sampling)?;
        let taus: Vec<f64> = report
            .representatives(opts.sampling.tau_step)
            .into_iter()
            .filter(|t| *t < hi - lo)
            .collect();
        if taus.is_empty() {
            inconclusive = true;
        }
        let mut max_error: f64 = 0.0;
        for &tau in &taus {
            for f in entire.trajectory.fields.iter().take_while(|f| f.t + tau <= hi + 1e-9) {
                interp.at_into(f.t + tau, &mut shifted)?;
                let err = f.values.iter().zip(&shifted).fold(0.0f64, |m, (a, b)| m.max(abs(a - b)));
                max_error = max_error.max(err);
            }
        }
        levels.push(RecurrenceLevel { epsilon, constant: max_error / epsilon, taus, max_error });
    }
    let monotone = levels.windows(2).all(|w| w[1].max_error <= w[0].max_error * (1.0 + 1e-9));

    // Forward extension of u* for the Bohr spectrum at probe nodes.
    let [nx, ny] = model.dispersal().domain().shape();
    let probes: Vec<usize> = [1usize, 3, 5, 7]
        .iter()
        .map(|q| {
            let ix = q * nx / 8;
            let iy = if ny > 1 { q * ny / 8 } else { 0 };
            ix + nx * iy
        })
        .collect();
    let traj = model.solve(
        &entire.trajectory.last().values,
        hi,
        hi + opts.spectrum_horizon,
        &SolveOptions { dt: Some(entire.dt), save_every: Some(opts.spectrum_every) },
    )?;
    let traces: Vec<TimeSeries> = probes
        .iter()
        .map(|&p| TimeSeries {
            t0: hi,
            dt: opts.spectrum_every,
            values: traj.fields.iter().map(|f| f.values[p]).collect(),
        })
        .collect();
    let mut base: Vec<f64> = coefficients.iter().flat_map(|a| a.frequencies()).collect();
    base.sort_by(f64::total_cmp);
    base.dedup_by(|a, b| abs(*a - *b) < 1e-12);
    let module = module_containment_check(&traces, &base, opts.module_epsilon, &opts.module)?;
    let passed = monotone && !inconclusive && module.passed;
    Ok(ApDiagnostic { levels, monotone, inconclusive, module, probes, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Domain;
    use crate::evolution::Reaction;
    use crate::kernel::{Dispersal, KernelFamily, KernelOptions};
    use crate::math::TAU;

    fn model(a0: f64) -> Model {
        let d = Domain::circle(0.0, TAU, 16).unwrap();
        let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 1.0 }, &KernelOptions::default()).unwrap();
        Model::nonlinear(&op, &Reaction::logistic(ApCoefficient::constant(a0), ApCoefficient::constant(1.0))).unwrap()
    }

    #[test]
    fn part_metric_basics() {
        let u = [1.0, 2.0, 0.5];
        assert_eq!(part_metric(&u, &u).unwrap(), 0.0);
        let v: Vec<f64> = u.iter().map(|x| 2.0 * x).collect();
        assert!((part_metric(&u, &v).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!(part_metric(&u, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn constant_pullback() {
        let m = model(0.5);
        let e = pullback_entire_solution(&m, (0.0, 5.0), &PullbackOptions::default()).unwrap();
        assert_eq!(e.status, EntireStatus::StrictlyPositive);
        assert!((e.floor - 1.5).abs() < 1e-6);
    }

    #[test]
    fn extinct_pullback() {
        let m = model(-1.2);
        let opts = PullbackOptions { growth_rate: Some(-0.2), ..Default::default() };
        let e = pullback_entire_solution(&m, (0.0, 5.0), &opts).unwrap();
        assert_eq!(e.status, EntireStatus::Extinct);
    }

    #[test]
    fn scalar_pullback_roots() {
        let s = ode_pullback(|_| 1.0, |_, u| -u, (0.0, 5.0), (3.0, 0.1), 0.01, 0.5, 1e-10, 640.0).unwrap();
        assert!(s.from_above.iter().all(|u| (u - 1.0).abs() < 1e-9));
        let root = (0.5 + (0.25f64 + 2.0).sqrt()) / 2.0;
        let s = ode_pullback(|_| 0.5, |_, u| 0.5 - u, (0.0, 5.0), (3.0, 0.1), 0.01, 0.5, 1e-10, 640.0).unwrap();
        assert!((s.from_below[3] - root).abs() < 1e-9);
    }

    #[test]
    fn contraction_of_constants() {
        let m = model(0.5);
        let trace = contraction_check(&m, &[0.5; 16], &[1.5; 16], 0.0, 1.0, 50, &ContractionOptions::default()).unwrap();
        assert!(trace.rho.last().unwrap() < &1e-6);
        assert!(trace.decrement.unwrap() > 0.0);
    }
}
