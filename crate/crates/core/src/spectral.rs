//! Growth rates of the linearization `u_t = Ku + a(t,x) u`: top Lyapunov
//! exponents by renormalized propagation, static principal eigenvalues by
//! power iteration, analytic lower bounds, and test-function certificates.

use alloc::vec;
use alloc::vec::Vec;

use crate::almost_periodic::{space_mean_values, ApCoefficient};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::evolution::{sup_norm, time_derivative, Field, Model, Trajectory};
use crate::kernel::Workspace;
use crate::math::{abs, cos, exp, ln, sq, PI};

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovOptions {
    pub horizon: f64,
    /// Renormalization interval.
    pub renorm: f64,
    /// Step size; defaults to the model's default step.
    pub dt: Option<f64>,
    /// Number of cumulative windows over the second half of the horizon.
    pub windows: usize,
    /// Allowed spread between estimates from different initial fields.
    pub agreement_tol: f64,
    /// Allowed difference between the last two window estimates.
    pub window_tol: f64,
    pub start: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions {
            horizon: 200.0,
            renorm: 1.0,
            dt: None,
            windows: 8,
            agreement_tol: 2e-2,
            window_tol: 1e-2,
            start: 0.0,
        }
    }
}

/// Where a bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Provenance {
    /// `sup_x â(x)`.
    SupTimeMean,
    /// `ā + (1/|D|) ∫_D ∫_D κ(y-x) dy dx`, static `a` on a bounded box.
    MeanPlusKernelMass,
    /// `ā + 1`, static `a` on a torus.
    MeanPlusOne,
    ConstantCertificate,
    TiltedCertificate,
    ClaimedCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Bound {
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpectralReport {
    /// Mean of the per-initial estimates.
    pub estimate: f64,
    pub per_initial: Vec<f64>,
    /// Cumulative window estimates of the first initial field.
    pub windows: Vec<f64>,
    /// `max - min` over the per-initial estimates.
    pub spread: f64,
    /// Windows settled and initials agree.
    pub converged: bool,
}

/// Three strictly positive initial fields of different shape: a constant, a
/// cosine ripple and a localized bump on a floor.
pub fn default_initials(domain: &Domain) -> Vec<Vec<f64>> {
    let axes = domain.axes();
    let ripple = domain.sample(|x| {
        1.0 + 0.5
            * x.iter()
                .zip(axes)
                .map(|(x, a)| cos(2.0 * PI * (x - a.lower) / a.length()))
                .product::<f64>()
    });
    let bump = domain.sample(|x| {
        let r2: f64 = x
            .iter()
            .zip(axes)
            .map(|(x, a)| sq((x - 0.5 * (a.lower + a.upper)) / (0.1 * a.length())))
            .sum();
        0.1 + exp(-r2)
    });
    vec![vec![1.0; domain.len()], ripple, bump]
}

/// Top Lyapunov exponent of the linear model from each initial field.
///
/// Each field is propagated and rescaled to unit sup norm every
/// `renorm` time units; the estimate is the mean log growth per unit time
/// over the second half of the horizon.
pub fn lyapunov_exponent(model: &Model, initials: &[Vec<f64>], opts: &LyapunovOptions) -> Result<SpectralReport> {
    if !model.is_linear() {
        return Err(Error::Precondition("Lyapunov exponents need the linear model"));
    }
    if initials.is_empty() {
        return Err(Error::Precondition("no initial fields"));
    }
    if opts.horizon < 100.0 {
        return Err(Error::HorizonTooShort { horizon: opts.horizon, required: 100.0 });
    }
    let dt = opts.dt.unwrap_or(model.default_dt());
    if opts.renorm < 10.0 * dt {
        return Err(Error::Precondition("renormalization interval must be at least 10 steps"));
    }
    let chunks = libm::round(opts.horizon / opts.renorm) as usize;
    let half = chunks / 2;
    let tail = chunks - half;
    let windows = opts.windows.clamp(1, tail);
    let mut per_initial = Vec::with_capacity(initials.len());
    let mut first_windows = Vec::new();
    let mut stepper = model.stepper();
    for (idx, u0) in initials.iter().enumerate() {
        model.dispersal().domain().check_len(u0.len())?;
        if !(u0.iter().all(|v| v.is_finite()) && u0.iter().copied().fold(f64::INFINITY, f64::min) > 0.0) {
            return Err(Error::Precondition("initial fields must be strictly positive"));
        }
        let mut u = u0.clone();
        let n0 = sup_norm(&u);
        u.iter_mut().for_each(|v| *v /= n0);
        let mut logs = Vec::with_capacity(chunks);
        for k in 0..chunks {
            let s = opts.start + k as f64 * opts.renorm;
            stepper.advance(&mut u, s, s + opts.renorm, dt)?;
            let norm = sup_norm(&u);
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::NonFinite { t: s + opts.renorm });
            }
            logs.push(ln(norm));
            u.iter_mut().for_each(|v| *v /= norm);
        }
        let tail_logs = &logs[half..];
        let estimate = tail_logs.iter().sum::<f64>() / (tail as f64 * opts.renorm);
        if idx == 0 {
            first_windows = (1..=windows)
                .map(|w| {
                    let end = (w * tail).div_ceil(windows);
                    tail_logs[..end].iter().sum::<f64>() / (end as f64 * opts.renorm)
                })
                .collect();
        }
        per_initial.push(estimate);
    }
    let estimate = per_initial.iter().sum::<f64>() / per_initial.len() as f64;
    let max = per_initial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = per_initial.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    let settled = first_windows.len() < 2
        || abs(first_windows[first_windows.len() - 1] - first_windows[first_windows.len() - 2]) < opts.window_tol;
    Ok(SpectralReport {
        estimate,
        per_initial,
        windows: first_windows,
        spread,
        converged: settled && spread <= opts.agreement_tol,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Eigenpair {
    pub lambda: f64,
    /// Positive eigenvector scaled to unit sup norm.
    pub vector: Vec<f64>,
    /// `‖Mφ - λφ‖∞ / ‖φ‖∞`.
    pub residual: f64,
    pub iterations: usize,
}

pub const MAX_POWER_ITERATIONS: usize = 100_000;

/// Principal eigenvalue of `M = K + diag(a)` for a time-independent linear
/// model, by power iteration on `M + cI` with `c = 1 + sup|a|`.
///
/// Stops when successive Rayleigh quotients (in the quadrature inner product,
/// for which `M` is self-adjoint) differ by less than `1e-12`.
pub fn principal_eigenvalue_static(model: &Model) -> Result<Eigenpair> {
    if !model.is_linear() {
        return Err(Error::Precondition("eigenvalues need the linear model"));
    }
    if !model.is_autonomous() {
        return Err(Error::Precondition("coefficient depends on time"));
    }
    let n = model.len();
    let mut a = vec![0.0; n];
    model.growth_into(0.0, &mut a);
    let weights = model.dispersal().domain().node_weights();
    let shift = 1.0 + model.sup_a();
    let mut ws = Workspace::default();
    let apply = |v: &[f64], out: &mut [f64], ws: &mut Workspace| -> Result<()> {
        model.dispersal().apply_into(v, out, ws)?;
        for ((o, a), v) in out.iter_mut().zip(&a).zip(v) {
            *o += a * v;
        }
        Ok(())
    };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).zip(&weights).map(|((x, y), w)| x * y * w).sum() };
    let mut v = vec![1.0; n];
    let mut mv = vec![0.0; n];
    let mut previous = f64::NAN;
    for it in 1..=MAX_POWER_ITERATIONS {
        apply(&v, &mut mv, &mut ws)?;
        let rq = dot(&v, &mv) / dot(&v, &v);
        if abs(rq - previous) < 1e-12 {
            let residual = mv.iter().zip(&v).fold(0.0f64, |m, (mv, v)| m.max(abs(mv - rq * v))) / sup_norm(&v);
            return Ok(Eigenpair { lambda: rq, vector: v, residual, iterations: it });
        }
        previous = rq;
        for (m, v) in mv.iter_mut().zip(&v) {
            *m += shift * v;
        }
        let norm = sup_norm(&mv);
        for (v, m) in v.iter_mut().zip(&mv) {
            *v = m / norm;
        }
    }
    Err(Error::NotConverged { iterations: MAX_POWER_ITERATIONS })
}

/// Analytic lower bounds on the principal spectrum point of `a` on the
/// model's domain. `a` must be the coefficient the linear `model` was built
/// from.
pub fn pe_lower_bounds(model: &Model, a: &ApCoefficient) -> Vec<Bound> {
    let domain = model.dispersal().domain();
    // â on the grid, including any boundary shift folded into the model.
    let mut shifted = vec![0.0; domain.len()];
    model.growth_into(0.0, &mut shifted);
    let raw = a.on_grid(domain);
    let raw0 = raw.evaluate(0.0);
    let mean = a.time_mean().sample(domain);
    let hat: Vec<f64> = mean
        .iter()
        .zip(shifted.iter().zip(&raw0))
        .map(|(m, (s, r))| m + (s - r))
        .collect();
    let sup_hat = hat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![Bound { value: sup_hat, provenance: Provenance::SupTimeMean }];
    if a.is_static() {
        let a_bar = space_mean_values(&hat, domain);
        if domain.is_torus() {
            out.push(Bound { value: a_bar + 1.0, provenance: Provenance::MeanPlusOne });
        } else {
            let ones = vec![1.0; domain.len()];
            let k1 = model.dispersal().apply_direct(&ones).expect("matching grid");
            let double = domain.integrate(&k1) / domain.measure();
            out.push(Bound { value: a_bar + double, provenance: Provenance::MeanPlusKernelMass });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CertificateKind {
    /// `L(a)φ ≥ λφ`: λ is below the generalized principal eigenvalue.
    Lower,
    /// `L(a)φ ≤ λφ` with `inf φ > 0`: λ is above it.
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CertificateReport {
    pub kind: CertificateKind,
    pub lambda: f64,
    pub passed: bool,
    /// Worst signed violation: `max(λφ - Lφ)` for lower, `max(Lφ - λφ)` for
    /// upper.
    pub worst: f64,
    /// Estimated error of the time differences (Richardson, `h` vs `2h`).
    pub discretization: f64,
}

/// `L(a)φ = -∂_t φ + Kφ + aφ` on every sample, plus the Richardson estimate of
/// the time-difference error.
fn generator(phi: &Trajectory, model: &Model) -> Result<(Vec<Vec<f64>>, f64)> {
    if !model.is_linear() {
        return Err(Error::Precondition("certificates need the linear model"));
    }
    if phi.len() < 3 {
        return Err(Error::Precondition("need at least three samples in time"));
    }
    let n = model.len();
    let mut ws = Workspace::default();
    let mut dphi = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut out = Vec::with_capacity(phi.len());
    let mut disc: f64 = 0.0;
    let f = &phi.fields;
    for (k, field) in f.iter().enumerate() {
        model.dispersal().domain().check_len(field.values.len())?;
        time_derivative(phi, k, &mut dphi);
        if k >= 2 && k + 2 < f.len() {
            for (i, d) in dphi.iter().enumerate() {
                let wide = (f[k + 2].values[i] - f[k - 2].values[i]) / (4.0 * phi.dt);
                disc = disc.max(abs(wide - d) / 3.0);
            }
        }
        let mut l = vec![0.0; n];
        model.dispersal().apply_into(&field.values, &mut l, &mut ws)?;
        model.growth_into(field.t, &mut a);
        for i in 0..n {
            l[i] += a[i] * field.values[i] - dphi[i];
        }
        out.push(l);
    }
    Ok((out, disc))
}

/// Checks a sampled positive test function against `L(a)φ ≥ λφ - tol`
/// (lower) or `L(a)φ ≤ λφ + tol` (upper).
pub fn certificate_check(
    phi: &Trajectory,
    model: &Model,
    lambda: f64,
    kind: CertificateKind,
    tol: f64,
) -> Result<CertificateReport> {
    let (lo, hi) = phi
        .fields
        .iter()
        .flat_map(|f| f.values.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    match kind {
        CertificateKind::Lower if !(lo >= 0.0 && hi > 0.0) => {
            return Err(Error::Precondition("lower certificate must be nonnegative and nonzero"))
        }
        CertificateKind::Upper if !(lo > 0.0) => {
            return Err(Error::Precondition("upper certificate must be bounded away from zero"))
        }
        _ => {}
    }
    let (l, discretization) = generator(phi, model)?;
    let mut worst = f64::NEG_INFINITY;
    for (field, lphi) in phi.fields.iter().zip(&l) {
        for (p, lp) in field.values.iter().zip(lphi) {
            let v = match kind {
                CertificateKind::Lower => lambda * p - lp,
                CertificateKind::Upper => lp - lambda * p,
            };
            worst = worst.max(v);
        }
    }
    Ok(CertificateReport { kind, lambda, passed: worst <= tol + discretization, worst, discretization })
}

/// Best `λ` certified by `φ` in each direction: `inf` and `sup` of
/// `L(a)φ/φ`, widened by the time-difference error relative to `φ`.
pub fn certified_range(phi: &Trajectory, model: &Model) -> Result<(f64, f64)> {
    let (l, disc) = generator(phi, model)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut floor = f64::INFINITY;
    for (field, lphi) in phi.fields.iter().zip(&l) {
        for (p, lp) in field.values.iter().zip(lphi) {
            if *p <= 0.0 {
                return Err(Error::Precondition("test function must be strictly positive"));
            }
            lo = lo.min(lp / p);
            hi = hi.max(lp / p);
            floor = floor.min(*p);
        }
    }
    let pad = disc / floor;
    Ok((lo - pad, hi + pad))
}

/// Families of positive test functions sampled on a time window.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant,
    /// `ψ(x) exp(A(t,x))` with `A` the bounded antiderivative of `a - â`;
    /// exact when the oscillating part of `a` is space-independent and `ψ`
    /// is the principal eigenvector for `â`.
    Tilted { psi: Vec<f64> },
}

impl TestFunction {
    pub fn sample(&self, a: &ApCoefficient, domain: &Domain, t0: f64, dt: f64, count: usize) -> Trajectory {
        let dim = domain.dim();
        let fields = (0..count)
            .map(|k| {
                let t = t0 + k as f64 * dt;
                let values = match self {
                    TestFunction::Constant => vec![1.0; domain.len()],
                    TestFunction::Tilted { psi } => domain
                        .points()
                        .zip(psi)
                        .map(|(p, s)| s * exp(a.oscillation_integral(t, &p[..dim])))
                        .collect(),
                };
                Field::new(t, values)
            })
            .collect();
        Trajectory { dt, fields }
    }

    pub fn provenance(&self) -> Provenance {
        match self {
            TestFunction::Constant => Provenance::ConstantCertificate,
            TestFunction::Tilted { .. } => Provenance::TiltedCertificate,
        }
    }
}

/// A user-supplied certificate for [`relation_audit`].
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimedCertificate {
    pub phi: Trajectory,
    pub lambda: f64,
    pub kind: CertificateKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditOptions {
    pub lyapunov: LyapunovOptions,
    /// Sampling of the built-in certificates.
    pub certificate_window: f64,
    pub certificate_dt: f64,
    pub tol: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            lyapunov: LyapunovOptions::default(),
            certificate_window: 100.0,
            certificate_dt: 0.05,
            tol: 2e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct AuditReport {
    pub lower: Vec<Bound>,
    pub upper: Vec<Bound>,
    pub best_lower: Bound,
    pub best_upper: Option<Bound>,
    pub estimate: f64,
    pub lyapunov: SpectralReport,
    pub claimed: Vec<CertificateReport>,
    pub passed: bool,
}

/// Brackets the Lyapunov estimate between the best certified lower and upper
/// bounds. Claimed certificates that fail their own check fail the audit.
pub fn relation_audit(
    model: &Model,
    a: &ApCoefficient,
    claimed: &[ClaimedCertificate],
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let domain = model.dispersal().domain().clone();
    let lyapunov = lyapunov_exponent(model, &default_initials(&domain), &opts.lyapunov)?;
    let mut lower = pe_lower_bounds(model, a);
    let mut upper = Vec::new();

    let mean_model = Model::linear(model.dispersal(), &static_part(a), model.boundary())?;
    let psi = principal_eigenvalue_static(&mean_model)?.vector;
    let count = libm::round(opts.certificate_window / opts.certificate_dt) as usize + 1;
    for test in [TestFunction::Constant, TestFunction::Tilted { psi }] {
        let phi = test.sample(a, &domain, opts.lyapunov.start, opts.certificate_dt, count);
        let (lo, hi) = certified_range(&phi, model)?;
        lower.push(Bound { value: lo, provenance: test.provenance() });
        upper.push(Bound { value: hi, provenance: test.provenance() });
    }

    let mut reports = Vec::new();
    let mut claims_ok = true;
    for c in claimed {
        let r = certificate_check(&c.phi, model, c.lambda, c.kind, 1e-9)?;
        claims_ok &= r.passed;
        let bound = Bound { value: c.lambda, provenance: Provenance::ClaimedCertificate };
        match c.kind {
            CertificateKind::Lower => lower.push(bound),
            CertificateKind::Upper => upper.push(bound),
        }
        reports.push(r);
    }

    let best_lower = *lower
        .iter()
        .max_by(|x, y| x.value.total_cmp(&y.value))
        .expect("at least one lower bound");
    let best_upper = upper.iter().min_by(|x, y| x.value.total_cmp(&y.value)).copied();
    let estimate = lyapunov.estimate;
    let tol = opts.tol;
    let ordered = best_lower.value <= estimate + tol && best_upper.is_none_or(|u| estimate <= u.value + tol);
    Ok(AuditReport {
        lower,
        upper,
        best_lower,
        best_upper,
        estimate,
        lyapunov,
        claimed: reports,
        passed: claims_ok && ordered,
    })
}

/// `â` as a time-independent coefficient.
fn static_part(a: &ApCoefficient) -> ApCoefficient {
    ApCoefficient::from_profile(a.time_mean())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MonotonicityReport {
    pub lambdas: Vec<f64>,
    pub passed: bool,
    /// Largest decrease `λ(D_k) - λ(D_{k+1})` along the sequence.
    pub worst_decrease: f64,
}

/// Growth rates on a nested sequence of domains, innermost first, checked to
/// be nondecreasing. Static models use the principal eigenvalue and
/// time-dependent ones the Lyapunov exponent.
pub fn domain_monotonicity_check(models: &[Model], lyapunov: &LyapunovOptions, tol: f64) -> Result<MonotonicityReport> {
    for pair in models.windows(2) {
        pair[1].dispersal().domain().embedding_of(pair[0].dispersal().domain())?;
    }
    let mut lambdas = Vec::with_capacity(models.len());
    for m in models {
        let lambda = match principal_eigenvalue_static(m) {
            Ok(p) => p.lambda,
            Err(Error::Precondition(_)) => {
                lyapunov_exponent(m, &default_initials(m.dispersal().domain()), lyapunov)?.estimate
            }
            Err(e) => return Err(e),
        };
        lambdas.push(lambda);
    }
    let worst_decrease = lambdas.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    Ok(MonotonicityReport { passed: lambdas.len() < 2 || worst_decrease <= tol, lambdas, worst_decrease })
}
