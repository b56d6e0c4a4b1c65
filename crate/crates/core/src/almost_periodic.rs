//! Almost periodic coefficients realized as finite trigonometric polynomials
//!
//! ```text
//! a(t,x) = c + Σ_m P_m(x) cos(ω_m t + φ_m),   P_m(x) = c_m + Σ_k A_k cos(k·x + θ_k)
//! ```
//!
//! together with Bohr means, Bohr-Fourier coefficients, ε-translation numbers
//! and a frequency-module diagnostic for sampled traces.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::math::{abs, cos, round, sin, PI, TAU};

/// Desk-scale cap on the number of temporal and of spatial modes.
pub const MAX_MODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpatialMode {
    /// Wavevector in rad/length, one entry per axis (missing axes count as 0).
    pub wavevector: Vec<f64>,
    pub amplitude: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub phase: f64,
}

impl SpatialMode {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let arg: f64 = self.wavevector.iter().zip(x).map(|(k, x)| k * x).sum();
        self.amplitude * cos(arg + self.phase)
    }

    fn is_constant(&self) -> bool {
        self.wavevector.iter().all(|k| *k == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SpatialProfile {
    pub constant: f64,
    pub modes: Vec<SpatialMode>,
}

impl SpatialProfile {
    pub fn constant(value: f64) -> Self {
        SpatialProfile { constant: value, modes: Vec::new() }
    }

    /// `constant + amplitude cos(k x + phase)` in one dimension.
    pub fn cosine(constant: f64, amplitude: f64, k: f64, phase: f64) -> Self {
        SpatialProfile {
            constant,
            modes: vec![SpatialMode { wavevector: vec![k], amplitude, phase }],
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.constant + self.modes.iter().map(|m| m.evaluate(x)).sum::<f64>()
    }

    pub fn sample(&self, domain: &Domain) -> Vec<f64> {
        domain.sample(|x| self.evaluate(x))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SpatialProfile {
            constant: self.constant * factor,
            modes: self
                .modes
                .iter()
                .map(|m| SpatialMode { amplitude: m.amplitude * factor, ..m.clone() })
                .collect(),
        }
    }

    fn plus(&mut self, other: &SpatialProfile) {
        self.constant += other.constant;
        self.modes.extend(other.modes.iter().cloned());
    }

    pub fn is_constant(&self) -> bool {
        self.modes.iter().all(|m| m.amplitude == 0.0 || m.is_constant())
    }

    /// Upper bound on `sup_x |P(x)|`.
    pub fn sup_abs_bound(&self) -> f64 {
        abs(self.constant) + self.modes.iter().map(|m| abs(m.amplitude)).sum::<f64>()
    }

    fn validate(&self) -> Result<()> {
        if self.modes.len() > MAX_MODES {
            return Err(Error::InvalidCoefficient("more than 8 spatial modes"));
        }
        let finite = self.constant.is_finite()
            && self.modes.iter().all(|m| {
                m.amplitude.is_finite() && m.phase.is_finite() && m.wavevector.iter().all(|k| k.is_finite())
            });
        if !finite {
            return Err(Error::InvalidCoefficient("non-finite spatial mode"));
        }
        if self.modes.iter().any(|m| m.wavevector.is_empty() || m.wavevector.len() > 2) {
            return Err(Error::InvalidCoefficient("wavevector must have 1 or 2 components"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TemporalMode {
    /// Angular frequency in rad/time, `>= 0`.
    pub frequency: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub phase: f64,
    pub profile: SpatialProfile,
}

impl TemporalMode {
    /// `profile(x) · cos(ω t + phase)`.
    pub fn new(frequency: f64, phase: f64, profile: SpatialProfile) -> Self {
        TemporalMode { frequency, phase, profile }
    }

    /// `profile(x) · sin(ω t)`.
    pub fn sine(frequency: f64, profile: SpatialProfile) -> Self {
        TemporalMode { frequency, phase: -PI / 2.0, profile }
    }

    /// `profile(x) · cos(ω t)`.
    pub fn cosine(frequency: f64, profile: SpatialProfile) -> Self {
        TemporalMode { frequency, phase: 0.0, profile }
    }

    fn factor(&self, t: f64) -> f64 {
        cos(self.frequency * t + self.phase)
    }
}

/// A coefficient `a(t,x)`; see the module docs for the form.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ApCoefficient {
    pub constant: f64,
    pub modes: Vec<TemporalMode>,
}

impl ApCoefficient {
    pub fn constant(value: f64) -> Self {
        ApCoefficient { constant: value, modes: Vec::new() }
    }

    /// Time-independent coefficient `a(x) = profile(x)`.
    pub fn from_profile(profile: SpatialProfile) -> Self {
        let mut a = ApCoefficient::constant(profile.constant);
        if !profile.modes.is_empty() {
            let rest = SpatialProfile { constant: 0.0, modes: profile.modes };
            a.modes.push(TemporalMode::cosine(0.0, rest));
        }
        a
    }

    pub fn with_mode(mut self, mode: TemporalMode) -> Self {
        self.modes.push(mode);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.constant.is_finite() {
            return Err(Error::InvalidCoefficient("non-finite constant term"));
        }
        if self.modes.len() > MAX_MODES {
            return Err(Error::InvalidCoefficient("more than 8 temporal modes"));
        }
        for (i, m) in self.modes.iter().enumerate() {
            if !(m.frequency.is_finite() && m.frequency >= 0.0 && m.phase.is_finite()) {
                return Err(Error::InvalidCoefficient("frequencies must be finite and nonnegative"));
            }
            if self.modes[..i].iter().any(|o| o.frequency == m.frequency) {
                return Err(Error::InvalidCoefficient("frequencies must be distinct"));
            }
            m.profile.validate()?;
        }
        Ok(())
    }

    pub fn evaluate(&self, t: f64, x: &[f64]) -> f64 {
        self.constant
            + self
                .modes
                .iter()
                .map(|m| m.profile.evaluate(x) * m.factor(t))
                .sum::<f64>()
    }

    /// Positive frequencies, in declaration order.
    pub fn frequencies(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.frequency).filter(|w| *w > 0.0).collect()
    }

    pub fn is_static(&self) -> bool {
        self.modes.iter().all(|m| m.frequency == 0.0)
    }

    pub fn is_space_independent(&self) -> bool {
        self.modes.iter().all(|m| m.profile.is_constant())
    }

    /// Bohr mean in time, `â(x)`: modes with positive frequency average out.
    pub fn time_mean(&self) -> SpatialProfile {
        let mut mean = SpatialProfile::constant(self.constant);
        for m in self.modes.iter().filter(|m| m.frequency == 0.0) {
            mean.plus(&m.profile.scaled(cos(m.phase)));
        }
        mean
    }

    /// `(1/T) ∫_0^T a(t,x) dt` by the trapezoid rule with `steps` intervals.
    pub fn time_mean_numeric(&self, x: &[f64], horizon: f64, steps: usize) -> f64 {
        let h = horizon / steps as f64;
        let mut acc = 0.5 * (self.evaluate(0.0, x) + self.evaluate(horizon, x));
        for k in 1..steps {
            acc += self.evaluate(k as f64 * h, x);
        }
        acc * h / horizon
    }

    /// Bounded antiderivative in time of `a - â`:
    /// `Σ_{ω>0} P(x) sin(ω t + φ)/ω`.
    pub fn oscillation_integral(&self, t: f64, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.frequency > 0.0)
            .map(|m| m.profile.evaluate(x) * sin(m.frequency * t + m.phase) / m.frequency)
            .sum()
    }

    /// Range of `t ↦ a(t,x)`: the static part plus/minus the oscillation
    /// amplitudes. Exact for rationally independent frequencies, an enclosure
    /// otherwise.
    pub fn envelope(&self, x: &[f64]) -> (f64, f64) {
        let mut centre = self.constant;
        let mut spread = 0.0;
        for m in &self.modes {
            let p = m.profile.evaluate(x);
            if m.frequency == 0.0 {
                centre += p * cos(m.phase);
            } else {
                spread += abs(p);
            }
        }
        (centre - spread, centre + spread)
    }

    /// Envelope on every grid node.
    pub fn grid_envelope(&self, domain: &Domain) -> Vec<(f64, f64)> {
        let dim = domain.dim();
        domain.points().map(|p| self.envelope(&p[..dim])).collect()
    }

    /// `sup |a|` over the grid and all times.
    pub fn sup_abs(&self, domain: &Domain) -> f64 {
        self.grid_envelope(domain)
            .into_iter()
            .fold(0.0, |m, (lo, hi)| m.max(abs(lo)).max(abs(hi)))
    }

    pub fn on_grid(&self, domain: &Domain) -> GridCoefficient {
        let mut base = vec![self.constant; domain.len()];
        let mut modes = Vec::new();
        for m in &self.modes {
            let values = m.profile.sample(domain);
            if m.frequency == 0.0 {
                let c = cos(m.phase);
                for (b, v) in base.iter_mut().zip(&values) {
                    *b += c * v;
                }
            } else {
                modes.push((m.frequency, m.phase, values));
            }
        }
        GridCoefficient { base, modes }
    }
}

/// A coefficient pre-sampled on a grid for repeated evaluation in time.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCoefficient {
    base: Vec<f64>,
    modes: Vec<(f64, f64, Vec<f64>)>,
}

impl GridCoefficient {
    pub fn is_static(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn static_part(&self) -> &[f64] {
        &self.base
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) {
        out.copy_from_slice(&self.base);
        for (w, phase, values) in &self.modes {
            let c = cos(w * t + phase);
            for (o, v) in out.iter_mut().zip(values) {
                *o += c * v;
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.base.len()];
        self.evaluate_into(t, &mut out);
        out
    }

    /// `∂a/∂t` on the grid.
    pub fn derivative_into(&self, t: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (w, phase, values) in &self.modes {
            let s = -w * sin(w * t + phase);
            for (o, v) in out.iter_mut().zip(values) {
                *o += s * v;
            }
        }
    }
}

/// Spatial mean `ā` of a profile: analytic on a torus (the constant term plus
/// zero-wavevector modes), trapezoid quadrature on a bounded box.
pub fn space_mean(profile: &SpatialProfile, domain: &Domain) -> f64 {
    if domain.is_torus() {
        profile.constant
            + profile
                .modes
                .iter()
                .filter(|m| m.is_constant())
                .map(|m| m.amplitude * cos(m.phase))
                .sum::<f64>()
    } else {
        space_mean_values(&profile.sample(domain), domain)
    }
}

/// `(1/|D|) ∫_D v` by quadrature of grid values.
pub fn space_mean_values(values: &[f64], domain: &Domain) -> f64 {
    domain.integrate(values) / domain.measure()
}

/// Uniformly sampled scalar signal.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TimeSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn sample(t0: f64, dt: f64, len: usize, mut f: impl FnMut(f64) -> f64) -> Self {
        TimeSeries { t0, dt, values: (0..len).map(|k| f(t0 + k as f64 * dt)).collect() }
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.values.len().saturating_sub(1) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Window {
    #[default]
    Rectangular,
    /// `1 - cos(2π (t - t0)/T)`, unit mean; suppresses leakage between
    /// nearby frequencies.
    Hann,
}

/// Shortest horizon accepted by [`bohr_fourier_coeff`].
pub const MIN_BOHR_HORIZON: f64 = 1e3;

/// Normalized Bohr-Fourier coefficient `(1/T) ∫ f(t) e^{-iλt} dt` over the
/// span of the series (trapezoid rule, absolute time in the exponent).
pub fn bohr_fourier_coeff(series: &TimeSeries, lambda: f64, window: Window) -> Result<Complex64> {
    let horizon = series.horizon();
    if horizon < MIN_BOHR_HORIZON {
        return Err(Error::HorizonTooShort { horizon, required: MIN_BOHR_HORIZON });
    }
    let w = abs(lambda);
    if w > 0.0 {
        let max_dt = TAU / (16.0 * w);
        if series.dt > max_dt {
            return Err(Error::Undersampled { frequency: lambda, dt: series.dt, max_dt });
        }
    }
    Ok(fourier_mean(series, lambda, window))
}

fn fourier_mean(series: &TimeSeries, lambda: f64, window: Window) -> Complex64 {
    let n = series.values.len();
    if n < 2 {
        return Complex64::new(series.values.first().copied().unwrap_or(0.0), 0.0);
    }
    let horizon = series.horizon();
    let step = Complex64::new(cos(lambda * series.dt), -sin(lambda * series.dt));
    let wstep = Complex64::new(cos(TAU / (n - 1) as f64), sin(TAU / (n - 1) as f64));
    let mut acc = Complex64::new(0.0, 0.0);
    let mut phasor = Complex64::new(0.0, 0.0);
    let mut wphasor = Complex64::new(1.0, 0.0);
    for (k, v) in series.values.iter().enumerate() {
        // Re-anchor the recurrences periodically to bound drift.
        if k % 512 == 0 {
            let t = series.time(k);
            phasor = Complex64::new(cos(lambda * t), -sin(lambda * t));
            let s = TAU * k as f64 / (n - 1) as f64;
            wphasor = Complex64::new(cos(s), sin(s));
        }
        let weight = match window {
            Window::Rectangular => 1.0,
            Window::Hann => 1.0 - wphasor.re,
        };
        let end = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        acc += phasor * (v * weight * end);
        phasor *= step;
        wphasor *= wstep;
    }
    acc * (series.dt / horizon)
}

/// Where and how densely to test candidate translation numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationSampling {
    /// Spacing of the candidate τ grid (τ = k·step).
    pub tau_step: f64,
    /// Sample times `t = j·t_step`, `j < t_count`.
    pub t_step: f64,
    pub t_count: usize,
    /// Spatial sample points.
    pub points: Vec<Vec<f64>>,
}

impl Default for TranslationSampling {
    fn default() -> Self {
        TranslationSampling { tau_step: 0.01, t_step: 0.1, t_count: 629, points: vec![vec![0.0]] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationReport {
    pub epsilon: f64,
    pub window: (f64, f64),
    /// Every candidate τ that passed, ascending.
    pub taus: Vec<f64>,
    /// Sampled `sup |f(t±τ) - f(t)|` for each passing τ.
    pub defects: Vec<f64>,
    /// Largest gap between consecutive passing τ (infinite if fewer than two).
    pub max_gap: f64,
    /// Set when nothing passed on a window longer than 10 nominal periods.
    pub warning: Option<&'static str>,
}

impl TranslationReport {
    /// One representative τ (smallest defect) per run of consecutive passing
    /// grid points.
    pub fn representatives(&self, tau_step: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut best: Option<(f64, f64)> = None;
        for (i, (&tau, &d)) in self.taus.iter().zip(&self.defects).enumerate() {
            let joined = i > 0 && tau - self.taus[i - 1] <= 1.5 * tau_step;
            if !joined {
                if let Some((t, _)) = best.take() {
                    out.push(t);
                }
            }
            best = match best {
                Some((t, bd)) if bd <= d => Some((t, bd)),
                _ => Some((tau, d)),
            };
        }
        if let Some((t, _)) = best {
            out.push(t);
        }
        out
    }
}

/// ε-translation numbers common to all `coefficients`: τ in `window` with
/// `sup |f(t+τ,x) - f(t,x)| < ε` and likewise for `t - τ`, the sup taken over
/// the sampled `(t, x)`.
pub fn epsilon_translation_numbers(
    coefficients: &[&ApCoefficient],
    epsilon: f64,
    window: (f64, f64),
    sampling: &TranslationSampling,
) -> Result<TranslationReport> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("epsilon must be positive"));
    }
    if !(sampling.tau_step > 0.0) || window.1 < window.0 {
        return Err(Error::Precondition("bad translation window"));
    }
    // Per (coefficient, mode, point): amplitude; per (mode, t): phase factors.
    struct Term {
        w: f64,
        amps: Vec<f64>,
        cos_t: Vec<f64>,
        sin_t: Vec<f64>,
    }
    let mut terms = Vec::new();
    for (owner, a) in coefficients.iter().enumerate() {
        for m in a.modes.iter().filter(|m| m.frequency > 0.0) {
            let amps = sampling.points.iter().map(|x| m.profile.evaluate(x)).collect();
            let times = (0..sampling.t_count).map(|j| j as f64 * sampling.t_step);
            let (cos_t, sin_t) = times
                .map(|t| (cos(m.frequency * t + m.phase), sin(m.frequency * t + m.phase)))
                .unzip();
            terms.push((owner, Term { w: m.frequency, amps, cos_t, sin_t }));
        }
    }
    let k0 = round(window.0 / sampling.tau_step) as i64;
    let k1 = round(window.1 / sampling.tau_step) as i64;
    let npts = sampling.points.len();
    let mut taus = Vec::new();
    let mut defects = Vec::new();
    let mut diff = vec![0.0; 2 * npts * sampling.t_count];
    for k in k0..=k1 {
        let tau = k as f64 * sampling.tau_step;
        let mut worst: f64 = 0.0;
        // Each coefficient is tested separately; group its terms.
        let mut start = 0;
        while start < terms.len() {
            let owner = terms[start].0;
            let end = start + terms[start..].iter().take_while(|(o, _)| *o == owner).count();
            diff.iter_mut().for_each(|d| *d = 0.0);
            for (_, term) in &terms[start..end] {
                let (c, s) = (cos(term.w * tau), sin(term.w * tau));
                for (p, amp) in term.amps.iter().enumerate() {
                    for j in 0..sampling.t_count {
                        let (ct, st) = (term.cos_t[j], term.sin_t[j]);
                        // cos(θ ± ωτ) - cos θ
                        let fwd = ct * c - st * s - ct;
                        let bwd = ct * c + st * s - ct;
                        let idx = 2 * (p * sampling.t_count + j);
                        diff[idx] += amp * fwd;
                        diff[idx + 1] += amp * bwd;
                    }
                }
            }
            worst = diff.iter().fold(worst, |m, d| m.max(abs(*d)));
            start = end;
        }
        if worst < epsilon {
            taus.push(tau);
            defects.push(worst);
        }
    }
    let max_gap = if taus.len() < 2 {
        f64::INFINITY
    } else {
        taus.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    };
    let nominal = coefficients
        .iter()
        .flat_map(|a| a.frequencies())
        .fold(f64::INFINITY, |m, w| m.min(TAU / w));
    let warning = (taus.is_empty() && nominal.is_finite() && window.1 - window.0 > 10.0 * nominal)
        .then_some("no translation number found; epsilon may be too small for the sampling");
    Ok(TranslationReport { epsilon, window, taus, defects, max_gap, warning })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleOptions {
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub max_order: u32,
    pub max_coefficient: i32,
    pub window: Window,
}

impl Default for ModuleOptions {
    fn default() -> Self {
        ModuleOptions {
            lambda_max: 4.5,
            lambda_step: 0.002,
            max_order: 3,
            max_coefficient: 3,
            window: Window::Hann,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FlaggedFrequency {
    pub lambda: f64,
    pub magnitude: f64,
    /// Closest integer combination of the base frequencies found, if any lies
    /// within the resolution.
    pub combination: Option<Vec<i32>>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ModuleReport {
    pub flagged: Vec<FlaggedFrequency>,
    pub resolution: f64,
    pub passed: bool,
    /// A flagged peak sits on the edge of the candidate grid.
    pub inconclusive: bool,
    /// Local maxima above `epsilon` attributed to window leakage of a
    /// stronger peak.
    pub masked: usize,
}

impl Window {
    /// Half-width of the main lobe in units of `2π/T`.
    fn main_lobe(self) -> f64 {
        match self {
            Window::Rectangular => 1.0,
            Window::Hann => 2.0,
        }
    }

    /// Bound on the normalized window transform at offset `x` (in units of
    /// `2π/T`) outside the main lobe.
    fn leakage(self, x: f64) -> f64 {
        let x = abs(x);
        match self {
            Window::Rectangular => 1.0 / (PI * x),
            Window::Hann => 1.0 / (PI * x * abs(x * x - 1.0)),
        }
    }
}

/// All integer combinations `Σ k_i ω_i ≥ 0` with `Σ|k_i| ≤ max_order` and
/// `|k_i| ≤ max_coefficient`.
pub fn integer_combinations(base: &[f64], max_order: u32, max_coefficient: i32) -> Vec<(Vec<i32>, f64)> {
    let mut out = Vec::new();
    let mut ks = vec![-max_coefficient; base.len()];
    loop {
        let order: u32 = ks.iter().map(|k| k.unsigned_abs()).sum();
        if order <= max_order {
            let value: f64 = ks.iter().zip(base).map(|(k, w)| *k as f64 * w).sum();
            if value >= -1e-12 {
                out.push((ks.clone(), abs(value)));
            }
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == ks.len() {
                return out;
            }
            if ks[i] < max_coefficient {
                ks[i] += 1;
                break;
            }
            ks[i] = -max_coefficient;
            i += 1;
        }
    }
}

/// Flags Bohr frequencies of the traces with magnitude above `epsilon` and
/// checks each against integer combinations of `base`.
pub fn module_containment_check(
    traces: &[TimeSeries],
    base: &[f64],
    epsilon: f64,
    options: &ModuleOptions,
) -> Result<ModuleReport> {
    let horizon = traces.iter().map(TimeSeries::horizon).fold(f64::INFINITY, f64::min);
    let count = (options.lambda_max / options.lambda_step) as usize + 1;
    let mut spectrum = vec![0.0f64; count];
    for trace in traces {
        for (k, s) in spectrum.iter_mut().enumerate() {
            let c = bohr_fourier_coeff(trace, k as f64 * options.lambda_step, options.window)?;
            *s = s.max(c.norm());
        }
    }
    let resolution = 2.0 * options.lambda_step + TAU / horizon;
    let combos = integer_combinations(base, options.max_order, options.max_coefficient);

    let mut peaks: Vec<usize> = (0..count)
        .filter(|&k| {
            let m = spectrum[k];
            let left = if k > 0 { spectrum[k - 1] } else { f64::NEG_INFINITY };
            let right = spectrum.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY);
            m > epsilon && m >= left && m > right
        })
        .collect();
    peaks.sort_by(|a, b| spectrum[*b].total_cmp(&spectrum[*a]));

    // Strongest first; a weaker maximum inside the main lobe of an accepted
    // peak, or below the side-lobe envelope of the accepted peaks (and their
    // mirror images at negative frequency), is leakage.
    let bin = TAU / horizon;
    let lobe = options.window.main_lobe() * bin + options.lambda_step;
    let mut accepted: Vec<(f64, f64)> = Vec::new();
    let mut masked = 0;
    for k in peaks {
        let lambda = k as f64 * options.lambda_step;
        let m = spectrum[k];
        let mut envelope = epsilon;
        let mut in_lobe = false;
        for &(l, c) in &accepted {
            let images: &[f64] = if l > 0.0 { &[l, -l] } else { &[l] };
            for &image in images {
                let offset = lambda - image;
                if abs(offset) <= lobe {
                    in_lobe = true;
                } else {
                    envelope += c * options.window.leakage(offset / bin);
                }
            }
        }
        if in_lobe || m <= envelope {
            masked += 1;
        } else {
            accepted.push((lambda, m));
        }
    }
    accepted.sort_by(|a, b| a.0.total_cmp(&b.0));

    let last = (count - 1) as f64 * options.lambda_step;
    let mut inconclusive = false;
    let flagged: Vec<FlaggedFrequency> = accepted
        .into_iter()
        .map(|(lambda, magnitude)| {
            inconclusive |= abs(lambda - last) < 0.5 * options.lambda_step;
            let best = combos
                .iter()
                .map(|(ks, v)| (ks, abs(v - lambda)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            let (combination, distance) = match best {
                Some((ks, d)) if d <= resolution => (Some(ks.clone()), d),
                Some((_, d)) => (None, d),
                None => (None, f64::INFINITY),
            };
            FlaggedFrequency { lambda, magnitude, combination, distance }
        })
        .collect();
    let passed = flagged.iter().all(|f| f.combination.is_some());
    Ok(ModuleReport { flagged, resolution, passed, inconclusive, masked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sqrt;

    fn quasi() -> ApCoefficient {
        ApCoefficient::constant(0.3)
            .with_mode(TemporalMode::sine(1.0, SpatialProfile::constant(0.5)))
            .with_mode(TemporalMode::cosine(sqrt(2.0), SpatialProfile::constant(0.2)))
    }

    #[test]
    fn evaluates_trig_polynomials() {
        let a = ApCoefficient::constant(0.3).with_mode(TemporalMode::sine(1.0, SpatialProfile::constant(0.5)));
        assert!((a.evaluate(PI / 2.0, &[0.0]) - 0.8).abs() < 1e-15);
        let b = ApCoefficient::constant(1.0).with_mode(TemporalMode::cosine(1.0, SpatialProfile::cosine(0.0, 1.0, 1.0, 0.0)));
        assert!((b.evaluate(0.0, &[0.0]) - 2.0).abs() < 1e-15);
        assert_eq!(ApCoefficient::constant(-0.7).evaluate(3.0, &[1.0]), -0.7);
    }

    #[test]
    fn time_means() {
        assert_eq!(quasi().time_mean(), SpatialProfile::constant(0.3));
        let st = ApCoefficient::from_profile(SpatialProfile::cosine(1.0, 1.0, 1.0, 0.0));
        assert_eq!(st.time_mean().evaluate(&[0.3]), st.evaluate(5.0, &[0.3]));
        let numeric = quasi().time_mean_numeric(&[0.0], 1e4, 200_000);
        assert!((numeric - 0.3).abs() < 10.0 * 1.0 / 1e4);
    }

    #[test]
    fn validation() {
        let dup = quasi().with_mode(TemporalMode::sine(1.0, SpatialProfile::constant(0.1)));
        assert!(dup.validate().is_err());
        let neg = ApCoefficient::constant(0.0).with_mode(TemporalMode::sine(-1.0, SpatialProfile::constant(0.1)));
        assert!(neg.validate().is_err());
        assert!(quasi().validate().is_ok());
    }

    #[test]
    fn space_means() {
        let torus = Domain::circle(0.0, TAU, 64).unwrap();
        let p = SpatialProfile::cosine(1.0, 1.0, 1.0, 0.0);
        assert!((space_mean(&p, &torus) - 1.0).abs() < 1e-15);
        let quad = space_mean_values(&p.sample(&torus), &torus);
        assert!((quad - 1.0).abs() < 1e-10);
        let bx = Domain::interval(0.0, 1.0, 11).unwrap();
        assert!((space_mean_values(&bx.sample(|x| x[0]), &bx) - 0.5).abs() < 1e-15);
        assert_eq!(space_mean(&SpatialProfile::constant(2.5), &bx), 2.5);
    }

    #[test]
    fn bohr_coefficients_of_sine() {
        let s = TimeSeries::sample(0.0, 0.01, 100_001, libm::sin);
        let c1 = bohr_fourier_coeff(&s, 1.0, Window::Rectangular).unwrap();
        assert!((c1 - Complex64::new(0.0, -0.5)).norm() < 2.0 / 1e3);
        let c2 = bohr_fourier_coeff(&s, sqrt(2.0), Window::Rectangular).unwrap();
        assert!(c2.norm() < 2.0 / 1e3);
        let c = TimeSeries { t0: 0.0, dt: 0.1, values: vec![3.0; 10_001] };
        assert!((bohr_fourier_coeff(&c, 0.0, Window::Rectangular).unwrap().re - 3.0).abs() < 1e-12);
        assert!(matches!(
            bohr_fourier_coeff(&s, 50.0, Window::Rectangular),
            Err(Error::Undersampled { .. })
        ));
        let short = TimeSeries::sample(0.0, 0.01, 1000, libm::sin);
        assert!(bohr_fourier_coeff(&short, 1.0, Window::Rectangular).is_err());
    }

    #[test]
    fn translation_numbers_of_sine_include_periods() {
        let a = ApCoefficient::constant(0.0).with_mode(TemporalMode::sine(1.0, SpatialProfile::constant(1.0)));
        let sampling = TranslationSampling { tau_step: PI / 50.0, ..Default::default() };
        let rep = epsilon_translation_numbers(&[&a], 1e-6, (-20.0 * PI, 20.0 * PI), &sampling).unwrap();
        let reps = rep.representatives(sampling.tau_step);
        assert_eq!(reps.len(), 21);
        for (n, tau) in (-10..=10).zip(&reps) {
            assert!((tau - TAU * n as f64).abs() < 1e-9);
        }
        let constant = ApCoefficient::constant(1.0);
        let all = epsilon_translation_numbers(&[&constant], 1e-3, (0.0, 1.0), &sampling).unwrap();
        assert_eq!(all.taus.len(), 1 + (1.0 / sampling.tau_step).round() as usize);
    }

    #[test]
    fn combinations_respect_order() {
        let c = integer_combinations(&[1.0], 3, 3);
        let values: Vec<f64> = c.iter().map(|(_, v)| *v).collect();
        assert_eq!(values, vec![0.0, 1.0, 2.0, 3.0]);
        let two = integer_combinations(&[1.0, sqrt(2.0)], 3, 3);
        assert!(two.iter().any(|(k, _)| k == &vec![-1, 1]));
        assert!(two.iter().all(|(k, _)| k.iter().map(|v| v.abs()).sum::<i32>() <= 3));
    }
}
