//! Time integration of `u_t = Ku + u f(t,x,u)` with `f = a - b u`, and of the
//! linearization `u_t = Ku + a u`, by the classical four-stage Runge-Kutta
//! method.

use alloc::vec;
use alloc::vec::Vec;

use crate::almost_periodic::{ApCoefficient, GridCoefficient};
use crate::error::{Error, Result};
use crate::kernel::{neumann_shift, Dispersal, Workspace};
use crate::math::{abs, ceil};

/// Default upper limit on the time step.
pub const DEFAULT_DT: f64 = 0.01;

/// How the reaction accounts for kernel mass leaving a bounded box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundaryShift {
    /// Exterior values are zero and the lost mass is not compensated
    /// (Dirichlet type).
    #[default]
    None,
    /// `a(t,x)` is replaced by `a(t,x) - ∫_D κ(y-x) dy`, giving the
    /// Neumann-type operator `∫_D κ(y-x)(u(y) - u(x)) dy`.
    Neumann,
}

/// Logistic reaction `f(t,x,u) = a(t,x) - b(t,x) u`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Reaction {
    pub a: ApCoefficient,
    pub b: ApCoefficient,
    #[cfg_attr(feature = "serde", serde(default))]
    pub shift: BoundaryShift,
}

impl Reaction {
    pub fn logistic(a: ApCoefficient, b: ApCoefficient) -> Self {
        Reaction { a, b, shift: BoundaryShift::None }
    }
}

/// Grid values of `u(t, ·)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Field {
    pub t: f64,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(t: f64, values: Vec<f64>) -> Self {
        Field { t, values }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// In the positive cone: every value `>= 0`.
    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }

    /// In the interior of the cone: minimum `> 0`.
    pub fn is_positive(&self) -> bool {
        self.min() > 0.0
    }
}

/// Fields at uniformly spaced times.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    /// Spacing between stored fields.
    pub dt: f64,
    pub fields: Vec<Field>,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.fields.first().map_or(0.0, |f| f.t)
    }

    pub fn last(&self) -> &Field {
        self.fields.last().expect("trajectory has at least one field")
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(abs(*x)))
}

/// Number of steps and step size covering `[s, t]` with steps `<= dt`.
pub fn step_count(s: f64, t: f64, dt: f64) -> (usize, f64) {
    let span = t - s;
    if span <= 0.0 {
        return (0, 0.0);
    }
    let n = (ceil(span / dt - 1e-9) as usize).max(1);
    (n, span / n as f64)
}

/// The right-hand side of the nonlinear equation or of its linearization on a
/// fixed grid.
#[derive(Debug, Clone)]
pub struct Model {
    dispersal: Dispersal,
    a: GridCoefficient,
    b: Option<GridCoefficient>,
    boundary: BoundaryShift,
    shift: Option<Vec<f64>>,
    sup_a: f64,
    b_max: f64,
    u_cap: f64,
    dt_max: f64,
}

impl Model {
    /// `u_t = Ku + u (a - b u)`; requires `b` bounded below by a positive
    /// constant on the grid.
    pub fn nonlinear(dispersal: &Dispersal, reaction: &Reaction) -> Result<Self> {
        reaction.a.validate()?;
        reaction.b.validate()?;
        let domain = dispersal.domain();
        let boundary = reaction.shift;
        let shift = shift_values(dispersal, boundary);
        let a_env = shifted_envelope(&reaction.a, dispersal, shift.as_deref());
        let b_env = reaction.b.grid_envelope(domain);
        let b_min = b_env.iter().map(|e| e.0).fold(f64::INFINITY, f64::min);
        if !(b_min > 0.0) {
            return Err(Error::InvalidCoefficient("b must be bounded below by a positive constant"));
        }
        let b_max = b_env.iter().map(|e| e.1).fold(0.0, f64::max);
        let u_cap = a_env
            .iter()
            .zip(&b_env)
            .map(|(a, b)| (1.0 + a.1) / b.0)
            .fold(0.0, f64::max);
        let sup_a = a_env.iter().fold(0.0f64, |m, e| m.max(abs(e.0)).max(abs(e.1)));
        let dt_max = 0.5 / (1.0 + sup_a + b_max * u_cap);
        Ok(Model {
            dispersal: dispersal.clone(),
            a: reaction.a.on_grid(domain),
            b: Some(reaction.b.on_grid(domain)),
            boundary,
            shift,
            sup_a,
            b_max,
            u_cap,
            dt_max,
        })
    }

    /// `u_t = Ku + a u`.
    pub fn linear(dispersal: &Dispersal, a: &ApCoefficient, boundary: BoundaryShift) -> Result<Self> {
        a.validate()?;
        let shift = shift_values(dispersal, boundary);
        let a_env = shifted_envelope(a, dispersal, shift.as_deref());
        let sup_a = a_env.iter().fold(0.0f64, |m, e| m.max(abs(e.0)).max(abs(e.1)));
        Ok(Model {
            dispersal: dispersal.clone(),
            a: a.on_grid(dispersal.domain()),
            b: None,
            boundary,
            shift,
            sup_a,
            b_max: 0.0,
            u_cap: 0.0,
            dt_max: 0.5 / (1.0 + sup_a),
        })
    }

    pub fn dispersal(&self) -> &Dispersal {
        &self.dispersal
    }

    pub fn len(&self) -> usize {
        self.dispersal.domain().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn boundary(&self) -> BoundaryShift {
        self.boundary
    }

    /// Coefficients do not depend on time.
    pub fn is_autonomous(&self) -> bool {
        self.a.is_static() && self.b.as_ref().is_none_or(GridCoefficient::is_static)
    }

    pub fn is_linear(&self) -> bool {
        self.b.is_none()
    }

    /// `sup |a|` over the grid and all times (after any boundary shift).
    pub fn sup_a(&self) -> f64 {
        self.sup_a
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// `max_x sup_t (1 + a)/inf_t b`: above this level `f + 1 < 0`. Zero for
    /// the linear model.
    pub fn u_cap(&self) -> f64 {
        self.u_cap
    }

    /// Largest step accepted by [`Model::step`].
    pub fn dt_max(&self) -> f64 {
        self.dt_max
    }

    pub fn default_dt(&self) -> f64 {
        self.dt_max.min(DEFAULT_DT)
    }

    /// `a(t, ·)` on the grid including any boundary shift.
    pub fn growth_into(&self, t: f64, out: &mut [f64]) {
        self.a.evaluate_into(t, out);
        if let Some(s) = &self.shift {
            for (o, s) in out.iter_mut().zip(s) {
                *o -= s;
            }
        }
    }

    /// `f(t, x_i, u_i)` on the grid.
    pub fn rate_into(&self, t: f64, u: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        self.growth_into(t, out);
        if let Some(b) = &self.b {
            b.evaluate_into(t, scratch);
            for ((o, b), u) in out.iter_mut().zip(scratch.iter()).zip(u) {
                *o -= b * u;
            }
        }
    }

    pub fn stepper(&self) -> Stepper<'_> {
        Stepper::new(self)
    }

    /// One RK4 step from `(t, u)`.
    pub fn step(&self, u: &Field, dt: f64) -> Result<Field> {
        let mut values = u.values.clone();
        self.stepper().step(u.t, dt, &mut values)?;
        Ok(Field::new(u.t + dt, values))
    }

    /// Final state at time `t` from `u0` at time `s`.
    pub fn propagate(&self, u0: &[f64], s: f64, t: f64, dt: Option<f64>) -> Result<Vec<f64>> {
        let mut u = u0.to_vec();
        self.stepper().advance(&mut u, s, t, dt.unwrap_or(self.default_dt()))?;
        Ok(u)
    }

    /// Trajectory on `[s, t]` stored every `save_every` time units.
    pub fn solve(&self, u0: &[f64], s: f64, t: f64, opts: &SolveOptions) -> Result<Trajectory> {
        self.dispersal.domain().check_len(u0.len())?;
        if t < s {
            return Err(Error::Precondition("solve needs t >= s"));
        }
        let dt = opts.dt.unwrap_or(self.default_dt());
        let every = opts.save_every.unwrap_or(dt);
        let segments = (t - s) / every;
        let count = libm::round(segments);
        if abs(segments - count) > 1e-9 * segments.max(1.0) {
            return Err(Error::Precondition("solve span must be a multiple of save_every"));
        }
        let count = count as usize;
        let mut u = u0.to_vec();
        let mut fields = Vec::with_capacity(count + 1);
        fields.push(Field::new(s, u.clone()));
        let mut stepper = self.stepper();
        for k in 0..count {
            let t0 = s + k as f64 * every;
            let t1 = s + (k + 1) as f64 * every;
            stepper.advance(&mut u, t0, t1, dt)?;
            fields.push(Field::new(t1, u.clone()));
        }
        Ok(Trajectory { dt: every, fields })
    }
}

fn shift_values(dispersal: &Dispersal, shift: BoundaryShift) -> Option<Vec<f64>> {
    match shift {
        BoundaryShift::Neumann if !dispersal.domain().is_torus() => Some(neumann_shift(dispersal)),
        // On a torus K1 = 1 identically; keep the shift for consistency.
        BoundaryShift::Neumann => Some(vec![1.0; dispersal.domain().len()]),
        BoundaryShift::None => None,
    }
}

fn shifted_envelope(a: &ApCoefficient, dispersal: &Dispersal, shift: Option<&[f64]>) -> Vec<(f64, f64)> {
    let mut env = a.grid_envelope(dispersal.domain());
    if let Some(s) = shift {
        for (e, s) in env.iter_mut().zip(s) {
            e.0 -= s;
            e.1 -= s;
        }
    }
    env
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveOptions {
    /// Step size; defaults to [`Model::default_dt`].
    pub dt: Option<f64>,
    /// Spacing of stored fields; defaults to the step size.
    pub save_every: Option<f64>,
}

/// RK4 stepping with reusable buffers.
#[derive(Debug)]
pub struct Stepper<'a> {
    model: &'a Model,
    stages: [Vec<f64>; 4],
    trial: Vec<f64>,
    rate: Vec<f64>,
    scratch: Vec<f64>,
    ws: Workspace,
}

impl<'a> Stepper<'a> {
    fn new(model: &'a Model) -> Self {
        let n = model.len();
        Stepper {
            model,
            stages: [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            trial: vec![0.0; n],
            rate: vec![0.0; n],
            scratch: vec![0.0; n],
            ws: Workspace::default(),
        }
    }

    /// `out = Ku + u f(t,x,u)`.
    pub fn rhs(&mut self, t: f64, u: &[f64], out: &mut [f64]) -> Result<()> {
        self.model.dispersal.apply_into(u, out, &mut self.ws)?;
        self.model.rate_into(t, u, &mut self.rate, &mut self.scratch);
        for ((o, u), r) in out.iter_mut().zip(u).zip(&self.rate) {
            *o += u * r;
        }
        Ok(())
    }

    pub fn step(&mut self, t: f64, dt: f64, u: &mut [f64]) -> Result<()> {
        let dt_max = self.model.dt_max;
        if dt > dt_max * (1.0 + 1e-12) {
            return Err(Error::StepTooLarge { dt, dt_max });
        }
        self.model.dispersal.domain().check_len(u.len())?;
        let mut stages = core::mem::take(&mut self.stages);
        let mut trial = core::mem::take(&mut self.trial);
        let result = (|| {
            self.rhs(t, u, &mut stages[0])?;
            for (i, c) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
                let (done, rest) = stages.split_at_mut(i);
                for ((y, u), k) in trial.iter_mut().zip(u.iter()).zip(&done[i - 1]) {
                    *y = u + c * dt * k;
                }
                self.rhs(t + c * dt, &trial, &mut rest[0])?;
            }
            let [k1, k2, k3, k4] = &stages;
            let mut finite = true;
            for i in 0..u.len() {
                u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                finite &= u[i].is_finite();
            }
            if finite { Ok(()) } else { Err(Error::NonFinite { t: t + dt }) }
        })();
        self.stages = stages;
        self.trial = trial;
        result
    }

    /// Integrates `u` in place from `s` to `t` with equal steps `<= dt`.
    pub fn advance(&mut self, u: &mut [f64], s: f64, t: f64, dt: f64) -> Result<()> {
        let (n, h) = step_count(s, t, dt);
        for k in 0..n {
            self.step(s + k as f64 * h, h, u)?;
        }
        Ok(())
    }
}

/// Outcome of [`check_supersub`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SuperSubReport {
    pub is_super: bool,
    pub is_sub: bool,
    /// Extremes of `∂_t φ - Kφ - φ f(t,x,φ)` over the samples.
    pub min_residual: f64,
    pub max_residual: f64,
}

/// Time derivative of uniformly sampled fields: centered in the interior,
/// second-order one-sided at the ends.
pub fn time_derivative(samples: &Trajectory, k: usize, out: &mut [f64]) {
    let f = &samples.fields;
    let dt = samples.dt;
    let n = f.len();
    let (c, idx): ([f64; 3], [usize; 3]) = if n < 3 {
        ([-1.0 / dt, 1.0 / dt, 0.0], [0, n - 1, n - 1])
    } else if k == 0 {
        ([-1.5 / dt, 2.0 / dt, -0.5 / dt], [0, 1, 2])
    } else if k == n - 1 {
        ([0.5 / dt, -2.0 / dt, 1.5 / dt], [n - 3, n - 2, n - 1])
    } else {
        ([-0.5 / dt, 0.0, 0.5 / dt], [k - 1, k, k + 1])
    };
    for (i, o) in out.iter_mut().enumerate() {
        *o = c[0] * f[idx[0]].values[i] + c[1] * f[idx[1]].values[i] + c[2] * f[idx[2]].values[i];
    }
}

/// Classifies a sampled `φ` as a super-solution (residual `>= -tol`
/// everywhere) and/or a sub-solution (residual `<= tol` everywhere).
pub fn check_supersub(candidate: &Trajectory, model: &Model, tol: f64) -> Result<SuperSubReport> {
    if candidate.len() < 2 {
        return Err(Error::Precondition("need at least two samples in time"));
    }
    let n = model.len();
    let mut stepper = model.stepper();
    let mut dphi = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (k, field) in candidate.fields.iter().enumerate() {
        model.dispersal.domain().check_len(field.values.len())?;
        time_derivative(candidate, k, &mut dphi);
        stepper.rhs(field.t, &field.values, &mut rhs)?;
        for (d, r) in dphi.iter().zip(&rhs) {
            let res = d - r;
            lo = lo.min(res);
            hi = hi.max(res);
        }
    }
    Ok(SuperSubReport { is_super: lo >= -tol, is_sub: hi <= tol, min_residual: lo, max_residual: hi })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OrderingReport {
    pub passed: bool,
    /// `(field index, node, excess)` of the first violation.
    pub first_violation: Option<(usize, usize, f64)>,
    /// Largest `lower - upper` seen (negative when strictly ordered).
    pub max_excess: f64,
}

/// Checks `lower <= upper + tol` pointwise at every stored time.
pub fn check_ordering(lower: &Trajectory, upper: &Trajectory, tol: f64) -> Result<OrderingReport> {
    if lower.len() != upper.len() {
        return Err(Error::Precondition("trajectories have different lengths"));
    }
    let mut first = None;
    let mut max_excess = f64::NEG_INFINITY;
    for (k, (l, u)) in lower.fields.iter().zip(&upper.fields).enumerate() {
        if abs(l.t - u.t) > 1e-9 * (1.0 + abs(l.t)) {
            return Err(Error::Precondition("trajectories have different time stamps"));
        }
        if l.values.len() != u.values.len() {
            return Err(Error::GridMismatch { expected: l.values.len(), found: u.values.len() });
        }
        for (i, (a, b)) in l.values.iter().zip(&u.values).enumerate() {
            let excess = a - b;
            max_excess = max_excess.max(excess);
            if first.is_none() && excess > tol {
                first = Some((k, i, excess));
            }
        }
    }
    Ok(OrderingReport { passed: first.is_none(), first_violation: first, max_excess })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DomainComparison {
    pub passed: bool,
    /// Largest `u_inner - u_outer` on the inner grid over all stored times.
    pub max_excess: f64,
    /// Smallest `u_outer - u_inner` at interior inner nodes at the final time.
    pub interior_gap: f64,
}

/// Solves on `outer` from `u0` and on `inner` from the restriction of `u0`,
/// then checks `u_inner <= u_outer` on the inner grid.
pub fn domain_comparison(
    outer: &Model,
    inner: &Model,
    u0: &[f64],
    s: f64,
    t: f64,
    opts: &SolveOptions,
    tol: f64,
) -> Result<DomainComparison> {
    let map = outer.dispersal.domain().embedding_of(inner.dispersal.domain())?;
    let u0_inner: Vec<f64> = map.iter().map(|&i| u0[i]).collect();
    let big = outer.solve(u0, s, t, opts)?;
    let small = inner.solve(&u0_inner, s, t, opts)?;
    let mut max_excess = f64::NEG_INFINITY;
    for (fb, fs) in big.fields.iter().zip(&small.fields) {
        for (j, &i) in map.iter().enumerate() {
            max_excess = max_excess.max(fs.values[j] - fb.values[i]);
        }
    }
    let inner_domain = inner.dispersal.domain();
    let shape = inner_domain.shape();
    let last_b = big.last();
    let last_s = small.last();
    let mut interior_gap = f64::INFINITY;
    for (j, &i) in map.iter().enumerate() {
        let (ix, iy) = (j % shape[0], j / shape[0]);
        let boundary = ix == 0 || ix + 1 == shape[0] || (shape[1] > 1 && (iy == 0 || iy + 1 == shape[1]));
        if !boundary {
            interior_gap = interior_gap.min(last_b.values[i] - last_s.values[j]);
        }
    }
    Ok(DomainComparison { passed: max_excess <= tol, max_excess, interior_gap })
}
