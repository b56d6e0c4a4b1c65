//! Sampled dispersal kernels and the dispersal operator
//! `(Ku)(x) = ∫_D κ(y-x) u(y) dy`.
//!
//! On a bounded box the integral runs over the grid only (exterior values are
//! zero) and uses trapezoid node weights, so `K1` at an interior point is the
//! kernel mass inside the box up to `O(h²)`. On a torus the stencil is folded
//! onto one period and renormalized to unit discrete mass, which makes
//! constants exact eigenfunctions with eigenvalue 1.

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::domain::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::math::{ceil, exp, floor, ln, sq, sqrt, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "family", rename_all = "snake_case"))]
pub enum KernelFamily {
    /// Normal density with standard deviation `sigma` in every direction.
    Gaussian { sigma: f64 },
    /// `C (1 - |x|²/r²)²` on the ball of radius `r`, zero outside; C¹.
    Bump { radius: f64 },
}

impl KernelFamily {
    pub fn validate(&self) -> Result<()> {
        let p = match *self {
            KernelFamily::Gaussian { sigma } => sigma,
            KernelFamily::Bump { radius } => radius,
        };
        if p.is_finite() && p > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidKernel("kernel parameter must be positive and finite"))
        }
    }

    fn normalization(&self, dim: usize) -> f64 {
        match *self {
            KernelFamily::Gaussian { sigma } => {
                let c = 1.0 / sqrt(2.0 * PI * sq(sigma));
                if dim == 1 { c } else { c * c }
            }
            KernelFamily::Bump { radius } => {
                if dim == 1 {
                    15.0 / (16.0 * radius)
                } else {
                    3.0 / (PI * sq(radius))
                }
            }
        }
    }

    /// Continuum density as a function of `|z|²` in dimension `dim`.
    pub fn density_sq(&self, r2: f64, dim: usize) -> f64 {
        let c = self.normalization(dim);
        match *self {
            KernelFamily::Gaussian { sigma } => c * exp(-r2 / (2.0 * sq(sigma))),
            KernelFamily::Bump { radius } => {
                let s = 1.0 - r2 / sq(radius);
                if s > 0.0 { c * s * s } else { 0.0 }
            }
        }
    }

    pub fn density(&self, z: &[f64]) -> f64 {
        self.density_sq(z.iter().map(|v| v * v).sum(), z.len())
    }

    /// Radius beyond which the density drops below `threshold`.
    pub fn truncation_radius(&self, dim: usize, threshold: f64) -> f64 {
        let c = self.normalization(dim);
        if c <= threshold {
            return 0.0;
        }
        match *self {
            KernelFamily::Gaussian { sigma } => sigma * sqrt(2.0 * ln(c / threshold)),
            KernelFamily::Bump { radius } => radius * sqrt(1.0 - sqrt(threshold / c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ConvolutionMethod {
    /// FFT when the grid allows it and it is cheaper than direct summation.
    #[default]
    Auto,
    Direct,
    Fft,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct KernelOptions {
    /// Stencil entries with density below this value are dropped.
    pub threshold: f64,
    /// Fold stencils wider than half a torus period onto the period instead
    /// of rejecting them.
    pub periodize: bool,
    pub method: ConvolutionMethod,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions { threshold: 1e-12, periodize: true, method: ConvolutionMethod::Auto }
    }
}

/// A kernel sampled on the offsets of a particular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub family: KernelFamily,
    pub dim: usize,
    /// Truncation radius from the density threshold.
    pub radius: f64,
    /// Box stencils: largest offset index per axis. Torus stencils cover the
    /// whole period and this is `points - 1`.
    pub half_width: [usize; 2],
    /// Box: values on offsets `-w..=w` per axis, x fastest, shape
    /// `(2w_x+1) x (2w_y+1)`. Torus: values on offsets `0..n` per axis
    /// (offset `d` and `d - n` coincide).
    pub stencil: Vec<f64>,
    pub circular: bool,
    /// `h^N` times the sum of the stencil over all offsets within the
    /// truncation radius (not clipped to the box).
    pub mass: f64,
    cell: f64,
}

impl Kernel {
    pub fn sample(family: KernelFamily, domain: &Domain, options: &KernelOptions) -> Result<Self> {
        family.validate()?;
        if !(options.threshold > 0.0 && options.threshold < 1.0) {
            return Err(Error::InvalidKernel("threshold must lie in (0, 1)"));
        }
        let dim = domain.dim();
        let radius = family.truncation_radius(dim, options.threshold);
        let spacing: Vec<f64> = domain.axes().iter().map(|a| a.spacing).collect();
        let cell = domain.cell_volume();
        let thr = options.threshold;
        let value = |r2: f64| {
            let v = family.density_sq(r2, dim);
            if v >= thr { v } else { 0.0 }
        };

        match domain.kind() {
            DomainKind::BoundedBox => {
                let reach: Vec<usize> = spacing.iter().map(|h| floor(radius / h + 1e-9) as usize).collect();
                let shape = domain.shape();
                let w = [reach[0].min(shape[0] - 1), reach.get(1).map_or(0, |&r| r.min(shape[1] - 1))];
                let (sx, sy) = (2 * w[0] + 1, 2 * w[1] + 1);
                let hy = spacing.get(1).copied().unwrap_or(0.0);
                let mut stencil = Vec::with_capacity(sx * sy);
                for jy in 0..sy {
                    for jx in 0..sx {
                        let zx = (jx as f64 - w[0] as f64) * spacing[0];
                        let zy = (jy as f64 - w[1] as f64) * hy;
                        stencil.push(value(zx * zx + zy * zy));
                    }
                }
                let ry = reach.get(1).copied().unwrap_or(0) as i64;
                let rx = reach[0] as i64;
                let mut total = 0.0;
                for dy in -ry..=ry {
                    for dx in -rx..=rx {
                        let zx = dx as f64 * spacing[0];
                        let zy = dy as f64 * hy;
                        total += value(zx * zx + zy * zy);
                    }
                }
                Ok(Kernel {
                    family,
                    dim,
                    radius,
                    half_width: w,
                    stencil,
                    circular: false,
                    mass: total * cell,
                    cell,
                })
            }
            DomainKind::Torus => {
                let periods: Vec<f64> = domain.axes().iter().map(|a| a.length()).collect();
                let half = periods.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
                if !options.periodize && radius > half {
                    return Err(Error::Aliasing { radius, half_period: half });
                }
                let shape = domain.shape();
                let images: Vec<i64> = periods.iter().map(|p| ceil(radius / p) as i64 + 1).collect();
                let my = images.get(1).copied().unwrap_or(0);
                let py = periods.get(1).copied().unwrap_or(0.0);
                let hy = spacing.get(1).copied().unwrap_or(0.0);
                // Folded value at canonical offsets, mirrored afterwards so the
                // stencil is exactly symmetric.
                let folded = |dx: usize, dy: usize| -> f64 {
                    let mut acc = 0.0;
                    for iy in -my..=my {
                        let zy = dy as f64 * hy + iy as f64 * py;
                        for ix in -images[0]..=images[0] {
                            let zx = dx as f64 * spacing[0] + ix as f64 * periods[0];
                            acc += value(zx * zx + zy * zy);
                        }
                    }
                    acc
                };
                let (nx, ny) = (shape[0], shape[1]);
                let (cx, cy) = (nx / 2 + 1, ny / 2 + 1);
                let mut canonical = vec![0.0; cx * cy];
                for dy in 0..cy {
                    for dx in 0..cx {
                        canonical[dx + cx * dy] = folded(dx, dy);
                    }
                }
                let mut stencil = Vec::with_capacity(nx * ny);
                for dy in 0..ny {
                    let ey = dy.min(ny - dy);
                    for dx in 0..nx {
                        let ex = dx.min(nx - dx);
                        stencil.push(canonical[ex + cx * ey]);
                    }
                }
                let sum: f64 = stencil.iter().sum();
                if sum <= 0.0 {
                    return Err(Error::InvalidKernel("stencil vanishes on this grid"));
                }
                let scale = 1.0 / (sum * cell);
                for v in &mut stencil {
                    *v *= scale;
                }
                let mass = stencil.iter().sum::<f64>() * cell;
                Ok(Kernel {
                    family,
                    dim,
                    radius,
                    half_width: [nx - 1, ny - 1],
                    stencil,
                    circular: true,
                    mass,
                    cell,
                })
            }
        }
    }

    /// Sampled value at integer offset `(dx, dy)` (zero outside the stencil).
    pub fn at(&self, dx: i64, dy: i64) -> f64 {
        let [wx, wy] = self.half_width;
        if self.circular {
            let (nx, ny) = (wx as i64 + 1, wy as i64 + 1);
            let ix = dx.rem_euclid(nx) as usize;
            let iy = dy.rem_euclid(ny) as usize;
            self.stencil[ix + (wx + 1) * iy]
        } else {
            if dx.unsigned_abs() as usize > wx || dy.unsigned_abs() as usize > wy {
                return 0.0;
            }
            let ix = (dx + wx as i64) as usize;
            let iy = (dy + wy as i64) as usize;
            self.stencil[ix + (2 * wx + 1) * iy]
        }
    }

    /// `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.cell
    }
}

#[derive(Debug, Clone)]
struct FftPath {
    plan: Fft2,
    shape: [usize; 2],
    spectrum: Vec<Complex64>,
}

/// Scratch buffers for [`Dispersal::apply_into`].
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    weighted: Vec<f64>,
    buf: Vec<Complex64>,
    column: Vec<Complex64>,
}

/// The dispersal operator `K` bound to a domain.
#[derive(Debug, Clone)]
pub struct Dispersal {
    domain: Domain,
    kernel: Kernel,
    weights: Vec<f64>,
    fft: Option<FftPath>,
}

impl Dispersal {
    pub fn new(domain: &Domain, family: KernelFamily, options: &KernelOptions) -> Result<Self> {
        let kernel = Kernel::sample(family, domain, options)?;
        let weights = domain.node_weights();
        let fft = match options.method {
            ConvolutionMethod::Direct => None,
            ConvolutionMethod::Fft => Some(
                fft_path(domain, &kernel).ok_or(Error::InvalidKernel("grid does not admit a power-of-two FFT"))?,
            ),
            ConvolutionMethod::Auto => {
                let cost = direct_cost(domain, &kernel);
                fft_path(domain, &kernel).filter(|p| {
                    let l = p.shape[0] * p.shape[1];
                    (16 * l * (l.trailing_zeros() as usize).max(1)) < cost
                })
            }
        };
        Ok(Dispersal { domain: domain.clone(), kernel, weights, fft })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn uses_fft(&self) -> bool {
        self.fft.is_some()
    }

    /// Matrix entry `K[i][j]`: the weight of node `j` in `(Ku)(x_i)`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let nx = self.domain.shape()[0];
        let dx = (j % nx) as i64 - (i % nx) as i64;
        let dy = (j / nx) as i64 - (i / nx) as i64;
        self.kernel.cell * self.kernel.at(dx, dy) * self.weights[j]
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out, &mut Workspace::default())?;
        Ok(out)
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64], ws: &mut Workspace) -> Result<()> {
        self.domain.check_len(u.len())?;
        self.domain.check_len(out.len())?;
        match &self.fft {
            Some(path) => self.apply_fft(path, u, out, ws),
            None => self.direct_into(u, out, ws),
        }
        Ok(())
    }

    /// Direct summation, independent of the FFT path.
    pub fn apply_direct(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.domain.check_len(u.len())?;
        let mut out = vec![0.0; u.len()];
        self.direct_into(u, &mut out, &mut Workspace::default());
        Ok(out)
    }

    fn direct_into(&self, u: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let [nx, ny] = self.domain.shape();
        let k = &self.kernel;
        ws.weighted.clear();
        ws.weighted.extend(u.iter().zip(&self.weights).map(|(u, w)| u * w * k.cell));
        let v = &ws.weighted;
        if k.circular {
            for iy in 0..ny {
                for ix in 0..nx {
                    let mut acc = 0.0;
                    for jy in 0..ny {
                        let dy = (jy + ny - iy) % ny;
                        let row = &k.stencil[nx * dy..nx * (dy + 1)];
                        let vrow = &v[nx * jy..nx * (jy + 1)];
                        for jx in 0..nx {
                            acc += row[(jx + nx - ix) % nx] * vrow[jx];
                        }
                    }
                    out[ix + nx * iy] = acc;
                }
            }
        } else {
            let [wx, wy] = k.half_width;
            let sx = 2 * wx + 1;
            for iy in 0..ny {
                let jy0 = iy.saturating_sub(wy);
                let jy1 = (iy + wy).min(ny - 1);
                for ix in 0..nx {
                    let jx0 = ix.saturating_sub(wx);
                    let jx1 = (ix + wx).min(nx - 1);
                    let mut acc = 0.0;
                    for jy in jy0..=jy1 {
                        let srow = (jy + wy - iy) * sx;
                        for jx in jx0..=jx1 {
                            acc += k.stencil[srow + jx + wx - ix] * v[jx + nx * jy];
                        }
                    }
                    out[ix + nx * iy] = acc;
                }
            }
        }
    }

    fn apply_fft(&self, path: &FftPath, u: &[f64], out: &mut [f64], ws: &mut Workspace) {
        let [nx, ny] = self.domain.shape();
        let [lx, _] = path.shape;
        let cell = self.kernel.cell;
        ws.buf.clear();
        ws.buf.resize(path.plan.size(), Complex64::new(0.0, 0.0));
        let mut nonnegative = true;
        for iy in 0..ny {
            for ix in 0..nx {
                let i = ix + nx * iy;
                nonnegative &= u[i] >= 0.0;
                ws.buf[ix + lx * iy] = Complex64::new(u[i] * self.weights[i] * cell, 0.0);
            }
        }
        path.plan.forward(&mut ws.buf, &mut ws.column);
        for (z, s) in ws.buf.iter_mut().zip(&path.spectrum) {
            *z *= s;
        }
        path.plan.inverse(&mut ws.buf, &mut ws.column);
        for iy in 0..ny {
            for ix in 0..nx {
                let v = ws.buf[ix + lx * iy].re;
                out[ix + nx * iy] = if nonnegative && v < 0.0 { 0.0 } else { v };
            }
        }
    }
}

fn direct_cost(domain: &Domain, kernel: &Kernel) -> usize {
    let [nx, ny] = domain.shape();
    if kernel.circular {
        (nx * ny) * (nx * ny)
    } else {
        let [wx, wy] = kernel.half_width;
        nx * ny * (2 * wx + 1) * (2 * wy + 1)
    }
}

/// Spectrum of the correlation stencil on a power-of-two (padded) grid.
fn fft_path(domain: &Domain, kernel: &Kernel) -> Option<FftPath> {
    let [nx, ny] = domain.shape();
    let [wx, wy] = kernel.half_width;
    let shape = if kernel.circular {
        if !(nx.is_power_of_two() && ny.is_power_of_two()) {
            return None;
        }
        [nx, ny]
    } else {
        let lx = (nx + wx).next_power_of_two();
        let ly = if ny == 1 { 1 } else { (ny + wy).next_power_of_two() };
        [lx, ly]
    };
    let [lx, ly] = shape;
    // (Ku)_i = Σ_d s(d) v_{i+d} is a circular convolution with g(k) = s(-k).
    let mut spectrum = vec![Complex64::new(0.0, 0.0); lx * ly];
    if kernel.circular {
        for ky in 0..ly {
            for kx in 0..lx {
                spectrum[kx + lx * ky] = Complex64::new(kernel.at(-(kx as i64), -(ky as i64)), 0.0);
            }
        }
    } else {
        for dy in -(wy as i64)..=(wy as i64) {
            for dx in -(wx as i64)..=(wx as i64) {
                let kx = (-dx).rem_euclid(lx as i64) as usize;
                let ky = (-dy).rem_euclid(ly as i64) as usize;
                spectrum[kx + lx * ky] = Complex64::new(kernel.at(dx, dy), 0.0);
            }
        }
    }
    let plan = Fft2::new(lx, ly);
    let mut column = Vec::new();
    plan.forward(&mut spectrum, &mut column);
    Some(FftPath { plan, shape, spectrum })
}

/// `x ↦ ∫_D κ(y-x) dy` on the grid, the mass shift turning a Dirichlet-type
/// reaction into a Neumann-type one. Identically 1 on a torus.
pub fn neumann_shift(dispersal: &Dispersal) -> Vec<f64> {
    let ones = vec![1.0; dispersal.domain().len()];
    dispersal.apply_direct(&ones).expect("grid of matching length")
}

/// Result of [`iterated_kernel_lower_bound`].
#[derive(Debug, Clone, PartialEq)]
pub struct IteratedBound {
    /// Infimum over the ball of radius `k r0` of `Σ_{j≤i} (K^j u0)/j!`.
    pub mu: f64,
    /// Number of terms `i` summed after `u0` itself.
    pub terms: usize,
    /// Quadrature of `u0` over the ball of radius `r0`.
    pub mass: f64,
    /// Infimum after each added term.
    pub trace: Vec<f64>,
}

/// Positivity lower bound for `Σ_j K^j u0 / j!` on the ball of radius
/// `k r0` about `center`, given `u0 ≥ 0` with mass at least `delta0` on the
/// ball of radius `r0`.
///
/// Terms are added until the largest new term on the ball drops below
/// `1e-12`, so the infimum is stable to that level.
pub fn iterated_kernel_lower_bound(
    dispersal: &Dispersal,
    u0: &[f64],
    r0: f64,
    delta0: f64,
    k: usize,
    center: &[f64],
) -> Result<IteratedBound> {
    let domain = dispersal.domain();
    domain.check_len(u0.len())?;
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Error::Precondition("delta0 must lie in (0, 1)"));
    }
    if !(r0 > 0.0) || k == 0 {
        return Err(Error::Precondition("r0 and k must be positive"));
    }
    if center.len() != domain.dim() {
        return Err(Error::Precondition("center has the wrong dimension"));
    }
    if u0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Precondition("u0 must be nonnegative and finite"));
    }
    let dim = domain.dim();
    let dist2 = |p: [f64; 2]| -> f64 { (0..dim).map(|a| sq(p[a] - center[a])).sum() };
    let weights = domain.quadrature_weights();
    let tol = 1e-12;
    let mass: f64 = (0..domain.len())
        .filter(|&i| dist2(domain.point(i)) <= sq(r0) * (1.0 + tol))
        .map(|i| weights[i] * u0[i])
        .sum();
    if !(mass >= delta0) {
        return Err(Error::Precondition("u0 has too little mass on the inner ball"));
    }
    let ball: Vec<usize> = (0..domain.len())
        .filter(|&i| dist2(domain.point(i)) <= sq(k as f64 * r0) * (1.0 + tol))
        .collect();
    if ball.is_empty() {
        return Err(Error::Precondition("no grid node in the outer ball"));
    }
    let infimum = |sum: &[f64]| ball.iter().map(|&i| sum[i]).fold(f64::INFINITY, f64::min);

    let mut term = u0.to_vec();
    let mut sum = u0.to_vec();
    let mut next = vec![0.0; u0.len()];
    let mut ws = Workspace::default();
    let mut trace = vec![infimum(&sum)];
    let mut terms = 0;
    const MAX_TERMS: usize = 500;
    loop {
        terms += 1;
        dispersal.apply_into(&term, &mut next, &mut ws)?;
        let scale = 1.0 / terms as f64;
        for v in next.iter_mut() {
            *v *= scale;
        }
        core::mem::swap(&mut term, &mut next);
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
        trace.push(infimum(&sum));
        let largest = ball.iter().map(|&i| term[i]).fold(0.0, f64::max);
        if largest < tol {
            break;
        }
        if terms >= MAX_TERMS {
            return Err(Error::NotConverged { iterations: terms });
        }
    }
    let mu = *trace.last().expect("nonempty trace");
    if !(mu > 0.0) {
        return Err(Error::NonPositiveBound { mu });
    }
    Ok(IteratedBound { mu, terms, mass, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::TAU;

    fn gaussian() -> KernelFamily {
        KernelFamily::Gaussian { sigma: 1.0 }
    }

    #[test]
    fn gaussian_density_at_origin() {
        assert!((gaussian().density(&[0.0]) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert!((gaussian().density(&[0.0, 0.0]) - 1.0 / TAU).abs() < 1e-15);
    }

    #[test]
    fn torus_mass_is_renormalized() {
        let d = Domain::circle(0.0, TAU, 128).unwrap();
        let k = Kernel::sample(gaussian(), &d, &KernelOptions::default()).unwrap();
        assert!((k.mass - 1.0).abs() < 1e-14);
        assert!(k.stencil.iter().all(|v| *v >= 0.0) && k.stencil[0] > 0.0);
    }

    #[test]
    fn unfolded_torus_stencil_reports_aliasing() {
        let d = Domain::circle(0.0, TAU, 128).unwrap();
        let opts = KernelOptions { periodize: false, ..Default::default() };
        assert!(matches!(Kernel::sample(gaussian(), &d, &opts), Err(Error::Aliasing { .. })));
        let narrow = KernelFamily::Gaussian { sigma: 0.2 };
        assert!(Kernel::sample(narrow, &d, &opts).is_ok());
    }

    #[test]
    fn bump_support_matches_radius() {
        let d = Domain::interval(0.0, 1.0, 101).unwrap();
        let k = Kernel::sample(KernelFamily::Bump { radius: 0.5 }, &d, &KernelOptions::default()).unwrap();
        assert_eq!(k.half_width[0], 49);
        assert!(k.radius <= 0.5 && k.radius > 0.499);
        assert_eq!(k.at(50, 0), 0.0);
        assert!((k.mass - 1.0).abs() < 1e-3);
    }

    #[test]
    fn box_stencil_is_symmetric() {
        let d = Domain::new(DomainKind::BoundedBox, &[(0.0, 1.0), (0.0, 1.0)], &[21, 21]).unwrap();
        let k = Kernel::sample(gaussian(), &d, &KernelOptions::default()).unwrap();
        for dy in -20..=20 {
            for dx in -20..=20 {
                assert_eq!(k.at(dx, dy), k.at(-dx, -dy));
                assert_eq!(k.at(dx, dy), k.at(-dx, dy));
            }
        }
    }

    #[test]
    fn torus_constants_are_fixed() {
        let d = Domain::circle(0.0, TAU, 128).unwrap();
        let op = Dispersal::new(&d, gaussian(), &KernelOptions::default()).unwrap();
        assert!(op.uses_fft());
        for v in op.apply(&vec![1.0; 128]).unwrap() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn box_center_value_matches_normal_probability() {
        let d = Domain::interval(0.0, 1.0, 101).unwrap();
        let op = Dispersal::new(&d, gaussian(), &KernelOptions::default()).unwrap();
        let shift = neumann_shift(&op);
        // P(|Z| ≤ 1/2) for a standard normal Z.
        assert!((shift[50] - 0.382_924_922_548_026).abs() < 1e-5);
        assert!(shift[0] < shift[50]);
    }

    #[test]
    fn fft_matches_direct() {
        let opts = KernelOptions { method: ConvolutionMethod::Fft, ..Default::default() };
        let torus = Domain::circle(-3.0, 8.0, 64).unwrap();
        let bx = Domain::new(DomainKind::BoundedBox, &[(0.0, 2.0), (0.0, 1.0)], &[21, 11]).unwrap();
        for d in [torus, bx] {
            let op = Dispersal::new(&d, KernelFamily::Gaussian { sigma: 0.4 }, &opts).unwrap();
            let u = d.sample(|x| 1.0 + x.iter().map(|v| (3.0 * v).sin()).sum::<f64>());
            let fast = op.apply(&u).unwrap();
            let slow = op.apply_direct(&u).unwrap();
            let scale = slow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn rejects_mismatched_field() {
        let d = Domain::interval(0.0, 1.0, 11).unwrap();
        let op = Dispersal::new(&d, gaussian(), &KernelOptions::default()).unwrap();
        assert!(matches!(op.apply(&[1.0; 10]), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn iterated_bound_requires_mass() {
        let d = Domain::circle(-8.0, 16.0, 256).unwrap();
        let op = Dispersal::new(&d, gaussian(), &KernelOptions::default()).unwrap();
        let zero = vec![0.0; 256];
        assert!(op.domain().len() == 256);
        assert!(matches!(
            iterated_kernel_lower_bound(&op, &zero, 0.5, 0.5, 2, &[0.0]),
            Err(Error::Precondition(_))
        ));
        let ind = d.sample(|x| if x[0].abs() <= 0.5 { 1.0 } else { 0.0 });
        let wide = iterated_kernel_lower_bound(&op, &ind, 0.5, 0.5, 2, &[0.0]).unwrap();
        let narrow = iterated_kernel_lower_bound(&op, &ind, 0.5, 0.5, 1, &[0.0]).unwrap();
        assert!(wide.mu > 0.0 && wide.mu <= narrow.mu);
    }
}
