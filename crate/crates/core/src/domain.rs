//! Uniform grids on a bounded box or a torus, in one or two dimensions.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, round};

/// Smallest admissible number of grid points per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DomainKind {
    /// Closed box; the grid includes both endpoints of every axis.
    BoundedBox,
    /// Periodic box standing in for the whole space. The grid holds
    /// `points` nodes per period, the upper endpoint being identified with the
    /// lower one.
    Torus,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub spacing: f64,
}

impl Axis {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Domain {
    kind: DomainKind,
    axes: Vec<Axis>,
}

impl Domain {
    /// Builds a domain from per-axis `(lower, upper)` bounds and point counts.
    ///
    /// For a torus `upper - lower` is the period.
    pub fn new(kind: DomainKind, bounds: &[(f64, f64)], counts: &[usize]) -> Result<Self> {
        if bounds.is_empty() || bounds.len() > 2 {
            return Err(Error::InvalidDomain("dimension must be 1 or 2"));
        }
        if bounds.len() != counts.len() {
            return Err(Error::InvalidDomain("bounds and counts differ in dimension"));
        }
        let mut axes = Vec::with_capacity(bounds.len());
        for (&(lower, upper), &points) in bounds.iter().zip(counts) {
            if points < MIN_POINTS {
                return Err(Error::InvalidDomain("fewer than 8 grid points on an axis"));
            }
            if !(lower.is_finite() && upper.is_finite()) || upper <= lower {
                return Err(Error::InvalidDomain("bounds must be finite and ordered"));
            }
            let spacing = match kind {
                DomainKind::BoundedBox => (upper - lower) / (points - 1) as f64,
                DomainKind::Torus => (upper - lower) / points as f64,
            };
            axes.push(Axis { lower, upper, points, spacing });
        }
        Ok(Domain { kind, axes })
    }

    pub fn interval(lower: f64, upper: f64, points: usize) -> Result<Self> {
        Self::new(DomainKind::BoundedBox, &[(lower, upper)], &[points])
    }

    pub fn circle(lower: f64, period: f64, points: usize) -> Result<Self> {
        Self::new(DomainKind::Torus, &[(lower, lower + period)], &[points])
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn is_torus(&self) -> bool {
        self.kind == DomainKind::Torus
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Points per axis, padded with 1 for the unused second axis.
    pub fn shape(&self) -> [usize; 2] {
        [self.axes[0].points, self.axes.get(1).map_or(1, |a| a.points)]
    }

    /// Total number of grid nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing).product()
    }

    /// Lebesgue measure of the box (one period for a torus).
    pub fn measure(&self) -> f64 {
        self.axes.iter().map(Axis::length).product()
    }

    /// Period of the given axis, torus only.
    pub fn period(&self, axis: usize) -> Option<f64> {
        self.is_torus().then(|| self.axes[axis].length())
    }

    /// Flat index of `(ix, iy)`, x fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix + self.axes[0].points * iy
    }

    /// Grid node of a flat index; the second coordinate is 0 in one dimension.
    pub fn point(&self, index: usize) -> [f64; 2] {
        let nx = self.axes[0].points;
        let x = self.axes[0].coordinate(index % nx);
        let y = self.axes.get(1).map_or(0.0, |a| a.coordinate(index / nx));
        [x, y]
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Trapezoid node weights (without `h^N`): 1/2 per axis on box boundary
    /// nodes, 1 elsewhere and everywhere on the torus.
    pub fn node_weights(&self) -> Vec<f64> {
        let axis_weights = |axis: &Axis| -> Vec<f64> {
            let mut w = alloc::vec![1.0; axis.points];
            if self.kind == DomainKind::BoundedBox {
                w[0] = 0.5;
                w[axis.points - 1] = 0.5;
            }
            w
        };
        let wx = axis_weights(&self.axes[0]);
        let wy = self.axes.get(1).map_or(alloc::vec![1.0], axis_weights);
        let mut out = Vec::with_capacity(self.len());
        for y in &wy {
            for x in &wx {
                out.push(x * y);
            }
        }
        out
    }

    /// Quadrature weights `ω_i h^N`; they sum to [`Domain::measure`].
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = self.cell_volume();
        self.node_weights().into_iter().map(|w| w * h).collect()
    }

    /// Quadrature of a grid function over the domain.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.quadrature_weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn check_len(&self, found: usize) -> Result<()> {
        if found == self.len() {
            Ok(())
        } else {
            Err(Error::GridMismatch { expected: self.len(), found })
        }
    }

    /// Samples `f` on the grid.
    pub fn sample(&self, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
        let dim = self.dim();
        self.points().map(|p| f(&p[..dim])).collect()
    }

    /// Aligned sub-box of a bounded box (or of one period of a torus).
    ///
    /// `bounds` are snapped to the nearest grid lines; they must lie within
    /// `1e-9` spacings of one. Returns the sub-domain and the map from its flat
    /// indices to this domain's flat indices.
    pub fn sub_box(&self, bounds: &[(f64, f64)]) -> Result<(Domain, Vec<usize>)> {
        if bounds.len() != self.dim() {
            return Err(Error::InvalidDomain("sub-box dimension mismatch"));
        }
        let mut ranges = [(0usize, 1usize); 2];
        let mut sub_bounds = Vec::with_capacity(self.dim());
        let mut counts = Vec::with_capacity(self.dim());
        for (a, (axis, &(lo, hi))) in self.axes.iter().zip(bounds).enumerate() {
            let snap = |x: f64| -> Result<usize> {
                let k = (x - axis.lower) / axis.spacing;
                let r = round(k);
                if abs(k - r) > 1e-9 || r < 0.0 {
                    return Err(Error::InvalidDomain("sub-box bounds are not on grid lines"));
                }
                Ok(r as usize)
            };
            let (i0, i1) = (snap(lo)?, snap(hi)?);
            if i1 <= i0 || i1 >= axis.points {
                return Err(Error::InvalidDomain("sub-box lies outside the grid"));
            }
            ranges[a] = (i0, i1 - i0 + 1);
            sub_bounds.push((axis.coordinate(i0), axis.coordinate(i1)));
            counts.push(i1 - i0 + 1);
        }
        let sub = Domain::new(DomainKind::BoundedBox, &sub_bounds, &counts)?;
        let mut map = Vec::with_capacity(sub.len());
        for jy in 0..ranges[1].1 {
            for jx in 0..ranges[0].1 {
                map.push(self.index(ranges[0].0 + jx, ranges[1].0 + jy));
            }
        }
        Ok((sub, map))
    }

    /// Map from the flat indices of `inner` to those of `self`, if `inner`'s
    /// nodes are a subset of this grid with the same spacing.
    pub fn embedding_of(&self, inner: &Domain) -> Result<Vec<usize>> {
        if inner.dim() != self.dim() {
            return Err(Error::InvalidDomain("embedding dimension mismatch"));
        }
        for (a, b) in self.axes.iter().zip(&inner.axes) {
            if abs(a.spacing - b.spacing) > 1e-12 * a.spacing {
                return Err(Error::InvalidDomain("grids have different spacing"));
            }
        }
        let bounds: Vec<(f64, f64)> = inner
            .axes
            .iter()
            .map(|a| (a.lower, a.coordinate(a.points - 1)))
            .collect();
        let (_, map) = self.sub_box(&bounds)?;
        Ok(map)
    }
}
