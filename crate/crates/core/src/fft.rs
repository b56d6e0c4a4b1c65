//! Iterative radix-2 FFT used for circular and zero-padded convolutions.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::math::{cos, sin, TAU};

#[derive(Debug, Clone)]
pub(crate) struct Radix2 {
    n: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Radix2 {
    /// `n` must be a power of two.
    pub(crate) fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two());
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -TAU * k as f64 / n as f64;
                Complex64::new(cos(angle), sin(angle))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        Radix2 { n, twiddles, bitrev }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    /// Inverse transform including the 1/n scaling.
    pub(crate) fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        debug_assert_eq!(buf.len(), n);
        for i in 0..n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= n {
            let half = size / 2;
            let stride = n / size;
            for start in (0..n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

/// Row-major 2-D transform (x fastest). A 1-D transform is the `ny == 1` case.
#[derive(Debug, Clone)]
pub(crate) struct Fft2 {
    x: Radix2,
    y: Option<Radix2>,
}

impl Fft2 {
    pub(crate) fn new(nx: usize, ny: usize) -> Self {
        Fft2 {
            x: Radix2::new(nx),
            y: (ny > 1).then(|| Radix2::new(ny)),
        }
    }

    pub(crate) fn size(&self) -> usize {
        self.x.len() * self.y.as_ref().map_or(1, Radix2::len)
    }

    pub(crate) fn forward(&self, buf: &mut [Complex64], column: &mut Vec<Complex64>) {
        self.apply(buf, column, false);
    }

    pub(crate) fn inverse(&self, buf: &mut [Complex64], column: &mut Vec<Complex64>) {
        self.apply(buf, column, true);
    }

    fn apply(&self, buf: &mut [Complex64], column: &mut Vec<Complex64>, inverse: bool) {
        let nx = self.x.len();
        for row in buf.chunks_exact_mut(nx) {
            if inverse {
                self.x.inverse(row);
            } else {
                self.x.forward(row);
            }
        }
        if let Some(fy) = &self.y {
            let ny = fy.len();
            column.clear();
            column.resize(ny, Complex64::new(0.0, 0.0));
            for ix in 0..nx {
                for iy in 0..ny {
                    column[iy] = buf[ix + nx * iy];
                }
                if inverse {
                    fy.inverse(column);
                } else {
                    fy.forward(column);
                }
                for iy in 0..ny {
                    buf[ix + nx * iy] = column[iy];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, z)| {
                        let angle = -TAU * (j * k) as f64 / n as f64;
                        z * Complex64::new(cos(angle), sin(angle))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1usize, 2, 8, 64] {
            let input: Vec<Complex64> = (0..n)
                .map(|j| Complex64::new(sin(j as f64 * 0.7) + 0.1, cos(j as f64 * 1.3)))
                .collect();
            let mut buf = input.clone();
            Radix2::new(n).forward(&mut buf);
            for (a, b) in buf.iter().zip(naive_dft(&input)) {
                assert!((a - b).norm() < 1e-11, "n={n}");
            }
        }
    }

    #[test]
    fn inverse_round_trips_in_two_dimensions() {
        let (nx, ny) = (8, 4);
        let input: Vec<Complex64> = (0..nx * ny).map(|j| Complex64::new(j as f64, -(j as f64) / 3.0)).collect();
        let plan = Fft2::new(nx, ny);
        let mut col = Vec::new();
        let mut buf = input.clone();
        plan.forward(&mut buf, &mut col);
        plan.inverse(&mut buf, &mut col);
        for (a, b) in buf.iter().zip(&input) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
