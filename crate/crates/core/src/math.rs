// libm stand-ins for the float methods that live in std.

pub(crate) use core::f64::consts::PI;
pub(crate) use libm::{ceil, cos, exp, fabs as abs, floor, log as ln, round, sin, sqrt};

pub(crate) const TAU: f64 = 2.0 * PI;

#[inline]
pub(crate) fn sq(x: f64) -> f64 {
    x * x
}
