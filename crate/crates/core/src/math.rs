//! Float helpers that work without `std`.

pub(crate) use libm::{cos, exp, expm1, floor, log, sin, sqrt, tanh};

#[inline]
pub(crate) fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|v| v.is_finite())
}
