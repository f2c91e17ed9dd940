//! Thin wrappers over `libm` so the crate builds without `std`.

/// Relative tolerance used when rounding model outputs up to integers. A value
/// that is an integer up to floating-point noise must not be bumped to the next
/// integer.
const CEIL_TOLERANCE: f64 = 1e-9;

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn log10(x: f64) -> f64 {
    libm::log10(x)
}

#[inline]
pub(crate) fn pow10(x: f64) -> f64 {
    libm::pow(10.0, x)
}

/// Ceiling that ignores a relative excess below [`CEIL_TOLERANCE`].
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let slack = CEIL_TOLERANCE * x.abs().max(1.0);
    libm::ceil(x - slack)
}

/// Non-negative ceiling saturated into `u32`. NaN maps to 0.
pub(crate) fn ceil_to_u32(x: f64) -> u32 {
    let c = ceil_tolerant(x);
    if c.is_nan() || c <= 0.0 {
        0
    } else if c >= u32::MAX as f64 {
        u32::MAX
    } else {
        c as u32
    }
}
