//! Floating-point comparison policy shared by every inequality check.

/// Relative slack applied to asserted inequalities.
pub const REL_SLACK: f64 = 1e-9;

/// Additive slack `1e-9 * max(1, |lhs|, |rhs|)`.
#[inline]
pub fn slack(lhs: f64, rhs: f64) -> f64 {
    REL_SLACK * 1f64.max(lhs.abs()).max(rhs.abs())
}

/// `lhs >= rhs` up to [`slack`].
#[inline]
pub fn approx_ge(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - slack(lhs, rhs)
}

/// `|lhs - rhs| <= slack`.
#[inline]
pub fn approx_eq(lhs: f64, rhs: f64) -> bool {
    (lhs - rhs).abs() <= slack(lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_scales_with_magnitude() {
        assert!(approx_ge(1.0 - 1e-10, 1.0));
        assert!(!approx_ge(1.0 - 1e-8, 1.0));
        assert!(approx_ge(1e6 - 1e-4, 1e6));
        assert!(approx_eq(0.1 + 0.2, 0.3));
    }
}
