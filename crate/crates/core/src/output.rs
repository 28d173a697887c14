//! Number formatting shared by every CSV writer.

/// Significant digits written when no precision is requested.
pub const FULL_PRECISION: usize = 17;

/// Formats `x` in scientific notation with `precision` significant digits
/// (17 by default). Locale-independent; non-finite values print as `NaN`,
/// `inf` and `-inf`.
pub fn format_real(x: f64, precision: Option<usize>) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = precision.unwrap_or(FULL_PRECISION).max(1);
    format!("{:.*e}", digits - 1, x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_at_full_precision() {
        for x in [0.1, 1.0 / 3.0, 1.4213562373095049e-4, -2.5e300, 0.0] {
            let s = format_real(x, None);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_real(0.5, Some(3)), "5.00e-1");
        assert_eq!(format_real(f64::NAN, None), "NaN");
        assert_eq!(format_real(f64::NEG_INFINITY, None), "-inf");
    }
}
