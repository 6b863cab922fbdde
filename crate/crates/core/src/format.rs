//! Number formatting shared by report writers.

/// Round-trippable CSV cell: 17 significant digits.
pub fn csv_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{v:.16e}")
}

/// Human-readable cell: 6 significant digits, scientific outside
/// `[1e-4, 1e15)`.
pub fn table_number(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    // round first so 0.0999999 counts as magnitude -1, not -2
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    let mag = rounded.abs().log10().floor() as i32;
    if !(-4..15).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_round_trip() {
        for v in [0.1 + 0.2, -1.0 / 3.0, 1e-300, 6.02e23, 0.0] {
            assert_eq!(csv_number(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn table_numbers_have_six_digits() {
        assert_eq!(table_number(0.455), "0.455000");
        assert_eq!(table_number(-13.8384), "-13.8384");
        assert_eq!(table_number(123456.7), "123457");
        assert_eq!(table_number(1.5e-7), "1.50000e-7");
        assert_eq!(table_number(-0.09999999999999), "-0.100000");
        assert_eq!(table_number(999999.7), "1000000");
    }
}
