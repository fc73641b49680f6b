//! Number formatting shared by the CSV writers.

/// Format like C's `%.{digits}g`: `digits` significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-5 <= |v| < 10^digits`.
pub fn format_significant(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::format_significant as f;

    #[test]
    fn matches_printf_g() {
        assert_eq!(f(0.0, 10), "0");
        assert_eq!(f(1.0, 10), "1");
        assert_eq!(f(-3.5, 10), "-3.5");
        assert_eq!(f(14.25, 10), "14.25");
        assert_eq!(f(0.012_345_678_912_3, 10), "0.01234567891");
        assert_eq!(f(1e-7, 10), "1e-07");
        assert_eq!(f(123_456_789_012.0, 10), "1.23456789e+11");
        assert_eq!(f(9.999_999_999_9, 10), "10");
        assert_eq!(f(2.0 / 3.0, 10), "0.6666666667");
    }
}
