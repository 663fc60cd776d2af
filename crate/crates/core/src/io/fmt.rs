//! Deterministic float serialization: six significant decimals, round half
//! to even, rendered as plain decimal text. Pins output bytes across
//! platforms and worker counts.

/// Format with six significant decimals (round-half-even), trailing zeros
/// trimmed. `format!("{:.5e}")` performs the correctly-rounded conversion
/// of the exact binary value; this reshapes it into plain decimal form.
pub fn fmt_sig6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.5e}", x.abs());
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("decimal exponent");
    let digits: Vec<u8> = mantissa
        .bytes()
        .filter(|b| b.is_ascii_digit())
        .collect();
    debug_assert_eq!(digits.len(), 6);

    let mut out = String::new();
    if x < 0.0 {
        out.push('-');
    }
    if exponent >= 5 {
        out.extend(digits.iter().map(|&b| b as char));
        for _ in 0..(exponent - 5) {
            out.push('0');
        }
    } else if exponent >= 0 {
        let split = (exponent + 1) as usize;
        out.extend(digits[..split].iter().map(|&b| b as char));
        let frac: Vec<u8> = digits[split..]
            .iter()
            .rev()
            .skip_while(|&&b| b == b'0')
            .copied()
            .collect();
        if !frac.is_empty() {
            out.push('.');
            out.extend(frac.iter().rev().map(|&b| b as char));
        }
    } else {
        out.push_str("0.");
        for _ in 0..(-exponent - 1) {
            out.push('0');
        }
        let end = digits
            .iter()
            .rposition(|&b| b != b'0')
            .expect("nonzero value has a nonzero digit");
        out.extend(digits[..=end].iter().map(|&b| b as char));
    }
    out
}

/// The value `fmt_sig6` prints, as a float again (for JSON output).
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_sig6(x).parse().expect("fmt_sig6 emits valid decimals")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn std_formatting_rounds_half_to_even() {
        // exact binary ties must break to even, otherwise determinism of the
        // printed decimals would depend on the formatter
        assert_eq!(format!("{:.0}", 0.5f64), "0");
        assert_eq!(format!("{:.0}", 1.5f64), "2");
        assert_eq!(format!("{:.0}", 2.5f64), "2");
        assert_eq!(format!("{:.2}", 0.125f64), "0.12");
        assert_eq!(format!("{:.2}", 0.375f64), "0.38");
    }

    #[test]
    fn plain_decimal_shapes() {
        assert_eq!(fmt_sig6(0.0), "0");
        assert_eq!(fmt_sig6(-0.0), "0");
        assert_eq!(fmt_sig6(3.0), "3");
        assert_eq!(fmt_sig6(-3.5), "-3.5");
        assert_eq!(fmt_sig6(1234.5), "1234.5");
        assert_eq!(fmt_sig6(0.1), "0.1");
        assert_eq!(fmt_sig6(0.25), "0.25");
        assert_eq!(fmt_sig6(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig6(2.0 / 3.0), "0.666667");
        assert_eq!(fmt_sig6(1e-4), "0.0001");
        assert_eq!(fmt_sig6(123456789.0), "123457000");
        assert_eq!(fmt_sig6(999999.5), "1000000");
        assert_eq!(fmt_sig6(f64::INFINITY), "inf");
        assert_eq!(fmt_sig6(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig6(3.0833333333333335), "3.08333");
        assert_eq!(fmt_sig6(2.9742857142857143), "2.97429");
        assert_eq!(fmt_sig6(0.000123456789), "0.000123457");
    }

    #[test]
    fn sig6_round_trips_through_text() {
        for &x in &[0.0, 1.0, -2.5, 3.0833333333333335, 1e-7, 123456.789] {
            assert_eq!(sig6(x), fmt_sig6(x).parse::<f64>().unwrap());
        }
    }
}
