//! Number formatting shared by every text output: six significant digits,
//! `%g` style.

/// Formats `x` like C's `%.6g`.
pub fn fmt_g6(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds to six significant digits (the value `fmt_g6` prints).
pub fn round_g6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Applies [`round_g6`] to every number in a JSON document.
pub fn round_json(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Number(n) => {
            if n.is_f64() {
                if let Some(f) = n.as_f64() {
                    if let Some(r) = serde_json::Number::from_f64(round_g6(f)) {
                        *n = r;
                    }
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_json),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_like_printf() {
        let cases = [
            (2.0, "2"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (2.25e-6, "2.25e-06"),
            (0.0001234567, "0.000123457"),
            (-1.5, "-1.5"),
            (999999.5, "1e+06"),
            (0.0, "0"),
        ];
        for (x, s) in cases {
            assert_eq!(fmt_g6(x), s, "{x}");
        }
    }

    #[test]
    fn reparse_matches_rounding() {
        for x in [std::f64::consts::PI, 1e-7 / 3.0, 98765.4321, -0.0123456789] {
            let back: f64 = fmt_g6(x).parse().unwrap();
            assert_eq!(back, round_g6(x));
            assert!((back - x).abs() <= 5e-6 * x.abs());
        }
    }
}
