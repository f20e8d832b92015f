//! Number formatting for reports: 12 significant digits, '.' decimal point.

use serde_json::Value;

pub const SIG_DIGITS: usize = 12;

/// Rounds to 12 significant digits. Non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Formats a float for CSV output.
pub fn fmt_sig(x: f64) -> String {
    let r = round_sig(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        format!("{r}")
    }
}

/// Rounds every float inside a JSON document in place.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64() {
                    if let Some(m) = serde_json::Number::from_f64(round_sig(x)) {
                        *n = m;
                    }
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_json),
        Value::Object(o) => o.values_mut().for_each(round_json),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round_sig(0.1 + 0.2), 0.3);
        assert_eq!(round_sig(1.0 / 3.0), 0.333333333333);
        assert_eq!(fmt_sig(-2.5e-20), "-0.000000000000000000025");
        assert_eq!(fmt_sig(0.0), "0");
    }
}
