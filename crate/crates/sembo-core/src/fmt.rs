//! Canonical number formatting for candidate strings and CSV output.

/// Format a float with up to 6 significant digits, no trailing zeros, and a
/// '.' decimal separator. The output is a pure function of the bit pattern,
/// so serialized candidates and logs are byte-stable across runs.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let exp10 = v.abs().log10().floor() as i32;
    if exp10 >= 6 || exp10 <= -5 {
        let mut m = v / 10f64.powi(exp10);
        let mut e = exp10;
        // Rounding to 5 decimals can carry the mantissa to 10.
        if m.abs() >= 9.999995 {
            m /= 10.0;
            e += 1;
        }
        format!("{}e{e}", trim_zeros(format!("{m:.5}")))
    } else {
        let decimals = (5 - exp10).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// Escape a string as a JSON string literal (including the quotes).
pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}
