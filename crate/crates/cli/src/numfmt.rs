//! Decimal formatting at a fixed number of significant digits.

/// Significant digits carried by CSV artifacts.
pub const SIG_DIGITS: usize = 12;

/// Formats `v` with [`SIG_DIGITS`] significant digits: plain decimal for
/// moderate exponents, scientific outside them (the printf `%g` convention),
/// with trailing fractional zeros trimmed.
pub fn sig(v: f64) -> String {
    if !v.is_finite() || v == 0.0 {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, v);
    let (_, exp) = sci.split_once('e').expect("scientific form has an e");
    let exp: i32 = exp.parse().expect("float exponent parses");
    if exp < -4 || exp >= SIG_DIGITS as i32 {
        return trim_scientific(&sci);
    }
    let prec = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_plain(&format!("{v:.prec$}"))
}

fn trim_plain(s: &str) -> String {
    if !s.contains('.') {
        return s.to_owned();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_owned()
}

fn trim_scientific(s: &str) -> String {
    let (mantissa, exp) = s.split_once('e').expect("scientific form has an e");
    format!("{}e{}", trim_plain(mantissa), exp)
}
