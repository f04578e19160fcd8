/// Formats a float with the shortest representation that parses back to the
/// same bits. Missing values (NaN) become an empty string.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else if x == 0.0 {
        // drop the sign of negative zero
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// Rounds for display and strips the sign from values that round to zero.
pub(crate) fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}
