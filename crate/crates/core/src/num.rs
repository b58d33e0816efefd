//! Float rendering shared by the text formats.

/// Round to `digits` significant digits and print the shortest decimal that
/// reads back to the rounded value.
pub(crate) fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), value)
        .parse()
        .expect("scientific rendering of a finite float parses");
    format!("{rounded}")
}

/// Fixed-point rendering that never prints a negative zero.
pub(crate) fn format_fixed(value: f64, decimals: usize) -> String {
    let text = format!("{value:.decimals$}");
    if text.starts_with('-') && text[1..].chars().all(|c| c == '0' || c == '.') {
        text[1..].to_string()
    } else {
        text
    }
}
