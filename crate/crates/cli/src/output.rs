//! Output formatting: every number is emitted with 12 significant digits,
//! CSV uses ',' delimiters, '.' decimals and LF line endings.

use serde_json::Value;

/// Formats with 12 significant digits.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{x:.11e}");
    // Re-parse so the shortest decimal form of the rounded value prints.
    let rounded: f64 = s.parse().unwrap_or(x);
    let plain = format!("{rounded}");
    if plain.len() <= 18 {
        plain
    } else {
        s
    }
}

/// Rounds a parsed f64 to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Recursively rounds every number in a JSON value to 12 significant digits.
pub fn round_json(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round12(x)) {
                    *v = Value::Number(r);
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// Builds a CSV document: header row plus rows of preformatted cells.
pub fn csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
