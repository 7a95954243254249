//! Float formatting shared by every CSV writer.

use std::collections::BTreeMap;

/// Formats `x` with 9 significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Parses a float written by [`sig9`] (or any standard float literal).
pub fn parse_f64(field: &str) -> crate::Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| crate::Error::parse(format!("bad float '{field}': {e}")))
}

/// Metadata comment line `# key=value key=value` placed above a CSV header.
pub fn meta_line(pairs: &[(&str, String)]) -> String {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}", body.join(" "))
}

/// Inverse of [`meta_line`]. Values may not contain spaces.
pub fn parse_meta_line(line: &str) -> crate::Result<BTreeMap<String, String>> {
    let rest = line
        .strip_prefix('#')
        .ok_or_else(|| crate::Error::parse(format!("expected metadata line, got '{line}'")))?;
    rest.split_whitespace()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| crate::Error::parse(format!("bad metadata field '{kv}'")))
        })
        .collect()
}

/// Rounds to the value that [`sig9`] prints, so stored values survive a
/// write/read cycle unchanged.
pub fn round9(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}
