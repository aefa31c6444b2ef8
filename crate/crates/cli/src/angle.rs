//! Angles written as multiples of pi.

use std::f64::consts::PI;

/// Parse `pi/6`, `2pi/23`, `3*pi/4`, `-pi`, `pi` or a plain number of radians.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_ascii_lowercase();
    let bad = || format!("cannot read angle {text:?}");
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad);
    };
    let head = s[..at].trim_end_matches('*');
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let tail = &s[at + 2..];
    let div = match tail.strip_prefix('/') {
        None if tail.is_empty() => 1.0,
        None => return Err(bad()),
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
    };
    if div == 0.0 || !coef.is_finite() || !div.is_finite() {
        return Err(bad());
    }
    Ok(coef * PI / div)
}
