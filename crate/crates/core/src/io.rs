//! Output formatting shared by every writer.

use serde::Serialize;

use crate::error::Result;

/// A float with 17 significant digits in scientific notation; `NaN` and
/// infinities pass through as `NaN`, `inf`, `-inf`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Empty string for `None`.
pub fn fmt17_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// The resolved configuration as a single `#`-prefixed line for CSV headers.
pub fn config_comment<T: Serialize>(config: &T) -> Result<String> {
    Ok(format!("# config: {}\n", serde_json::to_string(config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_roundtrip() {
        for &v in &[0.1, 1.0 / 3.0, 2500.0, -6.672e-3, 1e-300] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
        assert_eq!(fmt17(f64::NAN), "NaN");
    }
}
