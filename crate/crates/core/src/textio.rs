//! Shared helpers for the line-oriented text formats.
//!
//! All formats are UTF-8, `#` starts a comment, blank lines are ignored.
//! Complex literals are `a`, `a+bi` or `a-bi`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A content line with its 1-based position in the original file.
pub(crate) struct Line<'a> {
    pub number: usize,
    pub text: &'a str,
}

/// Strips comments and blank lines, keeping original line numbers.
pub(crate) fn content_lines(input: &str) -> Vec<Line<'_>> {
    input
        .lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let text = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let text = text.trim();
            if text.is_empty() {
                None
            } else {
                Some(Line { number: i + 1, text })
            }
        })
        .collect()
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses a complex literal: `a`, `a+bi`, `a-bi`, or a bare imaginary `bi`.
pub(crate) fn parse_complex(token: &str, line: usize) -> Result<Complex64> {
    let s = token.trim();
    if s.is_empty() {
        return Err(parse_err(line, "empty complex literal"));
    }
    if let Some(body) = s.strip_suffix(['i', 'I']) {
        // find the +/- that separates real and imaginary parts, skipping
        // a leading sign and exponent signs like 1e-3
        let bytes = body.as_bytes();
        let mut split = None;
        for pos in (1..bytes.len()).rev() {
            let c = bytes[pos] as char;
            if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
                split = Some(pos);
                break;
            }
        }
        match split {
            Some(pos) => {
                let re: f64 = body[..pos]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad real part in `{s}`")))?;
                let im: f64 = body[pos..]
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad imaginary part in `{s}`")))?;
                Ok(Complex64::new(re, im))
            }
            None => {
                let im: f64 = body
                    .parse()
                    .map_err(|_| parse_err(line, format!("bad imaginary literal `{s}`")))?;
                Ok(Complex64::new(0.0, im))
            }
        }
    } else {
        let re: f64 = s
            .parse()
            .map_err(|_| parse_err(line, format!("bad numeric literal `{s}`")))?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// Formats a complex number so that it round-trips exactly through
/// `parse_complex` (f64 `Display` is shortest-round-trip).
pub(crate) fn format_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Fixed 7-significant-digit formatting used by all CLI reports.
pub fn format_sig7(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.000000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (6 - exp).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}
