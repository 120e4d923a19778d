//! Complex literals: `a+bi`, `a-bi`, `bi`, `a`, `i`, and multiples of `pi*i`
//! such as `2pi*i`, `-4pi*i` or `pi*i`.

use expforge::Complex64;
use std::f64::consts::PI;

fn real(s: &str, whole: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|_| format!("`{whole}` is not a complex literal (bad number `{s}`)"))
}

/// Coefficient in front of `i`: empty or a sign means ±1.
fn coefficient(s: &str, whole: &str) -> Result<f64, String> {
    match s {
        "" | "+" => Ok(1.0),
        "-" => Ok(-1.0),
        _ => real(s, whole),
    }
}

pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err("empty complex literal".into());
    }
    if let Some(k) = s.strip_suffix("pi*i") {
        let k = k.strip_suffix('*').unwrap_or(k);
        return Ok(Complex64::new(0.0, coefficient(k, text)? * PI));
    }
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(real(&s, text)?, 0.0));
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&j| (bytes[j] == b'+' || bytes[j] == b'-') && !matches!(bytes[j - 1], b'e' | b'E'));
    match split {
        Some(j) => Ok(Complex64::new(real(&body[..j], text)?, coefficient(&body[j..], text)?)),
        None => Ok(Complex64::new(0.0, coefficient(body, text)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literals() {
        assert_eq!(parse_complex("2pi*i").unwrap(), Complex64::new(0.0, std::f64::consts::TAU));
        assert_eq!(parse_complex("-4pi*i").unwrap(), Complex64::new(0.0, -4.0 * PI));
        assert_eq!(parse_complex("pi*i").unwrap(), Complex64::new(0.0, PI));
        assert_eq!(parse_complex("0+6.3i").unwrap(), Complex64::new(0.0, 6.3));
        assert_eq!(parse_complex("1-0.5i").unwrap(), Complex64::new(1.0, -0.5));
        assert_eq!(parse_complex("1e-3+2E+1i").unwrap(), Complex64::new(1e-3, 20.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("1 + i").unwrap(), Complex64::new(1.0, 1.0));
        assert_eq!(parse_complex("2.5").unwrap(), Complex64::new(2.5, 0.0));
        assert_eq!(parse_complex("-3i").unwrap(), Complex64::new(0.0, -3.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }
}
