//! Exact rational helpers: literal parsing and canonical `p/q` formatting.
//!
//! Literals may be integers (`12`), decimals (`0.125`, read as the exact
//! fraction `1/8`) or fractions (`3/40`). A leading sign is accepted; the
//! instance layer is what rejects non-positive values.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Zero};

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError {
    pub literal: String,
    pub reason: &'static str,
}

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid rational literal {:?}: {}",
            self.literal, self.reason
        )
    }
}

impl std::error::Error for ParseRationalError {}

pub fn parse_rational(literal: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        literal: literal.to_string(),
        reason,
    };
    let s = literal.trim();
    if s.is_empty() {
        return Err(err("empty literal"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_integer(num.trim()).ok_or_else(|| err("numerator is not an integer"))?;
        let den = parse_integer(den.trim()).ok_or_else(|| err("denominator is not an integer"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    let (negative, body) = match s.as_bytes()[0] {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    let all_digits = |t: &str| t.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return Err(err("unexpected character"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mantissa: BigInt = digits.parse().map_err(|_| err("no digits"))?;
    let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
    let value = Rational::new(mantissa, scale);
    Ok(if negative { -value } else { value })
}

fn parse_integer(s: &str) -> Option<BigInt> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical `p/q` rendering, always with an explicit denominator.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(parse_rational("12").unwrap(), int(12));
        assert_eq!(parse_rational(" 3/40 ").unwrap(), ratio(3, 40));
        assert_eq!(parse_rational("0.125").unwrap(), ratio(1, 8));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-2.5").unwrap(), ratio(-5, 2));
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
    }

    #[test]
    fn rejects_malformed_literals() {
        for bad in ["", "1/0", "a", "1.2.3", "1/x", "--1", "1e3", "."] {
            assert!(parse_rational(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn formats_with_denominator() {
        assert_eq!(format_rational(&int(1539)), "1539/1");
        assert_eq!(format_rational(&ratio(1539, 1350)), "57/50");
    }

    #[test]
    fn pow_of_fraction() {
        assert_eq!(pow(&ratio(19, 10), 2), ratio(361, 100));
        assert_eq!(pow(&ratio(7, 3), 0), int(1));
    }
}
