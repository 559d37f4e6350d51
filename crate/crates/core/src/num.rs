//! Exact rational helpers. Decimal output is for display only.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

/// Floor as a machine integer; saturates for absurdly large values.
pub fn floor_u64(x: &Q) -> u64 {
    x.floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

pub fn is_integer(x: &Q) -> bool {
    x.is_integer()
}

/// Parses `7/10`, `2.85`, `-3` or `4`.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Q::new(n, d));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, fracpart) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int.is_empty() && fracpart.is_empty() {
        return None;
    }
    if !int.chars().all(|c| c.is_ascii_digit()) || !fracpart.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{}{}", int, fracpart);
    let n: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let d = num_traits::pow(BigInt::from(10), fracpart.len());
    let v = Q::new(n, d);
    Some(if neg { -v } else { v })
}

/// `279/10`, or `3` for integers.
pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Decimal rendering with up to `places` digits, trailing zeros trimmed,
/// with a trailing `...` when the expansion was cut.
pub fn fmt_decimal(x: &Q, places: usize) -> String {
    let neg = x.is_negative();
    let a = x.abs();
    let int = a.floor().to_integer();
    let mut rem = (a - Q::from_integer(int.clone())).numer().clone();
    let den = x.denom().clone();
    let mut digits = String::new();
    for _ in 0..places {
        if rem.is_zero() {
            break;
        }
        rem *= 10;
        let (d, r) = rem.div_rem(&den);
        digits.push_str(&d.to_string());
        rem = r;
    }
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int.to_string());
    if !digits.is_empty() {
        s.push('.');
        s.push_str(&digits);
        if !rem.is_zero() {
            s.push_str("...");
        }
    }
    s
}

pub fn one() -> Q {
    Q::one()
}

pub fn zero() -> Q {
    Q::zero()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(parse_q("2.85"), Some(q(57, 20)));
        assert_eq!(parse_q("7/10"), Some(q(7, 10)));
        assert_eq!(parse_q("4"), Some(qi(4)));
        assert_eq!(parse_q(".5"), Some(q(1, 2)));
        assert_eq!(parse_q("1/0"), None);
        assert_eq!(parse_q("x"), None);
    }

    #[test]
    fn renders() {
        assert_eq!(fmt_q(&q(279, 10)), "279/10");
        assert_eq!(fmt_decimal(&q(279, 10), 6), "27.9");
        assert_eq!(fmt_decimal(&q(1, 3), 3), "0.333...");
        assert_eq!(fmt_decimal(&qi(4), 3), "4");
    }
}
