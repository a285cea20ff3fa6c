//! Exact rational scalars and extended reals.
//!
//! Times and traffic amounts are `Q = BigRational` throughout. Requests in
//! allocation problems and values of the universal service curve can be
//! infinite, which [`Ext`] represents explicitly instead of using a large
//! sentinel number.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use std::fmt;
use std::str::FromStr;

/// Exact rational scalar used for all times and traffic values.
pub type Q = num_rational::BigRational;

/// Shorthand for an integer-valued rational.
pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Shorthand for the rational `n/d`.
pub fn qr(n: i64, d: i64) -> Q {
    assert!(d != 0, "zero denominator");
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Extended real: `-∞ < finite < +∞`. The derived ordering is total.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    NegInf,
    Finite(Q),
    PosInf,
}

impl Ext {
    pub fn zero() -> Self {
        Ext::Finite(Q::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn as_finite(&self) -> Option<&Q> {
        match self {
            Ext::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Panics when the value is infinite.
    pub fn expect_finite(&self, what: &str) -> &Q {
        self.as_finite()
            .unwrap_or_else(|| panic!("expected finite value: {what}"))
    }

    pub fn add_q(&self, rhs: &Q) -> Ext {
        match self {
            Ext::Finite(v) => Ext::Finite(v + rhs),
            other => other.clone(),
        }
    }

    /// Multiplication by a strictly positive rational.
    pub fn scale_pos(&self, c: &Q) -> Ext {
        debug_assert!(c.is_positive());
        match self {
            Ext::Finite(v) => Ext::Finite(v * c),
            other => other.clone(),
        }
    }

    /// `min` with a finite value.
    pub fn min_q(&self, rhs: &Q) -> Q {
        match self {
            Ext::NegInf => panic!("min_q on -inf"),
            Ext::Finite(v) => v.min(rhs).clone(),
            Ext::PosInf => rhs.clone(),
        }
    }

    pub fn le_q(&self, rhs: &Q) -> bool {
        match self {
            Ext::NegInf => true,
            Ext::Finite(v) => v <= rhs,
            Ext::PosInf => false,
        }
    }
}

impl From<Q> for Ext {
    fn from(v: Q) -> Self {
        Ext::Finite(v)
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => write!(f, "-inf"),
            Ext::Finite(v) => write!(f, "{v}"),
            Ext::PosInf => write!(f, "inf"),
        }
    }
}

/// Error from [`parse_rational`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{input}`")]
pub struct ParseRationalError {
    pub input: String,
}

/// Parses `p/q`, integer, or decimal (optionally with exponent) literals
/// into an exact rational. `0.1` parses to exactly `1/10`.
pub fn parse_rational(s: &str) -> Result<Q, ParseRationalError> {
    let err = || ParseRationalError {
        input: s.to_string(),
    };
    let s = s.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = BigInt::from_str(num.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(den.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Q::new(n, d));
    }
    // Decimal with optional exponent: [sign] digits [. digits] [e exp]
    let (mantissa, exp10) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, i64::from_str(e).map_err(|_| err())?),
        None => (s, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let joined = format!("{int_part}{frac_part}");
    let n = BigInt::from_str(if joined.is_empty() { "0" } else { &joined }).map_err(|_| err())?;
    let shift = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if shift >= 0 {
        Q::from_integer(n * ten.pow(shift as u32))
    } else {
        Q::new(n, ten.pow((-shift) as u32))
    };
    Ok(value * Q::from_integer(BigInt::from(sign)))
}

/// Renders an exact rational as a decimal with the given number of
/// significant digits, without an exponent and with trailing zeros removed.
/// Rounding is half-away-from-zero.
pub fn to_decimal(v: &Q, sig_digits: u32) -> String {
    assert!(sig_digits > 0);
    if v.is_zero() {
        return "0".to_string();
    }
    let neg = v.is_negative();
    let a = v.abs();
    // exponent e with 10^e <= a < 10^(e+1)
    let mut e: i64 = 0;
    let ten = Q::from_integer(BigInt::from(10));
    let one = Q::from_integer(BigInt::from(1));
    let mut scaled = a.clone();
    while scaled >= ten {
        scaled /= &ten;
        e += 1;
    }
    while scaled < one {
        scaled *= &ten;
        e -= 1;
    }
    // m = round(a * 10^(sig-1-e)), half away from zero
    let shift = sig_digits as i64 - 1 - e;
    let shifted = if shift >= 0 {
        a * Q::from_integer(BigInt::from(10).pow(shift as u32))
    } else {
        a / Q::from_integer(BigInt::from(10).pow((-shift) as u32))
    };
    let floor = shifted.floor().to_integer();
    let frac = &shifted - Q::from_integer(floor.clone());
    let half = Q::new(BigInt::from(1), BigInt::from(2));
    let mut m = if frac >= half { floor + 1 } else { floor };
    // rounding can carry over (999.99 -> 1000)
    let cap = BigInt::from(10).pow(sig_digits);
    if m >= cap {
        m /= BigInt::from(10);
        e += 1;
    }
    let digits = m.to_string();
    debug_assert_eq!(digits.len(), sig_digits as usize);
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if e >= sig_digits as i64 - 1 {
        // integer with possible trailing zeros
        out.push_str(&digits);
        for _ in 0..(e - (sig_digits as i64 - 1)) {
            out.push('0');
        }
    } else if e >= 0 {
        let point = (e + 1) as usize;
        out.push_str(&digits[..point]);
        let tail = digits[point..].trim_end_matches('0');
        if !tail.is_empty() {
            out.push('.');
            out.push_str(tail);
        }
    } else {
        let zeros = (-e - 1) as usize;
        let tail = digits.trim_end_matches('0');
        out.push_str("0.");
        for _ in 0..zeros {
            out.push('0');
        }
        out.push_str(tail);
    }
    out
}

/// Lossless rendering as `p/q` (or `p` when integral); `parse_rational`
/// accepts the output.
pub fn to_exact_string(v: &Q) -> String {
    if v.denom() == &BigInt::from(1) {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Nearest f64, for approximate oracles and diagnostics only.
pub fn to_f64(v: &Q) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}
