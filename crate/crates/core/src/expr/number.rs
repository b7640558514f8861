use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Numeric literal. Rationals are exact; decimals are IEEE doubles and are
/// never merged into rationals by the rewriter.
#[derive(Clone, Debug)]
pub enum Number {
    Rational(BigRational),
    Decimal(f64),
}

impl Number {
    pub fn int(v: i64) -> Self {
        Number::Rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        Number::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Number::Rational(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Number::Rational(q) if q.is_one())
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Number::Rational(q) => Some(q),
            Number::Decimal(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Number::Rational(q) => rational_to_f64(q),
            Number::Decimal(d) => *d,
        }
    }

    pub fn is_negative(&self) -> bool {
        match self {
            Number::Rational(q) => q.is_negative(),
            Number::Decimal(d) => d.is_sign_negative(),
        }
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Number {}

impl PartialOrd for Number {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Number {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Number::Rational(a), Number::Rational(b)) => a.cmp(b),
            (Number::Decimal(a), Number::Decimal(b)) => a.total_cmp(b),
            (Number::Rational(_), Number::Decimal(_)) => Ordering::Less,
            (Number::Decimal(_), Number::Rational(_)) => Ordering::Greater,
        }
    }
}

impl Hash for Number {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Number::Rational(q) => {
                0u8.hash(state);
                q.hash(state);
            }
            Number::Decimal(d) => {
                1u8.hash(state);
                d.to_bits().hash(state);
            }
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Rational(q) => {
                if q.is_integer() {
                    write!(f, "{}", q.numer())
                } else {
                    write!(f, "{}/{}", q.numer(), q.denom())
                }
            }
            Number::Decimal(d) => {
                let s = format!("{d}");
                if s.contains('.') || s.contains("inf") || s.contains("NaN") {
                    f.write_str(&s)
                } else {
                    write!(f, "{s}.0")
                }
            }
        }
    }
}

pub fn rational_to_f64(q: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (q.numer().to_f64(), q.denom().to_f64()) {
        if n.is_finite() && d.is_finite() && n.abs() < 9.0e15 && d.abs() < 9.0e15 {
            return n / d;
        }
    }
    // Large operands: scale down before dividing.
    let shift = q.numer().bits().max(q.denom().bits()).saturating_sub(1000) as usize;
    let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Exact `base^exp` for rational base and rational exponent when the result is
/// rational (integer exponents, or perfect powers for fractional exponents).
pub fn rational_pow(base: &BigRational, exp: &BigRational) -> Option<BigRational> {
    const MAX_EXP: i64 = 4096;
    let (p, q) = (exp.numer(), exp.denom());
    let p_small = p.to_i64()?;
    if p_small.abs() > MAX_EXP {
        return None;
    }
    let rooted = if q.is_one() {
        base.clone()
    } else {
        if base.is_negative() {
            return None;
        }
        let q_small = q.to_u32()?;
        let n = exact_root(base.numer(), q_small)?;
        let d = exact_root(base.denom(), q_small)?;
        BigRational::new(n, d)
    };
    if rooted.is_zero() && p_small < 0 {
        return None;
    }
    let mut acc = BigRational::one();
    for _ in 0..p_small.unsigned_abs() {
        acc *= &rooted;
    }
    if p_small < 0 {
        acc = acc.recip();
    }
    Some(acc)
}

fn exact_root(v: &BigInt, k: u32) -> Option<BigInt> {
    if v.is_negative() {
        return None;
    }
    let r = v.nth_root(k);
    if num_traits::pow(r.clone(), k as usize) == *v {
        Some(r)
    } else {
        None
    }
}

/// gcd of numerators over lcm of denominators, always positive.
pub fn rational_gcd(a: &BigRational, b: &BigRational) -> BigRational {
    if a.is_zero() {
        return b.abs();
    }
    if b.is_zero() {
        return a.abs();
    }
    BigRational::new(a.numer().gcd(b.numer()), a.denom().lcm(b.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn perfect_roots_are_exact() {
        assert_eq!(rational_pow(&q(4, 9), &q(1, 2)), Some(q(2, 3)));
        assert_eq!(rational_pow(&q(8, 1), &q(-2, 3)), Some(q(1, 4)));
        assert_eq!(rational_pow(&q(2, 1), &q(1, 2)), None);
        assert_eq!(rational_pow(&q(-8, 1), &q(1, 3)), None);
        assert_eq!(rational_pow(&q(0, 1), &q(-1, 1)), None);
    }

    #[test]
    fn decimal_display_keeps_point() {
        assert_eq!(Number::Decimal(2.0).to_string(), "2.0");
        assert_eq!(Number::Decimal(1e-10).to_string(), "0.0000000001");
        assert_eq!(Number::ratio(-3, 6).to_string(), "-1/2");
    }
}
