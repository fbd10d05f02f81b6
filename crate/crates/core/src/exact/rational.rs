//! Exact rational arithmetic on arbitrary-precision integers.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub use num_rational::BigRational as Rational;

pub fn rat(num: i128, den: i128) -> Rational {
    assert!(den != 0, "zero denominator");
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

pub fn is_zero(q: &Rational) -> bool {
    q.is_zero()
}

pub fn pow(q: &Rational, k: u32) -> Rational {
    let mut out = int(1);
    for _ in 0..k {
        out *= q;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_form() {
        let q = rat(6, -16);
        assert_eq!(q.numer(), &BigInt::from(-3));
        assert_eq!(q.denom(), &BigInt::from(8));
        assert_eq!(to_f64(&q), -0.375);
        assert_eq!(pow(&rat(1, 2), 3), rat(1, 8));
        assert_eq!(q.to_string(), "-3/8");
    }
}
