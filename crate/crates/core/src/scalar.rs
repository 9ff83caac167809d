//! Scalar abstraction for the closed-form probabilities.
//!
//! The formulas only need field arithmetic on small integers, so they are
//! written once over [`Scalar`] and instantiated with exact rationals for the
//! public results and with `f64`/`f32` where a fast approximation is enough.

use std::fmt::Debug;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, ToPrimitive, Zero};

/// Numeric type the closed forms can be evaluated in.
pub trait Scalar: Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive {
    fn from_count(k: u64) -> Self {
        Self::from_u64(k).expect("small integer is representable")
    }

    fn recip_of(k: u64) -> Self {
        Self::one() / Self::from_count(k)
    }
}

impl<T> Scalar for T where T: Clone + Debug + PartialOrd + Num + FromPrimitive + ToPrimitive {}

/// `C(x, y)` with the convention that it vanishes for `y < 0` or `y > x`.
pub fn binomial<T: Scalar>(x: i64, y: i64) -> T {
    if y < 0 || x < 0 || y > x {
        return T::zero();
    }
    let y = y.min(x - y);
    let mut acc = T::one();
    for i in 0..y {
        acc = acc * T::from_count((x - i) as u64) / T::from_count((i + 1) as u64);
    }
    acc
}

/// `n (n-1) ... (n-k+1)`; the empty product is 1.
pub fn falling<T: Scalar>(n: u64, k: u64) -> T {
    (0..k).fold(T::one(), |acc, i| acc * T::from_count(n - i))
}

pub fn factorial<T: Scalar>(n: u64) -> T {
    falling(n, n)
}

pub fn big_factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn big_binomial(x: u64, y: u64) -> BigUint {
    if y > x {
        return BigUint::zero();
    }
    let y = y.min(x - y);
    let mut acc = BigUint::one();
    for i in 0..y {
        acc = acc * (x - i) / (i + 1);
    }
    acc
}

pub fn ratio(num: &BigUint, den: &BigUint) -> BigRational {
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_convention() {
        assert_eq!(binomial::<f64>(5, 2), 10.0);
        assert_eq!(binomial::<f64>(5, 6), 0.0);
        assert_eq!(binomial::<f64>(5, -1), 0.0);
        assert_eq!(binomial::<f64>(0, 0), 1.0);
        assert_eq!(
            binomial::<BigRational>(30, 15),
            BigRational::from_u64(155_117_520).unwrap()
        );
        assert_eq!(big_binomial(12, 6), BigUint::from(924u32));
        assert_eq!(big_binomial(3, 4), BigUint::zero());
    }

    #[test]
    fn falling_and_factorial() {
        assert_eq!(falling::<f64>(6, 0), 1.0);
        assert_eq!(falling::<f64>(6, 2), 30.0);
        assert_eq!(factorial::<f32>(5), 120.0);
        assert_eq!(big_factorial(6), BigUint::from(720u32));
        assert_eq!(big_factorial(0), BigUint::one());
    }
}
