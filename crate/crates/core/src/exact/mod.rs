//! Closed-form probabilities for the first 123 occurrence.
//!
//! Every formula is generic over [`Scalar`]; instantiate with
//! [`ExactRational`](crate::ExactRational) for exact results. Arguments are
//! validated identically for every scalar type.

mod table;

pub use table::{
    decimal, distribution_table, distribution_table_with, leading_one_table, median, median_with,
    DistributionTable, Median, Provenance, Residual, TableEntry, TableRow, TruncationBox,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{binomial, factorial, falling, Scalar};

/// Size of the permutation: finite `n >= 3`, or a bijection of the positive
/// integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SizeSpec {
    Finite(usize),
    Infinite,
}

impl SizeSpec {
    pub fn finite(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("size n = {n} must be >= 3")));
        }
        Ok(SizeSpec::Finite(n))
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            SizeSpec::Finite(n) => Some(*n),
            SizeSpec::Infinite => None,
        }
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeSpec::Finite(n) => write!(f, "{n}"),
            SizeSpec::Infinite => f.write_str("infinite"),
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

/// `P(X = {1,2,r}) = 1/(r-1) - 1/r`, the same for every `n >= r`.
pub fn p_12r<T: Scalar>(r: u64) -> Result<T> {
    if r < 3 {
        return Err(invalid(format!("p_12r needs r >= 3, got {r}")));
    }
    Ok(T::recip_of(r - 1) - T::recip_of(r))
}

/// `P(X = {1,s,r})` when `n` is infinite: `1/((s-1)(r-1)r)`.
pub fn p_1sr_infinite<T: Scalar>(s: u64, r: u64) -> Result<T> {
    if s < 2 || r <= s {
        return Err(invalid(format!(
            "p_1sr_infinite needs 2 <= s < r, got s={s}, r={r}"
        )));
    }
    Ok(T::recip_of(s - 1) * (T::recip_of(r - 1) - T::recip_of(r)))
}

/// `P(X = {1,s,r})` for finite `n`.
///
/// Summed over `k`, the number of positions among `2..s-1` whose value
/// exceeds `π(1)`; those must hold `n, n-1, ..., n-k+1` in order.
pub fn p_1sr_finite<T: Scalar>(n: u64, s: u64, r: u64) -> Result<T> {
    if s < 2 || r <= s || r > n {
        return Err(invalid(format!(
            "p_1sr_finite needs 2 <= s < r <= n, got n={n}, s={s}, r={r}"
        )));
    }
    let (n_i, s_i, r_i) = (n as i64, s as i64, r as i64);
    let mut total = T::zero();
    for k in 0..=s_i - 2 {
        let ways = binomial::<T>(s_i - 2, k) * binomial::<T>(r_i - k - 2, s_i - k - 1);
        if ways.is_zero() {
            continue;
        }
        // (r-k)! / (r-s-1)! = (r-s) (r-s+1) ... (r-k)
        let tail_block = falling::<T>((r_i - k) as u64, (s_i - k + 1) as u64);
        let term = ways * factorial::<T>((s_i - k - 2) as u64)
            / (falling::<T>(n_i as u64, k as u64) * tail_block);
        total = total + term;
    }
    Ok(total)
}

/// Two-term closed form for `P(X = {1,3,r})`, finite `n`.
pub fn p_13r_finite<T: Scalar>(n: u64, r: u64) -> Result<T> {
    if r < 4 || r > n {
        return Err(invalid(format!(
            "p_13r_finite needs 4 <= r <= n, got n={n}, r={r}"
        )));
    }
    let half = T::recip_of(2);
    let first = half * (T::recip_of(r - 1) - T::recip_of(r));
    let second = T::recip_of(n) * (T::recip_of(r - 2) - T::recip_of(r - 1));
    Ok(first + second)
}

/// `P(X >= {2,3,4})` including `X = never`: condition on `π(1) = j`; the
/// values above `j` must then appear in decreasing order, giving
/// `(1/n) Σ_{m=0}^{n-1} 1/m!`.
pub fn p_x_ge_234<T: Scalar>(n: u64) -> Result<T> {
    if n < 3 {
        return Err(invalid(format!("p_x_ge_234 needs n >= 3, got {n}")));
    }
    let mut term = T::one();
    let mut sum = T::one();
    for m in 1..n {
        term = term / T::from_count(m);
        sum = sum + term.clone();
    }
    Ok(sum / T::from_count(n))
}

/// Probability that a uniform permutation of `[n]` avoids 123:
/// `C(2n,n)/(n+1)!`.
pub fn avoid_probability<T: Scalar>(n: u64) -> Result<T> {
    if n < 1 {
        return Err(invalid("avoid_probability needs n >= 1".into()));
    }
    Ok(binomial::<T>(2 * n as i64, n as i64) / factorial::<T>(n + 1))
}

/// Probability that the shortest prefix containing 123 has length exactly
/// `k`; valid for every size `n >= k`, including infinite.
pub fn prefix_first_k_probability<T: Scalar>(k: u64) -> Result<T> {
    if k < 3 {
        return Err(invalid(format!("prefix length k must be >= 3, got {k}")));
    }
    let free_before = binomial::<T>(2 * (k as i64 - 1), k as i64 - 1) / factorial::<T>(k);
    let free_at = binomial::<T>(2 * k as i64, k as i64) / factorial::<T>(k + 1);
    Ok(free_before - free_at)
}

/// Infinite-case mass of `{1,s,r}` outside the box `s <= s_max, r <= r_max`.
///
/// Within each row `s <= s_max` the tail telescopes to `1/((s-1) r_max)`;
/// the rows `s > s_max` carry `Σ 1/((s-1)s) = 1/s_max`.
pub fn infinite_tail_mass<T: Scalar>(s_max: u64, r_max: u64) -> Result<T> {
    if s_max < 2 || r_max <= s_max {
        return Err(invalid(format!(
            "truncation box needs 2 <= s_max < r_max, got s_max={s_max}, r_max={r_max}"
        )));
    }
    let harmonic = (1..s_max).fold(T::zero(), |acc, j| acc + T::recip_of(j));
    Ok(harmonic / T::from_count(r_max) + T::recip_of(s_max))
}

/// Total finite-`n` mass on triples with `a = 1`.
pub fn leading_one_mass<T: Scalar>(n: u64) -> Result<T> {
    if n < 3 {
        return Err(invalid(format!("n = {n} must be >= 3")));
    }
    let mut total = T::zero();
    for s in 2..n {
        for r in s + 1..=n {
            total = total + p_1sr_finite::<T>(n, s, r)?;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ExactRational;
    use num_bigint::BigInt;
    use num_traits::{One, ToPrimitive};

    fn q(num: i64, den: i64) -> ExactRational {
        ExactRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn p_12r_values() {
        assert_eq!(p_12r::<ExactRational>(3).unwrap(), q(120, 720));
        assert_eq!(p_12r::<ExactRational>(4).unwrap(), q(60, 720));
        assert_eq!(p_12r::<ExactRational>(6).unwrap(), q(24, 720));
        assert!(p_12r::<ExactRational>(2).is_err());
    }

    #[test]
    fn p_1sr_infinite_values() {
        assert_eq!(p_1sr_infinite::<ExactRational>(2, 3).unwrap(), q(1, 6));
        assert_eq!(p_1sr_infinite::<ExactRational>(3, 4).unwrap(), q(1, 24));
        assert_eq!(p_1sr_infinite::<ExactRational>(4, 6).unwrap(), q(1, 90));
        assert!(p_1sr_infinite::<ExactRational>(1, 3).is_err());
        assert!(p_1sr_infinite::<ExactRational>(4, 4).is_err());
    }

    #[test]
    fn p_1sr_finite_values() {
        assert_eq!(p_1sr_finite::<ExactRational>(6, 3, 4).unwrap(), q(50, 720));
        assert_eq!(p_1sr_finite::<ExactRational>(6, 3, 5).unwrap(), q(28, 720));
        assert_eq!(p_1sr_finite::<ExactRational>(6, 2, 4).unwrap(), q(60, 720));
        assert_eq!(p_1sr_finite::<ExactRational>(6, 4, 6).unwrap(), q(16, 720));
        assert_eq!(p_1sr_finite::<ExactRational>(6, 5, 6).unwrap(), q(16, 720));
        assert!(p_1sr_finite::<ExactRational>(6, 3, 7).is_err());
        assert!(p_1sr_finite::<ExactRational>(6, 1, 4).is_err());
        assert!(p_1sr_finite::<ExactRational>(6, 4, 4).is_err());
    }

    #[test]
    fn p_13r_values_and_identity() {
        assert_eq!(p_13r_finite::<ExactRational>(6, 4).unwrap(), q(50, 720));
        assert_eq!(p_13r_finite::<ExactRational>(6, 6).unwrap(), q(18, 720));
        assert!(p_13r_finite::<ExactRational>(6, 3).is_err());
        assert!(p_13r_finite::<ExactRational>(6, 7).is_err());
        for n in 4..=20 {
            for r in 4..=n {
                assert_eq!(
                    p_13r_finite::<ExactRational>(n, r).unwrap(),
                    p_1sr_finite::<ExactRational>(n, 3, r).unwrap()
                );
            }
        }
    }

    #[test]
    fn reduction_to_p_12r() {
        for n in 3..=20 {
            for r in 3..=n {
                assert_eq!(
                    p_1sr_finite::<ExactRational>(n, 2, r).unwrap(),
                    p_12r::<ExactRational>(r).unwrap()
                );
            }
        }
    }

    #[test]
    fn telescoping_sums() {
        for n in 3..=30u64 {
            let s12: ExactRational = (3..=n).map(|r| p_12r::<ExactRational>(r).unwrap()).sum();
            assert_eq!(s12, q(1, 2) - q(1, n as i64));
        }
        for n in 4..=30u64 {
            let s13: ExactRational = (4..=n)
                .map(|r| p_1sr_finite::<ExactRational>(n, 3, r).unwrap())
                .sum();
            assert_eq!(s13, q(1, 6) - q(1, (n * (n - 1)) as i64));
        }
    }

    #[test]
    fn ge_234_values() {
        assert_eq!(p_x_ge_234::<ExactRational>(6).unwrap(), q(326, 720));
        assert_eq!(p_x_ge_234::<ExactRational>(3).unwrap(), q(5, 6));
        assert!(p_x_ge_234::<ExactRational>(2).is_err());
        let scaled = p_x_ge_234::<ExactRational>(1000).unwrap() * q(1000, 1);
        assert!((scaled.to_f64().unwrap() - std::f64::consts::E).abs() < 1e-3);
        let approx = 1000.0 * p_x_ge_234::<f64>(1000).unwrap();
        assert!((approx - std::f64::consts::E).abs() < 1e-3);
    }

    #[test]
    fn ge_234_complements_leading_one_mass() {
        for n in 3..=30u64 {
            assert_eq!(
                p_x_ge_234::<ExactRational>(n).unwrap(),
                ExactRational::one() - leading_one_mass::<ExactRational>(n).unwrap(),
                "n = {n}"
            );
        }
    }

    #[test]
    fn avoid_values() {
        assert_eq!(avoid_probability::<ExactRational>(6).unwrap(), q(132, 720));
        assert_eq!(avoid_probability::<ExactRational>(1).unwrap(), q(1, 1));
        assert_eq!(avoid_probability::<ExactRational>(3).unwrap(), q(5, 6));
        assert!(avoid_probability::<ExactRational>(0).is_err());
    }

    #[test]
    fn prefix_values_and_law() {
        assert_eq!(
            prefix_first_k_probability::<ExactRational>(3).unwrap(),
            q(1, 6)
        );
        assert_eq!(
            prefix_first_k_probability::<ExactRational>(4).unwrap(),
            q(1, 4)
        );
        assert_eq!(
            prefix_first_k_probability::<ExactRational>(5).unwrap(),
            q(7, 30)
        );
        assert!(prefix_first_k_probability::<ExactRational>(2).is_err());
        for big_k in 3..=25u64 {
            let total: ExactRational = (3..=big_k)
                .map(|k| prefix_first_k_probability::<ExactRational>(k).unwrap())
                .sum();
            assert_eq!(
                total,
                ExactRational::one() - avoid_probability::<ExactRational>(big_k).unwrap()
            );
        }
    }

    #[test]
    fn tail_mass_values() {
        // s_max = 2, r_max = 3: row s=2 beyond r=3 is 1/3, rows s>=3 carry 1/2.
        assert_eq!(
            infinite_tail_mass::<ExactRational>(2, 3).unwrap(),
            q(1, 3) + q(1, 2)
        );
        assert!(infinite_tail_mass::<ExactRational>(1, 3).is_err());
        assert!(infinite_tail_mass::<ExactRational>(5, 5).is_err());
        for (s_max, r_max) in [(2u64, 3u64), (3, 4), (5, 10), (7, 8), (12, 40)] {
            let mut total = infinite_tail_mass::<ExactRational>(s_max, r_max).unwrap();
            for s in 2..=s_max {
                for r in s + 1..=r_max {
                    total += p_1sr_infinite::<ExactRational>(s, r).unwrap();
                }
            }
            assert!(total.is_one(), "box ({s_max},{r_max})");
        }
    }

    #[test]
    fn finite_converges_to_infinite() {
        // The k >= 1 summands each carry 1/n(n-1)...; the gap shrinks like 1/n.
        let mut worst = 0.0f64;
        for s in 2..=7u64 {
            for r in s + 1..=8 {
                let inf = p_1sr_infinite::<f64>(s, r).unwrap();
                for n in [8u64, 16, 100, 1000, 10_000] {
                    let fin = p_1sr_finite::<f64>(n, s, r).unwrap();
                    assert!(fin >= inf - 1e-15);
                    worst = worst.max((fin - inf) * n as f64);
                }
            }
        }
        // Largest at (s, r) = (3, 4), where the gap is exactly (1/2 - 1/3)/n.
        assert!(worst <= 1.0 / 6.0 + 1e-9, "n * gap = {worst}");
    }

    #[test]
    fn float_and_exact_agree() {
        for n in 3..=12u64 {
            for s in 2..n {
                for r in s + 1..=n {
                    let exact = p_1sr_finite::<ExactRational>(n, s, r)
                        .unwrap()
                        .to_f64()
                        .unwrap();
                    let approx = p_1sr_finite::<f64>(n, s, r).unwrap();
                    assert!((exact - approx).abs() < 1e-14);
                    let single = p_1sr_finite::<f32>(n, s, r).unwrap() as f64;
                    assert!((exact - single).abs() < 1e-6);
                }
            }
        }
    }
}
