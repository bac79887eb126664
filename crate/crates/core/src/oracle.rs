//! Exact rational reference values for small instances.
//!
//! The mass function is obtained by enumerating all `2ⁿ` indicator outcomes
//! (not by convolution), so it is independent of the floating-point path.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest `n` accepted by [`exact_pmf`] and [`exact_chi2`].
pub const ENUMERATION_CAP: usize = 20;
/// Largest `n` accepted by [`exact_centered_coeffs`].
pub const EXPANSION_CAP: usize = 64;

/// Exact counterpart of [`crate::pmf::Pmf`].
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPmf {
    pub masses: Vec<BigRational>,
}

impl RationalPmf {
    pub fn to_f64(&self) -> Vec<f64> {
        self.masses.iter().map(to_f64).collect()
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses a decimal literal (`0.3`, `1`, `2.5e-3`) into an exact rational.
pub fn rational_from_decimal(text: &str) -> Result<BigRational> {
    let bad = || Error::BadParameter(format!("not a decimal number: `{text}`"));
    let t = text.trim();
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all.parse().map_err(|_| bad())?;
    if neg {
        numer = -numer;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    Ok(value)
}

/// The shortest decimal that round-trips to `x`, as an exact rational.
/// A probability typed as `0.3` comes back as exactly `3/10`.
pub fn rational_from_f64_decimal(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::BadParameter(format!("{x} is not finite")));
    }
    rational_from_decimal(&format!("{x}"))
}

fn check_probs(probs: &[BigRational], cap: usize) -> Result<()> {
    if probs.len() > cap {
        return Err(Error::CapExceeded { n: probs.len(), cap });
    }
    if probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let one = BigRational::one();
    for (index, p) in probs.iter().enumerate() {
        if p.is_negative() || *p > one {
            return Err(Error::EntryOutOfRange { index, value: to_f64(p) });
        }
    }
    Ok(())
}

/// `P(S_n = k)` by enumerating every subset of successes.
///
/// All `p_j = a_j / d_j` share the denominator `D = ∏ d_j`, so the
/// enumeration only multiplies integer numerators; each prefix product is
/// reused by both children of the depth-first walk.
pub fn exact_pmf(probs: &[BigRational]) -> Result<RationalPmf> {
    check_probs(probs, ENUMERATION_CAP)?;
    let n = probs.len();
    let mut success = Vec::with_capacity(n);
    let mut failure = Vec::with_capacity(n);
    let mut denom = BigUint::one();
    for p in probs {
        // non-negative and reduced, so both parts convert
        let a = p.numer().to_biguint().expect("non-negative numerator");
        let d = p.denom().to_biguint().expect("positive denominator");
        failure.push(&d - &a);
        success.push(a);
        denom *= d;
    }
    let mut counts = vec![BigUint::zero(); n + 1];
    // stack of (next index, successes so far, prefix product)
    let mut stack = vec![(0usize, 0usize, BigUint::one())];
    while let Some((j, k, prefix)) = stack.pop() {
        if prefix.is_zero() {
            continue;
        }
        if j == n {
            counts[k] += prefix;
            continue;
        }
        stack.push((j + 1, k + 1, &prefix * &success[j]));
        stack.push((j + 1, k, prefix * &failure[j]));
    }
    let denom = BigInt::from(denom);
    let masses = counts
        .into_iter()
        .map(|c| BigRational::new(BigInt::from(c), denom.clone()))
        .collect();
    Ok(RationalPmf { masses })
}

fn binomial_int(n: usize, k: usize) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

/// `p = (1/n) Σ p_j`, exactly.
pub fn exact_mean(probs: &[BigRational]) -> BigRational {
    let total = probs.iter().fold(BigRational::zero(), |acc, p| acc + p);
    total / BigRational::from_integer(BigInt::from(probs.len()))
}

/// Exact binomial masses `C(n,j) p^j q^{n-j}`.
pub fn exact_binomial(n: usize, p: &BigRational) -> Vec<BigRational> {
    let q = BigRational::one() - p;
    (0..=n)
        .map(|j| {
            BigRational::from_integer(binomial_int(n, j))
                * num_traits::pow(p.clone(), j)
                * num_traits::pow(q.clone(), n - j)
        })
        .collect()
}

fn nondegenerate_mean(probs: &[BigRational]) -> Result<BigRational> {
    let p = exact_mean(probs);
    if p.is_zero() || p.is_one() {
        return Err(Error::DegenerateInstance { value: to_f64(&p) });
    }
    Ok(p)
}

/// χ²(L(S_n), B(n, p)) in exact arithmetic.
pub fn exact_chi2(probs: &[BigRational]) -> Result<BigRational> {
    check_probs(probs, ENUMERATION_CAP)?;
    let p = nondegenerate_mean(probs)?;
    let pmf = exact_pmf(probs)?;
    let bin = exact_binomial(probs.len(), &p);
    Ok(pmf
        .masses
        .iter()
        .zip(&bin)
        .fold(BigRational::zero(), |acc, (a, b)| {
            let d = a - b;
            acc + &d * &d / b
        }))
}

/// Exact coefficients of `∏ (1 + (p_j - p) w)`.
pub fn exact_centered_coeffs(probs: &[BigRational]) -> Result<Vec<BigRational>> {
    check_probs(probs, EXPANSION_CAP)?;
    let p = exact_mean(probs);
    let mut c = vec![BigRational::one()];
    for pj in probs {
        let d = pj - &p;
        c.push(BigRational::zero());
        for k in (1..c.len()).rev() {
            let add = &c[k - 1] * &d;
            c[k] += add;
        }
    }
    Ok(c)
}

/// `Σ_j c_j² / (C(n,j) (pq)^j)`, exactly.
pub fn exact_parseval_sum(coeffs: &[BigRational], p: &BigRational) -> BigRational {
    let n = coeffs.len() - 1;
    let pq = p * (BigRational::one() - p);
    let mut pq_pow = BigRational::one();
    let mut acc = BigRational::zero();
    for (j, c) in coeffs.iter().enumerate() {
        if j > 0 {
            pq_pow *= &pq;
        }
        if !c.is_zero() {
            acc += c * c / (BigRational::from_integer(binomial_int(n, j)) * &pq_pow);
        }
    }
    acc
}

/// Both sides of `Σ_t P(S_n = t)² / b(n,p,t) = Σ_j c_j² / (C(n,j)(pq)^j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MainIdentity {
    /// `1 + χ²` from the enumerated mass function.
    pub mass_side: BigRational,
    /// Coefficient side.
    pub coefficient_side: BigRational,
}

impl MainIdentity {
    pub fn holds(&self) -> bool {
        self.mass_side == self.coefficient_side
    }
}

pub fn verify_main_identity(probs: &[BigRational]) -> Result<MainIdentity> {
    let chi2 = exact_chi2(probs)?;
    let p = exact_mean(probs);
    let coeffs = exact_centered_coeffs(probs)?;
    Ok(MainIdentity {
        mass_side: BigRational::one() + chi2,
        coefficient_side: exact_parseval_sum(&coeffs, &p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(rational_from_decimal("0.3").unwrap(), r(3, 10));
        assert_eq!(rational_from_decimal("1").unwrap(), r(1, 1));
        assert_eq!(rational_from_decimal(".125").unwrap(), r(1, 8));
        assert_eq!(rational_from_decimal("2.5e-3").unwrap(), r(1, 400));
        assert_eq!(rational_from_decimal("-0.5").unwrap(), r(-1, 2));
        assert!(rational_from_decimal("abc").is_err());
        assert!(rational_from_decimal(".").is_err());
        assert_eq!(rational_from_f64_decimal(0.3).unwrap(), r(3, 10));
        assert_eq!(rational_from_f64_decimal(1e-7).unwrap(), r(1, 10_000_000));
    }

    #[test]
    fn exact_pmf_examples() {
        assert_eq!(
            exact_pmf(&[r(3, 10), r(7, 10)]).unwrap().masses,
            vec![r(21, 100), r(58, 100), r(21, 100)]
        );
        assert_eq!(
            exact_pmf(&[r(1, 2), r(1, 2)]).unwrap().masses,
            vec![r(1, 4), r(1, 2), r(1, 4)]
        );
        assert_eq!(
            exact_pmf(&[r(0, 1), r(1, 1)]).unwrap().masses,
            vec![r(0, 1), r(1, 1), r(0, 1)]
        );
        let probs: Vec<_> = (0..21).map(|_| r(1, 2)).collect();
        assert_eq!(exact_pmf(&probs), Err(Error::CapExceeded { n: 21, cap: 20 }));
        assert!(matches!(exact_pmf(&[r(3, 2), r(1, 2)]), Err(Error::EntryOutOfRange { index: 0, .. })));
    }

    #[test]
    fn exact_pmf_sums_to_one() {
        let probs = vec![r(1, 3), r(2, 7), r(9, 10), r(1, 1), r(0, 1), r(5, 11)];
        let total = exact_pmf(&probs)
            .unwrap()
            .masses
            .into_iter()
            .fold(BigRational::zero(), |a, b| a + b);
        assert!(total.is_one());
    }

    #[test]
    fn exact_chi2_examples() {
        assert_eq!(exact_chi2(&[r(3, 10), r(7, 10)]).unwrap(), r(16, 625));
        assert_eq!(exact_chi2(&[r(2, 5), r(2, 5), r(2, 5)]).unwrap(), r(0, 1));
        assert_eq!(exact_chi2(&[r(1, 10), r(9, 10)]).unwrap(), r(256, 625));
        assert!(matches!(exact_chi2(&[r(1, 1), r(1, 1)]), Err(Error::DegenerateInstance { .. })));
    }

    #[test]
    fn exact_coefficient_examples() {
        assert_eq!(
            exact_centered_coeffs(&[r(3, 10), r(7, 10)]).unwrap(),
            vec![r(1, 1), r(0, 1), r(-1, 25)]
        );
        assert_eq!(
            exact_centered_coeffs(&[r(2, 5), r(2, 5), r(2, 5)]).unwrap(),
            vec![r(1, 1), r(0, 1), r(0, 1), r(0, 1)]
        );
        assert_eq!(
            exact_centered_coeffs(&[r(1, 5), r(1, 2), r(4, 5)]).unwrap(),
            vec![r(1, 1), r(0, 1), r(-9, 100), r(0, 1)]
        );
    }

    #[test]
    fn main_identity_is_exact() {
        let probs = vec![r(1, 10), r(3, 7), r(9, 10), r(1, 2), r(0, 1)];
        let id = verify_main_identity(&probs).unwrap();
        assert!(id.holds(), "{id:?}");
    }
}
