//! Krawtchouk–Parseval machinery.
//!
//! For a polynomial `F(z) = Σ a_k z^k` of degree `<= n` and `0 < p < 1`,
//!
//! ```text
//! Σ_k a_k² / (C(n,k) p^k q^{n-k})  =  Σ_j c_j² / (C(n,j) (pq)^j)
//! ```
//!
//! where `c_j` are the coefficients of `(1 - pw)^n F((1 + qw)/(1 - pw))`.
//! The same quantity also equals `(n+1) ∫_0^∞ J_n(F, p; √(u/pq)) (1+u)^{-n-2} du`
//! with `J_n` the mean of `|(1 - pw)^n F(..)|²` over the circle `|w| = r`.
//!
//! Applied to the Poisson-binomial generating function the transformed
//! polynomial collapses to `∏ (1 + (p_j - p) w)`, which gives two χ² routes
//! independent of the direct mass-ratio sum:
//!
//! * [`chi2_parseval`]: a sum of non-negative coefficient terms;
//! * [`chi2_integral`]: the integral form, evaluated by quadratures that are
//!   exact for the polynomial integrands involved.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instances::{deviations, mean_p, InstanceSpec};
use crate::numeric::{compensated_sum, ln_choose, GaussLegendre, NeumaierSum};

/// Default ceiling on `n` for [`chi2_integral`] (cost grows like `n³`).
pub const DEFAULT_QUAD_CAP: usize = 512;

/// Largest argument for which `exp` stays finite.
const LN_MAX: f64 = 709.782712893384;

/// Coefficients `c_0..c_n` of `∏_j (1 + (p_j - p) w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredCoefficients {
    pub coeffs: Vec<f64>,
    pub p: f64,
    pub q: f64,
    pub n: usize,
}

/// Coefficients of `(1 - pw)^n F((1 + qw)/(1 - pw))` for an arbitrary `F`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCoefficients {
    pub coeffs: Vec<f64>,
    pub origin: String,
}

/// Orders deviations so that running sums stay near zero; this keeps the
/// intermediate products of the expansion from growing and then cancelling.
fn balanced_order(dev: &[f64]) -> Vec<f64> {
    let mut pos: Vec<f64> = dev.iter().copied().filter(|&d| d > 0.0).collect();
    let mut neg: Vec<f64> = dev.iter().copied().filter(|&d| d < 0.0).collect();
    // largest magnitude last, so pop() yields it first
    pos.sort_by(|a, b| a.total_cmp(b));
    neg.sort_by(|a, b| b.total_cmp(a));
    let mut out = Vec::with_capacity(pos.len() + neg.len());
    let mut running = 0.0;
    loop {
        let next = if running > 0.0 {
            neg.pop().or_else(|| pos.pop())
        } else {
            pos.pop().or_else(|| neg.pop())
        };
        match next {
            Some(d) => {
                running += d;
                out.push(d);
            }
            None => break,
        }
    }
    out
}

/// Expands `∏_j (1 + (p_j - p) w)`.
pub fn centered_coefficients(inst: &InstanceSpec) -> CenteredCoefficients {
    let n = inst.n();
    let p = mean_p(inst);
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = 1.0;
    let mut degree = 0;
    for d in balanced_order(&deviations(inst)) {
        degree += 1;
        for k in (1..=degree).rev() {
            coeffs[k] = d.mul_add(coeffs[k - 1], coeffs[k]);
        }
    }
    CenteredCoefficients {
        coeffs,
        p,
        q: 1.0 - p,
        n,
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("p = {p} not in (0, 1)")))
    }
}

fn check_len(a: &[f64], n: usize) -> Result<()> {
    if a.len() != n + 1 {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: n + 1,
        });
    }
    Ok(())
}

/// Multiplies `poly` in place by `(1 + s w)`, growing its degree by one.
fn mul_linear(poly: &mut Vec<f64>, s: f64) {
    poly.push(0.0);
    for k in (1..poly.len()).rev() {
        poly[k] = s.mul_add(poly[k - 1], poly[k]);
    }
}

/// `(1 - pw)^n F((1 + qw)/(1 - pw))` expanded as the homogeneous sum
/// `Σ_k a_k (1 + qw)^k (1 - pw)^{n-k}`, accumulated Horner-style in `k`.
/// The rational map itself is never evaluated.
pub fn mobius_transform_coeffs(a: &[f64], n: usize, p: f64) -> Result<TransformedCoefficients> {
    check_p(p)?;
    check_len(a, n)?;
    let q = 1.0 - p;
    let mut acc = vec![a[n]];
    let mut y_pow = vec![1.0];
    for k in (0..n).rev() {
        mul_linear(&mut acc, q);
        mul_linear(&mut y_pow, -p);
        for (c, y) in acc.iter_mut().zip(&y_pow) {
            *c = a[k].mul_add(*y, *c);
        }
    }
    Ok(TransformedCoefficients {
        coeffs: acc,
        origin: format!("(1-pw)^n F((1+qw)/(1-pw)), n={n}, p={p}"),
    })
}

/// `Σ_k a_k² / (C(n,k) p^k q^{n-k})`, each term formed in log magnitude.
pub fn weighted_coeff_sum(a: &[f64], n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    check_len(a, n)?;
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut acc = NeumaierSum::new();
    for (k, &ak) in a.iter().enumerate() {
        if ak == 0.0 {
            continue;
        }
        let log_term = 2.0 * ak.abs().ln() - ln_choose(n, k) - k as f64 * lp - (n - k) as f64 * lq;
        if log_term > LN_MAX {
            return Err(Error::Overflow { index: k, log_value: log_term });
        }
        acc.add(log_term.exp());
    }
    Ok(acc.value())
}

/// `Σ_j c_j² / (C(n,j) (pq)^j)` over all `j`, the right side of the
/// discrete Parseval identity.
pub fn transformed_weighted_sum(c: &[f64], n: usize, p: f64) -> Result<f64> {
    check_p(p)?;
    check_len(c, n)?;
    let lpq = (p * (1.0 - p)).ln();
    let mut acc = NeumaierSum::new();
    for (j, &cj) in c.iter().enumerate() {
        if cj == 0.0 {
            continue;
        }
        let log_term = 2.0 * cj.abs().ln() - ln_choose(n, j) - j as f64 * lpq;
        if log_term > LN_MAX {
            return Err(Error::Overflow { index: j, log_value: log_term });
        }
        acc.add(log_term.exp());
    }
    Ok(acc.value())
}

/// χ² between `L(S_n)` and `B(n, p)` as `Σ_{j >= 2} c_j² / (C(n,j) (pq)^j)`.
///
/// Every term is non-negative. Terms are visited in ascending `j` with a
/// running `ln C(n, j)`; once past `n/2`, three consecutive terms below
/// `1e-18` of the running sum end the scan.
pub fn chi2_parseval(inst: &InstanceSpec) -> f64 {
    let cc = centered_coefficients(inst);
    chi2_from_coefficients(&cc)
}

pub(crate) fn chi2_from_coefficients(cc: &CenteredCoefficients) -> f64 {
    let n = cc.n;
    let lpq = (cc.p * cc.q).ln();
    let mut ln_binom = (n as f64).ln();
    let mut acc = NeumaierSum::new();
    let mut quiet = 0;
    for j in 2..=n {
        ln_binom += ((n - j + 1) as f64).ln() - (j as f64).ln();
        let cj = cc.coeffs[j];
        let term = if cj == 0.0 {
            0.0
        } else {
            (2.0 * cj.abs().ln() - ln_binom - j as f64 * lpq).exp()
        };
        acc.add(term);
        if 2 * j > n && term < 1e-18 * acc.value() {
            quiet += 1;
            if quiet == 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    acc.value()
}

/// Number of Gauss–Legendre nodes used by the outer integral for degree `n`.
fn outer_nodes(n: usize) -> usize {
    (n + 2).div_ceil(2)
}

/// `(n+1) ∫_0^∞ u^k (1+u)^{-n-2} du` through the substitution `u = y/(1-y)`
/// and the same Gauss–Legendre rule as [`chi2_integral`]. Equals `1/C(n,k)`.
pub fn binomial_moment_integral(n: usize, k: usize) -> f64 {
    assert!(k <= n, "k = {k} must not exceed n = {n}");
    let rule = GaussLegendre::new(outer_nodes(n));
    let (ki, rest) = (k as i32, (n - k) as i32);
    (n as f64 + 1.0) * rule.integrate(|y| y.powi(ki) * (1.0 - y).powi(rest))
}

/// χ² from the integral form of the Krawtchouk–Parseval identity with
/// `g(z) = f(z) - (q + pz)^n`.
///
/// After `u = y/(1-y)` the outer integrand is a polynomial of degree `<= n`
/// in `y`, so `⌈(n+2)/2⌉` Gauss–Legendre nodes are exact. The inner circle
/// average of `|G(re^{it})|²` is a trigonometric polynomial of degree `n`,
/// so the `2n + 2`-point periodic trapezoid rule is exact too. `G` is formed
/// factor by factor as `(1 - pw)(q_j + p_j z)` with `z = (1+qw)/(1-pw)`
/// multiplied through, so the pole at `w = 1/p` never appears; each factor is
/// pre-scaled by `√(1-y)` to absorb the `(1+u)^{-n}` weight.
pub fn chi2_integral(inst: &InstanceSpec, cap: usize) -> Result<f64> {
    let n = inst.n();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let p = mean_p(inst);
    let q = 1.0 - p;
    let pq = p * q;
    let rule = GaussLegendre::new(outer_nodes(n));
    let n_t = 2 * n + 2;
    let circle: Vec<Complex64> = (0..n_t)
        .map(|m| Complex64::from_polar(1.0, std::f64::consts::TAU * m as f64 / n_t as f64))
        .collect();
    let probs = inst.probs();

    let values: Vec<f64> = rule
        .nodes()
        .par_iter()
        .zip(rule.weights().par_iter())
        .map(|(&y, &wt)| {
            let s = (1.0 - y).sqrt();
            let rho = (y / pq).sqrt();
            let inner = compensated_sum(circle.iter().map(|&e| {
                let w = e * rho;
                // s (1 - p w) and s (1 + q w) after scaling w by s
                let lo = Complex64::new(s, 0.0) - w * p;
                let hi = Complex64::new(s, 0.0) + w * q;
                let mut prod = Complex64::new(1.0, 0.0);
                for &pj in probs {
                    prod *= lo * (1.0 - pj) + hi * pj;
                }
                let reference = (lo * q + hi * p).powu(n as u32);
                (prod - reference).norm_sqr()
            })) / n_t as f64;
            wt * inner
        })
        .collect();
    Ok((n as f64 + 1.0) * compensated_sum(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{summarize, validate};
    use crate::numeric::choose;
    use crate::pmf::{binomial_pmf, poisson_binomial_pmf};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn inst(p: &[f64]) -> InstanceSpec {
        validate(p).unwrap()
    }

    #[test]
    fn centered_coefficient_examples() {
        let c = centered_coefficients(&inst(&[0.3, 0.7]));
        assert_eq!(c.coeffs[0], 1.0);
        assert_abs_diff_eq!(c.coeffs[1], 0.0, epsilon = 1e-16);
        assert_abs_diff_eq!(c.coeffs[2], -0.04, epsilon = 1e-16);

        let c = centered_coefficients(&inst(&[0.4, 0.4, 0.4]));
        assert_eq!(c.coeffs, vec![1.0, 0.0, 0.0, 0.0]);

        let c = centered_coefficients(&inst(&[0.2, 0.5, 0.8]));
        let want = [1.0, 0.0, -0.09, 0.0];
        for (got, want) in c.coeffs.iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-16);
        }
    }

    #[test]
    fn centered_coefficient_invariants() {
        let i = crate::instances::generate(60, 0.05, 0.95, 3).unwrap();
        let c = centered_coefficients(&i);
        let s = summarize(&i).unwrap();
        assert_eq!(c.coeffs[0], 1.0);
        assert!(c.coeffs[1].abs() <= 1e-12 * 60.0);
        assert_relative_eq!(c.coeffs[2], -0.5 * s.npq * s.delta2, max_relative = 1e-10);
    }

    #[test]
    fn mobius_examples() {
        let (n, p) = (6, 0.3);
        let b = binomial_pmf(n, p).unwrap();
        let t = mobius_transform_coeffs(b.masses(), n, p).unwrap();
        assert_abs_diff_eq!(t.coeffs[0], 1.0, epsilon = 1e-14);
        for &c in &t.coeffs[1..] {
            assert_abs_diff_eq!(c, 0.0, epsilon = 1e-14);
        }

        let pmf = poisson_binomial_pmf(&inst(&[0.3, 0.7]));
        let t = mobius_transform_coeffs(pmf.masses(), 2, 0.5).unwrap();
        for (got, want) in t.coeffs.iter().zip([1.0, 0.0, -0.04]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }

        // F ≡ 1 gives (1 - pw)^n
        let mut a = vec![0.0; 5];
        a[0] = 1.0;
        let t = mobius_transform_coeffs(&a, 4, 0.25).unwrap();
        for (j, got) in t.coeffs.iter().enumerate() {
            let want = choose(4, j) * (-0.25f64).powi(j as i32);
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }

        assert!(matches!(mobius_transform_coeffs(&a, 4, 1.0), Err(Error::BadParameter(_))));
        assert!(matches!(mobius_transform_coeffs(&a, 3, 0.5), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn weighted_sum_examples() {
        let b = binomial_pmf(9, 0.35).unwrap();
        assert_relative_eq!(weighted_coeff_sum(b.masses(), 9, 0.35).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(weighted_coeff_sum(&[1.0, 0.0, 0.0], 2, 0.5).unwrap(), 4.0, max_relative = 1e-14);
        let pmf = poisson_binomial_pmf(&inst(&[0.3, 0.7]));
        assert_relative_eq!(weighted_coeff_sum(pmf.masses(), 2, 0.5).unwrap(), 1.0256, max_relative = 1e-14);
        assert!(matches!(
            weighted_coeff_sum(&[1e300, 0.0, 0.0], 2, 0.5),
            Err(Error::Overflow { index: 0, .. })
        ));
    }

    #[test]
    fn chi2_parseval_examples() {
        assert_relative_eq!(chi2_parseval(&inst(&[0.3, 0.7])), 0.0256, max_relative = 1e-14);
        assert_eq!(chi2_parseval(&inst(&[0.4, 0.4, 0.4])), 0.0);
        assert_relative_eq!(chi2_parseval(&inst(&[0.2, 0.5, 0.8])), 0.0432, max_relative = 1e-14);
    }

    #[test]
    fn chi2_integral_examples() {
        let got = chi2_integral(&inst(&[0.3, 0.7]), DEFAULT_QUAD_CAP).unwrap();
        assert_abs_diff_eq!(got, 0.0256, epsilon = 1e-12);
        assert_abs_diff_eq!(chi2_integral(&inst(&[0.4, 0.4, 0.4]), DEFAULT_QUAD_CAP).unwrap(), 0.0, epsilon = 1e-15);
        let got = chi2_integral(&inst(&[0.2, 0.5, 0.8]), DEFAULT_QUAD_CAP).unwrap();
        assert_relative_eq!(got, 0.0432, max_relative = 1e-11);
        assert_eq!(
            chi2_integral(&inst(&[0.2, 0.5, 0.8]), 2),
            Err(Error::CapExceeded { n: 3, cap: 2 })
        );
    }

    #[test]
    fn binomial_moment_integral_matches_inverse_binomial() {
        for n in [0usize, 1, 5, 20] {
            for k in 0..=n {
                assert_relative_eq!(binomial_moment_integral(n, k), 1.0 / choose(n, k), max_relative = 1e-13);
            }
        }
    }
}
