//! Closed-form bounds on χ², total variation, KL and CDF gaps between the
//! Poisson-binomial law and the mean-matched binomial, and an audit that
//! sets each against the exact quantity it bounds.

use std::f64::consts::E;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::distances::{cdf_difference, cdf_tail_min, distance_report};
use crate::error::{Error, Result};
use crate::instances::{summarize, InstanceSpec, MomentSummary};
use crate::numeric::GaussLegendre;
use crate::parseval::chi2_parseval;
use crate::pmf::{binomial_pmf, poisson_binomial_pmf};

/// A check holds when its slack is at least `-HOLD_TOL`.
pub const HOLD_TOL: f64 = 1e-12;

/// Relative agreement required between the Parseval and direct χ² routes
/// inside [`audit`]; below [`CROSS_CHECK_ABS`] the absolute gap is used.
pub const CROSS_CHECK_REL: f64 = 1e-8;
pub const CROSS_CHECK_ABS: f64 = 1e-12;

/// `c₁ = √e - 1`.
pub fn c1() -> f64 {
    E.sqrt() - 1.0
}

/// `c₂ = ½ ∫_0^1 e^{t²/2} (1 - t²) dt`, by a 32-node Gauss–Legendre rule.
pub fn c2() -> f64 {
    static C2: OnceLock<f64> = OnceLock::new();
    *C2.get_or_init(|| {
        0.5 * GaussLegendre::new(32).integrate(|t| (0.5 * t * t).exp() * (1.0 - t * t))
    })
}

/// `a₁ = √3 c₁ e^{1/2}`.
pub fn a1() -> f64 {
    3f64.sqrt() * c1() * E.sqrt()
}

/// `a₂ = 2√3 c₂ e^{1/2}`.
pub fn a2() -> f64 {
    2.0 * 3f64.sqrt() * c2() * E.sqrt()
}

fn check_n_delta(n: usize, min_n: usize, delta: f64) -> Result<()> {
    if n < min_n {
        return Err(Error::BadParameter(format!("n = {n} < {min_n}")));
    }
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::BadParameter(format!("delta = {delta} not in [0, 1)")));
    }
    Ok(())
}

/// Lower bound `n δ² / (2(n-1))`.
pub fn chi2_lower_thm1(n: usize, delta: f64) -> Result<f64> {
    check_n_delta(n, 2, delta)?;
    Ok(n as f64 / (2.0 * (n as f64 - 1.0)) * delta * delta)
}

/// Upper bound `δ (1 - δⁿ) / (1 - δ)`; the geometric series is summed
/// directly when `δ > 0.999`.
pub fn chi2_upper_simple(n: usize, delta: f64) -> Result<f64> {
    check_n_delta(n, 2, delta)?;
    if delta == 0.0 {
        return Ok(0.0);
    }
    if delta > 0.999 {
        let mut term = 1.0;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += term;
            term *= delta;
        }
        return Ok(delta * sum);
    }
    Ok(delta * (1.0 - delta.powi(n as i32)) / (1.0 - delta))
}

/// Upper bound for `n >= 4`:
///
/// ```text
/// n/(2(n-1)) · (δ + a₁ n δ² / √((n-3)(n-2)) + a₂ δ₃ / √(n-2))² + T
/// ```
///
/// with `T = n/(n-1) · 6e δ³ / (1-δ)`, or with `sharp_tail` the exact tail
/// integral bound `((1+1/n)/(1+1/(nδ)))^{n+1} - δ^{n+1}` over `1-δ`.
pub fn chi2_upper_refined(n: usize, delta: f64, delta3: f64, sharp_tail: bool) -> Result<f64> {
    check_n_delta(n, 4, delta)?;
    if delta == 0.0 {
        return Err(Error::BadParameter("refined bound needs delta > 0".into()));
    }
    if delta3.is_nan() || delta3 < 0.0 {
        return Err(Error::BadParameter(format!("delta3 = {delta3} < 0")));
    }
    let nf = n as f64;
    let head = delta
        + a1() * nf * delta * delta / ((nf - 3.0) * (nf - 2.0)).sqrt()
        + a2() * delta3 / (nf - 2.0).sqrt();
    let main = nf / (2.0 * (nf - 1.0)) * head * head;
    let tail = if sharp_tail {
        let ratio = (1.0 + 1.0 / nf) / (1.0 + 1.0 / (nf * delta));
        (ratio.powi(n as i32 + 1) - delta.powi(n as i32 + 1)) / (1.0 - delta)
    } else {
        nf / (nf - 1.0) * 6.0 * E / (1.0 - delta) * delta.powi(3)
    };
    Ok(main + tail)
}

/// Upper part of Ehm's total variation bound:
/// `(1 - p^{n+1} - q^{n+1}) · n/(n+1) · δ`.
pub fn ehm_tv_upper(n: usize, p: f64, delta: f64) -> Result<f64> {
    check_n_delta(n, 1, delta)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadParameter(format!("p = {p} not in (0, 1)")));
    }
    let e = n as i32 + 1;
    let nf = n as f64;
    Ok((1.0 - p.powi(e) - (1.0 - p).powi(e)) * nf / (nf + 1.0) * delta)
}

/// `d_TV <= √χ² / 2`.
pub fn tv_upper_from_chi2(chi2: f64) -> f64 {
    0.5 * chi2.max(0.0).sqrt()
}

/// `|F_S(x) - F_K(x)| <= √χ² √R(x)`.
pub fn cdf_diff_upper(chi2: f64, rx: f64) -> Result<f64> {
    if !(0.0..=0.5 + 1e-12).contains(&rx) {
        return Err(Error::BadParameter(format!("R(x) = {rx} not in [0, 1/2]")));
    }
    Ok(chi2.max(0.0).sqrt() * rx.sqrt())
}

/// `√(2 + √(8/n) + 1/n)`, the ceiling on `δ₃ / (√n δ)`.
pub fn delta3_ratio_bound(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::BadParameter(format!("n = {n} < 2")));
    }
    let nf = n as f64;
    Ok((2.0 + (8.0 / nf).sqrt() + 1.0 / nf).sqrt())
}

/// Both sides of `|∏(1 + x_j z)|² <= (1 + |z|² mean(x²))ⁿ` for centered real `x`.
pub fn check_product_bound_l1(x: &[f64], z: (f64, f64)) -> Result<(f64, f64)> {
    let sum: f64 = x.iter().sum();
    if sum.abs() > 1e-12 {
        return Err(Error::NotCentered { sum });
    }
    let z = Complex64::new(z.0, z.1);
    let lhs = x
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, &xj| acc * (1.0 + z * xj))
        .norm_sqr();
    let n = x.len();
    let mean_sq = if n == 0 {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / n as f64
    };
    let rhs = (1.0 + z.norm_sqr() * mean_sq).powi(n as i32);
    Ok((lhs, rhs))
}

/// Both sides of `|∏(1 + v_k) e^{-v_k} - 1| <= V₂/2 + (c₁ V₂²/4 + c₂ V₃) e^{V₂/2}`.
pub fn check_product_bound_exp(v: &[(f64, f64)]) -> (f64, f64) {
    let mut prod = Complex64::new(1.0, 0.0);
    let mut shift = Complex64::new(0.0, 0.0);
    let (mut v2, mut v3) = (0.0, 0.0);
    for &(re, im) in v {
        let vk = Complex64::new(re, im);
        prod *= 1.0 + vk;
        shift += vk;
        let m = vk.norm();
        v2 += m * m;
        v3 += m * m * m;
    }
    let lhs = (prod * (-shift).exp() - 1.0).norm();
    let rhs = v2 / 2.0 + (c1() * v2 * v2 / 4.0 + c2() * v3) * (v2 / 2.0).exp();
    (lhs, rhs)
}

/// Whether a bound sits above or below the quantity it controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Upper,
    Lower,
    /// Two-sided: the slack is `-|exact - bound|`.
    Equal,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Upper => "upper",
            Direction::Lower => "lower",
            Direction::Equal => "equal",
        }
    }
}

/// One bound evaluated on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub direction: Direction,
    pub bound: f64,
    pub exact: f64,
    pub slack: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn new(name: &'static str, direction: Direction, bound: f64, exact: f64) -> Self {
        let slack = match direction {
            Direction::Upper => bound - exact,
            Direction::Lower => exact - bound,
            Direction::Equal => -(exact - bound).abs(),
        };
        Self {
            name,
            direction,
            bound,
            exact,
            slack,
            holds: slack >= -HOLD_TOL,
        }
    }
}

/// Every applicable bound on one instance next to the exact values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub summary: MomentSummary,
    pub chi2_exact: f64,
    pub chi2_direct: f64,
    pub lower_thm1: f64,
    pub upper_simple: f64,
    pub upper_refined: Option<f64>,
    pub upper_refined_sharp_tail: Option<f64>,
    pub ehm_tv_upper: f64,
    pub tv_exact: f64,
    pub tv_from_chi2: f64,
    pub kl_exact: f64,
    pub kolmogorov_exact: f64,
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn n(&self) -> usize {
        self.summary.n
    }
}

/// Evaluates all bounds against exact distances for one instance.
///
/// The exact χ² is the Parseval coefficient sum; the direct mass-ratio sum
/// must agree with it to [`CROSS_CHECK_REL`] (or [`CROSS_CHECK_ABS`]).
pub fn audit(inst: &InstanceSpec) -> Result<BoundsReport> {
    let summary = summarize(inst)?;
    let n = summary.n;
    let (delta, delta3) = (summary.delta2, summary.delta3);

    let pb = poisson_binomial_pmf(inst);
    let bin = binomial_pmf(n, summary.p)?;
    let dist = distance_report(&pb, &bin)?;
    let chi2 = chi2_parseval(inst);
    let gap = (chi2 - dist.chi2_direct).abs();
    if gap > CROSS_CHECK_ABS && gap > CROSS_CHECK_REL * chi2.abs() {
        return Err(Error::InternalInconsistency(format!(
            "chi2 routes disagree: parseval {chi2:e}, direct {:e}",
            dist.chi2_direct
        )));
    }

    let lower_thm1 = chi2_lower_thm1(n, delta)?;
    let upper_simple = chi2_upper_simple(n, delta)?;
    let refined = |sharp| {
        if n >= 4 && delta > 0.0 {
            chi2_upper_refined(n, delta, delta3, sharp).map(Some)
        } else {
            Ok(None)
        }
    };
    let upper_refined = refined(false)?;
    let upper_refined_sharp_tail = refined(true)?;
    let ehm = ehm_tv_upper(n, summary.p, delta)?;
    let tv_from_chi2 = tv_upper_from_chi2(chi2);

    use Direction::*;
    let mut checks = vec![
        BoundCheck::new("chi2_lower_thm1", Lower, lower_thm1, chi2),
        BoundCheck::new("chi2_upper_simple", Upper, upper_simple, chi2),
    ];
    if let (Some(plain), Some(sharp)) = (upper_refined, upper_refined_sharp_tail) {
        checks.push(BoundCheck::new("chi2_upper_refined", Upper, plain, chi2));
        checks.push(BoundCheck::new("chi2_upper_refined_sharp_tail", Upper, sharp, chi2));
        checks.push(BoundCheck::new("sharp_tail_le_plain", Upper, plain, sharp));
    }
    if n == 2 {
        checks.push(BoundCheck::new("n2_identity", Equal, delta * delta, chi2));
    }
    if n == 3 {
        checks.push(BoundCheck::new("n3_lower", Lower, 0.75 * delta * delta, chi2));
        checks.push(BoundCheck::new("n3_upper", Upper, 0.75 * delta * delta + delta3 * delta3, chi2));
    }
    checks.push(BoundCheck::new("tv_ehm_upper", Upper, ehm, dist.tv));
    checks.push(BoundCheck::new("tv_from_chi2", Upper, tv_from_chi2, dist.tv));
    checks.push(BoundCheck::new("kl_le_chi2", Upper, chi2, dist.kl));
    checks.push(BoundCheck::new("kolmogorov_le_tv", Upper, dist.tv, dist.kolmogorov));

    // tightest point of the pointwise CDF bound over x = -1..=n; the
    // endpoints where both sides vanish only win if nothing else exists
    let tightness = |c: &BoundCheck| {
        if !c.holds {
            return (1, -c.slack);
        }
        let ratio = match (c.bound > 0.0, c.exact > 0.0) {
            (true, _) => c.exact / c.bound,
            (false, true) => f64::INFINITY,
            (false, false) => f64::NEG_INFINITY,
        };
        (0, ratio)
    };
    let mut worst: Option<BoundCheck> = None;
    for x in -1..=(n as i64) {
        let x = x as f64;
        let bound = cdf_diff_upper(chi2, cdf_tail_min(&bin, x).min(0.5))?;
        let c = BoundCheck::new("cdf_pointwise", Upper, bound, cdf_difference(&pb, &bin, x)?);
        if worst.as_ref().is_none_or(|w| tightness(&c) > tightness(w)) {
            worst = Some(c);
        }
    }
    checks.extend(worst);

    let ratio_bound = delta3_ratio_bound(n)?;
    if let Some(ratio) = summary.delta3_ratio() {
        checks.push(BoundCheck::new("delta3_ratio", Upper, ratio_bound, ratio));
    }
    checks.push(BoundCheck::new("delta3_ratio_bound_le_sqrt5", Upper, 5f64.sqrt(), ratio_bound));

    Ok(BoundsReport {
        summary,
        chi2_exact: chi2,
        chi2_direct: dist.chi2_direct,
        lower_thm1,
        upper_simple,
        upper_refined,
        upper_refined_sharp_tail,
        ehm_tv_upper: ehm,
        tv_exact: dist.tv,
        tv_from_chi2,
        kl_exact: dist.kl,
        kolmogorov_exact: dist.kolmogorov,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{generate, validate};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn constants_reproduce_quoted_values() {
        assert_abs_diff_eq!(c1(), 0.6487, epsilon = 5e-5);
        assert_abs_diff_eq!(c2(), 0.3706, epsilon = 5e-5);
        assert_abs_diff_eq!(a1(), 1.8525, epsilon = 5e-4);
        assert_abs_diff_eq!(a2(), 2.1166, epsilon = 5e-4);
        // c₂ by an independent 64-node rule
        let check = 0.5 * GaussLegendre::new(64).integrate(|t| (0.5 * t * t).exp() * (1.0 - t * t));
        assert_abs_diff_eq!(c2(), check, epsilon = 1e-15);
    }

    #[test]
    fn lower_thm1_examples() {
        assert_abs_diff_eq!(chi2_lower_thm1(2, 0.16).unwrap(), 0.0256, epsilon = 1e-16);
        assert_eq!(chi2_lower_thm1(9, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(chi2_lower_thm1(3, 0.2).unwrap(), 0.03, epsilon = 1e-16);
        assert!(chi2_lower_thm1(1, 0.2).is_err());
        assert!(chi2_lower_thm1(3, 1.0).is_err());
    }

    #[test]
    fn upper_simple_examples() {
        assert_abs_diff_eq!(chi2_upper_simple(2, 0.16).unwrap(), 0.1856, epsilon = 1e-15);
        assert_eq!(chi2_upper_simple(7, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(chi2_upper_simple(5, 0.5).unwrap(), 0.96875, epsilon = 1e-15);
        assert!(matches!(chi2_upper_simple(5, 1.0), Err(Error::BadParameter(_))));
        // series branch agrees with the closed form near δ = 1
        let d: f64 = 0.9995;
        let closed = d * (1.0 - d.powi(40)) / (1.0 - d);
        assert_relative_eq!(chi2_upper_simple(40, d).unwrap(), closed, max_relative = 1e-10);
    }

    #[test]
    fn refined_bound_covers_seeded_instance() {
        let inst = generate(10, 0.45, 0.55, 7).unwrap();
        let s = summarize(&inst).unwrap();
        let chi2 = chi2_parseval(&inst);
        let plain = chi2_upper_refined(10, s.delta2, s.delta3, false).unwrap();
        let sharp = chi2_upper_refined(10, s.delta2, s.delta3, true).unwrap();
        assert!(chi2 <= sharp && sharp <= plain);
        assert!(chi2_upper_refined(3, 0.1, 0.1, false).is_err());
        assert!(chi2_upper_refined(5, 0.0, 0.0, false).is_err());
    }

    #[test]
    fn ehm_examples() {
        assert_abs_diff_eq!(ehm_tv_upper(2, 0.5, 0.16).unwrap(), 0.08, epsilon = 1e-16);
        assert_eq!(ehm_tv_upper(6, 0.3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(ehm_tv_upper(3, 0.5, 0.2).unwrap(), 0.13125, epsilon = 1e-16);
        assert!(ehm_tv_upper(3, 1.0, 0.2).is_err());
    }

    #[test]
    fn tv_and_cdf_from_chi2_examples() {
        assert_abs_diff_eq!(tv_upper_from_chi2(0.0256), 0.08, epsilon = 1e-16);
        assert_eq!(tv_upper_from_chi2(0.0), 0.0);
        assert_eq!(tv_upper_from_chi2(1.0), 0.5);
        assert_abs_diff_eq!(cdf_diff_upper(0.0256, 0.25).unwrap(), 0.08, epsilon = 1e-16);
        assert_eq!(cdf_diff_upper(3.0, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(cdf_diff_upper(0.04, 0.5).unwrap(), 0.2 * 0.5f64.sqrt(), epsilon = 1e-16);
        assert!(cdf_diff_upper(0.04, 0.6).is_err());
    }

    #[test]
    fn ratio_bound_examples() {
        assert_abs_diff_eq!(delta3_ratio_bound(2).unwrap(), 2.1213203435596424, epsilon = 1e-15);
        assert_abs_diff_eq!(delta3_ratio_bound(8).unwrap(), 3.125f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(delta3_ratio_bound(100_000_000).unwrap(), 2f64.sqrt(), epsilon = 1e-3);
        assert!(delta3_ratio_bound(1).is_err());
    }

    #[test]
    fn product_bound_l1_examples() {
        assert_eq!(check_product_bound_l1(&[0.0, 0.0], (0.3, -1.2)).unwrap(), (1.0, 1.0));
        let (l, r) = check_product_bound_l1(&[-0.2, 0.2], (1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(l, 0.9216, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 1.0816, epsilon = 1e-15);
        let (l, r) = check_product_bound_l1(&[-0.3, 0.0, 0.3], (0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(l, 1.1881, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 1.06f64.powi(3), epsilon = 1e-15);
        assert!(matches!(
            check_product_bound_l1(&[0.1, 0.2], (1.0, 0.0)),
            Err(Error::NotCentered { .. })
        ));
    }

    #[test]
    fn product_bound_exp_examples() {
        assert_eq!(check_product_bound_exp(&[]), (0.0, 0.0));
        assert_eq!(check_product_bound_exp(&[(0.0, 0.0)]), (0.0, 0.0));
        let (l, r) = check_product_bound_exp(&[(0.1, 0.0), (-0.1, 0.0)]);
        assert_abs_diff_eq!(l, 0.01, epsilon = 1e-15);
        let want = 0.01 + (c1() * 0.0004 / 4.0 + c2() * 0.002) * 0.01f64.exp();
        assert_abs_diff_eq!(r, want, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.0108142, epsilon = 1e-6);
    }

    #[test]
    fn audit_two_point_instance() {
        let r = audit(&validate(&[0.3, 0.7]).unwrap()).unwrap();
        assert!(r.all_hold(), "{:#?}", r.checks);
        assert_abs_diff_eq!(r.chi2_exact, 0.0256, epsilon = 1e-15);
        assert_abs_diff_eq!(r.check("chi2_lower_thm1").unwrap().slack, 0.0, epsilon = 1e-15);
        assert!(r.check("n2_identity").is_some());
        assert_eq!(r.upper_refined, None);
    }

    #[test]
    fn audit_constant_vector() {
        let r = audit(&validate(&[0.4, 0.4, 0.4]).unwrap()).unwrap();
        assert!(r.all_hold());
        assert_eq!(r.chi2_exact, 0.0);
        assert_eq!(r.upper_simple, 0.0);
        assert!(r.check("delta3_ratio").is_none());
    }

    #[test]
    fn audit_seeded_instance() {
        let r = audit(&generate(20, 0.3, 0.7, 11).unwrap()).unwrap();
        assert!(r.all_hold(), "{:#?}", r.checks);
        assert!(r.upper_refined.is_some());
        assert!(r.check("n3_upper").is_none());
    }
}
