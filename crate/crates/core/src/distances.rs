//! Distances between two mass functions on `{0, ..., n}`: χ², total
//! variation, Kullback–Leibler (nats) and Kolmogorov, plus the pointwise
//! CDF quantities used by the non-uniform CDF bound.

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, NeumaierSum};
use crate::pmf::{cdf, upper_tail, Pmf};

/// Below this mass a χ² term is evaluated from log masses.
pub const LOG_RATIO_THRESHOLD: f64 = 1e-280;

/// Two CDF gaps closer than this are treated as tied when locating the
/// Kolmogorov argmax.
const ARGMAX_TIE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceReport {
    pub chi2_direct: f64,
    pub tv: f64,
    pub kl: f64,
    pub kolmogorov: f64,
    pub kolmogorov_argmax: usize,
}

fn same_len(p: &Pmf, q: &Pmf) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// `Σ_j (P_j / Q_j - 1)^2 Q_j`.
pub fn chi2_direct(p: &Pmf, q: &Pmf) -> Result<f64> {
    same_len(p, q)?;
    let mut acc = NeumaierSum::new();
    for j in 0..p.len() {
        let (pm, qm) = (p.masses()[j], q.masses()[j]);
        let (lp, lq) = (p.logmasses()[j], q.logmasses()[j]);
        if lq == f64::NEG_INFINITY {
            if lp == f64::NEG_INFINITY {
                continue;
            }
            return Err(Error::ZeroReference { index: j });
        }
        let term = if pm < LOG_RATIO_THRESHOLD || qm < LOG_RATIO_THRESHOLD {
            // (r - 1)^2 Q with r = exp(lp - lq), kept in log space
            let gap = (lp - lq).exp_m1().abs();
            if gap == 0.0 {
                0.0
            } else {
                (2.0 * gap.ln() + lq).exp()
            }
        } else {
            let r = pm / qm - 1.0;
            r * r * qm
        };
        acc.add(term);
    }
    Ok(acc.value())
}

/// `(1/2) Σ |P_j - Q_j|`.
pub fn tv_distance(p: &Pmf, q: &Pmf) -> Result<f64> {
    same_len(p, q)?;
    Ok(0.5 * compensated_sum(p.masses().iter().zip(q.masses()).map(|(a, b)| (a - b).abs())))
}

/// `Σ_{P_j > 0} P_j ln(P_j / Q_j)` in nats.
pub fn kl_divergence(p: &Pmf, q: &Pmf) -> Result<f64> {
    same_len(p, q)?;
    let mut acc = NeumaierSum::new();
    for j in 0..p.len() {
        let pm = p.masses()[j];
        if pm == 0.0 {
            continue;
        }
        let lq = q.logmasses()[j];
        if lq == f64::NEG_INFINITY {
            return Err(Error::AbsoluteContinuityViolation { index: j });
        }
        acc.add(pm * (p.logmasses()[j] - lq));
    }
    let kl = acc.value();
    if kl < -1e-12 {
        return Err(Error::InternalInconsistency(format!("negative KL divergence {kl:e}")));
    }
    Ok(kl.max(0.0))
}

/// Signed gap `Σ_{j <= k} (P_j - Q_j)` for every support point `k`.
fn cdf_gaps(p: &Pmf, q: &Pmf) -> Vec<f64> {
    let mut acc = NeumaierSum::new();
    p.masses()
        .iter()
        .zip(q.masses())
        .map(|(a, b)| {
            acc.add(a - b);
            acc.value()
        })
        .collect()
}

/// `max_j |F_P(j) - F_Q(j)|` and the smallest `j` attaining it.
pub fn kolmogorov_distance(p: &Pmf, q: &Pmf) -> Result<(f64, usize)> {
    same_len(p, q)?;
    let gaps: Vec<f64> = cdf_gaps(p, q).into_iter().map(f64::abs).collect();
    let max = gaps.iter().copied().fold(0.0, f64::max);
    let argmax = gaps.iter().position(|&g| g >= max - ARGMAX_TIE).unwrap_or(0);
    Ok((max, argmax))
}

/// `R(x) = min(P(K <= x), P(K > x))`.
pub fn cdf_tail_min(q: &Pmf, x: f64) -> f64 {
    cdf(q, x).min(upper_tail(q, x))
}

/// `|F_P(x) - F_Q(x)|`, summed over whichever side of `x` carries the
/// smaller reference tail so that far-tail gaps keep their relative accuracy.
pub fn cdf_difference(p: &Pmf, q: &Pmf, x: f64) -> Result<f64> {
    same_len(p, q)?;
    let n = p.n() as f64;
    if x < 0.0 || x >= n {
        return Ok(0.0);
    }
    let split = x.floor() as usize + 1;
    let diff = |range: std::ops::Range<usize>| {
        compensated_sum(range.map(|j| p.masses()[j] - q.masses()[j])).abs()
    };
    if cdf(q, x) <= upper_tail(q, x) {
        Ok(diff(0..split))
    } else {
        Ok(diff(split..p.len()))
    }
}

/// All four distances in one pass.
pub fn distance_report(p: &Pmf, q: &Pmf) -> Result<DistanceReport> {
    let (kolmogorov, kolmogorov_argmax) = kolmogorov_distance(p, q)?;
    Ok(DistanceReport {
        chi2_direct: chi2_direct(p, q)?,
        tv: tv_distance(p, q)?,
        kl: kl_divergence(p, q)?,
        kolmogorov,
        kolmogorov_argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pmf(m: &[f64]) -> Pmf {
        Pmf::from_masses(m.to_vec()).unwrap()
    }

    #[test]
    fn chi2_examples() {
        let q = pmf(&[0.25, 0.5, 0.25]);
        assert_abs_diff_eq!(chi2_direct(&pmf(&[0.21, 0.58, 0.21]), &q).unwrap(), 0.0256, epsilon = 1e-15);
        assert_eq!(chi2_direct(&q, &q).unwrap(), 0.0);
        assert_abs_diff_eq!(chi2_direct(&pmf(&[0.09, 0.82, 0.09]), &q).unwrap(), 0.4096, epsilon = 1e-15);
    }

    #[test]
    fn chi2_errors() {
        let q = pmf(&[1.0, 0.0]);
        assert_eq!(
            chi2_direct(&pmf(&[0.5, 0.5]), &q),
            Err(Error::ZeroReference { index: 1 })
        );
        // both zero: contributes nothing
        assert_eq!(chi2_direct(&pmf(&[1.0, 0.0]), &q).unwrap(), 0.0);
        assert_eq!(
            chi2_direct(&pmf(&[1.0]), &q),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        );
    }

    #[test]
    fn chi2_log_route_matches_direct_division() {
        // masses just below the threshold on one side
        let tiny = 1e-290;
        let p = pmf(&[tiny, 1.0 - 2.0 * tiny, tiny]);
        let q = pmf(&[2.0 * tiny, 1.0 - 4.0 * tiny, 2.0 * tiny]);
        let got = chi2_direct(&p, &q).unwrap();
        // (1/2 - 1)^2 · 2e-290 twice, plus a negligible middle term
        assert_abs_diff_eq!(got / 1e-290, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn tv_examples() {
        let q = pmf(&[0.25, 0.5, 0.25]);
        assert_abs_diff_eq!(tv_distance(&pmf(&[0.21, 0.58, 0.21]), &q).unwrap(), 0.08, epsilon = 1e-15);
        assert_eq!(tv_distance(&q, &q).unwrap(), 0.0);
        assert_eq!(tv_distance(&pmf(&[1.0, 0.0]), &pmf(&[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn kl_examples() {
        let q = pmf(&[0.25, 0.5, 0.25]);
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
        let kl = kl_divergence(&pmf(&[0.21, 0.58, 0.21]), &q).unwrap();
        // 2·0.21·ln(0.84) + 0.58·ln(1.16)
        let want = 0.42 * 0.84f64.ln() + 0.58 * 1.16f64.ln();
        assert_abs_diff_eq!(kl, want, epsilon = 1e-15);
        assert!(kl > 0.0 && kl <= 0.0256);
        assert_abs_diff_eq!(
            kl_divergence(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-16
        );
        assert_eq!(
            kl_divergence(&pmf(&[0.5, 0.5]), &pmf(&[1.0, 0.0])),
            Err(Error::AbsoluteContinuityViolation { index: 1 })
        );
    }

    #[test]
    fn kolmogorov_examples() {
        let q = pmf(&[0.25, 0.5, 0.25]);
        let (d, at) = kolmogorov_distance(&pmf(&[0.21, 0.58, 0.21]), &q).unwrap();
        assert_abs_diff_eq!(d, 0.04, epsilon = 1e-15);
        assert_eq!(at, 0);
        assert_eq!(kolmogorov_distance(&q, &q).unwrap(), (0.0, 0));
        assert_eq!(
            kolmogorov_distance(&pmf(&[1.0, 0.0]), &pmf(&[0.0, 1.0])).unwrap(),
            (1.0, 0)
        );
    }

    #[test]
    fn tail_min_examples() {
        let q = pmf(&[0.25, 0.5, 0.25]);
        assert_eq!(cdf_tail_min(&q, 0.0), 0.25);
        assert_eq!(cdf_tail_min(&q, 1.0), 0.25);
        assert_eq!(cdf_tail_min(&q, -1.0), 0.0);
        assert_eq!(cdf_tail_min(&q, 2.0), 0.0);
    }

    #[test]
    fn cdf_difference_uses_either_tail() {
        let p = pmf(&[0.21, 0.58, 0.21]);
        let q = pmf(&[0.25, 0.5, 0.25]);
        assert_abs_diff_eq!(cdf_difference(&p, &q, 0.0).unwrap(), 0.04, epsilon = 1e-15);
        assert_abs_diff_eq!(cdf_difference(&p, &q, 1.0).unwrap(), 0.04, epsilon = 1e-15);
        assert_eq!(cdf_difference(&p, &q, 2.0).unwrap(), 0.0);
        assert_eq!(cdf_difference(&p, &q, -1.0).unwrap(), 0.0);
    }
}
