//! Probability mass functions of `S_n` (Poisson-binomial) and of the
//! mean-matched binomial `B(n, p)`.

use crate::error::{Error, Result};
use crate::instances::InstanceSpec;
use crate::numeric::{compensated_sum, ln_choose};

/// Allowed deviation of `Σ masses` from 1.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Negative values above this magnitude are a bug, not rounding dust.
const DUST: f64 = 1e-15;

/// A mass vector on `{0, ..., n}` with its natural-log companion.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    masses: Vec<f64>,
    logmasses: Vec<f64>,
    clamped: usize,
}

impl Pmf {
    /// Wraps an explicit mass vector. Entries must be finite and
    /// non-negative and sum to one within [`NORMALIZATION_TOL`].
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some((i, &m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !m.is_finite() || **m < 0.0)
        {
            return Err(Error::BadParameter(format!("mass[{i}] = {m} is not a probability")));
        }
        let total = compensated_sum(masses.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::BadParameter(format!("masses sum to {total}, not 1")));
        }
        let logmasses = masses.iter().map(|m| m.ln()).collect();
        Ok(Self {
            masses,
            logmasses,
            clamped: 0,
        })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Natural logs of the masses; `-inf` for exact zeros. For the binomial
    /// these stay finite even where the mass itself underflows.
    pub fn logmasses(&self) -> &[f64] {
        &self.logmasses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Largest support point `n`.
    pub fn n(&self) -> usize {
        self.masses.len() - 1
    }

    /// Count of tiny negative cells that were reset to zero.
    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.masses.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.masses.iter().enumerate().map(|(k, m)| k as f64 * m))
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        compensated_sum(
            self.masses
                .iter()
                .enumerate()
                .map(|(k, m)| (k as f64 - mu).powi(2) * m),
        )
    }
}

/// `P(S_n = k)` by folding each factor `q_j + p_j z` into the running
/// coefficient vector.
pub fn poisson_binomial_pmf(inst: &InstanceSpec) -> Pmf {
    let n = inst.n();
    let mut masses = Vec::with_capacity(n + 1);
    masses.push(1.0f64);
    let mut clamped = 0;
    for &pj in inst.probs() {
        let qj = 1.0 - pj;
        masses.push(0.0);
        for k in (0..masses.len()).rev() {
            let stay = qj * masses[k];
            let mut cell = if k > 0 { pj.mul_add(masses[k - 1], stay) } else { stay };
            if cell < 0.0 {
                debug_assert!(cell > -DUST, "negative mass {cell} in convolution");
                cell = 0.0;
                clamped += 1;
            }
            masses[k] = cell;
        }
    }
    let logmasses = masses.iter().map(|m| m.ln()).collect();
    Pmf {
        masses,
        logmasses,
        clamped,
    }
}

/// `b(n, p; j) = C(n, j) p^j q^{n-j}`, evaluated in log space.
pub fn binomial_pmf(n: usize, p: f64) -> Result<Pmf> {
    if n == 0 {
        return Err(Error::BadParameter("binomial needs n >= 1".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::BadParameter(format!("binomial p = {p} not in (0, 1)")));
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let logmasses: Vec<f64> = (0..=n)
        .map(|j| ln_choose(n, j) + j as f64 * lp + (n - j) as f64 * lq)
        .collect();
    let masses = logmasses.iter().map(|l| l.exp()).collect();
    Ok(Pmf {
        masses,
        logmasses,
        clamped: 0,
    })
}

/// `P(K <= x)`.
pub fn cdf(pmf: &Pmf, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    if x >= pmf.n() as f64 {
        return 1.0;
    }
    let last = x.floor() as usize;
    compensated_sum(pmf.masses[..=last].iter().copied())
}

/// `P(K > x)`, summed over the upper tail rather than as `1 - cdf`.
pub fn upper_tail(pmf: &Pmf, x: f64) -> f64 {
    if x < 0.0 {
        return 1.0;
    }
    if x >= pmf.n() as f64 {
        return 0.0;
    }
    let first = x.floor() as usize + 1;
    compensated_sum(pmf.masses[first..].iter().copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::validate;
    use approx::assert_abs_diff_eq;

    fn pb(p: &[f64]) -> Vec<f64> {
        poisson_binomial_pmf(&validate(p).unwrap()).masses().to_vec()
    }

    #[test]
    fn poisson_binomial_examples() {
        for (got, want) in pb(&[0.5, 0.5]).iter().zip([0.25, 0.5, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-16);
        }
        for (got, want) in pb(&[0.1, 0.9]).iter().zip([0.09, 0.82, 0.09]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        for (got, want) in pb(&[0.3, 0.7]).iter().zip([0.21, 0.58, 0.21]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert_eq!(pb(&[0.0, 1.0]), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn binomial_examples() {
        let b = binomial_pmf(2, 0.5).unwrap();
        for (got, want) in b.masses().iter().zip([0.25, 0.5, 0.25]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let b = binomial_pmf(3, 0.5).unwrap();
        for (got, want) in b.masses().iter().zip([0.125, 0.375, 0.375, 0.125]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let b = binomial_pmf(4, 0.25).unwrap();
        let want = [0.31640625, 0.421875, 0.2109375, 0.046875, 0.00390625];
        for (got, want) in b.masses().iter().zip(want) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        assert!(matches!(binomial_pmf(3, 0.0), Err(Error::BadParameter(_))));
        assert!(matches!(binomial_pmf(3, 1.0), Err(Error::BadParameter(_))));
        assert!(matches!(binomial_pmf(0, 0.5), Err(Error::BadParameter(_))));
    }

    #[test]
    fn binomial_tails_stay_finite_in_log_space() {
        let b = binomial_pmf(4000, 0.5).unwrap();
        assert_eq!(b.masses()[0], 0.0);
        assert!(b.logmasses()[0].is_finite());
        assert_abs_diff_eq!(b.logmasses()[0], 4000.0 * 0.5f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(b.total(), 1.0, epsilon = NORMALIZATION_TOL);
    }

    #[test]
    fn cdf_examples() {
        let p = Pmf::from_masses(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(cdf(&p, 0.0), 0.25);
        assert_eq!(cdf(&p, 1.5), 0.75);
        assert_eq!(cdf(&p, -1.0), 0.0);
        assert_eq!(cdf(&p, 2.0), 1.0);
        assert_eq!(upper_tail(&p, 0.0), 0.75);
        assert_eq!(upper_tail(&p, 2.0), 0.0);
        assert_eq!(upper_tail(&p, -0.5), 1.0);
    }

    #[test]
    fn from_masses_rejects_bad_vectors() {
        assert!(Pmf::from_masses(vec![0.5, 0.6]).is_err());
        assert!(Pmf::from_masses(vec![1.5, -0.5]).is_err());
        assert_eq!(Pmf::from_masses(vec![]), Err(Error::EmptyInput));
        let p = Pmf::from_masses(vec![1.0, 0.0]).unwrap();
        assert_eq!(p.logmasses()[1], f64::NEG_INFINITY);
    }

    #[test]
    fn moments_match_instance() {
        let inst = validate(&[0.1, 0.25, 0.6, 0.95, 0.5]).unwrap();
        let pmf = poisson_binomial_pmf(&inst);
        let mean: f64 = inst.probs().iter().sum();
        let var: f64 = inst.probs().iter().map(|p| p * (1.0 - p)).sum();
        assert_abs_diff_eq!(pmf.mean(), mean, epsilon = 1e-14);
        assert_abs_diff_eq!(pmf.variance(), var, epsilon = 1e-14);
        assert_eq!(pmf.clamped(), 0);
    }
}
