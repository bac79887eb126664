//! Invariant suites built on the library: single-instance verification,
//! seeded sweeps, and comparison against the exact oracle.

use num_rational::BigRational;
use rayon::prelude::*;

use crate::bounds::{audit, BoundsReport, HOLD_TOL};
use crate::distances::{distance_report, DistanceReport};
use crate::error::{Error, Result};
use crate::instances::{delta_m, generate, summarize, InstanceSpec};
use crate::oracle::{self, rational_from_f64_decimal, to_f64};
use crate::parseval::{
    centered_coefficients, chi2_from_coefficients, chi2_integral, mobius_transform_coeffs,
};
use crate::pmf::{binomial_pmf, poisson_binomial_pmf, Pmf, NORMALIZATION_TOL};
use crate::report::{aggregate, object, Node, Record, SweepSummary};

/// Largest `n` accepted by [`oracle_check`].
pub const ORACLE_CHECK_CAP: usize = 16;

/// Tolerances used by the verification routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Slack allowed on inequalities.
    pub hold: f64,
    /// Relative agreement between χ² routes.
    pub agree_rel: f64,
    /// Absolute agreement used when χ² is below `small_chi2`.
    pub agree_abs: f64,
    pub small_chi2: f64,
    /// Relative agreement with the exact oracle.
    pub oracle_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hold: HOLD_TOL,
            agree_rel: 1e-9,
            agree_abs: 1e-12,
            small_chi2: 1e-6,
            oracle_rel: 1e-13,
        }
    }
}

impl Tolerances {
    /// Defaults with the relative χ² agreement replaced by `tol`.
    pub fn with_agreement(tol: f64) -> Self {
        Self {
            agree_rel: tol,
            ..Self::default()
        }
    }

    fn chi2_agree(&self, a: f64, b: f64) -> bool {
        let gap = (a - b).abs();
        if a.abs().max(b.abs()) < self.small_chi2 {
            gap <= self.agree_abs
        } else {
            gap <= self.agree_rel * a.abs().max(b.abs())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Named pass/fail outcomes of a verification run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationReport {
    pub kind: &'static str,
    pub n: usize,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    fn new(kind: &'static str, n: usize) -> Self {
        Self {
            kind,
            n,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckOutcome {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl Record for VerificationReport {
    fn kind(&self) -> &'static str {
        self.kind
    }

    fn fields(&self) -> Vec<(String, Node)> {
        let checks = self
            .checks
            .iter()
            .map(|c| {
                (
                    c.name.clone(),
                    object([
                        ("passed", Node::Bool(c.passed)),
                        ("detail", Node::Text(c.detail.clone())),
                    ]),
                )
            })
            .collect();
        vec![
            ("n".into(), self.n.into()),
            ("all_passed".into(), self.all_passed().into()),
            ("checks".into(), Node::Object(checks)),
        ]
    }
}

/// Both mass functions of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct PmfTable {
    pub p: f64,
    pub poisson_binomial: Pmf,
    pub binomial: Pmf,
}

impl PmfTable {
    pub fn new(inst: &InstanceSpec) -> Result<Self> {
        let summary = summarize(inst)?;
        Ok(Self {
            p: summary.p,
            poisson_binomial: poisson_binomial_pmf(inst),
            binomial: binomial_pmf(inst.n(), summary.p)?,
        })
    }

    /// One record per support point, for CSV output.
    pub fn rows(&self) -> Vec<PmfRow> {
        (0..self.binomial.len())
            .map(|k| PmfRow {
                k,
                poisson_binomial: self.poisson_binomial.masses()[k],
                binomial: self.binomial.masses()[k],
                binomial_log: self.binomial.logmasses()[k],
            })
            .collect()
    }
}

impl Record for PmfTable {
    fn kind(&self) -> &'static str {
        "pmf"
    }

    fn fields(&self) -> Vec<(String, Node)> {
        vec![
            ("n".into(), self.binomial.n().into()),
            ("p".into(), self.p.into()),
            ("poisson_binomial".into(), self.poisson_binomial.masses().into()),
            ("binomial".into(), self.binomial.masses().into()),
            ("binomial_log".into(), self.binomial.logmasses().into()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmfRow {
    pub k: usize,
    pub poisson_binomial: f64,
    pub binomial: f64,
    pub binomial_log: f64,
}

impl Record for PmfRow {
    fn kind(&self) -> &'static str {
        "pmf_row"
    }

    fn fields(&self) -> Vec<(String, Node)> {
        vec![
            ("k".into(), self.k.into()),
            ("poisson_binomial".into(), self.poisson_binomial.into()),
            ("binomial".into(), self.binomial.into()),
            ("binomial_log".into(), self.binomial_log.into()),
        ]
    }
}

/// Distances plus all three χ² routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceSummary {
    pub n: usize,
    pub distances: DistanceReport,
    pub chi2_parseval: f64,
    /// `None` when `n` is above the quadrature cap.
    pub chi2_integral: Option<f64>,
}

impl DistanceSummary {
    pub fn new(inst: &InstanceSpec, quad_cap: usize) -> Result<Self> {
        let table = PmfTable::new(inst)?;
        let distances = distance_report(&table.poisson_binomial, &table.binomial)?;
        let chi2_integral = match chi2_integral(inst, quad_cap) {
            Ok(v) => Some(v),
            Err(Error::CapExceeded { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self {
            n: inst.n(),
            distances,
            chi2_parseval: chi2_from_coefficients(&centered_coefficients(inst)),
            chi2_integral,
        })
    }
}

impl Record for DistanceSummary {
    fn kind(&self) -> &'static str {
        "distance"
    }

    fn fields(&self) -> Vec<(String, Node)> {
        let mut fields = vec![("n".to_string(), Node::from(self.n))];
        fields.extend(self.distances.fields());
        fields.push(("chi2_parseval".into(), self.chi2_parseval.into()));
        fields.push(("chi2_integral".into(), self.chi2_integral.into()));
        fields
    }
}

/// Runs the full invariant suite on one instance.
pub fn verify_instance(inst: &InstanceSpec, quad_cap: usize, tol: &Tolerances) -> Result<VerificationReport> {
    let n = inst.n();
    let mut out = VerificationReport::new("verify", n);
    let summary = summarize(inst)?;
    out.push("delta_routes_agree", true, format!("delta = {:e}", summary.delta2));
    out.push(
        "delta_in_unit_interval",
        (0.0..1.0).contains(&summary.delta2),
        format!("delta = {:e}", summary.delta2),
    );

    let table = PmfTable::new(inst)?;
    let (pb, bin) = (&table.poisson_binomial, &table.binomial);
    for (name, pmf) in [("poisson_binomial", pb), ("binomial", bin)] {
        let total = pmf.total();
        out.push(
            format!("{name}_normalized"),
            (total - 1.0).abs() <= NORMALIZATION_TOL,
            format!("sum = {total:.17}"),
        );
    }
    let mean: f64 = inst.probs().iter().sum();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
    out.push(
        "pmf_mean_matches",
        rel(pb.mean(), mean) <= 1e-9,
        format!("mean = {:e}, sum p_j = {mean:e}", pb.mean()),
    );
    if summary.variance > 0.0 {
        out.push(
            "pmf_variance_matches",
            rel(pb.variance(), summary.variance) <= 1e-9,
            format!("variance = {:e}, sum p_j q_j = {:e}", pb.variance(), summary.variance),
        );
    }

    let cc = centered_coefficients(inst);
    out.push("c0_is_one", cc.coeffs[0] == 1.0, format!("c0 = {}", cc.coeffs[0]));
    out.push(
        "c1_vanishes",
        cc.coeffs[1].abs() <= 1e-12 * n as f64,
        format!("c1 = {:e}", cc.coeffs[1]),
    );
    let c2_want = -0.5 * summary.npq * summary.delta2;
    out.push(
        "c2_matches_delta",
        (cc.coeffs[2] - c2_want).abs() <= 1e-10 * c2_want.abs().max(1e-300) || cc.coeffs[2] == c2_want,
        format!("c2 = {:e}, -npq delta/2 = {c2_want:e}", cc.coeffs[2]),
    );
    if n <= 30 {
        let t = mobius_transform_coeffs(pb.masses(), n, summary.p)?;
        let worst = t
            .coeffs
            .iter()
            .zip(&cc.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        out.push(
            "mobius_matches_centered",
            worst <= 1e-10,
            format!("max |diff| = {worst:e}"),
        );
    }

    let dist = DistanceSummary::new(inst, quad_cap)?;
    let direct = dist.distances.chi2_direct;
    let parseval = dist.chi2_parseval;
    out.push(
        "chi2_direct_vs_parseval",
        tol.chi2_agree(direct, parseval),
        format!("direct = {direct:e}, parseval = {parseval:e}"),
    );
    match dist.chi2_integral {
        Some(integral) => out.push(
            "chi2_integral_vs_parseval",
            tol.chi2_agree(integral, parseval),
            format!("integral = {integral:e}, parseval = {parseval:e}"),
        ),
        None => out.push(
            "chi2_integral_vs_parseval",
            true,
            format!("skipped: n = {n} above quadrature cap {quad_cap}"),
        ),
    }

    let report = audit(inst)?;
    for c in &report.checks {
        out.push(
            format!("bound_{}", c.name),
            c.slack >= -tol.hold,
            format!("{} bound {:e} vs {:e}, slack {:e}", c.direction.as_str(), c.bound, c.exact, c.slack),
        );
    }
    Ok(out)
}

/// A seeded family of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub count: usize,
    pub base_seed: u64,
    pub sizes: Vec<usize>,
    pub ranges: Vec<(f64, f64)>,
}

impl Default for SweepPlan {
    fn default() -> Self {
        Self {
            count: 200,
            base_seed: 0,
            sizes: vec![4, 10, 50, 200],
            ranges: vec![(0.4, 0.6), (0.1, 0.9), (0.01, 0.99)],
        }
    }
}

impl SweepPlan {
    /// Instance `i` uses `sizes[i % len]`, `ranges[(i / len_sizes) % len]`
    /// and seed `base_seed + i` (wrapping).
    pub fn instance(&self, i: usize) -> Result<InstanceSpec> {
        let n = self.sizes[i % self.sizes.len()];
        let (low, high) = self.ranges[(i / self.sizes.len()) % self.ranges.len()];
        generate(n, low, high, self.base_seed.wrapping_add(i as u64))
    }

    pub fn instances(&self) -> Result<Vec<InstanceSpec>> {
        (0..self.count).map(|i| self.instance(i)).collect()
    }
}

/// Audits every instance of the plan (in parallel, results kept in index
/// order) and aggregates the slacks.
pub fn run_sweep(plan: &SweepPlan) -> Result<(Vec<BoundsReport>, SweepSummary)> {
    if plan.count == 0 || plan.sizes.is_empty() || plan.ranges.is_empty() {
        return Err(Error::EmptyInput);
    }
    let instances = plan.instances()?;
    let reports = instances
        .par_iter()
        .map(audit)
        .collect::<Result<Vec<_>>>()?;
    let summary = aggregate(&reports)?;
    Ok((reports, summary))
}

/// Compares the floating-point modules with exact rational results.
///
/// The oracle runs on the exact binary value of each probability, which is
/// what the floating-point code consumes; the main identity is additionally
/// checked on the decimal reading (`0.3` as exactly `3/10`).
pub fn oracle_check(inst: &InstanceSpec, tol: &Tolerances) -> Result<VerificationReport> {
    let n = inst.n();
    if n > ORACLE_CHECK_CAP {
        return Err(Error::CapExceeded { n, cap: ORACLE_CHECK_CAP });
    }
    let probs = inst
        .probs()
        .iter()
        .map(|&x| BigRational::from_float(x).ok_or_else(|| Error::BadParameter(format!("{x} is not finite"))))
        .collect::<Result<Vec<_>>>()?;
    let decimal = inst
        .probs()
        .iter()
        .map(|&x| rational_from_f64_decimal(x))
        .collect::<Result<Vec<_>>>()?;
    let mut out = VerificationReport::new("oracle_check", n);
    let rel_ok = |got: f64, want: f64| {
        let scale = want.abs();
        if scale == 0.0 {
            got.abs() <= tol.oracle_rel
        } else {
            (got - want).abs() <= tol.oracle_rel * scale
        }
    };

    let exact_pmf = oracle::exact_pmf(&probs)?.to_f64();
    let pb = poisson_binomial_pmf(inst);
    let worst = pb
        .masses()
        .iter()
        .zip(&exact_pmf)
        .filter(|(g, w)| !rel_ok(**g, **w))
        .count();
    out.push(
        "pmf_matches_oracle",
        worst == 0,
        format!("{worst} of {} masses outside {:e} relative", n + 1, tol.oracle_rel),
    );

    let p = summarize(inst)?.p;
    let p_float = BigRational::from_float(p).ok_or(Error::InternalInconsistency("non-finite mean".into()))?;
    let bin_exact: Vec<f64> = oracle::exact_binomial(n, &p_float).iter().map(to_f64).collect();
    if p > 0.0 && p < 1.0 {
        let bin = binomial_pmf(n, p)?;
        let worst = bin
            .masses()
            .iter()
            .zip(&bin_exact)
            .map(|(g, w)| (g - w).abs() / w.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        out.push(
            "binomial_matches_oracle",
            worst <= tol.oracle_rel,
            format!("max relative error {worst:e}"),
        );
    }

    let coeffs_exact: Vec<f64> = oracle::exact_centered_coeffs(&probs)?.iter().map(to_f64).collect();
    let cc = centered_coefficients(inst);
    // coefficients can cancel to zero, so compare on the scale of |c_2|
    let scale = coeffs_exact.get(2).map_or(1.0, |c| c.abs()).max(f64::MIN_POSITIVE);
    let worst = cc
        .coeffs
        .iter()
        .zip(&coeffs_exact)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max);
    out.push(
        "centered_coeffs_match_oracle",
        worst <= tol.oracle_rel * scale.max(1e-300) || worst == 0.0,
        format!("max |diff| = {worst:e} on scale {scale:e}"),
    );

    let chi2_exact = to_f64(&oracle::exact_chi2(&probs)?);
    let parseval = chi2_from_coefficients(&cc);
    out.push(
        "chi2_parseval_matches_oracle",
        rel_ok(parseval, chi2_exact),
        format!("parseval = {parseval:e}, exact = {chi2_exact:e}"),
    );
    let direct = distance_report(&pb, &binomial_pmf(n, p)?)?.chi2_direct;
    out.push(
        "chi2_direct_matches_oracle",
        tol.chi2_agree(direct, chi2_exact),
        format!("direct = {direct:e}, exact = {chi2_exact:e}"),
    );

    let identity = oracle::verify_main_identity(&decimal)?;
    out.push(
        "main_identity_exact",
        identity.holds(),
        format!(
            "mass side = {}, coefficient side = {}",
            identity.mass_side, identity.coefficient_side
        ),
    );

    let delta_exact = exact_delta2(&probs, &oracle::exact_mean(&probs));
    let delta = delta_m(inst, 2);
    out.push(
        "delta_matches_oracle",
        rel_ok(delta, delta_exact),
        format!("delta = {delta:e}, exact = {delta_exact:e}"),
    );
    Ok(out)
}

fn exact_delta2(probs: &[BigRational], p: &BigRational) -> f64 {
    use num_traits::{One, Zero};
    let sq = probs.iter().fold(BigRational::zero(), |acc, pj| {
        let d = pj - p;
        acc + &d * &d
    });
    let npq = p * (BigRational::one() - p) * BigRational::from_integer(probs.len().into());
    if npq.is_zero() {
        return f64::NAN;
    }
    to_f64(&(sq / npq))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::validate;
    use crate::parseval::DEFAULT_QUAD_CAP;

    #[test]
    fn verify_passes_on_examples() {
        for probs in [vec![0.3, 0.7], vec![0.4, 0.4, 0.4], vec![0.2, 0.5, 0.8]] {
            let r = verify_instance(&validate(&probs).unwrap(), DEFAULT_QUAD_CAP, &Tolerances::default()).unwrap();
            assert!(r.all_passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        }
        let inst = generate(10, 0.45, 0.55, 7).unwrap();
        let r = verify_instance(&inst, DEFAULT_QUAD_CAP, &Tolerances::default()).unwrap();
        assert!(r.all_passed(), "{:#?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn oracle_check_passes_on_decimal_instances() {
        for probs in [vec![0.3, 0.7], vec![0.1, 0.25, 0.5, 0.9, 0.0, 1.0], vec![0.12, 0.34, 0.56, 0.78, 0.9]] {
            let r = oracle_check(&validate(&probs).unwrap(), &Tolerances::default()).unwrap();
            assert!(r.all_passed(), "{:#?}", r.failures().collect::<Vec<_>>());
        }
        let big = generate(17, 0.1, 0.9, 1).unwrap();
        assert!(matches!(oracle_check(&big, &Tolerances::default()), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn sweep_plan_is_deterministic() {
        let plan = SweepPlan {
            count: 12,
            ..SweepPlan::default()
        };
        assert_eq!(plan.instances().unwrap(), plan.instances().unwrap());
        assert_eq!(plan.instance(5).unwrap().n(), 10);
        let (reports, summary) = run_sweep(&plan).unwrap();
        assert_eq!(reports.len(), 12);
        assert_eq!(summary.count, 12);
        assert_eq!(summary.violations(), 0, "{summary:#?}");
    }
}
