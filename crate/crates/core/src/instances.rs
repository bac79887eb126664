//! Problem instances: the vector of indicator probabilities `p_1..p_n`,
//! the moment summary derived from it, and a seeded generator for sweeps.

use std::path::Path;
use std::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::numeric::compensated_sum;

/// Absolute tolerance between the two routes to `δ`.
pub const DELTA_ROUTE_TOL: f64 = 1e-12;

/// A validated vector of indicator probabilities.
///
/// Every entry is in `[0, 1]`, `n >= 2`, and the entries are not all equal
/// to the same value in `{0, 1}` (which would make `S_n` a constant).
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    probs: Vec<f64>,
}

impl InstanceSpec {
    pub fn new(raw: Vec<f64>) -> Result<Self> {
        check_entries(&raw)?;
        Ok(Self { probs: raw })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of indicators `n`.
    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn into_probs(self) -> Vec<f64> {
        self.probs
    }
}

fn check_entries(raw: &[f64]) -> Result<()> {
    if raw.len() < 2 {
        return Err(Error::TooShort { n: raw.len() });
    }
    for (index, &value) in raw.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::EntryOutOfRange { index, value });
        }
    }
    let first = raw[0];
    if (first == 0.0 || first == 1.0) && raw.iter().all(|&x| x == first) {
        return Err(Error::DegenerateInstance { value: first });
    }
    Ok(())
}

/// Validates a raw probability vector. Out-of-range values are rejected,
/// never clamped.
pub fn validate(raw: &[f64]) -> Result<InstanceSpec> {
    InstanceSpec::new(raw.to_vec())
}

/// The mean-matched success probability `p = (1/n) Σ p_j`.
pub fn mean_p(inst: &InstanceSpec) -> f64 {
    compensated_sum(inst.probs.iter().copied()) / inst.n() as f64
}

/// Deviations `p_j - p`, re-centered once so their computed sum is at
/// roundoff level.
pub fn deviations(inst: &InstanceSpec) -> Vec<f64> {
    let p = mean_p(inst);
    let mut dev: Vec<f64> = inst.probs.iter().map(|&pj| pj - p).collect();
    let drift = compensated_sum(dev.iter().copied()) / dev.len() as f64;
    if drift != 0.0 {
        for d in &mut dev {
            *d -= drift;
        }
    }
    dev
}

/// `δ_m = Σ |p_j - p|^m / (n (pq)^{m/2})`.
///
/// # Panics
/// If `m < 2`.
pub fn delta_m(inst: &InstanceSpec, m: u32) -> f64 {
    assert!(m >= 2, "delta_m is defined for m >= 2, got {m}");
    let p = mean_p(inst);
    let pq = p * (1.0 - p);
    let s = compensated_sum(deviations(inst).iter().map(|d| d.abs().powi(m as i32)));
    s / (inst.n() as f64 * pq.powf(m as f64 / 2.0))
}

/// Scalars derived from an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSummary {
    pub n: usize,
    pub p: f64,
    pub q: f64,
    pub npq: f64,
    /// `Var S_n = Σ p_j q_j`.
    pub variance: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl MomentSummary {
    /// `δ_3 / (√n δ)`, undefined when `δ = 0`.
    pub fn delta3_ratio(&self) -> Option<f64> {
        (self.delta2 > 0.0).then(|| self.delta3 / ((self.n as f64).sqrt() * self.delta2))
    }
}

/// Computes every [`MomentSummary`] field and cross-checks `δ` against the
/// variance identity `δ = 1 - Var S_n / (npq)`.
pub fn summarize(inst: &InstanceSpec) -> Result<MomentSummary> {
    let n = inst.n();
    let p = mean_p(inst);
    let q = 1.0 - p;
    let npq = n as f64 * p * q;
    let variance = compensated_sum(inst.probs.iter().map(|&pj| pj * (1.0 - pj)));
    let delta2 = delta_m(inst, 2);
    let delta3 = delta_m(inst, 3);
    let from_variance = 1.0 - variance / npq;
    if (delta2 - from_variance).abs() > DELTA_ROUTE_TOL {
        return Err(Error::InternalInconsistency(format!(
            "delta from deviations {delta2:e} disagrees with 1 - Var/npq {from_variance:e}"
        )));
    }
    Ok(MomentSummary {
        n,
        p,
        q,
        npq,
        variance,
        delta2,
        delta3,
    })
}

/// Seeded uniform instance: `n` draws from `[low, high]`.
///
/// The stream is ChaCha8 keyed by `seed_from_u64(seed)`; each draw takes
/// the top 53 bits of one `u64` as `u ∈ [0, 1)` and returns
/// `low + (high - low) u`.
pub fn generate(n: usize, low: f64, high: f64, seed: u64) -> Result<InstanceSpec> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
        return Err(Error::BadRange { low, high });
    }
    if n < 2 {
        return Err(Error::TooShort { n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = high - low;
    let probs = (0..n)
        .map(|_| {
            let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            (low + width * u).min(high)
        })
        .collect();
    InstanceSpec::new(probs)
}

/// Parameters of [`generate`], parseable from `n=10,low=0.45,high=0.55,seed=7`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub low: f64,
    pub high: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<InstanceSpec> {
        generate(self.n, self.low, self.high, self.seed)
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (mut n, mut low, mut high, mut seed) = (None, None, None, None);
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::BadParameter(format!("expected key=value, got `{part}`")))?;
            let bad = |_| Error::BadParameter(format!("cannot parse `{part}`"));
            match key.trim() {
                "n" => n = Some(value.trim().parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "low" => low = Some(value.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "high" => high = Some(value.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "seed" => seed = Some(value.trim().parse::<u64>().map_err(|e| bad(e.to_string()))?),
                other => return Err(Error::BadParameter(format!("unknown generator key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::BadParameter(format!("generator spec is missing `{k}`"));
        Ok(GeneratorSpec {
            n: n.ok_or_else(|| missing("n"))?,
            low: low.ok_or_else(|| missing("low"))?,
            high: high.ok_or_else(|| missing("high"))?,
            seed: seed.ok_or_else(|| missing("seed"))?,
        })
    }
}

/// Contents of an instance file: either explicit probabilities or a
/// generator spec.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Probs(Vec<f64>),
    Generate(GeneratorSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    probs: Option<Vec<f64>>,
    generate: Option<GeneratorSpec>,
}

impl InstanceSource {
    /// Parses `{"probs": [...]}` or `{"generate": {...}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: InstanceDocument =
            serde_json::from_str(text).map_err(|e| Error::InstanceFile(e.to_string()))?;
        match (doc.probs, doc.generate) {
            (Some(p), None) => Ok(InstanceSource::Probs(p)),
            (None, Some(g)) => Ok(InstanceSource::Generate(g)),
            _ => Err(Error::InstanceFile(
                "expected exactly one of `probs` or `generate`".into(),
            )),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InstanceFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn resolve(&self) -> Result<InstanceSpec> {
        match self {
            InstanceSource::Probs(p) => validate(p),
            InstanceSource::Generate(g) => g.build(),
        }
    }
}
