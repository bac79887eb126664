//! Machine-readable output (JSON and CSV) and sweep aggregation.
//!
//! Reals are written with 17 significant digits so every value parses back
//! to the identical `f64`. JSON objects keep declaration order and carry a
//! `schema_version`; CSV flattens nested fields to dotted column names in
//! alphabetical order, with a header row.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use crate::bounds::BoundsReport;
use crate::distances::DistanceReport;
use crate::error::{Error, Result};
use crate::instances::MomentSummary;

pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

/// Output tree shared by both encoders.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Real(f64),
    Int(i64),
    Bool(bool),
    Text(String),
    Null,
    List(Vec<Node>),
    Object(Vec<(String, Node)>),
}

impl From<f64> for Node {
    fn from(x: f64) -> Self {
        Node::Real(x)
    }
}

impl From<usize> for Node {
    fn from(x: usize) -> Self {
        Node::Int(x as i64)
    }
}

impl From<bool> for Node {
    fn from(x: bool) -> Self {
        Node::Bool(x)
    }
}

impl From<&str> for Node {
    fn from(x: &str) -> Self {
        Node::Text(x.to_string())
    }
}

impl From<Option<f64>> for Node {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Node::Null, Node::Real)
    }
}

impl From<&[f64]> for Node {
    fn from(xs: &[f64]) -> Self {
        Node::List(xs.iter().map(|&x| Node::Real(x)).collect())
    }
}

/// Builds an object node from `(key, value)` pairs.
pub fn object<I, K>(fields: I) -> Node
where
    I: IntoIterator<Item = (K, Node)>,
    K: Into<String>,
{
    Node::Object(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
}

/// Anything that can be emitted as a report.
pub trait Record {
    /// Report kind, written next to `schema_version`.
    fn kind(&self) -> &'static str;
    /// Payload fields (without the version header).
    fn fields(&self) -> Vec<(String, Node)>;

    fn to_node(&self) -> Node {
        let mut fields = vec![
            ("schema_version".to_string(), Node::Int(SCHEMA_VERSION)),
            ("kind".to_string(), Node::Text(self.kind().to_string())),
        ];
        fields.extend(self.fields());
        Node::Object(fields)
    }
}

/// Renders a real with 17 significant digits.
pub fn format_real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_json(node: &Node, out: &mut String) {
    match node {
        Node::Real(x) => out.push_str(&format_real(*x)),
        Node::Int(i) => {
            let _ = write!(out, "{i}");
        }
        Node::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Node::Text(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Node::Null => out.push_str("null"),
        Node::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_json(item, out);
            }
            out.push(']');
        }
        Node::Object(fields) => {
            out.push('{');
            for (i, (k, v)) in fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string encodes"));
                out.push(':');
                write_json(v, out);
            }
            out.push('}');
        }
    }
}

fn flatten(prefix: &str, node: &Node, out: &mut BTreeMap<String, String>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match node {
        Node::Object(fields) => {
            for (k, v) in fields {
                flatten(&key(k), v, out);
            }
        }
        Node::List(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&key(&i.to_string()), v, out);
            }
        }
        Node::Real(x) if x.is_finite() => {
            out.insert(prefix.to_string(), format_real(*x));
        }
        Node::Real(_) | Node::Null => {
            out.insert(prefix.to_string(), String::new());
        }
        Node::Int(i) => {
            out.insert(prefix.to_string(), i.to_string());
        }
        Node::Bool(b) => {
            out.insert(prefix.to_string(), b.to_string());
        }
        Node::Text(s) => {
            out.insert(prefix.to_string(), csv_escape(s));
        }
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// One record as a JSON document or a two-line CSV (header plus one row).
pub fn emit_report(record: &dyn Record, format: Format) -> Vec<u8> {
    emit_rows(&[record], format)
}

/// Several records: a JSON array, or CSV rows sharing the union of columns.
pub fn emit_rows(records: &[&dyn Record], format: Format) -> Vec<u8> {
    let mut out = String::new();
    match format {
        Format::Json => {
            if let [single] = records {
                write_json(&single.to_node(), &mut out);
            } else {
                let list = Node::List(records.iter().map(|r| r.to_node()).collect());
                write_json(&list, &mut out);
            }
            out.push('\n');
        }
        Format::Csv => {
            let rows: Vec<BTreeMap<String, String>> = records
                .iter()
                .map(|r| {
                    let mut row = BTreeMap::new();
                    flatten("", &r.to_node(), &mut row);
                    row
                })
                .collect();
            let columns: BTreeSet<&String> = rows.iter().flat_map(|r| r.keys()).collect();
            let header: Vec<&str> = columns.iter().map(|c| c.as_str()).collect();
            out.push_str(&header.join(","));
            out.push('\n');
            for row in &rows {
                let cells: Vec<&str> = columns
                    .iter()
                    .map(|c| row.get(*c).map_or("", String::as_str))
                    .collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
        }
    }
    out.into_bytes()
}

fn summary_node(s: &MomentSummary) -> Node {
    object([
        ("n", Node::from(s.n)),
        ("p", s.p.into()),
        ("q", s.q.into()),
        ("npq", s.npq.into()),
        ("variance", s.variance.into()),
        ("delta2", s.delta2.into()),
        ("delta3", s.delta3.into()),
    ])
}

impl Record for BoundsReport {
    fn kind(&self) -> &'static str {
        "bounds"
    }

    fn fields(&self) -> Vec<(String, Node)> {
        let checks = self
            .checks
            .iter()
            .map(|c| {
                (
                    c.name.to_string(),
                    object([
                        ("direction", Node::from(c.direction.as_str())),
                        ("bound", c.bound.into()),
                        ("exact", c.exact.into()),
                        ("slack", c.slack.into()),
                        ("holds", c.holds.into()),
                    ]),
                )
            })
            .collect();
        vec![
            ("summary".into(), summary_node(&self.summary)),
            ("chi2_exact".into(), self.chi2_exact.into()),
            ("chi2_direct".into(), self.chi2_direct.into()),
            ("lower_thm1".into(), self.lower_thm1.into()),
            ("upper_simple".into(), self.upper_simple.into()),
            ("upper_refined".into(), self.upper_refined.into()),
            ("upper_refined_sharp_tail".into(), self.upper_refined_sharp_tail.into()),
            ("ehm_tv_upper".into(), self.ehm_tv_upper.into()),
            ("tv_exact".into(), self.tv_exact.into()),
            ("tv_from_chi2".into(), self.tv_from_chi2.into()),
            ("kl_exact".into(), self.kl_exact.into()),
            ("kolmogorov_exact".into(), self.kolmogorov_exact.into()),
            ("all_hold".into(), self.all_hold().into()),
            ("checks".into(), Node::Object(checks)),
        ]
    }
}

impl Record for DistanceReport {
    fn kind(&self) -> &'static str {
        "distance"
    }

    fn fields(&self) -> Vec<(String, Node)> {
        vec![
            ("chi2_direct".into(), self.chi2_direct.into()),
            ("tv".into(), self.tv.into()),
            ("kl".into(), self.kl.into()),
            ("kolmogorov".into(), self.kolmogorov.into()),
            ("kolmogorov_argmax".into(), self.kolmogorov_argmax.into()),
        ]
    }
}

/// Slack statistics of one named bound across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundStats {
    pub count: usize,
    pub violations: usize,
    pub min_slack: f64,
    pub median_slack: f64,
    pub max_slack: f64,
}

/// Range of `χ²/δ²` and of its normalized form `χ² · 2(n-1) / (n δ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioStats {
    pub count: usize,
    pub chi2_over_delta2_min: f64,
    pub chi2_over_delta2_max: f64,
    pub normalized_min: f64,
    pub normalized_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSummary {
    pub count: usize,
    pub per_bound: BTreeMap<String, BoundStats>,
    pub ratio_stats: Option<RatioStats>,
}

impl SweepSummary {
    pub fn violations(&self) -> usize {
        self.per_bound.values().map(|b| b.violations).sum()
    }
}

impl Record for SweepSummary {
    fn kind(&self) -> &'static str {
        "sweep"
    }

    fn fields(&self) -> Vec<(String, Node)> {
        let per_bound = self
            .per_bound
            .iter()
            .map(|(name, b)| {
                (
                    name.clone(),
                    object([
                        ("count", Node::from(b.count)),
                        ("violations", b.violations.into()),
                        ("min_slack", b.min_slack.into()),
                        ("median_slack", b.median_slack.into()),
                        ("max_slack", b.max_slack.into()),
                    ]),
                )
            })
            .collect();
        let ratio = match &self.ratio_stats {
            None => Node::Null,
            Some(r) => object([
                ("count", Node::from(r.count)),
                ("chi2_over_delta2_min", r.chi2_over_delta2_min.into()),
                ("chi2_over_delta2_max", r.chi2_over_delta2_max.into()),
                ("normalized_min", r.normalized_min.into()),
                ("normalized_max", r.normalized_max.into()),
            ]),
        };
        vec![
            ("count".into(), self.count.into()),
            ("violations".into(), self.violations().into()),
            ("per_bound".into(), Node::Object(per_bound)),
            ("ratio_stats".into(), ratio),
        ]
    }
}

/// Lower median by selection on a total order.
fn lower_median(values: &mut [f64]) -> f64 {
    let mid = (values.len() - 1) / 2;
    *values.select_nth_unstable_by(mid, f64::total_cmp).1
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Collapses per-instance audits into per-bound slack statistics.
pub fn aggregate(reports: &[BoundsReport]) -> Result<SweepSummary> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut slacks: BTreeMap<String, (Vec<f64>, usize)> = BTreeMap::new();
    for r in reports {
        for c in &r.checks {
            let entry = slacks.entry(c.name.to_string()).or_default();
            entry.0.push(c.slack);
            entry.1 += usize::from(!c.holds);
        }
    }
    let per_bound = slacks
        .into_iter()
        .map(|(name, (mut values, violations))| {
            let (min_slack, max_slack) = min_max(&values);
            let stats = BoundStats {
                count: values.len(),
                violations,
                min_slack,
                median_slack: lower_median(&mut values),
                max_slack,
            };
            (name, stats)
        })
        .collect();

    let (mut raw, mut normalized) = (Vec::new(), Vec::new());
    for r in reports {
        let (n, d) = (r.summary.n as f64, r.summary.delta2);
        if d > 0.0 {
            let ratio = r.chi2_exact / (d * d);
            raw.push(ratio);
            normalized.push(ratio * 2.0 * (n - 1.0) / n);
        }
    }
    let ratio_stats = (!raw.is_empty()).then(|| {
        let (a, b) = min_max(&raw);
        let (c, d) = min_max(&normalized);
        RatioStats {
            count: raw.len(),
            chi2_over_delta2_min: a,
            chi2_over_delta2_max: b,
            normalized_min: c,
            normalized_max: d,
        }
    });
    Ok(SweepSummary {
        count: reports.len(),
        per_bound,
        ratio_stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::audit;
    use crate::instances::{generate, validate};

    #[test]
    fn format_parsing() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert_eq!("CSV".parse::<Format>().unwrap(), Format::Csv);
        assert_eq!(
            "xml".parse::<Format>(),
            Err(Error::UnsupportedFormat("xml".into()))
        );
    }

    #[test]
    fn reals_use_seventeen_digits() {
        assert_eq!(format_real(0.0256), "2.5600000000000001e-2");
        assert_eq!(format_real(1.0), "1.0000000000000000e0");
        assert_eq!(format_real(f64::NAN), "null");
    }

    #[test]
    fn bounds_report_csv_has_header_and_one_row() {
        let r = audit(&validate(&[0.3, 0.7]).unwrap()).unwrap();
        let csv = String::from_utf8(emit_report(&r, Format::Csv)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        let header: Vec<&str> = lines[0].split(',').collect();
        let mut sorted = header.clone();
        sorted.sort();
        assert_eq!(header, sorted);
        let col = header.iter().position(|h| *h == "chi2_exact").unwrap();
        let value: f64 = lines[1].split(',').nth(col).unwrap().parse().unwrap();
        assert!((value - 0.0256).abs() < 1e-15);
    }

    #[test]
    fn empty_sweep_summary_json() {
        let json = String::from_utf8(emit_report(&SweepSummary::default(), Format::Json)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["count"], 0);
        assert_eq!(v["schema_version"], 1);
        assert!(json.starts_with(r#"{"schema_version":1,"kind":"sweep","count":0"#));
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[]), Err(Error::EmptyInput));
        let r = audit(&generate(10, 0.1, 0.9, 5).unwrap()).unwrap();
        let one = aggregate(std::slice::from_ref(&r)).unwrap();
        for b in one.per_bound.values() {
            assert_eq!(b.min_slack, b.median_slack);
            assert_eq!(b.median_slack, b.max_slack);
        }
        let two = aggregate(&[r.clone(), r]).unwrap();
        assert_eq!(two.count, 2);
        for (name, b) in &two.per_bound {
            assert_eq!(b.median_slack, one.per_bound[name].median_slack);
            assert_eq!(b.count, 2);
        }
    }

    #[test]
    fn csv_rows_share_union_of_columns() {
        let a = audit(&validate(&[0.3, 0.7]).unwrap()).unwrap();
        let b = audit(&generate(6, 0.2, 0.8, 1).unwrap()).unwrap();
        let csv = String::from_utf8(emit_rows(&[&a, &b], Format::Csv)).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let width = lines[0].split(',').count();
        assert!(lines.iter().all(|l| l.split(',').count() == width));
        assert!(lines[0].contains("checks.chi2_upper_refined.slack"));
    }
}
