//! Poisson-binomial distributions compared with the mean-matched binomial.
//!
//! The crate computes both mass functions, their χ², total variation,
//! Kullback–Leibler and Kolmogorov distances, and audits closed-form bounds
//! on χ² in terms of the normalized moments `δ_m` of the probability vector.
//! χ² is available by three independent routes (direct summation, a
//! coefficient sum, and a contour integral) and, for small `n`, exactly in
//! rational arithmetic.
//!
//! ```
//! use genbinom::{audit, validate};
//!
//! let inst = validate(&[0.3, 0.7]).unwrap();
//! let report = audit(&inst).unwrap();
//! assert!((report.chi2_exact - 0.0256).abs() < 1e-15);
//! assert!(report.all_hold());
//! ```

pub mod bounds;
pub mod cli;
pub mod distances;
pub mod error;
pub mod harness;
pub mod instances;
pub mod numeric;
pub mod oracle;
pub mod parseval;
pub mod pmf;
pub mod report;

pub use bounds::{audit, BoundCheck, BoundsReport, Direction};
pub use distances::{distance_report, DistanceReport};
pub use error::{Error, Result};
pub use harness::{oracle_check, run_sweep, verify_instance, SweepPlan, Tolerances};
pub use instances::{delta_m, generate, summarize, validate, InstanceSource, InstanceSpec, MomentSummary};
pub use parseval::{chi2_integral, chi2_parseval, centered_coefficients};
pub use pmf::{binomial_pmf, poisson_binomial_pmf, Pmf};
pub use report::{aggregate, emit_report, Format, Record, SweepSummary};
