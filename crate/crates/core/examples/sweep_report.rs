//! Seeded sweep over the default families, summarized per bound.
//!
//! Pass `--json` to print the full summary record instead.

use genbinom::report::{emit_report, Format};
use genbinom::{run_sweep, SweepPlan};

fn main() -> genbinom::Result<()> {
    let plan = SweepPlan {
        count: 60,
        base_seed: 2024,
        ..SweepPlan::default()
    };
    let (reports, summary) = run_sweep(&plan)?;
    if std::env::args().any(|a| a == "--json") {
        print!("{}", String::from_utf8_lossy(&emit_report(&summary, Format::Json)));
        return Ok(());
    }
    println!("{} instances, {} violations", summary.count, summary.violations());
    println!("{:<32} {:>5} {:>13} {:>13} {:>13}", "bound", "fail", "min slack", "median", "max");
    for (name, b) in &summary.per_bound {
        println!(
            "{name:<32} {:>5} {:>13.4e} {:>13.4e} {:>13.4e}",
            b.violations, b.min_slack, b.median_slack, b.max_slack
        );
    }
    if let Some(r) = &summary.ratio_stats {
        println!("chi2 / delta^2 in [{:.4}, {:.4}]", r.chi2_over_delta2_min, r.chi2_over_delta2_max);
    }
    let worst = reports
        .iter()
        .max_by(|a, b| a.chi2_exact.total_cmp(&b.chi2_exact))
        .expect("non-empty sweep");
    println!("largest chi2 {:.4e} at n = {}", worst.chi2_exact, worst.n());
    Ok(())
}
