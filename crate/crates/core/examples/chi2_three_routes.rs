//! χ² by direct summation, by the coefficient sum and by the contour
//! integral, on growing instances.

use genbinom::parseval::DEFAULT_QUAD_CAP;
use genbinom::{binomial_pmf, chi2_integral, chi2_parseval, distance_report, generate, poisson_binomial_pmf, summarize};

fn main() -> genbinom::Result<()> {
    println!("{:>5} {:>22} {:>22} {:>22}", "n", "direct", "coefficients", "integral");
    for (n, seed) in [(5, 1), (20, 2), (80, 3), (300, 4), (1500, 5)] {
        let inst = generate(n, 0.2, 0.8, seed)?;
        let bin = binomial_pmf(n, summarize(&inst)?.p)?;
        let direct = distance_report(&poisson_binomial_pmf(&inst), &bin)?.chi2_direct;
        let integral = match chi2_integral(&inst, DEFAULT_QUAD_CAP) {
            Ok(v) => format!("{v:.15e}"),
            Err(_) => "above cap".into(),
        };
        println!("{n:>5} {direct:>22.15e} {:>22.15e} {integral:>22}", chi2_parseval(&inst));
    }
    Ok(())
}
