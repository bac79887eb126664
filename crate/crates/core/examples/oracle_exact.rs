//! Exact rational mass function, χ² and the coefficient identity.

use genbinom::oracle::{exact_chi2, exact_pmf, rational_from_decimal, verify_main_identity};

fn main() -> genbinom::Result<()> {
    let probs = ["0.3", "0.7", "0.15", "0.9"]
        .iter()
        .map(|s| rational_from_decimal(s))
        .collect::<genbinom::Result<Vec<_>>>()?;
    for (k, m) in exact_pmf(&probs)?.masses.iter().enumerate() {
        println!("P(S = {k}) = {m}");
    }
    println!("chi2 = {}", exact_chi2(&probs)?);
    let id = verify_main_identity(&probs)?;
    println!("1 + chi2          = {}", id.mass_side);
    println!("coefficient sum   = {}", id.coefficient_side);
    println!("identity holds: {}", id.holds());
    Ok(())
}
