//! Every bound on one instance, with slacks.

use genbinom::{audit, generate};

fn main() -> genbinom::Result<()> {
    let inst = generate(25, 0.05, 0.95, 11)?;
    let r = audit(&inst)?;
    println!("n = {}, delta = {:.6}, delta3 = {:.6}", r.n(), r.summary.delta2, r.summary.delta3);
    println!("chi2 = {:.6e}, tv = {:.6e}, kl = {:.6e}", r.chi2_exact, r.tv_exact, r.kl_exact);
    println!();
    println!("{:<32} {:>6} {:>14} {:>14} {:>14}", "check", "dir", "bound", "exact", "slack");
    for c in &r.checks {
        println!(
            "{:<32} {:>6} {:>14.6e} {:>14.6e} {:>14.6e}{}",
            c.name,
            c.direction.as_str(),
            c.bound,
            c.exact,
            c.slack,
            if c.holds { "" } else { "  VIOLATED" }
        );
    }
    Ok(())
}
