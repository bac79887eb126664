//! Poisson-binomial mass function next to the mean-matched binomial.
//!
//! cargo run --example pmf_compare -- 0.1,0.3,0.5,0.7,0.9

use genbinom::{binomial_pmf, poisson_binomial_pmf, summarize, validate};

fn main() -> genbinom::Result<()> {
    let arg = std::env::args().nth(1).unwrap_or_else(|| "0.1,0.3,0.5,0.7,0.9".into());
    let probs: Vec<f64> = arg
        .split(',')
        .map(|s| s.trim().parse().expect("probabilities are decimals"))
        .collect();
    let inst = validate(&probs)?;
    let s = summarize(&inst)?;
    let pb = poisson_binomial_pmf(&inst);
    let bin = binomial_pmf(inst.n(), s.p)?;

    println!("n = {}, p = {:.6}, delta = {:.6}", s.n, s.p, s.delta2);
    println!("{:>4} {:>14} {:>14} {:>12}", "k", "P(S = k)", "b(n, p; k)", "ratio");
    for k in 0..=inst.n() {
        let (a, b) = (pb.masses()[k], bin.masses()[k]);
        println!("{k:>4} {a:>14.6e} {b:>14.6e} {:>12.6}", a / b);
    }
    println!("variance {:.6} vs npq {:.6}", pb.variance(), s.npq);
    Ok(())
}
