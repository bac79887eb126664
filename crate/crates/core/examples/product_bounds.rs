//! Sampled checks of the two product inequalities.

use genbinom::bounds::{check_product_bound_exp, check_product_bound_l1};

fn main() -> genbinom::Result<()> {
    let x = [-0.4, -0.1, 0.05, 0.2, 0.25];
    for z in [(1.0, 0.0), (0.0, 1.0), (1.5, -1.0), (-2.0, 0.0)] {
        let (lhs, rhs) = check_product_bound_l1(&x, z)?;
        println!("l1   z = {z:?}: {lhs:.6} <= {rhs:.6}  ratio {:.4}", lhs / rhs);
    }
    for scale in [0.01, 0.1, 0.3, 0.5] {
        let v: Vec<(f64, f64)> = (0..8).map(|k| (scale * (k as f64).cos(), scale * (k as f64).sin())).collect();
        let (lhs, rhs) = check_product_bound_exp(&v);
        println!("exp  |v| = {scale}: {lhs:.6e} <= {rhs:.6e}  ratio {:.4}", lhs / rhs);
    }
    Ok(())
}
