//! Instance documents: explicit probabilities or a generator spec.

use genbinom::{audit, InstanceSource};

fn main() -> genbinom::Result<()> {
    let docs = [
        r#"{"probs": [0.3, 0.7]}"#,
        r#"{"generate": {"n": 50, "low": 0.2, "high": 0.8, "seed": 42}}"#,
        r#"{"probs": [0.3, 1.7]}"#,
        r#"{"probs": [0.3], "generate": {"n": 2, "low": 0, "high": 1, "seed": 1}}"#,
    ];
    for doc in docs {
        match InstanceSource::from_json(doc).and_then(|s| s.resolve()) {
            Ok(inst) => {
                let r = audit(&inst)?;
                println!("n = {:>3}  chi2 = {:.6e}  all bounds hold: {}", inst.n(), r.chi2_exact, r.all_hold());
            }
            Err(e) => println!("rejected: {e}"),
        }
    }
    Ok(())
}
