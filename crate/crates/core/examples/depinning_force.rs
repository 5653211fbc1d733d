//! Depinning force `F_d(p/q)` of the standard chain for a few rotation
//! numbers, by bisection on the velocity verdict and by fold continuation.

use anyhow::Result;
use depinn::flow::{depinning_force, DepinningMethod};
use depinn::model::{make_builtin, BuiltinSpec};

fn main() -> Result<()> {
    let k: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let h = make_builtin(&BuiltinSpec::StandardFk { k })?;
    println!("k = {k}, single-well bound k/(2π) = {:.10}", k / (2.0 * std::f64::consts::PI));
    for (p, q) in [(0, 1), (1, 2), (1, 3), (2, 5)] {
        let r = depinning_force(p, q, &h, DepinningMethod::CrossValidated, 1e-8)?;
        println!(
            "F_d({p}/{q}) = {:.10}  bisection {:.10}  continuation {:.10}",
            r.f_d,
            r.bisection_estimate.unwrap_or(f64::NAN),
            r.continuation_estimate.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
