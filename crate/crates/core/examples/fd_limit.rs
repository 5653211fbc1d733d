//! One-sided depinning limit `F_d(0/1+)` of the standard chain, estimated
//! along the mediant sequence `1/2, 1/3, ...` and extrapolated.

use anyhow::Result;
use depinn::model::{make_builtin, BuiltinSpec};
use depinn::rotation::{fd_limit, Side};

fn main() -> Result<()> {
    let k: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let h = make_builtin(&BuiltinSpec::StandardFk { k })?;
    let start = std::time::Instant::now();
    let est = fd_limit(0, 1, Side::Plus, &h, 9, 1e-7)?;
    for s in &est.samples {
        println!("F_d({}/{}) = {:.10}", s.p, s.q, s.f_d);
    }
    println!("increments: {:?}", est.increments);
    println!(
        "F_d(0/1+) ≈ {:.10} (last sample {:.10}), F_d(0/1) = {:.10}, Cauchy tail: {}",
        est.estimate,
        est.raw_last,
        est.center,
        est.cauchy_tail()
    );
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
