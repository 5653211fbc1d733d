//! Equilibrium catalog of the weakly coupled double well at rotation number
//! 1/2, the invariant ordered circles assembled from it and their checks.

use anyhow::Result;
use depinn::ioc::{build_ioc, find_all_equilibria, verify_ioc};
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::DoubleWell { k: 0.03, b: 2.0 })?);
    let cat = find_all_equilibria(1, 2, &e, 24)?;
    println!("{} equilibria in {} orbits", cat.entries.len(), cat.orbits().len());
    for i in 0..=2 {
        println!("  Morse index {i}: {}", cat.with_index(i).count());
    }
    for (i, c) in build_ioc(&cat, &e)?.iter().enumerate() {
        let r = verify_ioc(c, &e)?;
        println!(
            "circle {i}: {} samples, {} minima, order gap {:.2e}, tangency {:.2e}, periodicity {:.2e}, passes {}",
            c.len(),
            c.minima.len(),
            r.min_order_gap,
            r.tangency_max,
            r.periodicity_error,
            r.passes
        );
    }
    Ok(())
}
