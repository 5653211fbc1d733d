//! The twist map of the standard chain: a forward orbit with its mean
//! advance, the inverse map undoing it, and the periodic orbits of type
//! `(1, 3)` with their stability.

use anyhow::Result;
use depinn::config::PeriodicConfiguration;
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};
use depinn::twistmap::{apply, find_periodic_orbit, inverse, CylinderPoint};

fn main() -> Result<()> {
    let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 0.5 })?);
    let start = CylinderPoint::new(0.1, 0.3);
    let mut z = start;
    let steps = 1000;
    for _ in 0..steps {
        z = apply(&e, z)?;
    }
    println!("mean advance over {steps} steps: {:.8}", (z.x - start.x) / steps as f64);
    for _ in 0..steps {
        z = inverse(&e, z)?;
    }
    println!("return error after inverting: {:.2e}", z.dist(start));

    for offset in [0.0, 0.5 / 3.0] {
        let orbit = find_periodic_orbit(&PeriodicConfiguration::uniform(1, 3, offset), &e)?;
        println!(
            "(1,3) orbit from offset {offset:.3}: {:?}, tau {:.8}, monodromy tau {:.8}, closure {:.2e}",
            orbit.classification, orbit.tau, orbit.tau_monodromy, orbit.closure_error
        );
    }
    Ok(())
}
