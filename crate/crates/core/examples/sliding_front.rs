//! A discommensuration driven beyond its own pinning force travels as a
//! periodically recurring front; prints its period and velocity.

use anyhow::Result;
use depinn::config::PeriodicConfiguration;
use depinn::disc::{find_sliding_disc, DiscKind, FrontVerdict};
use depinn::flow::{find_equilibrium, FlowSettings};
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let h = make_builtin(&BuiltinSpec::StandardFk { k: 1.0 })?;
    for force in [0.02, 0.08, 0.14] {
        let e = TiltedEnergy::new(h.clone(), force)?;
        let lo = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.45), &e)?.config;
        let hi = lo.shifted(1.0);
        match find_sliding_disc(&lo, &hi, DiscKind::Advancing, &e, &FlowSettings::default())? {
            FrontVerdict::Sliding(s) => println!(
                "F = {force}: T = {:.6}, v = {:.6}, shift {:?}, recurrence {:.2e}",
                s.period, s.velocity, s.shift, s.recurrence_error
            ),
            other => println!("F = {force}: {other:?}"),
        }
    }
    Ok(())
}
