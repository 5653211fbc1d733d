//! Bistable chain at the tilt that levels the wells `b` and `a + 1`: a front
//! from `a` to `b` travels while the discommensuration from `b` to `a + 1`
//! stays pinned.

use anyhow::{Context, Result};
use depinn::config::PeriodicConfiguration;
use depinn::disc::{find_equilibrium_disc, find_sliding_disc, DiscKind, FrontVerdict};
use depinn::flow::{find_equilibrium, FlowSettings};
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let k: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(10.0);
    let spec = BuiltinSpec::Bistable { k, c1: 0.01, c2: -0.02, s1: 0.0 };
    let level = spec.bistable_levelling()?;
    let e = TiltedEnergy::new(make_builtin(&spec)?, level.force)?;
    println!("levelling force F = {:.10}, wells a = {:.6}, b = {:.6}", level.force, level.a, level.b);

    let a = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, level.a), &e)?.config;
    let b = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, level.b), &e)?.config;
    let a1 = a.shifted(1.0);

    let settings = FlowSettings::for_coupling(k);
    match find_sliding_disc(&a, &b, DiscKind::Advancing, &e, &settings)? {
        FrontVerdict::Sliding(front) => println!(
            "front a -> b: T = {:.6}, v = {:.6e}, recurrence error {:.2e}",
            front.period, front.velocity, front.recurrence_error
        ),
        other => println!("front a -> b not sliding: {other:?}"),
    }
    let disc = find_equilibrium_disc(&b, &a1, DiscKind::Advancing, &e, 40).context("b -> a+1")?;
    println!(
        "equilibrium b -> a+1: residual {:.2e}, ordered {}, decay rates {:.4} / {:.4}",
        disc.residual, disc.ordered, disc.left_decay, disc.right_decay
    );
    Ok(())
}
