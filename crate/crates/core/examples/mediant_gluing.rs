//! Gluing a pinned state, a discommensuration and its translate into one
//! window, then assembling a seed of mediant type and polishing it.

use anyhow::Result;
use depinn::config::PeriodicConfiguration;
use depinn::disc::{build_mediant_config, find_equilibrium_disc, glue, DiscKind, GluingPlan, Piece};
use depinn::flow::find_equilibrium;
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};
use depinn::rotation::farey_neighbours;

fn main() -> Result<()> {
    let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 })?);
    let lo = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.5), &e)?.config;
    let upper = farey_neighbours(0, 1)?.upper;
    let hi = lo.translate(upper.1, upper.0);
    let z = find_equilibrium_disc(&lo, &hi, DiscKind::Advancing, &e, 20)?;

    // The cut mismatch decays with the distance of the cuts from the interface.
    for (cut, delta) in [(6, 1e-2), (10, 1e-4)] {
        let plan = GluingPlan {
            pieces: vec![Piece::Periodic(lo.clone()), Piece::Window(z.window.clone()), Piece::Periodic(hi.clone())],
            cuts: vec![-cut, cut],
            range: (-20, 20),
            delta,
        };
        let r = glue(&plan, &e)?;
        println!(
            "cuts ±{cut}, delta {delta:.0e}: junction |v| {:.3e}, piece |v| {:.3e}, coupling {:.3}, bound holds {}",
            r.junction_velocity, r.piece_velocity, r.coupling, r.bound_holds
        );
    }
    for n in [3, 6] {
        let m = build_mediant_config(&lo, &z, upper.0, upper.1, n, &e)?;
        let polished = find_equilibrium(&m.config, &e)?;
        println!(
            "segment length {n}: type ({},{}), seed |v| {:.2e}, polish moved {:.2e}, Morse index {}",
            m.config.p(),
            m.config.q(),
            m.max_velocity,
            polished.config.distance(&m.config),
            polished.spectrum.morse_index
        );
    }
    Ok(())
}
