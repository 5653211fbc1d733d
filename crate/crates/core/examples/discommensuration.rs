//! Equilibrium discommensurations of type `0/1` in both directions: tail
//! decay rates against the fixed-point multiplier and the truncated Morse
//! index of each.

use anyhow::Result;
use depinn::config::PeriodicConfiguration;
use depinn::disc::{find_equilibrium_disc, interface_center, morse_index_truncated, DiscKind};
use depinn::flow::find_equilibrium;
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let force: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.001);
    let e = TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 })?, force)?;
    let lo = find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.5), &e)?.config;
    let hi = lo.shifted(1.0);
    println!("F = {force}: pinned state x = {:.10}", lo.at(0));
    for kind in [DiscKind::Advancing, DiscKind::Retreating] {
        let s = find_equilibrium_disc(&lo, &hi, kind, &e, 20)?;
        let w = &s.window;
        let index = morse_index_truncated(w, w.l(), w.r(), &e)?;
        println!(
            "{kind:?}: sites [{}, {}], residual {:.2e}, centre {:.4}, decay {:.4} / {:.4}, ordered {}, index {}",
            w.l(),
            w.r(),
            s.residual,
            interface_center(w, &lo, &hi),
            s.left_decay,
            s.right_decay,
            s.ordered,
            index.index
        );
    }
    Ok(())
}
