//! Pinned periodic states of type `(2, 5)` under a tilt below `F_d(2/5)`:
//! the minimum and the minimax state with their Morse indices, the
//! Birkhoff check and the Aubry plot as CSV rows.

use anyhow::Result;
use depinn::config::{aubry_rows, PeriodicConfiguration};
use depinn::flow::{energy, find_equilibrium};
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let e = TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 })?, 0.0005)?;
    for offset in [0.0, 0.5 / 5.0] {
        let eq = find_equilibrium(&PeriodicConfiguration::uniform(2, 5, offset), &e)?;
        println!(
            "start offset {offset:.2}: W = {:.12}, Morse index {}, residual {:.2e}, Birkhoff {}",
            energy(&eq.config, &e),
            eq.spectrum.morse_index,
            eq.residual,
            eq.config.is_birkhoff(None).birkhoff
        );
    }
    let eq = find_equilibrium(&PeriodicConfiguration::uniform(2, 5, 0.0), &e)?;
    println!("n,x");
    for (n, x) in aubry_rows(&eq.config) {
        println!("{n},{x:.10}");
    }
    Ok(())
}
