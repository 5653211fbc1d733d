//! Mountain-pass saddle between two neighbouring minima of the double well,
//! with the barrier heights seen from each side.

use anyhow::{Context, Result};
use depinn::ioc::{find_all_equilibria, minimax};
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};

fn main() -> Result<()> {
    let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::DoubleWell { k: 0.03, b: 2.0 })?);
    let cat = find_all_equilibria(1, 2, &e, 24)?;
    let mut minima: Vec<_> = cat.with_index(0).map(|c| c.config.clone()).collect();
    minima.sort_by(|a, b| a.at(0).total_cmp(&b.at(0)));
    let (a, b) = (minima.first().context("no minimum")?, minima.get(1).context("only one minimum")?);
    println!("minima x = {:?} and {:?}", a.values(), b.values());
    let r = minimax(a, b, &e)?;
    println!(
        "saddle x = {:?}: height {:.12}, barriers {:.6e} / {:.6e}, Morse index {}, gradient {:.1e}, {} iterations",
        r.saddle.values(),
        r.height,
        r.barrier_from_a,
        r.barrier_from_b,
        r.morse_index,
        r.gradient_norm,
        r.iterations
    );
    Ok(())
}
