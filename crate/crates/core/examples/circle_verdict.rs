//! Invariant-circle verdicts of type `(0, 1)`: the split separatrices of the
//! standard chain against the connected ones of the Mañé example.

use anyhow::Result;
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};
use depinn::twistmap::circle_verdict;

fn main() -> Result<()> {
    for spec in [BuiltinSpec::StandardFk { k: 1.0 }, BuiltinSpec::mane_default()] {
        let e = TiltedEnergy::untilted(make_builtin(&spec)?);
        let v = circle_verdict(0, 1, &e)?;
        println!("{spec:?}: {}", v.name());
        for g in v.gaps() {
            println!("  gap x in [{:.6}, {:.6}]: advancing {:?}", g.lo.x, g.hi.x, g.advancing);
            println!("  {:>30} retreating {:?}", "", g.retreating);
        }
    }
    Ok(())
}
