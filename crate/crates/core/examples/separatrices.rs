//! The four separatrix branches around one gap between neighbouring
//! hyperbolic points of type `(0, 1)`, with their lengths and expansion.

use anyhow::Result;
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};
use depinn::twistmap::{hyperbolic_gaps, Branch, ManifoldOptions};

fn main() -> Result<()> {
    let k: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k })?);
    let g = hyperbolic_gaps(0, 1, &e, 24)?;
    let (lo, hi) = g.gaps.first().ok_or_else(|| anyhow::anyhow!("no hyperbolic gap"))?;
    let chord = lo.point.dist(hi.point);
    println!("gap from x = {:.6} to x = {:.6}, chord {chord:.6}", lo.point.x, hi.point.x);
    let opts = ManifoldOptions::default();
    for (site, branch) in [
        (lo, Branch::UnstableRight),
        (hi, Branch::StableLeft),
        (hi, Branch::UnstableLeft),
        (lo, Branch::StableRight),
    ] {
        let arc = g.arc(site, branch, 2.0 * chord, &e, &opts)?;
        let end = arc.points.last().expect("arc has points");
        println!(
            "{branch:?}: {} points, length {:.4}, expansion {:.6}, ends at ({:.6}, {:.6})",
            arc.points.len(),
            arc.length(),
            arc.expansion,
            end.x,
            end.p
        );
    }
    Ok(())
}
