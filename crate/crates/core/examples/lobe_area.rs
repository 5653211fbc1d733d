//! Area of the lobe between consecutive separatrix crossings against the
//! action difference of the two homoclinic orbits through them.

use anyhow::Result;
use depinn::model::{make_builtin, BuiltinSpec, TiltedEnergy};
use depinn::twistmap::{action_area, find_intersections, hyperbolic_gaps, Branch, ManifoldOptions};

fn main() -> Result<()> {
    let k: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k })?);
    let g = hyperbolic_gaps(0, 1, &e, 24)?;
    let (lo, hi) = g.gaps.first().ok_or_else(|| anyhow::anyhow!("no hyperbolic gap"))?;
    let chord = lo.point.dist(hi.point);
    let opts = ManifoldOptions::default();
    let u = g.arc(lo, Branch::UnstableRight, 2.0 * chord, &e, &opts)?;
    let s = g.arc(hi, Branch::StableLeft, 2.0 * chord, &e, &opts)?;
    let crossings: Vec<_> = find_intersections(&u, &s)?
        .into_iter()
        .filter(|c| c.point.dist(u.base) > 0.2 * chord && c.point.dist(s.base) > 0.2 * chord)
        .collect();
    println!("{} crossings away from the base points", crossings.len());
    let (left, right) = (&g.orbits[lo.orbit].config, &g.orbits[hi.orbit].config);
    for pair in crossings.windows(2).take(2) {
        let r = action_area(&u, &s, &pair[0], &pair[1], left, right)?;
        println!(
            "lobe ({:.5}, {:.5}) -> ({:.5}, {:.5}): area {:.10e}, action difference {:.10e}, tail {:.1e}",
            pair[0].point.x, pair[0].point.p, pair[1].point.x, pair[1].point.p, r.area, r.delta_w, r.tail
        );
    }
    Ok(())
}
