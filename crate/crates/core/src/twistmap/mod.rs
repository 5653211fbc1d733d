//! The area-preserving twist map generated by `h_F`:
//! `p = -∂₁h_F(x, x')`, `p' = ∂₂h_F(x, x')`. Iteration, periodic orbits and
//! residues, invariant manifolds, action-area identities and verdicts on
//! invariant circles of periodic orbits.

mod action;
mod manifold;
mod orbit;
mod verdict;

use serde::{Deserialize, Serialize};

use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::{Error, Result};
use crate::model::TiltedEnergy;

pub use action::{action_area, find_intersections, homoclinic_window, ActionArea, Intersection};
pub use manifold::{grow_manifold, Branch, ManifoldArc, ManifoldOptions};
pub use orbit::{find_periodic_orbit, monodromy, OrbitClass, PeriodicOrbit};
pub use verdict::{
    circle_verdict, circle_verdict_with, hyperbolic_gaps, CircleVerdict, Connection, GapReport, HyperbolicGaps, OrbitSite,
    VerdictOptions,
};

/// A point `(x, p)` of the cylinder; `x` is kept lifted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderPoint {
    pub x: f64,
    pub p: f64,
}

impl CylinderPoint {
    pub fn new(x: f64, p: f64) -> Self {
        Self { x, p }
    }

    pub fn shifted(self, dx: f64) -> Self {
        Self { x: self.x + dx, p: self.p }
    }

    pub fn dist(self, other: Self) -> f64 {
        (self.x - other.x).hypot(self.p - other.p)
    }
}

/// Solves `g(y) = 0` for a strictly monotone `g` with slope sign `sign`,
/// starting at `y0`: the bracket is expanded geometrically and then refined
/// by safeguarded Newton.
fn solve_monotone<G: Fn(f64) -> (f64, f64)>(g: G, y0: f64, sign: f64, what: &str) -> Result<f64> {
    let (g0, _) = g(y0);
    if !g0.is_finite() {
        return Err(Error::BracketExhausted(format!("{what}: non-finite value at the start")));
    }
    if g0 == 0.0 {
        return Ok(y0);
    }
    // g increasing (sign > 0): root lies above y0 when g0 < 0.
    let up = (g0 < 0.0) == (sign > 0.0);
    let mut step = 0.1_f64.max(g0.abs());
    let (mut lo, mut hi) = (y0, y0);
    let mut found = false;
    for _ in 0..80 {
        let y = if up { y0 + step } else { y0 - step };
        let (gy, _) = g(y);
        if gy.is_finite() && (gy > 0.0) != (g0 > 0.0) {
            if up {
                hi = y;
            } else {
                lo = y;
            }
            found = true;
            break;
        }
        if up {
            lo = y;
        } else {
            hi = y;
        }
        step *= 2.0;
    }
    if !found {
        return Err(Error::BracketExhausted(format!("{what}: no sign change found")));
    }
    // Orient so that g(lo) and g(hi) have opposite signs with lo < hi.
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (gy, dg) = g(y);
        if gy == 0.0 {
            return Ok(y);
        }
        let below = (gy < 0.0) == (sign > 0.0);
        if below {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - gy / dg;
        let next = if dg.is_finite() && dg != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - y).abs() <= 1e-15 * (1.0 + y.abs()) || hi - lo <= 1e-15 * (1.0 + y.abs()) {
            return Ok(next);
        }
        y = next;
    }
    Ok(y)
}

/// One step of the map: solves `p = -h1_F(x, x')` for `x'` (monotone since
/// `h12 < 0`) and returns `(x', h2(x, x'))`.
pub fn apply(e: &TiltedEnergy, pt: CylinderPoint) -> Result<CylinderPoint> {
    let xn = solve_monotone(
        |y| {
            let d = e.eval(pt.x, y);
            (-d.h1 - pt.p, -d.h12)
        },
        pt.x + pt.p,
        1.0,
        "forward map",
    )?;
    Ok(CylinderPoint::new(xn, e.eval(pt.x, xn).h2))
}

/// Inverse step: solves `p' = h2(x, x')` for `x` and returns
/// `(x, -h1_F(x, x'))`.
pub fn inverse(e: &TiltedEnergy, pt: CylinderPoint) -> Result<CylinderPoint> {
    let xp = solve_monotone(
        |y| {
            let d = e.eval(y, pt.x);
            (d.h2 - pt.p, d.h12)
        },
        pt.x - pt.p,
        -1.0,
        "inverse map",
    )?;
    Ok(CylinderPoint::new(xp, -e.eval(xp, pt.x).h1))
}

/// Jacobian `[[∂x'/∂x, ∂x'/∂p], [∂p'/∂x, ∂p'/∂p]]` of one step at the bond
/// `(x, x')`.
pub fn step_jacobian(e: &TiltedEnergy, x: f64, xn: f64) -> [[f64; 2]; 2] {
    let d = e.h.eval(x, xn);
    let a = -d.h11 / d.h12;
    let b = -1.0 / d.h12;
    [[a, b], [d.h12 + d.h22 * a, d.h22 * b]]
}

/// Phase-space orbit of an equilibrium: `p_n = -h1_F(x_n, x_{n+1})`.
/// Accepts periodic states (sites `0..q`) and windows (sites `l..=r`).
pub trait OrbitSource {
    fn site(&self, n: i64) -> f64;
    fn orbit_range(&self) -> (i64, i64);
    fn equilibrium_residual(&self, e: &TiltedEnergy) -> f64;
}

impl OrbitSource for PeriodicConfiguration {
    fn site(&self, n: i64) -> f64 {
        self.at(n)
    }

    fn orbit_range(&self) -> (i64, i64) {
        (0, self.q() as i64 - 1)
    }

    fn equilibrium_residual(&self, e: &TiltedEnergy) -> f64 {
        crate::linalg::sup_norm(&crate::flow::rhs(self, e))
    }
}

impl OrbitSource for WindowConfiguration {
    fn site(&self, n: i64) -> f64 {
        self.at(n)
    }

    fn orbit_range(&self) -> (i64, i64) {
        (self.l(), self.r())
    }

    fn equilibrium_residual(&self, e: &TiltedEnergy) -> f64 {
        crate::linalg::sup_norm(&crate::flow::rhs_window(self, e))
    }
}

/// Residual threshold for accepting a configuration as an equilibrium.
pub const ORBIT_EQ_TOL: f64 = 1e-8;

pub fn orbit_of_config<S: OrbitSource + ?Sized>(x: &S, e: &TiltedEnergy) -> Result<Vec<CylinderPoint>> {
    let res = x.equilibrium_residual(e);
    if !(res < ORBIT_EQ_TOL) {
        return Err(Error::NotEquilibrium(res));
    }
    let (lo, hi) = x.orbit_range();
    let pts: Vec<CylinderPoint> = (lo..=hi)
        .map(|n| CylinderPoint::new(x.site(n), -e.eval(x.site(n), x.site(n + 1)).h1))
        .collect();
    for (i, pt) in pts.iter().enumerate() {
        let n = lo + i as i64;
        let next = apply(e, *pt)?;
        let expect = CylinderPoint::new(x.site(n + 1), -e.eval(x.site(n + 1), x.site(n + 2)).h1);
        if next.dist(expect) > 1e-9 * (1.0 + expect.x.abs()) + 10.0 * res {
            return Err(Error::Consistency(format!(
                "map image of site {n} misses its successor by {:.3e}",
                next.dist(expect)
            )));
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn fk(k: f64, f: f64) -> TiltedEnergy {
        TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), f).unwrap()
    }

    #[test]
    fn matches_explicit_standard_map() {
        let (k, f) = (1.3, 0.05);
        let e = fk(k, f);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let pt = CylinderPoint::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.5..1.5));
            let kick = pt.p - k / (2.0 * PI) * (2.0 * PI * pt.x).sin() - f;
            let img = apply(&e, pt).unwrap();
            assert!((img.x - (pt.x + kick)).abs() < 1e-12);
            assert!((img.p - kick).abs() < 1e-12);
            let back = inverse(&e, img).unwrap();
            assert!(back.dist(pt) < 1e-10);
        }
    }

    #[test]
    fn fixed_point_and_mane_line() {
        let e = fk(1.0, 0.0);
        let img = apply(&e, CylinderPoint::new(0.5, 0.0)).unwrap();
        assert!(img.dist(CylinderPoint::new(0.5, 0.0)) < 1e-14);
        let spec = BuiltinSpec::mane_default();
        let shape = spec.mane_shape().unwrap();
        let mane = TiltedEnergy::untilted(make_builtin(&spec).unwrap());
        for x in [0.1, 0.3, 0.62, 0.9] {
            let img = apply(&mane, CylinderPoint::new(x, 0.0)).unwrap();
            assert!((img.x - shape.lift(x).0).abs() < 1e-12);
            assert!(img.p.abs() < 1e-12);
        }
    }

    #[test]
    fn area_preserving() {
        let e = fk(0.9, 0.02);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pt = CylinderPoint::new(rng.gen_range(0.0..1.0), rng.gen_range(-1.0..1.0));
            let s = 1e-6;
            let dx = |a: CylinderPoint, b: CylinderPoint| (b.x - a.x, b.p - a.p);
            let ax = dx(apply(&e, pt.shifted(-s)).unwrap(), apply(&e, pt.shifted(s)).unwrap());
            let ap = dx(
                apply(&e, CylinderPoint::new(pt.x, pt.p - s)).unwrap(),
                apply(&e, CylinderPoint::new(pt.x, pt.p + s)).unwrap(),
            );
            let det = (ax.0 * ap.1 - ax.1 * ap.0) / (4.0 * s * s);
            assert!((det - 1.0).abs() < 1e-7, "{det}");
            let img = apply(&e, pt).unwrap();
            let j = step_jacobian(&e, pt.x, img.x);
            assert!((j[0][0] * j[1][1] - j[0][1] * j[1][0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_of_equilibrium_and_rejection() {
        let e = fk(1.0, 0.0);
        let x = PeriodicConfiguration::uniform(0, 1, 0.5);
        let pts = orbit_of_config(&x, &e).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0].dist(CylinderPoint::new(0.5, 0.0)) < 1e-14);
        let bad = PeriodicConfiguration::new(1, 2, vec![0.1, 0.3]).unwrap();
        assert!(matches!(orbit_of_config(&bad, &e), Err(Error::NotEquilibrium(_))));
    }
}
