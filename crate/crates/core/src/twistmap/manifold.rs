//! Stable and unstable manifolds of hyperbolic periodic orbits, grown from
//! a linear seed by iterating a fundamental segment.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::orbit::monodromy;
use super::{apply, inverse, CylinderPoint, OrbitClass, PeriodicOrbit};
use crate::error::{Error, Result};
use crate::model::TiltedEnergy;

/// One of the four semi-manifolds of a hyperbolic point. "Right" and
/// "left" refer to the sign of the `x` component of the seed direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    UnstableRight,
    UnstableLeft,
    StableRight,
    StableLeft,
}

impl Branch {
    pub const ALL: [Branch; 4] = [
        Branch::UnstableRight,
        Branch::UnstableLeft,
        Branch::StableRight,
        Branch::StableLeft,
    ];

    pub fn is_unstable(self) -> bool {
        matches!(self, Branch::UnstableRight | Branch::UnstableLeft)
    }

    pub fn is_right(self) -> bool {
        matches!(self, Branch::UnstableRight | Branch::StableRight)
    }
}

impl FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unstable-right" => Ok(Branch::UnstableRight),
            "unstable-left" => Ok(Branch::UnstableLeft),
            "stable-right" => Ok(Branch::StableRight),
            "stable-left" => Ok(Branch::StableLeft),
            _ => Err(Error::InvalidParameter(format!(
                "unknown branch `{s}` (expected unstable-right, unstable-left, stable-right, stable-left)"
            ))),
        }
    }
}

/// Resolution and safety limits for manifold growth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldOptions {
    /// Largest distance between consecutive polyline points.
    pub max_segment: f64,
    /// Cap on the number of polyline points.
    pub max_points: usize,
    /// Seed offset per unit of `Λ - 1`, with `Λ` the expansion factor of
    /// one application of the return map.
    pub seed_scale: f64,
    /// Cap on the number of fundamental segments.
    pub max_segments: usize,
}

impl Default for ManifoldOptions {
    fn default() -> Self {
        Self {
            max_segment: 5e-3,
            max_points: 100_000,
            seed_scale: 1e-7,
            max_segments: 2000,
        }
    }
}

/// A semi-manifold as a polyline. Each point is the image of a seed on the
/// linear eigendirection: parameter `u = k + f` stands for
/// `G^k(base + ε Λ^f v)`, where `G` is the return map (forward for unstable
/// branches, backward for stable ones) and `Λ > 1` its expansion along `v`.
#[derive(Clone, Debug, Serialize)]
pub struct ManifoldArc {
    pub branch: Branch,
    pub base: CylinderPoint,
    /// Type of the base orbit.
    pub p: i64,
    pub q: usize,
    /// Map steps per application of the return map (`q`, or `2q` for
    /// reflecting multipliers).
    pub steps: usize,
    pub expansion: f64,
    pub direction: [f64; 2],
    pub epsilon: f64,
    pub params: Vec<f64>,
    pub points: Vec<CylinderPoint>,
    pub arclength: Vec<f64>,
    /// True when the requested arclength was reached.
    pub complete: bool,
    #[serde(skip)]
    energy: TiltedEnergy,
}

impl ManifoldArc {
    /// Return map `G` applied once.
    fn step(&self, z: CylinderPoint) -> Result<CylinderPoint> {
        let lift = (self.steps / self.q) as f64 * self.p as f64;
        let mut z = z;
        if self.branch.is_unstable() {
            for _ in 0..self.steps {
                z = apply(&self.energy, z)?;
                self.check_band(z)?;
            }
            Ok(z.shifted(-lift))
        } else {
            for _ in 0..self.steps {
                z = inverse(&self.energy, z)?;
                self.check_band(z)?;
            }
            Ok(z.shifted(lift))
        }
    }

    fn check_band(&self, z: CylinderPoint) -> Result<()> {
        // The spacing to the successor is determined by the momentum; a
        // point whose forward step leaves the band is outside the model.
        let (lo, hi) = self.energy.h.band();
        let next = apply(&self.energy, z)?;
        let d = next.x - z.x;
        if d < lo as f64 || d > hi as f64 {
            return Err(Error::BandEscape { site: 0, spacing: d, lo, hi });
        }
        Ok(())
    }

    /// Point with parameter `u ≥ 0`.
    pub fn eval(&self, u: f64) -> Result<CylinderPoint> {
        let k = u.floor().max(0.0);
        let f = u - k;
        let s = self.epsilon * self.expansion.powf(f);
        let mut z = CylinderPoint::new(
            self.base.x + s * self.direction[0],
            self.base.p + s * self.direction[1],
        );
        for _ in 0..k as usize {
            z = self.step(z)?;
        }
        Ok(z)
    }

    /// The same arc translated by `m` in `x` (a manifold of the translated
    /// orbit).
    pub fn shifted(&self, m: i64) -> Self {
        let mut out = self.clone();
        let d = m as f64;
        out.base = out.base.shifted(d);
        for z in &mut out.points {
            *z = z.shifted(d);
        }
        out
    }

    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }

    pub fn energy(&self) -> &TiltedEnergy {
        &self.energy
    }

    /// Distance between the image of the first seed point under `G` and the
    /// linear seed it should reproduce.
    pub fn fundamental_gap(&self) -> Result<f64> {
        let image = self.step(self.eval(0.0)?)?;
        let s = self.epsilon * self.expansion;
        let linear = CylinderPoint::new(
            self.base.x + s * self.direction[0],
            self.base.p + s * self.direction[1],
        );
        Ok(image.dist(linear))
    }

    /// Nearest point of the arc to `z`: returns `(u, distance)`. The polyline
    /// supplies a starting vertex, then golden-section search on the exact
    /// parameterisation refines it.
    pub fn project(&self, z: CylinderPoint) -> Result<(f64, f64)> {
        let (i, _) = self
            .points
            .iter()
            .enumerate()
            .map(|(i, pt)| (i, pt.dist(z)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::InvalidParameter("empty manifold arc".into()))?;
        let mut a = self.params[i.saturating_sub(1)];
        let mut b = self.params[(i + 1).min(self.params.len() - 1)];
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let dist = |u: f64| -> Result<f64> { Ok(self.eval(u)?.dist(z)) };
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (dist(c)?, dist(d)?);
        for _ in 0..120 {
            if (b - a).abs() < 1e-15 * (1.0 + b.abs()) {
                break;
            }
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = dist(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = dist(d)?;
            }
        }
        let u = 0.5 * (a + b);
        Ok((u, dist(u)?))
    }

    /// CSV with header `s,x,p` (arclength, position, momentum).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,x,p\n");
        for (s, z) in self.arclength.iter().zip(&self.points) {
            let _ = writeln!(out, "{s:.12e},{:.15e},{:.15e}", z.x, z.p);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Unstable and stable eigenpairs `(Λ, v)` of the monodromy at point
/// `index` of the orbit, normalised to unit `v`.
fn eigenpairs(m: &[[f64; 2]; 2]) -> Option<((f64, [f64; 2]), (f64, [f64; 2]))> {
    let tr = m[0][0] + m[1][1];
    let disc = tr * tr - 4.0;
    if disc <= 0.0 {
        return None;
    }
    let s = disc.sqrt();
    let (l1, l2) = (0.5 * (tr + s), 0.5 * (tr - s));
    let (lu, ls) = if l1.abs() > l2.abs() { (l1, l2) } else { (l2, l1) };
    let vec_for = |l: f64| -> [f64; 2] {
        let a = [m[0][1], l - m[0][0]];
        let b = [l - m[1][1], m[1][0]];
        let v = if a[0].hypot(a[1]) >= b[0].hypot(b[1]) { a } else { b };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    };
    Some(((lu, vec_for(lu)), (ls, vec_for(ls))))
}

/// Grows one semi-manifold of the point `index` of a hyperbolic orbit until
/// its arclength reaches `target`.
pub fn grow_manifold(
    orbit: &PeriodicOrbit,
    index: usize,
    branch: Branch,
    target: f64,
    e: &TiltedEnergy,
    opts: &ManifoldOptions,
) -> Result<ManifoldArc> {
    if !matches!(orbit.classification, OrbitClass::Hyperbolic | OrbitClass::InverseHyperbolic) {
        return Err(Error::InvalidParameter(format!(
            "manifolds need a hyperbolic orbit, got {:?} (τ = {:.3e})",
            orbit.classification, orbit.tau
        )));
    }
    if index >= orbit.q {
        return Err(Error::InvalidParameter(format!("orbit point {index} out of range 0..{}", orbit.q)));
    }
    if !(target > 0.0) || !(opts.max_segment > 0.0) {
        return Err(Error::InvalidParameter("target arclength and segment length must be positive".into()));
    }
    let m = monodromy(&orbit.config, e, index);
    let ((lu, vu), (ls, vs)) = eigenpairs(&m)
        .ok_or_else(|| Error::InvalidParameter("monodromy has no real eigenvalues".into()))?;
    let (lambda, mut v) = if branch.is_unstable() { (lu, vu) } else { (ls, vs) };
    // Reflecting multipliers flip sides each return; use the square.
    let (steps, expansion) = if lambda > 0.0 {
        (orbit.q, if branch.is_unstable() { lambda } else { 1.0 / lambda })
    } else {
        (2 * orbit.q, if branch.is_unstable() { lambda * lambda } else { 1.0 / (lambda * lambda) })
    };
    if (v[0] > 0.0) != branch.is_right() {
        v = [-v[0], -v[1]];
    }
    let epsilon = opts.seed_scale * (expansion - 1.0).min(1.0);
    let mut arc = ManifoldArc {
        branch,
        base: orbit.points[index],
        p: orbit.p,
        q: orbit.q,
        steps,
        expansion,
        direction: v,
        epsilon,
        params: Vec::new(),
        points: Vec::new(),
        arclength: Vec::new(),
        complete: false,
        energy: e.clone(),
    };
    let mut params = vec![0.0];
    let mut points = vec![arc.eval(0.0)?];
    let mut lengths = vec![arc.base.dist(points[0])];
    // Growth stops early, leaving `complete` false, when the arc leaves the
    // band of the model.
    let eval = |u: f64| -> Result<Option<CylinderPoint>> {
        match arc.eval(u) {
            Ok(z) => Ok(Some(z)),
            Err(Error::BandEscape { .. }) => Ok(None),
            Err(err) => Err(err),
        }
    };
    'grow: for k in 0..opts.max_segments {
        // One fundamental segment [k, k+1], refined by bisection in u.
        let Some(end) = eval(k as f64 + 1.0)? else { break };
        let mut stack = vec![(k as f64 + 1.0, end)];
        while let Some((u, z)) = stack.pop() {
            let (u0, z0) = (*params.last().unwrap(), *points.last().unwrap());
            if z.dist(z0) > opts.max_segment && u - u0 > 1e-12 {
                stack.push((u, z));
                let um = 0.5 * (u0 + u);
                let Some(mid) = eval(um)? else { break 'grow };
                stack.push((um, mid));
                continue;
            }
            let s = lengths.last().unwrap() + z.dist(z0);
            params.push(u);
            points.push(z);
            lengths.push(s);
            if s >= target {
                arc.complete = true;
                break 'grow;
            }
            if points.len() >= opts.max_points {
                break 'grow;
            }
        }
    }
    arc.params = params;
    arc.points = points;
    arc.arclength = lengths;
    Ok(arc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PeriodicConfiguration;
    use crate::model::{make_builtin, BuiltinSpec};
    use crate::twistmap::find_periodic_orbit;

    #[test]
    fn standard_separatrix_reaches_next_fixed_point() {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 }).unwrap());
        let orbit = find_periodic_orbit(&PeriodicConfiguration::uniform(0, 1, 0.5), &e).unwrap();
        let opts = ManifoldOptions::default();
        for branch in Branch::ALL {
            let arc = grow_manifold(&orbit, 0, branch, 1.5, &e, &opts).unwrap();
            assert!(arc.complete);
            assert!(arc.fundamental_gap().unwrap() < 1e-12);
            for w in arc.points.windows(2) {
                assert!(w[0].dist(w[1]) <= opts.max_segment + 1e-15);
            }
        }
        let arc = grow_manifold(&orbit, 0, Branch::UnstableRight, 2.2, &e, &opts).unwrap();
        let closest = arc
            .points
            .iter()
            .map(|z| z.dist(CylinderPoint::new(1.5, 0.0)))
            .fold(f64::INFINITY, f64::min);
        assert!(closest < 0.05, "{closest}");
        // Invariance: the image of an arc point lies on the arc.
        let z = arc.eval(10.3).unwrap();
        let image = apply(&e, z).unwrap();
        let (_, d) = arc.project(image).unwrap();
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn mane_stable_branch_is_the_line() {
        let spec = BuiltinSpec::mane_default();
        let e = TiltedEnergy::untilted(make_builtin(&spec).unwrap());
        let orbit = find_periodic_orbit(&PeriodicConfiguration::uniform(0, 1, 0.0), &e).unwrap();
        let arc = grow_manifold(&orbit, 0, Branch::StableRight, 0.45, &e, &ManifoldOptions::default()).unwrap();
        let b = spec.mane_shape().unwrap().interior_fixed_point();
        // Points lingering near `b` pick up rounding amplified by the
        // transverse expansion there; compare on the part clear of it.
        let worst = arc
            .points
            .iter()
            .filter(|z| z.x < b - 0.05)
            .map(|z| z.p.abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
        let last = arc.points.last().unwrap();
        assert!(last.x < b, "{last:?} {b} {}", arc.points.len());
    }
}
