//! Whether the periodic orbits of one type lie on a rotational invariant
//! circle, decided from the orbit catalog and the separatrices between
//! neighbouring hyperbolic orbits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::action::{action_area, find_intersections, Intersection};
use super::manifold::{grow_manifold, Branch, ManifoldArc, ManifoldOptions};
use super::orbit::{find_periodic_orbit, OrbitClass, PeriodicOrbit};
use super::CylinderPoint;
use crate::config::PeriodicConfiguration;
use crate::error::{Error, Result};
use crate::ioc::find_all_equilibria;
use crate::model::TiltedEnergy;

/// Controls for [`circle_verdict_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerdictOptions {
    /// Largest arclength-normalised distance between two arcs that still
    /// counts as coincidence.
    pub coincide_tol: f64,
    /// Multistart grid density for the orbit catalog.
    pub grid_density: usize,
    /// Number of distinct degenerate orbits that signals a band of
    /// periodic orbits.
    pub band_count: usize,
    /// Arc length grown per branch, in units of the gap chord.
    pub arc_factor: f64,
    pub manifold: ManifoldOptions,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            coincide_tol: 1e-9,
            grid_density: 16,
            band_count: 8,
            arc_factor: 2.0,
            manifold: ManifoldOptions::default(),
        }
    }
}

/// Relation between the two arcs tested in one direction of one gap.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Connection {
    /// The arcs agree to within the coincidence tolerance.
    Coincide { distance: f64 },
    /// The arcs cross transversally; the lobe between the first two
    /// primary crossings has the given area, when it could be computed.
    Split { distance: f64, crossings: usize, lobe_area: Option<f64> },
    /// Neither coincidence nor a crossing was detected.
    Unresolved { distance: f64 },
}

impl Connection {
    pub fn coincides(&self) -> bool {
        matches!(self, Connection::Coincide { .. })
    }
}

/// Separatrix tests across the gap between two neighbouring hyperbolic
/// points `lo < hi` on the circle candidate.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport {
    pub lo: CylinderPoint,
    pub hi: CylinderPoint,
    /// Unstable-right of `lo` against stable-left of `hi`.
    pub advancing: Connection,
    /// Unstable-left of `hi` against stable-right of `lo`.
    pub retreating: Connection,
}

/// Outcome of [`circle_verdict`].
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum CircleVerdict {
    /// A band of degenerate periodic orbits forms the circle.
    CircleOfPeriodic { orbits: usize },
    /// Every gap is bridged by a connection running to the right.
    CircleWithAdvancing { gaps: Vec<GapReport> },
    /// Every gap is bridged by a connection running to the left.
    CircleWithRetreating { gaps: Vec<GapReport> },
    /// Every gap is bridged, in both directions across the circle.
    MixedCircle { gaps: Vec<GapReport> },
    /// Some gap has both separatrix pairs split transversally.
    NoCircle { lobe_area: Option<f64>, gaps: Vec<GapReport> },
    /// The separatrix tests were inconclusive.
    Undetermined { reason: String, lobe_area: Option<f64>, gaps: Vec<GapReport> },
}

impl CircleVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            CircleVerdict::CircleOfPeriodic { .. } => "CircleOfPeriodic",
            CircleVerdict::CircleWithAdvancing { .. } => "CircleWithAdvancing",
            CircleVerdict::CircleWithRetreating { .. } => "CircleWithRetreating",
            CircleVerdict::MixedCircle { .. } => "MixedCircle",
            CircleVerdict::NoCircle { .. } => "NoCircle",
            CircleVerdict::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn gaps(&self) -> &[GapReport] {
        match self {
            CircleVerdict::CircleOfPeriodic { .. } => &[],
            CircleVerdict::CircleWithAdvancing { gaps }
            | CircleVerdict::CircleWithRetreating { gaps }
            | CircleVerdict::MixedCircle { gaps }
            | CircleVerdict::NoCircle { gaps, .. }
            | CircleVerdict::Undetermined { gaps, .. } => gaps,
        }
    }
}

pub fn circle_verdict(p: i64, q: usize, e: &TiltedEnergy) -> Result<CircleVerdict> {
    circle_verdict_with(p, q, e, &VerdictOptions::default())
}

/// One point of a hyperbolic orbit reduced into the reference period.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitSite {
    /// Position in the orbit list of [`HyperbolicGaps`].
    pub orbit: usize,
    /// Point index within the orbit.
    pub index: usize,
    /// Lift taking the orbit point into the reference period.
    pub shift: i64,
    pub point: CylinderPoint,
}

/// Hyperbolic orbits of one type and the consecutive pairs of their points
/// over one period, in increasing `x`.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicGaps {
    pub orbits: Vec<PeriodicOrbit>,
    pub gaps: Vec<(OrbitSite, OrbitSite)>,
}

impl HyperbolicGaps {
    /// The arc leaving `site` along `branch`, lifted into the reference
    /// period.
    pub fn arc(&self, site: &OrbitSite, branch: Branch, target: f64, e: &TiltedEnergy, opts: &ManifoldOptions) -> Result<ManifoldArc> {
        Ok(grow_manifold(&self.orbits[site.orbit], site.index, branch, target, e, opts)?.shifted(site.shift))
    }
}

/// Finds the non-degenerate hyperbolic orbits of type `(p, q)` from a
/// multistart catalog and pairs up neighbouring orbit points.
pub fn hyperbolic_gaps(p: i64, q: usize, e: &TiltedEnergy, grid_density: usize) -> Result<HyperbolicGaps> {
    let catalog = find_all_equilibria(p, q, e, grid_density)?;
    let orbits: Vec<PeriodicOrbit> = catalog
        .orbits()
        .iter()
        .filter(|c| !c.degenerate)
        .filter_map(|c| find_periodic_orbit(&c.config, e).ok())
        .filter(|o| o.classification == OrbitClass::Hyperbolic)
        .collect();
    Ok(HyperbolicGaps { gaps: pair_sites(&orbits), orbits })
}

fn pair_sites(orbits: &[PeriodicOrbit]) -> Vec<(OrbitSite, OrbitSite)> {
    let Some(first) = orbits.first() else { return Vec::new() };
    let x_ref = first.points[0].x.floor();
    let mut sites: Vec<OrbitSite> = Vec::new();
    for (oi, o) in orbits.iter().enumerate() {
        for (index, z) in o.points.iter().enumerate() {
            let shift = -(z.x - x_ref).floor() as i64;
            let point = z.shifted(shift as f64);
            if !sites.iter().any(|s| s.point.dist(point) < 1e-9) {
                sites.push(OrbitSite { orbit: oi, index, shift, point });
            }
        }
    }
    sites.sort_by(|a, b| a.point.x.total_cmp(&b.point.x));
    let n = sites.len();
    (0..n)
        .map(|i| {
            let lo = sites[i].clone();
            let mut hi = sites[(i + 1) % n].clone();
            if i + 1 == n {
                hi.shift += 1;
                hi.point = hi.point.shifted(1.0);
            }
            (lo, hi)
        })
        .collect()
}

/// Catalogs the type-`(p, q)` orbits of the untilted map. A band of
/// degenerate orbits gives [`CircleVerdict::CircleOfPeriodic`]; otherwise
/// the hyperbolic orbit points, sorted over one period, are the circle
/// candidate and each gap between neighbours is tested for a separatrix
/// connection in either direction.
pub fn circle_verdict_with(p: i64, q: usize, e: &TiltedEnergy, opts: &VerdictOptions) -> Result<CircleVerdict> {
    if e.force != 0.0 {
        return Err(Error::InvalidParameter("the circle verdict needs the untilted energy".into()));
    }
    let catalog = find_all_equilibria(p, q, e, opts.grid_density)?;
    let orbits = catalog.orbits();
    let degenerate: Vec<&PeriodicConfiguration> =
        catalog.entries.iter().filter(|c| c.degenerate).map(|c| &c.config).collect();
    if degenerate.len() >= opts.band_count && is_graph(&degenerate) {
        return Ok(CircleVerdict::CircleOfPeriodic { orbits: degenerate.len() });
    }
    let hyperbolic: Vec<PeriodicOrbit> = orbits
        .iter()
        .filter(|c| !c.degenerate)
        .filter_map(|c| find_periodic_orbit(&c.config, e).ok())
        .filter(|o| o.classification == OrbitClass::Hyperbolic)
        .collect();
    if hyperbolic.is_empty() {
        return Ok(CircleVerdict::Undetermined {
            reason: "no hyperbolic orbit of this type".into(),
            lobe_area: None,
            gaps: Vec::new(),
        });
    }
    let pairs = pair_sites(&hyperbolic);
    let gaps: Vec<GapReport> = pairs
        .par_iter()
        .map(|(lo, hi)| test_gap(&hyperbolic, lo, hi, e, opts))
        .collect::<Result<Vec<_>>>()?;

    let all_bridged = gaps.iter().all(|g| g.advancing.coincides() || g.retreating.coincides());
    let lobe = gaps
        .iter()
        .flat_map(|g| [&g.advancing, &g.retreating])
        .filter_map(|c| match c {
            Connection::Split { lobe_area: Some(a), .. } => Some(a.abs()),
            _ => None,
        })
        .fold(None, |m: Option<f64>, a| Some(m.map_or(a, |m| m.max(a))));
    if all_bridged {
        let adv = gaps.iter().all(|g| g.advancing.coincides());
        let ret = gaps.iter().all(|g| g.retreating.coincides());
        return Ok(match (adv, ret) {
            (true, false) => CircleVerdict::CircleWithAdvancing { gaps },
            (false, true) => CircleVerdict::CircleWithRetreating { gaps },
            _ => CircleVerdict::MixedCircle { gaps },
        });
    }
    let broken = gaps.iter().any(|g| {
        matches!(g.advancing, Connection::Split { .. }) && matches!(g.retreating, Connection::Split { .. })
    });
    if broken {
        Ok(CircleVerdict::NoCircle { lobe_area: lobe, gaps })
    } else {
        Ok(CircleVerdict::Undetermined {
            reason: "a gap has neither a coincident nor a transversally split separatrix pair".into(),
            lobe_area: lobe,
            gaps,
        })
    }
}

/// True when the configurations are pairwise strictly ordered, so that
/// they lie on one graph over the diagonal.
fn is_graph(configs: &[&PeriodicConfiguration]) -> bool {
    let mut sorted: Vec<&PeriodicConfiguration> = configs.to_vec();
    sorted.sort_by(|a, b| a.values()[0].total_cmp(&b.values()[0]));
    let below = |a: &PeriodicConfiguration, b: &PeriodicConfiguration| {
        a.values().iter().zip(b.values()).all(|(x, y)| x < y)
    };
    sorted.windows(2).all(|w| below(w[0], w[1]))
        && sorted.last().map_or(true, |l| below(l, &sorted[0].shifted(1.0)))
}

fn branch_arc(
    orbits: &[PeriodicOrbit],
    site: &OrbitSite,
    branch: Branch,
    target: f64,
    e: &TiltedEnergy,
    opts: &VerdictOptions,
) -> Result<ManifoldArc> {
    Ok(grow_manifold(&orbits[site.orbit], site.index, branch, target, e, &opts.manifold)?.shifted(site.shift))
}

fn test_gap(orbits: &[PeriodicOrbit], lo: &OrbitSite, hi: &OrbitSite, e: &TiltedEnergy, opts: &VerdictOptions) -> Result<GapReport> {
    let chord = lo.point.dist(hi.point);
    let target = opts.arc_factor * chord;
    let left = orbits[lo.orbit].config.clone();
    let right = orbits[hi.orbit].config.clone();
    let advancing = {
        let u = branch_arc(orbits, lo, Branch::UnstableRight, target, e, opts)?;
        let s = branch_arc(orbits, hi, Branch::StableLeft, target, e, opts)?;
        compare(&u, &s, chord, &left, &right, opts)?
    };
    let retreating = {
        let u = branch_arc(orbits, hi, Branch::UnstableLeft, target, e, opts)?;
        let s = branch_arc(orbits, lo, Branch::StableRight, target, e, opts)?;
        compare(&u, &s, chord, &right, &left, opts)?
    };
    Ok(GapReport { lo: lo.point, hi: hi.point, advancing, retreating })
}

/// Largest distance from the middle part of `u` (arclength between 10% and
/// 70% of the chord) to the arc `s`, divided by the chord; then, if the
/// arcs are apart, a search for transverse crossings away from both ends.
fn compare(
    u: &ManifoldArc,
    s: &ManifoldArc,
    chord: f64,
    left: &PeriodicConfiguration,
    right: &PeriodicConfiguration,
    opts: &VerdictOptions,
) -> Result<Connection> {
    let mut distance: f64 = 0.0;
    for (z, len) in u.points.iter().zip(&u.arclength) {
        if *len < 0.1 * chord || *len > 0.7 * chord {
            continue;
        }
        let (_, d) = s.project(*z)?;
        distance = distance.max(d / chord);
    }
    if distance < opts.coincide_tol {
        return Ok(Connection::Coincide { distance });
    }
    let crossings: Vec<Intersection> = find_intersections(u, s)?
        .into_iter()
        .filter(|x| x.point.dist(u.base) > 0.2 * chord && x.point.dist(s.base) > 0.2 * chord)
        .collect();
    if crossings.is_empty() {
        return Ok(Connection::Unresolved { distance });
    }
    let lobe_area = if crossings.len() >= 2 {
        action_area(u, s, &crossings[0], &crossings[1], left, right).ok().map(|a| a.area)
    } else {
        None
    };
    Ok(Connection::Split { distance, crossings: crossings.len(), lobe_area })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};

    #[test]
    fn standard_map_separatrices_split() {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 }).unwrap());
        let v = circle_verdict(0, 1, &e).unwrap();
        match &v {
            CircleVerdict::NoCircle { lobe_area: Some(a), gaps } => {
                assert!(*a > 1e-4, "{a}");
                assert_eq!(gaps.len(), 1);
            }
            other => panic!("{}", other.name()),
        }
    }

    #[test]
    fn free_chain_is_a_circle_of_periodic_orbits() {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 0.0 }).unwrap());
        for (p, q) in [(0, 1), (1, 2), (1, 3)] {
            let v = circle_verdict(p, q, &e).unwrap();
            assert_eq!(v.name(), "CircleOfPeriodic", "({p}, {q})");
        }
    }

    #[test]
    fn mane_map_has_a_mixed_circle() {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::mane_default()).unwrap());
        let v = circle_verdict(0, 1, &e).unwrap();
        assert_eq!(v.name(), "MixedCircle", "{v:?}");
        let gaps = v.gaps();
        assert_eq!(gaps.len(), 2);
        assert!(gaps[0].retreating.coincides() && gaps[1].advancing.coincides());
    }

    #[test]
    fn tilted_energy_rejected() {
        let e = TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 }).unwrap(), 0.01).unwrap();
        assert!(circle_verdict(0, 1, &e).is_err());
    }
}
