//! Equilibrium discommensurations on finite windows with clamped tails.

use serde::Serialize;

use crate::config::{PeriodicConfiguration, WindowConfiguration};
use crate::error::{Error, Result};
use crate::flow::{find_equilibrium_window, integrate_window, FlowSettings, NewtonOptions};
use crate::model::TiltedEnergy;

use super::{check_gap, ordered_with_translate, DiscKind};

/// A window equilibrium connecting two periodic states.
#[derive(Clone, Debug, Serialize)]
pub struct HeteroclinicSolution {
    pub window: WindowConfiguration,
    pub kind: DiscKind,
    /// Sup-norm of the equilibrium residual on the window.
    pub residual: f64,
    /// Exponential rate at which the left tail approaches its asymptote, per site.
    pub left_decay: f64,
    /// Same for the right tail.
    pub right_decay: f64,
    /// Distances to the asymptotes shrink monotonically in the outer thirds.
    pub tails_monotone: bool,
    /// Strictly ordered against its `T_{q p}` translate in the declared sense.
    pub ordered: bool,
    /// Gaps to the asymptotes at the two window ends.
    pub boundary_gaps: (f64, f64),
    pub half_width: i64,
}

/// Largest boundary gap accepted before the window is doubled.
const TAIL_TOL: f64 = 1e-8;

/// Boundary gap beyond which the interface is taken to be held by the
/// clamped window end rather than by the substrate.
const WALL_TOL: f64 = 1e-3;

/// Finds an equilibrium discommensuration between `xm ≪ xp` on the sites
/// `-L..=L`. Advancing solutions are solved directly; retreating ones are
/// advancing solutions of the reversed energy `h(x', x)`, reflected back.
pub fn find_equilibrium_disc(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    kind: DiscKind,
    e: &TiltedEnergy,
    half_width: i64,
) -> Result<HeteroclinicSolution> {
    check_gap(xm, xp)?;
    if half_width < 5 * xm.q() as i64 {
        return Err(Error::InvalidParameter(format!(
            "half-width {half_width} must be at least 5q = {}",
            5 * xm.q()
        )));
    }
    match kind {
        DiscKind::Advancing => advancing(xm, xp, e, half_width),
        DiscKind::Retreating => {
            let s = advancing(&xm.reflect(), &xp.reflect(), &e.reversed(), half_width)?;
            let window = s.window.reflect();
            let (p, q) = (xm.p(), xm.q());
            Ok(HeteroclinicSolution {
                ordered: ordered_with_translate(&window, p, q, DiscKind::Retreating),
                window,
                kind: DiscKind::Retreating,
                residual: s.residual,
                left_decay: s.right_decay,
                right_decay: s.left_decay,
                tails_monotone: s.tails_monotone,
                boundary_gaps: (s.boundary_gaps.1, s.boundary_gaps.0),
                half_width: s.half_width,
            })
        }
    }
}

/// Smooth monotone initial guess through the gap between the asymptotes.
pub(crate) fn tanh_guess(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    half_width: i64,
    center: f64,
) -> Result<WindowConfiguration> {
    let q = xm.q() as f64;
    WindowConfiguration::from_fn(-half_width, half_width, xm.clone(), xp.clone(), |n| {
        let s = 0.5 * (1.0 + ((n as f64 - center) / (1.5 * q)).tanh());
        xm.at(n) + s * (xp.at(n) - xm.at(n))
    })
}

fn advancing(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    e: &TiltedEnergy,
    half_width: i64,
) -> Result<HeteroclinicSolution> {
    let mut l = half_width;
    let mut best: Option<HeteroclinicSolution> = None;
    let mut last_err = None;
    while l <= 16 * half_width {
        match solve_on(xm, xp, e, l) {
            Ok(sol) => {
                let done = sol.boundary_gaps.0.max(sol.boundary_gaps.1) <= TAIL_TOL;
                best = Some(sol);
                if done {
                    break;
                }
            }
            Err(err) if best.is_none() => last_err = Some(err),
            Err(_) => break,
        }
        l *= 2;
    }
    let best = best.ok_or_else(|| last_err.unwrap_or_else(|| Error::NoSolution("equilibrium discommensuration not found".into())))?;
    let gap = best.boundary_gaps.0.max(best.boundary_gaps.1);
    if gap > WALL_TOL {
        return Err(Error::NoSolution(format!(
            "interface rests against the window end (boundary gap {gap:.3e}); the tilt exceeds the pinning of this discommensuration"
        )));
    }
    Ok(best)
}

fn solve_on(
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    e: &TiltedEnergy,
    half_width: i64,
) -> Result<HeteroclinicSolution> {
    let guess = tanh_guess(xm, xp, half_width, 0.0)?;
    let opts = NewtonOptions {
        tol: 1e-12,
        max_iter: 200,
        max_step: 0.25,
    };
    let direct = find_equilibrium_window(&guess, e, &opts).ok().filter(|s| inside(&s.window, xm, xp));
    let sol = match direct {
        Some(s) => s,
        None => {
            // Let the flow settle the interface first, then polish.
            let settings = FlowSettings::default();
            let relaxed = integrate_window(&guess, e, &settings, 200.0 / e.h.c().max(1e-3))?;
            let start = relaxed.states.last().expect("nonempty trajectory");
            let s = find_equilibrium_window(start, e, &opts)?;
            if !inside(&s.window, xm, xp) {
                return Err(Error::NoSolution(
                    "iterates left the order interval between the asymptotes".into(),
                ));
            }
            s
        }
    };
    Ok(summarise(sol.window, sol.residual, xm, xp, half_width))
}

fn inside(w: &WindowConfiguration, xm: &PeriodicConfiguration, xp: &PeriodicConfiguration) -> bool {
    (w.l()..=w.r()).all(|n| {
        let v = w.at(n);
        v >= xm.at(n) - 1e-9 && v <= xp.at(n) + 1e-9
    })
}

fn summarise(
    window: WindowConfiguration,
    residual: f64,
    xm: &PeriodicConfiguration,
    xp: &PeriodicConfiguration,
    half_width: i64,
) -> HeteroclinicSolution {
    let (l, r) = (window.l(), window.r());
    let left_gap = |n: i64| (window.at(n) - xm.at(n)).abs();
    let right_gap = |n: i64| (xp.at(n) - window.at(n)).abs();
    let third = (r - l + 1) / 3;
    let (left_decay, left_mono) = tail_decay((l..l + third).map(left_gap).collect());
    let (right_decay, right_mono) = tail_decay((r - third + 1..=r).rev().map(right_gap).collect());
    let ordered = ordered_with_translate(&window, xm.p(), xm.q(), DiscKind::Advancing);
    HeteroclinicSolution {
        boundary_gaps: (left_gap(l), right_gap(r)),
        window,
        kind: DiscKind::Advancing,
        residual,
        left_decay,
        right_decay,
        tails_monotone: left_mono && right_mono,
        ordered,
        half_width,
    }
}

/// Gaps listed from the window end inward. Returns the fitted growth rate
/// per site of `ln gap` (the decay rate seen from the interface) and whether
/// the gaps increase inward, ignoring values at rounding level.
fn tail_decay(gaps: Vec<f64>) -> (f64, bool) {
    let usable: Vec<(f64, f64)> = gaps
        .iter()
        .enumerate()
        .filter(|(_, g)| **g > 1e-13)
        .map(|(i, g)| (i as f64, g.ln()))
        .collect();
    let monotone = gaps.windows(2).all(|w| w[1] >= w[0] || w[0] < 1e-12);
    if usable.len() < 2 {
        return (f64::NAN, monotone);
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|v| v.0).sum::<f64>() / n;
    let my = usable.iter().map(|v| v.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|v| (v.0 - mx) * (v.1 - my)).sum();
    let sxx: f64 = usable.iter().map(|v| (v.0 - mx).powi(2)).sum();
    (sxy / sxx, monotone)
}

/// Fractional site where the profile crosses halfway between the
/// asymptotes, from the normalised mass `Σ (x_n - xm_n) / (xp_n - xm_n)`.
pub fn interface_center(w: &WindowConfiguration, xm: &PeriodicConfiguration, xp: &PeriodicConfiguration) -> f64 {
    let mass: f64 = (w.l()..=w.r())
        .map(|n| (w.at(n) - xm.at(n)) / (xp.at(n) - xm.at(n)))
        .sum();
    w.r() as f64 + 0.5 - mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{compare_on, Comparison};
    use crate::model::{make_builtin, BuiltinSpec};

    fn fk(k: f64, f: f64) -> TiltedEnergy {
        TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap(), f).unwrap()
    }

    #[test]
    fn classical_kink_at_zero_force() {
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        let hi = PeriodicConfiguration::uniform(0, 1, 1.5);
        let s = find_equilibrium_disc(&lo, &hi, DiscKind::Advancing, &fk(1.0, 0.0), 12).unwrap();
        assert!(s.residual < 1e-10);
        assert!(s.ordered && s.tails_monotone);
        assert!(s.left_decay > 0.5 && s.right_decay > 0.5, "{} {}", s.left_decay, s.right_decay);
        // Decay rate of the tails is ln of the unstable multiplier of the fixed point.
        let mu = 1.5 + (1.25_f64).sqrt();
        assert!((s.left_decay - mu.ln()).abs() < 0.05);
    }

    #[test]
    fn retreating_by_reversal() {
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        let hi = PeriodicConfiguration::uniform(0, 1, 1.5);
        let s = find_equilibrium_disc(&lo, &hi, DiscKind::Retreating, &fk(1.0, 0.0), 12).unwrap();
        assert!(s.residual < 1e-10 && s.ordered);
        let w = &s.window;
        assert!(w.values().windows(2).all(|p| p[1] < p[0]));
        let rhs = crate::flow::rhs_window(w, &fk(1.0, 0.0));
        assert!(crate::linalg::sup_norm(&rhs) < 1e-10);
        let moved = w.translate(1, 0);
        assert_eq!(compare_on(&moved, w, w.l() + 1, w.r(), 0.0), Comparison::StrictlyGreater);
    }

    #[test]
    fn rejects_touching_asymptotes() {
        let lo = PeriodicConfiguration::uniform(0, 1, 0.5);
        assert!(find_equilibrium_disc(&lo, &lo, DiscKind::Advancing, &fk(1.0, 0.0), 12).is_err());
    }

    #[test]
    fn no_equilibrium_kink_above_its_pinning_force() {
        let e = fk(1.0, 0.05);
        let lo = crate::flow::find_equilibrium(&PeriodicConfiguration::uniform(0, 1, 0.55), &e).unwrap().config;
        let hi = lo.shifted(1.0);
        let err = find_equilibrium_disc(&lo, &hi, DiscKind::Advancing, &e, 12).unwrap_err();
        assert!(matches!(err, Error::NoSolution(_)), "{err}");
    }

    #[test]
    fn interface_center_of_step() {
        let lo = PeriodicConfiguration::uniform(0, 1, 0.0);
        let hi = PeriodicConfiguration::uniform(0, 1, 1.0);
        let w = WindowConfiguration::from_fn(-5, 5, lo.clone(), hi.clone(), |n| if n >= 2 { 1.0 } else { 0.0 }).unwrap();
        assert!((interface_center(&w, &lo, &hi) - 1.5).abs() < 1e-12);
    }
}
