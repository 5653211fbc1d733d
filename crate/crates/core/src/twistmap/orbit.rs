//! Periodic orbits of the twist map and their residue quantity
//! `τ = λ + 1/λ - 2`, computed from the action Hessian and from the
//! monodromy matrix.

use serde::{Deserialize, Serialize};

use super::{apply, orbit_of_config, step_jacobian, CylinderPoint};
use crate::config::PeriodicConfiguration;
use crate::error::{Error, Result};
use crate::flow::{find_equilibrium, hessian_periodic, Equilibrium};
use crate::model::TiltedEnergy;

/// Threshold on `|τ|` and `|τ + 4|` below which an orbit counts as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-10;

/// Linear stability type read off the residue quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitClass {
    Hyperbolic,
    Elliptic,
    Parabolic,
    InverseHyperbolic,
}

impl OrbitClass {
    pub fn from_tau(tau: f64) -> Self {
        if tau.abs() <= PARABOLIC_TOL || (tau + 4.0).abs() <= PARABOLIC_TOL {
            OrbitClass::Parabolic
        } else if tau > 0.0 {
            OrbitClass::Hyperbolic
        } else if tau > -4.0 {
            OrbitClass::Elliptic
        } else {
            OrbitClass::InverseHyperbolic
        }
    }
}

/// A type-`(p, q)` periodic orbit: `Φ^q(z) = z + (p, 0)` for each point.
#[derive(Clone, Debug, Serialize)]
pub struct PeriodicOrbit {
    pub p: i64,
    pub q: usize,
    pub config: PeriodicConfiguration,
    pub points: Vec<CylinderPoint>,
    /// `det D²W / ∏(-h12)`.
    pub tau: f64,
    /// `tr M - 2` with `M` the monodromy of the first point.
    pub tau_monodromy: f64,
    pub classification: OrbitClass,
    /// Eigenvalues of the monodromy when real, ordered by modulus.
    pub multipliers: Option<(f64, f64)>,
    /// Largest `|Φ^q(z) - (p, 0) - z|` over the points.
    pub closure_error: f64,
}

/// Product `DΦ` along the orbit starting at point `start`, over `q` steps.
pub fn monodromy(config: &PeriodicConfiguration, e: &TiltedEnergy, start: usize) -> [[f64; 2]; 2] {
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for j in 0..config.q() as i64 {
        let n = start as i64 + j;
        let d = step_jacobian(e, config.at(n), config.at(n + 1));
        m = mul(&d, &m);
    }
    m
}

pub(crate) fn mul(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Residue quantity from the periodic action Hessian,
/// `det D²W / ∏(-h12)` over the `q` bonds of one period.
fn tau_from_determinant(config: &PeriodicConfiguration, e: &TiltedEnergy) -> f64 {
    let det = hessian_periodic(config, &e.h).determinant();
    let prod: f64 = (0..config.q() as i64)
        .map(|n| -e.h.eval(config.at(n), config.at(n + 1)).h12)
        .product();
    det / prod
}

/// Lifts an equilibrium to a periodic orbit and classifies it.
pub fn periodic_orbit_from_equilibrium(eq: &Equilibrium, e: &TiltedEnergy) -> Result<PeriodicOrbit> {
    let config = eq.config.clone();
    let (p, q) = (config.p(), config.q());
    let points = orbit_of_config(&config, e)?;
    let tau = tau_from_determinant(&config, e);
    let m = monodromy(&config, e, 0);
    let trace = m[0][0] + m[1][1];
    let tau_monodromy = trace - 2.0;
    if (tau - tau_monodromy).abs() > 1e-8 * tau.abs().max(1.0) {
        return Err(Error::Consistency(format!(
            "residue mismatch on ({p},{q}) orbit: determinant {tau:.12e}, monodromy {tau_monodromy:.12e}"
        )));
    }
    let disc = trace * trace - 4.0;
    let multipliers = (disc >= 0.0).then(|| {
        let s = disc.sqrt();
        let (a, b) = (0.5 * (trace - s), 0.5 * (trace + s));
        if a.abs() <= b.abs() {
            (a, b)
        } else {
            (b, a)
        }
    });
    let mut closure_error: f64 = 0.0;
    for pt in &points {
        let mut z = *pt;
        for _ in 0..q {
            z = apply(e, z)?;
        }
        closure_error = closure_error.max(z.shifted(-(p as f64)).dist(*pt));
    }
    Ok(PeriodicOrbit {
        p,
        q,
        config,
        points,
        tau,
        tau_monodromy,
        classification: OrbitClass::from_tau(tau),
        multipliers,
        closure_error,
    })
}

/// Newton for the type-`(p, q)` equilibrium from `guess`, then lift.
pub fn find_periodic_orbit(guess: &PeriodicConfiguration, e: &TiltedEnergy) -> Result<PeriodicOrbit> {
    let eq = find_equilibrium(guess, e)?;
    periodic_orbit_from_equilibrium(&eq, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};

    fn fk(k: f64) -> TiltedEnergy {
        TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap())
    }

    #[test]
    fn standard_fixed_points() {
        for k in [0.3, 1.0, 2.5, 5.0] {
            let e = fk(k);
            let o = find_periodic_orbit(&PeriodicConfiguration::uniform(0, 1, 0.02), &e).unwrap();
            assert!(o.config.values()[0].abs() < 1e-12);
            assert!((o.tau + k).abs() < 1e-8);
            let expect = if k < 4.0 { OrbitClass::Elliptic } else { OrbitClass::InverseHyperbolic };
            assert_eq!(o.classification, expect);
            let o = find_periodic_orbit(&PeriodicConfiguration::uniform(0, 1, 0.48), &e).unwrap();
            assert!((o.tau - k).abs() < 1e-8);
            assert_eq!(o.classification, OrbitClass::Hyperbolic);
            assert!(o.closure_error < 1e-10);
        }
    }

    #[test]
    fn determinant_matches_monodromy_on_longer_orbits() {
        let e = fk(1.4);
        for (p, q) in [(1, 2), (1, 3), (2, 5), (3, 7)] {
            for off in [0.0, 0.5 / q as f64] {
                let o = find_periodic_orbit(&PeriodicConfiguration::uniform(p, q, off), &e).unwrap();
                assert!((o.tau - o.tau_monodromy).abs() < 1e-8 * o.tau.abs().max(1.0));
                assert!(o.closure_error < 1e-10, "{}", o.closure_error);
            }
        }
    }

    #[test]
    fn mane_residue() {
        let spec = BuiltinSpec::mane_default();
        let shape = spec.mane_shape().unwrap();
        let e = TiltedEnergy::untilted(make_builtin(&spec).unwrap());
        let b = shape.interior_fixed_point();
        for x in [0.0, b] {
            let o = find_periodic_orbit(&PeriodicConfiguration::uniform(0, 1, x), &e).unwrap();
            let g1 = shape.lift(x).1;
            assert!((o.tau - (1.0 - g1).powi(2) / g1).abs() < 1e-8, "{} at {x}", o.tau);
        }
    }
}
