//! Discommensurations: equilibrium heteroclinic windows, periodically
//! sliding fronts, δ-gluing and mediant constructions, and truncated Morse
//! indices.

mod front;
mod glue;
mod heteroclinic;

use serde::{Deserialize, Serialize};

use crate::config::{PeriodicConfiguration, Sites, WindowConfiguration};
use crate::error::{Error, Result};
use crate::linalg::{sturm_count, tridiagonal_max_eigenvalue};
use crate::model::TiltedEnergy;

pub use crate::flow::{hessian_spectrum_periodic, HessianSpectrum};
pub use front::{find_sliding_disc, find_sliding_disc_with, FrontVerdict, SlidingFront};
pub use glue::{build_mediant_config, build_mediant_config_multi, glue, GlueReport, GluingPlan, MediantConfig, Piece};
pub use heteroclinic::{find_equilibrium_disc, interface_center, HeteroclinicSolution};

/// Orientation of a discommensuration relative to its asymptotes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscKind {
    /// Lower state on the left, upper state on the right.
    Advancing,
    /// Upper state on the left, lower state on the right.
    Retreating,
}

impl std::str::FromStr for DiscKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "advancing" => Ok(Self::Advancing),
            "retreating" => Ok(Self::Retreating),
            other => Err(Error::InvalidParameter(format!(
                "kind must be advancing or retreating, got {other:?}"
            ))),
        }
    }
}

/// Checks that two asymptotes have the same type and a strict gap.
pub(crate) fn check_gap(xm: &PeriodicConfiguration, xp: &PeriodicConfiguration) -> Result<()> {
    if xm.p() != xp.p() || xm.q() != xp.q() {
        return Err(Error::InvalidParameter(format!(
            "asymptotes have types ({},{}) and ({},{})",
            xm.p(),
            xm.q(),
            xp.p(),
            xp.q()
        )));
    }
    if xm.values().iter().zip(xp.values()).any(|(a, b)| !(a < b)) {
        return Err(Error::InvalidParameter(
            "asymptotes must satisfy xm ≪ xp (no gap between them)".into(),
        ));
    }
    Ok(())
}

/// Truncated index of a configuration on the sites strictly between `l`
/// and `m`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TruncatedIndex {
    /// Positive eigenvalues of the Jacobi operator `A = -D²W*`.
    pub index: usize,
    /// Dimension `m - l - 1`.
    pub dimension: usize,
    /// Largest eigenvalue of `A`.
    pub spectrum_edge: f64,
}

/// Morse index of the action truncated to sites `l+1..m-1` with the outer
/// sites held fixed. The Jacobi operator has diagonal
/// `β_i = -h22(x_{i-1},x_i) - h11(x_i,x_{i+1})` and off-diagonal
/// `α_i = -h12(x_{i-1},x_i)`; its positive eigenvalues are the negative ones
/// of `D²W*`, counted by a Sturm sequence.
pub fn morse_index_truncated<S: Sites + ?Sized>(x: &S, l: i64, m: i64, e: &TiltedEnergy) -> Result<TruncatedIndex> {
    if m <= l + 1 {
        return Err(Error::InvalidParameter(format!("need m > l + 1, got l = {l}, m = {m}")));
    }
    let n = (m - l - 1) as usize;
    let mut beta = Vec::with_capacity(n);
    let mut alpha = Vec::with_capacity(n.saturating_sub(1));
    for i in (l + 1)..m {
        let left = e.h.eval(x.site(i - 1), x.site(i));
        let right = e.h.eval(x.site(i), x.site(i + 1));
        beta.push(-left.h22 - right.h11);
        if i > l + 1 {
            alpha.push(-left.h12);
        }
    }
    // Positive eigenvalues of A are the negative eigenvalues of -A.
    let neg_beta: Vec<f64> = beta.iter().map(|b| -b).collect();
    let neg_alpha: Vec<f64> = alpha.iter().map(|a| -a).collect();
    Ok(TruncatedIndex {
        index: sturm_count(&neg_beta, &neg_alpha, 0.0),
        dimension: n,
        spectrum_edge: tridiagonal_max_eigenvalue(&beta, &alpha),
    })
}

/// Whether `T_{q p}` of the window lies strictly below (advancing) or above
/// (retreating) the window on their overlap.
pub(crate) fn ordered_with_translate(w: &WindowConfiguration, p: i64, q: usize, kind: DiscKind) -> bool {
    let q = q as i64;
    let moved = w.translate(q, p);
    ((w.l() + q)..=w.r()).all(|n| {
        let (a, b) = (moved.at(n), w.at(n));
        match kind {
            DiscKind::Advancing => a < b,
            DiscKind::Retreating => a > b,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};
    use std::f64::consts::PI;

    fn fk(k: f64) -> TiltedEnergy {
        TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap())
    }

    #[test]
    fn toeplitz_maximum_has_full_index() {
        let k = 6.0;
        let x = PeriodicConfiguration::uniform(0, 1, 0.0);
        for n in 1..12_i64 {
            let idx = morse_index_truncated(&x, 0, n + 1, &fk(k)).unwrap();
            assert_eq!(idx.index, n as usize);
            let edge = (k - 2.0) + 2.0 * (PI / (n as f64 + 1.0)).cos();
            assert!((idx.spectrum_edge - edge).abs() < 1e-9);
        }
    }

    #[test]
    fn minimum_has_zero_index() {
        let x = PeriodicConfiguration::uniform(0, 1, 0.5);
        for k in [0.1, 1.0, 5.0] {
            assert_eq!(morse_index_truncated(&x, -3, 9, &fk(k)).unwrap().index, 0);
        }
    }

    #[test]
    fn single_site_window() {
        let e = fk(3.0);
        for x0 in [0.0, 0.2, 0.5] {
            let x = PeriodicConfiguration::uniform(0, 1, x0);
            let beta = -e.h.eval(x0, x0).h22 - e.h.eval(x0, x0).h11;
            let idx = morse_index_truncated(&x, 0, 2, &e).unwrap();
            assert_eq!(idx.index, usize::from(beta > 0.0));
        }
        assert!(morse_index_truncated(&PeriodicConfiguration::uniform(0, 1, 0.0), 0, 1, &e).is_err());
    }
}
