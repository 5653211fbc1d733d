//! Invariant ordered circles of type `(p, q)`: equilibrium catalogs,
//! construction from saddle descents, verification, and minimax saddles.

mod circle;
mod minimax;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::PeriodicConfiguration;
use crate::error::{Error, Result};
use crate::flow::{energy, find_equilibrium_with, NewtonOptions};
use crate::model::TiltedEnergy;

pub use circle::{
    build_ioc, build_ioc_with, verify_ioc, CircleSource, IocOptions, IocReport, OrderedCircleSample, TANGENCY_TOL,
};
pub use minimax::{minimax, minimax_with, MinimaxOptions, MinimaxResult};

/// Sup-distance below which two equilibria are merged.
pub const DEDUP_TOL: f64 = 1e-8;

/// One critical point of `W_{p,q}`.
#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    /// Representative with `x_0 ∈ [0, 1)`.
    pub config: PeriodicConfiguration,
    pub morse_index: usize,
    pub degenerate: bool,
    /// `W_{p,q}` including the tilt.
    pub energy: f64,
    pub residual: f64,
}

/// Equilibria of type `(p, q)` modulo the diagonal translation `T_{0 1}`.
#[derive(Clone, Debug, Serialize)]
pub struct EquilibriumCatalog {
    pub p: i64,
    pub q: usize,
    pub entries: Vec<CatalogEntry>,
    /// Number of Newton starts and how many converged.
    pub starts: usize,
    pub converged: usize,
}

impl EquilibriumCatalog {
    pub fn with_index(&self, index: usize) -> impl Iterator<Item = &CatalogEntry> {
        self.entries.iter().filter(move |c| !c.degenerate && c.morse_index == index)
    }

    pub fn minima(&self) -> impl Iterator<Item = &CatalogEntry> {
        self.with_index(0)
    }

    /// Representatives modulo every lattice translation `T_{j k}`.
    pub fn orbits(&self) -> Vec<&CatalogEntry> {
        let mut out: Vec<&CatalogEntry> = Vec::new();
        for c in &self.entries {
            if !out.iter().any(|o| o.config.orbit_distance(&c.config) < DEDUP_TOL) {
                out.push(c);
            }
        }
        out
    }
}

/// Representative of the `T_{0 1}` class with `x_0 ∈ [0, 1)`.
pub(crate) fn normalise(x: &PeriodicConfiguration) -> PeriodicConfiguration {
    let k = x.values()[0].floor();
    x.shifted(-k)
}

fn same_class(a: &PeriodicConfiguration, b: &PeriodicConfiguration) -> bool {
    [-1.0, 0.0, 1.0].iter().any(|d| a.shifted(*d).distance(b) < DEDUP_TOL)
}

/// Multistart Newton over a grid: `x_0 = i/N` and
/// `x_n = x_0 + n p/q + (j_n/N - 1/2)` for `n ≥ 1`, with `N = grid_density`.
pub fn find_all_equilibria(p: i64, q: usize, e: &TiltedEnergy, grid_density: usize) -> Result<EquilibriumCatalog> {
    if grid_density < 4 {
        return Err(Error::InvalidParameter(format!(
            "grid density must be at least 4, got {grid_density}"
        )));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("q must be positive".into()));
    }
    let n = grid_density;
    let total = n.checked_pow(q as u32).filter(|t| *t <= 2_000_000).ok_or_else(|| {
        Error::InvalidParameter(format!("grid of {n}^{q} starts is too large"))
    })?;
    let omega = p as f64 / q as f64;
    let opts = NewtonOptions { tol: 1e-12, max_iter: 60, max_step: 0.1 };
    let found: Vec<(PeriodicConfiguration, f64)> = (0..total)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rest = idx;
            let mut x = vec![0.0; q];
            for (k, slot) in x.iter_mut().enumerate() {
                let digit = rest % n;
                rest /= n;
                *slot = if k == 0 {
                    digit as f64 / n as f64
                } else {
                    k as f64 * omega + digit as f64 / n as f64 - 0.5
                };
            }
            for k in 1..q {
                x[k] += x[0];
            }
            let start = PeriodicConfiguration::new(p, q, x).ok()?;
            let eq = find_equilibrium_with(&start, e, &opts).ok()?;
            (eq.residual < 1e-10).then(|| (normalise(&eq.config), eq.residual))
        })
        .collect();
    let converged = found.len();
    let mut entries: Vec<CatalogEntry> = Vec::new();
    for (config, residual) in found {
        if entries.iter().any(|c| same_class(&c.config, &config)) {
            continue;
        }
        let spectrum = crate::flow::hessian_spectrum_periodic(&config, e);
        entries.push(CatalogEntry {
            energy: energy(&config, e),
            morse_index: spectrum.morse_index,
            degenerate: spectrum.degenerate,
            config,
            residual,
        });
    }
    entries.sort_by(|a, b| {
        a.morse_index
            .cmp(&b.morse_index)
            .then(a.config.values()[0].total_cmp(&b.config.values()[0]))
    });
    Ok(EquilibriumCatalog { p, q, entries, starts: total, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};

    #[test]
    fn standard_single_site_catalog() {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 }).unwrap());
        let cat = find_all_equilibria(0, 1, &e, 16).unwrap();
        assert_eq!(cat.entries.len(), 2);
        let min = cat.minima().next().unwrap();
        assert!((min.config.values()[0] - 0.5).abs() < 1e-10);
        let max = cat.with_index(1).next().unwrap();
        assert!(max.config.values()[0].abs() < 1e-10);
    }

    #[test]
    fn anti_integrable_limit_combinations() {
        // At tiny coupling every choice of on-site critical points per site
        // continues to an equilibrium.
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::DoubleWell { k: 1e-4, b: 2.0 }).unwrap());
        let cat = find_all_equilibria(1, 2, &e, 24).unwrap();
        let crit = [0.0, 1.0 / 6.0, 0.5, 5.0 / 6.0];
        let near = |v: f64, c: f64| {
            let u = v - v.floor();
            (u - c).abs().min((u - c - 1.0).abs()) < 1e-3
        };
        for c in &cat.entries {
            for v in c.config.values() {
                assert!(crit.iter().any(|c| near(*v, *c)), "{v}");
            }
        }
        for c0 in crit {
            for c1 in crit {
                assert!(
                    cat.entries.iter().any(|c| near(c.config.values()[0], c0) && near(c.config.values()[1], c1)),
                    "missing ({c0}, {c1})"
                );
            }
        }
    }
}
