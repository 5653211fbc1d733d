//! Mountain-pass saddles between two minima by a climbing-image string.

use serde::{Deserialize, Serialize};

use super::DEDUP_TOL;
use crate::config::PeriodicConfiguration;
use crate::error::{Error, Result};
use crate::flow::{energy, find_equilibrium_with, hessian_periodic, hessian_spectrum_periodic, rhs_periodic_into, NewtonOptions};
use crate::linalg::{sup_norm, symmetric_eigen};
use crate::model::TiltedEnergy;

/// Controls for [`minimax_with`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimaxOptions {
    /// Number of string nodes including both ends.
    pub nodes: usize,
    pub max_iter: usize,
    /// Sup-norm of the climbing node's projected force at which the string
    /// hands over to Newton.
    pub switch_tol: f64,
    /// Residual required of the polished saddle.
    pub tol: f64,
    /// Iterations of plain string relaxation before the highest node
    /// starts climbing.
    pub warmup: usize,
    /// Optional intermediate configuration the initial string passes
    /// through; selects the homotopy class of the path.
    pub via: Option<Vec<f64>>,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        Self { nodes: 33, max_iter: 200_000, switch_tol: 1e-7, tol: 1e-9, warmup: 200, via: None }
    }
}

/// Highest point of a relaxed path between two minima.
#[derive(Clone, Debug, Serialize)]
pub struct MinimaxResult {
    pub saddle: PeriodicConfiguration,
    /// `W_{p,q}` at the saddle.
    pub height: f64,
    /// `height - W(min_a)` and `height - W(min_b)`.
    pub barrier_from_a: f64,
    pub barrier_from_b: f64,
    /// Morse index at the saddle; anything other than 1 is a warning sign.
    pub morse_index: usize,
    pub gradient_norm: f64,
    /// Relaxed string, ends included.
    pub string: Vec<Vec<f64>>,
    pub iterations: usize,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Resamples a polyline at `n` points equally spaced in arclength.
fn equal_arclength(points: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    let mut cum = vec![0.0];
    for w in points.windows(2) {
        cum.push(cum.last().unwrap() + dist(&w[0], &w[1]));
    }
    let total = *cum.last().unwrap();
    if !(total > 1e-12) {
        return Err(Error::NoSolution("string collapsed to a point".into()));
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let target = total * i as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { ((target - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(points[seg].iter().zip(&points[seg + 1]).map(|(a, b)| a + t * (b - a)).collect());
    }
    Ok(out)
}

fn check_minimum(x: &PeriodicConfiguration, e: &TiltedEnergy, label: &str) -> Result<()> {
    let mut r = vec![0.0; x.q()];
    rhs_periodic_into(e, x.p(), x.values(), &mut r);
    if sup_norm(&r) > 1e-8 {
        return Err(Error::InvalidParameter(format!("{label} is not an equilibrium (residual {:.2e})", sup_norm(&r))));
    }
    let spectrum = hessian_spectrum_periodic(x, e);
    if spectrum.morse_index != 0 {
        return Err(Error::InvalidParameter(format!(
            "{label} has Morse index {}, expected a minimum",
            spectrum.morse_index
        )));
    }
    Ok(())
}

pub fn minimax(
    min_a: &PeriodicConfiguration,
    min_b: &PeriodicConfiguration,
    e: &TiltedEnergy,
) -> Result<MinimaxResult> {
    minimax_with(min_a, min_b, e, &MinimaxOptions::default())
}

/// Relaxes a string of configurations from `min_a` to `min_b`: interior
/// nodes follow the flow and are redistributed evenly in arclength, and
/// after a warm-up the highest node climbs along the string tangent. The
/// climbing node is polished by Newton into a critical point.
pub fn minimax_with(
    min_a: &PeriodicConfiguration,
    min_b: &PeriodicConfiguration,
    e: &TiltedEnergy,
    opts: &MinimaxOptions,
) -> Result<MinimaxResult> {
    if min_a.p() != min_b.p() || min_a.q() != min_b.q() {
        return Err(Error::InvalidParameter("minima must share the type (p, q)".into()));
    }
    if min_a.distance(min_b) < DEDUP_TOL {
        return Err(Error::InvalidParameter("minimax needs two distinct minima".into()));
    }
    if opts.nodes < 5 {
        return Err(Error::InvalidParameter("minimax needs at least 5 string nodes".into()));
    }
    check_minimum(min_a, e, "first minimum")?;
    check_minimum(min_b, e, "second minimum")?;
    let (p, q) = (min_a.p(), min_a.q());
    let n = opts.nodes;

    let mut anchors = vec![min_a.values().to_vec()];
    if let Some(via) = &opts.via {
        if via.len() != q {
            return Err(Error::InvalidParameter(format!("waypoint must hold {q} positions")));
        }
        anchors.push(via.clone());
    }
    anchors.push(min_b.values().to_vec());
    let mut string = equal_arclength(&anchors, n)?;

    // Explicit Euler is stable for steps below 2 / (largest curvature).
    let curvature = string
        .iter()
        .map(|x| {
            let c = min_a.with_values(x.clone()).expect("valid node");
            let (vals, _) = symmetric_eigen(&hessian_periodic(&c, &e.h));
            vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let dt = 0.5 / curvature;

    let energy_of = |x: &[f64]| energy(&min_a.with_values(x.to_vec()).expect("valid node"), e);
    let mut force = vec![0.0; q];
    let mut iterations = 0;
    let mut climb = None;
    let mut climb_force = f64::INFINITY;
    while iterations < opts.max_iter {
        iterations += 1;
        let heights: Vec<f64> = string.iter().map(|x| energy_of(x)).collect();
        let c = (1..n - 1).max_by(|&i, &j| heights[i].total_cmp(&heights[j])).unwrap();
        let climbing = iterations > opts.warmup;
        let mut moved = string.clone();
        for i in 1..n - 1 {
            rhs_periodic_into(e, p, &string[i], &mut force);
            if climbing && i == c {
                let tangent: Vec<f64> = string[i + 1].iter().zip(&string[i - 1]).map(|(a, b)| a - b).collect();
                let norm = tangent.iter().map(|t| t * t).sum::<f64>().sqrt();
                if norm > 0.0 {
                    let dot: f64 = force.iter().zip(&tangent).map(|(f, t)| f * t).sum::<f64>() / norm;
                    for (f, t) in force.iter_mut().zip(&tangent) {
                        *f -= 2.0 * dot * t / norm;
                    }
                }
                climb_force = sup_norm(&force);
            }
            for (m, f) in moved[i].iter_mut().zip(&force) {
                *m += dt * f;
            }
        }
        string = if climbing {
            // Redistribute each side of the climbing node separately so it
            // stays put.
            let n_left = (c + 1).clamp(2, n - 2);
            let mut a = equal_arclength(&moved[..=c], n_left)?;
            let b = equal_arclength(&moved[c..], n - n_left + 1)?;
            a.extend(b.into_iter().skip(1));
            a
        } else {
            equal_arclength(&moved, n)?
        };
        if climbing {
            climb = Some(c);
            if climb_force < opts.switch_tol {
                break;
            }
        }
    }
    let c = match climb {
        Some(c) => c,
        None => {
            let heights: Vec<f64> = string.iter().map(|x| energy_of(x)).collect();
            (1..n - 1).max_by(|&i, &j| heights[i].total_cmp(&heights[j])).unwrap()
        }
    };
    if climb_force > 1e-3 {
        return Err(Error::NoSolution(format!(
            "string did not settle: climbing force {climb_force:.2e} after {iterations} iterations"
        )));
    }
    let start = min_a.with_values(string[c].clone())?;
    let newton = NewtonOptions { tol: opts.tol.min(1e-10), max_iter: 50, max_step: 0.05 };
    let eq = find_equilibrium_with(&start, e, &newton)?;
    if eq.config.distance(&start) > 1e-3 {
        return Err(Error::NoSolution("Newton left the neighbourhood of the climbing node".into()));
    }
    let mut r = vec![0.0; q];
    rhs_periodic_into(e, p, eq.config.values(), &mut r);
    let gradient_norm = sup_norm(&r);
    if gradient_norm >= opts.tol {
        return Err(Error::NoSolution(format!("saddle residual {gradient_norm:.2e} above tolerance")));
    }
    let height = energy(&eq.config, e);
    string[c] = eq.config.values().to_vec();
    Ok(MinimaxResult {
        barrier_from_a: height - energy(min_a, e),
        barrier_from_b: height - energy(min_b, e),
        height,
        morse_index: eq.spectrum.morse_index,
        gradient_norm,
        saddle: eq.config,
        string,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_builtin, BuiltinSpec};
    use std::f64::consts::PI;

    #[test]
    fn standard_single_site_barrier() {
        for k in [0.5, 1.0, 2.0] {
            let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k }).unwrap());
            let a = PeriodicConfiguration::new(0, 1, vec![0.5]).unwrap();
            let b = PeriodicConfiguration::new(0, 1, vec![1.5]).unwrap();
            let r = minimax(&a, &b, &e).unwrap();
            assert!((r.saddle.values()[0] - 1.0).abs() < 1e-10, "{:?}", r.saddle);
            assert!((r.barrier_from_a - k / (2.0 * PI * PI)).abs() < 1e-12);
            assert_eq!(r.morse_index, 1);
            assert!(r.gradient_norm < 1e-9);
        }
    }

    #[test]
    fn equal_minima_rejected() {
        let e = TiltedEnergy::untilted(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 }).unwrap());
        let a = PeriodicConfiguration::new(0, 1, vec![0.5]).unwrap();
        assert!(matches!(minimax(&a, &a, &e), Err(Error::InvalidParameter(_))));
        let not_min = PeriodicConfiguration::new(0, 1, vec![1.0]).unwrap();
        assert!(minimax(&a, &not_min, &e).is_err());
    }

    #[test]
    fn height_dominates_both_ends() {
        let e = TiltedEnergy::new(make_builtin(&BuiltinSpec::StandardFk { k: 1.0 }).unwrap(), 0.05).unwrap();
        let a = crate::flow::find_equilibrium(&PeriodicConfiguration::new(0, 1, vec![0.5]).unwrap(), &e).unwrap();
        let b = a.config.shifted(1.0);
        let r = minimax(&a.config, &b, &e).unwrap();
        assert!(r.barrier_from_a > 0.0 && r.barrier_from_b > 0.0);
        assert_eq!(r.morse_index, 1);
    }
}
